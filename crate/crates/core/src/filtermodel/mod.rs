//! The attribute filter: encoder, product quantizer with Gumbel-softmax
//! selection, attribute-conditioned decoder, frozen angular-margin speaker
//! head and gradient-reversed adversary, with the composite training loss.

mod checkpoint;
mod config;
mod heads;
mod layers;
mod losses;
mod model;
mod train;

pub use checkpoint::{
    expect_end, load_checkpoint, read_checkpoint, read_header, read_param_blocks, save_checkpoint, write_atomic,
    write_checkpoint, write_header, write_param_blocks, FORMAT_VERSION, MAGIC,
};
pub use config::{FilterConfig, LossPreset, LossWeights, TrainConfig};
pub use heads::{class_centroids, pretrain_speaker_head, ClassifierSchedule};
pub use layers::{apply_running_stats, fan_in_uniform, BatchNorm, Linear, MlpHead, MlpSpec, Mode, PendingStats};
pub use losses::{
    attribute_loss, loss_aam, loss_adversarial, loss_diversity, loss_mi, loss_reconstruction, loss_total, LossComponents,
};
pub use model::{normalize_rows, FilterModel, ForwardPass};
pub use train::{train, EpochLosses, TrainData, TrainReport};

pub(crate) use model::{rng_stream, stream};
