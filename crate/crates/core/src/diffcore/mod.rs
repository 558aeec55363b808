//! Dense tensors, a reverse-mode tape, straight-through estimators, Adam and
//! a one-cycle learning-rate schedule.

mod graph;
mod ops;
mod tensor;

pub mod gradcheck;
pub mod optim;
pub mod params;
pub mod schedule;

pub use graph::{Gradients, Graph, Var};
pub use ops::{sample_gumbel, softmax_rows, GumbelSelection, KthSelection};
pub use optim::{adam_step, AdamState};
pub use params::{Bound, ParamId, ParamKind, ParamStore};
pub use schedule::OneCycleSchedule;
pub use tensor::{l2_distance, Tensor};
