//! Setup-phase training of the frozen speaker head.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{normalize_rows, rng_stream, stream};
use crate::datakit::gather_rows;
use crate::diffcore::{adam_step, AdamState, Graph, OneCycleSchedule, ParamKind, ParamStore, Tensor};
use crate::error::{shape_err, Error, Result};

/// Schedule shared by the speaker head and the attribute classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub start_lr: f64,
    pub max_lr: f64,
}

impl Default for ClassifierSchedule {
    fn default() -> Self {
        ClassifierSchedule {
            epochs: 20,
            batch_size: 64,
            start_lr: 1e-5,
            max_lr: 5e-5,
        }
    }
}

impl ClassifierSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("classifier schedule needs epochs and batch size above 0".into()));
        }
        if !(self.start_lr > 0.0 && self.max_lr >= self.start_lr) {
            return Err(Error::Config("classifier learning rates must satisfy 0 < start_lr <= max_lr".into()));
        }
        Ok(())
    }

    /// Shuffled index batches of one epoch; the last batch may be short.
    pub(crate) fn epoch_batches<R: rand::Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        order.chunks(self.batch_size).map(<[usize]>::to_vec).collect()
    }
}

/// Unit-normalised class centroids, `[classes, d]`. Classes without rows
/// keep a zero row.
pub fn class_centroids(x: &Tensor<f64>, labels: &[usize], classes: usize) -> Result<Tensor<f64>> {
    if labels.len() != x.rows() {
        return Err(shape_err("class_centroids", format!("{} labels for {} rows", labels.len(), x.rows())));
    }
    let d = x.cols();
    let mut sums = Tensor::zeros(&[classes, d]);
    for (r, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::Data(format!("class {l} outside {classes} classes")));
        }
        let row = x.row(r).to_vec();
        sums.row_mut(l).iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    Ok(normalize_rows(&sums))
}

/// Trains `[classes, d]` angular-margin head rows on original embeddings and
/// returns them unit-normalised.
///
/// Rows start from the normalised speaker centroids and are refined with
/// the margin loss under `schedule`.
pub fn pretrain_speaker_head(
    x: &Tensor<f64>,
    speakers: &[usize],
    classes: usize,
    margin: f64,
    scale: f64,
    schedule: &ClassifierSchedule,
    seed: u64,
) -> Result<Tensor<f64>> {
    schedule.validate()?;
    let mut store = ParamStore::new();
    let w = store.add("speaker_head.w", class_centroids(x, speakers, classes)?, ParamKind::Trainable);
    let mut rng = rng_stream(seed, stream::SPEAKER_INIT);
    let mut adam = AdamState::new(&store);
    let steps_per_epoch = x.rows().div_ceil(schedule.batch_size);
    let mut sched = OneCycleSchedule::new(schedule.start_lr, schedule.max_lr, schedule.epochs * steps_per_epoch);
    for _ in 0..schedule.epochs {
        for idx in schedule.epoch_batches(x.rows(), &mut rng) {
            let mut g = Graph::new();
            let p = store.bind(&mut g);
            let f = g.constant(gather_rows(x, &idx));
            let labels: Vec<usize> = idx.iter().map(|&i| speakers[i]).collect();
            let rows = g.l2_normalize(p.var(w));
            let rows_t = g.transpose(rows)?;
            let f = g.l2_normalize(f);
            let cos = g.matmul(f, rows_t)?;
            let logits = g.aam_logits(cos, &labels, margin, scale)?;
            let loss = g.cross_entropy(logits, &labels)?;
            if !g.value(loss).item().is_finite() {
                return Err(Error::Numerical("non-finite speaker-head loss".into()));
            }
            let mut grads = g.backward(loss)?;
            let grads = p.gradients(&mut grads);
            adam_step(&mut store, &grads, &mut adam, sched.next_lr())?;
        }
    }
    Ok(normalize_rows(store.get(w)))
}
