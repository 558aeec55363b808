use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::layers::{apply_running_stats, Mode};
use super::losses::{loss_adversarial, loss_aam, loss_diversity, loss_mi, loss_reconstruction, loss_total, LossComponents};
use super::model::{rng_stream, stream, FilterModel};
use crate::datakit::{balanced_batches, gather_rows, AttributeValues};
use crate::diffcore::{adam_step, AdamState, Graph, OneCycleSchedule, Tensor, Var};
use crate::error::{shape_err, Error, Result};

/// Inputs of filter training. Continuous attributes are expected standardised.
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub x: &'a Tensor<f64>,
    /// Speaker-head class per row.
    pub speakers: &'a [usize],
    pub attribute: &'a AttributeValues,
    /// External-classifier logits per row, `[N, c_attr]`.
    pub conditioning: &'a Tensor<f64>,
}

impl TrainData<'_> {
    fn validate(&self, model: &FilterModel) -> Result<()> {
        let n = self.x.rows();
        if self.speakers.len() != n || self.attribute.len() != n || self.conditioning.rows() != n {
            return Err(shape_err(
                "train",
                format!(
                    "{n} embeddings, {} speakers, {} labels, {} conditioning rows",
                    self.speakers.len(),
                    self.attribute.len(),
                    self.conditioning.rows()
                ),
            ));
        }
        if self.attribute.kind() != model.config.attribute {
            return Err(Error::Data("attribute labels do not match the configured attribute kind".into()));
        }
        if self.conditioning.cols() != model.config.attr_dim() || self.x.cols() != model.config.input_dim {
            return Err(shape_err("train", "conditioning or embedding width does not match the model"));
        }
        Ok(())
    }
}

/// Batch means of every active loss term for one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    pub epoch: usize,
    pub rec: Option<f64>,
    pub div: Option<f64>,
    pub aam: Option<f64>,
    pub adv: Option<f64>,
    pub mi: Option<f64>,
    pub total: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLosses>,
}

impl TrainReport {
    /// CSV with one row per epoch; inactive terms are left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,rec,div,aam,adv,mi,total,lr\n");
        let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{},{},{:e},{:e}\n",
                e.epoch,
                f(e.rec),
                f(e.div),
                f(e.aam),
                f(e.adv),
                f(e.mi),
                e.total,
                e.lr
            ));
        }
        s
    }
}

#[derive(Default)]
struct Accum {
    sums: [f64; 6],
    counts: [usize; 6],
}

impl Accum {
    fn add(&mut self, i: usize, v: f64) {
        self.sums[i] += v;
        self.counts[i] += 1;
    }

    fn mean(&self, i: usize) -> Option<f64> {
        (self.counts[i] > 0).then(|| self.sums[i] / self.counts[i] as f64)
    }
}

/// Adam with a one-cycle schedule over attribute-balanced batches.
///
/// Terms whose weight is zero are never built, so a run with `δ = ε = 0`
/// follows exactly the same arithmetic as a model without those branches.
pub fn train(model: &mut FilterModel, data: TrainData<'_>, cfg: &TrainConfig, seed: u64) -> Result<TrainReport> {
    cfg.validate()?;
    data.validate(model)?;
    let w = model.config.weights;
    let mut batch_seeds = rng_stream(seed, stream::BATCHES);
    let mut dropout_rng = rng_stream(seed, stream::DROPOUT);
    let mut gumbel_rng = rng_stream(seed, stream::GUMBEL);
    let mut jitter_rng = rng_stream(seed, stream::MI_JITTER);
    let mut adam = AdamState::new(&model.params);

    let mut schedule: Option<OneCycleSchedule> = None;
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        let batches = balanced_batches(data.attribute, cfg.batch_size, batch_seeds.next_u64())?;
        if batches.is_empty() {
            return Err(Error::Data(format!("no complete batch of {} fits the training data", cfg.batch_size)));
        }
        let sched = schedule.get_or_insert_with(|| OneCycleSchedule::new(cfg.start_lr, cfg.max_lr, cfg.epochs * batches.len()));
        let mut acc = Accum::default();
        let mut lr = 0.0;
        for idx in &batches {
            let mut g = Graph::new();
            let p = model.params.bind(&mut g);
            let x = g.constant(gather_rows(data.x, idx));
            let logits = g.constant(gather_rows(data.conditioning, idx));
            let pass = model.forward(&mut g, &p, x, logits, Mode::Train, &mut dropout_rng, &mut gumbel_rng)?;
            let target = data.attribute.select(idx);

            let mut pending = Vec::new();
            let mut c = LossComponents::default();
            if w.alpha > 0.0 {
                c.rec = Some(loss_reconstruction(&mut g, x, pass.x_hat)?);
            }
            if w.beta > 0.0 {
                let soft = pass.soft_probs.expect("training pass keeps probabilities");
                c.div = Some(loss_diversity(&mut g, soft)?);
            }
            if w.gamma > 0.0 {
                let spk: Vec<usize> = idx.iter().map(|&i| data.speakers[i]).collect();
                let cfgm = &model.config;
                c.aam = Some(loss_aam(&mut g, pass.x_hat, &spk, model.speaker_head(), cfgm.aam_margin, cfgm.aam_scale)?);
            }
            if w.delta > 0.0 {
                c.adv = loss_adversarial(&mut g, &p, model, pass.z_q, &target, Mode::Train, &mut dropout_rng, &mut pending)?;
            }
            if w.epsilon > 0.0 {
                let cfgm = &model.config;
                c.mi = Some(loss_mi(&mut g, pass.z_q, &target, cfgm.mi_k, cfgm.mi_jitter, &mut jitter_rng)?);
            }
            let total = loss_total(&mut g, &c, &w)?;
            let total_v = g.value(total).item();
            if !total_v.is_finite() {
                return Err(Error::Numerical(format!("non-finite training loss at epoch {epoch}")));
            }
            let value = |v: Option<Var>| v.map(|v| g.value(v).item());
            for (i, v) in [value(c.rec), value(c.div), value(c.aam), value(c.adv), value(c.mi), Some(total_v)]
                .into_iter()
                .enumerate()
            {
                if let Some(v) = v {
                    acc.add(i, v);
                }
            }

            let mut grads = g.backward(total)?;
            let grads = p.gradients(&mut grads);
            lr = sched.next_lr();
            adam_step(&mut model.params, &grads, &mut adam, lr)?;
            apply_running_stats(&mut model.params, &pending, model.config.bn_momentum);
        }
        if !model.params.is_finite() {
            return Err(Error::Numerical(format!("non-finite parameters after epoch {epoch}")));
        }
        let e = EpochLosses {
            epoch,
            rec: acc.mean(0),
            div: acc.mean(1),
            aam: acc.mean(2),
            adv: acc.mean(3),
            mi: acc.mean(4),
            total: acc.mean(5).unwrap_or(f64::NAN),
            lr,
        };
        log::info!("epoch {epoch}: total {:.5}", e.total);
        report.epochs.push(e);
    }
    Ok(report)
}
