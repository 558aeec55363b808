//! Attribute classifiers: the external classifier that produces
//! conditioning logits, and the ignorant and informed attackers.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::datakit::{gather_rows, AttributeKind, AttributeValues};
use crate::diffcore::{adam_step, AdamState, Graph, OneCycleSchedule, ParamStore, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::filtermodel::{
    expect_end, read_header, read_param_blocks, write_header, write_param_blocks, ClassifierSchedule, MlpHead, MlpSpec,
    Mode,
};
use crate::filtermodel::{rng_stream, stream};

/// Magic bytes of an attribute-classifier checkpoint.
pub const CLASSIFIER_MAGIC: &[u8; 4] = b"ATCL";

/// Whether an attacker knows about the filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackerKind {
    /// Trained on original embeddings.
    Ignorant,
    /// Trained on embeddings filtered with the test-time conditioning strategy.
    Informed,
}

impl AttackerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ignorant => "ignorant",
            Self::Informed => "informed",
        }
    }
}

impl std::str::FromStr for AttackerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ignorant" => Ok(Self::Ignorant),
            "informed" => Ok(Self::Informed),
            _ => Err(Error::Config(format!("unknown attacker {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackerConfig {
    pub attribute: AttributeKind,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub schedule: ClassifierSchedule,
    pub num_repeats: usize,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        AttackerConfig {
            attribute: AttributeKind::Discrete,
            hidden: vec![128, 128],
            dropout: 0.3,
            leaky_slope: 0.01,
            schedule: ClassifierSchedule::default(),
            num_repeats: 25,
        }
    }
}

impl AttackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_repeats == 0 {
            return Err(Error::Config("num_repeats must be at least 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        self.schedule.validate()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ClassifierHeader {
    input_dim: usize,
    config: AttackerConfig,
}

/// Feed-forward attribute classifier (two logits) or regressor (one output).
#[derive(Clone, Debug)]
pub struct AttributeClassifier {
    pub config: AttackerConfig,
    pub input_dim: usize,
    pub params: ParamStore<f64>,
    head: MlpHead,
}

impl AttributeClassifier {
    pub fn new(input_dim: usize, config: AttackerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut rng = rng_stream(seed, stream::ATTACKER_INIT);
        let head = MlpHead::new(
            &mut params,
            &MlpSpec {
                name: "classifier",
                d_in: input_dim,
                hidden: &config.hidden,
                d_out: config.attribute.logit_dim(),
                input_bn: false,
                hidden_bn: false,
                dropout: config.dropout,
                slope: config.leaky_slope,
            },
            &mut rng,
        );
        Ok(AttributeClassifier { config, input_dim, params, head })
    }

    /// Evaluation-mode outputs, `[N, 2]` logits or `[N, 1]` values.
    pub fn outputs(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        if x.shape().len() != 2 || x.cols() != self.input_dim {
            return Err(shape_err("classifier", format!("input {:?}, expected [N, {}]", x.shape(), self.input_dim)));
        }
        let mut g = Graph::new();
        let p = self.params.bind_constants(&mut g);
        let xv = g.constant(x.clone());
        let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
        let out = self.head.forward(&mut g, &p, &self.params, xv, Mode::Eval, &mut no_rng, &mut Vec::new())?;
        Ok(g.value(out).clone())
    }

    /// Arg-max class per row; lower index wins ties.
    pub fn predict_classes(&self, x: &Tensor<f64>) -> Result<Vec<usize>> {
        self.require(AttributeKind::Discrete)?;
        let out = self.outputs(x)?;
        Ok((0..out.rows()).map(|r| usize::from(out.row(r)[1] > out.row(r)[0])).collect())
    }

    /// Positive-class log-odds `l_1 − l_0` per row.
    pub fn log_odds(&self, x: &Tensor<f64>) -> Result<Vec<f64>> {
        self.require(AttributeKind::Discrete)?;
        let out = self.outputs(x)?;
        Ok((0..out.rows()).map(|r| out.row(r)[1] - out.row(r)[0]).collect())
    }

    pub fn predict_values(&self, x: &Tensor<f64>) -> Result<Vec<f64>> {
        self.require(AttributeKind::Continuous)?;
        Ok(self.outputs(x)?.data().to_vec())
    }

    fn require(&self, kind: AttributeKind) -> Result<()> {
        if self.config.attribute != kind {
            return Err(Error::Config(format!("classifier predicts a {:?} attribute", self.config.attribute)));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let header = ClassifierHeader { input_dim: self.input_dim, config: self.config.clone() };
        write_header(w, CLASSIFIER_MAGIC, &header)?;
        write_param_blocks(&self.params, w)
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let header: ClassifierHeader = read_header(r, CLASSIFIER_MAGIC)?;
        let mut model = Self::new(header.input_dim, header.config, 0)?;
        read_param_blocks(&mut model.params, r)?;
        expect_end(r)?;
        Ok(model)
    }
}

/// Trains a classifier (cross-entropy) or regressor (mean squared error)
/// with Adam and a one-cycle schedule over shuffled batches.
pub fn train_attacker(config: &AttackerConfig, x: &Tensor<f64>, labels: &AttributeValues, seed: u64) -> Result<AttributeClassifier> {
    if labels.len() != x.rows() || x.rows() == 0 {
        return Err(shape_err("train_attacker", format!("{} embeddings and {} labels", x.rows(), labels.len())));
    }
    if labels.kind() != config.attribute {
        return Err(Error::Data("labels do not match the attacker's attribute kind".into()));
    }
    let mut model = AttributeClassifier::new(x.cols(), config.clone(), seed)?;
    let sched_cfg = &config.schedule;
    let mut batch_rng = rng_stream(seed, stream::ATTACKER_BATCHES);
    let mut dropout_rng = rng_stream(seed, stream::ATTACKER_DROPOUT);
    let mut adam = AdamState::new(&model.params);
    let steps = x.rows().div_ceil(sched_cfg.batch_size);
    let mut sched = OneCycleSchedule::new(sched_cfg.start_lr, sched_cfg.max_lr, sched_cfg.epochs * steps);
    for _ in 0..sched_cfg.epochs {
        for idx in sched_cfg.epoch_batches(x.rows(), &mut batch_rng) {
            let mut g = Graph::new();
            let p = model.params.bind(&mut g);
            let xv = g.constant(gather_rows(x, &idx));
            let out = model.head.forward(&mut g, &p, &model.params, xv, Mode::Train, &mut dropout_rng, &mut Vec::new())?;
            let loss = crate::filtermodel::attribute_loss(&mut g, out, &labels.select(&idx))?;
            if !g.value(loss).item().is_finite() {
                return Err(Error::Numerical("non-finite attacker loss".into()));
            }
            let mut grads = g.backward(loss)?;
            let grads = p.gradients(&mut grads);
            adam_step(&mut model.params, &grads, &mut adam, sched.next_lr())?;
        }
    }
    Ok(model)
}
