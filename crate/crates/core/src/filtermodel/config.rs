use serde::{Deserialize, Serialize};

use crate::datakit::AttributeKind;
use crate::error::{Error, Result};

/// Weights of the five loss terms: reconstruction, diversity, speaker,
/// adversarial and mutual information.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 1.0,
            beta: 0.1,
            gamma: 1.0,
            delta: 0.0,
            epsilon: 0.0,
        }
    }
}

/// The four rows of the ablation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossPreset {
    Vqvae,
    Mi,
    Adv,
    Full,
}

impl LossPreset {
    pub const ALL: [LossPreset; 4] = [LossPreset::Vqvae, LossPreset::Mi, LossPreset::Adv, LossPreset::Full];

    pub fn name(self) -> &'static str {
        match self {
            LossPreset::Vqvae => "vqvae",
            LossPreset::Mi => "mi",
            LossPreset::Adv => "adv",
            LossPreset::Full => "full",
        }
    }

    /// Published weights: sex uses δ=1000 (adversarial only), ε=100 (MI only),
    /// δ=ε=10 combined; age uses δ=1, ε=100, and δ=1, ε=10 combined.
    pub fn weights(self, kind: AttributeKind) -> LossWeights {
        let (delta, epsilon) = match (kind, self) {
            (_, LossPreset::Vqvae) => (0.0, 0.0),
            (AttributeKind::Discrete, LossPreset::Adv) => (1000.0, 0.0),
            (AttributeKind::Discrete, LossPreset::Mi) => (0.0, 100.0),
            (AttributeKind::Discrete, LossPreset::Full) => (10.0, 10.0),
            (AttributeKind::Continuous, LossPreset::Adv) => (1.0, 0.0),
            (AttributeKind::Continuous, LossPreset::Mi) => (0.0, 100.0),
            (AttributeKind::Continuous, LossPreset::Full) => (1.0, 10.0),
        };
        LossWeights {
            delta,
            epsilon,
            ..LossWeights::default()
        }
    }
}

impl std::str::FromStr for LossPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown loss preset {s:?}")))
    }
}

/// Architecture and loss hyperparameters of the filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub input_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub num_codebooks: usize,
    pub codewords_per_book: usize,
    pub codeword_dim: usize,
    pub quantizer_output_dim: usize,
    pub conditioning_dim: usize,
    pub dropout: f64,
    pub temperature: f64,
    pub leaky_slope: f64,
    pub weights: LossWeights,
    pub attribute: AttributeKind,
    pub num_speakers: usize,
    pub aam_margin: f64,
    pub aam_scale: f64,
    pub mi_k: usize,
    /// Tie-breaking noise added to `z_q` before the MI loss, relative to its RMS.
    pub mi_jitter: f64,
    pub grl_lambda: f64,
    pub adversary_hidden: usize,
    pub adversary_layers: usize,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            input_dim: 192,
            encoder_hidden: vec![512, 512, 128],
            decoder_hidden: vec![512, 512, 512],
            num_codebooks: 64,
            codewords_per_book: 128,
            codeword_dim: 4,
            quantizer_output_dim: 256,
            conditioning_dim: 4,
            dropout: 0.1,
            temperature: 1.0,
            leaky_slope: 0.01,
            weights: LossWeights::default(),
            attribute: AttributeKind::Discrete,
            num_speakers: 200,
            aam_margin: 0.2,
            aam_scale: 30.0,
            mi_k: 4,
            mi_jitter: 1e-6,
            grl_lambda: 1.0,
            adversary_hidden: 128,
            adversary_layers: 3,
            bn_eps: 1e-5,
            bn_momentum: 0.1,
        }
    }
}

impl FilterConfig {
    /// Latent size `h`: the last encoder layer.
    pub fn latent_dim(&self) -> usize {
        self.encoder_hidden.last().copied().unwrap_or(self.input_dim)
    }

    /// Concatenated codeword size `e = G·(e/G)`.
    pub fn codes_dim(&self) -> usize {
        self.num_codebooks * self.codeword_dim
    }

    pub fn attr_dim(&self) -> usize {
        self.attribute.logit_dim()
    }

    pub fn decoder_input_dim(&self) -> usize {
        self.quantizer_output_dim + self.conditioning_dim
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.input_dim,
            self.num_codebooks,
            self.codewords_per_book,
            self.codeword_dim,
            self.quantizer_output_dim,
            self.conditioning_dim,
            self.num_speakers,
            self.adversary_hidden,
        ];
        if dims.contains(&0) || self.encoder_hidden.contains(&0) || self.decoder_hidden.contains(&0) {
            return Err(Error::Config("all dimensions must be positive".into()));
        }
        if self.encoder_hidden.is_empty() {
            return Err(Error::Config("the encoder needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("Gumbel temperature must be positive".into()));
        }
        let w = &self.weights;
        if [w.alpha, w.beta, w.gamma, w.delta, w.epsilon].iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if !(self.mi_jitter >= 0.0 && self.mi_jitter.is_finite()) {
            return Err(Error::Config("mi_jitter must be finite and non-negative".into()));
        }
        if self.mi_k == 0 {
            return Err(Error::Config("mi_k must be positive".into()));
        }
        if !(self.aam_scale > 0.0) || !(0.0..1.0).contains(&self.bn_momentum) {
            return Err(Error::Config("aam_scale must be positive and bn_momentum in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Optimisation schedule for the filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub start_lr: f64,
    pub max_lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 128,
            start_lr: 8e-4,
            max_lr: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size < 2 {
            return Err(Error::Config("need at least one epoch and a batch size of 2".into()));
        }
        if !(self.start_lr > 0.0 && self.max_lr >= self.start_lr) {
            return Err(Error::Config("learning rates must satisfy 0 < start_lr <= max_lr".into()));
        }
        Ok(())
    }
}
