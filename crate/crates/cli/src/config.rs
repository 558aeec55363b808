//! Experiment configuration: one TOML file, overridable from the command line.

use std::collections::BTreeMap;
use std::path::Path;

use attrfilter::attackkit::{AttackerConfig, AttackerKind, DcfParams};
use attrfilter::datakit::{AttributeKind, ConditioningStrategy, PartitionRatios, SynthConfig};
use attrfilter::filtermodel::{ClassifierSchedule, FilterConfig, LossPreset, LossWeights, TrainConfig};
use attrfilter::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which attacker rows to produce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AttackerSelection {
    Ignorant,
    Informed,
    #[default]
    Both,
}

impl AttackerSelection {
    pub fn kinds(self) -> Vec<AttackerKind> {
        match self {
            Self::Ignorant => vec![AttackerKind::Ignorant],
            Self::Informed => vec![AttackerKind::Informed],
            Self::Both => vec![AttackerKind::Ignorant, AttackerKind::Informed],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionConfig {
    /// Speaker counts, or fractions when the three sum to at most 1.
    pub train_vq: f64,
    pub train_att: f64,
    pub test_att: f64,
    /// Target and non-target trials each.
    pub trials_per_class: usize,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        let r = PartitionRatios::default();
        PartitionConfig {
            train_vq: r.train_vq,
            train_att: r.train_att,
            test_att: r.test_att,
            trials_per_class: 1000,
            seed: 0,
        }
    }
}

impl PartitionConfig {
    pub fn ratios(&self) -> PartitionRatios {
        PartitionRatios {
            train_vq: self.train_vq,
            train_att: self.train_att,
            test_att: self.test_att,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seed of filter training, attackers and random conditioning.
    pub seed: u64,
    /// Training seeds that make up the ablation grid.
    pub seeds: Vec<u64>,
    pub attribute: AttributeKind,
    pub losses: LossPreset,
    pub conditioning: ConditioningStrategy,
    pub attacker: AttackerSelection,
    pub synth: SynthConfig,
    pub partitions: PartitionConfig,
    /// Model dimensions. Its weights, attribute and speaker count are filled
    /// in from `losses`, `attribute` and the data.
    pub filter: FilterConfig,
    /// Loss weights per preset name, replacing the published values.
    pub weights: BTreeMap<String, LossWeights>,
    pub train: TrainConfig,
    pub attack: AttackerConfig,
    pub speaker_head: ClassifierSchedule,
    pub dcf: DcfParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            seeds: vec![1, 2, 3],
            attribute: AttributeKind::Discrete,
            losses: LossPreset::Full,
            conditioning: ConditioningStrategy::Mean,
            attacker: AttackerSelection::Both,
            synth: SynthConfig {
                num_speakers: 350,
                ..SynthConfig::default()
            },
            partitions: PartitionConfig::default(),
            filter: FilterConfig::default(),
            weights: BTreeMap::new(),
            train: TrainConfig::default(),
            attack: AttackerConfig::default(),
            speaker_head: ClassifierSchedule::default(),
            dcf: DcfParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Io(e)
            } else {
                Error::Config(format!("{}: {e}", path.display()))
            }
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn weights_for(&self, preset: LossPreset) -> LossWeights {
        self.weights.get(preset.name()).copied().unwrap_or_else(|| preset.weights(self.attribute))
    }

    /// Filter configuration for `preset` and `num_speakers` speaker-head classes.
    pub fn filter_config(&self, preset: LossPreset, num_speakers: usize) -> FilterConfig {
        FilterConfig {
            weights: self.weights_for(preset),
            attribute: self.attribute,
            num_speakers,
            ..self.filter.clone()
        }
    }

    pub fn attack_config(&self) -> AttackerConfig {
        AttackerConfig {
            attribute: self.attribute,
            ..self.attack.clone()
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            attribute: self.attribute,
            ..self.synth.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.synth_config().validate()?;
        self.train.validate()?;
        self.attack_config().validate()?;
        self.speaker_head.validate()?;
        for preset in LossPreset::ALL {
            let w = self.weights_for(preset);
            if [w.alpha, w.beta, w.gamma, w.delta, w.epsilon].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("{} weights must be finite and non-negative", preset.name())));
            }
        }
        self.filter_config(self.losses, 1).validate()?;
        if let Some(k) = self.weights.keys().find(|k| !LossPreset::ALL.iter().any(|p| p.name() == k.as_str())) {
            return Err(Error::Config(format!("unknown loss preset '{k}' in weights")));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must list at least one training seed".into()));
        }
        Ok(())
    }
}
