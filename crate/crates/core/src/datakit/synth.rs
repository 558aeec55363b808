//! Synthetic embeddings with planted speaker and attribute structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::records::{EmbeddingRecord, Sex};
use super::AttributeKind;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub num_speakers: usize,
    pub utterances_per_speaker: usize,
    pub dim: usize,
    pub sigma_spk: f64,
    pub sigma_utt: f64,
    /// Length of the planted attribute offset along the hidden direction.
    pub attr_strength: f64,
    pub attribute: AttributeKind,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_speakers: 200,
            utterances_per_speaker: 20,
            dim: 192,
            sigma_spk: 1.0,
            sigma_utt: 0.3,
            attr_strength: 0.8,
            attribute: AttributeKind::Discrete,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_speakers == 0 || self.utterances_per_speaker == 0 || self.dim < 2 {
            return Err(Error::Config("synthetic dataset needs speakers, utterances and dim >= 2".into()));
        }
        if !(self.sigma_spk > 0.0 && self.sigma_utt > 0.0) {
            return Err(Error::Config("sigma_spk and sigma_utt must be positive".into()));
        }
        if !(self.attr_strength >= 0.0) {
            return Err(Error::Config("attr_strength must be non-negative".into()));
        }
        Ok(())
    }
}

/// Everything needed to check planted-signal recovery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub config: SynthConfig,
    /// Unit attribute direction `u`.
    pub direction: Vec<f64>,
    pub speaker_ids: Vec<String>,
    /// Speaker means, orthogonal to `u`.
    pub speaker_means: Vec<Vec<f64>>,
}

pub fn speaker_name(i: usize) -> String {
    format!("spk{i:04}")
}

/// Utterance `x = μ_s + a_s·u + ε`, `ε ~ N(0, σ_utt² I)`.
///
/// Speaker means are drawn from `N(0, σ_spk² I)` and projected orthogonal to
/// `u`, so the attribute is only carried by `a_s`. Discrete speakers alternate
/// sex with `a_s = ±c`; continuous speakers draw an age from `U(20, 80)` with
/// `a_s = ((age − 50) / 50)·c`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Vec<EmbeddingRecord>, GroundTruth)> {
    config.validate()?;
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut u: Vec<f64> = (0..d).map(|_| std_normal.sample(&mut rng)).collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.iter_mut().for_each(|v| *v /= norm);

    let mut records = Vec::with_capacity(config.num_speakers * config.utterances_per_speaker);
    let mut means = Vec::with_capacity(config.num_speakers);
    let mut ids = Vec::with_capacity(config.num_speakers);
    for s in 0..config.num_speakers {
        let mut mean: Vec<f64> = (0..d).map(|_| config.sigma_spk * std_normal.sample(&mut rng)).collect();
        let proj: f64 = mean.iter().zip(&u).map(|(a, b)| a * b).sum();
        mean.iter_mut().zip(&u).for_each(|(m, ui)| *m -= proj * ui);

        let (sex, age, offset) = match config.attribute {
            AttributeKind::Discrete => {
                let sex = if s % 2 == 0 { Sex::Male } else { Sex::Female };
                let sign = if sex == Sex::Male { -1.0 } else { 1.0 };
                (Some(sex), None, sign * config.attr_strength)
            }
            AttributeKind::Continuous => {
                let age = rng.gen_range(20.0..80.0);
                (None, Some(age), (age - 50.0) / 50.0 * config.attr_strength)
            }
        };
        let name = speaker_name(s);
        for k in 0..config.utterances_per_speaker {
            let vector = (0..d)
                .map(|j| mean[j] + offset * u[j] + config.sigma_utt * std_normal.sample(&mut rng))
                .collect();
            records.push(EmbeddingRecord {
                speaker_id: name.clone(),
                utterance_id: format!("{name}-u{k:03}"),
                vector,
                sex,
                age,
            });
        }
        means.push(mean);
        ids.push(name);
    }
    let truth = GroundTruth {
        seed: config.seed,
        config: config.clone(),
        direction: u,
        speaker_ids: ids,
        speaker_means: means,
    };
    Ok((records, truth))
}
