//! Cosine scoring of verification trials.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::metrics::{eer, min_dcf, DcfParams, ScoreSet};
use crate::datakit::{gather_rows, sample_conditioning, ConditioningStrategy, LogitPrior, TrialPair};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::filtermodel::FilterModel;

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn index_of<'a>(utterance_ids: &'a [String]) -> HashMap<&'a str, usize> {
    utterance_ids.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect()
}

fn lookup(index: &HashMap<&str, usize>, utt: &str) -> Result<usize> {
    index.get(utt).copied().ok_or_else(|| Error::Data(format!("trial utterance {utt} has no embedding")))
}

/// Cosine score of each trial; rows of `x` are named by `utterance_ids`.
pub fn asv_trials(x: &Tensor<f64>, utterance_ids: &[String], trials: &[TrialPair]) -> Result<ScoreSet> {
    if utterance_ids.len() != x.rows() {
        return Err(Error::Data(format!("{} ids for {} embeddings", utterance_ids.len(), x.rows())));
    }
    let index = index_of(utterance_ids);
    let mut scores = Vec::with_capacity(trials.len());
    for t in trials {
        let (a, b) = (lookup(&index, &t.enroll)?, lookup(&index, &t.test)?);
        scores.push(cosine(x.row(a), x.row(b)));
    }
    ScoreSet::new(scores, trials.iter().map(|t| t.target).collect())
}

/// Trials scored after filtering with random conditioning drawn per trial:
/// both sides of a target trial share one draw, the two sides of a
/// non-target trial get independent draws.
pub fn asv_manipulated(
    model: &FilterModel,
    x: &Tensor<f64>,
    utterance_ids: &[String],
    trials: &[TrialPair],
    prior: &LogitPrior,
    seed: u64,
) -> Result<ScoreSet> {
    if utterance_ids.len() != x.rows() {
        return Err(Error::Data(format!("{} ids for {} embeddings", utterance_ids.len(), x.rows())));
    }
    let index = index_of(utterance_ids);
    let mut enroll = Vec::with_capacity(trials.len());
    let mut test = Vec::with_capacity(trials.len());
    for t in trials {
        enroll.push(lookup(&index, &t.enroll)?);
        test.push(lookup(&index, &t.test)?);
    }
    let draws = sample_conditioning(prior, ConditioningStrategy::Gaussian, seed, 2 * trials.len())?;
    let c = draws.cols();
    let mut enroll_logits = Vec::with_capacity(trials.len() * c);
    let mut test_logits = Vec::with_capacity(trials.len() * c);
    for (i, t) in trials.iter().enumerate() {
        enroll_logits.extend_from_slice(draws.row(2 * i));
        test_logits.extend_from_slice(draws.row(if t.target { 2 * i } else { 2 * i + 1 }));
    }
    let n = trials.len();
    let xe = model.transform(&gather_rows(x, &enroll), &Tensor::new(&[n, c], enroll_logits)?)?;
    let xt = model.transform(&gather_rows(x, &test), &Tensor::new(&[n, c], test_logits)?)?;
    let scores = (0..n).map(|i| cosine(xe.row(i), xt.row(i))).collect();
    ScoreSet::new(scores, trials.iter().map(|t| t.target).collect())
}

/// Verification summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsvReport {
    pub schema_version: u32,
    /// Percent.
    pub eer: f64,
    pub min_dcf: f64,
    pub dcf: DcfParams,
    pub trials: usize,
    pub target_trials: usize,
}

impl AsvReport {
    pub fn from_scores(scores: &ScoreSet, dcf: DcfParams) -> Result<Self> {
        Ok(AsvReport {
            schema_version: 1,
            eer: eer(scores)?,
            min_dcf: min_dcf(scores, dcf)?,
            dcf,
            trials: scores.len(),
            target_trials: scores.counts().0,
        })
    }
}
