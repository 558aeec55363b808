use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// Per-dimension statistics of external-classifier logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitPrior {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditioningStrategy {
    /// The external classifier's own logits for each input.
    True,
    Mean,
    Gaussian,
}

impl std::str::FromStr for ConditioningStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(Self::True),
            "mean" => Ok(Self::Mean),
            "gaussian" => Ok(Self::Gaussian),
            _ => Err(Error::Config(format!("unknown conditioning strategy {s:?}"))),
        }
    }
}

impl std::fmt::Display for ConditioningStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::True => "true",
            Self::Mean => "mean",
            Self::Gaussian => "gaussian",
        })
    }
}

/// Mean and population standard deviation of each logit column.
pub fn fit_logit_prior(logits: &Tensor<f64>) -> Result<LogitPrior> {
    if logits.shape().len() != 2 || logits.rows() == 0 {
        return Err(Error::Data(format!("logit prior needs a non-empty [N, C] matrix, got {:?}", logits.shape())));
    }
    let (n, c) = (logits.rows(), logits.cols());
    let mut mean = vec![0.0; c];
    for row in logits.iter_rows() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; c];
    for row in logits.iter_rows() {
        var.iter_mut().zip(row).zip(&mean).for_each(|((s, v), m)| *s += (v - m).powi(2));
    }
    let std = var.iter().map(|s| (s / n as f64).sqrt()).collect();
    Ok(LogitPrior { mean, std })
}

/// `n` conditioning rows from the prior: the mean replicated, or i.i.d.
/// `N(mean, std²)` draws per dimension.
pub fn sample_conditioning(prior: &LogitPrior, strategy: ConditioningStrategy, seed: u64, n: usize) -> Result<Tensor<f64>> {
    let c = prior.mean.len();
    let mut data = Vec::with_capacity(n * c);
    match strategy {
        ConditioningStrategy::Mean => {
            for _ in 0..n {
                data.extend_from_slice(&prior.mean);
            }
        }
        ConditioningStrategy::Gaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n {
                for (m, s) in prior.mean.iter().zip(&prior.std) {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    data.push(m + s * e);
                }
            }
        }
        ConditioningStrategy::True => {
            return Err(Error::Config("true-logit conditioning needs the external classifier, not a prior".into()))
        }
    }
    Tensor::new(&[n, c], data)
}
