//! Repeated attacker training and evaluation with mean ± std aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::attacker::{train_attacker, AttackerConfig, AttackerKind, AttributeClassifier};
use super::metrics::{auprc, ccc, pcc, uar, ScoreSet};
use super::zebra::zebra;
use crate::datakit::{AttributeKind, AttributeValues, ConditioningStrategy};
use crate::diffcore::Tensor;
use crate::error::{shape_err, Error, Result};
use crate::filtermodel::FilterModel;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Mean and sample standard deviation over repeats, with the raw values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MetricSummary { mean, std, values }
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerResult {
    pub attacker: AttackerKind,
    pub metrics: BTreeMap<String, MetricSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub schema_version: u32,
    pub attribute: AttributeKind,
    /// `None` when the embeddings were not filtered.
    pub conditioning: Option<ConditioningStrategy>,
    pub repeats: usize,
    pub results: Vec<AttackerResult>,
}

impl PrivacyReport {
    pub fn metric(&self, attacker: AttackerKind, name: &str) -> Option<&MetricSummary> {
        self.results.iter().find(|r| r.attacker == attacker)?.metrics.get(name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Metrics of one trained attacker on one test set.
///
/// Discrete: UAR and AUPRC in percent, ZEBRA `d_ece` and `llr_max` in bits,
/// all computed from the positive-class log-odds. Continuous: CCC and PCC.
pub fn evaluate_attacker(model: &AttributeClassifier, x: &Tensor<f64>, labels: &AttributeValues) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    match labels {
        AttributeValues::Discrete(l) => {
            let odds = model.log_odds(x)?;
            let pred: Vec<usize> = odds.iter().map(|&o| usize::from(o > 0.0)).collect();
            out.insert("uar".to_string(), uar(&pred, l)?);
            let scores = ScoreSet::new(odds, l.iter().map(|&c| c == 1).collect())?;
            out.insert("auprc".to_string(), auprc(&scores)?);
            let z = zebra(&scores)?;
            out.insert("d_ece".to_string(), z.d_ece);
            out.insert("llr_max".to_string(), z.llr_max);
        }
        AttributeValues::Continuous(t) => {
            let pred = model.predict_values(x)?;
            out.insert("ccc".to_string(), ccc(&pred, t)?);
            out.insert("pcc".to_string(), pcc(&pred, t)?);
        }
    }
    Ok(out)
}

/// Original embeddings, labels and conditioning for attacker training and testing.
#[derive(Clone, Copy, Debug)]
pub struct SuiteData<'a> {
    pub train_x: &'a Tensor<f64>,
    pub train_labels: &'a AttributeValues,
    pub train_conditioning: &'a Tensor<f64>,
    /// Labels for informed attackers when they differ from `train_labels`,
    /// as with fed fake attributes.
    pub informed_train_labels: Option<&'a AttributeValues>,
    pub test_x: &'a Tensor<f64>,
    /// Labels the predictions are scored against.
    pub test_labels: &'a AttributeValues,
    pub test_conditioning: &'a Tensor<f64>,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub config: AttackerConfig,
    pub attackers: Vec<AttackerKind>,
    pub conditioning: Option<ConditioningStrategy>,
    pub seed: u64,
}

/// Seed of repeat `r`.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(r as u64)
}

/// Trains `num_repeats` attackers of each requested kind and scores them on
/// the (filtered, when `model` is given) test set.
///
/// Ignorant attackers learn from the original training embeddings, informed
/// ones from training embeddings filtered with the training conditioning.
/// Without a filter both kinds see original embeddings.
pub fn run_attack_suite(model: Option<&FilterModel>, data: &SuiteData<'_>, opts: &SuiteOptions) -> Result<PrivacyReport> {
    opts.config.validate()?;
    let informed_len = data.informed_train_labels.map_or(data.train_x.rows(), AttributeValues::len);
    if data.train_x.rows() != data.train_labels.len()
        || data.test_x.rows() != data.test_labels.len()
        || informed_len != data.train_x.rows()
    {
        return Err(shape_err("run_attack_suite", "embedding and label counts differ"));
    }
    if opts.attackers.is_empty() {
        return Err(Error::Config("no attacker kind requested".into()));
    }
    let filtered_train = model.map(|m| m.transform(data.train_x, data.train_conditioning)).transpose()?;
    let filtered_test = model.map(|m| m.transform(data.test_x, data.test_conditioning)).transpose()?;
    let test_x = filtered_test.as_ref().unwrap_or(data.test_x);
    let mut results = Vec::new();
    for &kind in &opts.attackers {
        let (train_x, train_labels) = match kind {
            AttackerKind::Ignorant => (data.train_x, data.train_labels),
            AttackerKind::Informed => (
                filtered_train.as_ref().unwrap_or(data.train_x),
                data.informed_train_labels.unwrap_or(data.train_labels),
            ),
        };
        let mut per_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in 0..opts.config.num_repeats {
            let attacker = train_attacker(&opts.config, train_x, train_labels, repeat_seed(opts.seed, r))?;
            for (name, v) in evaluate_attacker(&attacker, test_x, data.test_labels)? {
                per_metric.entry(name).or_default().push(v);
            }
        }
        let metrics = per_metric.into_iter().map(|(k, v)| (k, MetricSummary::from_values(v))).collect();
        results.push(AttackerResult { attacker: kind, metrics });
    }
    Ok(PrivacyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        attribute: opts.config.attribute,
        conditioning: model.and(opts.conditioning),
        repeats: opts.config.num_repeats,
        results,
    })
}
