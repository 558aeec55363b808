//! Attacker simulation and the evaluation metrics: UAR, AUPRC, CCC, PCC,
//! EER, minDCF, ZEBRA disclosure and cosine verification scoring.

mod asv;
mod attacker;
mod metrics;
mod suite;
mod zebra;

pub use asv::{asv_manipulated, asv_trials, cosine, AsvReport};
pub use attacker::{train_attacker, AttackerConfig, AttackerKind, AttributeClassifier, CLASSIFIER_MAGIC};
pub use metrics::{auprc, ccc, eer, min_dcf, pcc, uar, DcfParams, ScoreSet};
pub use suite::{
    evaluate_attacker, repeat_seed, run_attack_suite, AttackerResult, MetricSummary, PrivacyReport, SuiteData, SuiteOptions,
    REPORT_SCHEMA_VERSION,
};
pub use zebra::{calibrate, ece, pav, prior_grid, zebra, Zebra, PRIOR_GRID_BOUND, PRIOR_GRID_POINTS};
