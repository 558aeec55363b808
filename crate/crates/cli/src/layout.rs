//! Run-directory layout.
//!
//! ```text
//! ROOT/data/      embeddings.jsonl, ground_truth.json, partitions.json, trials.txt, config.toml
//! ROOT/setup/     external.ckpt, speaker_head.ckpt, prior.json, standardizer.json, config.toml
//! ROOT/original/  reports/privacy.json, reports/asv.json
//! ROOT/<preset>-seed<N>/
//!                 config.toml, checkpoints/filter.ckpt, logs/loss_curve.csv,
//!                 embeddings/, reports/privacy-<cond>.json, reports/asv-<cond>.json,
//!                 reports/manipulation.json
//! ROOT/report.json, ROOT/report.csv
//! ```

use std::path::{Path, PathBuf};

use attrfilter::datakit::ConditioningStrategy;
use attrfilter::filtermodel::LossPreset;

#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn embeddings(&self) -> PathBuf {
        self.data().join("embeddings.jsonl")
    }

    pub fn ground_truth(&self) -> PathBuf {
        self.data().join("ground_truth.json")
    }

    pub fn partitions(&self) -> PathBuf {
        self.data().join("partitions.json")
    }

    pub fn trials(&self) -> PathBuf {
        self.data().join("trials.txt")
    }

    pub fn setup(&self) -> PathBuf {
        self.root.join("setup")
    }

    pub fn external(&self) -> PathBuf {
        self.setup().join("external.ckpt")
    }

    pub fn speaker_head(&self) -> PathBuf {
        self.setup().join("speaker_head.ckpt")
    }

    pub fn prior(&self) -> PathBuf {
        self.setup().join("prior.json")
    }

    pub fn standardizer(&self) -> PathBuf {
        self.setup().join("standardizer.json")
    }

    pub fn original(&self) -> PathBuf {
        self.root.join("original")
    }

    pub fn cell_name(preset: LossPreset, seed: u64) -> String {
        format!("{}-seed{seed}", preset.name())
    }

    pub fn cell(&self, preset: LossPreset, seed: u64) -> PathBuf {
        self.root.join(Self::cell_name(preset, seed))
    }

    pub fn checkpoint(&self, preset: LossPreset, seed: u64) -> PathBuf {
        self.cell(preset, seed).join("checkpoints").join("filter.ckpt")
    }

    pub fn loss_curve(&self, preset: LossPreset, seed: u64) -> PathBuf {
        self.cell(preset, seed).join("logs").join("loss_curve.csv")
    }

    pub fn privacy_report(cell: &Path, conditioning: Option<ConditioningStrategy>) -> PathBuf {
        match conditioning {
            Some(c) => cell.join("reports").join(format!("privacy-{c}.json")),
            None => cell.join("reports").join("privacy.json"),
        }
    }

    pub fn asv_report(cell: &Path, conditioning: Option<ConditioningStrategy>) -> PathBuf {
        match conditioning {
            Some(c) => cell.join("reports").join(format!("asv-{c}.json")),
            None => cell.join("reports").join("asv.json"),
        }
    }

    pub fn manipulation_report(cell: &Path) -> PathBuf {
        cell.join("reports").join("manipulation.json")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }
}
