//! The experiment verbs. Each reads its inputs from the run directory,
//! writes its outputs atomically and persists the configuration it ran with.

use std::collections::BTreeMap;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use attrfilter::attackkit::{
    asv_manipulated, asv_trials, run_attack_suite, train_attacker, AsvReport, AttackerKind, AttributeClassifier,
    PrivacyReport, SuiteData, SuiteOptions,
};
use attrfilter::datakit::{
    fit_logit_prior, generate_synthetic, make_partitions, read_embeddings, read_trials, sample_conditioning,
    write_embeddings_to, write_trials_to, AttributeKind, AttributeValues, ConditioningStrategy, Dataset, EmbeddingRecord,
    LogitPrior, PartitionSpec, Role,
};
use attrfilter::diffcore::{ParamKind, ParamStore};
use attrfilter::filtermodel::{
    expect_end, load_checkpoint, pretrain_speaker_head, read_header, read_param_blocks, save_checkpoint, train,
    write_atomic, write_header, write_param_blocks, FilterModel, LossPreset, TrainData,
};
use attrfilter::{Error, Result, Tensor};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::layout::Layout;

const SPEAKER_HEAD_MAGIC: &[u8; 4] = b"ATSH";

pub(crate) fn missing(path: &Path) -> Error {
    Error::Io(std::io::Error::new(ErrorKind::NotFound, format!("{} does not exist", path.display())))
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(missing(path))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    require(path)?;
    Ok(std::fs::read(path)?)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&read_bytes(path)?)?)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    write_atomic(path, bytes)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    write_file(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())
}

fn write_records(path: &Path, records: &[EmbeddingRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_embeddings_to(records, &mut buf)?;
    write_file(path, &buf)
}

/// Zero-mean, unit-variance scaling of a continuous attribute, fitted on
/// the filter-training speakers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub const IDENTITY: Standardizer = Standardizer { mean: 0.0, std: 1.0 };

    pub fn fit(values: &AttributeValues) -> Result<Self> {
        match values {
            AttributeValues::Discrete(_) => Ok(Self::IDENTITY),
            AttributeValues::Continuous(v) => {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
                if !(std > 0.0) {
                    return Err(Error::Data("continuous attribute has zero variance".into()));
                }
                Ok(Standardizer { mean, std })
            }
        }
    }

    pub fn apply(&self, values: &AttributeValues) -> AttributeValues {
        match values {
            AttributeValues::Discrete(v) => AttributeValues::Discrete(v.clone()),
            AttributeValues::Continuous(v) => {
                AttributeValues::Continuous(v.iter().map(|x| (x - self.mean) / self.std).collect())
            }
        }
    }
}

/// Embeddings and labels of the three speaker-disjoint roles; continuous
/// labels are standardised.
pub struct Workspace {
    pub records: Vec<EmbeddingRecord>,
    pub partitions: PartitionSpec,
    pub train_vq: Dataset,
    pub train_att: Dataset,
    pub test_att: Dataset,
}

impl Workspace {
    pub fn load(layout: &Layout, kind: AttributeKind, standardizer: Option<Standardizer>) -> Result<Self> {
        require(&layout.embeddings())?;
        let records = read_embeddings(&layout.embeddings())?;
        let partitions: PartitionSpec = read_json(&layout.partitions())?;
        partitions.validate(Some(&records))?;
        let load = |role| Dataset::from_records(partitions.select(&records, role), kind);
        let mut train_vq = load(Role::TrainVq)?;
        let mut train_att = load(Role::TrainAtt)?;
        let mut test_att = load(Role::TestAtt)?;
        let st = match standardizer {
            Some(s) => s,
            None => Standardizer::fit(&train_vq.attribute)?,
        };
        for d in [&mut train_vq, &mut train_att, &mut test_att] {
            d.attribute = st.apply(&d.attribute);
        }
        Ok(Workspace { records, partitions, train_vq, train_att, test_att })
    }
}

/// Setup-phase artifacts shared by every cell.
pub struct Setup {
    pub external: AttributeClassifier,
    pub prior: LogitPrior,
    pub standardizer: Standardizer,
    pub speaker_head: Tensor,
}

impl Setup {
    pub fn load(layout: &Layout) -> Result<Self> {
        let external = AttributeClassifier::read(&mut read_bytes(&layout.external())?.as_slice())?;
        let prior = read_json(&layout.prior())?;
        let standardizer = read_json(&layout.standardizer())?;
        let bytes = read_bytes(&layout.speaker_head())?;
        let mut r = bytes.as_slice();
        let shape: Vec<usize> = read_header(&mut r, SPEAKER_HEAD_MAGIC)?;
        let mut store = ParamStore::new();
        let id = store.add("speaker_head.w", Tensor::zeros(&shape), ParamKind::Frozen);
        read_param_blocks(&mut store, &mut r)?;
        expect_end(&mut r)?;
        Ok(Setup { external, prior, standardizer, speaker_head: store.get(id).clone() })
    }

    /// Conditioning rows for `x` under `strategy`. Random draws are seeded
    /// from `seed` and `stream`.
    pub fn conditioning(&self, strategy: ConditioningStrategy, x: &Tensor, seed: u64, stream: u64) -> Result<Tensor> {
        match strategy {
            ConditioningStrategy::True => self.external.outputs(x),
            other => sample_conditioning(&self.prior, other, conditioning_seed(seed, stream), x.rows()),
        }
    }
}

/// Independent seed for each use of random conditioning.
pub fn conditioning_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9)) ^ 0x5EED
}

mod streams {
    pub const ATTACK_TRAIN: u64 = 1;
    pub const ATTACK_TEST: u64 = 2;
    pub const MANIPULATE_TRAIN: u64 = 3;
    pub const MANIPULATE_TEST: u64 = 4;
    pub const MANIPULATE_TRIALS: u64 = 5;
    pub const TRANSFORM: u64 = 6;
}

pub fn cmd_synth(cfg: &ExperimentConfig, layout: &Layout) -> Result<()> {
    cfg.validate()?;
    let synth = cfg.synth_config();
    let (records, truth) = generate_synthetic(&synth)?;
    let p = &cfg.partitions;
    let partitions = make_partitions(&records, p.ratios(), p.trials_per_class, p.seed)?;
    write_records(&layout.embeddings(), &records)?;
    write_json(&layout.ground_truth(), &truth)?;
    write_json(&layout.partitions(), &partitions)?;
    let mut trials = Vec::new();
    write_trials_to(&partitions.trials, &mut trials)?;
    write_file(&layout.trials(), &trials)?;
    write_config(&layout.data(), cfg)?;
    log::info!("wrote {} embeddings of {} speakers", records.len(), synth.num_speakers);
    Ok(())
}

pub fn cmd_pretrain(cfg: &ExperimentConfig, layout: &Layout) -> Result<()> {
    cfg.validate()?;
    let ws = Workspace::load(layout, cfg.attribute, None)?;
    let standardizer = Standardizer::fit(&ws.records_attribute_vq(cfg.attribute)?)?;
    let vq = &ws.train_vq;
    let external = train_attacker(&cfg.attack_config(), &vq.x, &vq.attribute, cfg.seed)?;
    let prior = fit_logit_prior(&external.outputs(&vq.x)?)?;
    let f = &cfg.filter;
    let head = pretrain_speaker_head(&vq.x, &vq.speakers, vq.num_speakers(), f.aam_margin, f.aam_scale, &cfg.speaker_head, cfg.seed)?;

    let mut buf = Vec::new();
    external.write(&mut buf)?;
    write_file(&layout.external(), &buf)?;
    write_json(&layout.prior(), &prior)?;
    write_json(&layout.standardizer(), &standardizer)?;
    let mut store = ParamStore::new();
    store.add("speaker_head.w", head.clone(), ParamKind::Frozen);
    let mut buf = Vec::new();
    write_header(&mut buf, SPEAKER_HEAD_MAGIC, &head.shape().to_vec())?;
    write_param_blocks(&store, &mut buf)?;
    write_file(&layout.speaker_head(), &buf)?;
    write_config(&layout.setup(), cfg)?;
    Ok(())
}

impl Workspace {
    /// Raw (unstandardised) training labels.
    fn records_attribute_vq(&self, kind: AttributeKind) -> Result<AttributeValues> {
        let d = Dataset::from_records(self.partitions.select(&self.records, Role::TrainVq), kind)?;
        Ok(d.attribute)
    }
}

fn load_context(cfg: &ExperimentConfig, layout: &Layout) -> Result<(Workspace, Setup)> {
    cfg.validate()?;
    let setup = Setup::load(layout)?;
    let ws = Workspace::load(layout, cfg.attribute, Some(setup.standardizer))?;
    if setup.external.config.attribute != cfg.attribute {
        return Err(Error::Config("the setup phase was run for a different attribute".into()));
    }
    Ok((ws, setup))
}

pub fn cmd_train(cfg: &ExperimentConfig, layout: &Layout) -> Result<()> {
    let (ws, setup) = load_context(cfg, layout)?;
    let vq = &ws.train_vq;
    if setup.speaker_head.rows() != vq.num_speakers() {
        return Err(Error::Data("speaker head and filter-training speakers disagree".into()));
    }
    let mut model = FilterModel::new(cfg.filter_config(cfg.losses, vq.num_speakers()), cfg.seed)?;
    model.set_speaker_head(&setup.speaker_head)?;
    let conditioning = setup.external.outputs(&vq.x)?;
    let data = TrainData { x: &vq.x, speakers: &vq.speakers, attribute: &vq.attribute, conditioning: &conditioning };
    let report = train(&mut model, data, &cfg.train, cfg.seed)?;
    let cell = layout.cell(cfg.losses, cfg.seed);
    ensure_parent(&layout.checkpoint(cfg.losses, cfg.seed))?;
    save_checkpoint(&model, &layout.checkpoint(cfg.losses, cfg.seed))?;
    write_file(&layout.loss_curve(cfg.losses, cfg.seed), report.to_csv().as_bytes())?;
    write_config(&cell, cfg)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<FilterModel> {
    require(path)?;
    load_checkpoint(path)
}

/// Filters every record of `input` and writes them to `output` with their labels.
pub fn cmd_transform(cfg: &ExperimentConfig, layout: &Layout, checkpoint: &Path, input: &Path, output: &Path) -> Result<()> {
    let (_, setup) = load_context(cfg, layout)?;
    let model = load_model(checkpoint)?;
    require(input)?;
    let records = read_embeddings(input)?;
    if records.is_empty() {
        return Err(Error::Data(format!("{} holds no embeddings", input.display())));
    }
    let dim = records[0].vector.len();
    let x = Tensor::new(&[records.len(), dim], records.iter().flat_map(|r| r.vector.iter().copied()).collect())?;
    let cond = setup.conditioning(cfg.conditioning, &x, cfg.seed, streams::TRANSFORM)?;
    let y = model.transform(&x, &cond)?;
    let out: Vec<EmbeddingRecord> = records
        .iter()
        .enumerate()
        .map(|(i, r)| EmbeddingRecord { vector: y.row(i).to_vec(), ..r.clone() })
        .collect();
    write_records(output, &out)
}

fn attack_options(cfg: &ExperimentConfig, conditioning: Option<ConditioningStrategy>) -> SuiteOptions {
    SuiteOptions {
        config: cfg.attack_config(),
        attackers: cfg.attacker.kinds(),
        conditioning,
        seed: cfg.seed,
    }
}

/// Privacy report of the cell for `cfg.losses` and `cfg.seed`, or of the
/// unfiltered embeddings.
pub fn cmd_attack(cfg: &ExperimentConfig, layout: &Layout, original: bool) -> Result<PrivacyReport> {
    let (ws, setup) = load_context(cfg, layout)?;
    let (tr, te) = (&ws.train_att, &ws.test_att);
    let (report, path) = if original {
        let none = Tensor::zeros(&[0, 0]);
        let data = SuiteData {
            train_x: &tr.x,
            train_labels: &tr.attribute,
            train_conditioning: &none,
            informed_train_labels: None,
            test_x: &te.x,
            test_labels: &te.attribute,
            test_conditioning: &none,
        };
        let report = run_attack_suite(None, &data, &attack_options(cfg, None))?;
        (report, Layout::privacy_report(&layout.original(), None))
    } else {
        let model = load_model(&layout.checkpoint(cfg.losses, cfg.seed))?;
        let strategy = cfg.conditioning;
        let trc = setup.conditioning(strategy, &tr.x, cfg.seed, streams::ATTACK_TRAIN)?;
        let tec = setup.conditioning(strategy, &te.x, cfg.seed, streams::ATTACK_TEST)?;
        let data = SuiteData {
            train_x: &tr.x,
            train_labels: &tr.attribute,
            train_conditioning: &trc,
            informed_train_labels: None,
            test_x: &te.x,
            test_labels: &te.attribute,
            test_conditioning: &tec,
        };
        let report = run_attack_suite(Some(&model), &data, &attack_options(cfg, Some(strategy)))?;
        (report, Layout::privacy_report(&layout.cell(cfg.losses, cfg.seed), Some(strategy)))
    };
    write_json(&path, &report)?;
    Ok(report)
}

fn trial_list(layout: &Layout, ws: &Workspace) -> Result<Vec<attrfilter::datakit::TrialPair>> {
    let path = layout.trials();
    if path.exists() {
        read_trials(&path)
    } else {
        Ok(ws.partitions.trials.clone())
    }
}

/// Verification EER and minDCF on the test speakers' trials.
pub fn cmd_asv(cfg: &ExperimentConfig, layout: &Layout, original: bool, checkpoint: Option<&Path>) -> Result<AsvReport> {
    let (ws, setup) = load_context(cfg, layout)?;
    let te = &ws.test_att;
    let trials = trial_list(layout, &ws)?;
    let (scores, path) = if original {
        (asv_trials(&te.x, &te.utterance_ids, &trials)?, Layout::asv_report(&layout.original(), None))
    } else {
        let ckpt = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| layout.checkpoint(cfg.losses, cfg.seed));
        let model = load_model(&ckpt)?;
        let cond = setup.conditioning(cfg.conditioning, &te.x, cfg.seed, streams::ATTACK_TEST)?;
        let x = model.transform(&te.x, &cond)?;
        let path = Layout::asv_report(&layout.cell(cfg.losses, cfg.seed), Some(cfg.conditioning));
        (asv_trials(&x, &te.utterance_ids, &trials)?, path)
    };
    let report = AsvReport::from_scores(&scores, cfg.dcf)?;
    write_json(&path, &report)?;
    Ok(report)
}

/// Attribute manipulation with Gaussian-random conditioning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManipulationReport {
    pub schema_version: u32,
    /// Attackers scored against the fed attribute: the arg-max class of the
    /// fed logits, or the fed value.
    pub privacy: PrivacyReport,
    /// Trials filtered with shared draws for same-speaker pairs.
    pub asv: AsvReport,
}

fn fed_labels(kind: AttributeKind, logits: &Tensor) -> AttributeValues {
    match kind {
        AttributeKind::Discrete => {
            AttributeValues::Discrete((0..logits.rows()).map(|r| usize::from(logits.row(r)[1] > logits.row(r)[0])).collect())
        }
        AttributeKind::Continuous => AttributeValues::Continuous(logits.data().to_vec()),
    }
}

pub fn cmd_manipulate(cfg: &ExperimentConfig, layout: &Layout) -> Result<ManipulationReport> {
    let (ws, setup) = load_context(cfg, layout)?;
    let model = load_model(&layout.checkpoint(cfg.losses, cfg.seed))?;
    let (tr, te) = (&ws.train_att, &ws.test_att);
    let g = ConditioningStrategy::Gaussian;
    let trc = setup.conditioning(g, &tr.x, cfg.seed, streams::MANIPULATE_TRAIN)?;
    let tec = setup.conditioning(g, &te.x, cfg.seed, streams::MANIPULATE_TEST)?;
    let fake_train = fed_labels(cfg.attribute, &trc);
    let fake_test = fed_labels(cfg.attribute, &tec);
    let data = SuiteData {
        train_x: &tr.x,
        train_labels: &tr.attribute,
        train_conditioning: &trc,
        informed_train_labels: Some(&fake_train),
        test_x: &te.x,
        test_labels: &fake_test,
        test_conditioning: &tec,
    };
    let privacy = run_attack_suite(Some(&model), &data, &attack_options(cfg, Some(g)))?;
    let trials = trial_list(layout, &ws)?;
    let seed = conditioning_seed(cfg.seed, streams::MANIPULATE_TRIALS);
    let scores = asv_manipulated(&model, &te.x, &te.utterance_ids, &trials, &setup.prior, seed)?;
    let report = ManipulationReport { schema_version: 1, privacy, asv: AsvReport::from_scores(&scores, cfg.dcf)? };
    write_json(&Layout::manipulation_report(&layout.cell(cfg.losses, cfg.seed)), &report)?;
    Ok(report)
}

/// One row of the consolidated table: a system, an attacker and a metric,
/// summarised over training seeds (each seed contributes its repeat mean).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system: String,
    pub attacker: String,
    pub metric: String,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedReport {
    pub schema_version: u32,
    pub attribute: AttributeKind,
    pub conditioning: ConditioningStrategy,
    pub seeds: Vec<u64>,
    pub rows: Vec<ReportRow>,
}

impl ConsolidatedReport {
    pub fn get(&self, system: &str, attacker: &str, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.system == system && r.attacker == attacker && r.metric == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("system,attacker,metric,median,mean,std,per_seed\n");
        for r in &self.rows {
            let seeds: Vec<String> = r.per_seed.iter().map(|v| format!("{v}")).collect();
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.system,
                r.attacker,
                r.metric,
                r.median,
                r.mean,
                r.std,
                seeds.join(";")
            ));
        }
        s
    }
}

fn summary_row(system: &str, attacker: &str, metric: &str, values: Vec<f64>) -> ReportRow {
    let s = attrfilter::attackkit::MetricSummary::from_values(values);
    ReportRow {
        system: system.into(),
        attacker: attacker.into(),
        metric: metric.into(),
        median: s.median(),
        mean: s.mean,
        std: s.std,
        per_seed: s.values,
    }
}

fn privacy_rows(system: &str, reports: &[PrivacyReport]) -> Vec<ReportRow> {
    let mut acc: BTreeMap<(AttackerKind, String), Vec<f64>> = BTreeMap::new();
    for r in reports {
        for res in &r.results {
            for (m, s) in &res.metrics {
                acc.entry((res.attacker, m.clone())).or_default().push(s.mean);
            }
        }
    }
    acc.into_iter().map(|((a, m), v)| summary_row(system, a.name(), &m, v)).collect()
}

fn asv_rows(system: &str, reports: &[AsvReport]) -> Vec<ReportRow> {
    vec![
        summary_row(system, "asv", "eer", reports.iter().map(|r| r.eer).collect()),
        summary_row(system, "asv", "min_dcf", reports.iter().map(|r| r.min_dcf).collect()),
    ]
}

/// Collects the original baseline and every preset × seed cell into one
/// table; refuses when any of them is missing.
pub fn cmd_report(cfg: &ExperimentConfig, layout: &Layout) -> Result<ConsolidatedReport> {
    cfg.validate()?;
    let cond = Some(cfg.conditioning);
    let mut wanted: Vec<PathBuf> = vec![
        Layout::privacy_report(&layout.original(), None),
        Layout::asv_report(&layout.original(), None),
    ];
    for preset in LossPreset::ALL {
        for &seed in &cfg.seeds {
            let cell = layout.cell(preset, seed);
            wanted.push(Layout::privacy_report(&cell, cond));
            wanted.push(Layout::asv_report(&cell, cond));
        }
    }
    let absent: Vec<String> = wanted
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.strip_prefix(&layout.root).unwrap_or(p).display().to_string())
        .collect();
    if !absent.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            ErrorKind::NotFound,
            format!("incomplete ablation grid, missing: {}", absent.join(", ")),
        )));
    }
    let mut rows = privacy_rows("original", &[read_json(&wanted[0])?]);
    rows.extend(asv_rows("original", &[read_json(&wanted[1])?]));
    for preset in LossPreset::ALL {
        let mut privacy = Vec::new();
        let mut asv = Vec::new();
        let mut manip = Vec::new();
        for &seed in &cfg.seeds {
            let cell = layout.cell(preset, seed);
            privacy.push(read_json::<PrivacyReport>(&Layout::privacy_report(&cell, cond))?);
            asv.push(read_json::<AsvReport>(&Layout::asv_report(&cell, cond))?);
            let m = Layout::manipulation_report(&cell);
            if m.exists() {
                manip.push(read_json::<ManipulationReport>(&m)?);
            }
        }
        rows.extend(privacy_rows(preset.name(), &privacy));
        rows.extend(asv_rows(preset.name(), &asv));
        if manip.len() == cfg.seeds.len() {
            let name = format!("{}+manipulation", preset.name());
            rows.extend(privacy_rows(&name, &manip.iter().map(|m| m.privacy.clone()).collect::<Vec<_>>()));
            rows.extend(asv_rows(&name, &manip.iter().map(|m| m.asv.clone()).collect::<Vec<_>>()));
        }
    }
    let report = ConsolidatedReport {
        schema_version: 1,
        attribute: cfg.attribute,
        conditioning: cfg.conditioning,
        seeds: cfg.seeds.clone(),
        rows,
    };
    write_json(&layout.report_json(), &report)?;
    write_file(&layout.report_csv(), report.to_csv().as_bytes())?;
    Ok(report)
}

/// Every step of the protocol: data, setup, the original baseline, then
/// train, attack, verification and manipulation for each preset and seed,
/// then the consolidated report.
pub fn cmd_grid(cfg: &ExperimentConfig, layout: &Layout) -> Result<ConsolidatedReport> {
    cmd_synth(cfg, layout)?;
    cmd_pretrain(cfg, layout)?;
    cmd_attack(cfg, layout, true)?;
    cmd_asv(cfg, layout, true, None)?;
    for preset in LossPreset::ALL {
        for &seed in &cfg.seeds {
            let cell = ExperimentConfig { losses: preset, seed, ..cfg.clone() };
            log::info!("cell {}", Layout::cell_name(preset, seed));
            cmd_train(&cell, layout)?;
            cmd_attack(&cell, layout, false)?;
            cmd_asv(&cell, layout, false, None)?;
            if preset == LossPreset::Full {
                cmd_manipulate(&cell, layout)?;
            }
        }
    }
    cmd_report(cfg, layout)
}
