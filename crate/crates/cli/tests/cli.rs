use std::process::Command;

use attrfilter::datakit::ConditioningStrategy;
use attrfilter::filtermodel::LossPreset;
use attrfilter_cli::*;

const TINY: &str = r#"
seeds = [1]
[synth]
num_speakers = 40
utterances_per_speaker = 8
dim = 16
attr_strength = 2.0
[partitions]
train_vq = 20
train_att = 12
test_att = 8
trials_per_class = 100
[filter]
input_dim = 16
encoder_hidden = [32, 16]
decoder_hidden = [32]
num_codebooks = 4
codewords_per_book = 8
quantizer_output_dim = 16
[train]
epochs = 2
batch_size = 32
start_lr = 1e-3
max_lr = 3e-3
[weights.full]
delta = 0.1
epsilon = 0.1
[attack]
hidden = [16, 16]
num_repeats = 2
[attack.schedule]
epochs = 3
batch_size = 32
[speaker_head]
epochs = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attrfilter"))
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = ExperimentConfig::parse(TINY).unwrap();
    assert_eq!(cfg.weights_for(LossPreset::Full).delta, 0.1);
    assert_eq!(cfg.weights_for(LossPreset::Full).alpha, 1.0);
    assert_eq!(ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    let d = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::parse(&d.to_toml().unwrap()).unwrap(), d);
}

#[test]
fn bad_configs_are_rejected() {
    assert!(ExperimentConfig::parse("no_such_field = 1").is_err());
    let bad = ExperimentConfig::parse("[weights.nonsense]\ndelta = 1.0").unwrap();
    assert!(bad.validate().is_err());
    let neg = ExperimentConfig::parse("[weights.adv]\ndelta = -1.0").unwrap();
    assert!(neg.validate().is_err());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seeds = \"x\"").unwrap();
    let out = bin().args(["--config", cfg.to_str().unwrap(), "synth"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["--out", dir.path().join("empty").to_str().unwrap(), "train"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = bin().args(["--out", dir.path().join("empty").to_str().unwrap(), "report"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));

    let out = bin().args(["--losses", "nope", "train"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_pipeline_is_reproducible() {
    let cfg = ExperimentConfig::parse(TINY).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let layout = Layout::new(dir.path().join(name));
        let report = cmd_grid(&cfg, &layout).unwrap();
        (layout, report)
    };
    let (a, ra) = run("a");
    let (b, rb) = run("b");
    assert_eq!(ra, rb);
    for rel in ["data/embeddings.jsonl", "setup/external.ckpt", "full-seed1/checkpoints/filter.ckpt", "report.json", "full-seed1/reports/manipulation.json"] {
        assert_eq!(std::fs::read(a.root.join(rel)).unwrap(), std::fs::read(b.root.join(rel)).unwrap(), "{rel}");
    }
    assert!(std::fs::read_to_string(a.root.join("full-seed1/config.toml")).unwrap().contains("[train]"));
    assert!(ra.get("original", "informed", "uar").is_some());
    assert!(ra.get("full+manipulation", "asv", "eer").is_some());

    // a removed cell makes the report refuse
    std::fs::remove_file(Layout::privacy_report(&a.cell(LossPreset::Mi, 1), Some(ConditioningStrategy::Mean))).unwrap();
    let err = cmd_report(&cfg, &a).unwrap_err().to_string();
    assert!(err.contains("mi-seed1"), "{err}");

    // transform through the binary writes one record per input
    let input = a.embeddings();
    let output = dir.path().join("filtered.jsonl");
    let conf = dir.path().join("tiny.toml");
    std::fs::write(&conf, TINY).unwrap();
    let status = bin()
        .args(["--config", conf.to_str().unwrap(), "--out", a.root.to_str().unwrap(), "transform", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .status()
        .unwrap();
    assert!(status.success());
    let n_in = std::fs::read_to_string(&input).unwrap().lines().count();
    let n_out = std::fs::read_to_string(&output).unwrap().lines().count();
    assert_eq!(n_in, n_out);
}
