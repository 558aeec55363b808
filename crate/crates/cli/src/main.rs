use std::path::PathBuf;
use std::process::ExitCode;

use attrfilter::datakit::ConditioningStrategy;
use attrfilter::filtermodel::LossPreset;
use attrfilter::Error;
use attrfilter_cli::{
    cmd_asv, cmd_attack, cmd_grid, cmd_manipulate, cmd_pretrain, cmd_report, cmd_synth, cmd_train, cmd_transform,
    AttackerSelection, ExperimentConfig, Layout,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "attrfilter", version, about = "Attribute removal and manipulation in speaker embeddings")]
struct Cli {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, default_value = "runs/default")]
    out: PathBuf,
    #[arg(long, global = true, value_parser = parse_conditioning)]
    conditioning: Option<ConditioningStrategy>,
    #[arg(long, global = true, value_parser = parse_preset)]
    losses: Option<LossPreset>,
    #[arg(long, global = true, value_enum)]
    attacker: Option<AttackerSelection>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus, speaker-disjoint partitions and trials.
    Synth,
    /// Train the external attribute classifier and the speaker head, and fit the logit prior.
    Pretrain,
    /// Train one filter.
    Train,
    /// Filter an embedding file.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Defaults to the checkpoint of the selected preset and seed.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and evaluate attribute attackers.
    Attack {
        /// Attack the unfiltered embeddings.
        #[arg(long)]
        original: bool,
    },
    /// Score the verification trials.
    Asv {
        #[arg(long)]
        original: bool,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Manipulation experiment with Gaussian-random conditioning.
    Manipulate,
    /// Consolidate the ablation grid.
    Report,
    /// Run every step for all presets and seeds.
    Grid,
}

fn parse_conditioning(s: &str) -> Result<ConditioningStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<LossPreset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::Checkpoint(_) => 3,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 3,
        Error::Numerical(_) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> attrfilter::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = cli.conditioning {
        cfg.conditioning = c;
    }
    if let Some(l) = cli.losses {
        cfg.losses = l;
    }
    if let Some(a) = cli.attacker {
        cfg.attacker = a;
    }
    cfg.validate()?;
    let layout = Layout::new(&cli.out);
    let print = |v: &dyn erased::Json| println!("{}", v.json());
    match cli.command {
        Command::Synth => cmd_synth(&cfg, &layout),
        Command::Pretrain => cmd_pretrain(&cfg, &layout),
        Command::Train => cmd_train(&cfg, &layout),
        Command::Transform { input, output, checkpoint } => {
            let ckpt = checkpoint.unwrap_or_else(|| layout.checkpoint(cfg.losses, cfg.seed));
            cmd_transform(&cfg, &layout, &ckpt, &input, &output)
        }
        Command::Attack { original } => cmd_attack(&cfg, &layout, original).map(|r| print(&r)),
        Command::Asv { original, checkpoint } => {
            cmd_asv(&cfg, &layout, original, checkpoint.as_deref()).map(|r| print(&r))
        }
        Command::Manipulate => cmd_manipulate(&cfg, &layout).map(|r| print(&r)),
        Command::Report => cmd_report(&cfg, &layout).map(|r| print(&r)),
        Command::Grid => cmd_grid(&cfg, &layout).map(|r| print(&r)),
    }
}

mod erased {
    pub trait Json {
        fn json(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn json(&self) -> String {
            serde_json::to_string_pretty(self).unwrap_or_default()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
