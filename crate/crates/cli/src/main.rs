//! `mlmkit`: corpus-prepare → tokenizer-train → pretrain → evaluate.

mod commands;
mod config;
mod lock;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{EvaluateArgs, PredictorKind, PrepareArgs, PretrainArgs};
use config::{resolve_config_path, Overrides, PipelineConfig, CONFIG_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "mlmkit",
    version,
    about = "Masked language model pretraining pipeline"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Pipeline config (JSON). Relative names are also looked up in the config dir.
    #[arg(long, global = true, default_value = "pipeline.json")]
    config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reproducible outputs: no wall-clock values in artifacts.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Work directory for all outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override, `section.key=json`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory searched for --config.
    #[arg(long, global = true, env = CONFIG_DIR_ENV, hide_env_values = true)]
    config_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize and sentence-split raw text, then split train/validation.
    CorpusPrepare {
        /// Directory of raw `.txt` files, one document each.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// Extra abbreviations, one per line.
        #[arg(long)]
        abbreviations: Option<PathBuf>,
    },
    /// Train the WordPiece vocabulary on the prepared corpus.
    TokenizerTrain,
    /// Two-phase MLM + NSP pretraining.
    Pretrain {
        #[arg(long)]
        resume: bool,
        /// Print the schedule and exit.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, value_name = "PHASE")]
        stop_after_phase: Option<u32>,
    },
    /// Masked-word top-k evaluation.
    Evaluate {
        #[arg(long, value_enum, default_values_t = [PredictorKind::Checkpoint])]
        predictor: Vec<PredictorKind>,
        /// Checkpoint directory; defaults to the newest pretraining checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

pub enum Failure {
    /// Bad flags, config or missing inputs; nothing was written.
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

pub type Outcome<T> = Result<T, Failure>;

pub trait ResultExt<T> {
    fn config(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn config(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let g = cli.global;
    let path = resolve_config_path(&g.config, g.config_dir.as_deref()).config()?;
    let overrides = Overrides {
        seed: g.seed,
        deterministic: g.deterministic,
        out: g.out,
        set: g.set,
    };
    let config = PipelineConfig::load(&path, &overrides).config()?;
    match cli.command {
        Command::CorpusPrepare { raw, abbreviations } => {
            commands::corpus_prepare(config, PrepareArgs { raw, abbreviations })
        }
        Command::TokenizerTrain => commands::tokenizer_train(config),
        Command::Pretrain {
            resume,
            dry_run,
            stop_after_phase,
        } => commands::pretrain_cmd(
            config,
            PretrainArgs {
                resume,
                dry_run,
                stop_after_phase,
            },
        ),
        Command::Evaluate {
            predictor,
            checkpoint,
        } => commands::evaluate(
            config,
            EvaluateArgs {
                predictors: predictor,
                checkpoint,
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
