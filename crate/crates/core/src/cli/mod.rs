//! Command-line front end: `synth`, `train`, `eval`, `crossval` and
//! `inspect`. Exit codes are 0 on success, 1 on runtime failure and 2 on
//! usage or validation errors.

mod commands;
mod config;

pub use config::{EvalSection, RunConfig, CONFIG_ENV};

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::data::DataError;
use crate::harness::HarnessError;
use crate::model::ModelError;

/// Version string recorded in every run directory.
pub const VERSION: &str = match option_env!("EEG_FEWSHOT_GIT_DESCRIBE") {
    Some(v) => v,
    None => env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn one_line(s: impl ToString) -> String {
    s.to_string().replace('\n', " ")
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } | DataError::Dsp(_) => CliError::Runtime(one_line(e)),
            other => CliError::Usage(one_line(other)),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Data(d) => d.into(),
            ModelError::Config(_) | ModelError::Checkpoint { .. } => CliError::Usage(one_line(e)),
            other => CliError::Runtime(one_line(other)),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => CliError::Usage(one_line(e)),
            HarnessError::Data(d) => d.into(),
            HarnessError::Model(m) => m.into(),
            HarnessError::Fold { fold, source } => match CliError::from(*source) {
                CliError::Usage(m) => CliError::Usage(format!("fold {fold}: {m}")),
                CliError::Runtime(m) => CliError::Runtime(format!("fold {fold}: {m}")),
            },
            other => CliError::Runtime(one_line(other)),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eeg-fewshot", version = VERSION, about = "Few-shot EEG motor-imagery relation network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic motor-imagery dataset (manifest + trial files).
    Synth(SynthArgs),
    /// Train one fold and keep the minimum-validation-loss checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a subject or on a whole external dataset.
    Eval(EvalArgs),
    /// Leave-one-subject-out cross-validation.
    Crossval(CrossvalArgs),
    /// Print a checkpoint's configuration, iteration and parameter shapes.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration. Defaults to $EEG_FEWSHOT_CONFIG when set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub subjects: Option<usize>,
    #[arg(long)]
    pub trials_per_class: Option<usize>,
    /// Rhythm-to-noise power ratio in dB; `-inf` gives noise only.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub sessions: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub k_shot: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<u64>,
    #[arg(long)]
    pub val_episodes: Option<usize>,
    /// Train the plain relation network (uniform support weights).
    #[arg(long)]
    pub no_attention: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fold index (0-based, in subject order of first appearance).
    #[arg(long)]
    pub fold: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Support shots per class; repeatable.
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Subject to evaluate. Defaults to the checkpoint's held-out subject
    /// when it exists in the manifest, otherwise every subject.
    #[arg(long)]
    pub subject: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Folds trained in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Only run these folds; repeatable.
    #[arg(long = "fold")]
    pub folds: Vec<usize>,
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
}

/// Parses `args` and runs the command, printing a single-line error on
/// failure.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Crossval(a) => commands::crossval(a),
        Command::Inspect(a) => commands::inspect(a),
    }
}
