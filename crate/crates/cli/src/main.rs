//! `alertcast`: air-alert analytics pipeline.
//!
//! Subcommands: `synth` generates a fixture dataset, `eda` writes the
//! exploratory tables and charts, `train` fits one random forest per
//! (region, horizon), `evaluate` scores the trained models on the held-out
//! period. Exit codes: 0 success, 1 runtime failure, 2 usage/input error.

mod chart;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineArgs;

/// Failures carry the exit code class: usage/input problems exit 2,
/// everything else exits 1.
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(err: anyhow::Error) -> CliError {
    CliError::Usage(err)
}

pub fn runtime(err: anyhow::Error) -> CliError {
    CliError::Runtime(err)
}

/// Input-shaped core errors exit 2, data/IO failures exit 1.
pub fn classify(err: alertcast_core::Error) -> CliError {
    use alertcast_core::Error;
    match err {
        Error::Parse { .. } | Error::Validation(_) | Error::InvalidRegion { .. } => {
            CliError::Usage(err.into())
        }
        _ => CliError::Runtime(err.into()),
    }
}

#[derive(Parser)]
#[command(
    name = "alertcast",
    version,
    about = "Air-alert analytics: rasterize alert intervals, explore, train forecasters, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write exploratory tables and SVG charts from an events CSV
    Eda(PipelineArgs),
    /// Train one random forest per (target region, horizon)
    Train(PipelineArgs),
    /// Score trained models on the held-out period
    Evaluate(PipelineArgs),
    /// Generate a synthetic events CSV with a planted lead-lag pattern
    Synth(SynthArgs),
}

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Output CSV path
    #[arg(long, default_value = "events.csv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of regions (2..=99)
    #[arg(long, default_value_t = 6)]
    pub n_regions: usize,
    #[arg(long, default_value_t = 180)]
    pub days: u32,
    /// Index of the region whose alerts lead
    #[arg(long, default_value_t = 0)]
    pub lead_region: usize,
    /// Index of the region that follows the lead
    #[arg(long, default_value_t = 1)]
    pub lag_region: usize,
    /// Minutes between a lead alert and its follower
    #[arg(long, default_value_t = 10)]
    pub lag_minutes: u32,
    /// Probability a lead alert is followed
    #[arg(long, default_value_t = 0.9)]
    pub follow_prob: f64,
    /// Maximum absolute jitter on the lag, in minutes
    #[arg(long, default_value_t = 2)]
    pub jitter: u32,
    /// First generated timestamp, e.g. 2022-03-25T00:00
    #[arg(long)]
    pub start: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eda(args) => commands::cmd_eda(args),
        Command::Train(args) => commands::cmd_train(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Synth(args) => commands::cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
