//! Run configuration: defaults, optional TOML config file, CLI-flag
//! overrides. Flags win over the file, the file wins over defaults.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chrono::NaiveDateTime;
use serde::Deserialize;

use alertcast_core::eval::SplitSpec;
use alertcast_core::forest::ForestParams;
use alertcast_core::ingest::{StudyWindow, TIMESTAMP_FORMAT};

use crate::{usage, CliResult};

/// Default prediction targets.
pub const DEFAULT_TARGET_REGIONS: [&str; 4] =
    ["Lvivska oblast", "Vinnytska oblast", "Kyivska oblast", "Kharkivska oblast"];

pub const DEFAULT_REF_REGION: &str = "Kharkivska oblast";

/// Keys accepted in the TOML config file. Every key is optional; timestamps
/// use the `2022-03-25T00:00` layout.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub window_start: Option<String>,
    pub window_end: Option<String>,
    pub target_regions: Option<Vec<String>>,
    pub horizons: Option<Vec<u32>>,
    pub split: Option<String>,
    pub n_trees: Option<usize>,
    pub max_depth: Option<u32>,
    pub min_leaf: Option<usize>,
    pub mtry: Option<usize>,
    pub stride: Option<u32>,
    pub seed: Option<u64>,
    pub ref_region: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))
            .map_err(usage)?;
        toml::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))
            .map_err(usage)
    }
}

/// Flag values shared by the pipeline subcommands; `None` means "not given".
#[derive(Debug, Default, clap::Args)]
pub struct PipelineArgs {
    /// Input events CSV (header `region,start,end`)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated target region names
    #[arg(long, value_delimiter = ',')]
    pub regions: Option<Vec<String>>,
    /// Comma-separated target horizons in minutes
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u32>>,
    /// Train/test boundary, e.g. 2024-07-01T00:00
    #[arg(long)]
    pub split: Option<String>,
    /// Trees per forest
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Maximum tree depth (unlimited when absent)
    #[arg(long)]
    pub max_depth: Option<u32>,
    /// Minimum samples per leaf
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Keep every n-th minute row of the dataset
    #[arg(long)]
    pub stride: Option<u32>,
    /// Random seed for training and generation
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reference region for the co-occurrence table
    #[arg(long)]
    pub ref_region: Option<String>,
}

/// Fully resolved configuration of one pipeline run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub window: StudyWindow,
    pub target_regions: Vec<String>,
    pub horizons: Vec<u32>,
    pub split: SplitSpec,
    pub forest: ForestParams,
    pub stride: u32,
    pub seed: u64,
    pub ref_region: String,
}

fn parse_stamp(text: &str, what: &str) -> CliResult<NaiveDateTime> {
    NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
        .map_err(|_| usage(anyhow!("{what} `{text}` is not a timestamp like 2022-03-25T00:00")))
}

impl RunConfig {
    /// Merge defaults, the optional config file and the flags.
    pub fn resolve(args: &PipelineArgs) -> CliResult<RunConfig> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let defaults = StudyWindow::default();
        let window_start = match &file.window_start {
            Some(text) => parse_stamp(text, "window_start")?,
            None => defaults.origin(),
        };
        let window_end = match &file.window_end {
            Some(text) => parse_stamp(text, "window_end")?,
            None => defaults.datetime(defaults.end()),
        };
        let window = StudyWindow::new(window_start, window_end).map_err(|e| usage(e.into()))?;

        let split_text = args.split.clone().or(file.split);
        let split = match split_text {
            Some(text) => SplitSpec { boundary: parse_stamp(&text, "split")? },
            None => SplitSpec::default(),
        };

        let seed = args.seed.or(file.seed).unwrap_or(0);
        let forest = ForestParams {
            n_trees: args.n_trees.or(file.n_trees).unwrap_or(500),
            max_depth: args.max_depth.or(file.max_depth),
            min_samples_leaf: args.min_leaf.or(file.min_leaf).unwrap_or(50),
            mtry: file.mtry,
            bootstrap: true,
            seed,
        };

        let stride = args.stride.or(file.stride).unwrap_or(1);
        if stride == 0 {
            return Err(usage(anyhow!("stride must be at least 1")));
        }
        let horizons = args.horizons.clone().or(file.horizons).unwrap_or_else(|| vec![5, 15]);
        if horizons.is_empty() || horizons.contains(&0) {
            return Err(usage(anyhow!("horizons must be positive minute counts")));
        }

        Ok(RunConfig {
            input: args.input.clone().or(file.input),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            window,
            target_regions: args
                .regions
                .clone()
                .or(file.target_regions)
                .unwrap_or_else(|| DEFAULT_TARGET_REGIONS.map(String::from).to_vec()),
            horizons,
            split,
            forest,
            stride,
            seed,
            ref_region: args.ref_region.clone().or(file.ref_region).unwrap_or_else(|| DEFAULT_REF_REGION.into()),
        })
    }
}
