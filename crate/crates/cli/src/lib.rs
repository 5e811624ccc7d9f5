//! The `pudsim` command-line frontend.
//!
//! Every subcommand validates its whole configuration before touching the
//! output directory, writes its artifacts into a staging directory inside
//! it, and only then moves them into place next to `manifest.json`.

pub mod config;
pub mod error;
mod manifest;
mod subcommands;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{RunConfig, PROFILE_DIR_ENV};
pub use error::{CliError, ErrorKind};
pub use manifest::{Manifest, ManifestFile, MANIFEST_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Action {
    /// Execute the configured command sequence and print its trace.
    Simulate,
    /// Run the configured experiment grid.
    Sweep,
    /// Run the activation test, MAJ-X and Multi-RowCopy with the experiment
    /// table's scale, seed and environment.
    Characterize,
    /// Price the arithmetic kernels for every enabled-width variant.
    Bench,
    /// Price overwriting a whole bank.
    Destroy,
    /// Find subarray boundaries by RowClone probing.
    Discover,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Sweep => "sweep",
            Self::Characterize => "characterize",
            Self::Bench => "bench",
            Self::Destroy => "destroy",
            Self::Discover => "discover",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "pudsim", version, about = "Command-level simulator of processing using DRAM")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Directory that receives every artifact.
    #[arg(long, short, global = true, default_value = "pudsim-out")]
    pub out: PathBuf,

    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Worker threads for experiments; all cores when omitted.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, env = PROFILE_DIR_ENV, global = true, hide_env_values = true)]
    pub profile_dir: Option<PathBuf>,
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub manifest: Manifest,
    /// Text meant for stdout.
    pub report: String,
}

/// Load, validate and execute one invocation.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if cli.jobs == Some(0) {
        return Err(CliError::validation("--jobs must be at least 1"));
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.finalize(cli.seed, cli.profile_dir.as_deref());
    let prepared = subcommands::prepare(cli.action, &config)?;
    let staging = manifest::Staging::create(&cli.out)?;
    let report = match subcommands::execute(&prepared, &config, cli, staging.path()) {
        Ok(r) => r,
        Err(e) => {
            staging.discard();
            return Err(e);
        }
    };
    let manifest = Manifest::new(cli.action.name(), &config, cli.format.name());
    let manifest = staging.commit(manifest)?;
    Ok(Outcome { manifest, report })
}
