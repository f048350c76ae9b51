//! Experiment runner behind the `histolab` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{ExperimentConfig, PolicySelector};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "histolab", version, about = "Swinging-door compression experiments")]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Run the full experiment suite on the built-in presets.
    #[arg(long)]
    pub corpus: bool,

    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Options {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "HISTOLAB_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Explicit deviations, comma separated.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1.., conflicts_with = "policy")]
    pub thresholds: Option<Vec<f64>>,

    /// auto | conservative | moderate | aggressive | fixed:<value>
    #[arg(long, global = true)]
    pub policy: Option<PolicySelector>,

    /// Evaluate sweep and curve points concurrently.
    #[arg(long, global = true)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write signal.csv and stats.json.
    Generate,
    /// Compress over a list of deviations; writes sweep.csv/json/svg.
    Sweep,
    /// Inject anomalies and measure detector recall against compression.
    Anomaly,
    /// Compare forecasting models on raw and compressed data.
    Models,
    /// Collect the outputs of earlier steps into manifest.json.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Sweep => "sweep",
            Command::Anomaly => "anomaly",
            Command::Models => "models",
            Command::Report => "report",
        }
    }
}

/// Loads the configuration file (if any) and lets flags override it.
pub fn resolve_config(opts: &Options) -> CliResult<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(t) = &opts.thresholds {
        cfg.thresholds = t.clone();
        cfg.policy = None;
    }
    if let Some(p) = opts.policy {
        cfg.policy = Some(p);
        cfg.thresholds.clear();
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(&cli.opts)?;
    let ctx = Context::new(cfg, cli.opts.parallel);
    if cli.corpus {
        return commands::corpus(&ctx);
    }
    let Some(command) = cli.command else {
        return Err(CliError::usage("expected a subcommand or --corpus (see --help)"));
    };
    match command {
        Command::Generate => commands::timed(&ctx, command.name(), commands::generate),
        Command::Sweep => commands::timed(&ctx, command.name(), commands::sweep),
        Command::Anomaly => commands::timed(&ctx, command.name(), commands::anomaly),
        Command::Models => commands::timed(&ctx, command.name(), commands::models),
        Command::Report => commands::report(&ctx),
    }
}
