//! Command-line front end: reads a model config, runs one analysis and
//! writes plot-ready tables.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ModelConfig;
pub use output::{Cell, Format, Sink, Table};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "SPIKELAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] spikelab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spikelab", version, about = "Spiked sample covariance spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Model config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for output files; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Support of the limiting law, increasing stretches of psi and psi samples.
    Support(Common),
    /// Classification, ranks and limits of every spike.
    Predict(Common),
    /// Monte Carlo eigenvalues, per-rank summaries and zoom histograms.
    Simulate(Common),
    /// Analytic and Monte Carlo consistency checks; exit status 1 on failure.
    Verify(Common),
    /// Fluctuation scales and, with finite sizes, a normality report.
    Clt(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Support(c)
            | Command::Predict(c)
            | Command::Simulate(c)
            | Command::Verify(c)
            | Command::Clt(c) => c,
        }
    }
}

/// Outcome of a successful invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ChecksFailed,
}

pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let common = cli.command.common();
    let mut cfg = ModelConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.reps = reps;
    }
    let sink = Sink {
        dir: common.out.clone(),
        format: common.format,
    };
    let (tables, outcome) = match &cli.command {
        Command::Support(_) => (commands::support(&cfg)?, Outcome::Ok),
        Command::Predict(_) => (commands::predict(&cfg)?, Outcome::Ok),
        Command::Simulate(_) => (commands::simulate(&cfg)?, Outcome::Ok),
        Command::Verify(_) => commands::verify(&cfg)?,
        Command::Clt(_) => (commands::clt(&cfg)?, Outcome::Ok),
    };
    sink.emit(&tables)?;
    Ok(outcome)
}
