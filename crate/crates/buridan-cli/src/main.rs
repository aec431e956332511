//! Experiment runner for the switching-dynamics simulator.
//!
//! Subcommands: `simulate` (trajectories to CSV), `estimate` (parameter
//! reports from CSV inputs), `denoise` (filtered copies of observation
//! files), and `reproduce` (benchmark tables and figure data). Exit codes:
//! 0 success, 2 configuration error, 3 i/o error, 4 numerical failure.

mod commands;
mod config;
mod reproduce;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<buridan::Error> for CliError {
    fn from(e: buridan::Error) -> Self {
        match e {
            buridan::Error::Io(_) | buridan::Error::Csv(_) => CliError::Io(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "buridan",
    version,
    about = "Simulate switching piecewise-deterministic dynamics and estimate the hidden switching parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed list.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's step count.
    #[arg(long)]
    n_steps: Option<usize>,
    /// Override the config's noise level.
    #[arg(long)]
    noise_sigma: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.config.display())))?;
        let mut config = ExperimentConfig::from_json(&text)?;
        if let Some(seeds) = &self.seed {
            if seeds.is_empty() {
                return Err(CliError::Config("--seed list must be nonempty".into()));
            }
            config.seeds = seeds.clone();
        }
        if let Some(n_steps) = self.n_steps {
            config.n_steps = Some(n_steps);
        }
        if let Some(sigma) = self.noise_sigma {
            config.noise_sigma = sigma;
        }
        let out = self
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((config, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory per seed and write CSV files plus a manifest.
    Simulate(ConfigArgs),
    /// Estimate switching parameters from trajectory or observation CSVs.
    Estimate {
        #[command(flatten)]
        args: ConfigArgs,
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Denoise observation CSVs with the configured method.
    Denoise {
        #[command(flatten)]
        args: ConfigArgs,
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Regenerate a benchmark artifact: t1..t8, boxplots, surfaces,
    /// likelihood, or frequencies.
    Reproduce {
        /// Artifact identifier.
        table_id: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Benchmark scale instead of the desk-scale default.
        #[arg(long)]
        full: bool,
    },
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let (config, out) = args.load()?;
            commands::cmd_simulate(&config, &out)
        }
        Command::Estimate { args, inputs } => {
            let (config, out) = args.load()?;
            commands::cmd_estimate(&config, &inputs, &out)
        }
        Command::Denoise { args, inputs } => {
            let (config, out) = args.load()?;
            commands::cmd_denoise(&config, &inputs, &out)
        }
        Command::Reproduce {
            table_id,
            out,
            full,
        } => reproduce::cmd_reproduce(&table_id, &out, full),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
