//! `nlkg`: spectrum, golden-rule rate, normal form, simulation and decay fits for a
//! radial nonlinear Klein-Gordon equation with one bound state.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlkg_core::Error;

use commands::Context;
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("config: {0}")]
    Config(String),
    #[error("trajectory file not found: {}", .0.display())]
    MissingTrajectory(PathBuf),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::SpectralAssumption { .. }) => 2,
            CliError::Core(Error::BorderlineResonance { .. } | Error::FrequencyWindow { .. } | Error::WeakResonance { .. }) => 3,
            CliError::Core(Error::TruncationOverflow(_)) => 4,
            CliError::Core(Error::BlowupDetected { .. }) => 5,
            CliError::MissingTrajectory(_) => 6,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nlkg", version, about = "Bound-state decay in a radial nonlinear Klein-Gordon equation")]
struct Cli {
    /// Sectioned key = value configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Permit horizons and fit windows past the boundary reflection time.
    #[arg(long, global = true)]
    allow_boundary: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of the radial operator and the resonance window.
    Spectrum,
    /// Golden-rule rate gamma.
    Fgr,
    /// Normal-form terms, resonant vector and homological residuals.
    Normalform,
    /// Integrate the field equation and fit the decay exponents.
    Simulate,
    /// Refit an existing trajectory.
    Fit {
        /// Trajectory CSV; defaults to trajectory.csv in the output directory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Measured against predicted exponents for an existing trajectory.
    Report {
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let seed = cfg.seed;
    let ctx = Context { cfg, out_dir: cli.out_dir, allow_boundary: cli.allow_boundary };
    match cli.command {
        Command::Spectrum => commands::spectrum(&ctx),
        Command::Fgr => commands::fgr(&ctx),
        Command::Normalform => commands::normalform(&ctx, seed),
        Command::Simulate => commands::simulate_cmd(&ctx),
        Command::Fit { trajectory } => commands::fit(&ctx, trajectory.as_deref()),
        Command::Report { trajectory } => commands::report(&ctx, trajectory.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
