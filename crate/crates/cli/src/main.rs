//! `friedrichs` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 hypothesis validation
//! failure, 4 numerical failure, 1 I/O failure while writing results.

// Negated comparisons reject NaN in configuration values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::EvolveMethod;

#[derive(Debug, Parser)]
#[command(
    name = "friedrichs",
    version,
    about = "Self-energies, modes and dynamics of multi-atom Friedrichs-Lee models"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative tolerance for quadrature and time integration.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Self-energy matrices at complex points or real energies.
    Sigma {
        /// Also evaluate by direct quadrature and report the discrepancy.
        #[arg(long)]
        cross_check: bool,
    },
    /// Bound states and resonances.
    Modes {
        /// Keep only the real-pole terms at real energy.
        #[arg(long)]
        neglect_corrections: bool,
    },
    /// Eigenvalue branches of the phase matrix over a momentum range.
    PhaseSweep,
    /// Survival amplitude of an initial excitation.
    Evolve {
        #[arg(long, value_enum)]
        method: Option<EvolveMethod>,
    },
    /// Hypothesis checks and quick invariants for a model.
    Check,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Hypothesis(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Hypothesis(m) => write!(f, "hypothesis validation failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<friedrichs::Error> for CliError {
    fn from(e: friedrichs::Error) -> Self {
        match e {
            friedrichs::Error::HypothesisViolated { .. } => CliError::Hypothesis(e.to_string()),
            ref other if other.is_numerical() => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Result of a command: the rendered output and whether it reports a
/// failure that still warrants writing it (failed checks).
pub struct Output {
    pub body: String,
    pub failure: Option<CliError>,
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config("--tol must be positive".into()));
        }
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = config::parse(&text)?;
    let ctx = commands::Context { format: cli.format, tol: cli.tol };
    match &cli.command {
        Command::Sigma { cross_check } => commands::sigma(&cfg, &ctx, *cross_check),
        Command::Modes { neglect_corrections } => commands::modes(&cfg, &ctx, *neglect_corrections),
        Command::PhaseSweep => commands::phase_sweep(&cfg, &ctx),
        Command::Evolve { method } => commands::evolve(&cfg, &ctx, *method),
        Command::Check => commands::check(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &out.body).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{}", out.body);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(e.code());
    }
    match out.failure {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
        None => ExitCode::SUCCESS,
    }
}
