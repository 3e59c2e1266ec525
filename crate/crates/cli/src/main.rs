//! `eigenmotion`: follow and analyze eigenvalue motion from the command line.

mod commands;
mod config;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eigenmotion_core::Error;
use serde_json::json;

use config::{Command, ExperimentConfig, Settings};

#[derive(Parser)]
#[command(name = "eigenmotion", version, about = "Eigenvalue motion of smoothly varying real matrices")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Track eigenvalues along a path; writes CSV, events JSON and an optional SVG.
    Simulate(Settings),
    /// Velocity and force decomposition at one time.
    Forces(Settings),
    /// Expected forces and variances under random impulses, with a Monte-Carlo check.
    Expect(Settings),
    /// Real-eigenvalue counts over a random ensemble.
    Census(Settings),
    /// Tabulate the smoothing window and its derivative.
    Window(Settings),
    /// Hatano-Nelson spectrum as a function of g.
    Hn(Settings),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    fn detail(&self) -> serde_json::Value {
        match self {
            Self::Config(msg) => json!({ "error": "config", "message": msg }),
            Self::Io(msg) => json!({ "error": "io", "message": msg }),
            Self::Numerical(e) => {
                let t = match (e, e.root()) {
                    (Error::AtTime { t, .. }, _) | (_, Error::MatchingAmbiguous { t, .. }) => Some(*t),
                    _ => None,
                };
                json!({
                    "error": "numerical",
                    "kind": error_kind(e.root()),
                    "message": e.to_string(),
                    "t": t,
                })
            }
        }
    }
}

impl From<Error> for CliError {
    /// Parameter and input errors are configuration problems; the rest are
    /// numerical failures.
    fn from(e: Error) -> Self {
        match e.root() {
            Error::InvalidDimension { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidWindow(_)
            | Error::NonMonotoneGrid(_)
            | Error::OutOfDomain { .. }
            | Error::InvalidParams(_)
            | Error::Format(_) => Self::Config(e.to_string()),
            _ => Self::Numerical(e),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidDimension { .. } => "InvalidDimension",
        Error::DimensionMismatch { .. } => "DimensionMismatch",
        Error::NonFinite { .. } => "NonFinite",
        Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
        Error::IllConditionedBasis { .. } => "IllConditionedBasis",
        Error::UnpairedEigenvalue { .. } => "UnpairedEigenvalue",
        Error::SolverFailure => "SolverFailure",
        Error::RealEigenvalue { .. } => "RealEigenvalue",
        Error::NotCirculant { .. } => "NotCirculant",
        Error::NotNormal { .. } => "NotNormal",
        Error::DivisionByZero => "DivisionByZero",
        Error::InvalidWindow(_) => "InvalidWindow",
        Error::NonMonotoneGrid(_) => "NonMonotoneGrid",
        Error::OutOfDomain { .. } => "OutOfDomain",
        Error::InvalidParams(_) => "InvalidParams",
        Error::MatchingAmbiguous { .. } => "MatchingAmbiguous",
        Error::AtTime { .. } => "AtTime",
        Error::Format(_) => "Format",
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, settings) = match cli.command {
        Cmd::Simulate(s) => (Command::Simulate, s),
        Cmd::Forces(s) => (Command::Forces, s),
        Cmd::Expect(s) => (Command::Expect, s),
        Cmd::Census(s) => (Command::Census, s),
        Cmd::Window(s) => (Command::Window, s),
        Cmd::Hn(s) => (Command::Hn, s),
    };
    let cfg = ExperimentConfig::resolve(command, settings.layered()?)?;
    if cfg.seed_generated {
        eprintln!("seed: {}", cfg.seed);
    }
    if let Some(k) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    commands::prepare_outputs(&cfg)?;
    match command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Forces => commands::forces(&cfg),
        Command::Expect => commands::expect(&cfg),
        Command::Census => commands::census(&cfg),
        Command::Window => commands::window(&cfg),
        Command::Hn => commands::hn(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.detail());
            ExitCode::from(e.exit_code())
        }
    }
}
