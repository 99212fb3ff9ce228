//! `fracplasma`: solve, sweep, rescale, sample and validate ground states.
//!
//! Exit codes: 0 success, 1 usage or regime error, 2 nonconvergence,
//! 3 validation failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

/// Outcome of a command that did not succeed, mapped onto the exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    NonConvergence(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::NonConvergence(m) | Failure::Validation(m) => m,
        }
    }
}

impl From<fracplasma::Error> for Failure {
    fn from(err: fracplasma::Error) -> Self {
        match err {
            fracplasma::Error::NonConvergence { .. }
            | fracplasma::Error::LinearSolve(_)
            | fracplasma::Error::NoGroundState(_)
            | fracplasma::Error::Numeric { .. } => Failure::NonConvergence(err.to_string()),
            fracplasma::Error::Domain(_) | fracplasma::Error::Regime(_) => {
                Failure::Usage(err.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
