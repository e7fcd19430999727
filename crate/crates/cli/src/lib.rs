//! Command-line front end for the effective-dimension toolkit: calculators
//! for the heterodyne and DPS bounds, the dimension planner, security-label
//! arithmetic, and the randomized brute-force verifiers, all with
//! machine-readable JSON/CSV output.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation error, 3 a
//! randomized verifier found a counterexample (the offending seed is
//! printed).

pub mod args;
pub mod commands;
pub mod report;

use clap::Parser;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Heterodyne(#[from] effdim::heterodyne::HeterodyneError),
    #[error(transparent)]
    Dps(#[from] effdim::dps::DpsError),
    #[error(transparent)]
    Budget(#[from] effdim::budget::BudgetError),
    #[error(transparent)]
    Hilbert(#[from] effdim::hilbert::HilbertError),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Output(String),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

/// Outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// A verifier completed but found at least one counterexample.
    CounterexampleFound,
}

/// Exit code for a finished run: 0 clean, 2 computation error, 3 a verifier
/// found a counterexample.
pub fn exit_code_for(result: &Result<Outcome, CliError>) -> i32 {
    match result {
        Ok(Outcome::Clean) => 0,
        Ok(Outcome::CounterexampleFound) => 3,
        Err(_) => 2,
    }
}

/// Parse argv and execute, translating every termination into the
/// documented exit code.
pub fn main_with_exit_code() -> i32 {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = commands::execute(cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code_for(&result)
}
