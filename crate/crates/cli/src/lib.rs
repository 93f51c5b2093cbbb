//! Batch front end for the kmslab experiments: config parsing, one subcommand
//! per experiment suite, CSV/JSON/gnuplot emission and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

use kmslab_core::Error;

/// Process exit status.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const CRITERION_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const NUMERICAL: u8 = 3;
}

#[derive(Debug)]
pub enum CliError {
    /// Bad config key or value, or an infeasible size.
    Config(String),
    Io(String),
    /// Non-convergence or a numerical breakdown.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => exit::USAGE,
            CliError::Numerical(_) => exit::NUMERICAL,
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

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidLattice(_)
            | Error::SiteOutOfRange { .. }
            | Error::TooManySites(..)
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::Unsupported(_)
            | Error::Precondition(_)
            | Error::Budget(_) => CliError::Config(e.to_string()),
            Error::NotFaithful(_)
            | Error::InvalidState(_)
            | Error::StepTooLarge { .. }
            | Error::Unattainable(_)
            | Error::Overflow(_)
            | Error::Linalg(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
