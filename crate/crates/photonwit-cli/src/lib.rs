//! Library behind the `photonwit` binary: configuration handling and the
//! five operations it exposes (sweep, verdict, certify, extract, sample).
//!
//! Process exit codes are part of the interface:
//!
//! * 0 — success (for `verdict`: entanglement witnessed);
//! * 1 — usage, configuration, or I/O errors;
//! * 2 — a check failed: certificate audit violation, or a verdict of
//!   not-witnessed;
//! * 3 — the deciding bound's solver failed to produce a certified value.

pub mod certify;
pub mod config;
pub mod extract;
pub mod pipeline;
pub mod sweep;
pub mod verdict;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    CheckFailed(String),
    #[error("solver: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::CheckFailed(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}
