//! Dataset generation, training, planning and the paper-style experiments
//! behind the `spnplan` binary.
//!
//! Every command is deterministic given the configuration and master seed,
//! except for wall-clock columns (`*_seconds`) and solver node counts.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod seeds;
pub mod split;

pub use config::ExperimentConfig;

use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration (exit 2).
    Usage(String),
    /// A planner found no design satisfying the constraint (exit 3).
    Infeasible(String),
    /// Anything else (exit 4).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
