//! Experiment harness for the `augcg` solvers.
//!
//! Experiments are described by an [`ExperimentConfig`], either from a preset or a
//! small `key = value` file, and produce CSV traces with a fixed schema (see
//! [`output::HEADER`]).

pub mod config;
pub mod experiments;
pub mod methods;
pub mod output;
pub mod presets;

pub use config::{ExperimentConfig, ProblemConfig};
pub use experiments::{run_comparison, run_diagnostics, run_regpath, run_sampling, Outcome};
pub use methods::{MethodSpec, ThetaChoice};
pub use output::Row;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] augcg::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) | HarnessError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
