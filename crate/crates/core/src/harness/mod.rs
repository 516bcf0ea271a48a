//! Reproducible experiment runner and instance generators.

pub mod experiment;
pub mod generators;

use thiserror::Error;

pub use experiment::{run_experiment, ExperimentConfig, InstanceSpec, Mode, TrialReport};
pub use generators::{gen_clustered, gen_grid_injection, gen_hard_pair_1d};

/// Harness failures, split by the exit code the CLI reports for them.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Param(#[from] crate::error::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io(_) => 3,
            HarnessError::Parse(_) => 4,
            HarnessError::Param(_) => 5,
        }
    }
}
