use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weights sum to {sum}, expected 1 (tolerance {tol})")]
    Normalization { sum: f64, tol: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("sample budget of {budget} draws exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("external sample stream exhausted after {taken} draws")]
    StreamExhausted { taken: u64 },
    #[error("flow solver failure: {0}")]
    SolverFailure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("support error: {0}")]
    Support(String),
}

pub type Result<T> = std::result::Result<T, Error>;
