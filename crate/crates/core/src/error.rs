use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible allocation: {0}")]
    InfeasibleAllocation(String),

    #[error("state space too large: {size} feasible states exceed the limit of {limit}")]
    StateSpaceTooLarge { size: u128, limit: usize },

    #[error("numerical failure: {message} (residual {residual:e})")]
    NumericalFailure { message: String, residual: f64 },

    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::InfeasibleAllocation(_)
            | Error::Parse { .. }
            | Error::Validation(_) => 2,
            Error::NumericalFailure { .. } => 3,
            Error::StateSpaceTooLarge { .. } => 4,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InfeasibleAllocation(_) => "infeasible_allocation",
            Error::StateSpaceTooLarge { .. } => "state_space_too_large",
            Error::NumericalFailure { .. } => "numerical_failure",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
