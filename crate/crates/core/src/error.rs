use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("alternative ensemble unavailable: {0}")]
    EnsembleUnavailable(String),

    #[error("infeasible parameters: {reason} (max feasible {max_feasible})")]
    Infeasible { reason: String, max_feasible: f64 },

    #[error("copy budget exhausted: {used} of {budget} copies used")]
    BudgetExhausted { used: u64, budget: u64 },

    #[error("outcome {outcome} has vanishing probability under the null state")]
    UndefinedOutcome { outcome: String },

    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    #[error("transcript space of {size} exceeds limit {limit}")]
    TranscriptOverflow { size: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
