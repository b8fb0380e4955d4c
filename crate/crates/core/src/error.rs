use thiserror::Error;

/// Errors raised by the optimizers, the problem generator and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite decision variable at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("unsupported combination {class} + {base}; valid combinations: {valid}")]
    UnsupportedCombination {
        class: String,
        base: String,
        valid: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("evaluation budget exhausted ({used} of {limit} used, {requested} requested)")]
    BudgetExhausted {
        limit: u64,
        used: u64,
        requested: u64,
    },

    #[error("non-finite interaction difference for variables ({i}, {j})")]
    NonFiniteInteraction { i: usize, j: usize },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
