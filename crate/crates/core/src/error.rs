use thiserror::Error;

/// Errors produced by schedule construction, procedure evaluation and the
/// Monte-Carlo harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("p-value at position {index} is {value}, outside [0, 1]")]
    InvalidPValue { index: usize, value: f64 },

    #[error("p-value set must contain at least one value")]
    EmptyInput,

    #[error("schedule holds {schedule} critical values but the data set has {data} p-values")]
    LengthMismatch { schedule: usize, data: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schedule construction failed: {0}")]
    Schedule(String),

    #[error("estimator contract violated: {0}")]
    Contract(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
