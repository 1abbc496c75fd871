use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index range [{lo}, {hi}] is reversed")]
    ReversedRange { lo: u64, hi: u64 },

    #[error("support index {index} outside matrix dimension {dim}")]
    SupportOutOfRange { index: u64, dim: usize },

    #[error("resource budget exceeded: needs {needed} units, budget is {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("selection failed at level {level}: {reason}")]
    Selection { level: usize, reason: String },

    #[error("{condition} violated at {at:?}: {detail}")]
    Violation { condition: String, at: Vec<u64>, detail: String },

    #[error("unbounded operator: {0}")]
    Unbounded(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn violation(condition: &str, at: Vec<u64>, detail: impl Into<String>) -> Self {
        Error::Violation {
            condition: condition.into(),
            at,
            detail: detail.into(),
        }
    }
}
