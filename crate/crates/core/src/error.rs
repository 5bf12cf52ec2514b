use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("series diverges: alpha = {alpha} must be < 2r - 1 = {limit}")]
    Divergent { alpha: String, limit: String },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no witnesses: {0}")]
    EmptyWitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
