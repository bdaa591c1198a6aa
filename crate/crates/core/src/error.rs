use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("strict-mode parameter violation: {0}")]
    StrictModeViolation(String),
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{what} too large (limit {limit})")]
    TooLarge { what: &'static str, limit: usize },
    #[error("epsilon {0} out of range")]
    EpsilonOutOfRange(f64),
    #[error("weight {0} out of range")]
    WeightOutOfRange(f64),
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
    #[error("M is not good for the query set")]
    BadM,
    #[error("binomials have different trial counts ({0} vs {1})")]
    MismatchedSupport(u64, u64),
    #[error("degenerate success rate {0}")]
    DegenerateRate(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
