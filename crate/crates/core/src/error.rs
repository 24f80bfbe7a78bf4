use thiserror::Error;

/// Errors produced by the certifier library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("ratio undefined: the first moment of the pattern vanishes")]
    UndefinedRatio,

    #[error("{samples} samples alias the order-{order} moment of a {dim}-level pattern (need more than {required})")]
    Aliasing {
        samples: usize,
        order: usize,
        dim: usize,
        required: usize,
    },

    #[error("pattern fit is rank deficient: {0}")]
    RankDeficient(String),

    #[error("point lies outside the constraint region: {0}")]
    Domain(String),

    #[error("not available: {0}")]
    Unavailable(String),

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

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
