use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, unsupported shift/domain combinations, bad config files.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid point pattern: {0}")]
    InvalidPattern(String),

    /// Exact nearest-neighbour distance ties make the mutual-nearest-neighbour rule ambiguous.
    #[error("distance tie between points {a} and {b} (nearest-neighbour rule is ambiguous)")]
    DistanceTie { a: usize, b: usize },

    /// An operation was called on arguments outside its domain (e.g. points from different foils).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
