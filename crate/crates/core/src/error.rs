use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("infeasible assignment: {0}")]
    Infeasible(String),

    #[error("invalid pairwise table: {0}")]
    InvalidPairwise(String),

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("matrix has a negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance has {m} elements, exceeding the enumeration cap of {cap}")]
    CapExceeded { m: usize, cap: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
