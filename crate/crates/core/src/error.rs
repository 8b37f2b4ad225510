use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NdError {
    #[error("order relation contains a directed cycle through `{0}`")]
    Cycle(String),

    #[error("edge references undeclared label `{0}`")]
    UnknownLabel(String),

    #[error("{what}: size {size} exceeds the enumeration guard of {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("index {index} out of range for mode {mode} of length {len}")]
    IndexOutOfRange { mode: usize, index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("poset has a collider; cover-differencing inverse requires a forest order")]
    NotSimplicial,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("generators span a {rank}-dimensional subspace of R^{dim}; cone is not full-dimensional (lineality of the dual is {lineality})")]
    DegenerateCone {
        rank: usize,
        dim: usize,
        lineality: usize,
    },

    #[error("tensor has a negative entry {value} at flat index {index}")]
    NonNegativityViolated { index: usize, value: f64 },

    #[error("tensor has a non-positive entry {value} at flat index {index}")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("loss `{loss}` only supports rank 1 (got rank {rank})")]
    UnsupportedLossRank { loss: String, rank: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NdError {
    fn from(e: std::io::Error) -> Self {
        NdError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, NdError>;
