use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry too large: refinement {0} exceeds the cap of {max}", max = crate::cluster::MAX_REFINEMENT)]
    GeometryTooLarge(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("value {value} at index {index} overflows the 8-bit exponent format")]
    Overflow { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
