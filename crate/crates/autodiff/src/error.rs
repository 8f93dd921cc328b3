use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("output node {node} has shape {shape:?}, expected a scalar")]
    NonScalarOutput { node: usize, shape: Vec<usize> },

    #[error("non-finite value produced by node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },

    #[error("shape mismatch for {what}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        what: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("dimension mismatch at position {position}: expected {expected}, got {actual}")]
    DimensionMismatch {
        position: usize,
        expected: usize,
        actual: usize,
    },

    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidDropoutRate(f64),
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
