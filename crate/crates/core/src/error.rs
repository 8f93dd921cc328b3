use std::path::PathBuf;

use morphlem_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed feature `{0}`: expected Key=Value")]
    MalformedFeature(String),

    #[error("invalid number of folds {kappa} for {sentences} sentences")]
    InvalidFolds { kappa: usize, sentences: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("{what} out of range: {value} not in [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("length mismatch: {what} has {left} items but {right} were expected")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{0} is undefined")]
    Undefined(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
