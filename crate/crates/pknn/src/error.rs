use std::path::PathBuf;

/// Unified error type for the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("invalid range: lo {lo} must not exceed hi {hi}")]
    InvalidRange { lo: i32, hi: i32 },

    #[error("index out of bounds: {0}")]
    IndexOutOfBounds(String),

    /// 32-bit accumulator overflow detected by a checked integer path.
    #[error("32-bit overflow in {context}")]
    Overflow { context: String },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("model format error at byte {offset}: {reason}")]
    ModelFormat { offset: u64, reason: String },

    #[error("{path}: format error: {reason}")]
    DataFormat { path: PathBuf, reason: String },

    #[error("{path}: truncated: expected {expected} bytes, got {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("empty dataset")]
    EmptyDataset,

    /// An operation required state (e.g. forward-pass caches) that is absent.
    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
