use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be at least 1, got {value}")]
    InvalidDimension { what: &'static str, value: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// Batch feature count does not match the model's input dimension.
    #[error("dimension mismatch: model expects {expected} input features, batch has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("leaky_relu alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),

    #[error("unknown activation `{0}` (expected one of sigmoid, relu, leaky_relu, tanh, softmax)")]
    UnknownActivation(String),

    #[error("unknown dispatch mode `{0}` (expected corrected or paper_compat)")]
    UnknownDispatchMode(String),

    #[error("unknown scaling `{0}` (expected none, minmax or standard)")]
    UnknownScaling(String),

    #[error("unknown built-in model `{0}` (available: iris-8, iris-6)")]
    UnknownModel(String),

    #[error("model document syntax error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("model failed validation:\n{0}")]
    Validation(ValidationReport),

    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("label at index {index} is {value}, expected 0 or 1")]
    NonBinaryLabel { index: usize, value: u8 },

    #[error("length mismatch: {expected} actual labels vs {actual} predicted labels")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("binary prediction needs a single output unit, final layer has {0}")]
    MultiUnitOutput(usize),

    #[error("threshold must be within [0, 1], got {0}")]
    InvalidThreshold(f64),
}
