//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by sqnkit operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two vectors that must share a length (or a dimension) do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A NaN or infinity showed up where the numeric contract forbids it.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Batch sampling was asked for something impossible.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// A sample index fell outside the dataset.
    #[error("index {index} out of range for dataset of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// A zero-length step; the caller should skip the curvature pair.
    #[error("degenerate step: ||s|| is numerically zero")]
    DegenerateStep,

    /// Dataset text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A label outside {-1, +1}.
    #[error("label error at line {line}: expected -1 or +1, got {value}")]
    Label { line: usize, value: String },

    /// A step-size schedule violated the random-output precondition.
    #[error("schedule error at step {k}: {message}")]
    Schedule { k: usize, message: String },

    /// Experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A required data or trace file is missing or unusable.
    #[error("data error for {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
