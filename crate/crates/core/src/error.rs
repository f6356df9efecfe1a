//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by the numerics, loss, training, clustering, metric and
/// data layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of two operands do not agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument violates a precondition (empty batch, bad index, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is rejected before any work starts.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A file does not follow the expected binary or text format.
    #[error("format error: {0}")]
    Format(String),

    /// A fine-label to group mapping does not cover the data.
    #[error("mapping error: {0}")]
    Mapping(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {detail}")]
    TrainingDiverged { epoch: usize, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
