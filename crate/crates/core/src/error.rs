//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by data loading, model fitting and the experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration value (fraction out of range, invalid hyperparameter, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed input file; names the offending row/column where possible.
    #[error("input format error: {0}")]
    InputFormat(String),

    /// An invariant of a domain type does not hold.
    #[error("validation error: {0}")]
    Validation(String),

    /// Numeric domain violation (e.g. log return of a non-positive price).
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite or otherwise unusable data fed to an online update.
    #[error("data error: {0}")]
    Data(String),

    /// Dimension mismatch between vectors/matrices.
    #[error("shape error: {0}")]
    Shape(String),

    /// Not enough rows/columns for the requested operation.
    #[error("sizing error: {0}")]
    Sizing(String),

    /// A linear system could not be solved.
    #[error("solver error: {0}")]
    Solver(String),

    /// The prequential predict/resolve protocol was violated.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Degenerate statistical input (zero variance target, ...).
    #[error("selection error: {0}")]
    Selection(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
