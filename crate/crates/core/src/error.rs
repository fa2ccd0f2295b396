use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Octile map text could not be parsed.
    #[error("map parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A target could not be snapped to a free cell.
    #[error("target placement failed: {0}")]
    Placement(String),

    /// Scenario or campaign configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Task allocation was asked to decide over an empty candidate set.
    #[error("allocation over an empty candidate set")]
    EmptyAllocation,

    /// A single message larger than the whole per-step quota can never be sent.
    #[error("message of {size} bytes exceeds the {quota}-byte broadcast quota")]
    OversizedMessage { size: usize, quota: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
