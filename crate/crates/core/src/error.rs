use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A validated type rejected its input. `invariant` names the violated rule.
    #[error("invalid state: {invariant} violated ({detail})")]
    InvalidState {
        invariant: &'static str,
        detail: String,
    },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("state file: {0}")]
    StateFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
