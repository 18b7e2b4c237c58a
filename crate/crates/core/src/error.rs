use thiserror::Error;

/// Errors surfaced by the library. Adversarial corruption is never an error;
/// it only ever produces wrong-but-well-formed data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed protocol DAG: {0}")]
    InvalidDag(String),
    #[error("input of {len} bits exceeds the hash input length {max}")]
    InputTooLong { len: usize, max: usize },
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: u64, len: u64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("channel schedule desynchronised: {0}")]
    ScheduleDesync(String),
    #[error("channel hook failed: {0}")]
    Hook(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
