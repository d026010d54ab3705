use thiserror::Error;

use crate::ifs::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate rotation parameter: |a| must be < 2, got {0}")]
    DegenerateRotation(String),
    #[error("not expanding: det M = {0} must exceed 1")]
    NotExpanding(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid IFS: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("record id mismatch: stored {stored}, recomputed {computed}")]
    HashMismatch { stored: String, computed: String },
    #[error("family exhausted: {0}")]
    FamilyExhausted(String),
    #[error("no valid mutation exists")]
    Stuck,
    #[error("unknown vertex n{0}")]
    UnknownVertex(usize),
    #[error("undefined for disconnected attractors")]
    Disconnected,
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid render request: {0}")]
    Render(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
