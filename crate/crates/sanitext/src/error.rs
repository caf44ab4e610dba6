//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors produced by sanitization mechanisms, scorers, and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A mechanism or accountant parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two vectors that must agree in length do not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A text file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A scorer call failed at a specific decode step.
    #[error("scorer failed at step {step}: {source}")]
    ScorerAt {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// A remote scorer did not answer within the configured deadline.
    #[error("network timeout talking to scorer endpoint")]
    NetworkTimeout,

    /// The remote endpoint serves a different vocabulary than the client holds.
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    /// The remote endpoint answered with a payload that violates the protocol.
    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
