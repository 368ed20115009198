//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: left {left:?}, right {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("masked softmax requires at least one unmasked entry")]
    EmptyMask,
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidDropoutRate(f64),
    #[error("backward requires a scalar loss node, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("non-finite gradient for parameter {0}; training step rejected")]
    NonFiniteGradient(String),
    #[error("non-finite loss at step {0}; aborting")]
    NonFiniteLoss(usize),
    #[error("{path}:{line}: {msg}")]
    MalformedRecord {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid document {doc_key}: {msg}")]
    InvalidDocument { doc_key: String, msg: String },
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error("gold antecedent set references a span outside the candidate set")]
    GoldOutsideCandidates,
    #[error("doc_key mismatch between gold and system files: {0:?}")]
    DocKeyMismatch(Vec<String>),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
