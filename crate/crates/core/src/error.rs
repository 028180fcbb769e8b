use thiserror::Error;

use fraglearn_chem::ChemError;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Chem(#[from] ChemError),

    #[error("bond {0} is not cuttable")]
    InvalidCut(usize),

    #[error("invalid fragment key {key}: {reason}")]
    InvalidFragment { key: String, reason: String },

    #[error("format version mismatch: expected {expected}, found {found}")]
    FormatVersionMismatch { expected: u32, found: u32 },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed data in {path}: {message}")]
    Format { path: String, message: String },

    #[error("empty batch")]
    EmptyBatch,

    #[error("vocabulary is empty")]
    EmptyVocabulary,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown objective term '{0}'")]
    UnknownTerm(String),

    #[error("reasoner unavailable: {0}")]
    ReasonerUnavailable(String),

    #[error("reasoner response violates the feedback schema: {0}")]
    SchemaViolation(String),

    #[error("invalid feedback: {0}")]
    InvalidFeedback(String),

    #[error("round {0} is already open")]
    RoundAlreadyOpen(u32),

    #[error("round {0} not found")]
    UnknownRound(u32),

    #[error("round {0} is closed")]
    RoundClosed(u32),

    #[error("no round is open")]
    NoOpenRound,
}

impl CoreError {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CoreError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub(crate) fn format(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CoreError::Format { path: path.display().to_string(), message: err.to_string() }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
