use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },

    #[error("unsupported SMILES feature at position {position}: {feature}")]
    UnsupportedFeature { position: usize, feature: String },

    #[error("multi-component input ('.') is not supported")]
    MultiComponent,

    #[error("molecular graph is not connected")]
    Disconnected,

    #[error("invalid molecular graph: {0}")]
    InvalidGraph(String),

    #[error("fingerprint width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),

    #[error("unknown atom type for logP contribution: {0}")]
    UnknownAtomType(String),

    #[error("invalid logP table: {0}")]
    LogPTable(String),

    #[error("I/O error reading {path}: {message}")]
    Io { path: String, message: String },
}

impl ChemError {
    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> Self {
        ChemError::Syntax { position, message: message.into() }
    }

    pub(crate) fn valence(atom: usize, message: impl Into<String>) -> Self {
        ChemError::Valence { atom, message: message.into() }
    }

    pub(crate) fn unsupported(position: usize, feature: impl Into<String>) -> Self {
        ChemError::UnsupportedFeature { position, feature: feature.into() }
    }
}
