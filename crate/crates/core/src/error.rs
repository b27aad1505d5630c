//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {msg}")]
    Csv { path: PathBuf, msg: String },

    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("label column '{0}' not found in header")]
    MissingLabelColumn(String),

    #[error("label value '{0}' is outside the declared label sets")]
    UnknownLabel(String),

    #[error("feature '{0}' has no observed values to impute from")]
    AllMissing(String),

    #[error("all features are constant; no usable features remain")]
    AllConstant,

    #[error("zero standard deviation in feature {0}; drop constant features first")]
    ZeroSigma(usize),

    #[error("cannot partition {n} samples among {clients} clients")]
    PartitionTooSmall { n: usize, clients: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty update set")]
    EmptyUpdates,

    #[error("duplicate client id {0}")]
    DuplicateClient(usize),

    #[error("{rule} requires {bound}; got M={clients}, f={byzantine}")]
    ByzantineBound {
        rule: &'static str,
        bound: &'static str,
        clients: usize,
        byzantine: usize,
    },

    #[error("trim count {k} too large for {clients} clients (need 2k < M)")]
    TrimTooLarge { k: usize, clients: usize },

    #[error("unknown aggregation rule '{name}'; available: {available}")]
    UnknownRule { name: String, available: String },

    #[error("unknown client id {0} in reputation update")]
    UnknownClient(usize),

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("ROC AUC undefined: labels contain a single class")]
    SingleClassAuc,

    #[error("paired t-test requires n >= 2, got {0}")]
    TooFewSamples(usize),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
