use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("input is empty")]
    EmptyInput,

    #[error("malformed row at line {line}: expected {expected} cells, found {found}")]
    MalformedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("invalid cell `{value}` in column `{column}` at data row {row}")]
    InvalidCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("target column `IE` not found")]
    MissingTargetColumn,

    #[error("no answer columns (QnA) found")]
    MissingAnswerColumns,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid split ratio {0}; expected 0 < ratio < 1")]
    InvalidRatio(f64),

    #[error("class `{0}` would receive no training rows")]
    DegenerateClass(String),

    #[error("invalid fold count k={k} for n={n}")]
    InvalidK { k: usize, n: usize },

    #[error("requested k={k} neighbours but only {available} candidates exist")]
    KTooLarge { k: usize, available: usize },

    #[error("class `{0}` has fewer than 2 rows; cannot interpolate")]
    ClassTooSmall(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("n_shuffles must be at least 1")]
    InvalidShuffles,

    #[error("rankings cover different feature sets")]
    UniverseMismatch,

    #[error("unsupported model container version {0}")]
    UnsupportedVersion(u32),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
