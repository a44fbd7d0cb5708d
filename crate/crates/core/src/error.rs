use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("integrity error: duplicate observation for entity `{entity}` in year {year}")]
    DuplicateObservation { entity: String, year: i32 },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("non-positive value {value} for `{variable}` at ({entity}, {year}); log undefined")]
    NonPositive {
        variable: String,
        entity: String,
        year: i32,
        value: f64,
    },

    #[error("insufficient observations: {0}")]
    InsufficientData(String),

    #[error("rank-deficient design, collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dataset fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("I/O error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
