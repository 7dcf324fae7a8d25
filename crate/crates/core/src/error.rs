use std::path::PathBuf;

use chrono::NaiveDateTime;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp `{value}`")]
    BadTimestamp { row: usize, value: String },
    #[error("row {row}: cannot parse value `{value}`")]
    BadValue { row: usize, value: String },
    #[error("row {row}: timestamp {found} is not after {previous}")]
    NonMonotone {
        row: usize,
        previous: NaiveDateTime,
        found: NaiveDateTime,
    },
    #[error("row {row}: timestamp {found} is not one hour after {previous}")]
    IrregularSpacing {
        row: usize,
        previous: NaiveDateTime,
        found: NaiveDateTime,
    },
    #[error("first value is missing and has no predecessor to fill from")]
    LeadingMissing,
    #[error("every value in the series is missing")]
    AllMissing,
    #[error("{0} missing values remain after preprocessing")]
    MissingRemain(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate scale: every value equals {0}")]
    DegenerateScale(f64),
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("optimizer found no stationary and invertible point within {0} iterations")]
    Infeasible(usize),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
