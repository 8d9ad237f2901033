use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty file: {0}")]
    EmptyFile(PathBuf),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("unparseable cell `{value}` in column `{column}` at row {row} (declared {kind})")]
    UnparseableCell {
        column: String,
        row: usize,
        value: String,
        kind: &'static str,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient rows: {per_test} rows per test set, need at least {required}")]
    InsufficientRows { per_test: usize, required: usize },

    #[error("budget exhausted: all {budget} test sets have been used; new data must be collected")]
    BudgetExhausted { budget: usize },

    #[error("predicate on `{attribute}`: {reason}")]
    PredicateMismatch { attribute: String, reason: String },

    #[error("no variation: {0}")]
    NoVariation(String),

    #[error("undefined ratio: reference group proportion is zero")]
    UndefinedRatio,

    #[error("empty group `{0}`")]
    EmptyGroup(String),

    #[error("constant column `{0}`")]
    ConstantColumn(String),

    #[error("metric mismatch: {0}")]
    MetricMismatch(String),

    #[error("no stratum of `{attribute}` has at least {min_stratum} rows")]
    NoValidStratum { attribute: String, min_stratum: usize },

    #[error("unstable context: {degenerate} of {total} resamples were degenerate")]
    UnstableContext { degenerate: usize, total: usize },

    #[error("empty test context set: no candidate context has enough test rows")]
    EmptyTestSet,

    #[error("overlapping plants: {0}")]
    OverlappingPlants(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
