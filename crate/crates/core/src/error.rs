use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invariant violation for `{label}`: {reason}")]
    InvariantViolation { label: String, reason: String },

    #[error("duplicate curve label `{0}`")]
    DuplicateLabel(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("LMFDB schema drift: field `{0}` missing from API response")]
    SchemaDrift(String),

    #[error("query returned no records")]
    EmptyResult,

    #[error("record `{label}` is missing feature `{feature}`")]
    MissingFeature { label: String, feature: String },

    #[error("feature `{feature}` must be positive, got {value}")]
    NonPositiveFeature { feature: String, value: f64 },

    #[error("no records with {field} = {value}")]
    EmptyClass { field: String, value: String },

    #[error("split leaves an empty side (n = {n}, test = {test})")]
    DegenerateSplit { n: usize, test: usize },

    #[error("invalid class spec: {0}")]
    InvalidClassSpec(String),

    #[error("record `{label}` has sha order {sha} outside the requested classes")]
    UnknownClass { label: String, sha: u64 },

    #[error("log transform of non-positive entry {value} at row {row}, column `{column}`")]
    NonPositiveEntry {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("design matrix is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("degenerate training data: {0}")]
    Degenerate(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("nothing to plot")]
    EmptyData,

    #[error("dataset has no a_p columns")]
    MissingApColumns,

    #[error("stratum `{0}` is empty")]
    EmptyStratum(String),

    #[error("invalid configuration: {0}")]
    Config(String),

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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
