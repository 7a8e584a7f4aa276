use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

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

    #[error("header mismatch: missing columns [{}], unexpected columns [{}]", missing.join(", "), unexpected.join(", "))]
    HeaderMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },

    #[error("no usable rows in {0} ({1} dropped)")]
    NoUsableRows(PathBuf, usize),

    #[error("value {value} of attribute {attribute} at row {row} lies outside every bin")]
    OutsideBins {
        attribute: String,
        row: usize,
        value: f64,
    },

    #[error("invalid discretization for {attribute}: {reason}")]
    Discretization { attribute: String, reason: String },

    #[error("age {age} at row {row} leaves no heart-rate reserve (220 - age <= 0)")]
    DegenerateAge { row: usize, age: f64 },

    #[error("missing attribute {0}")]
    MissingAttribute(String),

    #[error("attribute {0} is not categorical yet")]
    NotCategorical(String),

    #[error("contingency table: {0}")]
    Contingency(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid mining parameters: {0}")]
    InvalidParams(String),

    #[error("invalid privacy parameters: {0}")]
    InvalidPrivacy(String),

    #[error("randomized response estimator undefined when keep and flip probabilities coincide")]
    DegenerateChannel,

    #[error("no client models to merge")]
    NoClients,

    #[error("unknown {kind} strategy `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("rule model parse error at line {line}: {reason}")]
    ModelParse { line: usize, reason: String },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("config error at {location}: {reason}")]
    Config { location: String, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(location: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from a malformed invocation or configuration
    /// rather than from the data being processed.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::UnknownStrategy { .. }
                | Error::InvalidParams(_)
                | Error::InvalidPrivacy(_)
                | Error::InvalidSplit(_)
        )
    }
}
