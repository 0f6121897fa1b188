use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("datasets cannot be merged: {0}")]
    MergeMismatch(String),

    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("empty sequence")]
    EmptySequence,

    #[error("feature {feature} out of range (dataset has {n_features} features)")]
    FeatureOutOfRange { feature: usize, n_features: usize },

    #[error("no distance matrix available for feature {0}")]
    MissingMatrix(usize),

    #[error("stale cache in {dir}: {reason}")]
    StaleCache { dir: PathBuf, reason: String },

    #[error("corrupt cache file {path}: {reason}")]
    CorruptCache { path: PathBuf, reason: String },

    #[error("class {label:?} has {count} members, fewer than {n_folds} folds")]
    TooFewMembers {
        label: String,
        count: usize,
        n_folds: usize,
    },

    #[error("invalid fold assignment: {0}")]
    InvalidFolds(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty label vector")]
    EmptyLabels,

    #[error("invalid feature subset: {0}")]
    InvalidSubset(String),

    #[error("merit undefined for subset {subset:?}: radicand {radicand} is not positive")]
    NonPositiveRadicand { subset: Vec<usize>, radicand: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
