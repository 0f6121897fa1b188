//! Merit-score feature subset selection for multivariate time-series
//! classification.
//!
//! Each feature (dimension) gets a 1-NN-DTW classifier evaluated by
//! cross-validation. The out-of-fold predictions are compared with the true
//! labels and with each other using adjusted mutual information, and a
//! CFS-style merit combines those correlations into a score per feature
//! subset. High-merit subsets are then picked directly or checked with a
//! small wrapper search instead of evaluating every subset.

pub mod cache;
pub mod dataset;
pub mod dtw;
mod error;
pub mod infotheory;
pub mod knn_cv;
pub mod merit;
pub mod pipeline;
pub mod report;
pub mod selection;

pub use dataset::{
    load_csv, load_ts, load_ts_split, parse_ts, CsvLayout, CsvSchema, Dataset, Sample, Summary,
};
pub use dtw::{build_distance_matrix, dtw_distance, dtw_distance_with, DistanceMatrix, DtwConfig};
pub use error::{Error, Result};
pub use infotheory::{
    ami, entropy, expected_mi, joint_entropy, mutual_information, ContingencyTable,
};
pub use knn_cv::{
    accuracy, cv_predict, make_folds, subset_distance, FoldAssignment, PredictionVector,
};
pub use merit::{
    build_correlations, enumerate_subsets, merit_score, score_all, CorrelationTable, FeatureSubset,
    MeritScore,
};
pub use pipeline::{prepare_matrices, Experiment};
pub use selection::{
    exhaustive, strategy1, strategy2, timed, SelectionConfig, SelectionResult, Strategy,
    SubsetEvaluation,
};
