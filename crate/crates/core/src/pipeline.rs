//! End-to-end runs: distance matrices (cached or computed), folds, subset
//! enumeration and the selection strategies.

use std::time::Duration;

use serde::Serialize;

use crate::cache::{CacheKey, DistanceCache};
use crate::dataset::Dataset;
use crate::dtw::{build_distance_matrix, DistanceMatrix, DtwConfig};
use crate::error::{Error, Result};
use crate::knn_cv::{make_folds, FoldAssignment};
use crate::merit::{enumerate_subsets, FeatureSubset};
use crate::selection::{
    exhaustive, merit_phase, strategy1, strategy2, timed, EvalContext, MeritRun, SelectionConfig,
    SelectionResult, Strategy,
};

/// Where a feature's distance matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixSource {
    Cache,
    Computed,
}

#[derive(Debug, Clone)]
pub struct PreparedMatrices {
    pub matrices: Vec<DistanceMatrix>,
    pub sources: Vec<MatrixSource>,
    pub elapsed: Duration,
}

impl PreparedMatrices {
    pub fn computed(&self) -> usize {
        self.sources
            .iter()
            .filter(|&&s| s == MatrixSource::Computed)
            .count()
    }

    pub fn loaded(&self) -> usize {
        self.sources
            .iter()
            .filter(|&&s| s == MatrixSource::Cache)
            .count()
    }
}

/// Loads every feature's matrix from `cache` when valid, otherwise
/// computes and stores it. Stale or corrupt entries are recomputed.
/// `progress` is called once per feature.
pub fn prepare_matrices(
    dataset: &Dataset,
    dtw: DtwConfig,
    cache: Option<&DistanceCache>,
    mut progress: impl FnMut(usize, MatrixSource),
) -> Result<PreparedMatrices> {
    if let Some(cache) = cache {
        if cache.key() != &CacheKey::new(dataset, dtw) {
            return Err(Error::InvalidArgument(
                "cache key does not describe this dataset and DTW configuration".into(),
            ));
        }
    }
    let (out, elapsed) = timed(|| -> Result<_> {
        let mut matrices = Vec::with_capacity(dataset.n_features());
        let mut sources = Vec::with_capacity(dataset.n_features());
        for f in 0..dataset.n_features() {
            let cached = match cache.map(|c| c.load(f)) {
                Some(Ok(m)) => Some(m),
                Some(Err(Error::StaleCache { .. } | Error::CorruptCache { .. })) | None => None,
                Some(Err(e)) => return Err(e),
            };
            let (m, source) = match cached {
                Some(m) => (m, MatrixSource::Cache),
                None => {
                    let m = build_distance_matrix(dataset, f, dtw)?;
                    if let Some(cache) = cache {
                        cache.store(&m)?;
                    }
                    (m, MatrixSource::Computed)
                }
            };
            progress(f, source);
            matrices.push(m);
            sources.push(source);
        }
        Ok((matrices, sources))
    });
    let (matrices, sources) = out?;
    Ok(PreparedMatrices {
        matrices,
        sources,
        elapsed,
    })
}

/// A dataset with its matrices, folds and enumerated subsets, ready for
/// the strategies.
#[derive(Debug, Clone)]
pub struct Experiment {
    dataset: Dataset,
    truth: Vec<u32>,
    matrices: Vec<DistanceMatrix>,
    folds: FoldAssignment,
    subsets: Vec<FeatureSubset>,
    config: SelectionConfig,
    enumeration_time: Duration,
}

impl Experiment {
    /// `config.max_k` is capped at the feature count.
    pub fn new(
        dataset: Dataset,
        matrices: Vec<DistanceMatrix>,
        config: SelectionConfig,
    ) -> Result<Self> {
        if matrices.len() != dataset.n_features()
            || matrices
                .iter()
                .enumerate()
                .any(|(f, m)| m.feature() != f || m.n() != dataset.len())
        {
            return Err(Error::InvalidArgument(
                "need one distance matrix per feature, in feature order".into(),
            ));
        }
        if dataset.n_features() == 0 {
            return Err(Error::InvalidDataset("dataset has no features".into()));
        }
        let config = SelectionConfig {
            max_k: config.max_k.min(dataset.n_features()),
            ..config
        };
        let truth = dataset.label_codes();
        let folds = make_folds(&dataset, config.n_folds, config.seed)?;
        let (subsets, enumeration_time) =
            timed(|| enumerate_subsets(dataset.n_features(), config.max_k));
        Ok(Self {
            dataset,
            truth,
            matrices,
            folds,
            subsets: subsets?,
            config,
            enumeration_time,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn truth(&self) -> &[u32] {
        &self.truth
    }

    pub fn matrices(&self) -> &[DistanceMatrix] {
        &self.matrices
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    pub fn subsets(&self) -> &[FeatureSubset] {
        &self.subsets
    }

    pub fn config(&self) -> SelectionConfig {
        self.config
    }

    pub fn enumeration_time(&self) -> Duration {
        self.enumeration_time
    }

    pub fn context(&self) -> EvalContext<'_> {
        EvalContext {
            truth: &self.truth,
            matrices: &self.matrices,
            folds: &self.folds,
            config: self.config,
        }
    }

    pub fn merit(&self) -> Result<MeritRun> {
        merit_phase(&self.context(), &self.subsets)
    }

    /// Runs one strategy from scratch, including its own merit phase.
    pub fn run(&self, strategy: Strategy) -> Result<(SelectionResult, Option<MeritRun>)> {
        let ctx = self.context();
        match strategy {
            Strategy::Merit => {
                let run = self.merit()?;
                Ok((strategy1(&run, &ctx)?, Some(run)))
            }
            Strategy::MeritWrapper => {
                let run = self.merit()?;
                Ok((strategy2(&run, self.config.top_frac, &ctx)?, Some(run)))
            }
            Strategy::Exhaustive => Ok((exhaustive(&self.subsets, &ctx)?, None)),
        }
    }
}

/// Builds a rayon pool with `jobs` workers, or the default size.
pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidArgument(
                "worker count must be positive".into(),
            ));
        }
        builder = builder.num_threads(j);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}
