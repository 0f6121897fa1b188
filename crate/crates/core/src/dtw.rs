//! Dynamic time warping and per-feature pairwise distance matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Tag recorded in cache manifests for the pointwise cost in use.
pub const COST_TAG: &str = "squared-difference";

/// DTW settings. The default is unconstrained warping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DtwConfig {
    /// Sakoe-Chiba band half-width. `None` disables the constraint.
    pub band: Option<usize>,
}

impl DtwConfig {
    pub fn with_band(band: usize) -> Self {
        Self { band: Some(band) }
    }
}

/// Unconstrained DTW with squared-difference cost and no final square root.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    dtw_distance_with(a, b, DtwConfig::default())
}

/// DTW under `config`. A band narrower than the length difference is
/// widened to it so that a warping path always exists.
pub fn dtw_distance_with(a: &[f64], b: &[f64], config: DtwConfig) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    // Iterate over the longer series in the outer loop so the rows are short.
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let band = config
        .band
        .map(|w| w.max(outer.len() - inner.len()))
        .unwrap_or(usize::MAX);

    let cols = inner.len();
    let mut prev = vec![f64::INFINITY; cols + 1];
    let mut curr = vec![f64::INFINITY; cols + 1];
    prev[0] = 0.0;
    for (i, &x) in outer.iter().enumerate() {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(band);
        let hi = i.saturating_add(band).min(cols - 1);
        for j in lo..=hi {
            let d = x - inner[j];
            let best = prev[j].min(prev[j + 1]).min(curr[j]);
            curr[j + 1] = d * d + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[cols])
}

/// Symmetric `N x N` matrix of DTW distances for one feature, stored
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    feature: usize,
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps row-major values, checking the matrix invariants.
    pub fn from_values(feature: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "distance matrix diagonal entry {i} is not zero"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "distance matrix entry ({i},{j}) = {v} is not a finite non-negative value"
                    )));
                }
                if (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "distance matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { feature, n, values })
    }

    pub(crate) fn from_raw(feature: usize, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { feature, n, values }
    }

    pub fn feature(&self) -> usize {
        self.feature
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Computes the upper triangle of pairwise DTW distances for `feature` and
/// mirrors it. Rows are distributed over the current rayon pool; every
/// entry is computed independently, so the output does not depend on the
/// number of workers.
pub fn build_distance_matrix(
    dataset: &Dataset,
    feature: usize,
    config: DtwConfig,
) -> Result<DistanceMatrix> {
    if feature >= dataset.n_features() {
        return Err(Error::FeatureOutOfRange {
            feature,
            n_features: dataset.n_features(),
        });
    }
    let n = dataset.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = dataset.series(i, feature);
            ((i + 1)..n)
                .map(|j| dtw_distance_with(a, dataset.series(j, feature), config))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let j = i + 1 + offset;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix::from_raw(feature, n, values))
}

/// Distance matrices for every feature, in feature order.
pub fn build_all(dataset: &Dataset, config: DtwConfig) -> Result<Vec<DistanceMatrix>> {
    (0..dataset.n_features())
        .map(|f| build_distance_matrix(dataset, f, config))
        .collect()
}
