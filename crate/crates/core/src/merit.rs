//! Correlation tables over single-feature predictions and the merit score
//! of feature subsets.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::infotheory::ami;
use crate::knn_cv::PredictionVector;

/// Feature-class and feature-feature AMI scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    /// `cf[f]`: AMI between feature `f`'s predictions and the true labels.
    pub cf: Vec<f64>,
    /// `ff[f][g]`: AMI between the predictions of features `f` and `g`.
    pub ff: Vec<Vec<f64>>,
}

impl CorrelationTable {
    pub fn new(cf: Vec<f64>, ff: Vec<Vec<f64>>) -> Result<Self> {
        let n = cf.len();
        if ff.len() != n || ff.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "feature-feature table must be {n}x{n}"
            )));
        }
        Ok(Self { cf, ff })
    }

    pub fn n_features(&self) -> usize {
        self.cf.len()
    }
}

/// Computes `cf` against `truth` and all pairwise `ff` entries. `preds[f]`
/// must hold the predictions of the singleton subset `{f}`.
pub fn build_correlations(preds: &[PredictionVector], truth: &[u32]) -> Result<CorrelationTable> {
    for (f, p) in preds.iter().enumerate() {
        if p.feature_set != [f] {
            return Err(Error::InvalidArgument(format!(
                "prediction vector {f} was made with features {:?}, expected [{f}]",
                p.feature_set
            )));
        }
        if p.predicted.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: p.predicted.len(),
                right: truth.len(),
            });
        }
        if p.folds != preds[0].folds {
            return Err(Error::InvalidFolds(format!(
                "prediction vector {f} uses a different fold assignment"
            )));
        }
    }
    let n = preds.len();
    let cf = preds
        .par_iter()
        .map(|p| ami(&p.predicted, truth))
        .collect::<Result<Vec<f64>>>()?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|f| (f..n).map(move |g| (f, g))).collect();
    let values = pairs
        .par_iter()
        .map(|&(f, g)| ami(&preds[f].predicted, &preds[g].predicted))
        .collect::<Result<Vec<f64>>>()?;
    let mut ff = vec![vec![0.0; n]; n];
    for (&(f, g), v) in pairs.iter().zip(values) {
        ff[f][g] = v;
        ff[g][f] = v;
    }
    CorrelationTable::new(cf, ff)
}

/// A non-empty, strictly ascending set of feature ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    pub fn new(mut features: Vec<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSubset("empty feature subset".into()));
        }
        features.sort_unstable();
        if features.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset(format!(
                "duplicate feature in {features:?}"
            )));
        }
        Ok(Self(features))
    }

    pub fn features(&self) -> &[usize] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// One-based display form, e.g. `F1,F3`.
    pub fn display_label(&self) -> String {
        self.0
            .iter()
            .map(|f| format!("F{}", f + 1))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Zero-based list form, e.g. `[0,2]`.
impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeritScore {
    pub subset: FeatureSubset,
    pub value: f64,
}

/// Rounds to 12 decimal places; merit and accuracy ties compare equal
/// after this rounding.
pub fn tie_round(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// `k * mean(cf) / sqrt(k + k(k-1) * mean(ff))` with the `ff` mean taken
/// over unordered pairs inside the subset.
pub fn merit_score(subset: &FeatureSubset, table: &CorrelationTable) -> Result<MeritScore> {
    let features = subset.features();
    if let Some(&f) = features.iter().find(|&&f| f >= table.n_features()) {
        return Err(Error::FeatureOutOfRange {
            feature: f,
            n_features: table.n_features(),
        });
    }
    let k = features.len() as f64;
    let mean_cf = features.iter().map(|&f| table.cf[f]).sum::<f64>() / k;
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for (a, &f) in features.iter().enumerate() {
        for &g in &features[a + 1..] {
            pair_sum += table.ff[f][g];
            pairs += 1;
        }
    }
    let mean_ff = if pairs == 0 {
        0.0
    } else {
        pair_sum / pairs as f64
    };
    let radicand = k + k * (k - 1.0) * mean_ff;
    if radicand <= 0.0 || !radicand.is_finite() {
        return Err(Error::NonPositiveRadicand {
            subset: features.to_vec(),
            radicand,
        });
    }
    Ok(MeritScore {
        subset: subset.clone(),
        value: k * mean_cf / radicand.sqrt(),
    })
}

/// All subsets of sizes `1..=max_k`, by size then lexicographically.
pub fn enumerate_subsets(n_features: usize, max_k: usize) -> Result<Vec<FeatureSubset>> {
    if max_k == 0 || max_k > n_features {
        return Err(Error::InvalidArgument(format!(
            "max_k must be in 1..={n_features}, got {max_k}"
        )));
    }
    let mut out = Vec::new();
    for k in 1..=max_k {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            out.push(FeatureSubset(combo.clone()));
            // Advance to the next combination in lexicographic order.
            let mut i = k;
            while i > 0 && combo[i - 1] == n_features - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// Number of subsets [`enumerate_subsets`] yields.
pub fn subset_count(n_features: usize, max_k: usize) -> u64 {
    (1..=max_k.min(n_features) as u64)
        .map(|k| (0..k).fold(1u64, |acc, i| acc * (n_features as u64 - i) / (i + 1)))
        .sum()
}

/// Merit of every subset up to `max_k`, in enumeration order.
pub fn score_all(table: &CorrelationTable, max_k: usize) -> Result<Vec<MeritScore>> {
    score_subsets(&enumerate_subsets(table.n_features(), max_k)?, table)
}

pub fn score_subsets(
    subsets: &[FeatureSubset],
    table: &CorrelationTable,
) -> Result<Vec<MeritScore>> {
    subsets.par_iter().map(|s| merit_score(s, table)).collect()
}
