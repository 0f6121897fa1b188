//! 1-NN classification over precomputed distance matrices with stratified
//! k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::dtw::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    n_folds: usize,
    fold_of: Vec<usize>,
    seed: u64,
}

impl FoldAssignment {
    /// Wraps an explicit assignment. Only range is checked here; use
    /// [`FoldAssignment::check_stratified`] for the balance invariants.
    pub fn new(n_folds: usize, fold_of: Vec<usize>, seed: u64) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::InvalidFolds(format!(
                "need at least 2 folds, got {n_folds}"
            )));
        }
        if let Some((i, f)) = fold_of.iter().enumerate().find(|(_, &f)| f >= n_folds) {
            return Err(Error::InvalidFolds(format!(
                "sample {i} assigned to fold {f} of {n_folds}"
            )));
        }
        Ok(Self {
            n_folds,
            fold_of,
            seed,
        })
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    /// Checks that overall fold sizes and per-class fold counts each differ
    /// by at most one.
    pub fn check_stratified(&self, labels: &[u32]) -> Result<()> {
        if labels.len() != self.fold_of.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.fold_of.len(),
            });
        }
        let spread = |counts: &[usize]| {
            counts.iter().max().unwrap_or(&0) - counts.iter().min().unwrap_or(&0)
        };
        if spread(&self.fold_sizes()) > 1 {
            return Err(Error::InvalidFolds(format!(
                "fold sizes {:?} are unbalanced",
                self.fold_sizes()
            )));
        }
        let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut per_class = vec![vec![0usize; self.n_folds]; n_classes];
        for (&label, &fold) in labels.iter().zip(&self.fold_of) {
            per_class[label as usize][fold] += 1;
        }
        for (class, counts) in per_class.iter().enumerate() {
            if counts.iter().sum::<usize>() > 0 && spread(counts) > 1 {
                return Err(Error::InvalidFolds(format!(
                    "class {class} fold counts {counts:?} are unbalanced"
                )));
            }
        }
        Ok(())
    }
}

/// Stratified fold assignment for a dataset.
pub fn make_folds(dataset: &Dataset, n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    let codes = dataset.label_codes();
    stratified_folds(&codes, n_folds, seed).map_err(|e| match e {
        Error::TooFewMembers {
            label,
            count,
            n_folds,
        } => Error::TooFewMembers {
            label: label
                .parse::<usize>()
                .ok()
                .and_then(|c| dataset.class_labels().get(c).cloned())
                .unwrap_or(label),
            count,
            n_folds,
        },
        other => other,
    })
}

/// Stratified fold assignment over dense label codes.
///
/// Members of each class are shuffled with a ChaCha8 stream seeded by
/// `seed`, then dealt round-robin. The dealing position carries over from
/// one class to the next, which keeps both the per-class and the overall
/// fold sizes within one of each other.
pub fn stratified_folds(labels: &[u32], n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if n_folds < 2 {
        return Err(Error::InvalidFolds(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut members = vec![Vec::new(); n_classes];
    for (i, &label) in labels.iter().enumerate() {
        members[label as usize].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < n_folds {
            return Err(Error::TooFewMembers {
                label: class.to_string(),
                count: m.len(),
                n_folds,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for mut m in members {
        m.shuffle(&mut rng);
        for i in m {
            fold_of[i] = next % n_folds;
            next += 1;
        }
    }
    FoldAssignment::new(n_folds, fold_of, seed)
}

fn matrix_for(matrices: &[DistanceMatrix], feature: usize) -> Result<&DistanceMatrix> {
    matrices
        .get(feature)
        .filter(|m| m.feature() == feature)
        .ok_or(Error::MissingMatrix(feature))
}

fn subset_matrices<'a>(
    subset: &[usize],
    matrices: &'a [DistanceMatrix],
) -> Result<Vec<&'a DistanceMatrix>> {
    if subset.is_empty() {
        return Err(Error::InvalidSubset("empty feature subset".into()));
    }
    subset.iter().map(|&f| matrix_for(matrices, f)).collect()
}

/// Distance between samples `i` and `j` on a feature subset: the sum of
/// the per-feature DTW distances, added in subset order.
pub fn subset_distance(
    subset: &[usize],
    i: usize,
    j: usize,
    matrices: &[DistanceMatrix],
) -> Result<f64> {
    Ok(subset_matrices(subset, matrices)?
        .iter()
        .map(|m| m.get(i, j))
        .sum())
}

/// Out-of-fold 1-NN predictions for one feature subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictionVector {
    pub feature_set: Vec<usize>,
    /// Predicted label codes, indexed by sample.
    pub predicted: Vec<u32>,
    #[serde(skip)]
    pub folds: FoldAssignment,
}

impl PredictionVector {
    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }
}

/// Index of the nearest sample to `query` outside the query's fold, ties
/// going to the lowest index. `None` when every sample shares its fold.
pub fn nearest_out_of_fold(
    query: usize,
    mats: &[&DistanceMatrix],
    folds: &FoldAssignment,
) -> Option<usize> {
    let own = folds.fold_of[query];
    let mut best: Option<(f64, usize)> = None;
    let rows: Vec<&[f64]> = mats.iter().map(|m| m.row(query)).collect();
    for (j, &fold) in folds.fold_of.iter().enumerate() {
        if fold == own {
            continue;
        }
        let d: f64 = rows.iter().map(|r| r[j]).sum();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|(_, j)| j)
}

/// Cross-validated 1-NN predictions using the dataset's label codes.
pub fn cv_predict(
    dataset: &Dataset,
    subset: &[usize],
    matrices: &[DistanceMatrix],
    folds: &FoldAssignment,
) -> Result<PredictionVector> {
    cv_predict_codes(&dataset.label_codes(), subset, matrices, folds)
}

/// Each sample is predicted by its nearest neighbour among samples in other
/// folds. Queries run on the current rayon pool; the output does not
/// depend on scheduling.
pub fn cv_predict_codes(
    truth: &[u32],
    subset: &[usize],
    matrices: &[DistanceMatrix],
    folds: &FoldAssignment,
) -> Result<PredictionVector> {
    let mats = subset_matrices(subset, matrices)?;
    let n = truth.len();
    if folds.len() != n {
        return Err(Error::LengthMismatch {
            left: folds.len(),
            right: n,
        });
    }
    if let Some(m) = mats.iter().find(|m| m.n() != n) {
        return Err(Error::LengthMismatch {
            left: m.n(),
            right: n,
        });
    }
    let predicted = (0..n)
        .into_par_iter()
        .map(|q| {
            nearest_out_of_fold(q, &mats, folds)
                .map(|j| truth[j])
                .ok_or_else(|| {
                    Error::InvalidFolds(format!("sample {q} has no out-of-fold neighbours"))
                })
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(PredictionVector {
        feature_set: subset.to_vec(),
        predicted,
        folds: folds.clone(),
    })
}

/// Pooled fraction of correct out-of-fold predictions.
pub fn accuracy(predicted: &[u32], truth: &[u32]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}
