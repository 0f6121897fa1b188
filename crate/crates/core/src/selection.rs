//! Subset selection strategies: top merit (Strategy 1), wrapper search over
//! the top merit fraction (Strategy 2), and the exhaustive wrapper
//! baseline.
//!
//! Timings cover merit computation (single-feature predictions,
//! correlations and scores) and accuracy evaluations. Subset enumeration
//! and distance matrix construction are shared by every strategy and are
//! not included.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dtw::DistanceMatrix;
use crate::error::{Error, Result};
use crate::knn_cv::{accuracy, cv_predict_codes, FoldAssignment, PredictionVector};
use crate::merit::{
    build_correlations, score_subsets, tie_round, CorrelationTable, FeatureSubset, MeritScore,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Merit,
    MeritWrapper,
    Exhaustive,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Merit,
        Strategy::MeritWrapper,
        Strategy::Exhaustive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Merit => "merit",
            Strategy::MeritWrapper => "merit-wrapper",
            Strategy::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

/// Run parameters recorded alongside each result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionConfig {
    pub n_folds: usize,
    pub seed: u64,
    pub max_k: usize,
    pub top_frac: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n_folds: 3,
            seed: 0,
            max_k: 4,
            top_frac: 0.05,
        }
    }
}

fn secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetEvaluation {
    pub subset: FeatureSubset,
    pub merit: Option<f64>,
    pub accuracy: Option<f64>,
    #[serde(rename = "wall_time_secs", serialize_with = "secs")]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub strategy: Strategy,
    pub chosen: FeatureSubset,
    pub chosen_accuracy: f64,
    pub chosen_merit: Option<f64>,
    pub accuracy_evaluations: usize,
    pub evaluations: Vec<SubsetEvaluation>,
    #[serde(rename = "merit_time_secs", serialize_with = "secs")]
    pub merit_time: Duration,
    #[serde(rename = "search_time_secs", serialize_with = "secs")]
    pub search_time: Duration,
    #[serde(rename = "total_time_secs", serialize_with = "secs")]
    pub total_time: Duration,
    pub config: SelectionConfig,
}

/// Runs `run` and measures it on the monotonic clock.
pub fn timed<T>(run: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = run();
    (out, start.elapsed())
}

/// Higher score first, then smaller subsets, then lexicographic feature
/// ids. Scores are compared after [`tie_round`].
pub fn rank_order(a: (f64, &FeatureSubset), b: (f64, &FeatureSubset)) -> Ordering {
    tie_round(b.0)
        .partial_cmp(&tie_round(a.0))
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.k().cmp(&b.1.k()))
        .then_with(|| a.1.cmp(b.1))
}

/// Number of subsets Strategy 2 evaluates: `ceil(top_frac * count)`,
/// at least one.
pub fn top_count(top_frac: f64, count: usize) -> usize {
    if count == 0 {
        return 0;
    }
    // The epsilon keeps products such as 0.05 * 100 from rounding up.
    let t = (top_frac * count as f64 - 1e-9).ceil().max(1.0) as usize;
    t.min(count)
}

/// Everything a strategy needs to evaluate subsets.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub truth: &'a [u32],
    pub matrices: &'a [DistanceMatrix],
    pub folds: &'a FoldAssignment,
    pub config: SelectionConfig,
}

impl EvalContext<'_> {
    pub fn predict(&self, subset: &FeatureSubset) -> Result<PredictionVector> {
        cv_predict_codes(self.truth, subset.features(), self.matrices, self.folds)
    }

    /// Pooled out-of-fold accuracy of `subset` and how long it took.
    pub fn evaluate(&self, subset: &FeatureSubset) -> Result<(f64, Duration)> {
        let (acc, elapsed) = timed(|| {
            let preds = self.predict(subset)?;
            accuracy(&preds.predicted, self.truth)
        });
        Ok((acc?, elapsed))
    }

    fn evaluate_many(&self, subsets: &[&FeatureSubset]) -> Result<Vec<(f64, Duration)>> {
        subsets.par_iter().map(|s| self.evaluate(s)).collect()
    }
}

/// Single-feature predictions, correlation table and merit scores.
#[derive(Debug, Clone)]
pub struct MeritRun {
    pub predictions: Vec<PredictionVector>,
    pub table: CorrelationTable,
    pub scores: Vec<MeritScore>,
    pub elapsed: Duration,
}

/// Computes merit scores for `subsets`, timing the whole phase.
pub fn merit_phase(ctx: &EvalContext<'_>, subsets: &[FeatureSubset]) -> Result<MeritRun> {
    let (out, elapsed) = timed(|| -> Result<_> {
        let n_features = ctx.matrices.len();
        let predictions = (0..n_features)
            .into_par_iter()
            .map(|f| cv_predict_codes(ctx.truth, &[f], ctx.matrices, ctx.folds))
            .collect::<Result<Vec<_>>>()?;
        let table = build_correlations(&predictions, ctx.truth)?;
        let scores = score_subsets(subsets, &table)?;
        Ok((predictions, table, scores))
    });
    let (predictions, table, scores) = out?;
    Ok(MeritRun {
        predictions,
        table,
        scores,
        elapsed,
    })
}

fn best_by<'a, I>(candidates: I) -> Option<(f64, &'a FeatureSubset)>
where
    I: IntoIterator<Item = (f64, &'a FeatureSubset)>,
{
    candidates.into_iter().min_by(|a, b| rank_order(*a, *b))
}

fn merit_order(scores: &[MeritScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        rank_order(
            (scores[a].value, &scores[a].subset),
            (scores[b].value, &scores[b].subset),
        )
    });
    order
}

/// Picks the top-merit subset and measures its accuracy once.
pub fn strategy1(run: &MeritRun, ctx: &EvalContext<'_>) -> Result<SelectionResult> {
    let scores = &run.scores;
    let top = *merit_order(scores)
        .first()
        .ok_or_else(|| Error::InvalidArgument("no merit scores".into()))?;
    let (search, search_time) = timed(|| ctx.evaluate(&scores[top].subset));
    let (acc, wall) = search?;
    let evaluations = scores
        .iter()
        .enumerate()
        .map(|(i, s)| SubsetEvaluation {
            subset: s.subset.clone(),
            merit: Some(s.value),
            accuracy: (i == top).then_some(acc),
            wall_time: if i == top { wall } else { Duration::ZERO },
        })
        .collect();
    Ok(SelectionResult {
        strategy: Strategy::Merit,
        chosen: scores[top].subset.clone(),
        chosen_accuracy: acc,
        chosen_merit: Some(scores[top].value),
        accuracy_evaluations: 1,
        evaluations,
        merit_time: run.elapsed,
        search_time,
        total_time: run.elapsed + search_time,
        config: ctx.config,
    })
}

/// Wrapper search over the `ceil(top_frac * |scores|)` highest-merit
/// subsets.
pub fn strategy2(run: &MeritRun, top_frac: f64, ctx: &EvalContext<'_>) -> Result<SelectionResult> {
    if !(top_frac > 0.0 && top_frac <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must be in (0, 1], got {top_frac}"
        )));
    }
    let scores = &run.scores;
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no merit scores".into()));
    }
    let t = top_count(top_frac, scores.len());
    let picked: Vec<usize> = merit_order(scores).into_iter().take(t).collect();
    let subsets: Vec<&FeatureSubset> = picked.iter().map(|&i| &scores[i].subset).collect();
    let (results, search_time) = timed(|| ctx.evaluate_many(&subsets));
    let results = results?;

    let mut measured = vec![None; scores.len()];
    for (&i, r) in picked.iter().zip(&results) {
        measured[i] = Some(*r);
    }
    let (chosen_accuracy, chosen) = best_by(
        picked
            .iter()
            .zip(&results)
            .map(|(&i, r)| (r.0, &scores[i].subset)),
    )
    .expect("t >= 1");
    let chosen_merit = scores.iter().find(|s| &s.subset == chosen).map(|s| s.value);
    let chosen = chosen.clone();
    let evaluations = scores
        .iter()
        .zip(measured)
        .map(|(s, m)| SubsetEvaluation {
            subset: s.subset.clone(),
            merit: Some(s.value),
            accuracy: m.map(|(a, _)| a),
            wall_time: m.map_or(Duration::ZERO, |(_, d)| d),
        })
        .collect();
    Ok(SelectionResult {
        strategy: Strategy::MeritWrapper,
        chosen,
        chosen_accuracy,
        chosen_merit,
        accuracy_evaluations: t,
        evaluations,
        merit_time: run.elapsed,
        search_time,
        total_time: run.elapsed + search_time,
        config: SelectionConfig {
            top_frac,
            ..ctx.config
        },
    })
}

/// Wrapper search over every subset.
pub fn exhaustive(subsets: &[FeatureSubset], ctx: &EvalContext<'_>) -> Result<SelectionResult> {
    if subsets.is_empty() {
        return Err(Error::InvalidArgument("no subsets to evaluate".into()));
    }
    let refs: Vec<&FeatureSubset> = subsets.iter().collect();
    let (results, search_time) = timed(|| ctx.evaluate_many(&refs));
    let results = results?;
    let (chosen_accuracy, chosen) =
        best_by(subsets.iter().zip(&results).map(|(s, r)| (r.0, s))).expect("non-empty");
    let chosen = chosen.clone();
    let evaluations = subsets
        .iter()
        .zip(&results)
        .map(|(s, &(a, d))| SubsetEvaluation {
            subset: s.clone(),
            merit: None,
            accuracy: Some(a),
            wall_time: d,
        })
        .collect();
    Ok(SelectionResult {
        strategy: Strategy::Exhaustive,
        chosen,
        chosen_accuracy,
        chosen_merit: None,
        accuracy_evaluations: subsets.len(),
        evaluations,
        merit_time: Duration::ZERO,
        search_time,
        total_time: search_time,
        config: ctx.config,
    })
}
