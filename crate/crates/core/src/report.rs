//! Serializable run reports and the per-subset scatter export.
//!
//! Timing fields are the keys ending in `_secs`; everything else in a
//! report is a deterministic function of the inputs and the seed.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dataset::{Dataset, Summary};
use crate::dtw::{DtwConfig, COST_TAG};
use crate::error::Result;
use crate::merit::{CorrelationTable, FeatureSubset};
use crate::pipeline::Experiment;
use crate::selection::{MeritRun, SelectionResult, Strategy, SubsetEvaluation};

pub const SCATTER_HEADER: [&str; 5] = ["dataset", "subset", "k", "merit", "accuracy"];

#[derive(Debug, Clone, Serialize)]
pub struct RunSettings {
    pub n_folds: usize,
    pub seed: u64,
    pub max_k: usize,
    pub top_frac: f64,
    pub band: Option<usize>,
    pub cost: String,
}

/// Durations common to all strategies and left out of their totals.
#[derive(Debug, Clone, Serialize)]
pub struct ExcludedTimes {
    pub enumeration_secs: f64,
    pub distance_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRecord {
    pub dataset: String,
    pub subset: FeatureSubset,
    pub label: String,
    pub k: usize,
    pub merit: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub dataset: Summary,
    pub fingerprint: String,
    pub settings: RunSettings,
    pub excluded: ExcludedTimes,
    pub correlations: Option<CorrelationTable>,
    pub results: Vec<SelectionResult>,
    pub scatter: Vec<ScatterRecord>,
}

impl Report {
    pub fn result(&self, strategy: Strategy) -> Option<&SelectionResult> {
        self.results.iter().find(|r| r.strategy == strategy)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Name used for a dataset in reports: its own name, or a fingerprint
/// prefix when it has none.
pub fn dataset_label(dataset: &Dataset) -> String {
    dataset
        .name()
        .map_or_else(|| dataset.fingerprint()[..12].to_string(), str::to_string)
}

/// Runs `strategies` in order on `experiment` and assembles the report.
/// `distance_secs` is the time spent preparing the distance matrices.
pub fn build_report(
    experiment: &Experiment,
    dtw: DtwConfig,
    distance_secs: f64,
    strategies: &[Strategy],
) -> Result<Report> {
    let mut results = Vec::with_capacity(strategies.len());
    let mut merit: Option<MeritRun> = None;
    for &s in strategies {
        let (r, run) = experiment.run(s)?;
        results.push(r);
        if merit.is_none() {
            merit = run;
        }
    }
    let dataset = experiment.dataset();
    let config = experiment.config();
    let scatter = scatter_records(&dataset_label(dataset), experiment.subsets(), &results);
    Ok(Report {
        dataset: dataset.summary(),
        fingerprint: dataset.fingerprint(),
        settings: RunSettings {
            n_folds: config.n_folds,
            seed: config.seed,
            max_k: config.max_k,
            top_frac: config.top_frac,
            band: dtw.band,
            cost: COST_TAG.to_string(),
        },
        excluded: ExcludedTimes {
            enumeration_secs: experiment.enumeration_time().as_secs_f64(),
            distance_secs,
        },
        correlations: merit.map(|m| m.table),
        results,
        scatter,
    })
}

/// One record per subset in enumeration order. Merits come from any merit
/// strategy in `results`; accuracies only from an exhaustive run, so that a
/// record carries both exactly when every subset was evaluated.
pub fn scatter_records(
    dataset: &str,
    subsets: &[FeatureSubset],
    results: &[SelectionResult],
) -> Vec<ScatterRecord> {
    let merits = results.iter().find(|r| r.strategy != Strategy::Exhaustive);
    let accuracies = results.iter().find(|r| r.strategy == Strategy::Exhaustive);
    subsets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pick = |r: Option<&'_ SelectionResult>| -> Option<SubsetEvaluation> {
                r.and_then(|r| r.evaluations.get(i))
                    .filter(|e| &e.subset == s)
                    .cloned()
            };
            ScatterRecord {
                dataset: dataset.to_string(),
                subset: s.clone(),
                label: s.display_label(),
                k: s.k(),
                merit: pick(merits).and_then(|e| e.merit),
                accuracy: pick(accuracies).and_then(|e| e.accuracy),
            }
        })
        .collect()
}

/// Writes records as CSV with columns `dataset,subset,k,merit,accuracy`.
/// Subsets use the bracketed list form; absent values are empty cells.
pub fn write_scatter_csv<W: Write>(out: W, records: &[ScatterRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
    w.write_record(SCATTER_HEADER).map_err(to_io)?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.subset.to_string(),
            r.k.to_string(),
            opt(r.merit),
            opt(r.accuracy),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter_file(path: impl AsRef<Path>, records: &[ScatterRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_scatter_csv(std::io::BufWriter::new(file), records)
}

/// Drops every `*_secs` field so reports can be compared for determinism.
pub fn strip_timings(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_secs"));
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}
