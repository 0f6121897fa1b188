//! Commands behind the `msts` binary.
//!
//! Each command takes its parsed arguments and a writer for its normal
//! output, so the commands can be driven from tests without a subprocess.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use msts::cache::{CacheKey, DistanceCache};
use msts::dtw::DtwConfig;
use msts::pipeline::{prepare_matrices, thread_pool, Experiment, MatrixSource, PreparedMatrices};
use msts::report::{build_report, dataset_label, write_scatter_file, Report, ScatterRecord};
use msts::selection::{SelectionConfig, Strategy};
use msts::{load_csv, load_ts, CsvSchema, Dataset};

#[derive(Debug, Parser)]
#[command(
    name = "msts",
    version,
    about = "Merit-score feature subset selection for multivariate time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dataset shape: samples, classes, features and series length.
    Info(DatasetArgs),
    /// Compute per-feature DTW distance matrices into the cache.
    Distances(DistancesArgs),
    /// Run one selection strategy and write a JSON report.
    Select(SelectArgs),
    /// Run all strategies on several datasets and compare accuracy and time.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// A `.ts` file, a `.csv` file, or a directory holding `<Name>_TRAIN.ts`
    /// and `<Name>_TEST.ts`. Repeat to merge several sources in order
    /// (for `benchmark`, each value is a separate dataset).
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<PathBuf>,

    /// Label table (`sample_id,label`) for long-format CSV input. Without
    /// it, CSV input is read in wide format.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DistanceOpts {
    /// Directory for cached distance matrices.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,

    /// Sakoe-Chiba band half-width; unconstrained DTW when absent.
    #[arg(long)]
    pub band: Option<usize>,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Suppress progress messages on standard error.
    #[arg(long, short)]
    pub quiet: bool,
}

impl DistanceOpts {
    fn dtw(&self) -> DtwConfig {
        DtwConfig { band: self.band }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DistancesArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub dist: DistanceOpts,
}

#[derive(Debug, Clone, Args)]
pub struct SelectionOpts {
    /// Cross-validation folds.
    #[arg(long, default_value_t = 3)]
    pub folds: usize,

    /// Seed for the fold assignment.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Largest subset size to enumerate.
    #[arg(long, default_value_t = 4)]
    pub max_k: usize,

    /// Fraction of top-merit subsets checked by the wrapper strategy.
    #[arg(long, default_value_t = 0.05)]
    pub top_frac: f64,

    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write per-subset (dataset, subset, k, merit, accuracy) records here.
    #[arg(long)]
    pub scatter_csv: Option<PathBuf>,
}

impl SelectionOpts {
    fn config(&self) -> SelectionConfig {
        SelectionConfig {
            n_folds: self.folds,
            seed: self.seed,
            max_k: self.max_k,
            top_frac: self.top_frac,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub dist: DistanceOpts,
    #[command(flatten)]
    pub selection: SelectionOpts,

    /// `merit` (top merit subset), `merit-wrapper` (evaluate the top
    /// fraction) or `exhaustive`.
    #[arg(long, default_value = "merit", value_parser = parse_strategy)]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub dist: DistanceOpts,
    #[command(flatten)]
    pub selection: SelectionOpts,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: msts::Error| e.to_string())
}

fn find_split(dir: &Path) -> Result<(PathBuf, PathBuf, String)> {
    let mut train = None;
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix("_TRAIN.ts") {
            if train.replace(stem.to_string()).is_some() {
                bail!("{} holds more than one *_TRAIN.ts file", dir.display());
            }
        }
    }
    let stem = train.ok_or_else(|| anyhow!("no *_TRAIN.ts file in {}", dir.display()))?;
    let test = dir.join(format!("{stem}_TEST.ts"));
    if !test.exists() {
        bail!("{} has no matching {stem}_TEST.ts", dir.display());
    }
    Ok((dir.join(format!("{stem}_TRAIN.ts")), test, stem))
}

/// Loads one dataset argument: a directory with a train/test split, a
/// `.ts` file, or a CSV file.
pub fn load_source(path: &Path, labels: Option<&Path>) -> Result<Dataset> {
    load_source_inner(path, labels).with_context(|| format!("loading {}", path.display()))
}

fn load_source_inner(path: &Path, labels: Option<&Path>) -> Result<Dataset> {
    if path.is_dir() {
        let (train, test, stem) = find_split(path)?;
        let merged = load_ts(&train)?.merge(&load_ts(&test)?)?;
        return Ok(merged.with_name(stem));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default();
    if ext.eq_ignore_ascii_case("csv") {
        let schema = match labels {
            Some(l) => CsvSchema::long(l),
            None => CsvSchema::wide(),
        };
        return Ok(load_csv(path, &schema)?);
    }
    Ok(load_ts(path)?)
}

/// Loads and merges every `--dataset` value in order.
pub fn load_merged(args: &DatasetArgs) -> Result<Dataset> {
    let mut iter = args.datasets.iter();
    let first = iter.next().ok_or_else(|| anyhow!("no dataset given"))?;
    let mut ds = load_source(first, args.labels.as_deref())?;
    for path in iter {
        ds = ds.merge(&load_source(path, args.labels.as_deref())?)?;
    }
    Ok(ds)
}

fn matrices_for(
    dataset: &Dataset,
    dist: &DistanceOpts,
    cache_dir: Option<&Path>,
    label: &str,
) -> Result<PreparedMatrices> {
    let dtw = dist.dtw();
    let cache = cache_dir.map(|d| DistanceCache::new(d, CacheKey::new(dataset, dtw)));
    let n = dataset.n_features();
    let prepared = prepare_matrices(dataset, dtw, cache.as_ref(), |f, source| {
        let what = match source {
            MatrixSource::Cache => "cached",
            MatrixSource::Computed => "computed",
        };
        if !dist.quiet {
            eprintln!("[{label}] feature {}/{n}: {what}", f + 1);
        }
    })?;
    Ok(prepared)
}

pub fn cmd_info(args: &DatasetArgs, out: &mut impl Write) -> Result<()> {
    let ds = load_merged(args)?;
    let summary = ds.summary();
    match &summary.name {
        Some(name) => writeln!(out, "{name}: {summary}")?,
        None => writeln!(out, "{summary}")?,
    }
    Ok(())
}

pub fn cmd_distances(args: &DistancesArgs, out: &mut impl Write) -> Result<()> {
    let ds = load_merged(&args.data)?;
    let cache_dir = args
        .dist
        .cache_dir
        .as_deref()
        .ok_or_else(|| anyhow!("--cache-dir is required"))?;
    let pool = thread_pool(args.dist.jobs)?;
    let prepared = pool.install(|| matrices_for(&ds, &args.dist, Some(cache_dir), "distances"))?;
    writeln!(
        out,
        "{} features: {} computed, {} cached ({:.3}s)",
        ds.n_features(),
        prepared.computed(),
        prepared.loaded(),
        prepared.elapsed.as_secs_f64()
    )?;
    Ok(())
}

/// Runs `strategies` on one dataset and assembles the report.
pub fn run_report(
    dataset: Dataset,
    dist: &DistanceOpts,
    cache_dir: Option<&Path>,
    config: SelectionConfig,
    strategies: &[Strategy],
) -> Result<Report> {
    let label = dataset_label(&dataset);
    let prepared = matrices_for(&dataset, dist, cache_dir, &label)?;
    let distance_secs = prepared.elapsed.as_secs_f64();
    let exp = Experiment::new(dataset, prepared.matrices, config)?;
    Ok(build_report(&exp, dist.dtw(), distance_secs, strategies)?)
}

fn write_json(path: Option<&Path>, value: &impl Serialize, out: &mut impl Write) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(())
}

pub fn cmd_select(args: &SelectArgs, out: &mut impl Write) -> Result<Report> {
    let ds = load_merged(&args.data)?;
    let pool = thread_pool(args.dist.jobs)?;
    let report = pool.install(|| {
        run_report(
            ds,
            &args.dist,
            args.dist.cache_dir.as_deref(),
            args.selection.config(),
            &[args.strategy],
        )
    })?;
    let result = &report.results[0];
    if !args.dist.quiet {
        eprintln!(
            "{}: chose {} ({}) accuracy {:.4} in {:.3}s",
            result.strategy,
            result.chosen,
            result.chosen.display_label(),
            result.chosen_accuracy,
            result.total_time.as_secs_f64()
        );
    }
    write_json(args.selection.out.as_deref(), &report, out)?;
    if let Some(p) = &args.selection.scatter_csv {
        write_scatter_file(p, &report.scatter)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub strategy: Strategy,
    pub chosen: String,
    pub best_accuracy: f64,
    pub accuracy_evaluations: usize,
    pub time_secs: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkEntry {
    pub source: String,
    pub report: Option<Report>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub datasets: Vec<BenchmarkEntry>,
}

impl BenchmarkReport {
    pub fn failures(&self) -> usize {
        self.datasets.iter().filter(|d| d.error.is_some()).count()
    }
}

/// Runs every strategy on every dataset. A failing dataset is recorded
/// with its error and does not stop the others.
pub fn cmd_benchmark(args: &BenchmarkArgs, out: &mut impl Write) -> Result<BenchmarkReport> {
    let pool = thread_pool(args.dist.jobs)?;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let mut scatter: Vec<ScatterRecord> = Vec::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for path in &args.data.datasets {
        let source = path.display().to_string();
        let outcome = load_source(path, args.data.labels.as_deref()).and_then(|ds| {
            let label = dataset_label(&ds);
            let n = used.entry(label.clone()).or_default();
            *n += 1;
            let sub = if *n > 1 {
                format!("{label}-{n}")
            } else {
                label
            };
            let cache_dir = args.dist.cache_dir.as_ref().map(|d| d.join(&sub));
            pool.install(|| {
                run_report(
                    ds,
                    &args.dist,
                    cache_dir.as_deref(),
                    args.selection.config(),
                    &Strategy::ALL,
                )
            })
        });
        match outcome {
            Ok(report) => {
                let name = report
                    .dataset
                    .name
                    .clone()
                    .unwrap_or_else(|| source.clone());
                for r in &report.results {
                    rows.push(BenchmarkRow {
                        dataset: name.clone(),
                        strategy: r.strategy,
                        chosen: r.chosen.to_string(),
                        best_accuracy: r.chosen_accuracy,
                        accuracy_evaluations: r.accuracy_evaluations,
                        time_secs: r.total_time.as_secs_f64(),
                    });
                }
                scatter.extend(report.scatter.iter().cloned());
                entries.push(BenchmarkEntry {
                    source,
                    report: Some(report),
                    error: None,
                });
            }
            Err(e) => {
                eprintln!("{source}: {e:#}");
                entries.push(BenchmarkEntry {
                    source,
                    report: None,
                    error: Some(format!("{e:#}")),
                });
            }
        }
    }

    let mut table = String::new();
    table.push_str(&format!(
        "{:<28} {:<14} {:>9} {:>7} {:>11}  {}\n",
        "dataset", "strategy", "accuracy", "evals", "time (s)", "subset"
    ));
    for r in &rows {
        table.push_str(&format!(
            "{:<28} {:<14} {:>9.4} {:>7} {:>11.6}  {}\n",
            r.dataset, r.strategy, r.best_accuracy, r.accuracy_evaluations, r.time_secs, r.chosen
        ));
    }
    let report = BenchmarkReport {
        rows,
        datasets: entries,
    };
    match &args.selection.out {
        Some(p) => {
            write!(out, "{table}")?;
            write_json(Some(p), &report, out)?;
        }
        None => write!(out, "{table}")?,
    }
    if let Some(p) = &args.selection.scatter_csv {
        write_scatter_file(p, &scatter)?;
    }
    Ok(report)
}

/// Dispatches a parsed command line. Returns an error for any command that
/// did not fully succeed.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Info(a) => cmd_info(&a, out),
        Command::Distances(a) => cmd_distances(&a, out),
        Command::Select(a) => cmd_select(&a, out).map(|_| ()),
        Command::Benchmark(a) => {
            let report = cmd_benchmark(&a, out)?;
            match report.failures() {
                0 => Ok(()),
                n => bail!("{n} of {} datasets failed", report.datasets.len()),
            }
        }
    }
}
