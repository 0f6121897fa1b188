//! Python bindings: datasets, DTW, the information-theoretic measures,
//! merit scores and full selection runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;

use msts::cache::{CacheKey, DistanceCache};
use msts::infotheory::ContingencyTable;
use msts::pipeline::{prepare_matrices, thread_pool, Experiment};
use msts::report::build_report;
use msts::{CorrelationTable, DtwConfig, FeatureSubset, SelectionConfig, Strategy};

fn err(e: msts::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dtw_config(band: Option<usize>) -> DtwConfig {
    DtwConfig { band }
}

/// Accepts a list of ints or a list of strings. The two kinds are kept
/// apart so that `1` and `"1"` are different labels.
fn labels_arg(obj: &Bound<'_, PyAny>) -> PyResult<Vec<String>> {
    if let Ok(v) = obj.extract::<Vec<i64>>() {
        return Ok(v.into_iter().map(|x| format!("i{x}")).collect());
    }
    if let Ok(v) = obj.extract::<Vec<String>>() {
        return Ok(v.into_iter().map(|x| format!("s{x}")).collect());
    }
    Err(PyTypeError::new_err(
        "labels must be a list of int or a list of str",
    ))
}

fn label_pair(x: &Bound<'_, PyAny>, y: &Bound<'_, PyAny>) -> PyResult<(Vec<String>, Vec<String>)> {
    Ok((labels_arg(x)?, labels_arg(y)?))
}

#[pyclass(name = "Dataset", module = "pymsts", frozen)]
struct PyDataset {
    inner: msts::Dataset,
}

#[pymethods]
impl PyDataset {
    /// `series[s][f]` is feature `f` of sample `s`; `labels[s]` must be one
    /// of `class_labels`.
    #[new]
    #[pyo3(signature = (class_labels, series, labels, name=None))]
    fn new(
        class_labels: Vec<String>,
        series: Vec<Vec<Vec<f64>>>,
        labels: Vec<String>,
        name: Option<String>,
    ) -> PyResult<Self> {
        if series.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} series but {} labels",
                series.len(),
                labels.len()
            )));
        }
        let mut inner = msts::Dataset::new(class_labels, series.into_iter().zip(labels).collect())
            .map_err(err)?;
        if let Some(n) = name {
            inner = inner.with_name(n);
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load_ts(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: msts::load_ts(path).map_err(err)?,
        })
    }

    /// Loads `<dir>/<name>_TRAIN.ts` and `<dir>/<name>_TEST.ts` merged.
    #[staticmethod]
    fn load_ts_split(dir: PathBuf, name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: msts::load_ts_split(dir, name).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name().map(str::to_string)
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn series_length(&self) -> usize {
        self.inner.series_length()
    }

    #[getter]
    fn class_labels(&self) -> Vec<String> {
        self.inner.class_labels().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner
            .labels()
            .into_iter()
            .map(str::to_string)
            .collect()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn series(&self, sample: usize, feature: usize) -> PyResult<Vec<f64>> {
        if sample >= self.inner.len() || feature >= self.inner.n_features() {
            return Err(PyValueError::new_err("sample or feature out of range"));
        }
        Ok(self.inner.series(sample, feature).to_vec())
    }

    fn merge(&self, other: &PyDataset) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.merge(&other.inner).map_err(err)?,
        })
    }

    fn to_ts_string(&self) -> String {
        self.inner.to_ts_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("<Dataset {}>", self.inner.summary())
    }
}

#[pyfunction]
#[pyo3(signature = (a, b, band=None))]
fn dtw_distance(a: Vec<f64>, b: Vec<f64>, band: Option<usize>) -> PyResult<f64> {
    msts::dtw_distance_with(&a, &b, dtw_config(band)).map_err(err)
}

/// Pairwise DTW distances between all samples on one feature, as rows.
#[pyfunction]
#[pyo3(signature = (dataset, feature, band=None))]
fn distance_matrix(
    py: Python<'_>,
    dataset: &PyDataset,
    feature: usize,
    band: Option<usize>,
) -> PyResult<Vec<Vec<f64>>> {
    let ds = &dataset.inner;
    let m = py
        .detach(|| msts::build_distance_matrix(ds, feature, dtw_config(band)))
        .map_err(err)?;
    Ok((0..m.n()).map(|i| m.row(i).to_vec()).collect())
}

#[pyfunction]
fn entropy(labels: &Bound<'_, PyAny>) -> PyResult<f64> {
    msts::entropy(&labels_arg(labels)?).map_err(err)
}

#[pyfunction]
fn mutual_information(x: &Bound<'_, PyAny>, y: &Bound<'_, PyAny>) -> PyResult<f64> {
    let (x, y) = label_pair(x, y)?;
    msts::mutual_information(&x, &y).map_err(err)
}

#[pyfunction]
fn expected_mi(x: &Bound<'_, PyAny>, y: &Bound<'_, PyAny>) -> PyResult<f64> {
    let (x, y) = label_pair(x, y)?;
    Ok(msts::expected_mi(
        &ContingencyTable::from_labels(&x, &y).map_err(err)?,
    ))
}

#[pyfunction]
fn ami(x: &Bound<'_, PyAny>, y: &Bound<'_, PyAny>) -> PyResult<f64> {
    let (x, y) = label_pair(x, y)?;
    msts::ami(&x, &y).map_err(err)
}

/// Merit of `subset` given feature-class correlations `cf` and the
/// feature-feature matrix `ff`.
#[pyfunction]
fn merit_score(subset: Vec<usize>, cf: Vec<f64>, ff: Vec<Vec<f64>>) -> PyResult<f64> {
    let table = CorrelationTable::new(cf, ff).map_err(err)?;
    let subset = FeatureSubset::new(subset).map_err(err)?;
    Ok(msts::merit_score(&subset, &table).map_err(err)?.value)
}

#[pyfunction]
fn enumerate_subsets(n_features: usize, max_k: usize) -> PyResult<Vec<Vec<usize>>> {
    Ok(msts::enumerate_subsets(n_features, max_k)
        .map_err(err)?
        .into_iter()
        .map(|s| s.features().to_vec())
        .collect())
}

/// Runs the given strategies and returns the JSON report as a string.
#[pyfunction]
#[pyo3(signature = (
    dataset,
    strategies=vec!["merit".to_string()],
    n_folds=3,
    seed=0,
    max_k=4,
    top_frac=0.05,
    band=None,
    cache_dir=None,
    jobs=None,
))]
#[allow(clippy::too_many_arguments)]
fn select(
    py: Python<'_>,
    dataset: &PyDataset,
    strategies: Vec<String>,
    n_folds: usize,
    seed: u64,
    max_k: usize,
    top_frac: f64,
    band: Option<usize>,
    cache_dir: Option<PathBuf>,
    jobs: Option<usize>,
) -> PyResult<String> {
    let strategies = strategies
        .iter()
        .map(|s| s.parse::<Strategy>())
        .collect::<msts::Result<Vec<_>>>()
        .map_err(err)?;
    let config = SelectionConfig {
        n_folds,
        seed,
        max_k,
        top_frac,
    };
    let ds = dataset.inner.clone();
    let dtw = dtw_config(band);
    py.detach(move || -> msts::Result<String> {
        thread_pool(jobs)?.install(|| {
            let cache = cache_dir.map(|d| DistanceCache::new(d, CacheKey::new(&ds, dtw)));
            let prepared = prepare_matrices(&ds, dtw, cache.as_ref(), |_, _| {})?;
            let distance_secs = prepared.elapsed.as_secs_f64();
            let exp = Experiment::new(ds, prepared.matrices, config)?;
            build_report(&exp, dtw, distance_secs, &strategies)?.to_json()
        })
    })
    .map_err(err)
}

#[pymodule]
fn pymsts(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(dtw_distance, m)?)?;
    m.add_function(wrap_pyfunction!(distance_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(expected_mi, m)?)?;
    m.add_function(wrap_pyfunction!(ami, m)?)?;
    m.add_function(wrap_pyfunction!(merit_score, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_subsets, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    Ok(())
}
