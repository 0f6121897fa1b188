//! Multivariate time-series classification datasets.
//!
//! A [`Dataset`] holds `N` labelled samples, each made of `n_features`
//! equal-length real series. Datasets are read from the UEA/UCR `.ts`
//! format or from CSV (long or wide layout) and are immutable once built.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One labelled multivariate series.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `series[f][t]` is feature `f` at timestep `t`.
    pub series: Vec<Vec<f64>>,
    pub label: String,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    name: Option<String>,
    samples: Vec<Sample>,
    n_features: usize,
    series_length: usize,
    class_labels: Vec<String>,
}

/// Dataset shape in the form of a summary table row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub name: Option<String>,
    pub n_samples: usize,
    pub n_classes: usize,
    pub n_features: usize,
    pub series_length: usize,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} samples, {} classes, {} features, length {}",
            self.n_samples, self.n_classes, self.n_features, self.series_length
        )
    }
}

// The problem name is metadata and does not take part in equality.
impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.n_features == other.n_features
            && self.series_length == other.series_length
            && self.class_labels == other.class_labels
            && self.samples == other.samples
    }
}

impl Dataset {
    /// Builds a dataset from `(series, label)` pairs, assigning indices in
    /// input order.
    pub fn new(class_labels: Vec<String>, records: Vec<(Vec<Vec<f64>>, String)>) -> Result<Self> {
        let (n_features, series_length) = match records.first() {
            Some((series, _)) => (series.len(), series.first().map_or(0, Vec::len)),
            None => (0, 0),
        };
        Self::with_shape(class_labels, n_features, series_length, records)
    }

    /// Like [`Dataset::new`] but with an explicit shape, so that empty
    /// datasets still carry their dimensions.
    pub fn with_shape(
        class_labels: Vec<String>,
        n_features: usize,
        series_length: usize,
        records: Vec<(Vec<Vec<f64>>, String)>,
    ) -> Result<Self> {
        if class_labels.is_empty() {
            return Err(Error::InvalidDataset("no class labels declared".into()));
        }
        let mut seen = HashSet::new();
        for label in &class_labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "class label {label:?} declared twice"
                )));
            }
        }
        let mut samples = Vec::with_capacity(records.len());
        for (index, (series, label)) in records.into_iter().enumerate() {
            if !seen.contains(label.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "sample {index} has undeclared class label {label:?}"
                )));
            }
            if series.len() != n_features {
                return Err(Error::InvalidDataset(format!(
                    "sample {index} has {} features, expected {n_features}",
                    series.len()
                )));
            }
            for (f, values) in series.iter().enumerate() {
                if values.len() != series_length {
                    return Err(Error::InvalidDataset(format!(
                        "sample {index} feature {f} has length {}, expected {series_length}",
                        values.len()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::InvalidDataset(format!(
                        "sample {index} feature {f} contains non-finite value {v}"
                    )));
                }
            }
            samples.push(Sample {
                series,
                label,
                index,
            });
        }
        if !samples.is_empty() && (n_features == 0 || series_length == 0) {
            return Err(Error::InvalidDataset(
                "samples must have at least one feature and one timestep".into(),
            ));
        }
        Ok(Self {
            name: None,
            samples,
            n_features,
            series_length,
            class_labels,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn series_length(&self) -> usize {
        self.series_length
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    /// The series of feature `feature` for sample `sample`.
    pub fn series(&self, sample: usize, feature: usize) -> &[f64] {
        &self.samples[sample].series[feature]
    }

    pub fn labels(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.label.as_str()).collect()
    }

    /// Dense integer codes for sample labels, in `class_labels` order.
    pub fn label_codes(&self) -> Vec<u32> {
        let lookup: HashMap<&str, u32> = self
            .class_labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        self.samples
            .iter()
            .map(|s| lookup[s.label.as_str()])
            .collect()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            name: self.name.clone(),
            n_samples: self.len(),
            n_classes: self.class_labels.len(),
            n_features: self.n_features,
            series_length: self.series_length,
        }
    }

    /// SHA-256 over the dataset content (shape, labels and value bits).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_features as u64).to_le_bytes());
        hasher.update((self.series_length as u64).to_le_bytes());
        hasher.update((self.class_labels.len() as u64).to_le_bytes());
        for label in &self.class_labels {
            hasher.update((label.len() as u64).to_le_bytes());
            hasher.update(label.as_bytes());
        }
        hasher.update((self.samples.len() as u64).to_le_bytes());
        for sample in &self.samples {
            hasher.update((sample.label.len() as u64).to_le_bytes());
            hasher.update(sample.label.as_bytes());
            for values in &sample.series {
                for v in values {
                    hasher.update(v.to_bits().to_le_bytes());
                }
            }
        }
        hasher.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Concatenates `other` after `self`, re-indexing its samples.
    pub fn merge(&self, other: &Dataset) -> Result<Dataset> {
        if self.n_features != other.n_features || self.series_length != other.series_length {
            return Err(Error::MergeMismatch(format!(
                "shape {}x{} vs {}x{}",
                self.n_features, self.series_length, other.n_features, other.series_length
            )));
        }
        let mine: HashSet<&String> = self.class_labels.iter().collect();
        let theirs: HashSet<&String> = other.class_labels.iter().collect();
        if mine != theirs {
            return Err(Error::MergeMismatch(format!(
                "class labels {:?} vs {:?}",
                self.class_labels, other.class_labels
            )));
        }
        let samples = self
            .samples
            .iter()
            .chain(&other.samples)
            .enumerate()
            .map(|(index, s)| Sample { index, ..s.clone() })
            .collect();
        Ok(Dataset {
            name: self.name.clone().or_else(|| other.name.clone()),
            samples,
            n_features: self.n_features,
            series_length: self.series_length,
            class_labels: self.class_labels.clone(),
        })
    }

    /// Serializes to `.ts` text. Values use the shortest representation
    /// that parses back to the same bits.
    pub fn to_ts_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "@problemName {}",
            self.name.as_deref().unwrap_or("dataset")
        );
        let _ = writeln!(out, "@timeStamps false");
        let _ = writeln!(out, "@missing false");
        let _ = writeln!(out, "@univariate {}", self.n_features == 1);
        let _ = writeln!(out, "@dimensions {}", self.n_features);
        let _ = writeln!(out, "@equalLength true");
        let _ = writeln!(out, "@seriesLength {}", self.series_length);
        let _ = writeln!(out, "@classLabel true {}", self.class_labels.join(" "));
        let _ = writeln!(out, "@data");
        for sample in &self.samples {
            for values in &sample.series {
                for (t, v) in values.iter().enumerate() {
                    if t > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{v:?}");
                }
                out.push(':');
            }
            out.push_str(&sample.label);
            out.push('\n');
        }
        out
    }

    pub fn write_ts(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_ts_string())?;
        Ok(())
    }
}

/// Reads a `.ts` file.
pub fn load_ts(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_ts(&text, &path.display().to_string())
}

/// Loads `<dir>/<name>_TRAIN.ts` and `<dir>/<name>_TEST.ts` and merges
/// them, train samples first.
pub fn load_ts_split(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let train = load_ts(dir.join(format!("{name}_TRAIN.ts")))?;
    let test = load_ts(dir.join(format!("{name}_TEST.ts")))?;
    train.merge(&test)
}

#[derive(Default)]
struct TsHeader {
    name: Option<String>,
    univariate: Option<bool>,
    dimensions: Option<usize>,
    series_length: Option<usize>,
    class_labels: Option<Vec<String>>,
}

fn parse_bool(value: &str, origin: &str, line: usize) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Parse {
            path: origin.into(),
            line,
            message: format!("expected true or false, found {other:?}"),
        }),
    }
}

/// Parses `.ts` content. `origin` is used in diagnostics.
pub fn parse_ts(text: &str, origin: &str) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.into(),
        line,
        message,
    };
    let mut header = TsHeader::default();
    let mut in_data = false;
    let mut records = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !in_data {
            if !line.starts_with('@') {
                return Err(err(line_no, "expected a header line or @data".into()));
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default().to_ascii_lowercase();
            let rest: Vec<&str> = parts.collect();
            let single = || -> Result<&str> {
                rest.first()
                    .copied()
                    .ok_or_else(|| err(line_no, format!("{tag} needs a value")))
            };
            match tag.as_str() {
                "@problemname" => header.name = Some(rest.join(" ")),
                "@timestamps" => {
                    if parse_bool(single()?, origin, line_no)? {
                        return Err(err(line_no, "timestamped series are not supported".into()));
                    }
                }
                "@missing" => {
                    if parse_bool(single()?, origin, line_no)? {
                        return Err(err(line_no, "missing values are not supported".into()));
                    }
                }
                "@univariate" => header.univariate = Some(parse_bool(single()?, origin, line_no)?),
                "@dimensions" | "@dimension" => {
                    let v = single()?;
                    header.dimensions = Some(
                        v.parse()
                            .map_err(|_| err(line_no, format!("bad dimension count {v:?}")))?,
                    );
                }
                "@equallength" => {
                    if !parse_bool(single()?, origin, line_no)? {
                        return Err(err(
                            line_no,
                            "unequal-length series are not supported".into(),
                        ));
                    }
                }
                "@serieslength" => {
                    let v = single()?;
                    header.series_length = Some(
                        v.parse()
                            .map_err(|_| err(line_no, format!("bad series length {v:?}")))?,
                    );
                }
                "@classlabel" => {
                    if !parse_bool(single()?, origin, line_no)? {
                        return Err(err(line_no, "class labels must be declared".into()));
                    }
                    let labels: Vec<String> = rest[1..].iter().map(|s| s.to_string()).collect();
                    if labels.is_empty() {
                        return Err(err(line_no, "@classLabel true lists no labels".into()));
                    }
                    header.class_labels = Some(labels);
                }
                "@targetlabel" => {
                    return Err(err(line_no, "regression targets are not supported".into()));
                }
                "@data" => {
                    if header.class_labels.is_none() {
                        return Err(err(line_no, "@data reached without @classLabel".into()));
                    }
                    in_data = true;
                }
                _ => return Err(err(line_no, format!("unknown header tag {tag}"))),
            }
            continue;
        }

        let fields: Vec<&str> = line.split(':').collect();
        if fields.len() < 2 {
            return Err(err(line_no, "record has no class label".into()));
        }
        let label = fields[fields.len() - 1].trim().to_string();
        let mut series = Vec::with_capacity(fields.len() - 1);
        for dim in &fields[..fields.len() - 1] {
            let mut values = Vec::new();
            for token in dim.split(',') {
                let token = token.trim();
                if token == "?" || token.eq_ignore_ascii_case("nan") {
                    return Err(err(line_no, "missing value in record".into()));
                }
                let v: f64 = token
                    .parse()
                    .map_err(|_| err(line_no, format!("non-numeric value {token:?}")))?;
                if !v.is_finite() {
                    return Err(err(line_no, format!("non-finite value {token:?}")));
                }
                values.push(v);
            }
            series.push(values);
        }
        let declared = header.class_labels.as_ref().expect("checked at @data");
        if !declared.contains(&label) {
            return Err(err(line_no, format!("undeclared class label {label:?}")));
        }
        let expected_dims = match (header.dimensions, header.univariate) {
            (Some(d), _) => Some(d),
            (None, Some(true)) => Some(1),
            _ => None,
        };
        if let Some(d) = expected_dims {
            if series.len() != d {
                return Err(err(
                    line_no,
                    format!(
                        "record has {} dimensions, header declares {d}",
                        series.len()
                    ),
                ));
            }
        }
        let len = series[0].len();
        if series.iter().any(|s| s.len() != len) {
            return Err(err(line_no, "unequal series lengths within record".into()));
        }
        if let Some(m) = header.series_length {
            if len != m {
                return Err(err(
                    line_no,
                    format!("series length {len}, header declares {m}"),
                ));
            }
        }
        if let Some((first, _)) = records.first() {
            let first: &Vec<Vec<f64>> = first;
            if first.len() != series.len() || first[0].len() != len {
                return Err(err(
                    line_no,
                    "record shape differs from earlier records".into(),
                ));
            }
        }
        records.push((series, label));
    }

    if !in_data {
        return Err(err(text.lines().count(), "no @data section".into()));
    }
    let class_labels = header.class_labels.unwrap_or_default();
    let (n_features, series_length) = match records.first() {
        Some((s, _)) => (s.len(), s[0].len()),
        None => (
            header
                .dimensions
                .unwrap_or(if header.univariate == Some(true) {
                    1
                } else {
                    0
                }),
            header.series_length.unwrap_or(0),
        ),
    };
    let ds = Dataset::with_shape(class_labels, n_features, series_length, records)?;
    Ok(match header.name {
        Some(name) => ds.with_name(name),
        None => ds,
    })
}

/// How a CSV file lays out the series.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvLayout {
    /// One row per cell with columns `sample_id,feature_id,timestep,value`;
    /// labels come from a separate table with columns `sample_id,label`.
    Long { labels: PathBuf },
    /// One row per (sample, feature) with columns
    /// `sample_id,label,feature_id,<value>...`.
    Wide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub layout: CsvLayout,
    /// Declared class order. Defaults to order of first appearance.
    pub class_labels: Option<Vec<String>>,
}

impl CsvSchema {
    pub fn long(labels: impl Into<PathBuf>) -> Self {
        Self {
            layout: CsvLayout::Long {
                labels: labels.into(),
            },
            class_labels: None,
        }
    }

    pub fn wide() -> Self {
        Self {
            layout: CsvLayout::Wide,
            class_labels: None,
        }
    }

    pub fn with_class_labels(mut self, labels: Vec<String>) -> Self {
        self.class_labels = Some(labels);
        self
    }
}

struct Grid {
    sample_ids: Vec<String>,
    labels: Vec<String>,
    cells: HashMap<(usize, usize, usize), f64>,
    n_features: usize,
    series_length: usize,
}

fn csv_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| csv_error(path, format!("missing column {name:?}")))
}

fn parse_field<T: std::str::FromStr>(
    value: &str,
    what: &str,
    path: &Path,
    row: usize,
) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| csv_error(path, format!("row {row}: bad {what} {value:?}")))
}

fn read_long(values_path: &Path, labels_path: &Path) -> Result<Grid> {
    let mut sample_ids = Vec::new();
    let mut labels = Vec::new();
    let mut sample_of: HashMap<String, usize> = HashMap::new();

    let mut reader =
        csv::Reader::from_path(labels_path).map_err(|e| csv_error(labels_path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(labels_path, e.to_string()))?
        .clone();
    let (id_col, label_col) = (
        column(&headers, "sample_id", labels_path)?,
        column(&headers, "label", labels_path)?,
    );
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(labels_path, e.to_string()))?;
        let id = rec.get(id_col).unwrap_or_default().trim().to_string();
        let label = rec.get(label_col).unwrap_or_default().trim().to_string();
        if sample_of.insert(id.clone(), sample_ids.len()).is_some() {
            return Err(csv_error(
                labels_path,
                format!("row {}: duplicate sample {id:?}", row + 2),
            ));
        }
        sample_ids.push(id);
        labels.push(label);
    }

    let mut reader =
        csv::Reader::from_path(values_path).map_err(|e| csv_error(values_path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(values_path, e.to_string()))?
        .clone();
    let cols = [
        column(&headers, "sample_id", values_path)?,
        column(&headers, "feature_id", values_path)?,
        column(&headers, "timestep", values_path)?,
        column(&headers, "value", values_path)?,
    ];
    let mut cells = HashMap::new();
    let (mut n_features, mut series_length) = (0, 0);
    for (row, rec) in reader.records().enumerate() {
        let row = row + 2;
        let rec = rec.map_err(|e| csv_error(values_path, e.to_string()))?;
        let get = |c: usize| rec.get(c).unwrap_or_default();
        let id = get(cols[0]).trim();
        let sample = *sample_of.get(id).ok_or_else(|| {
            csv_error(
                values_path,
                format!("row {row}: sample {id:?} has no label"),
            )
        })?;
        let feature: usize = parse_field(get(cols[1]), "feature_id", values_path, row)?;
        let t: usize = parse_field(get(cols[2]), "timestep", values_path, row)?;
        let v: f64 = parse_field(get(cols[3]), "value", values_path, row)?;
        if cells.insert((sample, feature, t), v).is_some() {
            return Err(csv_error(
                values_path,
                format!(
                    "row {row}: duplicate cell (sample {id:?}, feature {feature}, timestep {t})"
                ),
            ));
        }
        n_features = n_features.max(feature + 1);
        series_length = series_length.max(t + 1);
    }
    Ok(Grid {
        sample_ids,
        labels,
        cells,
        n_features,
        series_length,
    })
}

fn read_wide(path: &Path) -> Result<Grid> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, e.to_string()))?
        .clone();
    let expected = ["sample_id", "label", "feature_id"];
    if headers.len() < 4 || headers.iter().take(3).map(str::trim).ne(expected) {
        return Err(csv_error(
            path,
            "wide layout needs header sample_id,label,feature_id,<values>",
        ));
    }
    let mut sample_ids = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut sample_of: HashMap<String, usize> = HashMap::new();
    let mut cells = HashMap::new();
    let mut n_features = 0;
    let mut series_length = None;
    for (row, rec) in reader.records().enumerate() {
        let row = row + 2;
        let rec = rec.map_err(|e| csv_error(path, e.to_string()))?;
        let id = rec[0].trim().to_string();
        let label = rec[1].trim().to_string();
        let sample = match sample_of.get(&id) {
            Some(&s) => {
                if labels[s] != label {
                    return Err(csv_error(
                        path,
                        format!("row {row}: conflicting labels for sample {id:?}"),
                    ));
                }
                s
            }
            None => {
                sample_of.insert(id.clone(), sample_ids.len());
                sample_ids.push(id.clone());
                labels.push(label);
                sample_ids.len() - 1
            }
        };
        let feature: usize = parse_field(&rec[2], "feature_id", path, row)?;
        let values: Vec<f64> = rec
            .iter()
            .skip(3)
            .map(|v| parse_field(v, "value", path, row))
            .collect::<Result<_>>()?;
        match series_length {
            None => series_length = Some(values.len()),
            Some(m) if m != values.len() => {
                return Err(csv_error(
                    path,
                    format!(
                        "row {row}: ragged series of length {}, expected {m}",
                        values.len()
                    ),
                ));
            }
            _ => {}
        }
        for (t, v) in values.into_iter().enumerate() {
            if cells.insert((sample, feature, t), v).is_some() {
                return Err(csv_error(
                    path,
                    format!("row {row}: duplicate cell (sample {id:?}, feature {feature}, timestep {t})"),
                ));
            }
        }
        n_features = n_features.max(feature + 1);
    }
    Ok(Grid {
        sample_ids,
        labels,
        cells,
        n_features,
        series_length: series_length.unwrap_or(0),
    })
}

/// Reads a CSV dataset. Every (sample, feature, timestep) cell must be
/// present exactly once.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut grid = match &schema.layout {
        CsvLayout::Long { labels } => read_long(path, labels)?,
        CsvLayout::Wide => read_wide(path)?,
    };
    if grid.cells.len() != grid.sample_ids.len() * grid.n_features * grid.series_length {
        for (s, id) in grid.sample_ids.iter().enumerate() {
            for f in 0..grid.n_features {
                for t in 0..grid.series_length {
                    if !grid.cells.contains_key(&(s, f, t)) {
                        return Err(csv_error(
                            path,
                            format!("ragged series: sample {id:?} lacks feature {f} timestep {t}"),
                        ));
                    }
                }
            }
        }
    }
    let class_labels = match &schema.class_labels {
        Some(declared) => declared.clone(),
        None => {
            let mut seen = HashSet::new();
            grid.labels
                .iter()
                .filter(|l| seen.insert(l.as_str()))
                .cloned()
                .collect()
        }
    };
    let labels = std::mem::take(&mut grid.labels);
    let records = labels
        .into_iter()
        .enumerate()
        .map(|(s, label)| {
            let series = (0..grid.n_features)
                .map(|f| {
                    (0..grid.series_length)
                        .map(|t| grid.cells[&(s, f, t)])
                        .collect()
                })
                .collect();
            (series, label)
        })
        .collect();
    let ds = Dataset::with_shape(class_labels, grid.n_features, grid.series_length, records)?;
    Ok(match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => ds.with_name(stem),
        None => ds,
    })
}
