//! Empirical entropy, mutual information and adjusted mutual information
//! over discrete label vectors.
//!
//! All quantities are in nats unless a [`LogBase`] is given. Sums run over
//! sorted counts so that results are bit-identical under argument swaps
//! and relabelling.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Logarithm used for information quantities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    #[inline]
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Cross-tabulation of two label vectors. Rows follow the first-appearance
/// order of labels in `x`, columns the same for `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

fn codes<T: Eq + Hash>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut lookup: HashMap<&T, usize> = HashMap::new();
    let codes = labels
        .iter()
        .map(|l| {
            let next = lookup.len();
            *lookup.entry(l).or_insert(next)
        })
        .collect();
    (codes, lookup.len())
}

fn check_lengths<T, U>(x: &[T], y: &[U]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

impl ContingencyTable {
    pub fn from_labels<T: Eq + Hash, U: Eq + Hash>(x: &[T], y: &[U]) -> Result<Self> {
        check_lengths(x, y)?;
        let (xc, rows) = codes(x);
        let (yc, cols) = codes(y);
        let mut counts = vec![vec![0u64; cols]; rows];
        for (&i, &j) in xc.iter().zip(&yc) {
            counts[i][j] += 1;
        }
        Ok(Self::from_counts(counts).expect("rectangular by construction"))
    }

    /// Builds a table from an explicit count matrix.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged contingency table".into()));
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..cols)
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        let total = row_sums.iter().sum();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical joint probability of cell `(i, j)`.
    pub fn joint_probability(&self, i: usize, j: usize) -> f64 {
        self.counts[i][j] as f64 / self.total as f64
    }

    fn cells(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.iter().flatten().copied()
    }
}

/// `-sum p ln p` over the given counts, summed in ascending count order.
fn entropy_of_counts(counts: impl IntoIterator<Item = u64>, base: LogBase) -> f64 {
    let mut counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    counts.sort_unstable();
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * base.log(p)
        })
        .sum();
    h.max(0.0)
}

fn label_counts<T: Eq + Hash>(labels: &[T]) -> Vec<u64> {
    let mut counts: HashMap<&T, u64> = HashMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_values().collect()
}

/// Shannon entropy of a label vector.
pub fn entropy<T: Eq + Hash>(labels: &[T]) -> Result<f64> {
    entropy_in(labels, LogBase::Natural)
}

pub fn entropy_in<T: Eq + Hash>(labels: &[T], base: LogBase) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    Ok(entropy_of_counts(label_counts(labels), base))
}

/// Entropy of the joint distribution of `(x, y)`.
pub fn joint_entropy<T: Eq + Hash, U: Eq + Hash>(x: &[T], y: &[U]) -> Result<f64> {
    let table = ContingencyTable::from_labels(x, y)?;
    Ok(entropy_of_counts(table.cells(), LogBase::Natural))
}

/// `H(X) + H(Y) - H(X,Y)`, clamped at zero against rounding.
pub fn mutual_information<T: Eq + Hash, U: Eq + Hash>(x: &[T], y: &[U]) -> Result<f64> {
    let table = ContingencyTable::from_labels(x, y)?;
    Ok(mutual_information_of(&table, LogBase::Natural))
}

pub fn mutual_information_of(table: &ContingencyTable, base: LogBase) -> f64 {
    let hx = entropy_of_counts(table.row_sums.iter().copied(), base);
    let hy = entropy_of_counts(table.col_sums.iter().copied(), base);
    let hxy = entropy_of_counts(table.cells(), base);
    let mi = hx + hy - hxy;
    debug_assert!(mi > -1e-12, "negative mutual information {mi}");
    mi.max(0.0)
}

/// `ln(k!)` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Expected mutual information of two labelings with the table's
/// marginals, under random permutation (hypergeometric model).
pub fn expected_mi(table: &ContingencyTable) -> f64 {
    expected_mi_in(table, LogBase::Natural)
}

pub fn expected_mi_in(table: &ContingencyTable, base: LogBase) -> f64 {
    let n = table.total;
    if n == 0 {
        return 0.0;
    }
    let mut rows: Vec<u64> = table.row_sums.iter().copied().filter(|&a| a > 0).collect();
    let mut cols: Vec<u64> = table.col_sums.iter().copied().filter(|&b| b > 0).collect();
    rows.sort_unstable();
    cols.sort_unstable();
    // The sum is symmetric in the two marginals; fix an order so that
    // swapping the arguments reproduces the same floating-point sum.
    if rows > cols {
        std::mem::swap(&mut rows, &mut cols);
    }
    let lf = ln_factorials(n as usize);
    let nf = n as f64;
    let log_n = base.log(nf);
    let lf_n = lf[n as usize];

    let mut emi = 0.0;
    for &a in &rows {
        for &b in &cols {
            let (a, b) = (a.min(b), a.max(b));
            let log_ab = base.log((a * b) as f64);
            let fixed =
                lf[a as usize] + lf[b as usize] + lf[(n - a) as usize] + lf[(n - b) as usize]
                    - lf_n;
            let lo = (a + b).saturating_sub(n).max(1);
            for nij in lo..=a {
                let x = nij as f64;
                let log_prob = fixed
                    - lf[nij as usize]
                    - lf[(a - nij) as usize]
                    - lf[(b - nij) as usize]
                    - lf[(n + nij - a - b) as usize];
                emi += (x / nf) * (log_n + base.log(x) - log_ab) * log_prob.exp();
            }
        }
    }
    emi.max(0.0)
}

/// Adjusted mutual information with arithmetic-mean normalisation.
///
/// Degenerate cases: both labelings constant gives 1, exactly one constant
/// gives 0, and a vanishing denominator gives 0.
pub fn ami<T: Eq + Hash, U: Eq + Hash>(x: &[T], y: &[U]) -> Result<f64> {
    ami_in(x, y, LogBase::Natural)
}

pub fn ami_in<T: Eq + Hash, U: Eq + Hash>(x: &[T], y: &[U], base: LogBase) -> Result<f64> {
    check_lengths(x, y)?;
    if x.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let table = ContingencyTable::from_labels(x, y)?;
    Ok(ami_of(&table, base))
}

pub fn ami_of(table: &ContingencyTable, base: LogBase) -> f64 {
    let x_constant = table.row_sums.iter().filter(|&&a| a > 0).count() <= 1;
    let y_constant = table.col_sums.iter().filter(|&&b| b > 0).count() <= 1;
    match (x_constant, y_constant) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let hx = entropy_of_counts(table.row_sums.iter().copied(), base);
    let hy = entropy_of_counts(table.col_sums.iter().copied(), base);
    let mi = mutual_information_of(table, base);
    let emi = expected_mi_in(table, base);
    let denom = (hx + hy) / 2.0 - emi;
    if denom.abs() < 1e-12 {
        return 0.0;
    }
    (mi - emi) / denom
}
