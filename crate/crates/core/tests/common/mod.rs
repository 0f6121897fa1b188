//! Brute-force reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's algorithms.

#![allow(dead_code)]

pub mod props;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum squared-difference cost over every monotone, contiguous warping
/// path, found by enumerating the paths.
pub fn dtw_by_paths(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).powi(2);
        if i == a.len() - 1 && j == b.len() - 1 {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Textbook full-table DTW, used for larger inputs than path enumeration
/// can handle.
pub fn dtw_full_table(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let c = (a[i - 1] - b[j - 1]).powi(2);
            d[i][j] = c + d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
        }
    }
    d[n][m]
}

/// `sum p(x,y) ln(p(x,y) / (p(x) p(y)))`, straight from the definition.
pub fn mi_direct(x: &[u32], y: &[u32]) -> f64 {
    let n = x.len() as f64;
    let mut joint: HashMap<(u32, u32), f64> = HashMap::new();
    let mut px: HashMap<u32, f64> = HashMap::new();
    let mut py: HashMap<u32, f64> = HashMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1.0 / n;
        *px.entry(a).or_default() += 1.0 / n;
        *py.entry(b).or_default() += 1.0 / n;
    }
    joint
        .iter()
        .map(|(&(a, b), &p)| p * (p / (px[&a] * py[&b])).ln())
        .sum()
}

pub fn entropy_direct(x: &[u32]) -> f64 {
    let n = x.len() as f64;
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for &a in x {
        *counts.entry(a).or_default() += 1.0;
    }
    -counts.values().map(|c| (c / n) * (c / n).ln()).sum::<f64>()
}

/// Calls `visit` with every permutation of `items` (Heap's algorithm).
pub fn for_each_permutation(items: &mut [u32], visit: &mut impl FnMut(&[u32])) {
    fn heap(k: usize, items: &mut [u32], visit: &mut impl FnMut(&[u32])) {
        if k <= 1 {
            visit(items);
            return;
        }
        heap(k - 1, items, visit);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
            heap(k - 1, items, visit);
        }
    }
    let k = items.len();
    heap(k, items, visit);
}

/// Mean mutual information over all `N!` permutations of `y`.
pub fn expected_mi_by_permutation(x: &[u32], y: &[u32]) -> f64 {
    let mut perm = y.to_vec();
    let mut total = 0.0;
    let mut count = 0u64;
    for_each_permutation(&mut perm, &mut |p| {
        total += mi_direct(x, p);
        count += 1;
    });
    total / count as f64
}

/// Expected MI from hypergeometric cell probabilities written as
/// binomial-coefficient ratios. Independent of the log-factorial route;
/// suitable for small `N`.
pub fn expected_mi_by_binomials(x: &[u32], y: &[u32]) -> f64 {
    fn binom(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    let n = x.len() as u64;
    let marg = |v: &[u32]| {
        let mut m: HashMap<u32, u64> = HashMap::new();
        for &a in v {
            *m.entry(a).or_default() += 1;
        }
        m.into_values().collect::<Vec<_>>()
    };
    let (rows, cols) = (marg(x), marg(y));
    let mut e = 0.0;
    for &a in &rows {
        for &b in &cols {
            for nij in 1..=a.min(b) {
                let p = binom(b, nij) * binom(n - b, a - nij) / binom(n, a);
                if p == 0.0 {
                    continue;
                }
                let nf = n as f64;
                e += p * (nij as f64 / nf) * (nf * nij as f64 / (a * b) as f64).ln();
            }
        }
    }
    e
}

fn distinct(v: &[u32]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// AMI composed from independent pieces and an expected-MI oracle, with
/// the same degenerate-case conventions as the library.
pub fn ami_oracle(x: &[u32], y: &[u32], emi: impl Fn(&[u32], &[u32]) -> f64) -> f64 {
    match (distinct(x) == 1, distinct(y) == 1) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let e = emi(x, y);
    let denom = (entropy_direct(x) + entropy_direct(y)) / 2.0 - e;
    if denom.abs() < 1e-12 {
        return 0.0;
    }
    (mi_direct(x, y) - e) / denom
}

/// Deterministic random label vector pairs of length `1..=max_len` over at
/// most `max_labels` labels.
pub fn label_suite(
    seed: u64,
    count: usize,
    max_len: usize,
    max_labels: u32,
) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_len);
            let lx = rng.random_range(1..=max_labels);
            let ly = rng.random_range(1..=max_labels);
            let x = (0..n).map(|_| rng.random_range(0..lx)).collect();
            let y = (0..n).map(|_| rng.random_range(0..ly)).collect();
            (x, y)
        })
        .collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Naive reimplementation of the whole pipeline over raw series: full-table
/// DTW per pair, 1-NN by scanning, AMI via binomial expected MI, and the
/// merit formula. `series[s][f]` is sample `s`, feature `f`.
pub struct NaivePipeline {
    pub series: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<u32>,
    pub fold_of: Vec<usize>,
}

impl NaivePipeline {
    pub fn distance(&self, subset: &[usize], i: usize, j: usize) -> f64 {
        subset
            .iter()
            .map(|&f| dtw_full_table(&self.series[i][f], &self.series[j][f]))
            .sum()
    }

    pub fn predict(&self, subset: &[usize]) -> Vec<u32> {
        let n = self.labels.len();
        (0..n)
            .map(|q| {
                let mut best = (f64::INFINITY, usize::MAX);
                for j in 0..n {
                    if self.fold_of[j] == self.fold_of[q] {
                        continue;
                    }
                    let d = self.distance(subset, q, j);
                    if d < best.0 {
                        best = (d, j);
                    }
                }
                self.labels[best.1]
            })
            .collect()
    }

    pub fn accuracy(&self, subset: &[usize]) -> f64 {
        let p = self.predict(subset);
        p.iter().zip(&self.labels).filter(|(a, b)| a == b).count() as f64 / p.len() as f64
    }

    pub fn merits(&self, n_features: usize, subsets: &[Vec<usize>]) -> Vec<f64> {
        let preds: Vec<Vec<u32>> = (0..n_features).map(|f| self.predict(&[f])).collect();
        let ami = |a: &[u32], b: &[u32]| ami_oracle(a, b, expected_mi_by_binomials);
        let cf: Vec<f64> = preds.iter().map(|p| ami(p, &self.labels)).collect();
        subsets
            .iter()
            .map(|s| {
                let k = s.len() as f64;
                let mean_cf = s.iter().map(|&f| cf[f]).sum::<f64>() / k;
                let mut pairs = Vec::new();
                for a in 0..s.len() {
                    for b in a + 1..s.len() {
                        pairs.push(ami(&preds[s[a]], &preds[s[b]]));
                    }
                }
                let mean_ff = if pairs.is_empty() {
                    0.0
                } else {
                    pairs.iter().sum::<f64>() / pairs.len() as f64
                };
                k * mean_cf / (k + k * (k - 1.0) * mean_ff).sqrt()
            })
            .collect()
    }
}

/// All subsets of `0..n` with sizes `1..=max_k`, by size then
/// lexicographically, via bitmask filtering.
pub fn subsets_by_bitmask(n: usize, max_k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&f| mask & (1 << f) != 0).collect::<Vec<_>>())
        .filter(|s| s.len() <= max_k)
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Synthetic dataset: `per_class` samples in each of `classes` classes,
/// `n_features` features of length `len`. Feature `f` carries class
/// signal scaled by `strength[f]` plus uniform noise.
pub fn synthetic_records(
    seed: u64,
    classes: u32,
    per_class: usize,
    n_features: usize,
    len: usize,
    strength: &[f64],
) -> Vec<(Vec<Vec<f64>>, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in 0..classes as usize * per_class {
        let class = (s % classes as usize) as u32;
        let series = (0..n_features)
            .map(|f| {
                let phase = rng.random_range(0.0..0.5);
                (0..len)
                    .map(|t| {
                        let x = t as f64 / len as f64;
                        let signal =
                            ((class as f64 + 1.0) * std::f64::consts::PI * (x + phase)).sin();
                        strength[f] * signal + rng.random_range(-1.0..1.0)
                    })
                    .collect()
            })
            .collect();
        out.push((series, format!("c{class}")));
    }
    out
}
