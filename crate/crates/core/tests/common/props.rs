//! Property checks shared by the core test suite and the acceptance
//! target. Each returns `Err(message)` with a shrunk counterexample.

#![allow(dead_code)]

use msts::dtw::build_all;
use msts::infotheory::{ami_in, entropy, LogBase};
use msts::knn_cv::{nearest_out_of_fold, stratified_folds};
use msts::merit::{merit_score, score_all, subset_count};
use msts::pipeline::{thread_pool, Experiment};
use msts::{
    dtw_distance, dtw_distance_with, mutual_information, parse_ts, CorrelationTable, Dataset,
    DtwConfig, FeatureSubset, SelectionConfig, Strategy as Search,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = fn(u32) -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("dtw_symmetric_nonnegative_self_zero", dtw_basic),
    ("dtw_band_never_below_unbanded", dtw_band),
    ("matrix_independent_of_workers", matrix_workers),
    ("folds_stratified_and_balanced", folds_stratified),
    ("prediction_uses_out_of_fold_neighbour", out_of_fold),
    ("ami_symmetric_relabel_and_base_invariant", ami_invariants),
    ("mi_bounded_by_entropies", mi_bounds),
    ("merit_monotone_in_cf_and_ff", merit_monotone),
    ("merit_singleton_equals_cf", merit_singleton),
    ("merit_feature_order_invariant", merit_order_invariant),
    ("score_all_count", score_count),
    ("strategy_dominance", strategy_dominance),
    ("accuracy_invariant_under_relabelling", relabel_accuracy),
    ("ts_round_trip", ts_round_trip),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| match e {
        TestError::Fail(why, input) => format!("{why} for input {input:?}"),
        TestError::Abort(why) => format!("aborted: {why}"),
    })
}

fn series(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_len)
}

fn labels(max_len: usize, max_labels: u32) -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (1..=max_len).prop_flat_map(move |n| {
        (
            prop::collection::vec(0..max_labels, n),
            prop::collection::vec(0..max_labels, n),
        )
    })
}

/// Random dataset with every class holding at least `min_per_class`
/// samples.
pub fn random_dataset(seed: u64, min_per_class: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = rng.random_range(2..=3usize);
    let n_features = rng.random_range(2..=4usize);
    let len = rng.random_range(3..=8usize);
    let mut records = Vec::new();
    for c in 0..classes {
        for _ in 0..rng.random_range(min_per_class..=min_per_class + 2) {
            let s = (0..n_features)
                .map(|_| {
                    (0..len)
                        .map(|_| rng.random_range(-2.0..2.0) + c as f64)
                        .collect()
                })
                .collect();
            records.push((s, format!("class{c}")));
        }
    }
    let names = (0..classes).map(|c| format!("class{c}")).collect();
    Dataset::new(names, records).unwrap()
}

pub fn dtw_basic(cases: u32) -> Result<(), String> {
    run(cases, (series(12), series(12)), |(a, b)| {
        let ab = dtw_distance(&a, &b).unwrap();
        let ba = dtw_distance(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0), "{ab} vs {ba}");
        prop_assert_eq!(dtw_distance(&a, &a).unwrap(), 0.0);
        Ok(())
    })
}

pub fn dtw_band(cases: u32) -> Result<(), String> {
    run(
        cases,
        (series(12), series(12), 0usize..6),
        |(a, b, band)| {
            let free = dtw_distance(&a, &b).unwrap();
            let banded = dtw_distance_with(&a, &b, DtwConfig::with_band(band)).unwrap();
            prop_assert!(banded >= free - 1e-12);
            Ok(())
        },
    )
}

pub fn matrix_workers(cases: u32) -> Result<(), String> {
    run(cases.min(32), any::<u64>(), |seed| {
        let ds = random_dataset(seed, 2);
        let one = thread_pool(Some(1))
            .unwrap()
            .install(|| build_all(&ds, DtwConfig::default()).unwrap());
        let many = thread_pool(Some(4))
            .unwrap()
            .install(|| build_all(&ds, DtwConfig::default()).unwrap());
        for (x, y) in one.iter().zip(&many) {
            let bx: Vec<u64> = x.values().iter().map(|v| v.to_bits()).collect();
            let by: Vec<u64> = y.values().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(bx, by);
        }
        Ok(())
    })
}

pub fn folds_stratified(cases: u32) -> Result<(), String> {
    let strat = (2usize..=5).prop_flat_map(|k| {
        (
            Just(k),
            prop::collection::vec(k..=3 * k, 1..=4),
            any::<u64>(),
        )
    });
    run(cases, strat, |(k, class_sizes, seed)| {
        let mut labels = Vec::new();
        for (c, &n) in class_sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(c as u32, n));
        }
        let folds = stratified_folds(&labels, k, seed).unwrap();
        prop_assert!(folds.check_stratified(&labels).is_ok());
        for c in 0..class_sizes.len() {
            let mut per_fold = vec![0usize; k];
            for (i, &l) in labels.iter().enumerate() {
                if l == c as u32 {
                    per_fold[folds.fold_of()[i]] += 1;
                }
            }
            let (lo, hi) = (
                per_fold.iter().min().unwrap(),
                per_fold.iter().max().unwrap(),
            );
            prop_assert!(hi - lo <= 1, "class {c}: {per_fold:?}");
        }
        let sizes = folds.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(stratified_folds(&labels, k, seed).unwrap(), folds);
        Ok(())
    })
}

pub fn out_of_fold(cases: u32) -> Result<(), String> {
    run(cases.min(64), (any::<u64>(), 2usize..=4), |(seed, k)| {
        let ds = random_dataset(seed, 4);
        let mats = build_all(&ds, DtwConfig::default()).unwrap();
        let folds = msts::make_folds(&ds, k, seed).unwrap();
        // Unique "labels" make each prediction name its neighbour.
        let ids: Vec<u32> = (0..ds.len() as u32).collect();
        let preds = msts::knn_cv::cv_predict_codes(&ids, &[0, 1], &mats, &folds).unwrap();
        let refs: Vec<_> = mats[..2].iter().collect();
        for (q, &p) in preds.predicted.iter().enumerate() {
            let j = p as usize;
            prop_assert_ne!(folds.fold_of()[j], folds.fold_of()[q]);
            prop_assert_eq!(Some(j), nearest_out_of_fold(q, &refs, &folds));
            let d = mats[0].get(q, j) + mats[1].get(q, j);
            for o in 0..ds.len() {
                if folds.fold_of()[o] != folds.fold_of()[q] {
                    prop_assert!(mats[0].get(q, o) + mats[1].get(q, o) >= d);
                }
            }
        }
        Ok(())
    })
}

pub fn ami_invariants(cases: u32) -> Result<(), String> {
    run(cases, (labels(20, 4), any::<u64>()), |((x, y), seed)| {
        let a = ami_in(&x, &y, LogBase::Natural).unwrap();
        let b = ami_in(&y, &x, LogBase::Natural).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "symmetry {a} vs {b}");
        let mut perm: Vec<u32> = (0..4).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..4).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let xr: Vec<String> = x
            .iter()
            .map(|&l| format!("L{}", perm[l as usize]))
            .collect();
        let r = ami_in(&xr, &y, LogBase::Natural).unwrap();
        prop_assert!((a - r).abs() <= 1e-12, "relabel {a} vs {r}");
        let two = ami_in(&x, &y, LogBase::Two).unwrap();
        prop_assert!((a - two).abs() <= 1e-12, "base {a} vs {two}");
        prop_assert!(a <= 1.0 + 1e-12);
        Ok(())
    })
}

pub fn mi_bounds(cases: u32) -> Result<(), String> {
    run(cases, labels(30, 5), |(x, y)| {
        let mi = mutual_information(&x, &y).unwrap();
        let h = entropy(&x).unwrap().min(entropy(&y).unwrap());
        prop_assert!(mi >= -1e-12 && mi <= h + 1e-12, "mi {mi}, min entropy {h}");
        Ok(())
    })
}

fn table_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(-0.2f64..1.0, n),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n),
        )
            .prop_map(|(cf, raw)| {
                let n = cf.len();
                let mut ff = vec![vec![1.0; n]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        ff[i][j] = raw[i][j];
                        ff[j][i] = raw[i][j];
                    }
                }
                (cf, ff)
            })
    })
}

pub fn merit_monotone(cases: u32) -> Result<(), String> {
    run(
        cases,
        (table_strategy(), 0.0f64..0.5, any::<prop::sample::Index>()),
        |((cf, ff), bump, idx)| {
            let n = cf.len();
            let table = CorrelationTable::new(cf.clone(), ff.clone()).unwrap();
            let all = FeatureSubset::new((0..n).collect()).unwrap();
            let base = merit_score(&all, &table).unwrap().value;

            let f = idx.index(n);
            let mut cf2 = cf.clone();
            cf2[f] += bump;
            let up = merit_score(&all, &CorrelationTable::new(cf2, ff.clone()).unwrap())
                .unwrap()
                .value;
            prop_assert!(up >= base - 1e-12, "cf bump lowered merit: {base} -> {up}");

            let mean_cf = cf.iter().sum::<f64>() / n as f64;
            let g = (f + 1) % n;
            let mut ff2 = ff.clone();
            ff2[f][g] += bump;
            ff2[g][f] += bump;
            let down = merit_score(&all, &CorrelationTable::new(cf, ff2).unwrap())
                .unwrap()
                .value;
            if mean_cf >= 0.0 {
                prop_assert!(
                    down <= base + 1e-12,
                    "ff bump raised merit: {base} -> {down}"
                );
            } else {
                prop_assert!(down >= base - 1e-12);
            }
            Ok(())
        },
    )
}

pub fn merit_singleton(cases: u32) -> Result<(), String> {
    run(cases, table_strategy(), |(cf, ff)| {
        let table = CorrelationTable::new(cf.clone(), ff).unwrap();
        for (f, &c) in cf.iter().enumerate() {
            let m = merit_score(&FeatureSubset::new(vec![f]).unwrap(), &table).unwrap();
            prop_assert!((m.value - c).abs() <= 1e-12);
        }
        Ok(())
    })
}

pub fn merit_order_invariant(cases: u32) -> Result<(), String> {
    run(
        cases,
        (table_strategy(), any::<u64>()),
        |((cf, ff), seed)| {
            let n = cf.len();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            // New feature perm[f] is old feature f.
            let mut cf2 = vec![0.0; n];
            let mut ff2 = vec![vec![0.0; n]; n];
            for f in 0..n {
                cf2[perm[f]] = cf[f];
                for g in 0..n {
                    ff2[perm[f]][perm[g]] = ff[f][g];
                }
            }
            let t1 = CorrelationTable::new(cf, ff).unwrap();
            let t2 = CorrelationTable::new(cf2, ff2).unwrap();
            for s in msts::enumerate_subsets(n, n).unwrap() {
                let mapped =
                    FeatureSubset::new(s.features().iter().map(|&f| perm[f]).collect()).unwrap();
                let a = merit_score(&s, &t1).unwrap().value;
                let b = merit_score(&mapped, &t2).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-12, "{s}: {a} vs {b}");
            }
            Ok(())
        },
    )
}

pub fn score_count(cases: u32) -> Result<(), String> {
    run(
        cases,
        (table_strategy(), 1usize..=6),
        |((cf, ff), max_k)| {
            let n = cf.len();
            let max_k = max_k.min(n);
            let table = CorrelationTable::new(cf, ff).unwrap();
            let scores = score_all(&table, max_k).unwrap();
            let binom = |n: u64, k: u64| (0..k).fold(1u64, |a, i| a * (n - i) / (i + 1));
            let want: u64 = (1..=max_k as u64).map(|j| binom(n as u64, j)).sum();
            prop_assert_eq!(scores.len() as u64, want);
            prop_assert_eq!(subset_count(n, max_k), want);
            Ok(())
        },
    )
}

fn experiment(ds: Dataset, top_frac: f64) -> Experiment {
    let mats = build_all(&ds, DtwConfig::default()).unwrap();
    let config = SelectionConfig {
        top_frac,
        ..SelectionConfig::default()
    };
    Experiment::new(ds, mats, config).unwrap()
}

pub fn strategy_dominance(cases: u32) -> Result<(), String> {
    run(
        cases.min(48),
        (any::<u64>(), 0.05f64..=1.0),
        |(seed, top_frac)| {
            let exp = experiment(random_dataset(seed, 3), top_frac);
            let s1 = exp.run(Search::Merit).unwrap().0;
            let s2 = exp.run(Search::MeritWrapper).unwrap().0;
            let ex = exp.run(Search::Exhaustive).unwrap().0;
            prop_assert!(ex.chosen_accuracy >= s2.chosen_accuracy);
            prop_assert!(s2.chosen_accuracy >= s1.chosen_accuracy);
            prop_assert_eq!(s1.accuracy_evaluations, 1);
            prop_assert_eq!(ex.accuracy_evaluations, exp.subsets().len());
            Ok(())
        },
    )
}

pub fn relabel_accuracy(cases: u32) -> Result<(), String> {
    run(cases.min(48), any::<u64>(), |seed| {
        let ds = random_dataset(seed, 3);
        let names: Vec<String> = ds
            .class_labels()
            .iter()
            .map(|l| format!("renamed-{l}"))
            .collect();
        let records = ds
            .samples()
            .iter()
            .map(|s| (s.series.clone(), format!("renamed-{}", s.label)))
            .collect();
        let renamed = Dataset::new(names, records).unwrap();
        let a = experiment(ds, 0.5).run(Search::Exhaustive).unwrap().0;
        let b = experiment(renamed, 0.5).run(Search::Exhaustive).unwrap().0;
        let acc = |r: &msts::SelectionResult| {
            r.evaluations.iter().map(|e| e.accuracy).collect::<Vec<_>>()
        };
        prop_assert_eq!(acc(&a), acc(&b));
        Ok(())
    })
}

pub fn ts_round_trip(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let ds = random_dataset(seed, 1).with_name("roundtrip");
        let back = parse_ts(&ds.to_ts_string(), "memory").unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(back.fingerprint(), ds.fingerprint());
        Ok(())
    })
}
