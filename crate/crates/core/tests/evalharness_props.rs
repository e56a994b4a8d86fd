
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mprisk::evalharness::{
    compare_methods, labeled_enterprises, mp_average, roc_auc, run_pipeline, timestamp_sweep, EvalConfig, SME_CV,
};
use mprisk::synthgen::oracle::oracle_auc;
use mprisk::synthgen::{generate, GenConfig};

fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    // Coarse scores so ties are common.
    prop::collection::vec((0u8..20, any::<bool>()), 2..120)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| v.into_iter().map(|(s, y)| (s as f64 / 7.0, y)).unzip())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn auc_equals_mann_whitney((s, y) in scores_and_labels()) {
        let r = roc_auc(&s, &y).unwrap();
        prop_assert!((r.auc - oracle_auc(&s, &y)).abs() <= 1e-12);
    }

    #[test]
    fn auc_of_negated_scores_is_complement((s, y) in scores_and_labels()) {
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let sum = roc_auc(&s, &y).unwrap().auc + roc_auc(&neg, &y).unwrap().auc;
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn auc_ignores_increasing_transforms((s, y) in scores_and_labels(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let t: Vec<f64> = s.iter().map(|v| (a * v + b).exp()).collect();
        prop_assert_eq!(roc_auc(&s, &y).unwrap().auc, roc_auc(&t, &y).unwrap().auc);
    }

    #[test]
    fn roc_points_are_monotone_and_integrate_to_auc((s, y) in scores_and_labels()) {
        let r = roc_auc(&s, &y).unwrap();
        prop_assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        prop_assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        let mut area = 0.0;
        for w in r.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            area += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
        }
        prop_assert!((area - r.auc).abs() <= 1e-12);
    }
}

fn small(seed: u64) -> GenConfig {
    GenConfig {
        seed,
        ..GenConfig::with_total_nodes(2500)
    }
}

#[test]
fn compare_methods_is_reproducible_and_identical_methods_agree() {
    let (hin, _) = generate(&small(3)).unwrap();
    let cfg = EvalConfig {
        seed: 3,
        max_relations: 3,
        ..EvalConfig::default()
    };
    let out = run_pipeline(&hin, &cfg).unwrap();
    let mut methods = out.methods.clone();
    methods.insert("Copy of SME CV".into(), methods[SME_CV].clone());
    let a = compare_methods(&methods, &out.labels, &cfg).unwrap();
    let b = compare_methods(&methods, &out.labels, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.methods[SME_CV], a.methods["Copy of SME CV"]);
    for r in a.methods.values() {
        if let Some(v) = r.average {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn shuffled_labels_give_chance_auc() {
    let (hin, _) = generate(&GenConfig::default()).unwrap();
    let cfg = EvalConfig::default();
    let out = run_pipeline(&hin, &cfg).unwrap();
    for seed in 0..20u64 {
        let mut y = out.labels.clone();
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let report = compare_methods(&out.methods, &y, &EvalConfig { seed, ..cfg.clone() }).unwrap();
        for (name, r) in &report.methods {
            let v = r.average.unwrap_or_else(|| panic!("{name} failed: {:?}", r.error));
            assert!((0.4..=0.6).contains(&v), "seed {seed}: {name} = {v}");
        }
    }
}

#[test]
fn all_inclusive_window_equals_unfiltered_run() {
    let g = small(4);
    let (hin, _) = generate(&g).unwrap();
    let cfg = EvalConfig {
        seed: 4,
        max_relations: 3,
        ..EvalConfig::default()
    };
    let whole = run_pipeline(&hin, &cfg).unwrap();
    let sweep = timestamp_sweep(&hin, &[(i64::MIN, i64::MAX)], &cfg).unwrap();
    assert_eq!(sweep[0].metric, mp_average(&whole.report, &cfg.feature_kinds));
}

#[test]
fn edge_free_window_is_reported_not_fatal() {
    let (hin, _) = generate(&small(5)).unwrap();
    assert!(hin.nodes().iter().all(|n| n.timestamp.is_none()));
    let cfg = EvalConfig {
        max_relations: 2,
        ..EvalConfig::default()
    };
    let sweep = timestamp_sweep(&hin, &[(-10, -1)], &cfg).unwrap();
    assert_eq!(sweep.len(), 1);
    if let Some(v) = sweep[0].metric {
        assert!((0.0..=1.0).contains(&v));
    }
    let (rows, _) = labeled_enterprises(&hin.as_of(-10, -1).unwrap());
    assert!(!rows.is_empty());
}
