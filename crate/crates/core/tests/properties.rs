use proptest::prelude::*;

use shaml::curvedata::{
    balanced_subset, compute_sha_from_bsd, read_csv, save_csv, synthesize_dataset, train_test_split, validate_record,
    ClassField, ClassSpec, Dataset, SplitSpec, SYNTHETIC_TOL,
};
use shaml::featureng::{fit_apply_scaler, prepare, FeatureMatrix, FeatureSpec, Target};
use shaml::metrics::{accuracy, mcc, threshold_accuracy_curve};
use shaml::models::{gbm_fit, GbmTask, TrainConfig};
use shaml::numcore::{dot, mean, ols_fit, pca, symmetric_eigen, variance, Matrix};

fn fast() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

fn class_spec() -> impl Strategy<Value = ClassSpec> {
    prop::collection::btree_map(prop::sample::select(vec![1u64, 4, 9, 16, 25]), 1u64..5, 1..4)
        .prop_map(ClassSpec)
}

fn matrix(rows: std::ops::Range<usize>, cols: usize) -> impl Strategy<Value = Matrix> {
    rows.prop_flat_map(move |n| {
        prop::collection::vec(-10.0f64..10.0, n * cols).prop_map(move |d| Matrix::new(n, cols, d).unwrap())
    })
}

fn standardized(x: &Matrix) -> Matrix {
    let cols: Vec<Vec<f64>> = (0..x.cols())
        .map(|j| {
            let c = x.column(j);
            let (m, s) = (mean(&c), variance(&c).sqrt());
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect();
    Matrix::from_columns(&cols).unwrap()
}

// ---------------------------------------------------------------------------
// curvedata

proptest! {
    #![proptest_config(fast())]

    #[test]
    fn synthetic_records_satisfy_bsd(n in 1usize..300, spec in class_spec(), seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &spec, seed).unwrap();
        prop_assert_eq!(ds.len(), n);
        for r in &ds.records {
            let sha = r.sha_order.unwrap() as f64;
            prop_assert!((compute_sha_from_bsd(r).unwrap() - sha).abs() <= 1e-10 * sha);
            prop_assert!(validate_record(r, SYNTHETIC_TOL).passed);
            if r.rank == 0 {
                prop_assert_eq!(r.regulator, Some(1.0));
            }
        }
    }

    #[test]
    fn balanced_subset_is_balanced_sub(n in 20usize..300, seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &ClassSpec::new(&[(1, 3), (4, 1)]), seed).unwrap();
        let b = balanced_subset(&ds, ClassField::ShaOrder, &[1, 4], seed ^ 7).unwrap();
        let ones = b.records.iter().filter(|r| r.sha_order == Some(1)).count();
        prop_assert_eq!(ones * 2, b.len());
        for r in &b.records {
            prop_assert!(ds.records.iter().any(|s| s == r));
        }
    }

    #[test]
    fn split_is_seeded_partition(n in 2usize..400, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &ClassSpec::new(&[(1, 1)]), 1).unwrap();
        let spec = SplitSpec { test_fraction: frac, seed };
        let n_test = (frac * n as f64).round() as usize;
        match train_test_split(&ds, spec) {
            Ok((tr, te)) => {
                prop_assert_eq!(te.len(), n_test);
                prop_assert_eq!(tr.len() + te.len(), n);
                let mut labels: Vec<&str> = tr.records.iter().chain(&te.records).map(|r| r.label.as_str()).collect();
                labels.sort_unstable();
                labels.dedup();
                prop_assert_eq!(labels.len(), n);
                let (tr2, te2) = train_test_split(&ds, spec).unwrap();
                prop_assert_eq!(tr.records, tr2.records);
                prop_assert_eq!(te.records, te2.records);
            }
            Err(_) => prop_assert!(n_test == 0 || n_test >= n),
        }
    }

    #[test]
    fn csv_roundtrip_is_exact(n in 1usize..60, seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &ClassSpec::new(&[(1, 1), (9, 1)]), seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        save_csv(&ds, &path).unwrap();
        let (back, report) = read_csv(std::fs::File::open(&path).unwrap(), SYNTHETIC_TOL, ds.source.clone()).unwrap();
        prop_assert!(report.dropped.is_empty());
        prop_assert_eq!(back.records, ds.records);
    }
}

// ---------------------------------------------------------------------------
// featureng

proptest! {
    #![proptest_config(fast())]

    #[test]
    fn log_matrix_commutes_with_row_permutation(n in 2usize..80, seed in any::<u64>(), perm_seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &ClassSpec::new(&[(4, 1), (9, 1)]), seed).unwrap();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by_key(|&i| (i as u64).wrapping_mul(perm_seed | 1).rotate_left(17));
        let permuted = Dataset::new(idx.iter().map(|&i| ds.records[i].clone()).collect(), ds.source.clone()).unwrap();
        let spec = FeatureSpec::new(shaml::experiments::pca::pca_features_extended(), true, false);
        let a = prepare(&ds, &spec, &Target::None).unwrap();
        let b = prepare(&permuted, &spec, &Target::None).unwrap();
        prop_assert_eq!(a.x.select_rows(&idx), b.x);
    }

    #[test]
    fn log_features_admit_exact_bsd_relation(n in 10usize..200, seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &ClassSpec::new(&[(1, 1), (4, 1), (9, 1)]), seed).unwrap();
        let m = prepare(&ds, &FeatureSpec::bsd(true, false), &Target::SqrtSha).unwrap();
        let w = [1.0, 2.0, -1.0, -1.0, -1.0];
        for (row, y) in m.x.iter_rows().zip(&m.y) {
            prop_assert!((dot(&w, row) - 2.0 * y.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn scaler_uses_training_rows_only(n in 10usize..100, seed in any::<u64>()) {
        let ds = synthesize_dataset(n, &ClassSpec::new(&[(4, 1), (9, 1)]), seed).unwrap();
        let (tr, te) = train_test_split(&ds, SplitSpec::default()).unwrap();
        let spec = FeatureSpec::bsd(true, false);
        let t = Target::ShaClass(vec![4, 9]);
        let (a, b) = (prepare(&tr, &spec, &t).unwrap(), prepare(&te, &spec, &t).unwrap());
        let (_, _, s) = fit_apply_scaler(&a, &b).unwrap();
        for j in 0..a.n_features() {
            prop_assert!((s.mean[j] - mean(&a.x.column(j))).abs() < 1e-12);
        }
        // Swapping the roles changes the statistics, so a test-fitted scaler is detectable.
        let (_, _, s_test) = fit_apply_scaler(&b, &a).unwrap();
        prop_assert!(s.mean != s_test.mean);
    }
}

// ---------------------------------------------------------------------------
// numcore

proptest! {
    #![proptest_config(fast())]

    #[test]
    fn pca_ratios_and_projection_variance(x in matrix(8..60, 4)) {
        let z = standardized(&x);
        prop_assume!(z.data().iter().all(|v| v.is_finite()));
        let p = pca(&z, 4).unwrap();
        let total: f64 = p.explained_variance_ratio.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for k in 0..4 {
            let col = p.projections.column(k);
            prop_assert!((variance(&col) - p.eigenvalues[k].max(0.0)).abs() < 1e-8);
        }
        let vtv = p.components.transpose().matmul(&p.components).unwrap();
        prop_assert!(vtv.max_abs_diff(&Matrix::identity(4)) < 1e-8);
    }

    #[test]
    fn pca_invariant_under_row_permutation(x in matrix(8..40, 3), rot in 1usize..7) {
        let z = standardized(&x);
        prop_assume!(z.data().iter().all(|v| v.is_finite()));
        let n = z.rows();
        let idx: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let a = pca(&z, 3).unwrap();
        let b = pca(&z.select_rows(&idx), 3).unwrap();
        let gaps_ok = a.eigenvalues.windows(2).all(|w| (w[0] - w[1]).abs() > 1e-6);
        prop_assume!(gaps_ok);
        prop_assert!(a.components.max_abs_diff(&b.components) < 1e-8);
    }

    #[test]
    fn ols_residual_orthogonal_to_design(x in matrix(12..60, 3), noise in prop::collection::vec(-1.0f64..1.0, 60)) {
        let n = x.rows();
        let y: Vec<f64> = (0..n).map(|i| 0.5 * x[(i, 0)] - 2.0 * x[(i, 2)] + 3.0 + noise[i]).collect();
        let fit = match ols_fit(&x, &y) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let r: Vec<f64> = (0..n).map(|i| y[i] - fit.predict_row(x.row(i))).collect();
        let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max) * n as f64;
        prop_assert!(r.iter().sum::<f64>().abs() < 1e-8 * scale);
        for j in 0..3 {
            prop_assert!(dot(&x.column(j), &r).abs() < 1e-8 * scale * 10.0);
        }
    }

    #[test]
    fn eigen_trace_and_determinant(a in prop::collection::vec(-3.0f64..3.0, 9)) {
        // B = A^T A + I is symmetric positive definite and well conditioned.
        let m = Matrix::new(3, 3, a).unwrap();
        let mut b = m.transpose().matmul(&m).unwrap();
        for i in 0..3 {
            b[(i, i)] += 1.0;
        }
        let e = symmetric_eigen(&b).unwrap();
        let trace: f64 = (0..3).map(|i| b[(i, i)]).sum();
        prop_assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-8);
        let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let prod: f64 = e.values.iter().product();
        prop_assert!((prod - det).abs() < 1e-6 * det.abs().max(1.0));
    }
}

// ---------------------------------------------------------------------------
// models

fn labeled(x: Matrix, y: Vec<f64>) -> FeatureMatrix {
    let d = x.cols();
    FeatureMatrix {
        x,
        y,
        features: shaml::curvedata::BSD_FEATURES[..d].to_vec(),
        logged: vec![false; d],
        scaler: None,
        row_labels: Vec::new(),
        classes: Some(vec![0, 1]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gbm_monotone_invariance(
        rows in prop::collection::vec((0.01f64..100.0, 0.01f64..100.0), 60..160),
        seed in any::<u64>(),
    ) {
        let y: Vec<f64> = rows.iter().map(|&(a, b)| f64::from(u8::from(a * b > 50.0))).collect();
        prop_assume!(y.iter().any(|&v| v == 0.0) && y.iter().any(|&v| v == 1.0));
        let raw = Matrix::from_rows(&rows.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap();
        let logged = Matrix::from_rows(&rows.iter().map(|&(a, b)| vec![a.ln(), b.powi(3)]).collect::<Vec<_>>()).unwrap();
        let mut cfg = TrainConfig::with_seed(seed);
        cfg.gbm.n_trees = 20;
        cfg.gbm.min_samples_leaf = 5;
        let a = gbm_fit(&labeled(raw.clone(), y.clone()), &cfg, GbmTask::Classify).unwrap();
        let b = gbm_fit(&labeled(logged.clone(), y), &cfg, GbmTask::Classify).unwrap();
        prop_assert_eq!(a.predict_raw(&raw).unwrap(), b.predict_raw(&logged).unwrap());
        prop_assert_eq!(a.train_loss, b.train_loss);
    }

    #[test]
    fn gbm_training_loss_non_increasing(
        rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 60..160),
    ) {
        let y: Vec<f64> = rows.iter().map(|&(a, b)| f64::from(u8::from(a + 0.3 * b > 0.0))).collect();
        prop_assume!(y.iter().any(|&v| v == 0.0) && y.iter().any(|&v| v == 1.0));
        let x = Matrix::from_rows(&rows.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap();
        let mut cfg = TrainConfig::default();
        cfg.gbm.n_trees = 30;
        cfg.gbm.min_samples_leaf = 5;
        let m = gbm_fit(&labeled(x, y), &cfg, GbmTask::Classify).unwrap();
        for w in m.train_loss.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "loss rose: {} -> {}", w[0], w[1]);
        }
    }
}

// ---------------------------------------------------------------------------
// metrics

proptest! {
    #[test]
    fn mcc_symmetry_and_bounds(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let (p, t): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let m = mcc(&p, &t).unwrap();
        prop_assert!(m.abs() <= 1.0 + 1e-12);
        let (np, nt): (Vec<bool>, Vec<bool>) = (p.iter().map(|b| !b).collect(), t.iter().map(|b| !b).collect());
        prop_assert!((mcc(&np, &nt).unwrap() - m).abs() < 1e-12);
        if p.iter().any(|&b| b) && p.iter().any(|&b| !b) {
            prop_assert!((mcc(&p, &p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn accuracy_permutation_invariant(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..200), rot in 0usize..200) {
        let (p, t): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let k = rot % p.len();
        let (mut p2, mut t2) = (p.clone(), t.clone());
        p2.rotate_left(k);
        t2.rotate_left(k);
        prop_assert_eq!(accuracy(&p, &t).unwrap(), accuracy(&p2, &t2).unwrap());
    }

    #[test]
    fn threshold_curve_shape(pairs in prop::collection::vec((1u64..6, 1u64..6), 1..200)) {
        let (p, t): (Vec<u64>, Vec<u64>) = pairs.into_iter().unzip();
        let ts: Vec<f64> = (1..=6).map(f64::from).collect();
        let curve = threshold_accuracy_curve(&p, &t, &ts).unwrap();
        prop_assert_eq!(curve[0].accuracy, Some(accuracy(&p, &t).unwrap()));
        for w in curve.windows(2) {
            prop_assert!(w[1].support <= w[0].support);
        }
    }
}
