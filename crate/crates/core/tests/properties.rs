use mivs_core::baselines::{fit_pca, max_components};
use mivs_core::eval::{kfold_split, log_grid, nmse, trim_outliers};
use mivs_core::mi::{all_stats, knn_stats, NeighborStrategy, PointSet};
use mivs_core::selector::{backward_step, run_option2, Decision, Option2Config, Provenance, StepKind};
use mivs_core::{Dataset, MiConfig, MiEstimator, VariableSubset};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dataset(n: usize, m: usize) -> impl Strategy<Value = Dataset> {
    (prop::collection::vec(-10.0f64..10.0, n * m), prop::collection::vec(-10.0f64..10.0, n))
        .prop_map(move |(x, y)| Dataset::new(DMatrix::from_row_slice(n, m, &x), y, None).unwrap())
}

fn reversed_rows(d: &Dataset) -> Dataset {
    let order: Vec<usize> = (0..d.n_samples()).rev().collect();
    d.select_rows(&order).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mi_ignores_sample_order(d in dataset(40, 3), k in 1usize..8) {
        let a = MiEstimator::new(&d, MiConfig::with_k(k)).unwrap();
        let b = MiEstimator::new(&reversed_rows(&d), MiConfig::with_k(k)).unwrap();
        for s in [&[0usize][..], &[1, 2], &[0, 1, 2]] {
            prop_assert_eq!(a.estimate(s).unwrap().value, b.estimate(s).unwrap().value);
        }
    }

    #[test]
    fn tree_equals_brute_force(
        n in 5usize..120,
        dim in 1usize..6,
        k in 1usize..5,
        grid in any::<bool>(),
        seed in any::<u64>(),
    ) {
        prop_assume!(k < n);
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (s >> 11) as f64 / (1u64 << 53) as f64;
            if grid { (u * 4.0).floor() } else { u }
        };
        let coords: Vec<f64> = (0..n * dim).map(|_| next()).collect();
        let y: Vec<f64> = (0..n).map(|_| next()).collect();
        let x = PointSet::new(coords, dim);
        let tree = all_stats(&x, &y, k, NeighborStrategy::KdTree);
        for (i, t) in tree.iter().enumerate() {
            let b = knn_stats(&x, &y, i, k);
            prop_assert_eq!((t.eps, t.n_x, t.n_y), (b.eps, b.n_x, b.n_y));
            prop_assert!(t.eps == t.eps_x.max(t.eps_y));
        }
    }

    #[test]
    fn folds_partition(n in 2usize..300, l in 2usize..12, seed in any::<u64>()) {
        prop_assume!(l <= n);
        let folds = kfold_split(n, l, seed).unwrap();
        prop_assert_eq!(folds.len(), l);
        let mut all = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn trimming_drops_only_the_top_percent(e in prop::collection::vec(-100.0f64..100.0, 1..400)) {
        let keep = trim_outliers(&e);
        let n = e.len();
        let bound = n - 1 - ((n - 1) as f64 * 0.99).floor() as usize;
        prop_assert!(n - keep.len() <= bound);
        prop_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(keep.iter().all(|&i| i < n));
    }

    #[test]
    fn nmse_is_nonnegative(p in prop::collection::vec(-5.0f64..5.0, 1..50), var in 0.01f64..10.0) {
        let t: Vec<f64> = p.iter().map(|v| v * 0.5 + 1.0).collect();
        prop_assert!(nmse(&p, &t, var).unwrap() >= 0.0);
    }

    #[test]
    fn log_grid_shape(lo in 1e-4f64..1.0, span in 1.0f64..1e6, count in 2usize..50) {
        let g = log_grid(lo, lo * span, count);
        prop_assert_eq!(g.len(), count);
        prop_assert!((g[0] - lo).abs() <= 1e-12 * lo);
        prop_assert!((g[count - 1] - lo * span).abs() <= 1e-9 * lo * span);
        prop_assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pca_loadings_orthonormal(d in dataset(15, 6), a in 1usize..7) {
        let a = a.min(max_components(15, 6));
        let p = fit_pca(&d, a).unwrap();
        let g = p.rotation.transpose() * &p.rotation;
        prop_assert!((g - DMatrix::identity(a, a)).abs().max() < 1e-8);
        prop_assert!(p.score_variance.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn backward_keeps_protected(d in dataset(30, 4), protected in 0usize..4) {
        let est = MiEstimator::new(&d, MiConfig::with_k(3)).unwrap();
        let current = VariableSubset::new(vec![0, 1, 2, 3], Provenance::Option2).unwrap();
        let out = backward_step(&est, &current, protected).unwrap();
        prop_assert!(out.subset.contains(protected));
        prop_assert!(out.subset.len() + 1 >= current.len());
        match out.removed {
            Some(r) => prop_assert!(r != protected && !out.subset.contains(r)),
            None => prop_assert_eq!(out.subset.indices(), current.indices()),
        }
    }

    #[test]
    fn option2_states_never_lose_information(d in dataset(40, 5)) {
        let est = MiEstimator::new(&d, MiConfig::with_k(4)).unwrap();
        let out = run_option2(&est, Option2Config::default()).unwrap();
        let mut last = f64::NEG_INFINITY;
        let steps = &out.trace.steps;
        for (i, s) in steps.iter().enumerate() {
            // The state after a step is the forward result, or the backward
            // result that immediately follows it.
            if s.kind == StepKind::Forward && s.decision == Decision::Accepted {
                let state = match steps.get(i + 1) {
                    Some(b) if b.kind == StepKind::Backward && b.decision == Decision::Removed => b.mi.unwrap(),
                    _ => s.mi.unwrap(),
                };
                prop_assert!(state >= last);
                last = state;
            }
        }
        prop_assert_eq!(out.mi.value, last);
    }
}
