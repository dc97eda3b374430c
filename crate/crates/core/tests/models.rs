use mivs_core::eval::{log_grid, nmse};
use mivs_core::models::{
    fit_linear, fit_lssvm, fit_rbfn, fit_rbfn_with_centroids, rbf_kernel, rbfn_layout, LssvmModel, LssvmPath,
    RbfnModel, Regressor,
};
use mivs_core::Dataset;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn training_nmse(model: &impl Regressor, d: &Dataset) -> f64 {
    nmse(&model.predict_rows(d.x()).unwrap(), d.y(), variance(d.y())).unwrap()
}

/// Fits and checks the dual optimality conditions of the result.
fn lssvm(d: &Dataset, sigma: f64, gamma: f64) -> LssvmModel {
    let m = fit_lssvm(d, sigma, gamma).unwrap();
    let y_inf = d.y().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let kkt = m.kkt_residual(d).unwrap();
    assert!(kkt < 1e-6 * y_inf, "KKT residual {kkt} at sigma {sigma}, gamma {gamma}");
    m
}

fn line(xs: &[f64], f: impl Fn(f64) -> f64) -> Dataset {
    Dataset::from_columns(&[xs.to_vec()], xs.iter().map(|&x| f(x)).collect()).unwrap()
}

#[test]
fn kernel_values() {
    assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.7).unwrap(), 1.0);
    let v = rbf_kernel(&[0.0, 0.0], &[1.0, 1.0], 1.0).unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    let a = rbf_kernel(&[0.3, -1.0], &[2.0, 0.5], 0.9).unwrap();
    let b = rbf_kernel(&[2.0, 0.5], &[0.3, -1.0], 0.9).unwrap();
    assert_eq!(a, b);
    assert!(a > 0.0 && a < 1.0);
    assert!(rbf_kernel(&[0.0], &[0.0], 0.0).is_err());
    assert!(rbf_kernel(&[0.0], &[0.0, 1.0], 1.0).is_err());
}

#[test]
fn rbfn_hand_evaluation() {
    let m = RbfnModel {
        centroids: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]],
        widths: vec![1.0, 0.5, 2.0],
        weights: vec![1.0, -2.0, 0.5],
        bias: 0.3,
        wsf: 1.0,
    };
    assert!((m.predict(&[0.5, 0.5]).unwrap() - 0.708_849_715_201_841_1).abs() < 1e-12);
    assert!(m.predict(&[0.5]).is_err());
    let zero = RbfnModel { weights: vec![0.0; 3], ..m.clone() };
    assert_eq!(zero.predict(&[7.0, -3.0]).unwrap(), 0.3);
    let single =
        RbfnModel { centroids: vec![vec![1.0, 1.0]], widths: vec![0.4], weights: vec![2.5], bias: -1.0, wsf: 1.0 };
    assert_eq!(single.predict(&[1.0, 1.0]).unwrap(), 1.5);
}

#[test]
fn rbfn_single_bump() {
    let xs: Vec<f64> = (0..60).map(|i| -3.0 + 6.0 * i as f64 / 59.0).collect();
    let d = line(&xs, |x| 2.0 * (-x * x / 2.0).exp() + 0.5);
    let best = log_grid(0.1, 10.0, 15)
        .into_iter()
        .map(|wsf| training_nmse(&fit_rbfn(&d, 1, wsf, 0).unwrap(), &d))
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-2, "{best}");
}

#[test]
fn rbfn_two_bumps() {
    // Inputs gather evenly around the two bump centers.
    let xs: Vec<f64> = (0..40).map(|i| -1.0 + 2.0 * i as f64 / 39.0).flat_map(|u| [3.0 + 1.5 * u, 7.0 + u]).collect();
    // Bump widths equal the mean distance of each cluster to its center.
    let bump = |x: f64, c: f64, s: f64| (-(x - c).powi(2) / (2.0 * s * s)).exp();
    let d = line(&xs, |x| bump(x, 3.0, 0.75) + 0.7 * bump(x, 7.0, 0.5));
    let best = log_grid(0.1, 10.0, 15)
        .into_iter()
        .flat_map(|wsf| (0..3).map(move |seed| (wsf, seed)))
        .map(|(wsf, seed)| training_nmse(&fit_rbfn(&d, 2, wsf, seed).unwrap(), &d))
        .fold(f64::INFINITY, f64::min);
    assert!(best < 0.05, "{best}");
}

#[test]
fn rbfn_interpolates_with_one_centroid_per_point() {
    let xs = [0.0, 0.7, 1.5, 2.1, 3.3, 4.0];
    let d = line(&xs, |x| x.sin() + 0.2 * x);
    let m = fit_rbfn(&d, xs.len(), 0.2, 1).unwrap();
    assert!(training_nmse(&m, &d) < 1e-6);
    assert!(fit_rbfn(&d, 7, 1.0, 0).is_err());
    assert!(fit_rbfn(&d, 2, 0.0, 0).is_err());
}

#[test]
fn rbfn_layout_ignores_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] - r[1]).collect();
    let mut shuffled = y.clone();
    shuffled.shuffle(&mut rng);
    let a = rbfn_layout(&Dataset::from_rows(&rows, y, None).unwrap(), 5, 3).unwrap();
    let b = rbfn_layout(&Dataset::from_rows(&rows, shuffled, None).unwrap(), 5, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.1.iter().all(|w| *w > 0.0));
}

#[test]
fn rbfn_error_shrinks_on_nested_centroids() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xs: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..5.0)).collect();
    let d = line(&xs, |x| (2.0 * x).cos() + 0.1 * x);
    let pool: Vec<f64> = (0..8).map(|i| 0.3 + 0.6 * i as f64).collect();
    let mut last = f64::INFINITY;
    for k in 1..=pool.len() {
        let centroids = pool[..k].iter().map(|&c| vec![c]).collect();
        let m = fit_rbfn_with_centroids(&d, centroids, vec![0.5; k]).unwrap();
        let err = training_nmse(&m, &d);
        assert!(err <= last + 1e-12, "K = {k}: {err} > {last}");
        last = err;
    }
}

#[test]
fn lssvm_hand_evaluation() {
    let m = LssvmModel {
        support: vec![vec![0.0], vec![1.0], vec![3.0]],
        coefficients: vec![0.5, -1.0, 2.0],
        tails: vec![],
        bias: -0.25,
        sigma: 1.5,
        gamma: 1.0,
    };
    assert!((m.predict(&[1.2]).unwrap() - 0.095_428_529_968_503_82).abs() < 1e-12);
    let zero = LssvmModel { coefficients: vec![0.0; 3], ..m };
    assert_eq!(zero.predict(&[9.0]).unwrap(), -0.25);
}

#[test]
fn lssvm_three_point_dense_oracle() {
    // Bias and multipliers from a direct dense solve of the 4 x 4 system
    // [[0, 1^T], [1, K + I/gamma]] [b; a] = [0; y].
    let d = Dataset::from_columns(&[vec![0.0, 1.0, 3.0]], vec![1.0, 2.0, 0.5]).unwrap();
    let m = lssvm(&d, 1.0, 10.0);
    let expected = [-0.778_070_534_369_035_2, 1.406_632_375_031_549_3, -0.628_561_840_662_514_4];
    assert!((m.bias - 1.009_694_616_716_895_9).abs() < 1e-12);
    for (a, e) in m.coefficients.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12);
    }
    assert!(m.coefficients.iter().sum::<f64>().abs() < 1e-12);
}

#[test]
fn lssvm_regularization_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0].sin() * r[1] + 3.0).collect();
    let d = Dataset::from_rows(&rows, y.clone(), None).unwrap();
    let tight = lssvm(&d, 0.8, 1e8);
    for (p, t) in tight.predict_rows(d.x()).unwrap().iter().zip(&y) {
        assert!((p - t).abs() < 1e-3 * t.abs(), "{p} vs {t}");
    }
    let loose = lssvm(&d, 0.8, 1e-8);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    for p in loose.predict_rows(d.x()).unwrap() {
        assert!((p - mean).abs() < 1e-6, "{p} vs {mean}");
    }
    assert!(fit_lssvm(&d, -1.0, 1.0).is_err());
    assert!(fit_lssvm(&d, 1.0, 0.0).is_err());
}

#[test]
fn lssvm_path_agrees_with_direct_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] * 4.0 - r[1] * r[2] + rng.gen_range(-0.05..0.05)).collect();
    let d = Dataset::from_rows(&rows, y, None).unwrap();
    let new_rows: Vec<Vec<f64>> = (0..7).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
    let fresh = Dataset::from_rows(&new_rows, vec![0.0; 7], None).unwrap();
    for sigma in [0.2, 0.7, 2.0] {
        let path = LssvmPath::new(&d, sigma).unwrap();
        let projected = path.project(fresh.x()).unwrap();
        for gamma in [1e-2, 1.0, 1e3] {
            let direct = lssvm(&d, sigma, gamma);
            let sol = path.solve(gamma).unwrap();
            let via_path = path.to_model(&sol, gamma);
            assert!((via_path.bias - direct.bias).abs() < 1e-7);
            for (a, b) in via_path.coefficients.iter().zip(&direct.coefficients) {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()));
            }
            let fitted = path.fitted(&sol);
            for (a, b) in fitted.iter().zip(direct.predict_rows(d.x()).unwrap()) {
                assert!((a - b).abs() < 1e-7);
            }
            let out = path.predict_projected(&projected, &sol);
            for (a, b) in out.iter().zip(direct.predict_rows(fresh.x()).unwrap()) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn linear_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| 1.5 * r[0] - 2.0 * r[1] + 0.25 * r[2] + 4.0).collect();
    let m = fit_linear(&Dataset::from_rows(&rows, y, None).unwrap()).unwrap();
    for (c, e) in m.coefficients.iter().zip([1.5, -2.0, 0.25]) {
        assert!((c - e).abs() < 1e-8);
    }
    assert!((m.intercept - 4.0).abs() < 1e-8);
    let flat = fit_linear(&Dataset::from_rows(&rows, vec![2.5; 20], None).unwrap()).unwrap();
    assert!(flat.coefficients.iter().all(|c| c.abs() < 1e-12));
    assert!((flat.intercept - 2.5).abs() < 1e-12);
    let two = fit_linear(&line(&[1.0, 3.0], |x| 5.0 - 2.0 * x)).unwrap();
    assert!((two.predict(&[1.0]).unwrap() - 3.0).abs() < 1e-12);
    assert!((two.predict(&[3.0]).unwrap() + 1.0).abs() < 1e-12);
}
