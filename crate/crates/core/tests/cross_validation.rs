use mivs_core::baselines::ProjectionKind;
use mivs_core::eval::{
    cross_validate, kfold_split, nmse, trim_outliers, CvOptions, Experiment, GridConfig, MetaGrid, ModelGrid,
    ModelParams, PipelineSpec,
};
use mivs_core::methods::{MethodConfig, MethodRunner};
use mivs_core::{Dataset, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Ten observed variables mixing three latent factors; the target is
/// linear in the factors.
fn latent_linear(seed: u64, n: usize, noise: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixing: Vec<[f64; 3]> =
        (0..10).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let f = [rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)];
        rows.push(mixing.iter().map(|w| w[0] * f[0] + w[1] * f[1] + w[2] * f[2]).collect::<Vec<f64>>());
        y.push(f[0] - 2.0 * f[1] + 3.0 * f[2] + noise * rng.gen_range(-1.0..1.0));
    }
    Dataset::from_rows(&rows, y, None).unwrap()
}

#[test]
fn nmse_definition() {
    let y = [1.0, 4.0, 2.0, 7.0];
    let var_all = 5.0;
    let m = y.iter().sum::<f64>() / 4.0;
    let v = nmse(&[m; 4], &y, var_all).unwrap();
    assert!((v - variance(&y) * 3.0 / 4.0 / var_all).abs() < 1e-15);
    assert_eq!(nmse(&y, &y, 1.0).unwrap(), 0.0);
    assert_eq!(nmse(&[1.0, -1.0], &[0.0, 0.0], 2.0).unwrap(), 0.5);
}

#[test]
fn folds_partition_and_depend_on_seed_only() {
    for (n, l) in [(172, 4), (149, 3), (10, 10), (37, 5)] {
        let folds = kfold_split(n, l, 8).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, kfold_split(n, l, 8).unwrap());
    }
    assert_eq!(kfold_split(172, 4, 0).unwrap().iter().map(Vec::len).collect::<Vec<_>>(), [43; 4]);
    assert_eq!(kfold_split(149, 3, 0).unwrap().iter().map(Vec::len).collect::<Vec<_>>(), [50, 50, 49]);
    assert_ne!(kfold_split(172, 4, 0).unwrap(), kfold_split(172, 4, 1).unwrap());
    assert!(kfold_split(3, 4, 0).is_err());
}

#[test]
fn trimming_rules() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut e: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
    e[17] = 40.0;
    e[150] = -35.0;
    let keep = trim_outliers(&e);
    assert_eq!(keep.len(), 198);
    assert!(!keep.contains(&17) && !keep.contains(&150));
    let flat = trim_outliers(&[0.3; 50]);
    assert_eq!(flat.len(), 50);
}

#[test]
fn true_component_count_validates_to_zero() {
    let d = latent_linear(21, 80, 0.0);
    let grid = MetaGrid { components: (1..=6).collect(), model: ModelGrid::Linear };
    let spec = PipelineSpec { projection: Some(ProjectionKind::Pca), ..PipelineSpec::default() };
    let opts = CvOptions { trim_validation: false, ..CvOptions::default() };
    let cv = cross_validate(&d, &spec, &grid, &opts, variance(d.y())).unwrap();
    assert!(cv.points[2].mean_nmse_v.unwrap() < 1e-12);
    assert!(cv.points[1].mean_nmse_v.unwrap() > 1e-3);
    assert_eq!(cv.winner_params().components, Some(3));
    assert_eq!(cv.points.len(), 6);
}

#[test]
fn single_point_grid_is_plain_cross_validation() {
    let d = latent_linear(22, 60, 0.3);
    let grid = MetaGrid { components: vec![], model: ModelGrid::Linear };
    let opts = CvOptions { folds: 3, trim_validation: false, ..CvOptions::default() };
    let var = variance(d.y());
    let cv = cross_validate(&d, &PipelineSpec::default(), &grid, &opts, var).unwrap();
    assert_eq!(cv.winner, 0);
    let folds = kfold_split(60, 3, 0).unwrap();
    assert_eq!(cv.fold_indices, folds);
    let mut total = 0.0;
    for v in &folds {
        let learn: Vec<usize> = (0..60).filter(|i| !v.contains(i)).collect();
        let m = mivs_core::models::fit_linear(&d.select_rows(&learn).unwrap()).unwrap();
        let vd = d.select_rows(v).unwrap();
        let p = mivs_core::models::Regressor::predict_rows(&m, vd.x()).unwrap();
        total += nmse(&p, vd.y(), var).unwrap();
    }
    assert!((cv.points[0].mean_nmse_v.unwrap() - total / 3.0).abs() < 1e-12);
}

#[test]
fn planted_outliers_are_the_trimmed_ones() {
    let mut d = latent_linear(23, 172, 0.05);
    let folds = kfold_split(172, 4, 0).unwrap();
    let planted: Vec<usize> = folds.iter().map(|f| f[5]).collect();
    let mut y = d.y().to_vec();
    for &i in &planted {
        y[i] += 25.0;
    }
    d = Dataset::new(d.x().clone(), y, None).unwrap();
    let grid = MetaGrid { components: vec![], model: ModelGrid::Linear };
    let cv = cross_validate(&d, &PipelineSpec::default(), &grid, &CvOptions::default(), variance(d.y())).unwrap();
    for (f, score) in cv.points[0].folds.iter().enumerate() {
        assert_eq!(score.trimmed_validation, vec![planted[f]]);
        assert!(score.trimmed_train.is_empty());
    }
}

#[test]
fn validation_does_not_pick_interpolation() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let xs: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..6.0)).collect();
    let y: Vec<f64> = xs.iter().map(|x| x.sin() + 0.3 * rng.gen_range(-1.0..1.0)).collect();
    let d = Dataset::from_columns(&[xs], y).unwrap();
    let grid = MetaGrid { components: vec![], model: GridConfig::default().rbfn(45, 0) };
    let cv = cross_validate(&d, &PipelineSpec::default(), &grid, &CvOptions::default(), variance(d.y())).unwrap();
    match cv.winner_params().model {
        ModelParams::Rbfn { centroids, .. } => assert!(centroids < 45, "{centroids}"),
        ref other => panic!("{other:?}"),
    }
}

#[test]
fn failed_points_are_recorded_not_fatal() {
    let d = latent_linear(25, 40, 0.1);
    // 40 rows in 4 folds leave 30 learning rows: 31 components cannot fit.
    let grid = MetaGrid { components: vec![2, 31], model: ModelGrid::Linear };
    let spec = PipelineSpec { projection: Some(ProjectionKind::Pls), ..PipelineSpec::default() };
    let cv = cross_validate(&d, &spec, &grid, &CvOptions::default(), variance(d.y())).unwrap();
    assert!(cv.points[1].error.is_some());
    assert!(cv.points[1].folds.is_empty());
    assert_eq!(cv.winner, 0);
    let empty = MetaGrid { components: vec![], model: ModelGrid::Lssvm { sigma: vec![], gamma: vec![1.0] } };
    assert_eq!(cross_validate(&d, &spec, &empty, &CvOptions::default(), 1.0).unwrap_err(), Error::EmptyGrid);
}

#[test]
fn test_set_is_read_once() {
    let d = latent_linear(26, 100, 0.1);
    let train = d.select_rows(&(0..80).collect::<Vec<_>>()).unwrap();
    let test = d.select_rows(&(80..100).collect::<Vec<_>>()).unwrap();
    let mut e = Experiment::new(train, test).unwrap();
    assert!((e.var_y_all() - variance(d.y())).abs() < 1e-12);
    let grid = MetaGrid { components: vec![], model: ModelGrid::Linear };
    let report = e.run(&PipelineSpec::default(), &grid, &CvOptions::default()).unwrap();
    assert_eq!(report.test_reads, 1);
    assert_eq!(e.test_reads(), 1);
    assert_eq!(report.test.predictions.len(), 20);
    assert_eq!(e.run(&PipelineSpec::default(), &grid, &CvOptions::default()).unwrap_err(), Error::TestSetReread);
    assert_eq!(e.evaluate_test(&report.pipeline, false).unwrap_err(), Error::TestSetReread);
    assert_eq!(report.cv.var_y_all, e.var_y_all());
}

#[test]
fn method_runner_reads_test_once_per_method() {
    let d = latent_linear(27, 90, 0.2);
    let train = d.select_rows(&(0..70).collect::<Vec<_>>()).unwrap();
    let test = d.select_rows(&(70..90).collect::<Vec<_>>()).unwrap();
    let config = MethodConfig { p: 6, ..MethodConfig::default() };
    let mut runner = MethodRunner::new(train, test, config).unwrap();
    for id in [1, 2, 13] {
        let o = runner.run(id).unwrap();
        assert_eq!(o.report.test_reads, 1);
        assert!(o.report.test.nmse.is_finite());
    }
    let fitted = runner.fit(13).unwrap();
    let cols = fitted.pipeline.columns.clone().unwrap();
    assert_eq!(cols.len(), fitted.n_variables);
    assert!(runner.run(14).is_err());
}
