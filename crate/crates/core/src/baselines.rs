//! PCA and PLS projections of the input matrix onto a few latent components.
//!
//! Both are linear maps `t = (x - x_mean) R` with `R` of shape
//! `M x n_components`, fitted on training rows only. For PCA, `R` holds the
//! leading principal directions; for PLS1 it is `W (P^T W)^{-1}`, which maps
//! original inputs directly to the deflation scores. In both cases the first
//! `a` columns of a fit with more components are the fit with `a`
//! components, so [`Projection::truncate`] serves a whole component grid.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{mean, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProjectionKind {
    Pca,
    Pls,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Projection {
    pub kind: ProjectionKind,
    #[cfg_attr(feature = "serde", serde(with = "matrix_serde"))]
    pub rotation: DMatrix<f64>,
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
    /// Training variance of each score column.
    pub score_variance: Vec<f64>,
}

/// Row-major `{rows, cols, data}` form, which needs no std on the
/// nalgebra side.
#[cfg(feature = "serde")]
mod matrix_serde {
    use alloc::vec::Vec;

    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = m.transpose().as_slice().to_vec();
        Flat { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let f = Flat::deserialize(d)?;
        if f.data.len() != f.rows * f.cols {
            return Err(serde::de::Error::custom("matrix data length does not match its shape"));
        }
        Ok(DMatrix::from_row_slice(f.rows, f.cols, &f.data))
    }
}

/// Largest component count allowed for `n` samples and `m` variables.
pub fn max_components(n: usize, m: usize) -> usize {
    n.saturating_sub(1).min(m)
}

fn check_count(train: &Dataset, n_components: usize) -> Result<()> {
    let max = max_components(train.n_samples(), train.n_variables());
    if n_components == 0 || n_components > max {
        return Err(Error::TooManyComponents { requested: n_components, max });
    }
    Ok(())
}

fn centered(train: &Dataset) -> (DMatrix<f64>, Vec<f64>) {
    let x = train.x();
    let means: Vec<f64> = (0..x.ncols()).map(|j| mean(train.column(j))).collect();
    let c = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    (c, means)
}

/// Principal components by SVD of the centered inputs, in decreasing order
/// of variance. Each direction is signed so its largest-magnitude entry is
/// positive.
pub fn fit_pca(train: &Dataset, n_components: usize) -> Result<Projection> {
    check_count(train, n_components)?;
    let (xc, x_mean) = centered(train);
    let n = xc.nrows();
    let svd = xc.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut rotation = DMatrix::zeros(v_t.ncols(), n_components);
    for a in 0..n_components {
        let mut dir: DVector<f64> = v_t.row(a).transpose();
        let pivot = dir.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            dir.neg_mut();
        }
        rotation.set_column(a, &dir);
    }
    let score_variance = svd.singular_values.iter().take(n_components).map(|s| s * s / (n - 1) as f64).collect();
    Ok(Projection { kind: ProjectionKind::Pca, rotation, x_mean, y_mean: mean(train.y()), score_variance })
}

/// PLS1 by NIPALS deflation. Extraction stops early when the deflated
/// inputs carry no more covariance with the deflated target, so the result
/// may have fewer than `n_components` columns.
pub fn fit_pls(train: &Dataset, n_components: usize) -> Result<Projection> {
    check_count(train, n_components)?;
    let (mut x, x_mean) = centered(train);
    let y_mean = mean(train.y());
    let mut y = DVector::from_iterator(x.nrows(), train.y().iter().map(|v| v - y_mean));
    let m = x.ncols();
    let mut w_cols: Vec<DVector<f64>> = Vec::new();
    let mut p_cols: Vec<DVector<f64>> = Vec::new();
    let mut score_variance = Vec::new();
    let mut first_norm = None;
    for _ in 0..n_components {
        let mut w = x.tr_mul(&y);
        let norm = w.norm();
        let scale = *first_norm.get_or_insert(norm);
        if !(norm > 1e-12 * scale) {
            break;
        }
        w /= norm;
        let t = &x * &w;
        let tt = t.dot(&t);
        if !(tt > 0.0) {
            break;
        }
        let p = x.tr_mul(&t) / tt;
        let q = y.dot(&t) / tt;
        x -= &t * p.transpose();
        y -= &t * q;
        score_variance.push(tt / (x.nrows() - 1) as f64);
        w_cols.push(w);
        p_cols.push(p);
    }
    let a = w_cols.len();
    if a == 0 {
        return Err(Error::TooManyComponents { requested: n_components, max: 0 });
    }
    let w = DMatrix::from_columns(&w_cols);
    let p = DMatrix::from_columns(&p_cols);
    let ptw = p.tr_mul(&w);
    let inv = ptw.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    debug_assert_eq!(w.nrows(), m);
    Ok(Projection { kind: ProjectionKind::Pls, rotation: w * inv, x_mean, y_mean, score_variance })
}

pub fn fit_projection(kind: ProjectionKind, train: &Dataset, n_components: usize) -> Result<Projection> {
    match kind {
        ProjectionKind::Pca => fit_pca(train, n_components),
        ProjectionKind::Pls => fit_pls(train, n_components),
    }
}

impl Projection {
    pub fn n_components(&self) -> usize {
        self.rotation.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.rotation.nrows()
    }

    /// Keeps the leading `n` components.
    pub fn truncate(&self, n: usize) -> Result<Projection> {
        if n == 0 || n > self.n_components() {
            return Err(Error::TooManyComponents { requested: n, max: self.n_components() });
        }
        Ok(Projection {
            kind: self.kind,
            rotation: self.rotation.columns(0, n).into_owned(),
            x_mean: self.x_mean.clone(),
            y_mean: self.y_mean,
            score_variance: self.score_variance[..n].to_vec(),
        })
    }

    /// Scores of the rows of `x`.
    pub fn transform_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.ncols() });
        }
        let xc = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - self.x_mean[j]);
        Ok(xc * &self.rotation)
    }

    /// Dataset of scores, with the target passed through.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let scores = self.transform_matrix(d.x())?;
        let prefix = match self.kind {
            ProjectionKind::Pca => "pc",
            ProjectionKind::Pls => "pls",
        };
        let labels = (1..=self.n_components()).map(|a| alloc::format!("{prefix}{a}")).collect();
        d.with_inputs(scores, Some(labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.7).sin(), (t * 0.3).cos() + 0.1 * t, (t * 1.1).sin() * 2.0, t * 0.05]
            })
            .collect();
        let y = rows.iter().map(|r| r[0] - 0.5 * r[2] + r[1] * r[1]).collect();
        Dataset::from_rows(&rows, y, None).unwrap()
    }

    #[test]
    fn pca_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let d = Dataset::from_rows(&rows, vec![0.0; 10], None).unwrap();
        let p = fit_pca(&d, 1).unwrap();
        let total: f64 = (0..2).map(|j| crate::dataset::sample_variance(d.column(j))).sum();
        assert!(p.score_variance[0] / total > 0.9999);
        assert!(p.rotation[(1, 0)] > 0.0);
    }

    #[test]
    fn pca_orthonormal_and_ordered() {
        let p = fit_pca(&toy(), 4).unwrap();
        let g = p.rotation.tr_mul(&p.rotation);
        assert!((g - DMatrix::identity(4, 4)).abs().max() < 1e-8);
        assert!(p.score_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn too_many_components() {
        assert_eq!(fit_pca(&toy(), 5), Err(Error::TooManyComponents { requested: 5, max: 4 }));
        assert!(fit_pls(&toy(), 0).is_err());
    }

    #[test]
    fn pls_truncation_matches_direct_fit() {
        let d = toy();
        let full = fit_pls(&d, 4).unwrap();
        let two = fit_pls(&d, 2).unwrap();
        assert!((full.truncate(2).unwrap().rotation - two.rotation).abs().max() < 1e-10);
    }

    #[test]
    fn pls_one_dimensional_sign() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![4.0]], vec![3.0, 1.0, 0.0], None).unwrap();
        let p = fit_pls(&d, 1).unwrap();
        // cov(x, y) < 0 gives w = -1, t = -x_c, p = x_c^T t / t^T t = -1, R = w / (p w) = -1
        assert!((p.rotation[(0, 0)] + 1.0).abs() < 1e-12);
        let t = p.transform_matrix(d.x()).unwrap();
        assert!((t[(0, 0)] - (7.0 / 3.0 - 1.0)).abs() < 1e-12);
    }
}
