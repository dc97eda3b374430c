//! Regressors: RBF network, least-squares SVM and ordinary least squares.
//!
//! Both kernel models use the Gaussian kernel
//! `phi(x, c, sigma) = exp(-(|x - c| / (sqrt(2) sigma))^2)`.

mod kmeans;
mod linear;
mod lssvm;
mod rbfn;

use alloc::vec::Vec;

use nalgebra::DMatrix;

pub use self::kmeans::{kmeans, KMeans, MAX_KMEANS_ITERATIONS};
pub use self::linear::{fit_linear, LinearModel};
pub use self::lssvm::{fit_lssvm, LssvmModel, LssvmPath, PathSolution};
pub use self::rbfn::{fit_rbfn, fit_rbfn_with_centroids, rbfn_layout, RbfnModel};
use crate::error::{Error, Result};

/// Gaussian kernel between two points.
pub fn rbf_kernel(x: &[f64], c: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositive { name: "sigma", value: sigma });
    }
    if x.len() != c.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), found: x.len() });
    }
    Ok(kernel(squared_distance(x, c), sigma))
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

#[inline]
pub(crate) fn kernel(sq_dist: f64, sigma: f64) -> f64 {
    libm::exp(-sq_dist / (2.0 * sigma * sigma))
}

/// Rows of a matrix as owned vectors.
pub(crate) fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
}

pub trait Regressor {
    /// Input dimension the model was fitted on.
    fn input_dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<f64>;

    /// Predictions for every row of `x`.
    fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.ncols() });
        }
        rows_of(x).iter().map(|r| self.predict(r)).collect()
    }
}

/// Any fitted regressor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Model {
    Rbfn(RbfnModel),
    Lssvm(LssvmModel),
    Linear(LinearModel),
}

impl Regressor for Model {
    fn input_dim(&self) -> usize {
        match self {
            Model::Rbfn(m) => m.input_dim(),
            Model::Lssvm(m) => m.input_dim(),
            Model::Linear(m) => m.input_dim(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Rbfn(m) => m.predict(x),
            Model::Lssvm(m) => m.predict(x),
            Model::Linear(m) => m.predict(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.7).unwrap(), 1.0);
        // |x - c| = sqrt(2) sigma gives exp(-1)
        let sigma = 0.5;
        let k = rbf_kernel(&[0.0], &[core::f64::consts::SQRT_2 * sigma], sigma).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-15);
        let a = [0.3, -1.2];
        let b = [2.0, 0.4];
        assert_eq!(rbf_kernel(&a, &b, 1.3), rbf_kernel(&b, &a, 1.3));
        assert!(rbf_kernel(&a, &b, 0.0).is_err());
        assert!(rbf_kernel(&a, &[1.0], 1.0).is_err());
    }
}
