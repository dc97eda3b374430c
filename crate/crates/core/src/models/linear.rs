use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::Regressor;
use crate::dataset::{mean, Dataset};
use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;

/// Affine model `y = w . x + c`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl Regressor for LinearModel {
    fn input_dim(&self) -> usize {
        self.coefficients.len()
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch { expected: self.coefficients.len(), found: x.len() });
        }
        Ok(self.coefficients.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept)
    }
}

/// Ordinary least squares on centered data; collinear designs get the
/// minimum-norm coefficient vector.
pub fn fit_linear(train: &Dataset) -> Result<LinearModel> {
    let x = train.x();
    let means: Vec<f64> = (0..x.ncols()).map(|j| mean(train.column(j))).collect();
    let y_mean = mean(train.y());
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    let yc = DVector::from_iterator(x.nrows(), train.y().iter().map(|v| v - y_mean));
    let w = lstsq_min_norm(&centered, &yc);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let intercept = y_mean - w.iter().zip(&means).map(|(a, m)| a * m).sum::<f64>();
    Ok(LinearModel { coefficients: w.iter().copied().collect(), intercept })
}
