use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{kernel, kmeans, rows_of, squared_distance, Regressor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;

/// Radial basis function network `y(x) = sum_k w_k phi(x, c_k, sigma_k) + b`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbfnModel {
    pub centroids: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Width scaling factor the widths were derived with.
    pub wsf: f64,
}

impl RbfnModel {
    pub fn n_centroids(&self) -> usize {
        self.centroids.len()
    }
}

impl Regressor for RbfnModel {
    fn input_dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.len() });
        }
        let sum: f64 = self
            .centroids
            .iter()
            .zip(&self.widths)
            .zip(&self.weights)
            .map(|((c, &s), &w)| w * kernel(squared_distance(x, c), s))
            .sum();
        Ok(sum + self.bias)
    }
}

/// Fits an RBF network with `k` centroids.
///
/// Centroids come from k-means on the inputs alone. Each width is `wsf`
/// times the mean distance from the centroid to the members of its cluster;
/// singleton clusters fall back to the distance to the nearest other
/// centroid. Output weights and bias are the least-squares solution on the
/// training set.
pub fn fit_rbfn(train: &Dataset, k: usize, wsf: f64, seed: u64) -> Result<RbfnModel> {
    if !(wsf > 0.0) {
        return Err(Error::NonPositive { name: "wsf", value: wsf });
    }
    let (centroids, base) = rbfn_layout(train, k, seed)?;
    let widths = base.into_iter().map(|w| wsf * w).collect();
    let mut model = fit_rbfn_with_centroids(train, centroids, widths)?;
    model.wsf = wsf;
    Ok(model)
}

/// Centroids and unscaled widths; depends on the inputs only.
pub fn rbfn_layout(train: &Dataset, k: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let points = rows_of(train.x());
    let km = kmeans(&points, k, seed)?;
    let widths = local_widths(&points, &km.centroids, &km.assignment);
    Ok((km.centroids, widths))
}

/// Least-squares output layer for fixed centroids and widths.
pub fn fit_rbfn_with_centroids(train: &Dataset, centroids: Vec<Vec<f64>>, widths: Vec<f64>) -> Result<RbfnModel> {
    if centroids.len() != widths.len() || centroids.is_empty() {
        return Err(Error::InvalidParameter("one positive width per centroid".into()));
    }
    if let Some(&w) = widths.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::NonPositive { name: "width", value: w });
    }
    let dim = train.n_variables();
    if let Some(c) = centroids.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: c.len() });
    }
    let points = rows_of(train.x());
    let k = centroids.len();
    let design = DMatrix::from_fn(points.len(), k + 1, |i, j| {
        if j == k {
            1.0
        } else {
            kernel(squared_distance(&points[i], &centroids[j]), widths[j])
        }
    });
    let sol = lstsq_min_norm(&design, &DVector::from_column_slice(train.y()));
    Ok(RbfnModel { centroids, widths, weights: sol.rows(0, k).iter().copied().collect(), bias: sol[k], wsf: 1.0 })
}

fn local_widths(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> Vec<f64> {
    let k = centroids.len();
    let mut sum = alloc::vec![0.0; k];
    let mut count = alloc::vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        sum[c] += libm::sqrt(squared_distance(p, &centroids[c]));
        count[c] += 1;
    }
    (0..k)
        .map(|c| {
            let mean = if count[c] > 0 { sum[c] / count[c] as f64 } else { 0.0 };
            if count[c] > 1 && mean > 0.0 {
                return mean;
            }
            let nearest = centroids
                .iter()
                .enumerate()
                .filter(|&(o, _)| o != c)
                .map(|(_, o)| libm::sqrt(squared_distance(o, &centroids[c])))
                .filter(|&d| d > 0.0)
                .fold(f64::INFINITY, f64::min);
            if nearest.is_finite() {
                nearest
            } else if mean > 0.0 {
                mean
            } else {
                1.0
            }
        })
        .collect()
}
