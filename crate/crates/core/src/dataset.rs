//! Sample matrices, splits and the two preprocessing transforms.
//!
//! Standard deviations use the sample (`N - 1`) convention throughout.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Immutable `N x M` sample matrix with its scalar target.
///
/// Variables are addressed by 0-based column index. Labels are free-form
/// tags, typically wavelengths in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::ShapeMismatch { rows: x.nrows(), targets: y.len() });
        }
        if y.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(labels) = &labels {
            if labels.len() != x.ncols() {
                return Err(Error::LabelMismatch { labels: labels.len(), columns: x.ncols() });
            }
        }
        for column in 0..x.ncols() {
            for row in 0..x.nrows() {
                if !x[(row, column)].is_finite() {
                    return Err(Error::NonFinite { row, column });
                }
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTarget { row });
        }
        Ok(Dataset { x, y, labels })
    }

    /// Builds a dataset from row vectors, all of which must have the same length.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.len() });
        }
        let x = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        Dataset::new(x, y, labels)
    }

    /// Builds a dataset from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::ShapeMismatch { rows: bad.len(), targets: n });
        }
        let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
        Dataset::new(x, y, None)
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_variables(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, column: usize) -> Option<&str> {
        self.labels.as_ref().and_then(|l| l.get(column)).map(String::as_str)
    }

    /// Contiguous view of one variable across all samples.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n_samples();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let n = self.n_samples();
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&index) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::RowOutOfRange { index, len: n });
        }
        let x = DMatrix::from_fn(rows.len(), self.n_variables(), |i, j| self.x[(rows[i], j)]);
        let y = rows.iter().map(|&r| self.y[r]).collect();
        Ok(Dataset { x, y, labels: self.labels.clone() })
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        let m = self.n_variables();
        if let Some(&index) = columns.iter().find(|&&c| c >= m) {
            return Err(Error::ColumnOutOfRange { index, len: m });
        }
        let x = self.x.select_columns(columns.iter());
        let labels = self.labels.as_ref().map(|l| columns.iter().map(|&c| l[c].clone()).collect());
        Ok(Dataset { x, y: self.y.clone(), labels })
    }

    /// Same target, new inputs (used by projections).
    pub fn with_inputs(&self, x: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Dataset> {
        Dataset::new(x, self.y.clone(), labels)
    }

    /// Concatenates the rows of two datasets with the same variables.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.n_variables() != other.n_variables() {
            return Err(Error::DimensionMismatch { expected: self.n_variables(), found: other.n_variables() });
        }
        let n = self.n_samples();
        let x = DMatrix::from_fn(n + other.n_samples(), self.n_variables(), |i, j| {
            if i < n {
                self.x[(i, j)]
            } else {
                other.x[(i - n, j)]
            }
        });
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Ok(Dataset { x, y, labels: self.labels.clone() })
    }
}

/// Disjoint train/test row indices into one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn new(train: Vec<usize>, test: Vec<usize>, n_rows: usize) -> Result<Self> {
        let split = SplitSpec { train, test };
        split.validate(n_rows)?;
        Ok(split)
    }

    /// The first `n_train` rows train, the rest test.
    pub fn leading(n_train: usize, n_rows: usize) -> Result<Self> {
        SplitSpec::new((0..n_train).collect(), (n_train..n_rows).collect(), n_rows)
    }

    pub fn validate(&self, n_rows: usize) -> Result<()> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::InvalidSplit("train and test must both be non-empty"));
        }
        let mut seen = alloc::vec![false; n_rows];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n_rows {
                return Err(Error::RowOutOfRange { index: i, len: n_rows });
            }
            if seen[i] {
                return Err(Error::DuplicateIndex { index: i });
            }
            seen[i] = true;
        }
        Ok(())
    }

    pub fn apply(&self, d: &Dataset) -> Result<(Dataset, Dataset)> {
        self.validate(d.n_samples())?;
        Ok((d.select_rows(&self.train)?, d.select_rows(&self.test)?))
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance (`N - 1` denominator); zero for a single value.
pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Standardizes every spectrum (row) to zero mean and unit sample standard
/// deviation, and appends the removed mean and standard deviation as two
/// extra variables so no information is lost.
pub fn normalize_spectra(d: &Dataset) -> Result<Dataset> {
    let (n, m) = (d.n_samples(), d.n_variables());
    if m < 2 {
        return Err(Error::TooFewVariables(m));
    }
    let mut x = DMatrix::zeros(n, m + 2);
    for i in 0..n {
        let row = d.row(i);
        let mu = mean(&row);
        let sd = libm::sqrt(sample_variance(&row));
        if sd == 0.0 || !sd.is_finite() {
            return Err(Error::DegenerateRow { row: i });
        }
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = (v - mu) / sd;
        }
        x[(i, m)] = mu;
        x[(i, m + 1)] = sd;
    }
    let labels = d.labels().map(|l| {
        let mut l = l.to_vec();
        l.push("row_mean".to_owned());
        l.push("row_std".to_owned());
        l
    });
    d.with_inputs(x, labels)
}

/// Per-column affine map to zero mean and unit variance, fitted on one set of
/// rows and applied unchanged to any other.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ColumnScaler {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            let values: Vec<f64> = col.iter().copied().collect();
            let sd = libm::sqrt(sample_variance(&values));
            if sd == 0.0 || !sd.is_finite() {
                return Err(Error::DegenerateColumn { column: j });
            }
            means.push(mean(&values));
            stds.push(sd);
        }
        Ok(ColumnScaler { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.ncols() });
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.means[j]) / self.stds[j]))
    }

    pub fn transform_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(x.iter().zip(self.means.iter().zip(&self.stds)).map(|(v, (m, s))| (v - m) / s).collect())
    }
}

/// Whitens every column using statistics of the training rows of `split`
/// only; all rows (train and test) go through the same affine map.
pub fn whiten_columns(d: &Dataset, split: &SplitSpec) -> Result<Dataset> {
    split.validate(d.n_samples())?;
    let train = d.select_rows(&split.train)?;
    let scaler = ColumnScaler::fit(train.x())?;
    let x = scaler.transform(d.x())?;
    d.with_inputs(x, d.labels.clone())
}
