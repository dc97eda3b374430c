use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{kernel, rows_of, squared_distance, Regressor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Compensated, SpdSolver};

/// Refinement sweeps applied after a solve.
const REFINEMENT_STEPS: usize = 3;

/// Least-squares SVM `y(x) = sum_i a_i phi(x, x_i, sigma) + b` with one
/// kernel per training point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LssvmModel {
    pub support: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    /// Low-order parts: the fitted multipliers are `coefficients[i] +
    /// tails[i]` exactly. Empty means zero. At large gamma the rounding of
    /// the multipliers alone breaks the optimality conditions.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub tails: Vec<f64>,
    pub bias: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl Regressor for LssvmModel {
    fn input_dim(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.len() });
        }
        let sum: f64 = self
            .support
            .iter()
            .enumerate()
            .map(|(i, s)| self.multiplier(i) * kernel(squared_distance(x, s), self.sigma))
            .sum();
        Ok(sum + self.bias)
    }
}

impl LssvmModel {
    /// Largest violation of the optimality condition `a_i = gamma * e_i`,
    /// with `e_i` the training residual.
    ///
    /// The residuals are accumulated in twice the working precision: at
    /// large gamma the plain sum loses more than the condition measures.
    pub fn kkt_residual(&self, train: &Dataset) -> Result<f64> {
        if train.n_variables() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: train.n_variables() });
        }
        if train.n_samples() != self.coefficients.len() {
            return Err(Error::LengthMismatch { predictions: self.coefficients.len(), targets: train.n_samples() });
        }
        let rows = rows_of(train.x());
        let mut worst = 0.0f64;
        for (i, x) in rows.iter().enumerate() {
            let mut p = Compensated::default();
            for (j, s) in self.support.iter().enumerate() {
                let phi = kernel(squared_distance(x, s), self.sigma);
                p.add_product(self.coefficients[j], phi);
                p.add_product(self.tail(j), phi);
            }
            p.add(self.bias);
            let e = p.subtract_from(train.y()[i]);
            let v = libm::fma(-self.gamma, e, self.coefficients[i]) + self.tail(i);
            worst = worst.max(libm::fabs(v));
        }
        Ok(worst)
    }

    fn tail(&self, i: usize) -> f64 {
        self.tails.get(i).copied().unwrap_or(0.0)
    }

    /// Multiplier `i` rounded to working precision.
    pub fn multiplier(&self, i: usize) -> f64 {
        self.coefficients[i] + self.tail(i)
    }
}

/// Vector held as unevaluated pairs `hi + lo`.
#[derive(Debug, Clone)]
struct Split {
    hi: DVector<f64>,
    lo: DVector<f64>,
}

impl Split {
    fn new(hi: DVector<f64>) -> Self {
        let lo = DVector::zeros(hi.len());
        Split { hi, lo }
    }

    fn add(&mut self, d: &DVector<f64>) {
        for i in 0..d.len() {
            let (s, e) = crate::linalg::two_sum(self.hi[i], d[i]);
            let (hi, lo) = crate::linalg::two_sum(s, self.lo[i] + e);
            self.hi[i] = hi;
            self.lo[i] = lo;
        }
    }

    fn is_finite(&self) -> bool {
        self.hi.iter().chain(self.lo.iter()).all(|v| v.is_finite())
    }
}

/// Residual of the dual system at `(b, a)`: the constraint row `-sum a`
/// and `y - (K + I/gamma) a - b`, both in twice the working precision.
fn dual_residual(k: &DMatrix<f64>, y: &[f64], a: &Split, b: f64, gamma: f64) -> (f64, DVector<f64>) {
    let mut total = Compensated::default();
    for (&hi, &lo) in a.hi.iter().zip(a.lo.iter()) {
        total.add(hi);
        total.add(lo);
    }
    let r = DVector::from_fn(a.hi.len(), |i, _| {
        let mut acc = Compensated::default();
        for j in 0..a.hi.len() {
            acc.add_product(k[(i, j)], a.hi[j]);
            acc.add_product(k[(i, j)], a.lo[j]);
        }
        acc.add((a.hi[i] + a.lo[i]) / gamma);
        acc.add(b);
        acc.subtract_from(y[i])
    });
    (-(total.hi + total.lo), r)
}

/// Iterative refinement of `(b, a)` given a solver for `H = K + I/gamma`.
fn refine(
    k: &DMatrix<f64>,
    y: &[f64],
    gamma: f64,
    solve: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &mut f64,
    a: &mut Split,
) -> Result<()> {
    let eta = solve(&DVector::from_element(a.hi.len(), 1.0));
    let s = eta.sum();
    if !(s.abs() > 0.0) || !s.is_finite() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    for _ in 0..REFINEMENT_STEPS {
        let (r0, r) = dual_residual(k, y, a, *b, gamma);
        let nu = solve(&r);
        let db = (nu.sum() - r0) / s;
        *b += db;
        a.add(&(nu - &eta * db));
    }
    Ok(())
}

fn check_params(sigma: f64, gamma: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositive { name: "sigma", value: sigma });
    }
    if !(gamma > 0.0) {
        return Err(Error::NonPositive { name: "gamma", value: gamma });
    }
    Ok(())
}

pub(crate) fn gram(points: &[Vec<f64>], sigma: f64) -> DMatrix<f64> {
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = kernel(squared_distance(&points[i], &points[j]), sigma);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Solves the dual system
///
/// ```text
/// [ 0   1^T          ] [ b ]   [ 0 ]
/// [ 1   K + I/gamma  ] [ a ] = [ y ]
/// ```
///
/// by block elimination on the SPD block `H = K + I/gamma`, followed by
/// iterative refinement with residuals in twice the working precision.
pub fn fit_lssvm(train: &Dataset, sigma: f64, gamma: f64) -> Result<LssvmModel> {
    check_params(sigma, gamma)?;
    let support = rows_of(train.x());
    let n = support.len();
    let k = gram(&support, sigma);
    let mut h = k.clone();
    for i in 0..n {
        h[(i, i)] += 1.0 / gamma;
    }
    let solver = SpdSolver::new(h.clone())?;
    let (mut b, mut a) = (0.0, Split::new(DVector::zeros(n)));
    refine(&k, train.y(), gamma, |r| solver.solve(r), &mut b, &mut a)?;
    if !b.is_finite() || !a.is_finite() {
        return Err(Error::Singular { condition: crate::linalg::condition_number(&h) });
    }
    Ok(LssvmModel {
        support,
        coefficients: a.hi.iter().copied().collect(),
        tails: a.lo.iter().copied().collect(),
        bias: b,
        sigma,
        gamma,
    })
}

/// All LS-SVM solutions for one kernel width and any regularization weight.
///
/// With `K = Q diag(l) Q^T`, `(K + I/gamma)^{-1} = Q diag(1 / (l + 1/gamma)) Q^T`,
/// so one eigendecomposition per width serves the whole gamma axis of a
/// grid search at `O(N^2)` per gamma.
#[derive(Debug, Clone)]
pub struct LssvmPath {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `Q^T 1` and `Q^T y`.
    q_ones: DVector<f64>,
    q_y: DVector<f64>,
    sigma: f64,
    support: Vec<Vec<f64>>,
    y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSolution {
    pub coefficients: DVector<f64>,
    pub bias: f64,
    /// Coefficients in the eigenbasis, `Q^T a`.
    spectral: DVector<f64>,
}

impl LssvmPath {
    pub fn new(train: &Dataset, sigma: f64) -> Result<Self> {
        check_params(sigma, 1.0)?;
        let support = rows_of(train.x());
        let eig = SymmetricEigen::new(gram(&support, sigma));
        let ones = DVector::from_element(support.len(), 1.0);
        let y = DVector::from_column_slice(train.y());
        let q_ones = eig.eigenvectors.tr_mul(&ones);
        let q_y = eig.eigenvectors.tr_mul(&y);
        Ok(LssvmPath {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            q_ones,
            q_y,
            sigma,
            support,
            y: train.y().to_vec(),
        })
    }

    pub fn solve(&self, gamma: f64) -> Result<PathSolution> {
        check_params(self.sigma, gamma)?;
        let inv: DVector<f64> = self.eigenvalues.map(|l| 1.0 / (l + 1.0 / gamma));
        let s = inv.dot(&self.q_ones.component_mul(&self.q_ones));
        let b = inv.dot(&self.q_ones.component_mul(&self.q_y)) / s;
        let spectral = inv.component_mul(&(&self.q_y - &self.q_ones * b));
        if !b.is_finite() || spectral.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        Ok(PathSolution { coefficients: &self.eigenvectors * &spectral, bias: b, spectral })
    }

    /// Training-set predictions `K a + b` without forming K again.
    pub fn fitted(&self, sol: &PathSolution) -> Vec<f64> {
        let v = &self.eigenvectors * self.eigenvalues.component_mul(&sol.spectral);
        v.iter().map(|p| p + sol.bias).collect()
    }

    /// `K(x_new, support) Q`, reusable across every gamma.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let dim = self.support.first().map_or(0, Vec::len);
        if x.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.ncols() });
        }
        let rows = rows_of(x);
        let cross = DMatrix::from_fn(rows.len(), self.support.len(), |i, j| {
            kernel(squared_distance(&rows[i], &self.support[j]), self.sigma)
        });
        Ok(cross * &self.eigenvectors)
    }

    pub fn predict_projected(&self, projected: &DMatrix<f64>, sol: &PathSolution) -> Vec<f64> {
        (projected * &sol.spectral).iter().map(|p| p + sol.bias).collect()
    }

    /// Standalone model from a path solution, refined against the full
    /// system so that it is as accurate as a direct fit.
    pub fn to_model(&self, sol: &PathSolution, gamma: f64) -> LssvmModel {
        let k = gram(&self.support, self.sigma);
        let inv: DVector<f64> = self.eigenvalues.map(|l| 1.0 / (l + 1.0 / gamma));
        let solve = |r: &DVector<f64>| &self.eigenvectors * inv.component_mul(&self.eigenvectors.tr_mul(r));
        let (mut b, mut a) = (sol.bias, Split::new(sol.coefficients.clone()));
        if refine(&k, &self.y, gamma, solve, &mut b, &mut a).is_err() || !b.is_finite() || !a.is_finite() {
            (b, a) = (sol.bias, Split::new(sol.coefficients.clone()));
        }
        LssvmModel {
            support: self.support.clone(),
            coefficients: a.hi.iter().copied().collect(),
            tails: a.lo.iter().copied().collect(),
            bias: b,
            sigma: self.sigma,
            gamma,
        }
    }
}
