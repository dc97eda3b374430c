//! Thin wrappers over nalgebra's dense decompositions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Minimum-norm least-squares solution of `a x ~ b`.
///
/// Singular values below `max(n, m) * eps * s_max` are treated as zero, so
/// rank-deficient (collinear) designs get the least-norm solution.
pub(crate) fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = (a.nrows().max(a.ncols()) as f64) * f64::EPSILON * s_max;
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Condition number from singular values (infinite for exact singularity).
pub(crate) fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = a.clone().singular_values();
    let (max, min) = (s.max(), s.min());
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Factorization of a symmetric positive definite matrix, with LU as the
/// fallback when rounding makes the Cholesky factorization fail.
pub(crate) enum SpdSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SpdSolver {
    pub(crate) fn new(h: DMatrix<f64>) -> Result<Self> {
        if let Some(c) = h.clone().cholesky() {
            return Ok(SpdSolver::Cholesky(c));
        }
        let lu = h.clone().lu();
        if lu.is_invertible() {
            Ok(SpdSolver::Lu(lu))
        } else {
            Err(Error::Singular { condition: condition_number(&h) })
        }
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdSolver::Cholesky(c) => c.solve(b),
            SpdSolver::Lu(lu) => lu.solve(b).expect("invertibility checked at construction"),
        }
    }
}

/// Sum with its exact rounding error: `a + b = s + e`.
#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Running sum of products in twice the working precision, kept as an
/// unevaluated pair `hi + lo`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    pub hi: f64,
    pub lo: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.hi, v);
        self.hi = s;
        self.lo += e;
    }

    #[inline]
    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let pe = libm::fma(a, b, -p);
        self.add(p);
        self.lo += pe;
    }

    /// `c - self`, rounded once.
    #[inline]
    pub(crate) fn subtract_from(&self, c: f64) -> f64 {
        (c - self.hi) - self.lo
    }
}
