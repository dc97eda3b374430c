//! Kraskov k-nearest-neighbor estimate of the mutual information between a
//! group of input variables and the scalar target.
//!
//! For each sample `z_i = (x_i, y_i)` let `eps_i` be the max-norm distance to
//! its k-th nearest neighbor in Z, and `n_x(i)`, `n_y(i)` the number of other
//! samples strictly closer than `eps_i` in X and in Y. Then
//!
//! ```text
//! I(X, Y) ~ psi(k) - <psi(n_x + 1) + psi(n_y + 1)> + psi(N)
//! ```
//!
//! in nats. The estimate may be slightly negative for independent variables.

mod digamma;
pub mod neighbors;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::digamma::digamma;
pub use self::neighbors::{all_stats, knn_stats, NeighborStrategy, NeighborhoodStats, PointSet};
use crate::dataset::{mean, sample_variance, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 6;

/// Relative amplitude of the tie-breaking noise.
const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MiEstimate {
    /// Estimated mutual information in nats.
    pub value: f64,
    pub k: usize,
    pub n_samples: usize,
}

/// Unit-variance rescaling applied before any distance is taken.
///
/// The joint-space distance is the larger of the input and target
/// distances, so the target's units decide how often each side sets the
/// neighborhood radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MiScaling {
    None,
    /// Only the target.
    #[default]
    Target,
    /// Every input column and the target.
    All,
}

impl core::str::FromStr for MiScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MiScaling::None),
            "target" => Ok(MiScaling::Target),
            "all" => Ok(MiScaling::All),
            _ => Err(Error::UnknownScaling),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MiConfig {
    pub k: usize,
    /// Seed of the tie-breaking jitter (used only when the data has ties).
    pub seed: u64,
    pub scaling: MiScaling,
    pub strategy: NeighborStrategy,
}

impl Default for MiConfig {
    fn default() -> Self {
        MiConfig { k: DEFAULT_K, seed: 0, scaling: MiScaling::Target, strategy: NeighborStrategy::Auto }
    }
}

impl MiConfig {
    pub fn with_k(k: usize) -> Self {
        MiConfig { k, ..MiConfig::default() }
    }
}

/// Estimation session over one dataset.
///
/// Construction fixes the data the estimator sees: the configured rescaling
/// and, when some sample could have its k-th neighbor at distance zero, a
/// one-off uniform jitter of `1e-10 x` the range of each column. Every
/// subset evaluated through the same session sees the same perturbed data,
/// so the session is a pure function of `(dataset, config)`.
#[derive(Debug, Clone)]
pub struct MiEstimator {
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    k: usize,
    strategy: NeighborStrategy,
    jittered: bool,
    /// `psi[c] = psi(c)` for `c` in `1..=N` (`psi[0]` unused).
    psi: Vec<f64>,
}

impl MiEstimator {
    pub fn new(d: &Dataset, config: MiConfig) -> Result<Self> {
        let n = d.n_samples();
        if config.k == 0 || config.k >= n {
            return Err(Error::InvalidK { k: config.k, n });
        }
        let mut columns: Vec<Vec<f64>> = (0..d.n_variables()).map(|j| d.column(j).to_vec()).collect();
        let mut y = d.y().to_vec();
        match config.scaling {
            MiScaling::None => {}
            MiScaling::Target => standardize(&mut y),
            MiScaling::All => {
                for c in columns.iter_mut().chain(core::iter::once(&mut y)) {
                    standardize(c);
                }
            }
        }
        let jittered = has_coincident_neighbors(&columns, &y, config.k);
        if jittered {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            for c in columns.iter_mut().chain(core::iter::once(&mut y)) {
                jitter(c, &mut rng);
            }
        }
        let psi = (0..=n).map(|c| if c == 0 { f64::NAN } else { digamma::digamma_unchecked(c as f64) }).collect();
        Ok(MiEstimator { columns, y, k: config.k, strategy: config.strategy, jittered, psi })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_variables(&self) -> usize {
        self.columns.len()
    }

    /// Whether tie-breaking noise was added at construction.
    pub fn is_jittered(&self) -> bool {
        self.jittered
    }

    /// Points of a subset, in ascending column order. Column order does not
    /// change the value but does change rounding, so it is canonicalized.
    fn points(&self, subset: &[usize]) -> Result<PointSet> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut cols = subset.to_vec();
        cols.sort_unstable();
        for w in cols.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex { index: w[0] });
            }
        }
        let m = self.n_variables();
        if let Some(&index) = cols.iter().find(|&&c| c >= m) {
            return Err(Error::ColumnOutOfRange { index, len: m });
        }
        let refs: Vec<&[f64]> = cols.iter().map(|&c| self.columns[c].as_slice()).collect();
        Ok(PointSet::from_columns(&refs))
    }

    pub fn neighborhood_stats(&self, subset: &[usize]) -> Result<Vec<NeighborhoodStats>> {
        let points = self.points(subset)?;
        Ok(neighbors::all_stats(&points, &self.y, self.k, self.strategy))
    }

    pub fn estimate(&self, subset: &[usize]) -> Result<MiEstimate> {
        let stats = self.neighborhood_stats(subset)?;
        Ok(MiEstimate { value: self.combine(&stats), k: self.k, n_samples: self.n_samples() })
    }

    /// Averages the digamma terms through a histogram of the counts, which
    /// makes the result independent of sample order.
    fn combine(&self, stats: &[NeighborhoodStats]) -> f64 {
        let n = stats.len();
        let mut hist = vec![0u64; n];
        for s in stats {
            hist[s.n_x] += 1;
            hist[s.n_y] += 1;
        }
        let total: f64 =
            hist.iter().enumerate().filter(|(_, &h)| h > 0).map(|(c, &h)| h as f64 * self.psi[c + 1]).sum();
        self.psi[self.k] - total / n as f64 + self.psi[n]
    }
}

/// One-shot estimate with the default session settings.
pub fn estimate_mi(d: &Dataset, subset: &[usize], k: usize) -> Result<MiEstimate> {
    MiEstimator::new(d, MiConfig::with_k(k))?.estimate(subset)
}

/// Estimate for explicit point clouds, without any jitter.
pub fn estimate_points(x: &PointSet, y: &[f64], k: usize, strategy: NeighborStrategy) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::ShapeMismatch { rows: n, targets: y.len() });
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let stats = neighbors::all_stats(x, y, k, strategy);
    let sum: f64 = stats
        .iter()
        .map(|s| digamma::digamma_unchecked((s.n_x + 1) as f64) + digamma::digamma_unchecked((s.n_y + 1) as f64))
        .sum();
    Ok(digamma::digamma_unchecked(k as f64) - sum / n as f64 + digamma::digamma_unchecked(n as f64))
}

/// True when, for some single column, k + 1 samples share both the column
/// value and the target. Any subset on which a k-th neighbor coincides with
/// its sample restricts to such a column, so checking singletons suffices.
fn has_coincident_neighbors(columns: &[Vec<f64>], y: &[f64], k: usize) -> bool {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(y.len());
    columns.iter().any(|c| {
        pairs.clear();
        pairs.extend(c.iter().copied().zip(y.iter().copied()));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut run = 1;
        for w in pairs.windows(2) {
            if w[0] == w[1] {
                run += 1;
                if run > k {
                    return true;
                }
            } else {
                run = 1;
            }
        }
        false
    })
}

fn jitter(values: &mut [f64], rng: &mut ChaCha8Rng) {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let scale = if range > 0.0 { range } else { f64::max(libm::fabs(lo), 1.0) };
    let amplitude = JITTER_SCALE * scale;
    for v in values.iter_mut() {
        *v += amplitude * rng.gen_range(-1.0..=1.0);
    }
}

fn standardize(values: &mut [f64]) {
    let m = mean(values);
    let sd = libm::sqrt(sample_variance(values));
    let sd = if sd > 0.0 { sd } else { 1.0 };
    for v in values.iter_mut() {
        *v = (*v - m) / sd;
    }
}
