//! Mutual-information driven variable selection for high-dimensional
//! regression, plus the regressors and validation harness used to assess the
//! selected variables.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only
//! switches error types to `std::error::Error`; `parallel` spreads the
//! embarrassingly parallel loops (subset search, grid sweeps, neighbor
//! statistics) over the current rayon pool. Every result is independent of
//! the evaluation order, so enabling or disabling `parallel` or changing the
//! worker count never changes an output bit.
//!
//! Module map:
//!
//! - [`dataset`]: the sample matrix, row/column subsets, spectrum
//!   normalization and column whitening.
//! - [`mi`]: the Kraskov k-nearest-neighbor mutual information estimator.
//! - [`selector`]: individual ranking, greedy forward/backward selection and
//!   the exhaustive search over a candidate pool.
//! - [`models`]: RBF network, LS-SVM and ordinary least squares.
//! - [`baselines`]: PCA and PLS projections.
//! - [`eval`]: NMSE, l-fold cross-validation with outlier trimming, grid
//!   search.
//! - [`methods`]: the thirteen benchmark pipelines built from the above.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod dataset;
mod error;
pub mod eval;
pub(crate) mod linalg;
pub mod methods;
pub mod mi;
pub mod models;
pub(crate) mod par;
pub mod selector;

pub use crate::dataset::{Dataset, SplitSpec};
pub use crate::error::{Error, Result};
pub use crate::mi::{MiConfig, MiEstimate, MiEstimator, MiScaling};
pub use crate::selector::{SelectionTrace, VariableSubset};
