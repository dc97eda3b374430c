//! Model assessment: NMSE, l-fold cross-validation with outlier trimming,
//! meta-parameter grid search and a held-out test set that can be read once.
//!
//! A pipeline is an optional column subset, an optional PCA/PLS projection
//! with optional whitening of the scores, and a regressor. Every stage is
//! fitted on the learning rows of a fold and only applied to the validation
//! rows. All NMSE values of one experiment share the same normalizer, the
//! target variance over every available sample.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{fit_projection, Projection, ProjectionKind};
use crate::dataset::{sample_variance, ColumnScaler, Dataset};
use crate::error::{Error, Result};
use crate::models::{fit_linear, fit_lssvm, fit_rbfn_with_centroids, rbfn_layout, LssvmPath, Model, Regressor};
use crate::par;

/// Mean squared error divided by `var_y_all`.
pub fn nmse(predictions: &[f64], targets: &[f64], var_y_all: f64) -> Result<f64> {
    if predictions.len() != targets.len() || targets.is_empty() {
        return Err(Error::LengthMismatch { predictions: predictions.len(), targets: targets.len() });
    }
    if !(var_y_all > 0.0) {
        return Err(Error::NonPositive { name: "var_y_all", value: var_y_all });
    }
    let sse: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sse / targets.len() as f64 / var_y_all)
}

/// Splits `0..n` into `l` folds of sizes differing by at most one. The
/// first `n % l` folds get the extra sample; each fold is sorted.
pub fn kfold_split(n: usize, l: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if l < 2 || l > n {
        return Err(Error::InvalidFolds { n, l });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / l, n % l);
    let mut folds = Vec::with_capacity(l);
    let mut start = 0;
    for f in 0..l {
        let size = base + usize::from(f < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Indices of the errors kept after discarding those whose distance to the
/// median error is strictly above the 99th percentile of such distances.
pub fn trim_outliers(errors: &[f64]) -> Vec<usize> {
    if errors.is_empty() {
        return Vec::new();
    }
    let med = median(errors);
    let dev: Vec<f64> = errors.iter().map(|e| libm::fabs(e - med)).collect();
    let mut sorted = dev.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = percentile_sorted(&sorted, 0.99);
    (0..errors.len()).filter(|&i| dev[i] <= threshold).collect()
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (libm::log(lo), libm::log(hi));
            (0..count).map(|i| libm::exp(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
        }
    }
}

/// Median Euclidean distance over all pairs of rows.
pub fn median_pairwise_distance(x: &DMatrix<f64>) -> f64 {
    let rows = crate::models::rows_of(x);
    let mut d = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            d.push(libm::sqrt(crate::models::squared_distance(&rows[i], &rows[j])));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    median(&d)
}

/// Meta-parameters of one regressor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ModelParams {
    Linear,
    Rbfn { centroids: usize, wsf: f64, seed: u64 },
    Lssvm { sigma: f64, gamma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetaParams {
    /// Projection components, when the pipeline projects.
    pub components: Option<usize>,
    pub model: ModelParams,
}

/// Candidate values for the regressor. RBFN points are ordered centroid
/// count first, then WSF; LS-SVM points sigma first, then gamma.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ModelGrid {
    Linear,
    Rbfn { centroids: Vec<usize>, wsf: Vec<f64>, seed: u64 },
    Lssvm { sigma: Vec<f64>, gamma: Vec<f64> },
}

impl ModelGrid {
    /// Length of the axis evaluated in one job.
    fn outer_len(&self) -> usize {
        match self {
            ModelGrid::Linear => 1,
            ModelGrid::Rbfn { centroids, .. } => centroids.len(),
            ModelGrid::Lssvm { sigma, .. } => sigma.len(),
        }
    }

    fn inner_len(&self) -> usize {
        match self {
            ModelGrid::Linear => 1,
            ModelGrid::Rbfn { wsf, .. } => wsf.len(),
            ModelGrid::Lssvm { gamma, .. } => gamma.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.outer_len() * self.inner_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn point(&self, outer: usize, inner: usize) -> ModelParams {
        match self {
            ModelGrid::Linear => ModelParams::Linear,
            ModelGrid::Rbfn { centroids, wsf, seed } => {
                ModelParams::Rbfn { centroids: centroids[outer], wsf: wsf[inner], seed: *seed }
            }
            ModelGrid::Lssvm { sigma, gamma } => ModelParams::Lssvm { sigma: sigma[outer], gamma: gamma[inner] },
        }
    }
}

/// Full search grid: component counts (empty without projection) times the
/// model grid, component count varying slowest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetaGrid {
    pub components: Vec<usize>,
    pub model: ModelGrid,
}

impl MetaGrid {
    fn component_slots(&self) -> usize {
        self.components.len().max(1)
    }

    pub fn len(&self) -> usize {
        self.component_slots() * self.model.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> MetaParams {
        let per = self.model.len();
        let (c, m) = (index / per, index % per);
        let inner = self.model.inner_len();
        MetaParams { components: self.components.get(c).copied(), model: self.model.point(m / inner, m % inner) }
    }

    pub fn points(&self) -> Vec<MetaParams> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Ranges and sizes of the default grids.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GridConfig {
    pub gamma_range: (f64, f64),
    pub gamma_count: usize,
    /// Sigma range as multiples of the median pairwise input distance.
    pub sigma_span: (f64, f64),
    pub sigma_count: usize,
    pub wsf_range: (f64, f64),
    pub wsf_count: usize,
    pub max_centroids: usize,
    pub max_components: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            gamma_range: (1e-3, 1e6),
            gamma_count: 300,
            sigma_span: (1e-2, 1e2),
            sigma_count: 100,
            wsf_range: (0.1, 10.0),
            wsf_count: 15,
            max_centroids: 30,
            max_components: 60,
        }
    }
}

impl GridConfig {
    pub fn lssvm(&self, inputs: &DMatrix<f64>) -> Result<ModelGrid> {
        let d = median_pairwise_distance(inputs);
        if !(d > 0.0) {
            return Err(Error::NonPositive { name: "median pairwise distance", value: d });
        }
        Ok(ModelGrid::Lssvm {
            sigma: log_grid(self.sigma_span.0 * d, self.sigma_span.1 * d, self.sigma_count),
            gamma: log_grid(self.gamma_range.0, self.gamma_range.1, self.gamma_count),
        })
    }

    /// Centroid counts `1..=max_centroids`, capped by the smallest
    /// learning fold.
    pub fn rbfn(&self, min_learning_rows: usize, seed: u64) -> ModelGrid {
        ModelGrid::Rbfn {
            centroids: (1..=self.max_centroids.min(min_learning_rows)).collect(),
            wsf: log_grid(self.wsf_range.0, self.wsf_range.1, self.wsf_count),
            seed,
        }
    }

    /// Component counts `1..=min(rows - 1, variables, max_components)`.
    pub fn components(&self, min_learning_rows: usize, n_variables: usize) -> Vec<usize> {
        let max = crate::baselines::max_components(min_learning_rows, n_variables).min(self.max_components);
        (1..=max).collect()
    }
}

/// Fixed part of a pipeline: what is done to the inputs before the model.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineSpec {
    /// Input columns kept before anything else.
    pub columns: Option<Vec<usize>>,
    pub projection: Option<ProjectionKind>,
    pub whiten: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub trim_validation: bool,
    pub trim_train: bool,
    pub trim_test: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions { folds: 4, seed: 0, trim_validation: true, trim_train: false, trim_test: false }
    }
}

/// Input stages fitted on learning rows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InputStages {
    pub projection: Option<Projection>,
    pub scaler: Option<ColumnScaler>,
}

impl InputStages {
    pub fn fit(spec: &PipelineSpec, components: Option<usize>, learn: &Dataset) -> Result<Self> {
        let projection = match (spec.projection, components) {
            (Some(kind), Some(c)) => {
                let p = fit_projection(kind, learn, c)?;
                if p.n_components() < c {
                    return Err(Error::TooManyComponents { requested: c, max: p.n_components() });
                }
                Some(p)
            }
            (None, _) => None,
            (Some(_), None) => return Err(Error::InvalidParameter("projection needs a component count".into())),
        };
        let scaler = if spec.whiten {
            let x = match &projection {
                Some(p) => p.transform_matrix(learn.x())?,
                None => learn.x().clone(),
            };
            Some(ColumnScaler::fit(&x)?)
        } else {
            None
        };
        Ok(InputStages { projection, scaler })
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let x = match &self.projection {
            Some(p) => p.transform_matrix(x)?,
            None => x.clone(),
        };
        match &self.scaler {
            Some(s) => s.transform(&x),
            None => Ok(x),
        }
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        if self.projection.is_none() && self.scaler.is_none() {
            return Ok(d.clone());
        }
        d.with_inputs(self.apply(d.x())?, None)
    }
}

/// Scores of one grid point on one fold. Trimmed indices refer to rows of
/// the training set handed to [`cross_validate`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldScore {
    pub nmse_l: f64,
    pub nmse_v: f64,
    pub trimmed_train: Vec<usize>,
    pub trimmed_validation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridPointReport {
    pub params: MetaParams,
    /// One entry per fold, empty when the point failed.
    pub folds: Vec<FoldScore>,
    pub mean_nmse_l: Option<f64>,
    pub mean_nmse_v: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvReport {
    pub options: CvOptions,
    pub var_y_all: f64,
    pub fold_indices: Vec<Vec<usize>>,
    pub points: Vec<GridPointReport>,
    /// Index of the point with the lowest mean validation NMSE; the first
    /// in grid order on ties.
    pub winner: usize,
}

impl CvReport {
    pub fn winner_params(&self) -> &MetaParams {
        &self.points[self.winner].params
    }

    pub fn winner_point(&self) -> &GridPointReport {
        &self.points[self.winner]
    }
}

struct FoldData {
    learn: Dataset,
    validation: Dataset,
    learn_rows: Vec<usize>,
    validation_rows: Vec<usize>,
}

fn score(fold: &FoldData, learn_pred: &[f64], val_pred: &[f64], opts: &CvOptions, var_y_all: f64) -> Result<FoldScore> {
    if learn_pred.iter().chain(val_pred).any(|p| !p.is_finite()) {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let part = |pred: &[f64], d: &Dataset, rows: &[usize], trim: bool| -> Result<(f64, Vec<usize>)> {
        let errors: Vec<f64> = pred.iter().zip(d.y()).map(|(p, y)| p - y).collect();
        let keep = if trim { trim_outliers(&errors) } else { (0..errors.len()).collect() };
        let mut dropped = Vec::new();
        let mut k = keep.iter().peekable();
        for (i, &row) in rows.iter().enumerate() {
            if k.peek() == Some(&&i) {
                k.next();
            } else {
                dropped.push(row);
            }
        }
        let p: Vec<f64> = keep.iter().map(|&i| pred[i]).collect();
        let t: Vec<f64> = keep.iter().map(|&i| d.y()[i]).collect();
        Ok((nmse(&p, &t, var_y_all)?, dropped))
    };
    let (nmse_l, trimmed_train) = part(learn_pred, &fold.learn, &fold.learn_rows, opts.trim_train)?;
    let (nmse_v, trimmed_validation) = part(val_pred, &fold.validation, &fold.validation_rows, opts.trim_validation)?;
    Ok(FoldScore { nmse_l, nmse_v, trimmed_train, trimmed_validation })
}

/// Evaluates one (fold, component count, outer model value) job, returning
/// scores for every inner model value.
fn run_job(
    fold: &FoldData,
    spec: &PipelineSpec,
    components: Option<usize>,
    grid: &ModelGrid,
    outer: usize,
    opts: &CvOptions,
    var_y_all: f64,
) -> Vec<Result<FoldScore>> {
    let inner = grid.inner_len();
    let fail = |e: Error| vec![Err(e); inner];
    let stages = match InputStages::fit(spec, components, &fold.learn) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let (learn, val_x) = match (stages.apply_dataset(&fold.learn), stages.apply(fold.validation.x())) {
        (Ok(l), Ok(v)) => (l, v),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    match grid {
        ModelGrid::Linear => {
            let r = fit_linear(&learn).and_then(|m| {
                let lp = m.predict_rows(learn.x())?;
                let vp = m.predict_rows(&val_x)?;
                score(fold, &lp, &vp, opts, var_y_all)
            });
            vec![r]
        }
        ModelGrid::Rbfn { centroids, wsf, seed } => {
            let (c, base) = match rbfn_layout(&learn, centroids[outer], *seed) {
                Ok(v) => v,
                Err(e) => return fail(e),
            };
            wsf.iter()
                .map(|&s| {
                    let widths = base.iter().map(|w| w * s).collect();
                    let m = fit_rbfn_with_centroids(&learn, c.clone(), widths)?;
                    let lp = m.predict_rows(learn.x())?;
                    let vp = m.predict_rows(&val_x)?;
                    score(fold, &lp, &vp, opts, var_y_all)
                })
                .collect()
        }
        ModelGrid::Lssvm { sigma, gamma } => {
            let path = match LssvmPath::new(&learn, sigma[outer]) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let projected = match path.project(&val_x) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            gamma
                .iter()
                .map(|&g| {
                    let sol = path.solve(g)?;
                    let lp = path.fitted(&sol);
                    let vp = path.predict_projected(&projected, &sol);
                    score(fold, &lp, &vp, opts, var_y_all)
                })
                .collect()
        }
    }
}

/// Grid search by l-fold cross-validation on `train`.
///
/// Failures at a grid point are recorded in its report and do not stop the
/// sweep; the call fails only when every point failed.
pub fn cross_validate(
    train: &Dataset,
    spec: &PipelineSpec,
    grid: &MetaGrid,
    opts: &CvOptions,
    var_y_all: f64,
) -> Result<CvReport> {
    if grid.is_empty() || (spec.projection.is_some() && grid.components.is_empty()) {
        return Err(Error::EmptyGrid);
    }
    if !(var_y_all > 0.0) {
        return Err(Error::NonPositive { name: "var_y_all", value: var_y_all });
    }
    let train = match &spec.columns {
        Some(c) => train.select_columns(c)?,
        None => train.clone(),
    };
    let fold_indices = kfold_split(train.n_samples(), opts.folds, opts.seed)?;
    let folds: Vec<FoldData> = fold_indices
        .iter()
        .map(|val_rows| {
            let mut in_val = vec![false; train.n_samples()];
            for &r in val_rows {
                in_val[r] = true;
            }
            let learn_rows: Vec<usize> = (0..train.n_samples()).filter(|&r| !in_val[r]).collect();
            Ok(FoldData {
                learn: train.select_rows(&learn_rows)?,
                validation: train.select_rows(val_rows)?,
                learn_rows,
                validation_rows: val_rows.clone(),
            })
        })
        .collect::<Result<_>>()?;

    let slots = grid.component_slots();
    let outer = grid.model.outer_len();
    let jobs_per_fold = slots * outer;
    let results = par::map_indexed(folds.len() * jobs_per_fold, |j| {
        let (f, rest) = (j / jobs_per_fold, j % jobs_per_fold);
        let (c, o) = (rest / outer, rest % outer);
        run_job(&folds[f], spec, grid.components.get(c).copied(), &grid.model, o, opts, var_y_all)
    });

    let inner = grid.model.inner_len();
    let points: Vec<GridPointReport> = (0..grid.len())
        .map(|index| {
            let params = grid.point(index);
            let (c, m) = (index / grid.model.len(), index % grid.model.len());
            let (o, i) = (m / inner, m % inner);
            let mut scores = Vec::with_capacity(folds.len());
            for f in 0..folds.len() {
                match &results[f * jobs_per_fold + c * outer + o][i] {
                    Ok(s) => scores.push(s.clone()),
                    Err(e) => {
                        return GridPointReport {
                            params,
                            folds: Vec::new(),
                            mean_nmse_l: None,
                            mean_nmse_v: None,
                            error: Some(format!("fold {f}: {e}")),
                        }
                    }
                }
            }
            let k = scores.len() as f64;
            GridPointReport {
                params,
                mean_nmse_l: Some(scores.iter().map(|s| s.nmse_l).sum::<f64>() / k),
                mean_nmse_v: Some(scores.iter().map(|s| s.nmse_v).sum::<f64>() / k),
                folds: scores,
                error: None,
            }
        })
        .collect();

    let mut winner: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(v) = p.mean_nmse_v {
            if winner.map_or(true, |(_, best)| v < best) {
                winner = Some((i, v));
            }
        }
    }
    let winner = match winner {
        Some((i, _)) => i,
        None => {
            let first = points.iter().find_map(|p| p.error.clone()).unwrap_or_default();
            return Err(Error::AllGridPointsFailed(first));
        }
    };
    Ok(CvReport { options: *opts, var_y_all, fold_indices, points, winner })
}

/// A fitted pipeline, applicable to raw rows of the original variables.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainedPipeline {
    pub columns: Option<Vec<usize>>,
    pub stages: InputStages,
    pub model: Model,
    pub params: MetaParams,
}

impl TrainedPipeline {
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let x = match &self.columns {
            Some(c) => {
                if let Some(&index) = c.iter().find(|&&j| j >= x.ncols()) {
                    return Err(Error::ColumnOutOfRange { index, len: x.ncols() });
                }
                x.select_columns(c.iter())
            }
            None => x.clone(),
        };
        self.model.predict_rows(&self.stages.apply(&x)?)
    }
}

/// Fits every stage and the model on `train` with fixed meta-parameters.
pub fn fit_pipeline(train: &Dataset, spec: &PipelineSpec, params: &MetaParams) -> Result<TrainedPipeline> {
    let selected = match &spec.columns {
        Some(c) => train.select_columns(c)?,
        None => train.clone(),
    };
    let stages = InputStages::fit(spec, params.components, &selected)?;
    let inputs = stages.apply_dataset(&selected)?;
    let model = match params.model {
        ModelParams::Linear => Model::Linear(fit_linear(&inputs)?),
        ModelParams::Rbfn { centroids, wsf, seed } => {
            let (c, base) = rbfn_layout(&inputs, centroids, seed)?;
            let mut m = fit_rbfn_with_centroids(&inputs, c, base.iter().map(|w| w * wsf).collect())?;
            m.wsf = wsf;
            Model::Rbfn(m)
        }
        ModelParams::Lssvm { sigma, gamma } => Model::Lssvm(fit_lssvm(&inputs, sigma, gamma)?),
    };
    Ok(TrainedPipeline { columns: spec.columns.clone(), stages, model, params: params.clone() })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestEvaluation {
    pub nmse: f64,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
    /// Test rows left out of `nmse` (only when test trimming is enabled).
    pub trimmed: Vec<usize>,
}

/// Training rows plus a test set whose targets are consulted once.
///
/// The target variance over all samples, the common NMSE normalizer, is
/// taken at construction; after that the test set is only reachable through
/// [`Experiment::evaluate_test`], which fails on a second call.
#[derive(Debug, Clone)]
pub struct Experiment {
    train: Dataset,
    test: Dataset,
    var_y_all: f64,
    test_reads: usize,
}

impl Experiment {
    pub fn new(train: Dataset, test: Dataset) -> Result<Self> {
        if train.n_variables() != test.n_variables() {
            return Err(Error::DimensionMismatch { expected: train.n_variables(), found: test.n_variables() });
        }
        let all: Vec<f64> = train.y().iter().chain(test.y()).copied().collect();
        let var_y_all = sample_variance(&all);
        if !(var_y_all > 0.0) {
            return Err(Error::NonPositive { name: "var_y_all", value: var_y_all });
        }
        Ok(Experiment { train, test, var_y_all, test_reads: 0 })
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn var_y_all(&self) -> f64 {
        self.var_y_all
    }

    pub fn test_reads(&self) -> usize {
        self.test_reads
    }

    pub fn n_test(&self) -> usize {
        self.test.n_samples()
    }

    pub fn evaluate_test(&mut self, pipeline: &TrainedPipeline, trim: bool) -> Result<TestEvaluation> {
        if self.test_reads > 0 {
            return Err(Error::TestSetReread);
        }
        self.test_reads += 1;
        let predictions = pipeline.predict_rows(self.test.x())?;
        let targets = self.test.y().to_vec();
        let errors: Vec<f64> = predictions.iter().zip(&targets).map(|(p, t)| p - t).collect();
        let keep = if trim { trim_outliers(&errors) } else { (0..errors.len()).collect() };
        let trimmed = (0..errors.len()).filter(|i| !keep.contains(i)).collect();
        let p: Vec<f64> = keep.iter().map(|&i| predictions[i]).collect();
        let t: Vec<f64> = keep.iter().map(|&i| targets[i]).collect();
        Ok(TestEvaluation { nmse: nmse(&p, &t, self.var_y_all)?, predictions, targets, trimmed })
    }

    /// Cross-validates, refits the winner on all training rows, then reads
    /// the test set.
    pub fn run(&mut self, spec: &PipelineSpec, grid: &MetaGrid, opts: &CvOptions) -> Result<ExperimentReport> {
        let cv = cross_validate(&self.train, spec, grid, opts, self.var_y_all)?;
        let pipeline = fit_pipeline(&self.train, spec, cv.winner_params())?;
        let test = self.evaluate_test(&pipeline, opts.trim_test)?;
        Ok(ExperimentReport { cv, pipeline, test, test_reads: self.test_reads })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub cv: CvReport,
    pub pipeline: TrainedPipeline,
    pub test: TestEvaluation,
    pub test_reads: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nmse_cases() {
        assert_eq!(nmse(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 0.0);
        assert_eq!(nmse(&[1.0, -1.0], &[0.0, 0.0], 2.0).unwrap(), 0.5);
        assert!(nmse(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(nmse(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn fold_sizes() {
        let sizes = |n, l| kfold_split(n, l, 3).unwrap().iter().map(Vec::len).collect::<Vec<_>>();
        assert_eq!(sizes(172, 4), [43, 43, 43, 43]);
        assert_eq!(sizes(149, 3), [50, 50, 49]);
        assert_eq!(sizes(5, 5), [1, 1, 1, 1, 1]);
        assert_eq!(kfold_split(3, 4, 0), Err(Error::InvalidFolds { n: 3, l: 4 }));
        assert_eq!(kfold_split(3, 1, 0), Err(Error::InvalidFolds { n: 3, l: 1 }));
    }

    #[test]
    fn percentile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_sorted(&s, 0.5), 2.0);
        assert!((percentile_sorted(&s, 0.99) - 3.96).abs() < 1e-12);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn trimming() {
        let mut e: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        e[42] = 50.0;
        let keep = trim_outliers(&e);
        assert_eq!(keep.len(), 99);
        assert!(!keep.contains(&42));
        assert_eq!(trim_outliers(&[1.5; 30]).len(), 30);
    }

    #[test]
    fn grid_order() {
        let g = MetaGrid {
            components: vec![1, 2],
            model: ModelGrid::Lssvm { sigma: vec![0.1, 1.0], gamma: vec![10.0, 20.0, 30.0] },
        };
        assert_eq!(g.len(), 12);
        assert_eq!(
            g.point(7),
            MetaParams { components: Some(2), model: ModelParams::Lssvm { sigma: 0.1, gamma: 20.0 } }
        );
        let lg = log_grid(1e-3, 1e6, 300);
        assert_eq!(lg.len(), 300);
        assert!((lg[0] - 1e-3).abs() < 1e-15 && (lg[299] / 1e6 - 1.0).abs() < 1e-12);
    }
}
