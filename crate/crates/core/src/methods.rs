//! The thirteen benchmark pipelines.
//!
//! | id | inputs                | model  |
//! |----|-----------------------|--------|
//! | 1  | PCA scores            | linear |
//! | 2  | PLS scores            | linear |
//! | 3  | PCA                   | RBFN   |
//! | 4  | PCA, whitened         | RBFN   |
//! | 5  | PCA                   | LS-SVM |
//! | 6  | PCA, whitened         | LS-SVM |
//! | 7  | PLS                   | RBFN   |
//! | 8  | PLS, whitened         | RBFN   |
//! | 9  | PLS                   | LS-SVM |
//! | 10 | PLS, whitened         | LS-SVM |
//! | 11 | MI-selected variables | RBFN   |
//! | 12 | MI-selected variables | LS-SVM |
//! | 13 | MI-selected variables | linear |
//!
//! Methods 1 and 2 choose their component count by cross-validation;
//! methods 3 to 10 reuse that count. Methods 11 to 13 share one variable
//! selection computed on the training rows.

use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::ProjectionKind;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, fit_pipeline, CvOptions, CvReport, Experiment, ExperimentReport, GridConfig, InputStages, MetaGrid,
    ModelGrid, PipelineSpec, TrainedPipeline,
};
use crate::mi::{MiConfig, MiEstimator};
use crate::selector::{select, Option2Config, Selection};

pub const METHOD_COUNT: u8 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Linear,
    Rbfn,
    Lssvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InputKind {
    Projection { projection: ProjectionKind, whiten: bool },
    MutualInformation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodInfo {
    pub id: u8,
    pub inputs: InputKind,
    pub model: ModelKind,
}

impl MethodInfo {
    pub fn preprocessing(&self) -> &'static str {
        match self.inputs {
            InputKind::Projection { projection: ProjectionKind::Pca, whiten: false } => "PCA",
            InputKind::Projection { projection: ProjectionKind::Pca, whiten: true } => "PCA + whitening",
            InputKind::Projection { projection: ProjectionKind::Pls, whiten: false } => "PLS",
            InputKind::Projection { projection: ProjectionKind::Pls, whiten: true } => "PLS + whitening",
            InputKind::MutualInformation => "MI",
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelKind::Linear => "Linear",
            ModelKind::Rbfn => "RBFN",
            ModelKind::Lssvm => "LS-SVM",
        }
    }
}

pub fn method_info(id: u8) -> Result<MethodInfo> {
    use InputKind::*;
    use ModelKind::*;
    use ProjectionKind::*;
    let proj = |projection, whiten| Projection { projection, whiten };
    let (inputs, model) = match id {
        1 => (proj(Pca, false), Linear),
        2 => (proj(Pls, false), Linear),
        3 => (proj(Pca, false), Rbfn),
        4 => (proj(Pca, true), Rbfn),
        5 => (proj(Pca, false), Lssvm),
        6 => (proj(Pca, true), Lssvm),
        7 => (proj(Pls, false), Rbfn),
        8 => (proj(Pls, true), Rbfn),
        9 => (proj(Pls, false), Lssvm),
        10 => (proj(Pls, true), Lssvm),
        11 => (MutualInformation, Rbfn),
        12 => (MutualInformation, Lssvm),
        13 => (MutualInformation, Linear),
        _ => return Err(Error::UnknownMethod(id)),
    };
    Ok(MethodInfo { id, inputs, model })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodConfig {
    pub mi: MiConfig,
    /// Candidate pool size for the exhaustive search.
    pub p: usize,
    pub option2: Option2Config,
    pub cv: CvOptions,
    pub grid: GridConfig,
    /// Seed of the k-means initialization.
    pub model_seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            mi: MiConfig::default(),
            p: 16,
            option2: Option2Config::default(),
            cv: CvOptions::default(),
            grid: GridConfig::default(),
            model_seed: 0,
        }
    }
}

impl MethodConfig {
    /// Rows in the smallest learning fold.
    pub fn min_learning_rows(&self, n_train: usize) -> usize {
        n_train - n_train.div_ceil(self.cv.folds.max(1))
    }
}

/// Grid size and exhaustive-search size of a method, without running it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodPlan {
    pub id: u8,
    pub grid_points: usize,
    pub folds: usize,
    /// Non-empty subsets enumerated by the exhaustive search.
    pub subsets: Option<u64>,
}

pub fn plan(id: u8, config: &MethodConfig, n_train: usize, n_variables: usize) -> Result<MethodPlan> {
    let info = method_info(id)?;
    let g = &config.grid;
    let min_rows = config.min_learning_rows(n_train);
    let model_points = match info.model {
        ModelKind::Linear => 1,
        ModelKind::Rbfn => g.max_centroids.min(min_rows) * g.wsf_count,
        ModelKind::Lssvm => g.sigma_count * g.gamma_count,
    };
    let grid_points = match (info.inputs, info.model) {
        (InputKind::Projection { .. }, ModelKind::Linear) => g.components(min_rows, n_variables).len(),
        _ => model_points,
    };
    let subsets = match info.inputs {
        InputKind::MutualInformation => Some((1u64 << config.p.min(n_variables)) - 1),
        InputKind::Projection { .. } => None,
    };
    Ok(MethodPlan { id, grid_points, folds: config.cv.folds, subsets })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodOutcome {
    pub info: MethodInfo,
    /// Inputs seen by the model: components or selected variables.
    pub n_variables: usize,
    pub report: ExperimentReport,
}

/// Runs methods on one train/test split, sharing the component counts of
/// methods 1 and 2 and the variable selection between methods.
pub struct MethodRunner {
    train: Dataset,
    test: Dataset,
    config: MethodConfig,
    var_y_all: f64,
    linear_cv: [Option<CvReport>; 2],
    selection: Option<Selection>,
}

impl MethodRunner {
    pub fn new(train: Dataset, test: Dataset, config: MethodConfig) -> Result<Self> {
        let var_y_all = Experiment::new(train.clone(), test.clone())?.var_y_all();
        Ok(MethodRunner { train, test, config, var_y_all, linear_cv: [None, None], selection: None })
    }

    pub fn config(&self) -> &MethodConfig {
        &self.config
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn var_y_all(&self) -> f64 {
        self.var_y_all
    }

    /// The selection, if it has been computed.
    pub fn cached_selection(&self) -> Option<&Selection> {
        self.selection.as_ref()
    }

    fn linear_spec_grid(&self, kind: ProjectionKind) -> (PipelineSpec, MetaGrid) {
        let min_rows = self.config.min_learning_rows(self.train.n_samples());
        let spec = PipelineSpec { columns: None, projection: Some(kind), whiten: false };
        let grid = MetaGrid {
            components: self.config.grid.components(min_rows, self.train.n_variables()),
            model: ModelGrid::Linear,
        };
        (spec, grid)
    }

    fn slot(kind: ProjectionKind) -> usize {
        match kind {
            ProjectionKind::Pca => 0,
            ProjectionKind::Pls => 1,
        }
    }

    /// Component count chosen by cross-validating the linear method.
    pub fn component_count(&mut self, kind: ProjectionKind) -> Result<usize> {
        let slot = Self::slot(kind);
        if self.linear_cv[slot].is_none() {
            let (spec, grid) = self.linear_spec_grid(kind);
            self.linear_cv[slot] = Some(cross_validate(&self.train, &spec, &grid, &self.config.cv, self.var_y_all)?);
        }
        let cv = self.linear_cv[slot].as_ref().expect("filled above");
        cv.winner_params().components.ok_or(Error::EmptyGrid)
    }

    /// Variable selection on the training rows.
    pub fn selection(&mut self) -> Result<&Selection> {
        if self.selection.is_none() {
            let est = MiEstimator::new(&self.train, self.config.mi)?;
            self.selection = Some(select(&est, self.config.p, self.config.option2)?);
        }
        Ok(self.selection.as_ref().expect("filled above"))
    }

    fn model_grid(&self, model: ModelKind, spec: &PipelineSpec, components: Option<usize>) -> Result<ModelGrid> {
        let min_rows = self.config.min_learning_rows(self.train.n_samples());
        Ok(match model {
            ModelKind::Linear => ModelGrid::Linear,
            ModelKind::Rbfn => self.config.grid.rbfn(min_rows, self.config.model_seed),
            ModelKind::Lssvm => {
                let selected = match &spec.columns {
                    Some(c) => self.train.select_columns(c)?,
                    None => self.train.clone(),
                };
                let inputs = InputStages::fit(spec, components, &selected)?.apply(selected.x())?;
                self.config.grid.lssvm(&inputs)?
            }
        })
    }

    /// Pipeline and grid of a method; may run the selection or the linear
    /// cross-validation it depends on.
    pub fn prepare(&mut self, id: u8) -> Result<PreparedMethod> {
        let info = method_info(id)?;
        let (spec, grid, n_variables) = match info.inputs {
            InputKind::Projection { projection, .. } if info.model == ModelKind::Linear => {
                let (spec, grid) = self.linear_spec_grid(projection);
                (spec, grid, None)
            }
            InputKind::Projection { projection, whiten } => {
                let c = self.component_count(projection)?;
                let spec = PipelineSpec { columns: None, projection: Some(projection), whiten };
                let model = self.model_grid(info.model, &spec, Some(c))?;
                (spec, MetaGrid { components: vec![c], model }, Some(c))
            }
            InputKind::MutualInformation => {
                let columns = self.selection()?.winner.sorted();
                let n = columns.len();
                let spec = PipelineSpec { columns: Some(columns), projection: None, whiten: false };
                let model = self.model_grid(info.model, &spec, None)?;
                (spec, MetaGrid { components: Vec::new(), model }, Some(n))
            }
        };
        Ok(PreparedMethod { info, spec, grid, n_variables })
    }

    fn remember(&mut self, info: &MethodInfo, cv: &CvReport) {
        if let InputKind::Projection { projection, .. } = info.inputs {
            if info.model == ModelKind::Linear {
                self.linear_cv[Self::slot(projection)].get_or_insert_with(|| cv.clone());
            }
        }
    }

    /// Cross-validation and refit on the training rows; the test set is not
    /// used.
    pub fn fit(&mut self, id: u8) -> Result<FittedMethod> {
        let prepared = self.prepare(id)?;
        let cv = cross_validate(&self.train, &prepared.spec, &prepared.grid, &self.config.cv, self.var_y_all)?;
        let pipeline = fit_pipeline(&self.train, &prepared.spec, cv.winner_params())?;
        self.remember(&prepared.info, &cv);
        let n_variables = prepared.n_variables_for(&cv);
        Ok(FittedMethod { info: prepared.info, n_variables, cv, pipeline })
    }

    /// Full experiment: cross-validation, refit, one read of the test set.
    pub fn run(&mut self, id: u8) -> Result<MethodOutcome> {
        let prepared = self.prepare(id)?;
        let mut exp = Experiment::new(self.train.clone(), self.test.clone())?;
        let report = exp.run(&prepared.spec, &prepared.grid, &self.config.cv)?;
        self.remember(&prepared.info, &report.cv);
        let n_variables = prepared.n_variables_for(&report.cv);
        Ok(MethodOutcome { info: prepared.info, n_variables, report })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMethod {
    pub info: MethodInfo,
    pub spec: PipelineSpec,
    pub grid: MetaGrid,
    /// Known before cross-validation except for the linear methods.
    n_variables: Option<usize>,
}

impl PreparedMethod {
    fn n_variables_for(&self, cv: &CvReport) -> usize {
        self.n_variables.or(cv.winner_params().components).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FittedMethod {
    pub info: MethodInfo,
    pub n_variables: usize,
    pub cv: CvReport,
    pub pipeline: TrainedPipeline,
}
