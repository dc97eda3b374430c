//! Output documents. One directory per (dataset, method, seed) holds
//! `report.json`, `grid.csv`, `trace.json` and `model.json`.

use std::fs;
use std::path::{Path, PathBuf};

use mivs_core::eval::{CvReport, FoldScore, MetaParams, ModelParams, TestEvaluation, TrainedPipeline};
use mivs_core::methods::MethodInfo;
use mivs_core::selector::{Selection, SelectionTrace, VariableSubset};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Preprocessing, Resolved};
use crate::error::{CliError, CliResult};

pub const MODEL_FORMAT: &str = "mivs-model";
pub const MODEL_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

pub fn method_dir(out: &Path, dataset: &str, method: u8, seed: u64) -> PathBuf {
    out.join(dataset).join(format!("method-{method}")).join(format!("seed-{seed}"))
}

pub fn command_dir(out: &Path, dataset: &str, command: &str, seed: u64) -> PathBuf {
    out.join(dataset).join(command).join(format!("seed-{seed}"))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub column: usize,
    pub label: Option<String>,
}

pub fn variables(subset: &[usize], labels: Option<&[String]>) -> Vec<Variable> {
    subset.iter().map(|&c| Variable { column: c, label: labels.and_then(|l| l.get(c).cloned()) }).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub csv: PathBuf,
    pub preprocessing: Preprocessing,
    pub target: String,
    pub n_train: usize,
    pub n_test: usize,
    pub n_variables: usize,
    /// Number of cross-validation folds actually used.
    pub folds: usize,
    pub var_y_all: f64,
}

impl DatasetSummary {
    pub fn new(r: &Resolved, var_y_all: f64) -> Self {
        DatasetSummary {
            name: r.name.clone(),
            csv: r.csv.clone(),
            preprocessing: r.preprocessing,
            target: r.target_label.clone(),
            n_train: r.train.n_samples(),
            n_test: r.test.n_samples(),
            n_variables: r.train.n_variables(),
            folds: r.folds,
            var_y_all,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CvSummary {
    pub winner: MetaParams,
    pub mean_nmse_l: Option<f64>,
    pub mean_nmse_v: Option<f64>,
    pub folds: Vec<FoldScore>,
    pub fold_indices: Vec<Vec<usize>>,
    pub grid_points: usize,
    pub failed_points: usize,
}

impl CvSummary {
    pub fn new(cv: &CvReport) -> Self {
        let w = cv.winner_point();
        CvSummary {
            winner: w.params.clone(),
            mean_nmse_l: w.mean_nmse_l,
            mean_nmse_v: w.mean_nmse_v,
            folds: w.folds.clone(),
            fold_indices: cv.fold_indices.clone(),
            grid_points: cv.points.len(),
            failed_points: cv.points.iter().filter(|p| p.error.is_some()).count(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub method: u8,
    pub preprocessing: &'static str,
    pub model: &'static str,
    pub n_variables: usize,
    /// Input variables chosen by mutual information (methods 11 to 13).
    pub selected: Option<Vec<Variable>>,
    pub cv: CvSummary,
    pub nmse_test: Option<f64>,
    pub test: Option<TestEvaluation>,
    pub test_reads: usize,
}

/// Versioned model document for `train` / `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub method: u8,
    pub preprocessing: Preprocessing,
    pub target: String,
    /// Labels of the variables the pipeline reads, after preprocessing.
    pub input_labels: Option<Vec<String>>,
    pub pipeline: TrainedPipeline,
}

impl ModelDocument {
    pub fn new(r: &Resolved, info: &MethodInfo, pipeline: TrainedPipeline) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            dataset: r.name.clone(),
            method: info.id,
            preprocessing: r.preprocessing,
            target: r.target_label.clone(),
            input_labels: r.train.labels().map(<[String]>::to_vec),
            pipeline,
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc: ModelDocument =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(CliError::Config(format!(
                "{}: unsupported model document {} v{}",
                path.display(),
                doc.format,
                doc.version
            )));
        }
        Ok(doc)
    }
}

/// Selection artifacts with labels.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub k: usize,
    pub p: usize,
    pub a: Vec<Variable>,
    pub b: Vec<Variable>,
    pub b_mi: f64,
    pub c: Vec<Variable>,
    pub winner: Vec<Variable>,
    pub winner_mi: f64,
    pub b_within_a: bool,
}

impl SelectionReport {
    pub fn new(s: &Selection, k: usize, p: usize, labels: Option<&[String]>) -> Self {
        let v = |set: &VariableSubset| variables(set.indices(), labels);
        SelectionReport {
            k,
            p,
            a: v(&s.a),
            b: v(&s.b),
            b_mi: s.b_mi.value,
            c: v(&s.c),
            winner: v(&s.winner),
            winner_mi: s.winner_mi.value,
            b_within_a: s.b.is_subset_of(&s.a),
        }
    }
}

pub fn write_trace(path: &Path, selection: Option<&Selection>) -> CliResult<()> {
    match selection {
        Some(s) => write_json(path, &s.trace),
        None => write_json(path, &SelectionTrace::default()),
    }
}

fn join_indices(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Flat `(grid point, fold, NMSE)` table of a cross-validation.
pub fn write_grid_csv(path: &Path, cv: &CvReport) -> CliResult<()> {
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record([
        "point",
        "fold",
        "components",
        "model",
        "centroids",
        "wsf",
        "sigma",
        "gamma",
        "nmse_l",
        "nmse_v",
        "trimmed_train",
        "trimmed_validation",
        "error",
    ])
    .map_err(err)?;
    for (i, p) in cv.points.iter().enumerate() {
        let components = p.params.components.map_or(String::new(), |c| c.to_string());
        let (model, centroids, wsf, sigma, gamma) = match p.params.model {
            ModelParams::Linear => ("linear", String::new(), String::new(), String::new(), String::new()),
            ModelParams::Rbfn { centroids, wsf, .. } => {
                ("rbfn", centroids.to_string(), wsf.to_string(), String::new(), String::new())
            }
            ModelParams::Lssvm { sigma, gamma } => {
                ("lssvm", String::new(), String::new(), sigma.to_string(), gamma.to_string())
            }
        };
        let base = [i.to_string(), String::new(), components, model.into(), centroids, wsf, sigma, gamma];
        if let Some(e) = &p.error {
            let mut row = base.to_vec();
            row.extend([String::new(), String::new(), String::new(), String::new(), e.clone()]);
            w.write_record(&row).map_err(err)?;
            continue;
        }
        for (f, s) in p.folds.iter().enumerate() {
            let mut row = base.to_vec();
            row[1] = f.to_string();
            row.extend([
                s.nmse_l.to_string(),
                s.nmse_v.to_string(),
                join_indices(&s.trimmed_train),
                join_indices(&s.trimmed_validation),
                String::new(),
            ]);
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row of the benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub method: u8,
    pub preprocessing: &'static str,
    pub n_variables: Option<usize>,
    pub model: &'static str,
    pub nmse_test: Option<f64>,
    pub error: Option<String>,
}

/// Markdown table; the two lowest NMSE values are bold.
pub fn markdown_table(rows: &[TableRow]) -> String {
    let mut ranked: Vec<(usize, f64)> =
        rows.iter().enumerate().filter_map(|(i, r)| r.nmse_test.map(|v| (i, v))).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best: Vec<usize> = ranked.iter().take(2).map(|r| r.0).collect();
    let mut s =
        String::from("| Experiment | Preprocessing | Number of variables | Model | NMSE_T |\n|---|---|---|---|---|\n");
    for (i, r) in rows.iter().enumerate() {
        let nmse = match (r.nmse_test, &r.error) {
            (Some(v), _) if best.contains(&i) => format!("**{v:.2E}**"),
            (Some(v), _) => format!("{v:.2E}"),
            (None, Some(e)) => format!("failed: {e}"),
            (None, None) => String::from("-"),
        };
        let n = r.n_variables.map_or(String::from("-"), |n| n.to_string());
        s.push_str(&format!("| ({}) | {} | {} | {} | {} |\n", r.method, r.preprocessing, n, r.model, nmse));
    }
    s
}
