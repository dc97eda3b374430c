//! Command-line surface. Progress goes to standard error; results go to
//! files under `--out` (the dry-run plan is printed to standard output).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mivs_core::dataset::normalize_spectra;
use mivs_core::methods::{plan, MethodOutcome, MethodRunner, METHOD_COUNT};
use mivs_core::mi::MiEstimator;
use mivs_core::selector::{rank_option1, select};
use mivs_core::{MiScaling, SplitSpec};

use crate::config::{data_dir, load_config, ExperimentConfig, Preprocessing, Resolved};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{
    command_dir, create_dir, markdown_table, method_dir, variables, write_grid_csv, write_json, write_trace, CvSummary,
    DatasetSummary, MethodReport, ModelDocument, SelectionReport, TableRow, REPORT_VERSION,
};

pub const TECATOR_URL: &str = "http://lib.stat.cmu.edu/datasets/tecator";

#[derive(Debug, Parser)]
#[command(name = "mivs", version, about = "Mutual-information variable selection for spectrometric regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mutual information of every variable with the target.
    Estimate(ExperimentArgs),
    /// Option 2, Option 1 and the exhaustive search over the pool.
    Select(ExperimentArgs),
    /// Cross-validate and fit one method on the training rows.
    Train(ExperimentArgs),
    /// Apply a model document to a CSV file.
    Predict(PredictArgs),
    /// Cross-validate, fit and test one method.
    RunMethod(ExperimentArgs),
    /// Run all thirteen methods and tabulate test NMSE.
    Reproduce(ExperimentArgs),
    /// Download (or convert a local copy of) the Tecator archive.
    FetchData(FetchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset name in the data directory, or a CSV path.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Target column name or zero-based index.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long, value_enum)]
    pub preprocessing: Option<Preprocessing>,
    #[arg(long)]
    pub method: Option<u8>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trim_train: bool,
    #[arg(long)]
    pub trim_test: bool,
    #[arg(long)]
    pub no_trim_validation: bool,
    /// Unit-variance rescaling before estimating MI: none, target or all.
    #[arg(long)]
    pub mi_scaling: Option<MiScaling>,
    /// Repeat backward steps until none removes a variable.
    #[arg(long)]
    pub iterate_backward: bool,
    /// Print planned grid sizes and subset counts without computing.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV (default: predictions.csv next to the model).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FetchArgs {
    #[arg(long, default_value = TECATOR_URL)]
    pub url: String,
    /// Convert this local copy of the archive instead of downloading.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

impl ExperimentArgs {
    /// Configuration file (if any) with the flags applied on top.
    pub fn to_config(&self) -> CliResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => load_config(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$f = v;
                }
            )*};
        }
        macro_rules! set_opt {
            ($($f:ident),*) => {$(
                if self.$f.is_some() {
                    c.$f = self.$f.clone();
                }
            )*};
        }
        set!(dataset, k, p, seed, out);
        set_opt!(data_dir, target, split, n_train, preprocessing, method, folds, workers);
        set!(mi_scaling);
        c.trim_train |= self.trim_train;
        c.trim_test |= self.trim_test;
        c.trim_validation &= !self.no_trim_validation;
        c.iterate_backward |= self.iterate_backward;
        c.validate()?;
        Ok(c)
    }
}

fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // Fails only if the pool already exists (repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Estimate(a) => cmd_estimate(&a.to_config()?),
        Command::Select(a) => cmd_select(&a.to_config()?, a.dry_run),
        Command::Train(a) => cmd_train(&a.to_config()?),
        Command::Predict(a) => cmd_predict(&a),
        Command::RunMethod(a) => cmd_run_method(&a.to_config()?, a.dry_run),
        Command::Reproduce(a) => cmd_reproduce(&a.to_config()?, a.dry_run),
        Command::FetchData(a) => cmd_fetch(&a),
    }
    .map(drop)
}

fn estimator(c: &ExperimentConfig, r: &Resolved) -> CliResult<MiEstimator> {
    Ok(MiEstimator::new(&r.train, c.method_config(r.folds).mi)?)
}

/// Per-variable MI on the training rows, descending, as `mi.csv`.
pub fn cmd_estimate(c: &ExperimentConfig) -> CliResult<PathBuf> {
    init_workers(c.workers);
    let r = c.resolve()?;
    eprintln!("estimate: {} training rows, {} variables, k = {}", r.train.n_samples(), r.train.n_variables(), c.k);
    let est = estimator(c, &r)?;
    let (_, ranking) = rank_option1(&est, 0)?;
    let dir = command_dir(&c.out, &r.name, "estimate", c.seed);
    create_dir(&dir)?;
    let path = dir.join("mi.csv");
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    w.write_record(["rank", "column", "label", "mi"]).map_err(err)?;
    for (i, v) in ranking.iter().enumerate() {
        let label = r.train.label(v.column).unwrap_or("").to_string();
        w.write_record([(i + 1).to_string(), v.column.to_string(), label, v.mi.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

pub fn cmd_select(c: &ExperimentConfig, dry_run: bool) -> CliResult<PathBuf> {
    init_workers(c.workers);
    let r = c.resolve()?;
    let pool = c.p.min(r.train.n_variables());
    if dry_run {
        println!("select: pool of {pool} variables, {} non-empty subsets", (1u64 << pool) - 1);
        return Ok(PathBuf::new());
    }
    eprintln!(
        "select: {} training rows, {} variables, k = {}, P = {}",
        r.train.n_samples(),
        r.train.n_variables(),
        c.k,
        c.p
    );
    let est = estimator(c, &r)?;
    let s = select(&est, c.p, c.method_config(r.folds).option2)?;
    let dir = command_dir(&c.out, &r.name, "select", c.seed);
    create_dir(&dir)?;
    let report = SelectionReport::new(&s, c.k, c.p, r.train.labels());
    write_json(&dir.join("selection.json"), &report)?;
    write_trace(&dir.join("trace.json"), Some(&s))?;
    let labels: Vec<String> =
        report.winner.iter().map(|v| v.label.clone().unwrap_or_else(|| v.column.to_string())).collect();
    eprintln!(
        "|B| = {}, |C| = {}, selected {} variables: {} (MI {:.4})",
        s.b.len(),
        s.c.len(),
        s.winner.len(),
        labels.join(", "),
        s.winner_mi.value
    );
    Ok(dir)
}

fn require_method(c: &ExperimentConfig) -> CliResult<u8> {
    c.method.ok_or_else(|| CliError::Config("--method is required".into()))
}

fn runner(c: &ExperimentConfig, r: &Resolved) -> CliResult<MethodRunner> {
    Ok(MethodRunner::new(r.train.clone(), r.test.clone(), c.method_config(r.folds))?)
}

pub fn cmd_train(c: &ExperimentConfig) -> CliResult<PathBuf> {
    init_workers(c.workers);
    let id = require_method(c)?;
    let r = c.resolve()?;
    let mut runner = runner(c, &r)?;
    eprintln!("train: method {id} on {} rows", r.train.n_samples());
    let fitted = runner.fit(id)?;
    let dir = method_dir(&c.out, &r.name, id, c.seed);
    create_dir(&dir)?;
    let selected = runner.cached_selection().filter(|_| fitted.pipeline.columns.is_some());
    let report = MethodReport {
        version: REPORT_VERSION,
        config: c.clone(),
        dataset: DatasetSummary::new(&r, runner.var_y_all()),
        method: id,
        preprocessing: fitted.info.preprocessing(),
        model: fitted.info.model_name(),
        n_variables: fitted.n_variables,
        selected: fitted.pipeline.columns.as_ref().map(|cols| variables(cols, r.train.labels())),
        cv: CvSummary::new(&fitted.cv),
        nmse_test: None,
        test: None,
        test_reads: 0,
    };
    write_json(&dir.join("report.json"), &report)?;
    write_grid_csv(&dir.join("grid.csv"), &fitted.cv)?;
    write_trace(&dir.join("trace.json"), selected)?;
    write_json(&dir.join("model.json"), &ModelDocument::new(&r, &fitted.info, fitted.pipeline))?;
    eprintln!("wrote {}", dir.display());
    Ok(dir)
}

fn write_outcome(c: &ExperimentConfig, r: &Resolved, runner: &MethodRunner, o: &MethodOutcome) -> CliResult<PathBuf> {
    let dir = method_dir(&c.out, &r.name, o.info.id, c.seed);
    create_dir(&dir)?;
    let pipeline = &o.report.pipeline;
    let report = MethodReport {
        version: REPORT_VERSION,
        config: c.clone(),
        dataset: DatasetSummary::new(r, runner.var_y_all()),
        method: o.info.id,
        preprocessing: o.info.preprocessing(),
        model: o.info.model_name(),
        n_variables: o.n_variables,
        selected: pipeline.columns.as_ref().map(|cols| variables(cols, r.train.labels())),
        cv: CvSummary::new(&o.report.cv),
        nmse_test: Some(o.report.test.nmse),
        test: Some(o.report.test.clone()),
        test_reads: o.report.test_reads,
    };
    write_json(&dir.join("report.json"), &report)?;
    write_grid_csv(&dir.join("grid.csv"), &o.report.cv)?;
    let selected = runner.cached_selection().filter(|_| pipeline.columns.is_some());
    write_trace(&dir.join("trace.json"), selected)?;
    write_json(&dir.join("model.json"), &ModelDocument::new(r, &o.info, pipeline.clone()))?;
    Ok(dir)
}

fn print_plan(c: &ExperimentConfig, r: &Resolved, ids: &[u8]) -> CliResult<()> {
    let mc = c.method_config(r.folds);
    println!(
        "dataset {}: {} train / {} test rows, {} variables, {} folds",
        r.name,
        r.train.n_samples(),
        r.test.n_samples(),
        r.train.n_variables(),
        r.folds
    );
    for &id in ids {
        let p = plan(id, &mc, r.train.n_samples(), r.train.n_variables())?;
        let subsets = p.subsets.map_or(String::new(), |s| format!(", exhaustive search over {s} subsets"));
        println!("method {id:>2}: {} grid points x {} folds{subsets}", p.grid_points, p.folds);
    }
    Ok(())
}

pub fn cmd_run_method(c: &ExperimentConfig, dry_run: bool) -> CliResult<PathBuf> {
    init_workers(c.workers);
    let id = require_method(c)?;
    let r = c.resolve()?;
    if dry_run {
        print_plan(c, &r, &[id])?;
        return Ok(PathBuf::new());
    }
    let mut runner = runner(c, &r)?;
    eprintln!("run-method: method {id} on {}", r.name);
    let o = runner.run(id)?;
    let dir = write_outcome(c, &r, &runner, &o)?;
    eprintln!(
        "method {id}: NMSE_T = {:.3E} with {} variables; wrote {}",
        o.report.test.nmse,
        o.n_variables,
        dir.display()
    );
    Ok(dir)
}

pub fn cmd_reproduce(c: &ExperimentConfig, dry_run: bool) -> CliResult<PathBuf> {
    init_workers(c.workers);
    let r = c.resolve()?;
    let ids: Vec<u8> = (1..=METHOD_COUNT).collect();
    if dry_run {
        print_plan(c, &r, &ids)?;
        return Ok(PathBuf::new());
    }
    let mut runner = runner(c, &r)?;
    let mut rows = Vec::new();
    for id in ids {
        let info = mivs_core::methods::method_info(id)?;
        eprintln!("reproduce: method {id} ({} / {})", info.preprocessing(), info.model_name());
        let row = match runner.run(id) {
            Ok(o) => {
                write_outcome(c, &r, &runner, &o)?;
                eprintln!("  NMSE_T = {:.3E}", o.report.test.nmse);
                TableRow {
                    method: id,
                    preprocessing: info.preprocessing(),
                    n_variables: Some(o.n_variables),
                    model: info.model_name(),
                    nmse_test: Some(o.report.test.nmse),
                    error: None,
                }
            }
            Err(e) => {
                eprintln!("  failed: {e}");
                TableRow {
                    method: id,
                    preprocessing: info.preprocessing(),
                    n_variables: None,
                    model: info.model_name(),
                    nmse_test: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    let dir = command_dir(&c.out, &r.name, "reproduce", c.seed);
    create_dir(&dir)?;
    let table = markdown_table(&rows);
    std::fs::write(dir.join("table.md"), &table).map_err(|e| CliError::io(dir.join("table.md"), e))?;
    write_json(&dir.join("reproduce.json"), &serde_json::json!({ "config": c, "rows": rows }))?;
    let csv_path = dir.join("table.csv");
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", csv_path.display()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(err)?;
    w.write_record(["method", "preprocessing", "n_variables", "model", "nmse_test", "error"]).map_err(err)?;
    for row in &rows {
        w.write_record([
            row.method.to_string(),
            row.preprocessing.to_string(),
            row.n_variables.map_or(String::new(), |n| n.to_string()),
            row.model.to_string(),
            row.nmse_test.map_or(String::new(), |v| v.to_string()),
            row.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    eprint!("{table}");
    Ok(dir)
}

pub fn cmd_predict(a: &PredictArgs) -> CliResult<PathBuf> {
    init_workers(a.workers);
    let doc = ModelDocument::read(&a.model)?;
    let table = io::read_table(&a.input)?;
    let target = table.header.as_ref().and_then(|h| h.iter().position(|c| *c == doc.target));
    let targets: Option<Vec<f64>> = target.map(|t| table.rows.iter().map(|row| row[t]).collect());
    let mut inputs = table.into_inputs(target)?;
    if doc.preprocessing == Preprocessing::SpectrumNormalize {
        inputs = normalize_spectra(&inputs)?;
    }
    if let Some(labels) = &doc.input_labels {
        if inputs.n_variables() != labels.len() {
            return Err(CliError::Data(format!(
                "model reads {} variables, input has {}",
                labels.len(),
                inputs.n_variables()
            )));
        }
    }
    let predictions = doc.pipeline.predict_rows(inputs.x())?;
    let out = a.out.clone().unwrap_or_else(|| a.model.with_file_name("predictions.csv"));
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", out.display()));
    let mut w = csv::Writer::from_path(&out).map_err(err)?;
    match &targets {
        Some(_) => w.write_record(["prediction", doc.target.as_str()]).map_err(err)?,
        None => w.write_record(["prediction"]).map_err(err)?,
    }
    for (i, p) in predictions.iter().enumerate() {
        match &targets {
            Some(t) => w.write_record([p.to_string(), t[i].to_string()]).map_err(err)?,
            None => w.write_record([p.to_string()]).map_err(err)?,
        }
    }
    w.flush().map_err(|e| CliError::io(&out, e))?;
    eprintln!("wrote {} predictions to {}", predictions.len(), out.display());
    Ok(out)
}

/// Converts the statlib archive text into `tecator.csv` and
/// `tecator_split.json` in `dir`.
pub fn install_tecator(text: &str, dir: &Path) -> CliResult<()> {
    let (x, y) = io::parse_statlib_tecator(text)?;
    create_dir(dir)?;
    io::write_csv(&dir.join("tecator.csv"), &io::tecator_labels(), "fat", &x, &y)?;
    let split = SplitSpec::leading(io::TECATOR_TRAIN, io::TECATOR_USED)?;
    io::write_split(&dir.join("tecator_split.json"), &split)
}

pub fn cmd_fetch(a: &FetchArgs) -> CliResult<PathBuf> {
    let dir = a.data_dir.clone().unwrap_or_else(|| data_dir(&ExperimentConfig::default()));
    let text = match &a.from {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => {
            eprintln!("fetching {}", a.url);
            ureq::get(&a.url)
                .call()
                .map_err(|e| CliError::Data(format!("{}: {e}", a.url)))?
                .into_string()
                .map_err(|e| CliError::Data(format!("{}: {e}", a.url)))?
        }
    };
    install_tecator(&text, &dir)?;
    eprintln!("wrote {}", dir.join("tecator.csv").display());
    Ok(dir)
}
