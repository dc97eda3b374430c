//! Experiment configuration: a JSON document whose fields command-line
//! flags override, resolved against per-dataset defaults.

use std::path::{Path, PathBuf};

use mivs_core::dataset::normalize_spectra;
use mivs_core::eval::{CvOptions, GridConfig};
use mivs_core::methods::MethodConfig;
use mivs_core::mi::{MiConfig, MiScaling};
use mivs_core::selector::{Option2Config, MAX_EXHAUSTIVE};
use mivs_core::{Dataset, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{self, TargetColumn};

/// Environment variable naming the data directory.
pub const DATA_DIR_ENV: &str = "MIVS_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocessing {
    None,
    /// Standardize each spectrum and append its mean and standard deviation.
    SpectrumNormalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset name (looked up as `<data_dir>/<name>.csv`) or a CSV path.
    pub dataset: String,
    pub data_dir: Option<PathBuf>,
    /// Target column name or zero-based index; defaults per dataset.
    pub target: Option<String>,
    /// Split file; defaults to `<name>_split.json` next to the CSV.
    pub split: Option<PathBuf>,
    /// Without a split file: the first `n_train` rows train.
    pub n_train: Option<usize>,
    pub preprocessing: Option<Preprocessing>,
    pub method: Option<u8>,
    pub k: usize,
    pub p: usize,
    pub folds: Option<usize>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub trim_validation: bool,
    pub trim_train: bool,
    pub trim_test: bool,
    pub mi_scaling: MiScaling,
    pub iterate_backward: bool,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "tecator".into(),
            data_dir: None,
            target: None,
            split: None,
            n_train: None,
            preprocessing: None,
            method: None,
            k: mivs_core::mi::DEFAULT_K,
            p: 16,
            folds: None,
            seed: 0,
            workers: None,
            out: PathBuf::from("out"),
            trim_validation: true,
            trim_train: false,
            trim_test: false,
            mi_scaling: MiScaling::Target,
            iterate_backward: false,
            grid: GridConfig::default(),
        }
    }
}

/// Defaults that depend on the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub preprocessing: Preprocessing,
    pub folds: usize,
    pub target: TargetColumn,
}

pub fn profile(name: &str) -> Profile {
    match name {
        "tecator" => Profile {
            preprocessing: Preprocessing::SpectrumNormalize,
            folds: 4,
            target: TargetColumn::Name("fat".into()),
        },
        "juice" => Profile { preprocessing: Preprocessing::None, folds: 3, target: TargetColumn::Last },
        _ => Profile { preprocessing: Preprocessing::None, folds: 4, target: TargetColumn::Last },
    }
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn data_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Everything a command needs after reading the data.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub csv: PathBuf,
    pub preprocessing: Preprocessing,
    pub folds: usize,
    pub target_label: String,
    pub train: Dataset,
    pub test: Dataset,
    pub split: SplitSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.k == 0 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if self.p == 0 || self.p > MAX_EXHAUSTIVE {
            return Err(CliError::Config(format!("P must be in 1..={MAX_EXHAUSTIVE}, got {}", self.p)));
        }
        if let Some(m) = self.method {
            if !(1..=mivs_core::methods::METHOD_COUNT).contains(&m) {
                return Err(CliError::Config(format!("method must be in 1..=13, got {m}")));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Dataset name and CSV path.
    pub fn locate(&self) -> (String, PathBuf) {
        let as_path = Path::new(&self.dataset);
        if as_path.extension().is_some_and(|e| e == "csv") {
            let name = as_path.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
            (name, as_path.to_path_buf())
        } else {
            (self.dataset.clone(), data_dir(self).join(format!("{}.csv", self.dataset)))
        }
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        self.validate()?;
        let (name, csv) = self.locate();
        let profile = profile(&name);
        let target = self.target.as_deref().map_or(profile.target.clone(), TargetColumn::parse);
        let table = io::read_table(&csv)?;
        let t = table.column_index(&target)?;
        let target_label = table.header.as_ref().map_or_else(|| format!("column {t}"), |h| h[t].clone());
        let mut data = table.into_dataset(&target)?;
        let preprocessing = self.preprocessing.unwrap_or(profile.preprocessing);
        if preprocessing == Preprocessing::SpectrumNormalize {
            data = normalize_spectra(&data)?;
        }
        let split = match (&self.split, self.n_train) {
            (Some(path), _) => io::read_split(path, data.n_samples())?,
            (None, Some(n)) => SplitSpec::leading(n, data.n_samples())?,
            (None, None) => {
                let default = csv.with_file_name(format!("{name}_split.json"));
                if !default.exists() {
                    return Err(CliError::Config(format!(
                        "no split: pass --split or --n-train, or provide {}",
                        default.display()
                    )));
                }
                io::read_split(&default, data.n_samples())?
            }
        };
        let (train, test) = split.apply(&data)?;
        Ok(Resolved {
            name,
            csv,
            preprocessing,
            folds: self.folds.unwrap_or(profile.folds),
            target_label,
            train,
            test,
            split,
        })
    }

    pub fn method_config(&self, folds: usize) -> MethodConfig {
        MethodConfig {
            mi: MiConfig { k: self.k, seed: self.seed, scaling: self.mi_scaling, ..MiConfig::default() },
            p: self.p,
            option2: Option2Config { iterate_backward: self.iterate_backward },
            cv: CvOptions {
                folds,
                seed: self.seed,
                trim_validation: self.trim_validation,
                trim_train: self.trim_train,
                trim_test: self.trim_test,
            },
            grid: self.grid.clone(),
            model_seed: self.seed,
        }
    }
}
