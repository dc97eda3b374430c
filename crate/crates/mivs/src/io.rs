//! CSV datasets, split files and the statlib Tecator archive.

use std::fs;
use std::path::Path;

use mivs_core::{Dataset, SplitSpec};

use crate::error::{CliError, CliResult};

/// Which CSV column holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    /// Zero-based.
    Index(usize),
    Last,
}

impl TargetColumn {
    /// A bare integer is an index, anything else a header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.to_string()),
        }
    }
}

/// A loaded CSV table before the target is split off.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_cell(cell: &str, line: usize, column: usize) -> CliResult<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        CliError::Data(format!("line {line}, column {}: cannot parse {cell:?} as a number", column + 1))
    })?;
    if !v.is_finite() {
        return Err(CliError::Data(format!("line {line}, column {}: non-finite value {cell:?}", column + 1)));
    }
    Ok(v)
}

/// Reads a numeric CSV. The first row is a header when any of its cells is
/// not a number. Any unparsable cell aborts the load.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        if i == 0 && record.iter().any(|c| c.trim().parse::<f64>().is_err()) {
            header = Some(record.iter().map(|c| c.trim().to_string()).collect());
            continue;
        }
        let row = record.iter().enumerate().map(|(j, c)| parse_cell(c, i + 1, j)).collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    Ok(Table { header, rows })
}

impl Table {
    pub fn n_columns(&self) -> usize {
        self.rows[0].len()
    }

    pub fn column_index(&self, target: &TargetColumn) -> CliResult<usize> {
        let n = self.n_columns();
        match target {
            TargetColumn::Last => Ok(n - 1),
            TargetColumn::Index(i) if *i < n => Ok(*i),
            TargetColumn::Index(i) => {
                Err(CliError::Data(format!("target column {i} missing: the file has {n} columns")))
            }
            TargetColumn::Name(name) => self
                .header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| CliError::Data(format!("target column {name:?} missing"))),
        }
    }

    /// Splits off the target column.
    pub fn into_dataset(self, target: &TargetColumn) -> CliResult<Dataset> {
        let t = self.column_index(target)?;
        let n = self.n_columns();
        let mut x = Vec::with_capacity(self.rows.len());
        let mut y = Vec::with_capacity(self.rows.len());
        for (i, mut row) in self.rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(CliError::Data(format!("data row {}: expected {n} columns, found {}", i + 1, row.len())));
            }
            y.push(row.remove(t));
            x.push(row);
        }
        let labels = self.header.map(|mut h| {
            h.remove(t);
            h
        });
        Ok(Dataset::from_rows(&x, y, labels)?)
    }

    /// All columns as inputs (no target), with a zero placeholder target.
    pub fn into_inputs(self, drop: Option<usize>) -> CliResult<Dataset> {
        let mut header = self.header;
        let rows: Vec<Vec<f64>> = self
            .rows
            .into_iter()
            .map(|mut r| {
                if let Some(d) = drop {
                    r.remove(d);
                }
                r
            })
            .collect();
        if let (Some(h), Some(d)) = (header.as_mut(), drop) {
            h.remove(d);
        }
        let n = rows.len();
        Ok(Dataset::from_rows(&rows, vec![0.0; n], header)?)
    }
}

pub fn load_csv(path: &Path, target: &TargetColumn) -> CliResult<Dataset> {
    read_table(path)?.into_dataset(target)
}

pub fn read_split(path: &Path, n_rows: usize) -> CliResult<SplitSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let split: SplitSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    split.validate(n_rows)?;
    Ok(split)
}

pub fn write_split(path: &Path, split: &SplitSpec) -> CliResult<()> {
    let text = serde_json::to_string(split).expect("split serializes");
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Numbers per sample in the statlib archive: 100 absorbances, 22 principal
/// components, then moisture, fat and protein.
pub const TECATOR_VALUES_PER_SAMPLE: usize = 125;
/// Training and monitoring samples, then test samples; the 25 extra
/// samples that follow are not used.
pub const TECATOR_TRAIN: usize = 172;
pub const TECATOR_USED: usize = 215;

/// Absorbance rows and fat values from the statlib `tecator` file.
///
/// The file starts with a free-text description; the data are the lines made
/// only of numbers.
pub fn parse_statlib_tecator(text: &str) -> CliResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut values = Vec::new();
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        if let Ok(p) = parsed {
            values.extend(p);
        }
    }
    if values.len() % TECATOR_VALUES_PER_SAMPLE != 0 || values.len() < TECATOR_USED * TECATOR_VALUES_PER_SAMPLE {
        return Err(CliError::Data(format!(
            "expected at least {TECATOR_USED} samples of {TECATOR_VALUES_PER_SAMPLE} numbers, found {} numbers",
            values.len()
        )));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for sample in values.chunks(TECATOR_VALUES_PER_SAMPLE).take(TECATOR_USED) {
        x.push(sample[..100].to_vec());
        y.push(sample[123]);
    }
    Ok((x, y))
}

pub fn tecator_labels() -> Vec<String> {
    (0..100).map(|i| (850 + 2 * i).to_string()).collect()
}

/// Writes inputs and target as a CSV with a header row.
pub fn write_csv(path: &Path, labels: &[String], target: &str, x: &[Vec<f64>], y: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut header: Vec<&str> = labels.iter().map(String::as_str).collect();
    header.push(target);
    w.write_record(&header).map_err(err)?;
    for (row, t) in x.iter().zip(y) {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(t.to_string());
        w.write_record(&cells).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
