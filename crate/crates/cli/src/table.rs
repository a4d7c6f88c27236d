use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::{usage, CliError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub label: String,
    pub unit: String,
}

impl Column {
    pub fn new(label: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { label: label.into(), unit: unit.into() }
    }
}

/// One experiment's output. Cells that could not be estimated are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl ExperimentTable {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the column count");
        self.rows.push(row);
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.label == label)
    }

    /// All values of one column, by label.
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.column_index(label)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(usage(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

/// Shortest round-trip text; scientific below `1e-3` in magnitude.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn write_table<W: Write>(table: &ExperimentTable, format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(table, out),
        Format::Json => write_json(table, out),
    }
}

fn write_csv<W: Write>(table: &ExperimentTable, mut out: W) -> Result<(), CliError> {
    writeln!(out, "# experiment={}", table.name)?;
    for (k, v) in &table.metadata {
        writeln!(out, "# {k}={v}")?;
    }
    let units: Vec<&str> = table.columns.iter().map(|c| c.unit.as_str()).collect();
    writeln!(out, "# units={}", units.join(","))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(table.columns.iter().map(|c| c.label.as_str())).map_err(csv_error)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::Io(e),
        other => CliError::Io(io::Error::other(format!("{other:?}"))),
    }
}

fn write_json<W: Write>(table: &ExperimentTable, mut out: W) -> Result<(), CliError> {
    // NaN has no JSON spelling; it is written as null
    serde_json::to_writer_pretty(&mut out, table).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

/// Writes to `dest`, or to standard output when `dest` is `None`.
pub fn emit(table: &ExperimentTable, format: Format, dest: Option<&Path>) -> Result<(), CliError> {
    match dest {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_table(table, format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_table(table, format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
