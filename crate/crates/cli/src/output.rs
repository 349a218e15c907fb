//! Table and summary emission.
//!
//! Every command writes its tabular data through one [`Emitter`], so the
//! format switch and the float-precision policy live in a single place.
//! Summaries are always JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::OutputFormat;
use crate::error::Result;

/// One table cell; `Empty` renders as an empty CSV field or a JSON null.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Emitter {
    pub format: OutputFormat,
    /// Significant digits for CSV floats (scientific notation); `None` means
    /// the shortest representation that parses back to the same value.
    pub precision: Option<usize>,
}

impl Emitter {
    pub fn float(&self, v: f64) -> String {
        match self.precision {
            Some(p) => format!("{v:.p$e}"),
            None => format!("{v}"),
        }
    }

    fn csv_cell(&self, cell: &Cell) -> String {
        match cell {
            Cell::Float(v) => self.float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => quote_csv(s),
            Cell::Empty => String::new(),
        }
    }

    fn json_cell(cell: &Cell) -> Value {
        match cell {
            Cell::Float(v) => Value::from(*v),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }

    /// Writes `<stem>.csv` or `<stem>.json` under `dir` and returns the path.
    ///
    /// CSV files carry a header row; the JSON variant is an array of objects
    /// keyed by the column names.
    pub fn write_table(
        &self,
        dir: &Path,
        stem: &str,
        columns: &[&str],
        rows: &[Vec<Cell>],
    ) -> Result<PathBuf> {
        for row in rows {
            debug_assert_eq!(row.len(), columns.len(), "ragged table row");
        }
        let (path, body) = match self.format {
            OutputFormat::Csv => {
                let mut text = columns.join(",");
                text.push('\n');
                for row in rows {
                    let line: Vec<String> = row.iter().map(|c| self.csv_cell(c)).collect();
                    text.push_str(&line.join(","));
                    text.push('\n');
                }
                (dir.join(format!("{stem}.csv")), text)
            }
            OutputFormat::Json => {
                let objects: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        columns
                            .iter()
                            .map(|c| c.to_string())
                            .zip(row.iter().map(Self::json_cell))
                            .collect::<serde_json::Map<_, _>>()
                            .into()
                    })
                    .collect();
                let mut text = serde_json::to_string_pretty(&objects).expect("table serializes");
                text.push('\n');
                (dir.join(format!("{stem}.json")), text)
            }
        };
        fs::write(&path, body)?;
        Ok(path)
    }
}

/// Writes `<stem>.json` under `dir` and returns the path.
pub fn write_summary(dir: &Path, stem: &str, summary: &Value) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Quotes a CSV field when it contains a separator, quote or line break.
fn quote_csv(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
