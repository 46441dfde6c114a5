//! Tabular output with a reproducibility header, written atomically.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Map, Value as Json};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn tag(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(u64),
    Float(f64),
    Text(String),
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_float(*x),
            Value::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Null => Json::Null,
            Value::Int(i) => json!(i),
            Value::Float(x) if x.is_finite() => json!(x),
            Value::Float(x) => json!(format_float(*x)),
            Value::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as u64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(x: Option<T>) -> Self {
        x.map_or(Value::Null, Into::into)
    }
}

/// Shortest round-trip representation, so files are byte-stable.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

/// Who wrote a file and how to regenerate it.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub command: String,
    pub seed: Option<u64>,
}

impl Envelope {
    pub fn new(command: String, seed: Option<u64>) -> Self {
        Self { command, seed }
    }

    fn comment_lines(&self) -> String {
        let mut s = format!("# misobc {}\n# command: misobc {}\n", crate::VERSION, self.command);
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s
    }

    pub fn json(&self) -> Json {
        json!({
            "tool": "misobc",
            "version": crate::VERSION,
            "command": format!("misobc {}", self.command),
            "seed": self.seed,
        })
    }
}

/// Rows of named cells. Columns keep the order given at construction;
/// columns that are empty in every row are dropped on output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Adds a row from `(column, value)` pairs; unknown columns panic since
    /// they are programming errors.
    pub fn push(&mut self, cells: Vec<(&'static str, Value)>) {
        let mut row = vec![Value::Null; self.columns.len()];
        for (name, v) in cells {
            let i = self
                .columns
                .iter()
                .position(|c| *c == name)
                .unwrap_or_else(|| panic!("unknown column {name}"));
            row[i] = v;
        }
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn live_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.rows.iter().any(|r| r[i] != Value::Null))
            .collect()
    }

    pub fn render(&self, format: Format, envelope: &Envelope) -> Result<Vec<u8>, CliError> {
        let live = self.live_columns();
        match format {
            Format::Csv => {
                let mut out = envelope.comment_lines().into_bytes();
                let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
                w.write_record(live.iter().map(|&i| self.columns[i]))?;
                for row in &self.rows {
                    w.write_record(live.iter().map(|&i| row[i].csv()))?;
                }
                out.extend(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?);
                Ok(out)
            }
            Format::Json => {
                let rows: Vec<Json> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Json> = live
                            .iter()
                            .map(|&i| (self.columns[i].to_owned(), row[i].json()))
                            .collect();
                        Json::Object(obj)
                    })
                    .collect();
                let doc = json!({ "header": envelope.json(), "rows": rows });
                let mut out = serde_json::to_vec_pretty(&doc)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so a failed run never leaves a partial file. `None` writes to stdout.
pub fn write_atomic(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut stdout = io::stdout().lock();
        stdout.write_all(bytes)?;
        return Ok(stdout.flush()?);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
