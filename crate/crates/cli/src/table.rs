//! Result tables written as CSV with a provenance header, plus a JSON summary
//! of column aggregates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

pub const TOOL_VERSION: &str = concat!("plateau ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip every double.
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) if x.is_finite() => json!(x),
            Cell::Real(x) => json!(x.to_string()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub config_hash: String,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str], config_hash: &str) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            config_hash: config_hash.to_string(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn reals(&self, name: &str) -> Vec<f64> {
        self.column(name)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|c| match c {
                Cell::Real(x) => Some(*x),
                Cell::Int(i) => Some(*i as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# table={} config_hash={} tool={}", self.name, self.config_hash, TOOL_VERSION);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Per-column min, max and mean of the numeric columns.
    pub fn aggregates(&self) -> Value {
        let mut out = serde_json::Map::new();
        for (k, name) in self.columns.iter().enumerate() {
            let xs: Vec<f64> = self
                .rows
                .iter()
                .filter_map(|r| match &r[k] {
                    Cell::Real(x) => Some(*x),
                    Cell::Int(i) => Some(*i as f64),
                    Cell::Text(_) => None,
                })
                .collect();
            if xs.is_empty() || xs.len() != self.rows.len() {
                continue;
            }
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            out.insert(
                name.clone(),
                json!({"min": Cell::Real(min).json(), "max": Cell::Real(max).json(), "mean": Cell::Real(mean).json()}),
            );
        }
        Value::Object(out)
    }

    pub fn rows_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: serde_json::Map<String, Value> =
                    self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub tables: Vec<ResultTable>,
    /// Scalar findings, mirrored into the JSON summary.
    pub scalars: BTreeMap<String, Value>,
}

impl RunOutput {
    pub fn new(kind: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            tables: Vec::new(),
            scalars: BTreeMap::new(),
        }
    }

    pub fn scalar(&mut self, key: &str, value: impl Into<Value>) {
        self.scalars.insert(key.to_string(), value.into());
    }

    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self) -> Value {
        let tables: serde_json::Map<String, Value> = self
            .tables
            .iter()
            .map(|t| {
                (
                    t.name.clone(),
                    json!({"rows": t.rows.len(), "columns": t.columns, "aggregates": t.aggregates()}),
                )
            })
            .collect();
        json!({
            "experiment": self.kind,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool": TOOL_VERSION,
            "tables": tables,
            "scalars": self.scalars,
        })
    }

    /// Writes `<name>.csv` per table and `summary.json`, each through a
    /// temporary file and a rename.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            write_atomic(&dir.join(format!("{}.csv", t.name)), t.to_csv().as_bytes())?;
        }
        let json = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        write_atomic(&dir.join("summary.json"), json.as_bytes())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
