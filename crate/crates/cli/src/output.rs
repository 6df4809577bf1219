//! Tables, artifacts and the run manifest.
//!
//! A run builds every artifact in memory first; nothing touches the output
//! directory until the whole computation has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

/// Rows with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> anyhow::Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv_field))?;
                }
                Ok(w.into_inner().map_err(|e| e.into_error())?)
            }
            Format::Jsonl => {
                let mut out = Vec::new();
                for row in &self.rows {
                    // keys are written in column order, not sorted
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{}:{}", json!(c), v.json()))
                        .collect();
                    out.extend_from_slice(format!("{{{}}}\n", fields.join(",")).as_bytes());
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub description: &'static str,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn table(stem: &str, description: &'static str, table: &Table, format: Format) -> anyhow::Result<Self> {
        Ok(Self { name: format!("{stem}.{}", format.extension()), description, bytes: table.render(format)? })
    }

    pub fn json(name: &str, description: &'static str, value: &Value) -> anyhow::Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self { name: name.to_string(), description, bytes })
    }
}

/// Everything a command produced, before it is written.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub derived: Map<String, Value>,
    pub notes: Vec<String>,
}

/// RFC 3339 time, pinned by `SOURCE_DATE_EPOCH` when it is set.
pub fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    pinned.unwrap_or_else(chrono::Utc::now).to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the artifacts and a manifest describing them; returns the
/// manifest path.
pub fn write_run(
    out_dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    output: &RunOutput,
    started_at: &str,
) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut listing = Vec::new();
    for a in &output.artifacts {
        let path = out_dir.join(&a.name);
        fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        listing.push(json!({
            "path": a.name,
            "description": a.description,
            "bytes": a.bytes.len(),
            "sha256": sha256_hex(&a.bytes),
        }));
    }
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": ebqi_core::VERSION,
        "constants_version": ebqi_core::couplings::CONSTANTS_VERSION,
        "config": config,
        "started_at": started_at,
        "finished_at": timestamp(),
        "derived": output.derived,
        "notes": output.notes,
        "outputs": listing,
    });
    let path = out_dir.join(MANIFEST_NAME);
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
