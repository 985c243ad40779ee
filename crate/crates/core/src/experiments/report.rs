use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric table; also written as the scenario's CSV artifact.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Header row then one line per row; values in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    /// All checks held.
    pub pass: bool,
    /// Effective configuration the scenario ran with.
    pub config: Option<serde_json::Value>,
    /// Scenario-specific inputs beyond the configuration (derived or tuned values).
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub outputs: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub table: Option<Table>,
    pub artifacts: Vec<String>,
}

impl ScenarioReport {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Default::default() }
    }

    pub fn output(&mut self, key: &str, value: f64) -> &mut Self {
        self.outputs.insert(key.to_string(), value);
        self
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.inputs.insert(key.to_string(), v);
        self
    }

    pub fn check(&mut self, key: &str, ok: bool) -> &mut Self {
        self.checks.insert(key.to_string(), ok);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.name, self.seed)
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in `dir` and one rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(path)
}

/// Writes `{name}_{seed}.json` and, when there is a table, `{name}_{seed}.csv` into `dir`.
/// Each file appears in one rename, so readers never see a partial file.
pub fn write_report(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = report.file_stem();
    let mut report = report.clone();
    let mut written = Vec::new();
    if let Some(table) = &report.table {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        let name = format!("{stem}.csv");
        written.push(write_atomic(dir, &name, &buf)?);
        if !report.artifacts.contains(&name) {
            report.artifacts.push(name);
        }
    }
    let json = serde_json::to_string_pretty(&report)?;
    written.insert(0, write_atomic(dir, &format!("{stem}.json"), json.as_bytes())?);
    Ok(written)
}
