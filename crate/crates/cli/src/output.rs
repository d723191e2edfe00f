//! Artifact emission. Nothing written here depends on time or thread
//! scheduling, so identical configs give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    pub columns: Vec<String>,
    pub description: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    scenario: &'a str,
    pass: bool,
    config: &'a BTreeMap<String, String>,
    checks: &'a [Check],
    values: &'a BTreeMap<String, f64>,
    artifacts: &'a [Artifact],
}

/// Formats a float so that it round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Collects a subcommand's artifacts, checks and headline numbers.
pub struct RunOutput {
    dir: PathBuf,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
    artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.into(),
            checks: vec![],
            values: BTreeMap::new(),
            artifacts: vec![],
        })
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_csv(&mut self, file: &str, description: &str, table: Table) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(vec![]);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().context("flushing CSV buffer")?;
        let path = self.dir.join(file);
        fs::write(&path, &bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.push(Artifact {
            file: file.into(),
            sha256: sha256_hex(&bytes),
            rows: table.rows.len(),
            columns: table.columns,
            description: description.into(),
        });
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        scenario: &str,
        config: &BTreeMap<String, String>,
    ) -> Result<bool> {
        let pass = self.pass();
        let manifest = Manifest {
            command,
            scenario,
            pass,
            config,
            checks: &self.checks,
            values: &self.values,
            artifacts: &self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(pass)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
