//! CSV result tables with a leading `#`-prefixed JSON metadata line.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Rows of labelled numbers. Every row is prefixed with the config fingerprint
/// when written.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Command-specific summary values, written into the metadata line.
    pub summary: Map<String, Value>,
    pub verdict: Verdict,
    pub mesh_fingerprint: String,
}

impl ResultTable {
    pub fn new(columns: &[&str], mesh_fingerprint: &str) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
            verdict: Verdict::Pass,
            mesh_fingerprint: mesh_fingerprint.to_string(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn metadata(&self, config: &RunConfig, command: &str) -> Value {
        let mut meta = Map::new();
        meta.insert("command".into(), command.into());
        meta.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
        meta.insert("config_fingerprint".into(), config.fingerprint().into());
        meta.insert("mesh_fingerprint".into(), self.mesh_fingerprint.clone().into());
        meta.insert("code_version".into(), env!("CARGO_PKG_VERSION").into());
        meta.insert("verdict".into(), self.verdict.as_str().into());
        meta.insert("summary".into(), Value::Object(self.summary.clone()));
        Value::Object(meta)
    }

    pub fn write<W: Write>(&self, config: &RunConfig, command: &str, mut out: W) -> Result<(), CliError> {
        writeln!(out, "# {}", self.metadata(config, command)).map_err(io)?;
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let fp = config.fingerprint();
        csv.write_record(std::iter::once("config_fp").chain(self.columns.iter().map(String::as_str)))
            .map_err(io)?;
        for row in &self.rows {
            csv.write_record(std::iter::once(fp.as_str()).chain(row.iter().map(String::as_str)))
                .map_err(io)?;
        }
        csv.flush().map_err(io)?;
        Ok(())
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Shortest round-trip decimal form; deterministic across runs.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Parse the metadata line of a written table.
pub fn read_metadata(text: &str) -> Option<Value> {
    let first = text.lines().next()?;
    serde_json::from_str(first.strip_prefix("# ")?).ok()
}
