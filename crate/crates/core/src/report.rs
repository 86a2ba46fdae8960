//! Report records written by the command-line tool.
//!
//! A report is a metadata header, the thresholds that decide pass/fail, a
//! table, and the verdict. JSON carries all of it. CSV carries the table
//! with a header row, preceded by `#`-prefixed `key=value` metadata lines
//! (read with `comment='#'` in pandas or `comment(Some(b'#'))` in the csv
//! crate). The layout is described in `docs/report-format.md`.
//!
//! Nothing that depends on the machine or the worker count is recorded, so
//! reruns with the same configuration are byte-identical.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::rng::RNG_NAME;

pub const TOOL_NAME: &str = "permlimit";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub command: String,
    pub seed: u64,
    pub rng: String,
    /// Every configuration field, including defaults.
    pub config: Value,
}

impl Meta {
    pub fn new(command: impl Into<String>, seed: u64, config: Value) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema: SCHEMA_VERSION,
            command: command.into(),
            seed,
            rng: RNG_NAME.into(),
            config,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: Meta,
    pub thresholds: BTreeMap<String, Value>,
    pub table: Table,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new(meta: Meta, table: Table) -> Self {
        Self { meta, thresholds: BTreeMap::new(), table, passed: true, notes: Vec::new() }
    }

    pub fn threshold(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.thresholds.insert(name.into(), value.into());
        self
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialises");
        out.push('\n');
        out
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_json().as_bytes())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.meta;
        writeln!(w, "# tool={} version={} schema={}", m.tool, m.version, m.schema)?;
        writeln!(w, "# command={}", m.command)?;
        writeln!(w, "# seed={}", m.seed)?;
        writeln!(w, "# rng={}", m.rng)?;
        writeln!(w, "# config={}", m.config)?;
        for (k, v) in &self.thresholds {
            writeln!(w, "# threshold.{k}={v}")?;
        }
        for note in &self.notes {
            writeln!(w, "# note={note}")?;
        }
        writeln!(w, "# passed={}", self.passed)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.table.columns)?;
        for row in &self.table.rows {
            csv.write_record(row.iter().map(cell))?;
        }
        csv.flush()
    }
}
