use std::io::Write;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::error::CliError;

/// Rows for the optional CSV hand-off.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct Outcome {
    /// Effective parameters after defaults.
    pub config: Value,
    pub results: Value,
    pub table: Table,
}

/// JSON numbers cannot hold infinities; they are spelled out.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn envelope(command: &str, outcome: &Outcome, elapsed: Option<Duration>) -> Value {
    let mut report = json!({
        "command": command,
        "config": outcome.config,
        "results": outcome.results,
        "versions": {
            "germinate": env!("CARGO_PKG_VERSION"),
            "schema": 1,
        },
    });
    if let Some(elapsed) = elapsed {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        report["timestamp"] = json!(now);
        report["elapsed_ms"] = json!(elapsed.as_secs_f64() * 1e3);
    }
    report
}

pub fn write_report(report: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::invalid(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
