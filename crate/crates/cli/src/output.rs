//! Deterministic report rendering: versioned TSV tables and JSON envelopes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use asl_core::metrics::{Metric, MetricFamily};

use crate::config::RoundingMode;

/// What a number means, which decides its rendering in each rounding mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// Search lengths; whole ranks under paper rounding.
    SearchLength,
    /// Rates in [0, 1] (precision family).
    Rate,
    /// Relative reduction in error; whole percents under paper rounding.
    Rrie,
    /// Percent displacement values (already 0-100).
    Percent,
    /// Rank correlation in [-1, 1].
    Tau,
    /// Metric value ratios.
    Ratio,
    /// Dimensionless fractions and generic reals.
    Plain,
}

impl ValueKind {
    pub fn for_metric(metric: Metric) -> Self {
        match metric.family() {
            MetricFamily::SearchLength => ValueKind::SearchLength,
            MetricFamily::Precision => ValueKind::Rate,
        }
    }
}

/// Renders one value under the requested rounding mode.
pub fn format_value(value: f64, kind: ValueKind, mode: RoundingMode) -> String {
    match (mode, kind) {
        (RoundingMode::Precise, ValueKind::Rrie) => format!("{value:.4}"),
        // Whole-number renderings round half away from zero.
        (RoundingMode::Paper, ValueKind::Rrie) => format!("{:.0}%", (value * 100.0).round()),
        (RoundingMode::Paper, ValueKind::SearchLength) => format!("{:.0}", value.round()),
        (RoundingMode::Paper, ValueKind::Rate) => format!("{value:.3}"),
        (RoundingMode::Paper, ValueKind::Percent) => format!("{:.0}", value.round()),
        (RoundingMode::Paper, ValueKind::Tau) => format!("{value:.2}"),
        (RoundingMode::Paper, ValueKind::Ratio) => format!("{value:.3}"),
        _ => format!("{value:.4}"),
    }
}

/// A TSV table with a fixed header, preceded by a version comment line.
pub struct TsvTable {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl TsvTable {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# asl-eval {} v1", self.name).expect("string write");
        writeln!(out, "{}", self.header.join("\t")).expect("string write");
        for row in &self.rows {
            writeln!(out, "{}", row.join("\t")).expect("string write");
        }
        out
    }
}

/// Wraps a report body with its schema version for JSON output.
#[derive(Serialize)]
pub struct JsonEnvelope<T: Serialize> {
    pub schema_version: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_json<T: Serialize>(name: &str, body: &T) -> Result<String> {
    let envelope = JsonEnvelope {
        schema_version: format!("{name}.v1"),
        body,
    };
    let mut rendered = serde_json::to_string_pretty(&envelope).context("serializing report")?;
    rendered.push('\n');
    Ok(rendered)
}

/// Writes the rendered report to a file or standard output.
pub fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).context("writing report")?;
        }
    }
    Ok(())
}

/// Prints warnings to stderr; they never pollute report streams.
pub fn emit_warnings(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

/// Formats a bucket edge, keeping integers compact.
pub fn format_edge(value: f64) -> String {
    if value == f64::INFINITY {
        "inf".to_owned()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}
