//! `eval`: score every run of a track under the selected metrics.

use clap::Args;
use serde::Serialize;

use asl_core::metrics::{Metric, SystemScores};

use crate::config::{EvalOptions, InputArgs, OutputArgs};
use crate::output::{self, format_value, TsvTable, ValueKind};
use crate::pipeline::{self, CliError};

#[derive(Debug, Args, Default)]
pub struct EvalCmd {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub options: EvalOptions,

    /// Also emit one row per (system, metric, query)
    #[arg(long)]
    pub per_query: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub track_id: String,
    pub systems: Vec<SystemScores>,
    pub warnings: Vec<String>,
}

pub fn run(cmd: &EvalCmd) -> Result<EvalReport, CliError> {
    let metrics = cmd.options.metric_selection()?;
    // A lone run directory is a valid input for plain scoring.
    let discover = cmd.options.discover_options(1);
    let (track, mut warnings) = pipeline::load_single_track(&cmd.input, &discover)?;
    warnings.extend(track.warnings.iter().cloned());
    let systems = pipeline::score_track(&track, &metrics)?;
    Ok(EvalReport {
        track_id: track.track_id.clone(),
        systems,
        warnings,
    })
}

pub fn render_tsv(report: &EvalReport, cmd: &EvalCmd) -> String {
    let mode = cmd.output.rounding;
    let mut table = TsvTable::new("eval", &["system", "metric", "query", "value"]);
    for system in &report.systems {
        for (metric, value) in &system.scores {
            let kind = ValueKind::for_metric(*metric);
            table.push(vec![
                system.system_id.clone(),
                metric.to_string(),
                "*".to_owned(),
                format_value(value.aggregate, kind, mode),
            ]);
            if cmd.per_query {
                for (query, per_query) in &value.per_query {
                    table.push(vec![
                        system.system_id.clone(),
                        metric.to_string(),
                        query.clone(),
                        format_value(*per_query, kind, mode),
                    ]);
                }
            }
        }
        for (metric, reason) in &system.degenerate {
            table.push(vec![
                system.system_id.clone(),
                metric.to_string(),
                "*".to_owned(),
                format!("degenerate: {reason}"),
            ]);
        }
    }
    table.render()
}

pub fn execute(cmd: &EvalCmd) -> Result<(), CliError> {
    let report = run(cmd)?;
    output::emit_warnings(&report.warnings);
    let rendered = match cmd.output.format {
        crate::config::OutputFormat::Tsv => render_tsv(&report, cmd),
        crate::config::OutputFormat::Json => output::to_json("eval", &report)?,
    };
    output::emit(&rendered, cmd.output.output.as_deref())?;
    Ok(())
}

/// Scores from a report, for tests and sibling commands.
pub fn system_metric(report: &EvalReport, system: &str, metric: Metric) -> Option<f64> {
    report
        .systems
        .iter()
        .find(|s| s.system_id == system)
        .and_then(|s| s.get(metric))
        .map(|v| v.aggregate)
}
