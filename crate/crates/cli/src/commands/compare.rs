//! `compare`: baseline-vs-candidate metric table with relative reduction
//! in error, either from two systems of a track or from literal values.

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use asl_core::metrics::{rrie, Metric};

use crate::config::{EvalOptions, InputArgs, OutputArgs, OutputFormat};
use crate::output::{self, format_value, TsvTable, ValueKind};
use crate::pipeline::{self, CliError};

#[derive(Debug, Args, Default)]
pub struct CompareCmd {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub options: EvalOptions,

    /// Baseline system id (track mode)
    #[arg(long, value_name = "SYSTEM")]
    pub baseline: Option<String>,

    /// Candidate system id (track mode)
    #[arg(long, value_name = "SYSTEM")]
    pub candidate: Option<String>,

    /// Literal comparison `METRIC=BASELINE,CANDIDATE` (repeatable); skips
    /// track evaluation entirely
    #[arg(long = "pair", value_name = "SPEC")]
    pub pairs: Vec<String>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub metric: Metric,
    pub baseline: f64,
    pub candidate: f64,
    pub rrie: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub baseline_id: String,
    pub candidate_id: String,
    pub rows: Vec<CompareRow>,
    pub warnings: Vec<String>,
}

fn parse_pair(spec: &str) -> Result<(Metric, f64, f64), CliError> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Input(anyhow!("--pair wants METRIC=BASE,CANDIDATE: {spec:?}")))?;
    let metric: Metric = name
        .parse()
        .map_err(|err| CliError::Input(anyhow!("--pair {spec:?}: {err}")))?;
    let (base, cand) = values
        .split_once(',')
        .ok_or_else(|| CliError::Input(anyhow!("--pair wants two comma-separated values: {spec:?}")))?;
    let base: f64 = base
        .trim()
        .parse()
        .map_err(|_| CliError::Input(anyhow!("bad baseline value in {spec:?}")))?;
    let cand: f64 = cand
        .trim()
        .parse()
        .map_err(|_| CliError::Input(anyhow!("bad candidate value in {spec:?}")))?;
    Ok((metric, base, cand))
}

pub fn run(cmd: &CompareCmd) -> Result<CompareReport, CliError> {
    if !cmd.pairs.is_empty() {
        let mut rows = Vec::new();
        for spec in &cmd.pairs {
            let (metric, baseline, candidate) = parse_pair(spec)?;
            let reduction = rrie(baseline, candidate, metric.family())?;
            rows.push(CompareRow {
                metric,
                baseline,
                candidate,
                rrie: reduction,
            });
        }
        return Ok(CompareReport {
            baseline_id: "baseline".to_owned(),
            candidate_id: "candidate".to_owned(),
            rows,
            warnings: Vec::new(),
        });
    }

    let baseline_id = cmd
        .baseline
        .clone()
        .ok_or_else(|| CliError::Input(anyhow!("--baseline is required in track mode")))?;
    let candidate_id = cmd
        .candidate
        .clone()
        .ok_or_else(|| CliError::Input(anyhow!("--candidate is required in track mode")))?;
    let metrics = cmd.options.metric_selection()?;
    let discover = cmd.options.discover_options(1);
    let (track, mut warnings) = pipeline::load_single_track(&cmd.input, &discover)?;
    warnings.extend(track.warnings.iter().cloned());
    let scores = pipeline::score_track(&track, &metrics)?;
    let lookup = |id: &str| {
        scores
            .iter()
            .find(|s| s.system_id == id)
            .ok_or_else(|| CliError::Input(anyhow!("system {id:?} not found in track")))
    };
    let base_scores = lookup(&baseline_id)?;
    let cand_scores = lookup(&candidate_id)?;
    let mut rows = Vec::new();
    for &metric in &metrics {
        let (Some(base), Some(cand)) = (base_scores.get(metric), cand_scores.get(metric)) else {
            warnings.push(format!("metric {metric} degenerate for one side; skipped"));
            continue;
        };
        let reduction = rrie(base.aggregate, cand.aggregate, metric.family())?;
        rows.push(CompareRow {
            metric,
            baseline: base.aggregate,
            candidate: cand.aggregate,
            rrie: reduction,
        });
    }
    Ok(CompareReport {
        baseline_id,
        candidate_id,
        rows,
        warnings,
    })
}

pub fn render_tsv(report: &CompareReport, cmd: &CompareCmd) -> String {
    let mode = cmd.output.rounding;
    let mut table = TsvTable::new("compare", &["metric", "baseline", "candidate", "rrie"]);
    for row in &report.rows {
        let kind = ValueKind::for_metric(row.metric);
        table.push(vec![
            row.metric.to_string(),
            format_value(row.baseline, kind, mode),
            format_value(row.candidate, kind, mode),
            format_value(row.rrie, ValueKind::Rrie, mode),
        ]);
    }
    table.render()
}

pub fn execute(cmd: &CompareCmd) -> Result<(), CliError> {
    let report = run(cmd)?;
    output::emit_warnings(&report.warnings);
    let rendered = match cmd.output.format {
        OutputFormat::Tsv => render_tsv(&report, cmd),
        OutputFormat::Json => output::to_json("compare", &report)?,
    };
    output::emit(&rendered, cmd.output.output.as_deref())?;
    Ok(())
}
