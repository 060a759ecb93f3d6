//! `headroom`: per-track best systems under the reported metrics, plus the
//! cross-track distribution of those best values.

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use asl_core::insight::{self, BestValueDistribution, HeadroomRow, TrackScores};
use asl_core::metrics::Metric;

use crate::config::{EvalOptions, InputArgs, OutputArgs, OutputFormat};
use crate::output::{self, format_edge, format_value, TsvTable, ValueKind};
use crate::pipeline::{self, CliError};

#[derive(Debug, Args, Default)]
pub struct HeadroomCmd {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub options: EvalOptions,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
pub struct HeadroomReport {
    pub rows: Vec<HeadroomRow>,
    pub distributions: Vec<BestValueDistribution>,
    pub warnings: Vec<String>,
}

fn headroom_metrics(options: &EvalOptions) -> Result<Vec<Metric>, CliError> {
    if options.metrics.is_empty() {
        return Ok(vec![
            Metric::PrecisionAtK(20),
            Metric::AslAtG(10),
            Metric::Map,
            Metric::Asl,
        ]);
    }
    options
        .metric_selection()
        .map_err(|err| CliError::Input(anyhow!("{err:#}")))
}

pub fn run(cmd: &HeadroomCmd) -> Result<HeadroomReport, CliError> {
    let metrics = headroom_metrics(&cmd.options)?;
    // Tracks follow the usual inclusion rule unless overridden.
    let discover = cmd.options.discover_options(5);
    let (bundles, mut warnings) = pipeline::load_tracks(&cmd.input, &discover)?;
    let tracks = pipeline::evaluate_tracks(bundles);
    let mut scored = Vec::with_capacity(tracks.len());
    for track in &tracks {
        warnings.extend(track.warnings.iter().cloned());
        scored.push(TrackScores {
            track_id: track.track_id.clone(),
            systems: pipeline::score_track(track, &metrics)?,
        });
    }
    let (rows, distributions) = insight::headroom_table(&scored, &metrics)?;
    Ok(HeadroomReport {
        rows,
        distributions,
        warnings,
    })
}

pub fn render_tsv(report: &HeadroomReport, cmd: &HeadroomCmd) -> String {
    let mode = cmd.output.rounding;
    let mut table = TsvTable::new(
        "headroom",
        &[
            "row_type", "track", "metric", "system", "value", "lo", "hi", "count",
        ],
    );
    for row in &report.rows {
        for entry in &row.entries {
            table.push(vec![
                "track".to_owned(),
                row.track_id.clone(),
                entry.metric.to_string(),
                entry.best_system.clone(),
                format_value(entry.best_value, ValueKind::for_metric(entry.metric), mode),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
    }
    for dist in &report.distributions {
        for (i, count) in dist.counts.iter().enumerate() {
            table.push(vec![
                "bucket".to_owned(),
                String::new(),
                dist.metric.to_string(),
                String::new(),
                String::new(),
                format_edge(dist.edges[i]),
                format_edge(dist.edges[i + 1]),
                count.to_string(),
            ]);
        }
    }
    table.render()
}

pub fn execute(cmd: &HeadroomCmd) -> Result<(), CliError> {
    let report = run(cmd)?;
    output::emit_warnings(&report.warnings);
    let rendered = match cmd.output.format {
        OutputFormat::Tsv => render_tsv(&report, cmd),
        OutputFormat::Json => output::to_json("headroom", &report)?,
    };
    output::emit(&rendered, cmd.output.output.as_deref())?;
    Ok(())
}
