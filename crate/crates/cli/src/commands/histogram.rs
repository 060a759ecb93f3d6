//! `histogram`: per-document search-length distributions for each system,
//! or the signed per-document delta distribution between two systems
//! (explicit, or best versus median under a ranking metric).

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use asl_core::insight::{
    self, geometric_edges, median_system, AslHistogram, DeltaHistogram, HistogramSpec,
};
use asl_core::metrics::{aggregate, Metric, SystemEval};

use crate::config::{EvalOptions, InputArgs, OutputArgs, OutputFormat};
use crate::output::{self, format_edge, TsvTable};
use crate::pipeline::{self, CliError, TrackEval};

#[derive(Debug, Args, Default)]
pub struct HistogramCmd {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub options: EvalOptions,

    /// Restrict to one system (default: every system in the track)
    #[arg(long, value_name = "SYSTEM")]
    pub system: Option<String>,

    /// First operand of a per-document delta histogram
    #[arg(long, value_name = "SYSTEM", requires = "delta_b")]
    pub delta_a: Option<String>,

    /// Second operand of a per-document delta histogram
    #[arg(long, value_name = "SYSTEM", requires = "delta_a")]
    pub delta_b: Option<String>,

    /// Delta histogram of the best versus the median system
    #[arg(long, conflicts_with_all = ["delta_a", "delta_b", "system"])]
    pub best_vs_median: bool,

    /// Metric ranking systems for --best-vs-median
    #[arg(long, default_value = "ASL", value_name = "METRIC")]
    pub rank_by: String,

    /// Comma-separated bucket edges (positive magnitudes in delta mode);
    /// default: base-2 geometric covering the data
    #[arg(long, value_name = "LIST")]
    pub edges: Option<String>,

    /// Bucket unretrieved documents by their fallback value instead of the
    /// trailing overflow bucket
    #[arg(long)]
    pub no_missing_overflow: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
pub struct HistogramReport {
    pub track_id: String,
    pub systems: Vec<SystemHistogram>,
    pub delta: Option<DeltaReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SystemHistogram {
    pub system_id: String,
    #[serde(flatten)]
    pub histogram: AslHistogram,
}

#[derive(Debug, Serialize)]
pub struct DeltaReport {
    pub system_a: String,
    pub system_b: String,
    #[serde(flatten)]
    pub histogram: DeltaHistogram,
}

fn parse_edges(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(anyhow!("bad edge {tok:?} in --edges")))
        })
        .collect()
}

fn find_system<'t>(track: &'t TrackEval, id: &str) -> Result<&'t SystemEval, CliError> {
    track
        .systems
        .iter()
        .find(|s| s.system_id == id)
        .ok_or_else(|| CliError::Input(anyhow!("system {id:?} not found in track")))
}

fn delta_operands(cmd: &HistogramCmd, track: &TrackEval) -> Result<Option<(String, String)>, CliError> {
    if let (Some(a), Some(b)) = (&cmd.delta_a, &cmd.delta_b) {
        return Ok(Some((a.clone(), b.clone())));
    }
    if !cmd.best_vs_median {
        return Ok(None);
    }
    let metric: Metric = cmd
        .rank_by
        .parse()
        .map_err(|err| CliError::Input(anyhow!("--rank-by: {err}")))?;
    let mut values = Vec::new();
    for system in &track.systems {
        let value = aggregate(&system.queries, metric)
            .map_err(|err| CliError::Input(anyhow!("{}: {err}", system.system_id)))?;
        values.push((system.system_id.clone(), value));
    }
    let best = insight::best_system(&values, metric.orientation())
        .expect("track has systems")
        .0;
    let median = median_system(&values, metric.orientation()).expect("track has systems");
    Ok(Some((best, median)))
}

pub fn run(cmd: &HistogramCmd) -> Result<HistogramReport, CliError> {
    let discover = cmd.options.discover_options(1);
    let (track, mut warnings) = pipeline::load_single_track(&cmd.input, &discover)?;
    warnings.extend(track.warnings.iter().cloned());

    if let Some((id_a, id_b)) = delta_operands(cmd, &track)? {
        let a = find_system(&track, &id_a)?;
        let b = find_system(&track, &id_b)?;
        let magnitudes = match &cmd.edges {
            Some(spec) => parse_edges(spec)?,
            None => {
                let deltas = insight::per_doc_deltas(&a.queries, &b.queries)?;
                let max_abs = deltas.iter().fold(1.0f64, |m, d| m.max(d.abs()));
                geometric_edges(max_abs)
            }
        };
        let spec = HistogramSpec::signed_from_magnitudes(&magnitudes);
        let histogram = insight::delta_histogram(&a.queries, &b.queries, &spec)?;
        return Ok(HistogramReport {
            track_id: track.track_id.clone(),
            systems: Vec::new(),
            delta: Some(DeltaReport {
                system_a: id_a,
                system_b: id_b,
                histogram,
            }),
            warnings,
        });
    }

    let selected: Vec<&SystemEval> = match &cmd.system {
        Some(id) => vec![find_system(&track, id)?],
        None => track.systems.iter().collect(),
    };
    let overflow_missing = !cmd.no_missing_overflow;
    let edges = match &cmd.edges {
        Some(spec) => parse_edges(spec)?,
        None => {
            let mut max_value = 1.0f64;
            for system in &selected {
                for query in &system.queries {
                    for doc in &query.docs {
                        if doc.retrieved || !overflow_missing {
                            max_value = max_value.max(doc.asl as f64);
                        }
                    }
                }
            }
            geometric_edges(max_value)
        }
    };
    let spec = HistogramSpec {
        bucket_edges: edges,
        overflow_missing,
        signed: false,
    };
    let systems = selected
        .into_iter()
        .map(|system| {
            insight::asl_histogram(&system.queries, &spec).map(|histogram| SystemHistogram {
                system_id: system.system_id.clone(),
                histogram,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HistogramReport {
        track_id: track.track_id.clone(),
        systems,
        delta: None,
        warnings,
    })
}

pub fn render_tsv(report: &HistogramReport) -> String {
    let mut table = TsvTable::new(
        "histogram",
        &["system", "comparison", "kind", "lo", "hi", "count"],
    );
    for entry in &report.systems {
        let hist = &entry.histogram;
        for (i, count) in hist.counts.iter().enumerate() {
            table.push(vec![
                entry.system_id.clone(),
                String::new(),
                "bucket".to_owned(),
                format_edge(hist.edges[i]),
                format_edge(hist.edges[i + 1]),
                count.to_string(),
            ]);
        }
        table.push(vec![
            entry.system_id.clone(),
            String::new(),
            "overflow".to_owned(),
            format_edge(*hist.edges.last().expect("nonempty")),
            "inf".to_owned(),
            hist.overflow.to_string(),
        ]);
    }
    if let Some(delta) = &report.delta {
        let hist = &delta.histogram;
        let k = hist.magnitudes.len();
        for (i, count) in hist.counts.iter().enumerate() {
            let (lo, hi) = hist.bounds(i);
            let kind = if i == 0 {
                "neg-overflow"
            } else if i == 2 * k {
                "pos-overflow"
            } else {
                "bucket"
            };
            table.push(vec![
                delta.system_a.clone(),
                delta.system_b.clone(),
                kind.to_owned(),
                format_edge(lo),
                format_edge(hi),
                count.to_string(),
            ]);
        }
    }
    table.render()
}

pub fn execute(cmd: &HistogramCmd) -> Result<(), CliError> {
    let report = run(cmd)?;
    output::emit_warnings(&report.warnings);
    let rendered = match cmd.output.format {
        OutputFormat::Tsv => render_tsv(&report),
        OutputFormat::Json => output::to_json("histogram", &report)?,
    };
    output::emit(&rendered, cmd.output.output.as_deref())?;
    Ok(())
}
