//! `reorder`: how much the system ranking of each track changes when one
//! metric replaces another, reported per track and summarized across
//! tracks. Supports any metric pair and the staged chain that morphs MAP
//! into reciprocal search length one averaging decision at a time.

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use asl_core::metrics::Metric;
use asl_core::stats::{self, ReorderReport, StdDevKind, TrackReorder};

use crate::config::{
    EvalOptions, InputArgs, OutputArgs, OutputFormat, SignificanceArgs, StdDevFlag,
};
use crate::output::{self, format_value, TsvTable, ValueKind};
use crate::pipeline::{self, CliError, TrackEval};

#[derive(Debug, Args, Default)]
pub struct ReorderCmd {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub options: EvalOptions,

    #[command(flatten)]
    pub significance: SignificanceArgs,

    /// Metric systems are currently ranked by
    #[arg(long = "old", default_value = "MAP", value_name = "METRIC")]
    pub metric_old: String,

    /// Metric to rank systems by instead
    #[arg(long = "new", default_value = "ASL", value_name = "METRIC")]
    pub metric_new: String,

    /// Run the staged ablation chain (atomize, harmonic within query,
    /// harmonic across queries, cumulative) instead of a single pair
    #[arg(long)]
    pub chain: bool,

    /// Standard deviation flavor for cross-track ranges
    #[arg(long, value_enum, default_value_t = StdDevFlag::Population)]
    pub stddev: StdDevFlag,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
pub struct LabeledReorder {
    pub label: String,
    #[serde(flatten)]
    pub report: ReorderReport,
}

#[derive(Debug, Serialize)]
pub struct ReorderCmdReport {
    pub pairs: Vec<LabeledReorder>,
    pub warnings: Vec<String>,
}

/// The staged metric switches, each measured against the previous stage.
fn chain_stages() -> Vec<(&'static str, Metric, Metric)> {
    vec![
        ("atomize-p", Metric::Map, Metric::AtomizedPrecision),
        (
            "harmonic-within-query",
            Metric::AtomizedPrecision,
            Metric::HarmonicWithinQuery,
        ),
        (
            "harmonic-across-queries",
            Metric::HarmonicWithinQuery,
            Metric::HarmonicBothLevels,
        ),
        ("cumulative", Metric::Map, Metric::Asl),
    ]
}

fn reorder_pair(
    tracks: &[TrackEval],
    label: &str,
    metric_old: Metric,
    metric_new: Metric,
    config: &asl_core::stats::SignificanceConfig,
    kind: StdDevKind,
    warnings: &mut Vec<String>,
) -> Result<LabeledReorder, CliError> {
    let mut per_track: Vec<TrackReorder> = Vec::new();
    for track in tracks {
        if track.systems.len() < 2 {
            warnings.push(format!(
                "{label}: track {} has fewer than 2 systems; skipped",
                track.track_id
            ));
            continue;
        }
        let (old_columns, skipped_old) = pipeline::metric_columns(track, metric_old)?;
        let (new_columns, skipped_new) = pipeline::metric_columns(track, metric_new)?;
        for query in skipped_old.iter().chain(&skipped_new) {
            warnings.push(format!(
                "{label}: track {}: query {query} degenerate; excluded from \
                 reciprocal-space metrics",
                track.track_id
            ));
        }
        let reorder = stats::reorder_track(
            &track.track_id,
            metric_old,
            &old_columns,
            metric_new,
            &new_columns,
            config,
        )?;
        per_track.push(reorder);
    }
    if per_track.is_empty() {
        return Err(CliError::Input(anyhow!(
            "{label}: no track has enough systems to compare"
        )));
    }
    let report = stats::reorder_report(metric_old, metric_new, per_track, kind)?;
    Ok(LabeledReorder {
        label: label.to_owned(),
        report,
    })
}

pub fn run(cmd: &ReorderCmd) -> Result<ReorderCmdReport, CliError> {
    let config = cmd.significance.to_config();
    config.validate()?;
    // The usual track-inclusion rule: at least 5 runs.
    let discover = cmd.options.discover_options(5);
    let (bundles, mut warnings) = pipeline::load_tracks(&cmd.input, &discover)?;
    let tracks = pipeline::evaluate_tracks(bundles);
    for track in &tracks {
        warnings.extend(track.warnings.iter().cloned());
    }
    let kind: StdDevKind = cmd.stddev.into();
    let stages: Vec<(String, Metric, Metric)> = if cmd.chain {
        chain_stages()
            .into_iter()
            .map(|(label, old, new)| (label.to_owned(), old, new))
            .collect()
    } else {
        let old: Metric = cmd
            .metric_old
            .parse()
            .map_err(|err| CliError::Input(anyhow!("--old: {err}")))?;
        let new: Metric = cmd
            .metric_new
            .parse()
            .map_err(|err| CliError::Input(anyhow!("--new: {err}")))?;
        vec![(format!("{old}->{new}"), old, new)]
    };
    let mut pairs = Vec::new();
    for (label, old, new) in stages {
        pairs.push(reorder_pair(
            &tracks,
            &label,
            old,
            new,
            &config,
            kind,
            &mut warnings,
        )?);
    }
    Ok(ReorderCmdReport { pairs, warnings })
}

pub fn render_tsv(report: &ReorderCmdReport, cmd: &ReorderCmd) -> String {
    let mode = cmd.output.rounding;
    let mut table = TsvTable::new(
        "reorder",
        &[
            "row_type",
            "pair",
            "track",
            "system",
            "n0",
            "n1",
            "pool",
            "delta_sort",
            "kendall_tau",
            "delta_value",
            "statistic",
            "mean",
            "stddev",
            "lo",
            "hi",
        ],
    );
    let blank = String::new;
    for pair in &report.pairs {
        for track in &pair.report.tracks {
            table.push(vec![
                "track".to_owned(),
                pair.label.clone(),
                track.track_id.clone(),
                blank(),
                blank(),
                blank(),
                track.pool_size.to_string(),
                format_value(track.max_delta_sort, ValueKind::Percent, mode),
                format_value(track.kendall_tau, ValueKind::Tau, mode),
                format_value(track.mean_delta_value, ValueKind::Ratio, mode),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
            ]);
            for row in &track.systems {
                table.push(vec![
                    "system".to_owned(),
                    pair.label.clone(),
                    track.track_id.clone(),
                    row.system_id.clone(),
                    row.n0.to_string(),
                    row.n1.to_string(),
                    track.pool_size.to_string(),
                    format_value(row.delta_sort, ValueKind::Percent, mode),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                ]);
            }
        }
        let summaries = [
            ("delta-sort", &pair.report.delta_sort, ValueKind::Percent),
            ("kendall-tau", &pair.report.kendall, ValueKind::Tau),
            ("delta-value", &pair.report.delta_value, ValueKind::Ratio),
        ];
        for (statistic, stat, kind) in summaries {
            table.push(vec![
                "summary".to_owned(),
                pair.label.clone(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                statistic.to_owned(),
                format_value(stat.mean, kind, mode),
                format_value(stat.stddev, kind, mode),
                format_value(stat.lo, kind, mode),
                format_value(stat.hi, kind, mode),
            ]);
        }
    }
    table.render()
}

pub fn execute(cmd: &ReorderCmd) -> Result<(), CliError> {
    let report = run(cmd)?;
    output::emit_warnings(&report.warnings);
    let rendered = match cmd.output.format {
        OutputFormat::Tsv => render_tsv(&report, cmd),
        OutputFormat::Json => output::to_json("reorder", &report)?,
    };
    output::emit(&rendered, cmd.output.output.as_deref())?;
    Ok(())
}
