//! Input resolution and parallel track evaluation shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use asl_core::metrics::{
    self, aggregate, per_query_value, Metric, SystemEval, SystemScores,
};
use asl_core::stats::MetricColumn;
use asl_core::trec::{self, DiscoverOptions, Qrels, TrackBundle};

use crate::config::InputArgs;

/// Command failures split by exit code: bad input (1) versus a failed
/// numerical property or oracle check (2).
#[derive(Debug)]
pub enum CliError {
    Input(anyhow::Error),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Check(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(err) => write!(f, "{err:#}"),
            CliError::Check(msg) => write!(f, "check failed: {msg}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Input(err)
    }
}

impl From<trec::TrecError> for CliError {
    fn from(err: trec::TrecError) -> Self {
        CliError::Input(err.into())
    }
}

impl From<asl_core::MetricError> for CliError {
    fn from(err: asl_core::MetricError) -> Self {
        CliError::Input(err.into())
    }
}

impl From<asl_core::StatsError> for CliError {
    fn from(err: asl_core::StatsError) -> Self {
        CliError::Input(err.into())
    }
}

impl From<asl_core::InsightError> for CliError {
    fn from(err: asl_core::InsightError) -> Self {
        CliError::Input(err.into())
    }
}

/// Loads every requested track. With `--tracks-dir`, subdirectories that
/// fail discovery (bad layout, too few runs) are skipped with a warning,
/// mirroring the usual track-inclusion rule; the other input modes fail
/// hard.
pub fn load_tracks(
    input: &InputArgs,
    options: &DiscoverOptions,
) -> Result<(Vec<TrackBundle>, Vec<String>)> {
    let modes = [
        input.track.is_some(),
        input.tracks_dir.is_some(),
        input.qrels.is_some() || input.runs_dir.is_some(),
    ];
    if modes.iter().filter(|m| **m).count() != 1 {
        bail!("provide exactly one of --track, --tracks-dir, or --qrels with --runs-dir");
    }
    let mut warnings = Vec::new();
    let bundles = if let Some(dir) = &input.tracks_dir {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .map(|entry| entry.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        subdirs.retain(|p| p.is_dir());
        subdirs.sort();
        if subdirs.is_empty() {
            bail!("{} contains no track directories", dir.display());
        }
        let mut bundles = Vec::new();
        for subdir in subdirs {
            match trec::discover_track(&subdir, options) {
                Ok(bundle) => {
                    warnings.extend(bundle.warnings.iter().cloned());
                    bundles.push(bundle);
                }
                Err(err) => warnings.push(format!(
                    "skipping track {}: {err}",
                    subdir.display()
                )),
            }
        }
        if bundles.is_empty() {
            bail!("no usable tracks under {}", dir.display());
        }
        bundles
    } else if let Some(dir) = &input.track {
        let bundle = trec::discover_track(dir, options)
            .with_context(|| format!("loading track {}", dir.display()))?;
        warnings.extend(bundle.warnings.iter().cloned());
        vec![bundle]
    } else {
        let qrels_path = input
            .qrels
            .as_ref()
            .ok_or_else(|| anyhow!("--runs-dir requires --qrels"))?;
        let runs_dir = input
            .runs_dir
            .as_ref()
            .ok_or_else(|| anyhow!("--qrels requires --runs-dir"))?;
        let qrels = Qrels::parse(
            fs::File::open(qrels_path)
                .with_context(|| format!("opening {}", qrels_path.display()))?,
            options.relevance_threshold,
        )
        .with_context(|| format!("parsing {}", qrels_path.display()))?;
        let (runs, mut run_warnings) = trec::load_runs_dir(runs_dir, options)
            .with_context(|| format!("reading {}", runs_dir.display()))?;
        warnings.append(&mut run_warnings);
        if runs.len() < options.min_runs {
            return Err(trec::TrecError::InsufficientRuns {
                found: runs.len(),
                required: options.min_runs,
            }
            .into());
        }
        let track_id = runs_dir
            .parent()
            .and_then(Path::file_name)
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "track".to_owned());
        vec![TrackBundle {
            track_id,
            qrels,
            runs,
            warnings: Vec::new(),
        }]
    };
    Ok((bundles, warnings))
}

/// One track, every system evaluated.
pub struct TrackEval {
    pub track_id: String,
    pub qrels: Qrels,
    pub systems: Vec<SystemEval>,
    pub warnings: Vec<String>,
}

/// Evaluates every run of every track in parallel; result order matches
/// input order, so output is independent of the worker count.
pub fn evaluate_tracks(bundles: Vec<TrackBundle>) -> Vec<TrackEval> {
    bundles
        .into_par_iter()
        .map(|bundle| {
            let systems: Vec<SystemEval> = bundle
                .runs
                .par_iter()
                .map(|run| metrics::evaluate_run(&bundle.qrels, run))
                .collect();
            let mut warnings = bundle.warnings.clone();
            for system in &systems {
                warnings.extend(system.warnings.iter().cloned());
            }
            TrackEval {
                track_id: bundle.track_id,
                qrels: bundle.qrels,
                systems,
                warnings,
            }
        })
        .collect()
}

/// Scores every system of a track under the requested metrics.
pub fn score_track(track: &TrackEval, metrics: &[Metric]) -> Result<Vec<SystemScores>, CliError> {
    track
        .systems
        .par_iter()
        .map(|eval| {
            metrics::compute_scores(eval, metrics).map_err(|err| {
                CliError::Input(anyhow!(
                    "scoring {} on track {}: {err}",
                    eval.system_id,
                    track.track_id
                ))
            })
        })
        .collect()
}

/// Builds aligned per-system metric columns for cross-system statistics.
///
/// Reciprocal-space metrics are computed over the queries that are
/// non-degenerate in every system, so per-query series stay paired; all
/// other metrics use the full judged query set. Returns the skipped query
/// ids alongside the columns.
pub fn metric_columns(
    track: &TrackEval,
    metric: Metric,
) -> Result<(Vec<MetricColumn>, Vec<String>), CliError> {
    if track.systems.is_empty() {
        return Err(CliError::Input(anyhow!(
            "track {} has no systems",
            track.track_id
        )));
    }
    let needs_clean = metric.needs_nonzero_asl();
    let mut skipped: Vec<String> = Vec::new();
    let keep: Vec<usize> = if needs_clean {
        let mut degenerate: Vec<&str> = Vec::new();
        for system in &track.systems {
            degenerate.extend(system.degenerate_queries());
        }
        degenerate.sort_unstable();
        degenerate.dedup();
        skipped = degenerate.iter().map(|q| q.to_string()).collect();
        let reference = &track.systems[0].queries;
        (0..reference.len())
            .filter(|&i| !skipped.iter().any(|q| q == &reference[i].query_id))
            .collect()
    } else {
        (0..track.systems[0].queries.len()).collect()
    };
    if keep.is_empty() {
        return Err(CliError::Input(anyhow!(
            "track {}: no usable queries for metric {metric}",
            track.track_id
        )));
    }
    let columns = track
        .systems
        .iter()
        .map(|system| {
            let subset: Vec<_> = keep.iter().map(|&i| system.queries[i].clone()).collect();
            let aggregate = aggregate(&subset, metric).map_err(|err| {
                CliError::Input(anyhow!(
                    "aggregating {metric} for {}: {err}",
                    system.system_id
                ))
            })?;
            let per_query = subset
                .iter()
                .map(|q| per_query_value(q, metric))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|err| CliError::Input(anyhow!("{}: {err}", system.system_id)))?;
            Ok(MetricColumn {
                system_id: system.system_id.clone(),
                aggregate,
                per_query,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((columns, skipped))
}

/// Loads and evaluates exactly one track; rejects `--tracks-dir`.
pub fn load_single_track(
    input: &InputArgs,
    options: &DiscoverOptions,
) -> Result<(TrackEval, Vec<String>), CliError> {
    if input.tracks_dir.is_some() {
        return Err(CliError::Input(anyhow!(
            "this command works on a single track; use --track or --qrels with --runs-dir"
        )));
    }
    let (bundles, warnings) = load_tracks(input, options)?;
    let track = evaluate_tracks(bundles)
        .into_iter()
        .next()
        .expect("load_tracks yields at least one bundle");
    Ok((track, warnings))
}

/// Resolves the worker count: flag, then the ASL_EVAL_JOBS variable, then
/// available parallelism.
pub fn resolve_jobs(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("ASL_EVAL_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
    .max(1)
}
