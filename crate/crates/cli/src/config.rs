//! Shared command-line options and the resolved run configuration.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use asl_core::metrics::Metric;
use asl_core::stats::{SignificanceConfig, StdDevKind};
use asl_core::trec::{DiscoverOptions, DuplicatePolicy, OrderingPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Tsv,
    Json,
}

/// How numbers are rendered in TSV output. `Paper` rounds search lengths to
/// whole ranks and error reductions to whole percents; `Precise` keeps four
/// decimals everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum RoundingMode {
    #[default]
    Precise,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OrderFlag {
    #[default]
    Score,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum StdDevFlag {
    #[default]
    Population,
    Sample,
}

/// Input location flags: a track directory layout, a directory of track
/// directories, or explicit qrels plus runs paths.
#[derive(Debug, Clone, Args, Default)]
pub struct InputArgs {
    /// One track directory containing qrels.txt and runs/
    #[arg(long, value_name = "DIR")]
    pub track: Option<PathBuf>,

    /// Directory whose subdirectories are track directories
    #[arg(long, value_name = "DIR")]
    pub tracks_dir: Option<PathBuf>,

    /// Explicit qrels file (pairs with --runs-dir)
    #[arg(long, value_name = "FILE")]
    pub qrels: Option<PathBuf>,

    /// Explicit runs directory (pairs with --qrels)
    #[arg(long, value_name = "DIR")]
    pub runs_dir: Option<PathBuf>,
}

/// Parsing and evaluation options common to every data-driven command.
#[derive(Debug, Clone, Args)]
pub struct EvalOptions {
    /// Relevance threshold: grades >= threshold count as relevant
    #[arg(long, default_value_t = 1)]
    pub threshold: i32,

    /// Ranking order: by score column or by file line order
    #[arg(long, value_enum, default_value_t = OrderFlag::Score)]
    pub order: OrderFlag,

    /// Keep the best-scored copy of duplicated predictions instead of
    /// rejecting the run
    #[arg(long)]
    pub dedupe: bool,

    /// Minimum cleanly-parsed runs per track
    #[arg(long, value_name = "N")]
    pub min_runs: Option<usize>,

    /// Metrics to report (repeatable); overrides the default selection
    #[arg(long = "metric", value_name = "NAME")]
    pub metrics: Vec<String>,

    /// Cutoffs for search length over the first g relevant docs (repeatable)
    #[arg(long = "g", value_name = "N")]
    pub g_values: Vec<u32>,

    /// Cutoffs for precision at k (repeatable)
    #[arg(long = "k", value_name = "N")]
    pub k_values: Vec<u32>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            threshold: 1,
            order: OrderFlag::Score,
            dedupe: false,
            min_runs: None,
            metrics: Vec::new(),
            g_values: Vec::new(),
            k_values: Vec::new(),
        }
    }
}

impl EvalOptions {
    pub fn discover_options(&self, default_min_runs: usize) -> DiscoverOptions {
        DiscoverOptions {
            min_runs: self.min_runs.unwrap_or(default_min_runs),
            relevance_threshold: self.threshold,
            ordering_policy: match self.order {
                OrderFlag::Score => OrderingPolicy::ByScore,
                OrderFlag::File => OrderingPolicy::ByFileOrder,
            },
            duplicates: if self.dedupe {
                DuplicatePolicy::KeepBestScore
            } else {
                DuplicatePolicy::Error
            },
        }
    }

    /// The metric list: explicit `--metric` selections, or the default set
    /// built from the g and k cutoffs.
    pub fn metric_selection(&self) -> Result<Vec<Metric>> {
        if !self.metrics.is_empty() {
            let mut out = Vec::new();
            for name in &self.metrics {
                let metric: Metric = name
                    .parse()
                    .with_context(|| format!("unrecognized --metric {name:?}"))?;
                if !out.contains(&metric) {
                    out.push(metric);
                }
            }
            return Ok(out);
        }
        let g_values = if self.g_values.is_empty() {
            vec![1, 10]
        } else {
            self.g_values.clone()
        };
        let k_values = if self.k_values.is_empty() {
            vec![20]
        } else {
            self.k_values.clone()
        };
        if g_values.contains(&0) || k_values.contains(&0) {
            bail!("--g and --k cutoffs must be >= 1");
        }
        let mut out = vec![Metric::Asl];
        out.extend(g_values.iter().map(|g| Metric::AslAtG(*g)));
        out.push(Metric::Map);
        out.extend(k_values.iter().map(|k| Metric::PrecisionAtK(*k)));
        out.push(Metric::Mrr);
        Ok(out)
    }
}

/// Significance gates shared by reorder and comparison commands.
#[derive(Debug, Clone, Args)]
pub struct SignificanceArgs {
    /// Minimum relative aggregate improvement
    #[arg(long, default_value_t = 0.10)]
    pub min_gain: f64,

    /// Maximum paired t-test p-value
    #[arg(long, default_value_t = 0.05)]
    pub max_p: f64,
}

impl Default for SignificanceArgs {
    fn default() -> Self {
        Self {
            min_gain: 0.10,
            max_p: 0.05,
        }
    }
}

impl SignificanceArgs {
    pub fn to_config(&self) -> SignificanceConfig {
        SignificanceConfig {
            min_relative_gain: self.min_gain,
            max_p_value: self.max_p,
        }
    }
}

/// Output disposition shared by every command.
#[derive(Debug, Clone, Args, Default)]
pub struct OutputArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = OutputFormat::Tsv)]
    pub format: OutputFormat,

    /// Rounding mode for TSV values
    #[arg(long = "round", value_enum, default_value_t = RoundingMode::Precise)]
    pub rounding: RoundingMode,

    /// Write the report to a file instead of standard output
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

impl From<StdDevFlag> for StdDevKind {
    fn from(flag: StdDevFlag) -> Self {
        match flag {
            StdDevFlag::Population => StdDevKind::Population,
            StdDevFlag::Sample => StdDevKind::Sample,
        }
    }
}
