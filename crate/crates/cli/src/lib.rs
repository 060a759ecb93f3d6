//! Command-line front end for search-length and precision evaluation of
//! ranked retrieval runs.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

use clap::{Parser, Subcommand};

pub use pipeline::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "asl-eval",
    version,
    about = "Evaluate ranked retrieval runs with search-length and precision metrics"
)]
pub struct Cli {
    /// Worker threads (fallback: ASL_EVAL_JOBS, then available parallelism)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every run of a track
    Eval(commands::eval::EvalCmd),
    /// Baseline-vs-candidate table with relative reduction in error
    Compare(commands::compare::CompareCmd),
    /// Measure system reordering when switching metrics
    Reorder(commands::reorder::ReorderCmd),
    /// Per-document search-length or delta histograms
    Histogram(commands::histogram::HistogramCmd),
    /// Per-track best systems and cross-track distributions
    Headroom(commands::headroom::HeadroomCmd),
    /// Numerical self-checks of the rate-averaging analysis
    Oracle(commands::oracle::OracleCmd),
}

/// Runs one parsed invocation inside a bounded worker pool. Reductions use
/// fixed input order, so output bytes do not depend on the pool size.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let jobs = pipeline::resolve_jobs(cli.jobs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|err| CliError::Input(anyhow::anyhow!("building worker pool: {err}")))?;
    pool.install(|| match &cli.command {
        Command::Eval(cmd) => commands::eval::execute(cmd),
        Command::Compare(cmd) => commands::compare::execute(cmd),
        Command::Reorder(cmd) => commands::reorder::execute(cmd),
        Command::Histogram(cmd) => commands::histogram::execute(cmd),
        Command::Headroom(cmd) => commands::headroom::execute(cmd),
        Command::Oracle(cmd) => commands::oracle::execute(cmd),
    })
}
