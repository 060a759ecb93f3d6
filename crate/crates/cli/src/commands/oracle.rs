//! `oracle`: numerical self-checks for the rate-averaging analysis —
//! the weighted-average identity, the two-value limit, harmonic-mean
//! regressions, and the effective-top partition search — on seeded
//! synthetic pools and, optionally, on supplied track data.

use anyhow::anyhow;
use clap::Args;
use rand::Rng;
use serde::Serialize;

use asl_core::insight::{
    effective_top_fraction, effective_top_fraction_per_query, p_space_average_sl,
    search_length_groups, two_value_limit, weighted_identity_check,
};
use asl_core::stats::{cross_track_summary, StdDevKind};
use asl_core::synth::{log_uniform_pool, seeded_rng, synthetic_sl_corpus};

use crate::config::{EvalOptions, InputArgs, OutputArgs, OutputFormat};
use crate::output::{self, TsvTable};
use crate::pipeline::{self, CliError};

/// Reference list whose rate-space average is roughly rank 2.
const REGRESSION_POOL: [f64; 9] = [1.0, 1.0, 1.0, 2.0, 4.0, 5.0, 10.0, 10000.0, 10000.0];
/// Rate-equivalent values of the pool above; their plain mean matches the
/// pool's harmonic mean within one percent.
const RATE_EQUIVALENT_POOL: [f64; 9] = [1.0, 1.0, 1.0, 2.1, 2.7, 2.9, 3.0, 3.2, 3.2];

#[derive(Debug, Args, Default)]
pub struct OracleCmd {
    /// Optional track data for the effective-top analysis
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub options: EvalOptions,

    /// Seed for every randomized check
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Pool the partition search over all documents instead of per query
    #[arg(long)]
    pub pooled: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Serialize)]
pub struct OracleCheck {
    pub check: String,
    pub case: String,
    pub value: String,
    pub expected: String,
    pub status: CheckStatus,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub checks: Vec<OracleCheck>,
    pub failures: usize,
    pub warnings: Vec<String>,
}

struct Checks(Vec<OracleCheck>);

impl Checks {
    fn push(&mut self, check: &str, case: &str, value: String, expected: String, pass: bool) {
        self.0.push(OracleCheck {
            check: check.to_owned(),
            case: case.to_owned(),
            value,
            expected,
            status: if pass {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        });
    }

    fn info(&mut self, check: &str, case: &str, value: String) {
        self.0.push(OracleCheck {
            check: check.to_owned(),
            case: case.to_owned(),
            value,
            expected: String::new(),
            status: CheckStatus::Info,
        });
    }
}

pub fn run(cmd: &OracleCmd) -> Result<OracleReport, CliError> {
    let mut checks = Checks(Vec::new());
    let mut warnings = Vec::new();
    let mut rng = seeded_rng(cmd.seed);

    // Identity between rate-space averaging and self-weighted averaging,
    // over random pools spanning six orders of magnitude.
    let trials = 10_000;
    let mut passed = 0usize;
    for _ in 0..trials {
        let size = rng.gen_range(1..=64);
        let pool: Vec<f64> = (0..size)
            .map(|_| 10f64.powf(rng.gen_range(0.0..=6.0)))
            .collect();
        if weighted_identity_check(&pool, 1e-12)? {
            passed += 1;
        }
    }
    checks.push(
        "weighted-identity",
        &format!("{trials} random pools"),
        passed.to_string(),
        trials.to_string(),
        passed == trials,
    );

    // Two-value limit: averaging a fixed length with an ever-larger one in
    // rate space converges to twice the fixed length.
    for sl1 in [1.0, 5.0, 50.0] {
        let sl2: Vec<f64> = (1..=12).map(|k| 10f64.powf(0.5 * k as f64)).collect();
        let equivalents = two_value_limit(sl1, &sl2)?;
        let monotone = equivalents.windows(2).all(|w| w[0] < w[1]);
        let last = *equivalents.last().expect("nonempty");
        let limit = 2.0 * sl1;
        let converged = (last - limit).abs() / limit < 0.01;
        checks.push(
            "two-value-limit",
            &format!("sl1={sl1}"),
            format!("{last:.4}"),
            format!("{limit}±1%, increasing"),
            monotone && converged,
        );
    }

    // The classic two-document example lands at roughly rank 2.
    let rank2 = p_space_average_sl(&[1.0, 1000.0])?;
    checks.push(
        "rate-average-rank2",
        "[1, 1000]",
        format!("{rank2:.4}"),
        "[1.99, 2.01]".to_owned(),
        (1.99..=2.01).contains(&rank2),
    );

    // Harmonic-mean regression on the reference pool, and its
    // rate-equivalent list whose plain mean must agree within 1%.
    let harmonic = p_space_average_sl(&REGRESSION_POOL)?;
    checks.push(
        "harmonic-regression",
        "reference pool",
        format!("{harmonic:.4}"),
        "2.222±0.001".to_owned(),
        (harmonic - 2.222).abs() <= 0.001,
    );
    let equivalent_mean =
        RATE_EQUIVALENT_POOL.iter().sum::<f64>() / RATE_EQUIVALENT_POOL.len() as f64;
    checks.push(
        "equivalent-list-regression",
        "plain mean vs harmonic",
        format!("{equivalent_mean:.4}"),
        format!("{harmonic:.4}±1%"),
        (equivalent_mean - harmonic).abs() / harmonic <= 0.01,
    );

    // Partition search: the [1, 1000] pool matches its rate average with
    // exactly the single best document.
    let two_point = effective_top_fraction(&[1.0, 1000.0])?;
    checks.push(
        "partition-two-point",
        "[1, 1000]",
        format!("n={} fraction={}", two_point.n, two_point.fraction),
        "n=1 fraction=0.5".to_owned(),
        two_point.n == 1 && two_point.fraction == 0.5,
    );
    let constant = effective_top_fraction(&[6.0, 6.0, 6.0, 6.0])?;
    checks.push(
        "partition-constant",
        "[6, 6, 6, 6]",
        format!("n={} fraction={}", constant.n, constant.fraction),
        "n=1 fraction=0.25".to_owned(),
        constant.n == 1 && constant.fraction == 0.25,
    );

    // Whenever a pool is spread more than 2x, the partition keeps strictly
    // fewer than all documents.
    let dispersions = [2.0001, 2.01, 2.1, 2.5, 3.0, 5.0, 10.0, 100.0, 10_000.0];
    let mut dispersion_cases = 0usize;
    let mut dispersion_passed = 0usize;
    for &dispersion in &dispersions {
        for _ in 0..25 {
            let pool = log_uniform_pool(&mut rng, 64, dispersion);
            let result = effective_top_fraction(&pool)?;
            dispersion_cases += 1;
            if result.fraction < 1.0 {
                dispersion_passed += 1;
            }
        }
    }
    checks.push(
        "partition-dispersion",
        "64-doc pools, spread > 2x",
        format!("{dispersion_passed} fractions < 1"),
        format!("{dispersion_cases}"),
        dispersion_passed == dispersion_cases,
    );

    // Cross-corpus effective-top fraction on a synthetic long-tailed
    // corpus, reported for orientation.
    let corpus = synthetic_sl_corpus(cmd.seed, 76, 40, 50);
    let mut per_track = Vec::with_capacity(corpus.len());
    for track in &corpus {
        let (mean_fraction, _) = effective_top_fraction_per_query(track)?;
        per_track.push(100.0 * mean_fraction);
    }
    let summary = cross_track_summary(&per_track, StdDevKind::Population)?;
    checks.info(
        "corpus-top-fraction",
        "76 synthetic tracks, per-query",
        format!(
            "mean={:.1}% stddev={:.1} range={:.1}-{:.1}",
            summary.mean, summary.stddev, summary.lo, summary.hi
        ),
    );

    // Supplied data, when given.
    let has_input = cmd.input.track.is_some()
        || cmd.input.tracks_dir.is_some()
        || cmd.input.qrels.is_some()
        || cmd.input.runs_dir.is_some();
    if has_input {
        let discover = cmd.options.discover_options(1);
        let (bundles, mut load_warnings) = pipeline::load_tracks(&cmd.input, &discover)?;
        warnings.append(&mut load_warnings);
        let tracks = pipeline::evaluate_tracks(bundles);
        for track in &tracks {
            warnings.extend(track.warnings.iter().cloned());
            for system in &track.systems {
                let groups = search_length_groups(&system.queries);
                if groups.is_empty() {
                    warnings.push(format!(
                        "{}/{}: no usable queries for the partition search",
                        track.track_id, system.system_id
                    ));
                    continue;
                }
                let label = format!("{}/{}", track.track_id, system.system_id);
                if cmd.pooled {
                    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
                    let result = effective_top_fraction(&pooled)?;
                    checks.info(
                        "supplied-top-fraction",
                        &label,
                        format!("pooled fraction={:.4}", result.fraction),
                    );
                } else {
                    let (mean_fraction, _) = effective_top_fraction_per_query(&groups)?;
                    checks.info(
                        "supplied-top-fraction",
                        &label,
                        format!("per-query fraction={mean_fraction:.4}"),
                    );
                }
            }
        }
    }

    let failures = checks
        .0
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .count();
    Ok(OracleReport {
        seed: cmd.seed,
        checks: checks.0,
        failures,
        warnings,
    })
}

pub fn render_tsv(report: &OracleReport) -> String {
    let mut table = TsvTable::new(
        "oracle",
        &["check", "case", "value", "expected", "status"],
    );
    for check in &report.checks {
        table.push(vec![
            check.check.clone(),
            check.case.clone(),
            check.value.clone(),
            check.expected.clone(),
            match check.status {
                CheckStatus::Pass => "pass".to_owned(),
                CheckStatus::Fail => "fail".to_owned(),
                CheckStatus::Info => "info".to_owned(),
            },
        ]);
    }
    table.render()
}

pub fn execute(cmd: &OracleCmd) -> Result<(), CliError> {
    let report = run(cmd)?;
    output::emit_warnings(&report.warnings);
    let rendered = match cmd.output.format {
        OutputFormat::Tsv => render_tsv(&report),
        OutputFormat::Json => output::to_json("oracle", &report)?,
    };
    output::emit(&rendered, cmd.output.output.as_deref())?;
    if report.failures > 0 {
        return Err(CliError::Check(anyhow!(
            "{} oracle check(s) failed",
            report.failures
        )
        .to_string()));
    }
    Ok(())
}
