//! System-comparison statistics: the two-part significance predicate,
//! per-system sort displacement when switching metrics, Kendall rank
//! correlation, and metric value ratios, with cross-track summaries.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::metrics::{Metric, MetricFamily, Orientation};

/// Variance floor for the degenerate zero-variance, nonzero-mean case; the
/// t statistic explodes and the p-value underflows to 0 instead of crashing.
const VARIANCE_FLOOR: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("paired series have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("query {0} present in only one series")]
    UnmatchedQuery(String),
    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("relative improvement undefined: comparison value is zero")]
    UndefinedImprovement,
    #[error("value ratio undefined: old value is zero")]
    UndefinedRatio,
    #[error("rank correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("systems mismatch between metric columns: {0}")]
    SystemMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Gates for calling one system significantly better than another.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignificanceConfig {
    /// Required relative improvement of the aggregate metric.
    pub min_relative_gain: f64,
    /// Required two-tailed paired t-test p-value on per-query values.
    pub max_p_value: f64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        Self {
            min_relative_gain: 0.10,
            max_p_value: 0.05,
        }
    }
}

impl SignificanceConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        for (name, value) in [
            ("min_relative_gain", self.min_relative_gain),
            ("max_p_value", self.max_p_value),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(StatsError::InvalidConfig(format!(
                    "{name} must lie in (0, 1); got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Two-tailed paired Student t-test on per-query values.
///
/// Returns `1.0` when every difference is exactly zero. A zero-variance,
/// nonzero-mean difference yields a p-value that underflows toward zero.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewSamples {
            required: 2,
            got: a.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().all(|d| *d == 0.0) {
        return Ok(1.0);
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let var = var.max(VARIANCE_FLOOR);
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid dof");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(p.clamp(0.0, 1.0))
}

/// As [`paired_t_test`], pairing by query id and rejecting unmatched keys.
pub fn paired_t_test_keyed(
    a: &[(String, f64)],
    b: &[(String, f64)],
) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut left = Vec::with_capacity(a.len());
    let mut right = Vec::with_capacity(b.len());
    let mut sorted_a: Vec<&(String, f64)> = a.iter().collect();
    let mut sorted_b: Vec<&(String, f64)> = b.iter().collect();
    sorted_a.sort_by(|x, y| x.0.cmp(&y.0));
    sorted_b.sort_by(|x, y| x.0.cmp(&y.0));
    for (x, y) in sorted_a.iter().zip(&sorted_b) {
        if x.0 != y.0 {
            return Err(StatsError::UnmatchedQuery(x.0.clone()));
        }
        left.push(x.1);
        right.push(y.1);
    }
    paired_t_test(&left, &right)
}

/// Relative improvement of `a` over `b` in the favorable direction.
pub fn relative_gain(a: f64, b: f64, orientation: Orientation) -> Result<f64, StatsError> {
    if b == 0.0 {
        return Err(StatsError::UndefinedImprovement);
    }
    Ok(match orientation {
        Orientation::HigherBetter => (a - b) / b,
        Orientation::LowerBetter => (b - a) / b,
    })
}

/// The paper's two-part predicate: `a` beats `b` iff the aggregate is at
/// least `min_relative_gain` better in the metric's own direction AND the
/// paired t-test on per-query values is at most `max_p_value`.
pub fn significantly_better(
    aggregate_a: f64,
    aggregate_b: f64,
    per_query_a: &[f64],
    per_query_b: &[f64],
    orientation: Orientation,
    config: &SignificanceConfig,
) -> Result<bool, StatsError> {
    config.validate()?;
    let gain = relative_gain(aggregate_a, aggregate_b, orientation)?;
    if gain < config.min_relative_gain {
        return Ok(false);
    }
    let p = paired_t_test(per_query_a, per_query_b)?;
    Ok(p <= config.max_p_value)
}

/// One system's aggregate and per-query values under one metric. The
/// per-query order must be shared by every column being compared.
#[derive(Debug, Clone, Serialize)]
pub struct MetricColumn {
    pub system_id: String,
    pub aggregate: f64,
    pub per_query: Vec<f64>,
}

/// Per-system outcome of switching the ranking metric.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaSortRow {
    pub system_id: String,
    /// Systems significantly better under the old metric.
    pub n0: usize,
    /// Systems significantly better under the new metric.
    pub n1: usize,
    /// `100 * |n0 - n1| / pool_size`.
    pub delta_sort: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaSortReport {
    pub pool_size: usize,
    pub rows: Vec<DeltaSortRow>,
    /// Largest per-system displacement in the track.
    pub max_delta_sort: f64,
}

fn check_columns(columns: &[MetricColumn]) -> Result<(), StatsError> {
    if let Some(first) = columns.first() {
        for column in columns {
            if column.per_query.len() != first.per_query.len() {
                return Err(StatsError::LengthMismatch {
                    left: first.per_query.len(),
                    right: column.per_query.len(),
                });
            }
        }
    }
    Ok(())
}

/// Counts, per system, how many competitors are significantly better under
/// each metric and reports the per-system displacement.
pub fn delta_sort(
    old: &[MetricColumn],
    orientation_old: Orientation,
    new: &[MetricColumn],
    orientation_new: Orientation,
    config: &SignificanceConfig,
) -> Result<DeltaSortReport, StatsError> {
    if old.len() != new.len() {
        return Err(StatsError::LengthMismatch {
            left: old.len(),
            right: new.len(),
        });
    }
    if old.len() < 2 {
        return Err(StatsError::TooFewSamples {
            required: 2,
            got: old.len(),
        });
    }
    for (a, b) in old.iter().zip(new) {
        if a.system_id != b.system_id {
            return Err(StatsError::SystemMismatch(format!(
                "{} vs {}",
                a.system_id, b.system_id
            )));
        }
    }
    check_columns(old)?;
    check_columns(new)?;
    let pool = old.len();
    let better_counts = |columns: &[MetricColumn], orientation: Orientation| {
        let mut counts = vec![0usize; pool];
        for (i, subject) in columns.iter().enumerate() {
            for (j, rival) in columns.iter().enumerate() {
                if i == j {
                    continue;
                }
                if significantly_better(
                    rival.aggregate,
                    subject.aggregate,
                    &rival.per_query,
                    &subject.per_query,
                    orientation,
                    config,
                )? {
                    counts[i] += 1;
                }
            }
        }
        Ok::<_, StatsError>(counts)
    };
    let n0 = better_counts(old, orientation_old)?;
    let n1 = better_counts(new, orientation_new)?;
    let rows: Vec<DeltaSortRow> = old
        .iter()
        .enumerate()
        .map(|(i, column)| DeltaSortRow {
            system_id: column.system_id.clone(),
            n0: n0[i],
            n1: n1[i],
            delta_sort: 100.0 * n0[i].abs_diff(n1[i]) as f64 / pool as f64,
        })
        .collect();
    let max_delta_sort = rows.iter().map(|r| r.delta_sort).fold(0.0, f64::max);
    Ok(DeltaSortReport {
        pool_size: pool,
        rows,
        max_delta_sort,
    })
}

/// Tie-aware Kendall rank correlation (tau-b) between two value vectors
/// paired by index.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { required: 2, got: n });
    }
    let mut concordant: i64 = 0;
    let mut discordant: i64 = 0;
    let mut ties_x: i64 = 0;
    let mut ties_y: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                ties_x += 1;
                ties_y += 1;
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let total = (n * (n - 1) / 2) as i64;
    let denom = ((total - ties_x) as f64 * (total - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(StatsError::UndefinedCorrelation(
            "all values tied in at least one ranking".into(),
        ));
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Kendall tau between rankings induced by two metrics over the same
/// systems, with each metric's own orientation applied so concordance means
/// "both metrics prefer the same system".
pub fn kendall_tau_oriented(
    old: &[(f64, Orientation)],
    new: &[(f64, Orientation)],
) -> Result<f64, StatsError> {
    let goodness = |(value, orientation): &(f64, Orientation)| match orientation {
        Orientation::HigherBetter => *value,
        Orientation::LowerBetter => -*value,
    };
    let x: Vec<f64> = old.iter().map(goodness).collect();
    let y: Vec<f64> = new.iter().map(goodness).collect();
    kendall_tau_b(&x, &y)
}

/// Mean over systems of `new / old`.
pub fn delta_value(old: &[f64], new: &[f64]) -> Result<f64, StatsError> {
    if old.len() != new.len() {
        return Err(StatsError::LengthMismatch {
            left: old.len(),
            right: new.len(),
        });
    }
    if old.is_empty() {
        return Err(StatsError::TooFewSamples { required: 1, got: 0 });
    }
    let mut total = 0.0;
    for (o, n) in old.iter().zip(new) {
        if *o == 0.0 {
            return Err(StatsError::UndefinedRatio);
        }
        total += n / o;
    }
    Ok(total / old.len() as f64)
}

/// Which standard deviation the cross-track ranges use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdDevKind {
    #[default]
    Population,
    Sample,
}

/// Mean, spread, and the `mean - stddev` to `mean + stddev` range of one
/// statistic across tracks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossTrackStat {
    pub mean: f64,
    pub stddev: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn cross_track_summary(values: &[f64], kind: StdDevKind) -> Result<CrossTrackStat, StatsError> {
    if values.is_empty() {
        return Err(StatsError::TooFewSamples { required: 1, got: 0 });
    }
    if kind == StdDevKind::Sample && values.len() < 2 {
        return Err(StatsError::TooFewSamples {
            required: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sum_sq: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let stddev = match kind {
        StdDevKind::Population => (sum_sq / n).sqrt(),
        StdDevKind::Sample => (sum_sq / (n - 1.0)).sqrt(),
    };
    Ok(CrossTrackStat {
        mean,
        stddev,
        lo: mean - stddev,
        hi: mean + stddev,
    })
}

/// Reordering outcome for one track under one metric switch.
#[derive(Debug, Clone, Serialize)]
pub struct TrackReorder {
    pub track_id: String,
    pub metric_old: Metric,
    pub metric_new: Metric,
    pub pool_size: usize,
    pub max_delta_sort: f64,
    pub kendall_tau: f64,
    pub mean_delta_value: f64,
    pub systems: Vec<DeltaSortRow>,
}

/// Compares two metrics over one track's systems.
///
/// For the value ratio, a search-length metric on either side is first
/// mapped to its reciprocal so precision-family and search-length-family
/// magnitudes are comparable.
pub fn reorder_track(
    track_id: &str,
    metric_old: Metric,
    old: &[MetricColumn],
    metric_new: Metric,
    new: &[MetricColumn],
    config: &SignificanceConfig,
) -> Result<TrackReorder, StatsError> {
    let report = delta_sort(
        old,
        metric_old.orientation(),
        new,
        metric_new.orientation(),
        config,
    )?;
    let tau = kendall_tau_oriented(
        &old
            .iter()
            .map(|c| (c.aggregate, metric_old.orientation()))
            .collect::<Vec<_>>(),
        &new
            .iter()
            .map(|c| (c.aggregate, metric_new.orientation()))
            .collect::<Vec<_>>(),
    )?;
    let as_rate = |metric: Metric, value: f64| match metric.family() {
        MetricFamily::SearchLength => 1.0 / value,
        MetricFamily::Precision => value,
    };
    let old_values: Vec<f64> = old.iter().map(|c| as_rate(metric_old, c.aggregate)).collect();
    let new_values: Vec<f64> = new.iter().map(|c| as_rate(metric_new, c.aggregate)).collect();
    let ratio = delta_value(&old_values, &new_values)?;
    Ok(TrackReorder {
        track_id: track_id.to_owned(),
        metric_old,
        metric_new,
        pool_size: report.pool_size,
        max_delta_sort: report.max_delta_sort,
        kendall_tau: tau,
        mean_delta_value: ratio,
        systems: report.rows,
    })
}

/// Cross-track aggregation of per-track reordering outcomes.
#[derive(Debug, Clone, Serialize)]
pub struct ReorderReport {
    pub metric_old: Metric,
    pub metric_new: Metric,
    pub tracks: Vec<TrackReorder>,
    pub delta_sort: CrossTrackStat,
    pub kendall: CrossTrackStat,
    pub delta_value: CrossTrackStat,
}

pub fn reorder_report(
    metric_old: Metric,
    metric_new: Metric,
    tracks: Vec<TrackReorder>,
    kind: StdDevKind,
) -> Result<ReorderReport, StatsError> {
    let max_sorts: Vec<f64> = tracks.iter().map(|t| t.max_delta_sort).collect();
    let taus: Vec<f64> = tracks.iter().map(|t| t.kendall_tau).collect();
    let ratios: Vec<f64> = tracks.iter().map(|t| t.mean_delta_value).collect();
    Ok(ReorderReport {
        metric_old,
        metric_new,
        delta_sort: cross_track_summary(&max_sorts, kind)?,
        kendall: cross_track_summary(&taus, kind)?,
        delta_value: cross_track_summary(&ratios, kind)?,
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn t_test_identical_sequences() {
        let a = [0.3, 0.5, 0.7, 0.2];
        assert_relative_eq!(paired_t_test(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn t_test_constant_shift_underflows() {
        let a: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|v| v - 1.0).collect();
        let p = paired_t_test(&a, &b).unwrap();
        assert!(p < 1e-12, "p = {p}");
    }

    #[test]
    fn t_test_frozen_reference_value() {
        // Reference p computed with an independent statistics package
        // before implementation and frozen here.
        let a = [0.9, 0.8, 0.7, 0.6];
        let b = [0.5, 0.4, 0.35, 0.3];
        let p = paired_t_test(&a, &b).unwrap();
        assert_relative_eq!(p, 6.250418029416883e-4, max_relative = 1e-9);
    }

    #[test]
    fn t_test_pairing_errors() {
        assert!(matches!(
            paired_t_test(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            paired_t_test(&[1.0], &[1.0]),
            Err(StatsError::TooFewSamples { .. })
        ));
        let a = [("q1".to_owned(), 0.4), ("q2".to_owned(), 0.5)];
        let b = [("q1".to_owned(), 0.4), ("q3".to_owned(), 0.5)];
        assert!(matches!(
            paired_t_test_keyed(&a, &b),
            Err(StatsError::UnmatchedQuery(_))
        ));
    }

    #[test]
    fn t_test_keyed_ignores_order() {
        let a = [("q2".to_owned(), 0.9), ("q1".to_owned(), 0.8)];
        let b = [("q1".to_owned(), 0.7), ("q2".to_owned(), 0.6)];
        let p = paired_t_test_keyed(&a, &b).unwrap();
        assert!(p.is_finite());
    }

    #[test]
    fn significance_boundary_cases() {
        let config = SignificanceConfig::default();
        let queries_a = [0.55; 8];
        let queries_b = [0.50; 8];
        // Exactly 10% gain with p ~ 0 passes.
        assert!(significantly_better(
            0.55,
            0.50,
            &queries_a,
            &queries_b,
            Orientation::HigherBetter,
            &config
        )
        .unwrap());
        // 4% gain fails regardless of p.
        assert!(!significantly_better(
            0.52,
            0.50,
            &[0.52; 8],
            &queries_b,
            Orientation::HigherBetter,
            &config
        )
        .unwrap());
        // Lower-better orientation: 27 vs 39 is a 30.8% gain.
        let a = [27.0; 8];
        let b = [39.0; 8];
        assert!(significantly_better(
            27.0,
            39.0,
            &a,
            &b,
            Orientation::LowerBetter,
            &config
        )
        .unwrap());
    }

    #[test]
    fn significance_never_mutual() {
        let config = SignificanceConfig::default();
        let a = [0.9, 0.7, 0.8, 0.6];
        let b = [0.4, 0.3, 0.5, 0.2];
        let ab = significantly_better(0.75, 0.35, &a, &b, Orientation::HigherBetter, &config)
            .unwrap();
        let ba = significantly_better(0.35, 0.75, &b, &a, Orientation::HigherBetter, &config)
            .unwrap();
        assert!(ab && !ba);
    }

    #[test]
    fn delta_sort_formula() {
        // 4 systems; under the new metric, system "s3" has two significantly
        // better rivals instead of zero.
        let mk = |id: &str, agg: f64| MetricColumn {
            system_id: id.to_owned(),
            aggregate: agg,
            per_query: vec![agg; 6],
        };
        let old = vec![mk("s0", 0.9), mk("s1", 0.5), mk("s2", 0.4), mk("s3", 1.0)];
        let new = vec![mk("s0", 0.9), mk("s1", 0.5), mk("s2", 0.4), mk("s3", 0.45)];
        let report = delta_sort(
            &old,
            Orientation::HigherBetter,
            &new,
            Orientation::HigherBetter,
            &SignificanceConfig::default(),
        )
        .unwrap();
        let s3 = report.rows.iter().find(|r| r.system_id == "s3").unwrap();
        assert_eq!((s3.n0, s3.n1), (0, 2));
        assert_relative_eq!(s3.delta_sort, 50.0);
        assert_relative_eq!(report.max_delta_sort, 50.0);
    }

    #[test]
    fn delta_sort_identical_metrics_is_zero() {
        let mk = |id: &str, agg: f64| MetricColumn {
            system_id: id.to_owned(),
            aggregate: agg,
            per_query: vec![agg; 4],
        };
        let cols = vec![mk("a", 0.8), mk("b", 0.5), mk("c", 0.2)];
        let report = delta_sort(
            &cols,
            Orientation::HigherBetter,
            &cols,
            Orientation::HigherBetter,
            &SignificanceConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(report.max_delta_sort, 0.0);
    }

    #[test]
    fn kendall_tau_basics() {
        assert_relative_eq!(
            kendall_tau_b(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            1.0
        );
        assert_relative_eq!(
            kendall_tau_b(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        // Orderings [1,2,3,4] vs [1,3,2,4]: 5 concordant, 1 discordant.
        assert_relative_eq!(
            kendall_tau_b(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        // Tie-aware value frozen from an independent statistics package.
        assert_relative_eq!(
            kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 3.0]).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert!(matches!(
            kendall_tau_b(&[1.0], &[1.0]),
            Err(StatsError::TooFewSamples { .. })
        ));
        assert!(matches!(
            kendall_tau_b(&[1.0, 1.0], &[1.0, 2.0]),
            Err(StatsError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn kendall_oriented_flips_lower_better() {
        // MAP 0.9 > 0.5 and ASL 3 < 20 prefer the same system.
        let old = [(0.9, Orientation::HigherBetter), (0.5, Orientation::HigherBetter)];
        let new = [(3.0, Orientation::LowerBetter), (20.0, Orientation::LowerBetter)];
        assert_relative_eq!(kendall_tau_oriented(&old, &new).unwrap(), 1.0);
    }

    #[test]
    fn delta_value_cases() {
        assert_relative_eq!(delta_value(&[0.4, 0.5], &[0.4, 0.5]).unwrap(), 1.0);
        assert_relative_eq!(delta_value(&[0.4, 0.5], &[0.2, 0.25]).unwrap(), 0.5);
        assert_relative_eq!(delta_value(&[0.5], &[1.0 / 25.0]).unwrap(), 0.08);
        assert!(matches!(
            delta_value(&[0.0], &[1.0]),
            Err(StatsError::UndefinedRatio)
        ));
    }

    #[test]
    fn cross_track_ranges() {
        let s = cross_track_summary(&[50.0, 50.0, 50.0], StdDevKind::Population).unwrap();
        assert_relative_eq!(s.lo, 50.0);
        assert_relative_eq!(s.hi, 50.0);
        let s = cross_track_summary(&[26.0, 60.0], StdDevKind::Population).unwrap();
        assert_relative_eq!(s.mean, 43.0);
        assert_relative_eq!(s.stddev, 17.0);
        assert_relative_eq!(s.lo, 26.0);
        assert_relative_eq!(s.hi, 60.0);
        let s = cross_track_summary(&[26.0, 60.0], StdDevKind::Sample).unwrap();
        assert!(s.stddev > 17.0);
    }
}
