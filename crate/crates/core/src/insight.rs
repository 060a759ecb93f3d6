//! Analysis artifacts: per-document search-length histograms, pairwise
//! delta histograms, per-track headroom tables, and the numerical checks
//! behind arithmetic-vs-harmonic rate averaging.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{Metric, Orientation, QueryEval, SystemScores};

#[derive(Debug, Error)]
pub enum InsightError {
    #[error("invalid histogram spec: {0}")]
    InvalidSpec(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("evaluations do not cover the same documents: {0}")]
    DocMismatch(String),
}

/// Bucket layout for search-length and delta histograms.
///
/// Edges are ascending; bucket `i` covers `[edges[i], edges[i+1])`. With
/// `overflow_missing`, unretrieved documents land in a trailing overflow
/// bucket; retrieved values at or beyond the last edge land there too.
/// Signed specs (for delta histograms) carry symmetric edges around zero
/// and gain two outer overflow buckets.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramSpec {
    pub bucket_edges: Vec<f64>,
    pub overflow_missing: bool,
    pub signed: bool,
}

impl HistogramSpec {
    /// Geometric base-2 edges 1, 2, 4, ... covering `max_value`.
    pub fn geometric(max_value: f64, overflow_missing: bool) -> Self {
        Self {
            bucket_edges: geometric_edges(max_value),
            overflow_missing,
            signed: false,
        }
    }

    /// Symmetric signed edges `-m_k .. -m_1, m_1 .. m_k` from positive
    /// magnitudes.
    pub fn signed_from_magnitudes(magnitudes: &[f64]) -> Self {
        let mut edges: Vec<f64> = magnitudes.iter().rev().map(|m| -m).collect();
        edges.extend_from_slice(magnitudes);
        Self {
            bucket_edges: edges,
            overflow_missing: false,
            signed: true,
        }
    }

    pub fn validate(&self) -> Result<(), InsightError> {
        if self.bucket_edges.len() < 2 {
            return Err(InsightError::InvalidSpec(
                "need at least two bucket edges".into(),
            ));
        }
        if self.bucket_edges.iter().any(|e| !e.is_finite()) {
            return Err(InsightError::InvalidSpec("edges must be finite".into()));
        }
        if self.bucket_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InsightError::InvalidSpec(
                "edges must be strictly increasing".into(),
            ));
        }
        if self.signed {
            let n = self.bucket_edges.len();
            if n % 2 != 0 {
                return Err(InsightError::InvalidSpec(
                    "signed edges must pair up symmetrically".into(),
                ));
            }
            for i in 0..n / 2 {
                if self.bucket_edges[i] != -self.bucket_edges[n - 1 - i] {
                    return Err(InsightError::InvalidSpec(
                        "signed edges must be symmetric around zero".into(),
                    ));
                }
            }
            if self.bucket_edges[n / 2] <= 0.0 {
                return Err(InsightError::InvalidSpec(
                    "signed edges must exclude zero".into(),
                ));
            }
        }
        Ok(())
    }

    /// Positive half of a signed spec's edges.
    fn magnitudes(&self) -> &[f64] {
        &self.bucket_edges[self.bucket_edges.len() / 2..]
    }
}

/// Base-2 geometric edges starting at 1 and strictly covering `max_value`.
pub fn geometric_edges(max_value: f64) -> Vec<f64> {
    let mut edges = vec![1.0, 2.0];
    while *edges.last().expect("nonempty") <= max_value {
        let next = edges.last().unwrap() * 2.0;
        edges.push(next);
    }
    edges
}

/// Counts of per-document search lengths per bucket.
#[derive(Debug, Clone, Serialize)]
pub struct AslHistogram {
    pub edges: Vec<f64>,
    /// One count per `[edges[i], edges[i+1])` bucket.
    pub counts: Vec<u64>,
    /// Missing documents (when requested) and values beyond the last edge.
    pub overflow: u64,
}

impl AslHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

/// Buckets per-document search lengths for one evaluated system.
pub fn asl_histogram(
    queries: &[QueryEval],
    spec: &HistogramSpec,
) -> Result<AslHistogram, InsightError> {
    spec.validate()?;
    if spec.signed {
        return Err(InsightError::InvalidSpec(
            "search-length histograms use unsigned edges".into(),
        ));
    }
    let edges = &spec.bucket_edges;
    let mut counts = vec![0u64; edges.len() - 1];
    let mut overflow = 0u64;
    for query in queries {
        for doc in &query.docs {
            if spec.overflow_missing && !doc.retrieved {
                overflow += 1;
                continue;
            }
            let value = doc.asl as f64;
            if value >= *edges.last().expect("nonempty") {
                overflow += 1;
            } else {
                // Degenerate missing documents carry value 0, below the
                // leading edge of 1; clamp into the first bucket.
                let idx = edges.partition_point(|e| *e <= value).saturating_sub(1);
                let last = counts.len() - 1;
                counts[idx.min(last)] += 1;
            }
        }
    }
    Ok(AslHistogram {
        edges: edges.clone(),
        counts,
        overflow,
    })
}

/// Signed per-document delta histogram between two systems.
///
/// Bucket order runs most-negative to most-positive: negative overflow,
/// mirrored negative buckets, the zero-containing bucket, positive buckets,
/// positive overflow. Negative deltas are wins for the first system.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaHistogram {
    /// Positive magnitude edges; buckets mirror around zero.
    pub magnitudes: Vec<f64>,
    pub counts: Vec<u64>,
}

impl DeltaHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Inclusive-exclusive bounds of bucket `i`; outer buckets are
    /// unbounded.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let k = self.magnitudes.len();
        debug_assert!(i < 2 * k + 1);
        if i == 0 {
            (f64::NEG_INFINITY, -self.magnitudes[k - 1])
        } else if i < k {
            (-self.magnitudes[k - i], -self.magnitudes[k - i - 1])
        } else if i == k {
            (-self.magnitudes[0], self.magnitudes[0])
        } else if i < 2 * k {
            (self.magnitudes[i - k - 1], self.magnitudes[i - k])
        } else {
            (self.magnitudes[k - 1], f64::INFINITY)
        }
    }

    pub fn zero_bucket(&self) -> usize {
        self.magnitudes.len()
    }
}

/// Per-document `asl(a) - asl(b)` deltas matched by (query, doc). Both
/// evaluations must cover the same judged-relevant pairs, which holds for
/// any two systems evaluated on the same qrels.
pub fn per_doc_deltas(a: &[QueryEval], b: &[QueryEval]) -> Result<Vec<f64>, InsightError> {
    let mut b_asl: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for query in b {
        for doc in &query.docs {
            b_asl.insert((query.query_id.as_str(), doc.doc_id.as_str()), doc.asl);
        }
    }
    let a_total: usize = a.iter().map(|q| q.docs.len()).sum();
    if a_total != b_asl.len() {
        return Err(InsightError::DocMismatch(format!(
            "{a_total} documents vs {}",
            b_asl.len()
        )));
    }
    let mut deltas = Vec::with_capacity(a_total);
    for query in a {
        for doc in &query.docs {
            let rival = b_asl
                .get(&(query.query_id.as_str(), doc.doc_id.as_str()))
                .ok_or_else(|| {
                    InsightError::DocMismatch(format!(
                        "({}, {}) only in first evaluation",
                        query.query_id, doc.doc_id
                    ))
                })?;
            deltas.push(doc.asl as f64 - *rival as f64);
        }
    }
    Ok(deltas)
}

/// Buckets per-document `asl(a) - asl(b)` deltas into a signed histogram.
pub fn delta_histogram(
    a: &[QueryEval],
    b: &[QueryEval],
    spec: &HistogramSpec,
) -> Result<DeltaHistogram, InsightError> {
    spec.validate()?;
    if !spec.signed {
        return Err(InsightError::InvalidSpec(
            "delta histograms need a signed spec".into(),
        ));
    }
    let magnitudes = spec.magnitudes().to_vec();
    let k = magnitudes.len();
    let mut counts = vec![0u64; 2 * k + 1];
    {
        for delta in per_doc_deltas(a, b)? {
            let magnitude = delta.abs();
            let idx = if magnitude < magnitudes[0] {
                k
            } else {
                // Band index by magnitude; the outermost band is overflow.
                let band = magnitudes.partition_point(|m| *m <= magnitude) - 1;
                let band = band.min(k - 1);
                if delta > 0.0 {
                    k + 1 + band
                } else {
                    k - 1 - band
                }
            };
            counts[idx] += 1;
        }
    }
    Ok(DeltaHistogram { magnitudes, counts })
}

fn goodness(value: f64, orientation: Orientation) -> f64 {
    match orientation {
        Orientation::HigherBetter => value,
        Orientation::LowerBetter => -value,
    }
}

/// Orders systems best-first under the metric's orientation, ties broken by
/// system id.
fn orientation_sorted(values: &[(String, f64)], orientation: Orientation) -> Vec<(String, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| {
        goodness(b.1, orientation)
            .partial_cmp(&goodness(a.1, orientation))
            .expect("finite metric values")
            .then_with(|| a.0.cmp(&b.0))
    });
    sorted
}

/// The system at index `(n - 1) / 2` of the best-first ordering; for even
/// pools this is the better of the two middle systems.
pub fn median_system(values: &[(String, f64)], orientation: Orientation) -> Option<String> {
    if values.is_empty() {
        return None;
    }
    let sorted = orientation_sorted(values, orientation);
    Some(sorted[(sorted.len() - 1) / 2].0.clone())
}

/// The best system and its value under the metric's orientation.
pub fn best_system(values: &[(String, f64)], orientation: Orientation) -> Option<(String, f64)> {
    if values.is_empty() {
        return None;
    }
    let sorted = orientation_sorted(values, orientation);
    Some(sorted[0].clone())
}

/// One track's best value per reported metric.
#[derive(Debug, Clone, Serialize)]
pub struct HeadroomRow {
    pub track_id: String,
    pub entries: Vec<HeadroomEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeadroomEntry {
    pub metric: Metric,
    pub best_value: f64,
    pub best_system: String,
}

/// All systems of one track, scored.
#[derive(Debug, Clone)]
pub struct TrackScores {
    pub track_id: String,
    pub systems: Vec<SystemScores>,
}

/// Distribution of per-track best values for one metric (the data behind
/// the cross-track quality figures).
#[derive(Debug, Clone, Serialize)]
pub struct BestValueDistribution {
    pub metric: Metric,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Per-track best systems for each metric, plus the cross-track bucketed
/// distribution of those best values.
pub fn headroom_table(
    tracks: &[TrackScores],
    metrics: &[Metric],
) -> Result<(Vec<HeadroomRow>, Vec<BestValueDistribution>), InsightError> {
    let mut rows = Vec::with_capacity(tracks.len());
    let mut best_per_metric: BTreeMap<Metric, Vec<f64>> = BTreeMap::new();
    for track in tracks {
        let mut entries = Vec::with_capacity(metrics.len());
        for &metric in metrics {
            let values: Vec<(String, f64)> = track
                .systems
                .iter()
                .filter_map(|s| s.get(metric).map(|v| (s.system_id.clone(), v.aggregate)))
                .collect();
            let (best_system, best_value) = best_system(&values, metric.orientation())
                .ok_or_else(|| {
                    InsightError::InvalidInput(format!(
                        "track {} has no system scored under {metric}",
                        track.track_id
                    ))
                })?;
            best_per_metric.entry(metric).or_default().push(best_value);
            entries.push(HeadroomEntry {
                metric,
                best_value,
                best_system,
            });
        }
        rows.push(HeadroomRow {
            track_id: track.track_id.clone(),
            entries,
        });
    }
    let mut distributions = Vec::new();
    for &metric in metrics {
        let values = &best_per_metric[&metric];
        let edges = match metric.orientation() {
            Orientation::HigherBetter => (0..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>(),
            Orientation::LowerBetter => {
                let max = values.iter().cloned().fold(1.0, f64::max);
                geometric_edges(max)
            }
        };
        distributions.push(BestValueDistribution {
            metric,
            counts: value_histogram(values, &edges),
            edges,
        });
    }
    Ok((rows, distributions))
}

/// Clamping histogram over fixed edges: bucket `i` is `[e_i, e_{i+1})`, the
/// last bucket is right-closed, and out-of-range values land in the end
/// buckets. Mass is always conserved.
pub fn value_histogram(values: &[f64], edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len() - 1];
    for &v in values {
        let idx = edges.partition_point(|e| *e <= v);
        let idx = idx.saturating_sub(1).min(counts.len() - 1);
        counts[idx] += 1;
    }
    counts
}

fn check_search_lengths(values: &[f64]) -> Result<(), InsightError> {
    if values.is_empty() {
        return Err(InsightError::InvalidInput("empty search-length input".into()));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 1.0) {
        return Err(InsightError::InvalidInput(
            "search lengths must be finite and >= 1".into(),
        ));
    }
    Ok(())
}

/// The search length implied by averaging these values in rate space:
/// the reciprocal of the mean reciprocal, i.e. the harmonic mean.
pub fn p_space_average_sl(search_lengths: &[f64]) -> Result<f64, InsightError> {
    check_search_lengths(search_lengths)?;
    let mean_rate = search_lengths.iter().map(|sl| 1.0 / sl).sum::<f64>()
        / search_lengths.len() as f64;
    Ok(1.0 / mean_rate)
}

/// Equivalent search lengths of rate-space averages of `(sl1, sl2)` pairs.
/// As `sl2` grows the output converges to `2 * sl1` rather than growing.
pub fn two_value_limit(sl1: f64, sl2_values: &[f64]) -> Result<Vec<f64>, InsightError> {
    check_search_lengths(&[sl1])?;
    check_search_lengths(sl2_values)?;
    sl2_values
        .iter()
        .map(|&sl2| p_space_average_sl(&[sl1, sl2]))
        .collect()
}

/// Verifies that the unweighted rate-space average equals the weighted
/// search-length average with weights `1/sl`, computing both sides
/// independently.
pub fn weighted_identity_check(
    search_lengths: &[f64],
    tolerance: f64,
) -> Result<bool, InsightError> {
    check_search_lengths(search_lengths)?;
    let n = search_lengths.len() as f64;
    let rate_side = n / search_lengths.iter().map(|sl| 1.0 / sl).sum::<f64>();
    let weights: Vec<f64> = search_lengths.iter().map(|sl| 1.0 / sl).collect();
    let weighted_sum: f64 = search_lengths
        .iter()
        .zip(&weights)
        .map(|(sl, w)| sl * w)
        .sum();
    let weight_total: f64 = weights.iter().sum();
    let weighted_side = weighted_sum / weight_total;
    let scale = rate_side.abs().max(weighted_side.abs()).max(1.0);
    Ok((rate_side - weighted_side).abs() <= tolerance * scale)
}

/// The prefix of best-ranked documents whose plain search-length average
/// best matches the rate-space average of the whole pool.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartitionResult {
    /// Number of documents in the chosen prefix.
    pub n: usize,
    /// `n` over the pool size.
    pub fraction: f64,
    /// Rate-space average of the whole pool, in search-length space.
    pub target_sl: f64,
    /// Plain average of the chosen prefix.
    pub achieved_sl: f64,
}

/// Sorts search lengths ascending (best precision first) and finds the
/// prefix whose unweighted mean is closest to the rate-space average of the
/// full pool. Ties pick the smaller prefix, so an all-equal pool picks a
/// single document.
pub fn effective_top_fraction(search_lengths: &[f64]) -> Result<PartitionResult, InsightError> {
    check_search_lengths(search_lengths)?;
    let mut sorted = search_lengths.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let target = p_space_average_sl(&sorted)?;
    let mut best_n = 1;
    let mut best_mean = sorted[0];
    let mut best_distance = (sorted[0] - target).abs();
    let mut running = 0.0;
    for (i, sl) in sorted.iter().enumerate() {
        running += sl;
        let mean = running / (i + 1) as f64;
        let distance = (mean - target).abs();
        if distance < best_distance {
            best_distance = distance;
            best_n = i + 1;
            best_mean = mean;
        }
    }
    Ok(PartitionResult {
        n: best_n,
        fraction: best_n as f64 / sorted.len() as f64,
        target_sl: target,
        achieved_sl: best_mean,
    })
}

/// Per-query effective-top fractions and their mean across queries.
pub fn effective_top_fraction_per_query(
    groups: &[Vec<f64>],
) -> Result<(f64, Vec<PartitionResult>), InsightError> {
    if groups.is_empty() {
        return Err(InsightError::InvalidInput("no query groups".into()));
    }
    let results: Vec<PartitionResult> = groups
        .iter()
        .map(|g| effective_top_fraction(g))
        .collect::<Result<_, _>>()?;
    let mean = results.iter().map(|r| r.fraction).sum::<f64>() / results.len() as f64;
    Ok((mean, results))
}

/// Per-document search lengths of one evaluated system, grouped per query.
/// Degenerate queries (zero-length fallback) are skipped.
pub fn search_length_groups(queries: &[QueryEval]) -> Vec<Vec<f64>> {
    queries
        .iter()
        .filter(|q| !q.is_degenerate())
        .map(|q| q.docs.iter().map(|d| d.asl as f64).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_query;
    use crate::trec::Qrels;
    use approx::assert_relative_eq;

    fn fixture_q1() -> QueryEval {
        let mut qrels = Qrels::new(1);
        qrels.insert("q1", "d1", 1).unwrap();
        qrels.insert("q1", "d4", 1).unwrap();
        qrels.insert("q1", "d9", 1).unwrap();
        qrels.insert("q1", "d2", 0).unwrap();
        let ranked: Vec<(String, f64)> = ["d1", "d2", "d3", "d4", "d5"]
            .iter()
            .enumerate()
            .map(|(i, d)| (d.to_string(), -(i as f64)))
            .collect();
        evaluate_query(&qrels, "q1", &ranked).unwrap()
    }

    #[test]
    fn histogram_simple_counting() {
        // ASLs {1,1,1,3,3} with edges [1,2,4,8] -> [3,2,0].
        let mut qrels = Qrels::new(1);
        for d in ["a", "b", "c", "d", "e"] {
            qrels.insert("q", d, 1).unwrap();
        }
        let ranked: Vec<(String, f64)> = ["a", "b", "c", "x", "y", "d", "e"]
            .iter()
            .enumerate()
            .map(|(i, d)| (d.to_string(), -(i as f64)))
            .collect();
        let eval = evaluate_query(&qrels, "q", &ranked).unwrap();
        let spec = HistogramSpec {
            bucket_edges: vec![1.0, 2.0, 4.0, 8.0],
            overflow_missing: true,
            signed: false,
        };
        let hist = asl_histogram(std::slice::from_ref(&eval), &spec).unwrap();
        assert_eq!(hist.counts, [3, 2, 0]);
        assert_eq!(hist.overflow, 0);
        assert_eq!(hist.total(), 5);
    }

    #[test]
    fn histogram_missing_overflow() {
        let eval = fixture_q1();
        let spec = HistogramSpec {
            bucket_edges: vec![1.0, 2.0, 4.0, 8.0],
            overflow_missing: true,
            signed: false,
        };
        let hist = asl_histogram(std::slice::from_ref(&eval), &spec).unwrap();
        assert_eq!(hist.counts, [1, 1, 0]);
        assert_eq!(hist.overflow, 1);
        assert_eq!(hist.total(), eval.docs.len() as u64);
    }

    #[test]
    fn histogram_optimal_mass_in_first_bucket() {
        let mut qrels = Qrels::new(1);
        for d in ["a", "b"] {
            qrels.insert("q", d, 1).unwrap();
        }
        let ranked: Vec<(String, f64)> =
            [("a".to_string(), 2.0), ("b".to_string(), 1.0)].to_vec();
        let eval = evaluate_query(&qrels, "q", &ranked).unwrap();
        let spec = HistogramSpec::geometric(8.0, true);
        let hist = asl_histogram(&[eval], &spec).unwrap();
        assert_eq!(hist.counts[0], 2);
        assert_eq!(hist.counts.iter().skip(1).sum::<u64>() + hist.overflow, 0);
    }

    #[test]
    fn delta_histogram_zero_and_swap() {
        let eval = fixture_q1();
        let spec = HistogramSpec::signed_from_magnitudes(&[1.0, 2.0, 4.0]);
        let hist = delta_histogram(
            std::slice::from_ref(&eval),
            std::slice::from_ref(&eval),
            &spec,
        )
        .unwrap();
        assert_eq!(hist.total(), 3);
        assert_eq!(hist.counts[hist.zero_bucket()], 3);
        assert!(hist
            .counts
            .iter()
            .enumerate()
            .all(|(i, c)| i == hist.zero_bucket() || *c == 0));
    }

    #[test]
    fn delta_histogram_single_shift() {
        // Same qrels, system A ranks the hit 10 irrelevant docs higher.
        let mut qrels = Qrels::new(1);
        qrels.insert("q", "hit", 1).unwrap();
        let mk = |lead: usize| -> QueryEval {
            let mut ids: Vec<(String, f64)> = (0..lead)
                .map(|i| (format!("junk{i}"), 100.0 - i as f64))
                .collect();
            ids.push(("hit".to_string(), 0.0));
            evaluate_query(&qrels, "q", &ids).unwrap()
        };
        let a = mk(0); // asl 1
        let b = mk(10); // asl 11
        let spec = HistogramSpec::signed_from_magnitudes(&[1.0, 4.0, 16.0]);
        let hist = delta_histogram(&[a.clone()], &[b.clone()], &spec).unwrap();
        // delta = 1 - 11 = -10, in the (-16, -4] band.
        let (lo, hi) = (hist.bounds(1).0, hist.bounds(1).1);
        assert_eq!((lo, hi), (-16.0, -4.0));
        assert_eq!(hist.counts[1], 1);
        // Swapping operands mirrors the histogram.
        let swapped = delta_histogram(&[b], &[a], &spec).unwrap();
        let mut reversed = swapped.counts.clone();
        reversed.reverse();
        assert_eq!(hist.counts, reversed);
    }

    #[test]
    fn delta_histogram_detects_mismatch() {
        let eval = fixture_q1();
        let mut qrels = Qrels::new(1);
        qrels.insert("q9", "z", 1).unwrap();
        let other = evaluate_query(&qrels, "q9", &[("z".to_string(), 1.0)]).unwrap();
        let spec = HistogramSpec::signed_from_magnitudes(&[1.0, 2.0]);
        assert!(delta_histogram(&[eval], &[other], &spec).is_err());
    }

    #[test]
    fn signed_spec_validation() {
        assert!(HistogramSpec::signed_from_magnitudes(&[1.0, 2.0, 4.0])
            .validate()
            .is_ok());
        let bad = HistogramSpec {
            bucket_edges: vec![-2.0, -1.0, 1.0, 3.0],
            overflow_missing: false,
            signed: true,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn median_conventions() {
        let one = vec![("only".to_string(), 0.4)];
        assert_eq!(median_system(&one, Orientation::HigherBetter).unwrap(), "only");
        let three = vec![
            ("a".to_string(), 0.9),
            ("b".to_string(), 0.5),
            ("c".to_string(), 0.1),
        ];
        assert_eq!(median_system(&three, Orientation::HigherBetter).unwrap(), "b");
        // Even pool: index (4-1)/2 = 1 of the best-first ordering.
        let four = vec![
            ("a".to_string(), 10.0),
            ("b".to_string(), 20.0),
            ("c".to_string(), 30.0),
            ("d".to_string(), 40.0),
        ];
        assert_eq!(median_system(&four, Orientation::LowerBetter).unwrap(), "b");
    }

    #[test]
    fn p_space_average_examples() {
        let v = p_space_average_sl(&[1.0, 1000.0]).unwrap();
        assert_relative_eq!(v, 2.0 / (1.0 + 1.0 / 1000.0), epsilon = 1e-12);
        assert!((1.99..=2.01).contains(&v));
        let list = [1.0, 1.0, 1.0, 2.0, 4.0, 5.0, 10.0, 10000.0, 10000.0];
        assert_relative_eq!(p_space_average_sl(&list).unwrap(), 2.2221, epsilon = 1e-4);
        assert_relative_eq!(p_space_average_sl(&[7.0, 7.0, 7.0]).unwrap(), 7.0);
    }

    #[test]
    fn two_value_limit_converges() {
        let sl2: Vec<f64> = (1..=6).map(|e| 10f64.powi(e)).collect();
        let out = two_value_limit(5.0, &sl2).unwrap();
        assert!(out.windows(2).all(|w| w[0] < w[1]), "monotone increasing");
        let last = *out.last().unwrap();
        assert!((last - 10.0).abs() / 10.0 < 0.01);
        assert_relative_eq!(
            two_value_limit(4.0, &[4.0]).unwrap()[0],
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn weighted_identity_examples() {
        assert!(weighted_identity_check(&[1.0, 1000.0], 1e-12).unwrap());
        assert!(weighted_identity_check(&[7.0], 1e-12).unwrap());
    }

    #[test]
    fn effective_top_fraction_examples() {
        let r = effective_top_fraction(&[1.0, 1000.0]).unwrap();
        assert_eq!(r.n, 1);
        assert_relative_eq!(r.fraction, 0.5);
        assert_relative_eq!(r.achieved_sl, 1.0);
        // All-equal pool: every prefix hits the target; tie rule picks n=1.
        let r = effective_top_fraction(&[6.0, 6.0, 6.0, 6.0]).unwrap();
        assert_eq!(r.n, 1);
        assert_relative_eq!(r.fraction, 0.25);
    }

    #[test]
    fn per_query_fraction_averages() {
        let groups = vec![vec![1.0, 1000.0], vec![3.0, 3.0, 3.0]];
        let (mean, results) = effective_top_fraction_per_query(&groups).unwrap();
        assert_eq!(results.len(), 2);
        assert_relative_eq!(mean, (0.5 + 1.0 / 3.0) / 2.0);
    }

    #[test]
    fn value_histogram_clamps_and_conserves() {
        let edges = [0.0, 0.5, 1.0];
        assert_eq!(value_histogram(&[0.1, 0.5, 1.0, 2.0], &edges), [1, 3]);
    }
}
