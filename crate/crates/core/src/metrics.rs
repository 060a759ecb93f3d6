//! Per-document and aggregate retrieval metrics.
//!
//! The central quantity is the atomized search length of a judged-relevant
//! document: the number of irrelevant documents ranked above it, plus one.
//! It is "atomized" because other relevant documents never affect it. A
//! relevant document the system did not retrieve is assigned the total count
//! of irrelevant documents the system predicted for that query.
//!
//! Aggregation is a plain two-level unweighted mean: per-document values are
//! averaged within each query, then across queries. The precision-family
//! baselines (AP/MAP, P@k, MRR) and the three intermediates that morph MAP
//! into reciprocal search length (M1, M2, M3) live here too.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::trec::{Qrels, RunList};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric undefined over an empty query set")]
    EmptyQuerySet,
    #[error("degenerate query {query}: no irrelevant predictions to stand in for a missing document")]
    DegenerateQuery { query: String },
    #[error("baseline has zero error ({value}); relative reduction undefined")]
    ZeroErrorBaseline { value: f64 },
    #[error("invalid metric input: {0}")]
    InvalidValue(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Evaluation record for one judged-relevant (query, document) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerDocEval {
    pub query_id: String,
    pub doc_id: String,
    pub retrieved: bool,
    /// 1-based rank in the system's list; `None` when not retrieved.
    pub rank: Option<u64>,
    /// Relevant documents ranked above this one.
    pub rel_above: u64,
    /// Irrelevant (judged-irrelevant or unjudged) documents ranked above.
    pub irrel_above: u64,
    /// `irrel_above + 1` when retrieved; the query's total irrelevant
    /// prediction count when not.
    pub asl: u64,
    /// `(rel_above + 1) / rank` when retrieved; `0.0` when not.
    pub precision: f64,
}

/// All per-document records for one query, one system.
///
/// `docs` holds exactly one record per judged-relevant document: retrieved
/// ones first in rank order, then unretrieved ones in doc-id order.
#[derive(Debug, Clone, Serialize)]
pub struct QueryEval {
    pub query_id: String,
    pub n_rel: usize,
    /// Total irrelevant documents among the system's predictions.
    pub irrel_total: u64,
    pub docs: Vec<PerDocEval>,
}

impl QueryEval {
    /// True when a missing document had to fall back on an empty irrelevant
    /// count. Reciprocal-space metrics are undefined here.
    pub fn is_degenerate(&self) -> bool {
        self.irrel_total == 0 && self.docs.iter().any(|d| !d.retrieved)
    }

    /// Mean per-document search length.
    pub fn asl_mean(&self) -> f64 {
        let total: u64 = self.docs.iter().map(|d| d.asl).sum();
        total as f64 / self.n_rel as f64
    }

    /// Mean search length of the first `min(n, n_rel)` documents in
    /// `docs` order.
    pub fn asl_at_g(&self, n: usize) -> f64 {
        let take = n.min(self.n_rel);
        let total: u64 = self.docs.iter().take(take).map(|d| d.asl).sum();
        total as f64 / take as f64
    }

    /// Average precision: mean of per-document precisions, missing docs
    /// contributing zero.
    pub fn average_precision(&self) -> f64 {
        let total: f64 = self.docs.iter().map(|d| d.precision).sum();
        total / self.n_rel as f64
    }

    pub fn precision_at(&self, k: usize) -> f64 {
        let hits = self
            .docs
            .iter()
            .filter(|d| matches!(d.rank, Some(r) if r <= k as u64))
            .count();
        hits as f64 / k as f64
    }

    /// Reciprocal rank of the first retrieved relevant document, or zero.
    pub fn reciprocal_rank(&self) -> f64 {
        self.docs
            .iter()
            .filter_map(|d| d.rank)
            .min()
            .map_or(0.0, |r| 1.0 / r as f64)
    }

    /// Arithmetic mean of atomized per-document precisions `1/asl`.
    /// `None` on degenerate queries.
    pub fn atomized_precision_mean(&self) -> Option<f64> {
        if self.is_degenerate() {
            return None;
        }
        let total: f64 = self.docs.iter().map(|d| 1.0 / d.asl as f64).sum();
        Some(total / self.n_rel as f64)
    }

    /// Harmonic mean of atomized per-document precisions; algebraically the
    /// reciprocal of `asl_mean`. `None` on degenerate queries.
    pub fn atomized_precision_harmonic(&self) -> Option<f64> {
        if self.is_degenerate() {
            return None;
        }
        let total: u64 = self.docs.iter().map(|d| d.asl).sum();
        Some(self.n_rel as f64 / total as f64)
    }
}

/// Evaluates one query against one ranked list.
///
/// Returns `None` when the query has no judged-relevant document; such
/// queries contribute no per-document terms and are excluded from averages.
/// Documents missing from the ranking get `asl = irrel_total` and zero
/// precision.
pub fn evaluate_query(qrels: &Qrels, query_id: &str, ranked: &[(String, f64)]) -> Option<QueryEval> {
    let relevant: BTreeSet<&str> = qrels.relevant_docs(query_id).collect();
    if relevant.is_empty() {
        return None;
    }
    let mut docs = Vec::with_capacity(relevant.len());
    let mut rel_seen: u64 = 0;
    let mut irrel_seen: u64 = 0;
    for (position, (doc_id, _score)) in ranked.iter().enumerate() {
        if relevant.contains(doc_id.as_str()) {
            let rank = position as u64 + 1;
            docs.push(PerDocEval {
                query_id: query_id.to_owned(),
                doc_id: doc_id.clone(),
                retrieved: true,
                rank: Some(rank),
                rel_above: rel_seen,
                irrel_above: irrel_seen,
                asl: irrel_seen + 1,
                precision: (rel_seen + 1) as f64 / rank as f64,
            });
            rel_seen += 1;
        } else {
            // Unjudged retrieved documents count as irrelevant.
            irrel_seen += 1;
        }
    }
    let irrel_total = irrel_seen;
    let found: BTreeSet<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    for doc_id in relevant {
        if !found.contains(doc_id) {
            docs.push(PerDocEval {
                query_id: query_id.to_owned(),
                doc_id: doc_id.to_owned(),
                retrieved: false,
                rank: None,
                rel_above: 0,
                irrel_above: irrel_total,
                asl: irrel_total,
                precision: 0.0,
            });
        }
    }
    Some(QueryEval {
        query_id: query_id.to_owned(),
        n_rel: docs.len(),
        irrel_total,
        docs,
    })
}

/// One system evaluated over every judged query of a qrels set.
#[derive(Debug, Clone, Serialize)]
pub struct SystemEval {
    pub system_id: String,
    /// Per-query evaluations in query-id order; queries without relevant
    /// documents are excluded.
    pub queries: Vec<QueryEval>,
    pub warnings: Vec<String>,
}

impl SystemEval {
    pub fn degenerate_queries(&self) -> Vec<&str> {
        self.queries
            .iter()
            .filter(|q| q.is_degenerate())
            .map(|q| q.query_id.as_str())
            .collect()
    }
}

/// Evaluates a run against qrels.
///
/// Every qrels query with at least one relevant document is evaluated, even
/// if the run retrieved nothing for it. Queries the run predicts but the
/// qrels never judged are dropped with a warning.
pub fn evaluate_run(qrels: &Qrels, run: &RunList) -> SystemEval {
    let mut warnings = Vec::new();
    let mut queries = Vec::new();
    for query_id in qrels.queries() {
        let ranked = run.ranking(query_id).unwrap_or(&[]);
        if let Some(eval) = evaluate_query(qrels, query_id, ranked) {
            if eval.is_degenerate() {
                warnings.push(format!(
                    "{}: query {query_id} is degenerate (missing relevant documents \
                     but no irrelevant predictions)",
                    run.system_id()
                ));
            }
            queries.push(eval);
        }
    }
    for query_id in run.queries() {
        if !qrels.contains_query(query_id) {
            warnings.push(format!(
                "{}: query {query_id} not present in qrels; dropped",
                run.system_id()
            ));
        }
    }
    SystemEval {
        system_id: run.system_id().to_owned(),
        queries,
        warnings,
    }
}

/// Which way a metric improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// Value space a metric lives in; decides RRIE form and ratio transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricFamily {
    /// Rates in [0, 1], higher better.
    Precision,
    /// Search lengths >= 1, lower better.
    SearchLength,
}

/// The three intermediates between MAP and reciprocal search length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AblationStage {
    /// Per-document precision replaced by 1/asl; arithmetic means kept.
    AtomizePrecision,
    /// Harmonic mean over documents within a query, arithmetic across queries.
    HarmonicWithinQuery,
    /// Harmonic mean at both levels.
    HarmonicBothLevels,
}

/// A named metric, aggregate over a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Asl,
    /// Mean search length over the first n relevant documents per query.
    AslAtG(u32),
    Map,
    PrecisionAtK(u32),
    Mrr,
    /// Ablation stage M1.
    AtomizedPrecision,
    /// Ablation stage M2.
    HarmonicWithinQuery,
    /// Ablation stage M3; identically 1 / ASL.
    HarmonicBothLevels,
}

impl Metric {
    pub fn orientation(&self) -> Orientation {
        match self.family() {
            MetricFamily::Precision => Orientation::HigherBetter,
            MetricFamily::SearchLength => Orientation::LowerBetter,
        }
    }

    pub fn family(&self) -> MetricFamily {
        match self {
            Metric::Asl | Metric::AslAtG(_) => MetricFamily::SearchLength,
            _ => MetricFamily::Precision,
        }
    }

    pub fn ablation_stage(&self) -> Option<AblationStage> {
        match self {
            Metric::AtomizedPrecision => Some(AblationStage::AtomizePrecision),
            Metric::HarmonicWithinQuery => Some(AblationStage::HarmonicWithinQuery),
            Metric::HarmonicBothLevels => Some(AblationStage::HarmonicBothLevels),
            _ => None,
        }
    }

    /// True for metrics built from reciprocal search lengths, which are
    /// undefined on degenerate queries.
    pub fn needs_nonzero_asl(&self) -> bool {
        self.ablation_stage().is_some()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Asl => write!(f, "ASL"),
            Metric::AslAtG(n) => write!(f, "ASL@g1-{n}"),
            Metric::Map => write!(f, "MAP"),
            Metric::PrecisionAtK(k) => write!(f, "P@{k}"),
            Metric::Mrr => write!(f, "MRR"),
            Metric::AtomizedPrecision => write!(f, "M1"),
            Metric::HarmonicWithinQuery => write!(f, "M2"),
            Metric::HarmonicBothLevels => write!(f, "M3"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let parse_suffix = |suffix: &str| -> Result<u32, MetricError> {
            let value: u32 = suffix
                .parse()
                .map_err(|_| MetricError::InvalidParameter(format!("bad metric {s:?}")))?;
            if value == 0 {
                return Err(MetricError::InvalidParameter(format!(
                    "bad metric {s:?}: cutoff must be >= 1"
                )));
            }
            Ok(value)
        };
        match lower.as_str() {
            "asl" => Ok(Metric::Asl),
            "map" => Ok(Metric::Map),
            "mrr" => Ok(Metric::Mrr),
            "m1" => Ok(Metric::AtomizedPrecision),
            "m2" => Ok(Metric::HarmonicWithinQuery),
            "m3" => Ok(Metric::HarmonicBothLevels),
            "asl@g1" => Ok(Metric::AslAtG(1)),
            _ => {
                if let Some(suffix) = lower.strip_prefix("asl@g1-") {
                    Ok(Metric::AslAtG(parse_suffix(suffix)?))
                } else if let Some(suffix) = lower.strip_prefix("p@") {
                    Ok(Metric::PrecisionAtK(parse_suffix(suffix)?))
                } else {
                    Err(MetricError::InvalidParameter(format!(
                        "unknown metric {s:?}"
                    )))
                }
            }
        }
    }
}

fn require_nonempty(queries: &[QueryEval]) -> Result<(), MetricError> {
    if queries.is_empty() {
        Err(MetricError::EmptyQuerySet)
    } else {
        Ok(())
    }
}

/// Mean over queries of the per-query mean per-document search length.
pub fn asl_all(queries: &[QueryEval]) -> Result<f64, MetricError> {
    require_nonempty(queries)?;
    let total: f64 = queries.iter().map(QueryEval::asl_mean).sum();
    Ok(total / queries.len() as f64)
}

/// As [`asl_all`], restricted to the first `min(n, n_rel)` relevant
/// documents per query (retrieved in rank order, then missing).
pub fn asl_at_g(queries: &[QueryEval], n: usize) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidParameter("g cutoff must be >= 1".into()));
    }
    require_nonempty(queries)?;
    let total: f64 = queries.iter().map(|q| q.asl_at_g(n)).sum();
    Ok(total / queries.len() as f64)
}

/// Mean average precision.
pub fn mean_average_precision(queries: &[QueryEval]) -> Result<f64, MetricError> {
    require_nonempty(queries)?;
    let total: f64 = queries.iter().map(QueryEval::average_precision).sum();
    Ok(total / queries.len() as f64)
}

pub fn precision_at_k(queries: &[QueryEval], k: usize) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidParameter("k cutoff must be >= 1".into()));
    }
    require_nonempty(queries)?;
    let total: f64 = queries.iter().map(|q| q.precision_at(k)).sum();
    Ok(total / queries.len() as f64)
}

pub fn mean_reciprocal_rank(queries: &[QueryEval]) -> Result<f64, MetricError> {
    require_nonempty(queries)?;
    let total: f64 = queries.iter().map(QueryEval::reciprocal_rank).sum();
    Ok(total / queries.len() as f64)
}

/// Aggregate one ablation intermediate over a query set.
///
/// Errors if any query is degenerate; callers exclude those queries first
/// and surface a warning.
pub fn ablation_metric(queries: &[QueryEval], stage: AblationStage) -> Result<f64, MetricError> {
    require_nonempty(queries)?;
    if let Some(q) = queries.iter().find(|q| q.is_degenerate()) {
        return Err(MetricError::DegenerateQuery {
            query: q.query_id.clone(),
        });
    }
    match stage {
        AblationStage::AtomizePrecision => {
            let total: f64 = queries
                .iter()
                .map(|q| q.atomized_precision_mean().expect("not degenerate"))
                .sum();
            Ok(total / queries.len() as f64)
        }
        AblationStage::HarmonicWithinQuery => {
            let total: f64 = queries
                .iter()
                .map(|q| q.atomized_precision_harmonic().expect("not degenerate"))
                .sum();
            Ok(total / queries.len() as f64)
        }
        AblationStage::HarmonicBothLevels => {
            // Harmonic of per-query harmonics: |Q| / sum of per-query mean ASLs,
            // which is exactly 1 / asl_all.
            let total: f64 = queries.iter().map(QueryEval::asl_mean).sum();
            Ok(queries.len() as f64 / total)
        }
    }
}

/// Aggregate value of `metric` over a query set.
pub fn aggregate(queries: &[QueryEval], metric: Metric) -> Result<f64, MetricError> {
    match metric {
        Metric::Asl => asl_all(queries),
        Metric::AslAtG(n) => asl_at_g(queries, n as usize),
        Metric::Map => mean_average_precision(queries),
        Metric::PrecisionAtK(k) => precision_at_k(queries, k as usize),
        Metric::Mrr => mean_reciprocal_rank(queries),
        Metric::AtomizedPrecision => ablation_metric(queries, AblationStage::AtomizePrecision),
        Metric::HarmonicWithinQuery => {
            ablation_metric(queries, AblationStage::HarmonicWithinQuery)
        }
        Metric::HarmonicBothLevels => ablation_metric(queries, AblationStage::HarmonicBothLevels),
    }
}

/// Per-query value of `metric` for one query.
///
/// For M3 this is the same per-query harmonic as M2: M3 differs only in how
/// queries are aggregated, so significance tests share the series.
pub fn per_query_value(query: &QueryEval, metric: Metric) -> Result<f64, MetricError> {
    match metric {
        Metric::Asl => Ok(query.asl_mean()),
        Metric::AslAtG(n) => {
            if n == 0 {
                return Err(MetricError::InvalidParameter("g cutoff must be >= 1".into()));
            }
            Ok(query.asl_at_g(n as usize))
        }
        Metric::Map => Ok(query.average_precision()),
        Metric::PrecisionAtK(k) => {
            if k == 0 {
                return Err(MetricError::InvalidParameter("k cutoff must be >= 1".into()));
            }
            Ok(query.precision_at(k as usize))
        }
        Metric::Mrr => Ok(query.reciprocal_rank()),
        Metric::AtomizedPrecision => {
            query
                .atomized_precision_mean()
                .ok_or_else(|| MetricError::DegenerateQuery {
                    query: query.query_id.clone(),
                })
        }
        Metric::HarmonicWithinQuery | Metric::HarmonicBothLevels => query
            .atomized_precision_harmonic()
            .ok_or_else(|| MetricError::DegenerateQuery {
                query: query.query_id.clone(),
            }),
    }
}

/// Aggregate plus the per-query series backing significance tests.
#[derive(Debug, Clone, Serialize)]
pub struct MetricValue {
    pub aggregate: f64,
    /// (query-id, value) in query-id order.
    pub per_query: Vec<(String, f64)>,
}

/// All requested metric values for one system over one track.
#[derive(Debug, Clone, Serialize)]
pub struct SystemScores {
    pub system_id: String,
    pub scores: Vec<(Metric, MetricValue)>,
    /// Metrics that could not be computed, with the reason. Reciprocal-space
    /// metrics land here when every query is degenerate.
    pub degenerate: Vec<(Metric, String)>,
    /// Queries excluded from reciprocal-space metrics.
    pub excluded_queries: Vec<String>,
}

impl SystemScores {
    pub fn get(&self, metric: Metric) -> Option<&MetricValue> {
        self.scores
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|(_, v)| v)
    }
}

/// Computes the requested metrics for one evaluated system.
///
/// Degenerate queries are excluded from reciprocal-space metrics (M1-M3)
/// and recorded in `excluded_queries`; all other metrics use every query.
pub fn compute_scores(eval: &SystemEval, metrics: &[Metric]) -> Result<SystemScores, MetricError> {
    require_nonempty(&eval.queries)?;
    let clean: Vec<QueryEval> = eval
        .queries
        .iter()
        .filter(|q| !q.is_degenerate())
        .cloned()
        .collect();
    let excluded: Vec<String> = eval
        .queries
        .iter()
        .filter(|q| q.is_degenerate())
        .map(|q| q.query_id.clone())
        .collect();
    let mut scores = Vec::new();
    let mut degenerate = Vec::new();
    for &metric in metrics {
        let pool: &[QueryEval] = if metric.needs_nonzero_asl() {
            &clean
        } else {
            &eval.queries
        };
        if pool.is_empty() {
            degenerate.push((metric, "all queries degenerate".to_owned()));
            continue;
        }
        let aggregate = aggregate(pool, metric)?;
        let per_query = pool
            .iter()
            .map(|q| per_query_value(q, metric).map(|v| (q.query_id.clone(), v)))
            .collect::<Result<Vec<_>, _>>()?;
        scores.push((metric, MetricValue { aggregate, per_query }));
    }
    Ok(SystemScores {
        system_id: eval.system_id.clone(),
        scores,
        degenerate,
        excluded_queries: excluded,
    })
}

/// Relative reduction in error between a baseline and an improved value.
///
/// Precision-style: `((1-base) - (1-new)) / (1-base)`.
/// Search-length-style: `((base-1) - (new-1)) / (base-1)`.
/// Negative when the candidate is worse; never clamped.
pub fn rrie(baseline: f64, improved: f64, family: MetricFamily) -> Result<f64, MetricError> {
    if !baseline.is_finite() || !improved.is_finite() {
        return Err(MetricError::InvalidValue("non-finite value".into()));
    }
    match family {
        MetricFamily::Precision => {
            if !(0.0..=1.0).contains(&baseline) || !(0.0..=1.0).contains(&improved) {
                return Err(MetricError::InvalidValue(format!(
                    "precision values must lie in [0, 1]; got {baseline} and {improved}"
                )));
            }
            if baseline >= 1.0 {
                return Err(MetricError::ZeroErrorBaseline { value: baseline });
            }
            Ok((improved - baseline) / (1.0 - baseline))
        }
        MetricFamily::SearchLength => {
            if baseline < 1.0 || improved < 1.0 {
                return Err(MetricError::InvalidValue(format!(
                    "search lengths must be >= 1; got {baseline} and {improved}"
                )));
            }
            if baseline <= 1.0 {
                return Err(MetricError::ZeroErrorBaseline { value: baseline });
            }
            Ok((baseline - improved) / (baseline - 1.0))
        }
    }
}
