//! Ranked-retrieval evaluation built around atomized search length: the
//! per-relevant-document count of irrelevant documents ranked above it,
//! averaged without weighting, scaling, or cross-document coupling.
//!
//! Modules:
//!
//! * [`trec`] - qrels and run file parsing, track directory discovery.
//! * [`metrics`] - per-document evaluation, search-length and
//!   precision-family aggregates, the MAP-to-reciprocal ablation chain,
//!   and relative reduction in error.
//! * [`stats`] - the two-part significance predicate, per-system sort
//!   displacement, Kendall tau, value ratios, cross-track summaries.
//! * [`insight`] - search-length and delta histograms, headroom tables,
//!   and the arithmetic-vs-harmonic averaging oracles.
//! * [`synth`] - seeded synthetic instances and search-length pools.

pub mod insight;
pub mod metrics;
pub mod stats;
pub mod synth;
pub mod trec;

pub use insight::{
    asl_histogram, delta_histogram, effective_top_fraction, headroom_table, median_system,
    p_space_average_sl, two_value_limit, weighted_identity_check, AslHistogram, DeltaHistogram,
    HistogramSpec, InsightError, PartitionResult,
};
pub use metrics::{
    aggregate, asl_all, asl_at_g, compute_scores, evaluate_query, evaluate_run,
    mean_average_precision, rrie, AblationStage, Metric, MetricError, MetricFamily, MetricValue,
    Orientation, PerDocEval, QueryEval, SystemEval, SystemScores,
};
pub use stats::{
    cross_track_summary, delta_sort, delta_value, kendall_tau_b, paired_t_test,
    reorder_report, reorder_track, significantly_better, CrossTrackStat, MetricColumn,
    ReorderReport, SignificanceConfig, StatsError, StdDevKind, TrackReorder,
};
pub use trec::{
    discover_track, DiscoverOptions, DuplicatePolicy, Judgment, OrderingPolicy, Qrels, RunList,
    TrackBundle, TrecError,
};
