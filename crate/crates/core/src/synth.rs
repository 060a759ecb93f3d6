//! Seeded synthetic data: random ranked-retrieval instances for bulk
//! self-checks and long-tailed search-length pools for the averaging
//! oracles. Everything is deterministic given the seed.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::trec::{OrderingPolicy, Qrels, RunList};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of randomly generated evaluation instances.
#[derive(Debug, Clone)]
pub struct InstanceConfig {
    pub n_queries: usize,
    pub max_docs_per_query: usize,
    /// Upper bound for the per-query probability that a ranked doc is
    /// relevant (drawn per query from [0.05, this]).
    pub max_relevant_prob: f64,
    /// Maximum judged-relevant docs left out of the ranking per query.
    pub max_missing: usize,
    /// Guarantee at least one irrelevant prediction whenever a relevant
    /// doc is missing, so reciprocal-space metrics stay defined.
    pub avoid_degenerate: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            n_queries: 4,
            max_docs_per_query: 50,
            max_relevant_prob: 0.5,
            max_missing: 3,
            avoid_degenerate: false,
        }
    }
}

/// One random multi-query instance: judgments plus a ranked run.
///
/// Ranked docs are relevant with a per-query probability; a few judged
/// relevant docs may be missing from the ranking; roughly half the
/// irrelevant ranked docs are judged 0 and the rest left unjudged. Every
/// query has at least one relevant doc.
pub fn random_instance(rng: &mut ChaCha8Rng, config: &InstanceConfig) -> (Qrels, RunList) {
    let mut qrels = Qrels::new(1);
    let mut rankings: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for qi in 0..config.n_queries {
        let query = format!("q{qi:03}");
        let n_docs = rng.gen_range(1..=config.max_docs_per_query);
        let p_rel = rng.gen_range(0.05..=config.max_relevant_prob);
        let mut ranked = Vec::with_capacity(n_docs);
        let mut any_relevant = false;
        let mut any_irrelevant = false;
        for di in 0..n_docs {
            let doc = format!("{query}-d{di:04}");
            let score = (n_docs - di) as f64;
            if rng.gen_bool(p_rel) {
                qrels.insert(&query, &doc, 1).expect("unique doc ids");
                any_relevant = true;
            } else {
                any_irrelevant = true;
                // Judge about half of the irrelevant docs explicitly.
                if rng.gen_bool(0.5) {
                    qrels.insert(&query, &doc, 0).expect("unique doc ids");
                }
            }
            ranked.push((doc, score));
        }
        let n_missing = if config.max_missing > 0 && rng.gen_bool(0.5) {
            rng.gen_range(1..=config.max_missing)
        } else {
            0
        };
        for mi in 0..n_missing {
            let doc = format!("{query}-m{mi:02}");
            qrels.insert(&query, &doc, 1).expect("unique doc ids");
            any_relevant = true;
        }
        if !any_relevant {
            // Append a fresh relevant doc so the query stays judged.
            let doc = format!("{query}-rel");
            qrels.insert(&query, &doc, 1).expect("fresh id");
            ranked.push((doc, 0.5));
        }
        if config.avoid_degenerate && n_missing > 0 && !any_irrelevant {
            let doc = format!("{query}-pad");
            ranked.push((doc, 0.0));
        }
        rankings.insert(query, ranked);
    }
    let run = RunList::from_rankings("synthetic", rankings, OrderingPolicy::ByFileOrder);
    (qrels, run)
}

/// A random track: one qrels set and several systems ranking the same
/// document pool in different random orders.
pub fn random_track(
    rng: &mut ChaCha8Rng,
    n_systems: usize,
    n_queries: usize,
    docs_per_query: usize,
) -> (Qrels, Vec<RunList>) {
    let mut qrels = Qrels::new(1);
    let mut pools: Vec<(String, Vec<String>)> = Vec::new();
    for qi in 0..n_queries {
        let query = format!("q{qi:03}");
        let pool: Vec<String> = (0..docs_per_query)
            .map(|di| format!("{query}-d{di:04}"))
            .collect();
        let n_rel = rng.gen_range(1..=docs_per_query.div_ceil(3));
        for doc in pool.iter().take(n_rel) {
            qrels.insert(&query, doc, 1).expect("unique");
        }
        pools.push((query, pool));
    }
    let mut runs = Vec::with_capacity(n_systems);
    for si in 0..n_systems {
        let mut rankings: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (query, pool) in &pools {
            let mut scored: Vec<(String, f64)> = pool
                .iter()
                .map(|doc| (doc.clone(), rng.gen_range(0.0..1000.0)))
                .collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(b.0.cmp(&a.0)));
            rankings.insert(query.clone(), scored);
        }
        runs.push(RunList::from_rankings(
            &format!("sys{si:02}"),
            rankings,
            OrderingPolicy::ByFileOrder,
        ));
    }
    (qrels, runs)
}

/// Sorted log-uniform search lengths spanning exactly `[1, dispersion]`.
///
/// The endpoints are pinned so the pool's max/min ratio equals the
/// requested dispersion.
pub fn log_uniform_pool(rng: &mut ChaCha8Rng, size: usize, dispersion: f64) -> Vec<f64> {
    assert!(size >= 2, "pool needs at least two values");
    assert!(dispersion >= 1.0, "dispersion is a max/min ratio");
    let mut exponents: Vec<f64> = (0..size - 2).map(|_| rng.gen_range(0.0..=1.0)).collect();
    exponents.push(0.0);
    exponents.push(1.0);
    let mut pool: Vec<f64> = exponents.iter().map(|u| dispersion.powf(*u)).collect();
    pool.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pool
}

/// Per-query search-length pools for a whole synthetic corpus, shaped like
/// long-tailed retrieval outputs: most lengths small, dispersion drawn
/// log-uniformly per query.
pub fn synthetic_sl_corpus(
    seed: u64,
    n_tracks: usize,
    queries_per_track: usize,
    docs_per_query: usize,
) -> Vec<Vec<Vec<f64>>> {
    let mut rng = seeded_rng(seed);
    (0..n_tracks)
        .map(|_| {
            (0..queries_per_track)
                .map(|_| {
                    let dispersion = 10f64.powf(rng.gen_range(0.5..=3.5));
                    log_uniform_pool(&mut rng, docs_per_query, dispersion)
                })
                .collect()
        })
        .collect()
}
