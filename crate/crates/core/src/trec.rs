//! TREC-format qrels and run file parsing, plus track directory discovery.
//!
//! Qrels lines are `query-id iteration doc-id grade`; run lines are
//! `query-id Q0 doc-id rank score tag`. The iteration and rank columns are
//! ignored. Doc ids are opaque byte strings compared lexicographically.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrecError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate judgment for query {query} doc {doc}")]
    DuplicateJudgment {
        line: usize,
        query: String,
        doc: String,
    },
    #[error("line {line}: duplicate prediction for query {query} doc {doc}")]
    DuplicatePrediction {
        line: usize,
        query: String,
        doc: String,
    },
    #[error("track layout: {0}")]
    Layout(String),
    #[error("insufficient runs: found {found} valid runs, need at least {required}")]
    InsufficientRuns { found: usize, required: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a retrieved document relates to the relevance judgments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgment {
    Relevant,
    JudgedIrrelevant,
    Unjudged,
}

/// Per-query relevance judgments with a binarization threshold.
#[derive(Debug, Clone)]
pub struct Qrels {
    /// query-id -> doc-id -> graded relevance.
    judgments: BTreeMap<String, BTreeMap<String, i32>>,
    relevance_threshold: i32,
}

impl Qrels {
    pub fn new(relevance_threshold: i32) -> Self {
        Self {
            judgments: BTreeMap::new(),
            relevance_threshold,
        }
    }

    /// Parses the 4-column TREC qrels format.
    ///
    /// A document is relevant iff its grade is `>= threshold`. Grades may be
    /// zero or negative; such documents are judged-irrelevant.
    pub fn parse<R: Read>(source: R, threshold: i32) -> Result<Self, TrecError> {
        let mut qrels = Self::new(threshold);
        for (idx, line) in BufReader::new(source).lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 4 {
                return Err(TrecError::Malformed {
                    line: line_no,
                    message: format!("expected 4 columns, got {}", fields.len()),
                });
            }
            let grade: i32 = fields[3].parse().map_err(|_| TrecError::Malformed {
                line: line_no,
                message: format!("grade {:?} is not an integer", fields[3]),
            })?;
            qrels
                .insert(fields[0], fields[2], grade)
                .map_err(|(query, doc)| TrecError::DuplicateJudgment {
                    line: line_no,
                    query,
                    doc,
                })?;
        }
        Ok(qrels)
    }

    /// Adds one judgment; rejects duplicate (query, doc) pairs.
    pub fn insert(
        &mut self,
        query: &str,
        doc: &str,
        grade: i32,
    ) -> Result<(), (String, String)> {
        match self
            .judgments
            .entry(query.to_owned())
            .or_default()
            .entry(doc.to_owned())
        {
            Entry::Vacant(slot) => {
                slot.insert(grade);
                Ok(())
            }
            Entry::Occupied(_) => Err((query.to_owned(), doc.to_owned())),
        }
    }

    pub fn relevance_threshold(&self) -> i32 {
        self.relevance_threshold
    }

    pub fn grade(&self, query: &str, doc: &str) -> Option<i32> {
        self.judgments.get(query).and_then(|docs| docs.get(doc)).copied()
    }

    pub fn classify(&self, query: &str, doc: &str) -> Judgment {
        match self.grade(query, doc) {
            Some(g) if g >= self.relevance_threshold => Judgment::Relevant,
            Some(_) => Judgment::JudgedIrrelevant,
            None => Judgment::Unjudged,
        }
    }

    pub fn is_relevant(&self, query: &str, doc: &str) -> bool {
        self.classify(query, doc) == Judgment::Relevant
    }

    /// Query ids in lexicographic order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn contains_query(&self, query: &str) -> bool {
        self.judgments.contains_key(query)
    }

    /// Judged-relevant doc ids for one query, in lexicographic order.
    pub fn relevant_docs(&self, query: &str) -> impl Iterator<Item = &str> {
        let threshold = self.relevance_threshold;
        self.judgments
            .get(query)
            .into_iter()
            .flatten()
            .filter(move |(_, grade)| **grade >= threshold)
            .map(|(doc, _)| doc.as_str())
    }

    pub fn num_relevant(&self, query: &str) -> usize {
        self.relevant_docs(query).count()
    }

    /// Every judged (doc, grade) pair for one query, in doc-id order.
    pub fn judged_docs(&self, query: &str) -> impl Iterator<Item = (&str, i32)> {
        self.judgments
            .get(query)
            .into_iter()
            .flatten()
            .map(|(doc, grade)| (doc.as_str(), *grade))
    }

    pub fn num_judgments(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }
}

/// Whether per-query rankings follow the score column or the file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingPolicy {
    /// Sort by score descending, ties broken by doc-id descending.
    #[default]
    ByScore,
    /// Keep the file's line order within each query.
    ByFileOrder,
}

/// What to do with a duplicated (query, doc) prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Error,
    /// Keep the occurrence with the highest score and record a warning.
    KeepBestScore,
}

/// One system's ranked output over all queries.
#[derive(Debug, Clone)]
pub struct RunList {
    system_id: String,
    /// query-id -> (doc-id, score), ordered per `ordering_policy`.
    rankings: BTreeMap<String, Vec<(String, f64)>>,
    ordering_policy: OrderingPolicy,
}

impl RunList {
    /// Parses the 6-column TREC run format. The `Q0` literal is not enforced
    /// and the rank column is ignored.
    pub fn parse<R: Read>(
        source: R,
        system_id: &str,
        policy: OrderingPolicy,
    ) -> Result<Self, TrecError> {
        let (run, warnings) =
            Self::parse_with(source, system_id, policy, DuplicatePolicy::Error)?;
        debug_assert!(warnings.is_empty());
        Ok(run)
    }

    /// As [`RunList::parse`], with explicit duplicate handling. Returns any
    /// dedupe warnings alongside the run.
    pub fn parse_with<R: Read>(
        source: R,
        system_id: &str,
        policy: OrderingPolicy,
        duplicates: DuplicatePolicy,
    ) -> Result<(Self, Vec<String>), TrecError> {
        let mut rankings: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        let mut seen: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut warnings = Vec::new();
        for (idx, line) in BufReader::new(source).lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 6 {
                return Err(TrecError::Malformed {
                    line: line_no,
                    message: format!("expected 6 columns, got {}", fields.len()),
                });
            }
            let (query, doc) = (fields[0], fields[2]);
            let score: f64 = fields[4].parse().map_err(|_| TrecError::Malformed {
                line: line_no,
                message: format!("score {:?} is not a number", fields[4]),
            })?;
            if !score.is_finite() {
                return Err(TrecError::Malformed {
                    line: line_no,
                    message: format!("score {score} is not finite"),
                });
            }
            match seen.entry((query.to_owned(), doc.to_owned())) {
                Entry::Vacant(slot) => {
                    slot.insert(score);
                }
                Entry::Occupied(mut slot) => match duplicates {
                    DuplicatePolicy::Error => {
                        return Err(TrecError::DuplicatePrediction {
                            line: line_no,
                            query: query.to_owned(),
                            doc: doc.to_owned(),
                        })
                    }
                    DuplicatePolicy::KeepBestScore => {
                        warnings.push(format!(
                            "{system_id}: line {line_no}: duplicate prediction \
                             for query {query} doc {doc}; keeping best score"
                        ));
                        if score > *slot.get() {
                            slot.insert(score);
                        }
                        continue;
                    }
                },
            }
            rankings
                .entry(query.to_owned())
                .or_default()
                .push((doc.to_owned(), score));
        }
        let mut run = Self {
            system_id: system_id.to_owned(),
            rankings,
            ordering_policy: policy,
        };
        if duplicates == DuplicatePolicy::KeepBestScore {
            for (query, docs) in run.rankings.iter_mut() {
                for (doc, score) in docs.iter_mut() {
                    *score = seen[&(query.clone(), doc.clone())];
                }
            }
        }
        if policy == OrderingPolicy::ByScore {
            run.sort_by_score();
        }
        Ok((run, warnings))
    }

    /// Builds a run from already-ordered rankings, applying the policy.
    pub fn from_rankings(
        system_id: &str,
        rankings: BTreeMap<String, Vec<(String, f64)>>,
        policy: OrderingPolicy,
    ) -> Self {
        let mut run = Self {
            system_id: system_id.to_owned(),
            rankings,
            ordering_policy: policy,
        };
        if policy == OrderingPolicy::ByScore {
            run.sort_by_score();
        }
        run
    }

    fn sort_by_score(&mut self) {
        for docs in self.rankings.values_mut() {
            // Total order: score descending, then doc-id descending, matching
            // the reference evaluation tool's convention.
            docs.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .expect("scores are finite")
                    .then_with(|| b.0.cmp(&a.0))
            });
        }
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn ordering_policy(&self) -> OrderingPolicy {
        self.ordering_policy
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    pub fn ranking(&self, query: &str) -> Option<&[(String, f64)]> {
        self.rankings.get(query).map(Vec::as_slice)
    }

    pub fn num_queries(&self) -> usize {
        self.rankings.len()
    }

    /// Serializes back to the 6-column run format; the rank column is
    /// rewritten as 1..k in ranking order.
    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for (query, docs) in &self.rankings {
            for (rank, (doc, score)) in docs.iter().enumerate() {
                writeln!(
                    out,
                    "{query} Q0 {doc} {rank} {score} {tag}",
                    rank = rank + 1,
                    tag = self.system_id
                )
                .expect("string write");
            }
        }
        out
    }
}

/// One evaluation track: a qrels set plus every submitted run.
#[derive(Debug, Clone)]
pub struct TrackBundle {
    pub track_id: String,
    pub qrels: Qrels,
    pub runs: Vec<RunList>,
    pub warnings: Vec<String>,
}

/// Options for [`discover_track`].
#[derive(Debug, Clone)]
pub struct DiscoverOptions {
    /// Tracks with fewer than this many cleanly-parsed runs are rejected.
    pub min_runs: usize,
    pub relevance_threshold: i32,
    pub ordering_policy: OrderingPolicy,
    pub duplicates: DuplicatePolicy,
}

impl Default for DiscoverOptions {
    fn default() -> Self {
        Self {
            min_runs: 5,
            relevance_threshold: 1,
            ordering_policy: OrderingPolicy::ByScore,
            duplicates: DuplicatePolicy::Error,
        }
    }
}

/// Loads `<dir>/qrels.txt` and every file under `<dir>/runs/`.
///
/// Run files that fail to parse are skipped with a warning; the track is
/// rejected if fewer than `min_runs` runs parse cleanly. Run system ids are
/// the run file names (without extension), which are unique within a track.
pub fn discover_track(dir: &Path, options: &DiscoverOptions) -> Result<TrackBundle, TrecError> {
    let track_id = dir
        .file_name()
        .map(|name| name.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let qrels_path = dir.join("qrels.txt");
    if !qrels_path.is_file() {
        return Err(TrecError::Layout(format!(
            "missing qrels file {}",
            qrels_path.display()
        )));
    }
    let runs_dir = dir.join("runs");
    if !runs_dir.is_dir() {
        return Err(TrecError::Layout(format!(
            "missing runs directory {}",
            runs_dir.display()
        )));
    }
    let qrels = Qrels::parse(fs::File::open(&qrels_path)?, options.relevance_threshold)?;
    let (runs, warnings) = load_runs_dir(&runs_dir, options)?;
    if runs.len() < options.min_runs {
        return Err(TrecError::InsufficientRuns {
            found: runs.len(),
            required: options.min_runs,
        });
    }
    Ok(TrackBundle {
        track_id,
        qrels,
        runs,
        warnings,
    })
}

/// Parses every file in a runs directory, in file-name order. Unparseable
/// files are skipped with a warning.
pub fn load_runs_dir(
    runs_dir: &Path,
    options: &DiscoverOptions,
) -> Result<(Vec<RunList>, Vec<String>), TrecError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(runs_dir)?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let mut runs = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let system_id = path
            .file_stem()
            .map(|stem| stem.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let file = fs::File::open(&path)?;
        match RunList::parse_with(
            file,
            &system_id,
            options.ordering_policy,
            options.duplicates,
        ) {
            Ok((run, mut run_warnings)) => {
                warnings.append(&mut run_warnings);
                runs.push(run);
            }
            Err(err @ TrecError::Io(_)) => return Err(err),
            Err(err) => warnings.push(format!("skipping run {}: {err}", path.display())),
        }
    }
    Ok((runs, warnings))
}
