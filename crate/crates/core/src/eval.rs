//! Binary-relevance retrieval metrics: Accuracy@k (hit rate), Precision@k,
//! Recall@k, MRR@k and NDCG@k.
//!
//! Queries without judgments are skipped. A judged query that the run does
//! not cover scores 0 on every metric. Top-k means the first
//! `min(k, ranking length)` documents.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::QrelSet;
use crate::math::log2;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredDoc {
    pub id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(id: impl Into<String>, score: f64) -> Self {
        Self {
            id: id.into(),
            score,
        }
    }
}

/// Per-query rankings produced by one system.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Run {
    pub tag: String,
    rankings: BTreeMap<String, Vec<ScoredDoc>>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            rankings: BTreeMap::new(),
        }
    }

    /// Insert an already ordered ranking. Ids must be unique and scores
    /// finite and non-increasing.
    pub fn insert(&mut self, query_id: impl Into<String>, ranking: Vec<ScoredDoc>) -> Result<()> {
        let query_id = query_id.into();
        if let Some(msg) = ranking_problem(&ranking) {
            return Err(Error::InvalidRanking(query_id, msg));
        }
        if self.rankings.contains_key(&query_id) {
            return Err(Error::DuplicateId(query_id));
        }
        self.rankings.insert(query_id, ranking);
        Ok(())
    }

    /// Insert `(id, score)` pairs in any order; they are sorted by score
    /// descending with ties broken by ascending id.
    pub fn insert_unsorted(
        &mut self,
        query_id: impl Into<String>,
        hits: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<()> {
        let mut ranking: Vec<ScoredDoc> = hits.into_iter().map(|(id, s)| ScoredDoc::new(id, s)).collect();
        sort_ranking(&mut ranking);
        self.insert(query_id, ranking)
    }

    pub fn get(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.rankings.get(query_id).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ScoredDoc])> {
        self.rankings.iter().map(|(q, r)| (q.as_str(), r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }
}

/// Sort by score descending, then id ascending.
pub fn sort_ranking(ranking: &mut [ScoredDoc]) {
    ranking.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
}

fn ranking_problem(ranking: &[ScoredDoc]) -> Option<String> {
    if ranking.iter().any(|d| !d.score.is_finite()) {
        return Some("non-finite score".into());
    }
    if ranking.windows(2).any(|w| w[0].score < w[1].score) {
        return Some("scores are not non-increasing".into());
    }
    let mut seen = BTreeSet::new();
    for d in ranking {
        if !seen.insert(d.id.as_str()) {
            return Some(format!("document `{}` appears twice", d.id));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    Mrr,
    Ndcg,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::Mrr,
        Metric::Ndcg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Mrr => "mrr",
            Metric::Ndcg => "ndcg",
        }
    }

    /// Report key, e.g. `ndcg@10`.
    pub fn key(self, k: usize) -> String {
        format!("{}@{k}", self.name())
    }

    /// Metric value for one ranking against its relevant set.
    pub fn compute(self, ranking: &[ScoredDoc], relevant: &BTreeMap<String, u32>, k: usize) -> f64 {
        let top = &ranking[..k.min(ranking.len())];
        let is_rel = |d: &ScoredDoc| relevant.contains_key(&d.id);
        match self {
            Metric::Accuracy => {
                if top.iter().any(is_rel) {
                    1.0
                } else {
                    0.0
                }
            }
            Metric::Precision => top.iter().filter(|d| is_rel(d)).count() as f64 / k as f64,
            Metric::Recall => {
                top.iter().filter(|d| is_rel(d)).count() as f64 / relevant.len() as f64
            }
            Metric::Mrr => top
                .iter()
                .position(is_rel)
                .map_or(0.0, |i| 1.0 / (i + 1) as f64),
            Metric::Ndcg => {
                let dcg: f64 = top
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| is_rel(d))
                    .map(|(i, _)| discount(i))
                    .sum();
                let ideal: f64 = (0..k.min(relevant.len())).map(discount).sum();
                dcg / ideal
            }
        }
    }
}

/// `1 / log2(rank + 1)` for 0-based position `i`.
fn discount(i: usize) -> f64 {
    1.0 / log2((i + 2) as f64)
}

impl core::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

/// Per-query values of one metric and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValues {
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
}

fn mean(values: &BTreeMap<String, f64>) -> f64 {
    values.values().sum::<f64>() / values.len() as f64
}

/// Judged queries with at least one relevant document, provided the run
/// covers at least one of them.
fn evaluable<'a>(run: &Run, qrels: &'a QrelSet) -> Result<Vec<(&'a str, &'a BTreeMap<String, u32>)>> {
    let judged: Vec<_> = qrels.iter().filter(|(_, r)| !r.is_empty()).collect();
    if !judged.iter().any(|(q, _)| run.get(q).is_some()) {
        return Err(Error::NoEvaluableQueries);
    }
    Ok(judged)
}

pub fn metric_at_k(run: &Run, qrels: &QrelSet, metric: Metric, k: usize) -> Result<MetricValues> {
    if k == 0 {
        return Err(Error::Config("cutoff k must be >= 1".into()));
    }
    let per_query: BTreeMap<String, f64> = evaluable(run, qrels)?
        .into_iter()
        .map(|(q, rel)| {
            let v = run.get(q).map_or(0.0, |r| metric.compute(r, rel, k));
            (q.into(), v)
        })
        .collect();
    let mean = mean(&per_query);
    Ok(MetricValues { per_query, mean })
}

pub fn recall_at_k(run: &Run, qrels: &QrelSet, k: usize) -> Result<MetricValues> {
    metric_at_k(run, qrels, Metric::Recall, k)
}

pub fn precision_at_k(run: &Run, qrels: &QrelSet, k: usize) -> Result<MetricValues> {
    metric_at_k(run, qrels, Metric::Precision, k)
}

pub fn accuracy_at_k(run: &Run, qrels: &QrelSet, k: usize) -> Result<MetricValues> {
    metric_at_k(run, qrels, Metric::Accuracy, k)
}

pub fn mrr_at_k(run: &Run, qrels: &QrelSet, k: usize) -> Result<MetricValues> {
    metric_at_k(run, qrels, Metric::Mrr, k)
}

pub fn ndcg_at_k(run: &Run, qrels: &QrelSet, k: usize) -> Result<MetricValues> {
    metric_at_k(run, qrels, Metric::Ndcg, k)
}

/// All five metrics at every cutoff, keyed `metric@k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub tag: String,
    pub k_values: Vec<usize>,
    pub evaluated_queries: usize,
    pub aggregate: BTreeMap<String, f64>,
    pub per_query: BTreeMap<String, BTreeMap<String, f64>>,
}

impl MetricReport {
    pub fn get(&self, metric: Metric, k: usize) -> Option<f64> {
        self.aggregate.get(&metric.key(k)).copied()
    }

    pub fn metric_keys(&self) -> impl Iterator<Item = &str> {
        self.aggregate.keys().map(String::as_str)
    }

    /// Metric keys in presentation order: by cutoff, then by metric.
    pub fn ordered_keys(&self) -> Vec<String> {
        self.k_values
            .iter()
            .flat_map(|&k| Metric::ALL.into_iter().map(move |m| m.key(k)))
            .filter(|key| self.aggregate.contains_key(key))
            .collect()
    }
}

pub fn evaluate_run(run: &Run, qrels: &QrelSet, k_values: &[usize]) -> Result<MetricReport> {
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::Config("k_values must be non-empty and positive".into()));
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let queries = evaluable(run, qrels)?;
    let mut aggregate = BTreeMap::new();
    let mut per_query = BTreeMap::new();
    for &k in &ks {
        for metric in Metric::ALL {
            let values: BTreeMap<String, f64> = queries
                .iter()
                .map(|&(q, rel)| {
                    let v = run.get(q).map_or(0.0, |r| metric.compute(r, rel, k));
                    (q.into(), v)
                })
                .collect();
            aggregate.insert(metric.key(k), mean(&values));
            per_query.insert(metric.key(k), values);
        }
    }
    Ok(MetricReport {
        tag: run.tag.clone(),
        k_values: ks,
        evaluated_queries: queries.len(),
        aggregate,
        per_query,
    })
}
