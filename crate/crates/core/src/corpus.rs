//! Corpora, query sets, relevance judgments, pair splitting and
//! evaluation-corpus assembly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::{cosine_similarity, Embedder, TextKind};
use crate::math::floor;
use crate::text::{normalize, NormalizationConfig};
use crate::{Error, Result};

/// Prefix given to distractor ids when merging them into an evaluation corpus.
pub const DISTRACTOR_PREFIX: &str = "dx-";

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Document {
    pub id: String,
    pub text: String,
    pub title: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            title: None,
        }
    }

    /// Title and body joined for analysis.
    pub fn full_text(&self) -> String {
        match &self.title {
            Some(t) if !t.is_empty() => format!("{t} {}", self.text),
            _ => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// A user question and its correct answer.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QaPair {
    pub query: String,
    pub positive: String,
}

impl QaPair {
    pub fn new(query: impl Into<String>, positive: impl Into<String>) -> Result<Self> {
        let (query, positive) = (query.into(), positive.into());
        if query.trim().is_empty() || positive.trim().is_empty() {
            return Err(Error::Config("pair with empty query or positive".into()));
        }
        Ok(Self { query, positive })
    }
}

/// Where a document in an evaluation corpus came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Provenance {
    #[default]
    Unspecified,
    Relevant,
    Distractor,
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() {
        Err(Error::EmptyId)
    } else {
        Ok(())
    }
}

fn has_text(text: &str) -> bool {
    !normalize(text, &NormalizationConfig::default()).is_empty()
}

/// Documents with unique ids, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    provenance: Vec<Provenance>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut corpus = Self::new();
        for doc in docs {
            corpus.push(doc)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, doc: Document) -> Result<()> {
        self.push_with(doc, Provenance::Unspecified)
    }

    pub fn push_with(&mut self, doc: Document, provenance: Provenance) -> Result<()> {
        check_id(&doc.id)?;
        if self.by_id.contains_key(&doc.id) {
            return Err(Error::DuplicateId(doc.id));
        }
        if !has_text(&doc.text) {
            return Err(Error::EmptyText(doc.id));
        }
        self.by_id.insert(doc.id.clone(), self.docs.len());
        self.docs.push(doc);
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn provenance(&self, id: &str) -> Option<Provenance> {
        self.by_id.get(id).map(|&i| self.provenance[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Document, Provenance)> {
        self.docs.iter().zip(self.provenance.iter().copied())
    }
}

/// Queries with unique ids, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuerySet {
    queries: Vec<Query>,
    by_id: BTreeMap<String, usize>,
}

impl QuerySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_queries(queries: impl IntoIterator<Item = Query>) -> Result<Self> {
        let mut set = Self::new();
        for q in queries {
            set.push(q)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, query: Query) -> Result<()> {
        check_id(&query.id)?;
        if self.by_id.contains_key(&query.id) {
            return Err(Error::DuplicateId(query.id));
        }
        if !has_text(&query.text) {
            return Err(Error::EmptyText(query.id));
        }
        self.by_id.insert(query.id.clone(), self.queries.len());
        self.queries.push(query);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn get(&self, id: &str) -> Option<&Query> {
        self.by_id.get(id).map(|&i| &self.queries[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }
}

/// How relevance grades are interpreted when judgments are loaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelevanceMode {
    /// Only grade 1 (relevant) is admitted; grade 0 rows are dropped.
    #[default]
    Binary,
    /// Any grade >= 1 counts as relevant.
    Graded,
}

/// One qrels row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub query_id: String,
    pub doc_id: String,
    pub grade: u32,
}

impl Judgment {
    pub fn new(query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) -> Self {
        Self {
            query_id: query_id.into(),
            doc_id: doc_id.into(),
            grade,
        }
    }
}

/// Relevance judgments: query id -> (document id -> grade >= 1).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelSet {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

/// Result of building a [`QrelSet`] from raw rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QrelLoad {
    pub qrels: QrelSet,
    /// Number of grade-0 rows that were dropped.
    pub dropped_zero: usize,
}

impl QrelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validate and collect judgments. When `corpus`/`queries` are given,
    /// every referenced id must exist in them.
    pub fn from_judgments(
        rows: impl IntoIterator<Item = Judgment>,
        mode: RelevanceMode,
        corpus: Option<&Corpus>,
        queries: Option<&QuerySet>,
    ) -> Result<QrelLoad> {
        let mut qrels = Self::new();
        let mut dropped_zero = 0;
        for row in rows {
            check_id(&row.query_id)?;
            check_id(&row.doc_id)?;
            if let Some(qs) = queries {
                if !qs.contains(&row.query_id) {
                    return Err(Error::UnknownQuery(row.query_id));
                }
            }
            if let Some(c) = corpus {
                if !c.contains(&row.doc_id) {
                    return Err(Error::UnknownDocument(row.doc_id));
                }
            }
            if row.grade == 0 {
                dropped_zero += 1;
                continue;
            }
            if mode == RelevanceMode::Binary && row.grade != 1 {
                return Err(Error::NonBinaryGrade {
                    query: row.query_id,
                    doc: row.doc_id,
                    grade: row.grade,
                });
            }
            qrels.insert(row.query_id, row.doc_id, row.grade);
        }
        Ok(QrelLoad {
            qrels,
            dropped_zero,
        })
    }

    /// Insert a relevant judgment; grade 0 is ignored.
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        if grade == 0 {
            return;
        }
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn relevant(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn is_relevant(&self, query_id: &str, doc_id: &str) -> bool {
        self.judgments
            .get(query_id)
            .is_some_and(|r| r.contains_key(doc_id))
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.judgments.iter().map(|(q, r)| (q.as_str(), r))
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn num_judgments(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    /// Number of relevant documents per query.
    pub fn relevant_counts(&self) -> BTreeMap<&str, usize> {
        self.judgments
            .iter()
            .map(|(q, r)| (q.as_str(), r.len()))
            .collect()
    }

    /// Mean number of relevant documents per judged query (0 if none).
    pub fn avg_relevant_per_query(&self) -> f64 {
        if self.judgments.is_empty() {
            return 0.0;
        }
        self.num_judgments() as f64 / self.judgments.len() as f64
    }
}

/// Train / validation / test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fractions = [self.train, self.val, self.test];
        if fractions
            .iter()
            .any(|f| !f.is_finite() || !(0.0..=1.0).contains(f))
        {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Sizes of (train, val, test) for `n` items: validation and test are
    /// floor-allocated and the remainder goes to train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let alloc = |f: f64| floor(n as f64 * f + 1e-9) as usize;
        let val = alloc(self.val);
        let test = alloc(self.test);
        (n - val - test, val, test)
    }
}

/// Shuffle `pairs` with `spec.seed` and partition them.
pub fn split_pairs<T: Clone>(pairs: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    spec.validate()?;
    if pairs.len() < 3 {
        return Err(Error::Config(format!(
            "need at least 3 pairs to split, got {}",
            pairs.len()
        )));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let (n_train, n_val, _) = spec.sizes(pairs.len());
    let pick = |idx: &[usize]| idx.iter().map(|&i| pairs[i].clone()).collect::<Vec<_>>();
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_val]),
        pick(&order[n_train + n_val..]),
    ))
}

/// A candidate duplicate pair, `first < second`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearDuplicate {
    pub first: usize,
    pub second: usize,
    pub similarity: f64,
}

/// Every unordered pair of `texts` whose embeddings have cosine similarity at
/// least `threshold`, most similar first. The result is meant for manual
/// review; nothing is removed.
pub fn find_near_duplicates(
    texts: &[&str],
    embedder: &dyn Embedder,
    threshold: f64,
) -> Result<Vec<NearDuplicate>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "duplicate threshold {threshold} outside (0, 1]"
        )));
    }
    if texts.len() < 2 {
        return Ok(Vec::new());
    }
    let vectors = embedder.embed(texts, TextKind::Passage)?;
    let mut out = Vec::new();
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let sim = cosine_similarity(vectors[i].as_slice(), vectors[j].as_slice())?;
            if sim >= threshold {
                out.push(NearDuplicate {
                    first: i,
                    second: j,
                    similarity: sim,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.first.cmp(&b.first))
            .then(a.second.cmp(&b.second))
    });
    Ok(out)
}

/// Merge relevant documents with distractors into one evaluation corpus.
///
/// Distractor ids get `distractor_prefix` prepended (normally
/// [`DISTRACTOR_PREFIX`]); any id that still collides is an error.
pub fn build_eval_corpus(
    relevant: &Corpus,
    distractors: &Corpus,
    distractor_prefix: Option<&str>,
) -> Result<Corpus> {
    let mut merged = Corpus::new();
    for doc in relevant.documents() {
        merged.push_with(doc.clone(), Provenance::Relevant)?;
    }
    let mut seen = BTreeSet::new();
    for doc in distractors.documents() {
        let id = match distractor_prefix {
            Some(p) => format!("{p}{}", doc.id),
            None => doc.id.to_string(),
        };
        if merged.contains(&id) || !seen.insert(id.clone()) {
            return Err(Error::IdCollision(id));
        }
        let doc = Document { id, ..doc.clone() };
        merged.push_with(doc, Provenance::Distractor)?;
    }
    Ok(merged)
}
