//! BM25 over an in-memory inverted index.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Corpus;
use crate::math::ln;
use crate::text::analyze;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Bm25Params {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization, in `[0, 1]`.
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::Config(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// Non-negative BM25 IDF: `ln((N - df + 0.5) / (df + 0.5) + 1)`.
pub fn idf(num_docs: usize, df: usize) -> f64 {
    let (n, df) = (num_docs as f64, df as f64);
    ln((n - df + 0.5) / (df + 0.5) + 1.0)
}

/// Saturated, length-normalized term-frequency factor.
pub fn tf_weight(tf: f64, doc_len: f64, avgdl: f64, params: &Bm25Params) -> f64 {
    if tf <= 0.0 {
        return 0.0;
    }
    // avgdl is 0 only when every document is empty, and then no term has tf > 0.
    let len_ratio = if avgdl > 0.0 { doc_len / avgdl } else { 0.0 };
    tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * len_ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Posting {
    /// Internal document number (insertion order).
    pub doc: u32,
    pub tf: u32,
}

/// Term -> postings, plus the per-document lengths BM25 needs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvertedIndex {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_lens: Vec<u32>,
    total_len: u64,
    postings: BTreeMap<String, Vec<Posting>>,
    #[cfg_attr(feature = "serde", serde(skip))]
    by_id: BTreeMap<String, u32>,
}

impl InvertedIndex {
    pub fn new(params: Bm25Params) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            doc_ids: Vec::new(),
            doc_lens: Vec::new(),
            total_len: 0,
            postings: BTreeMap::new(),
            by_id: BTreeMap::new(),
        })
    }

    /// Add one document given its tokens. Documents without tokens are kept
    /// with length 0 and appear in no posting list.
    pub fn insert<S: AsRef<str>>(&mut self, id: impl Into<String>, tokens: &[S]) -> Result<()> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::EmptyId);
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        let doc = u32::try_from(self.doc_ids.len())
            .map_err(|_| Error::Config("index holds at most 2^32 documents".into()))?;
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_ref()).or_default() += 1;
        }
        for (term, count) in tf {
            self.postings
                .entry(term.into())
                .or_default()
                .push(Posting { doc, tf: count });
        }
        let len = tokens.len() as u32;
        self.doc_lens.push(len);
        self.total_len += u64::from(len);
        self.by_id.insert(id.clone(), doc);
        self.doc_ids.push(id);
        Ok(())
    }

    /// Restore the id lookup after deserialization.
    pub fn rebuild_lookup(&mut self) -> Result<()> {
        self.by_id.clear();
        for (i, id) in self.doc_ids.iter().enumerate() {
            if self.by_id.insert(id.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &Bm25Params {
        &self.params
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn avgdl(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.doc_ids.len() as f64
        }
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_len(&self, id: &str) -> Option<u32> {
        self.by_id.get(id).map(|&d| self.doc_lens[d as usize])
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn tf(&self, term: &str, id: &str) -> u32 {
        let Some(&doc) = self.by_id.get(id) else {
            return 0;
        };
        self.postings
            .get(term)
            .and_then(|p| p.binary_search_by_key(&doc, |x| x.doc).ok().map(|i| p[i].tf))
            .unwrap_or(0)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// IDF of `term`; 0 for terms not in the index.
    pub fn idf(&self, term: &str) -> f64 {
        match self.df(term) {
            0 => 0.0,
            df => idf(self.num_docs(), df),
        }
    }

    /// Check the structural invariants: df within `[1, N]`, tf >= 1, postings
    /// sorted by document, lengths consistent.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.num_docs();
        let bad = |m: String| Err(Error::Config(m));
        if self.doc_lens.len() != n || self.by_id.len() != n {
            return bad("document tables out of sync".into());
        }
        let total: u64 = self.doc_lens.iter().map(|&l| u64::from(l)).sum();
        if total != self.total_len {
            return bad("total length out of sync".into());
        }
        let mut per_doc = vec![0u64; n];
        for (term, postings) in &self.postings {
            if postings.is_empty() || postings.len() > n {
                return bad(format!("df({term}) = {} outside [1, {n}]", postings.len()));
            }
            if postings.windows(2).any(|w| w[0].doc >= w[1].doc) {
                return bad(format!("postings of {term} not strictly sorted"));
            }
            for p in postings {
                if p.tf == 0 || p.doc as usize >= n {
                    return bad(format!("bad posting for {term}"));
                }
                per_doc[p.doc as usize] += u64::from(p.tf);
            }
        }
        if per_doc
            .iter()
            .zip(&self.doc_lens)
            .any(|(&sum, &len)| sum != u64::from(len))
        {
            return bad("term frequencies do not add up to document lengths".into());
        }
        Ok(())
    }

    /// BM25 score of one document. Every query token contributes, including
    /// repeats; tokens absent from the index contribute 0.
    pub fn score<S: AsRef<str>>(&self, query_tokens: &[S], id: &str) -> Result<f64> {
        let &doc = self
            .by_id
            .get(id)
            .ok_or_else(|| Error::UnknownDocument(id.into()))?;
        let avgdl = self.avgdl();
        let dl = f64::from(self.doc_lens[doc as usize]);
        Ok(query_tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                let tf = self.tf(t, id);
                if tf == 0 {
                    0.0
                } else {
                    self.idf(t) * tf_weight(f64::from(tf), dl, avgdl, &self.params)
                }
            })
            .sum())
    }

    /// Top-`k` documents for pre-tokenized query terms. Zero-score documents
    /// are left out; ties go to the smaller id.
    pub fn search_tokens<S: AsRef<str>>(&self, query_tokens: &[S], k: usize) -> Vec<(String, f64)> {
        let n = self.num_docs();
        if k == 0 || n == 0 {
            return Vec::new();
        }
        let avgdl = self.avgdl();
        let mut scores = vec![0.0f64; n];
        let mut touched = Vec::new();
        for t in query_tokens {
            let t = t.as_ref();
            let postings = self.postings(t);
            if postings.is_empty() {
                continue;
            }
            let w = idf(n, postings.len());
            for p in postings {
                let d = p.doc as usize;
                if scores[d] == 0.0 {
                    touched.push(d);
                }
                scores[d] += w * tf_weight(
                    f64::from(p.tf),
                    f64::from(self.doc_lens[d]),
                    avgdl,
                    &self.params,
                );
            }
        }
        let mut hits: Vec<(usize, f64)> = touched
            .into_iter()
            .map(|d| (d, scores[d]))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.doc_ids[a.0].cmp(&self.doc_ids[b.0]))
        });
        hits.truncate(k);
        hits.into_iter()
            .map(|(d, s)| (self.doc_ids[d].clone(), s))
            .collect()
    }

    /// Normalize and tokenize `query` and search.
    pub fn search(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        let tokens = analyze(query);
        self.search_tokens(tokens.as_slice(), k)
    }
}

/// Index every document of `corpus` (title and text, normalized and
/// tokenized).
pub fn build_index(corpus: &Corpus, params: Bm25Params) -> Result<InvertedIndex> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut index = InvertedIndex::new(params)?;
    for doc in corpus.documents() {
        let tokens = analyze(&doc.full_text());
        index.insert(doc.id.as_str(), tokens.as_slice())?;
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use alloc::string::ToString;

    fn tiny() -> InvertedIndex {
        let corpus = Corpus::from_documents([
            Document::new("d1", "a b"),
            Document::new("d2", "a c"),
            Document::new("d3", "b c"),
        ])
        .unwrap();
        build_index(&corpus, Bm25Params::default()).unwrap()
    }

    #[test]
    fn tiny_corpus_statistics() {
        let index = tiny();
        assert_eq!(index.num_docs(), 3);
        assert_eq!(index.df("a"), 2);
        assert_eq!(index.avgdl(), 2.0);
        index.check_invariants().unwrap();
    }

    #[test]
    fn empty_document_has_no_postings() {
        let mut index = InvertedIndex::new(Bm25Params::default()).unwrap();
        index.insert::<&str>("d1", &[]).unwrap();
        assert_eq!(index.num_docs(), 1);
        assert_eq!(index.vocabulary_size(), 0);
        assert_eq!(index.doc_len("d1"), Some(0));
        index.check_invariants().unwrap();
        assert!(index.search("anything", 5).is_empty());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(
            build_index(&Corpus::new(), Bm25Params::default()).unwrap_err(),
            Error::EmptyCorpus
        );
    }

    #[test]
    fn hand_computed_score() {
        let index = tiny();
        let expected = ln(1.6);
        let s = index.score(&["a"], "d1").unwrap();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.4700).abs() < 1e-4);
    }

    #[test]
    fn zero_contributions() {
        let index = tiny();
        assert_eq!(index.score(&["zzz"], "d1").unwrap(), 0.0);
        assert_eq!(index.score::<&str>(&[], "d1").unwrap(), 0.0);
        assert_eq!(
            index.score(&["a"], "nope"),
            Err(Error::UnknownDocument("nope".into()))
        );
    }

    #[test]
    fn search_excludes_non_matching() {
        let index = tiny();
        let hits = index.search("a", 10);
        let ids: Vec<&str> = hits.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2"]);
        assert_eq!(hits[0].1, hits[1].1);
        assert_eq!(index.search("a", 1).len(), 1);
    }

    #[test]
    fn identical_documents_tie_by_id() {
        let corpus = Corpus::from_documents([
            Document::new("z", "x y"),
            Document::new("m", "y x"),
            Document::new("a", "q"),
        ])
        .unwrap();
        let index = build_index(&corpus, Bm25Params::default()).unwrap();
        let hits = index.search("x", 5);
        assert_eq!(hits[0].0, "m");
        assert_eq!(hits[1].0, "z");
        assert_eq!(hits[0].1, hits[1].1);
    }

    #[test]
    fn params_validated() {
        assert!(InvertedIndex::new(Bm25Params { k1: -1.0, b: 0.5 }).is_err());
        assert!(InvertedIndex::new(Bm25Params { k1: 1.0, b: 1.5 }).is_err());
    }

    #[test]
    fn incremental_insert_keeps_invariants() {
        let mut index = tiny();
        index.insert("d4", &["x".to_string(), "x".to_string()]).unwrap();
        assert_eq!(index.num_docs(), 4);
        assert_eq!(index.df("x"), 1);
        assert_eq!(index.tf("x", "d4"), 2);
        assert_eq!(index.avgdl(), 2.0);
        index.check_invariants().unwrap();
        assert!(index.insert("d4", &["y"]).is_err());
    }
}
