//! Loaded retrieval state shared by the CLI, the HTTP service and the
//! experiment pipeline, so all three produce the same rankings.

use std::fmt;
use std::str::FromStr;

use hyret_core::corpus::Corpus;
use hyret_core::dense::{dense_search, Embedder, TextKind, VectorStore};
use hyret_core::eval::ScoredDoc;
use hyret_core::hybrid::{fuse_rankings, FusionConfig};
use hyret_core::lexical::InvertedIndex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Bm25,
    Dense,
    #[default]
    Hybrid,
}

impl SearchMode {
    pub const ALL: [SearchMode; 3] = [SearchMode::Bm25, SearchMode::Dense, SearchMode::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Bm25 => "bm25",
            SearchMode::Dense => "dense",
            SearchMode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(SearchMode::Bm25),
            "dense" => Ok(SearchMode::Dense),
            "hybrid" => Ok(SearchMode::Hybrid),
            other => Err(Error::Usage(format!("unknown mode `{other}` (bm25, dense, hybrid)"))),
        }
    }
}

/// Returned when a dense or hybrid search is asked of an engine without
/// vectors or without a way to embed the query.
pub const NO_VECTORS: &str = "dense retrieval needs a vector store and an embedding provider";

pub struct SearchEngine {
    pub corpus: Option<Corpus>,
    pub index: Option<InvertedIndex>,
    pub vectors: Option<VectorStore>,
    pub embedder: Option<Box<dyn Embedder + Send + Sync>>,
    pub fusion: FusionConfig,
}

impl SearchEngine {
    pub fn new(fusion: FusionConfig) -> Result<Self> {
        fusion.validate()?;
        Ok(Self {
            corpus: None,
            index: None,
            vectors: None,
            embedder: None,
            fusion,
        })
    }

    pub fn with_index(mut self, index: InvertedIndex) -> Self {
        self.index = Some(index);
        self
    }

    pub fn with_corpus(mut self, corpus: Corpus) -> Self {
        self.corpus = Some(corpus);
        self
    }

    pub fn with_dense(mut self, vectors: VectorStore, embedder: Option<Box<dyn Embedder + Send + Sync>>) -> Result<Self> {
        if let Some(e) = &embedder {
            if e.dim() != vectors.dim() {
                return Err(hyret_core::Error::DimensionMismatch { expected: vectors.dim(), actual: e.dim() }.into());
            }
        }
        self.vectors = Some(vectors);
        self.embedder = embedder;
        Ok(self)
    }

    pub fn supports(&self, mode: SearchMode) -> bool {
        let lexical = self.index.is_some();
        let dense = self.vectors.is_some() && self.embedder.is_some();
        match mode {
            SearchMode::Bm25 => lexical,
            SearchMode::Dense => dense,
            SearchMode::Hybrid => lexical && dense,
        }
    }

    pub fn lexical(&self, query: &str, depth: usize) -> Result<Vec<ScoredDoc>> {
        let index = self
            .index
            .as_ref()
            .ok_or_else(|| Error::Usage("bm25 retrieval needs an index or corpus".into()))?;
        Ok(index
            .search(query, depth)
            .into_iter()
            .map(|(id, s)| ScoredDoc::new(id, s))
            .collect())
    }

    pub fn embed_query(&self, query: &str) -> Result<Vec<f32>> {
        let embedder = self.embedder.as_ref().ok_or_else(|| Error::Usage(NO_VECTORS.into()))?;
        let mut v = embedder.embed(&[query], TextKind::Query)?;
        Ok(v.pop().expect("one text in, one vector out").into_vec())
    }

    pub fn dense(&self, query_vec: &[f32], depth: usize) -> Result<Vec<ScoredDoc>> {
        let store = self.vectors.as_ref().ok_or_else(|| Error::Usage(NO_VECTORS.into()))?;
        Ok(dense_search(store, query_vec, depth)?
            .into_iter()
            .map(|(id, s)| ScoredDoc::new(id, s))
            .collect())
    }

    /// Fuse the top `fusion.depth` of each side and keep `k`.
    pub fn hybrid(&self, query: &str, query_vec: &[f32], k: usize) -> Result<Vec<ScoredDoc>> {
        let depth = self.fusion.depth;
        let mut fused = fuse_rankings(&self.lexical(query, depth)?, &self.dense(query_vec, depth)?, &self.fusion);
        fused.truncate(k);
        Ok(fused)
    }

    pub fn search(&self, query: &str, k: usize, mode: SearchMode) -> Result<Vec<ScoredDoc>> {
        if k == 0 {
            return Err(Error::Usage("k must be at least 1".into()));
        }
        if !self.supports(mode) {
            return Err(match mode {
                SearchMode::Bm25 => Error::Usage("bm25 retrieval needs an index or corpus".into()),
                _ => Error::Usage(NO_VECTORS.into()),
            });
        }
        match mode {
            SearchMode::Bm25 => self.lexical(query, k),
            SearchMode::Dense => self.dense(&self.embed_query(query)?, k),
            SearchMode::Hybrid => self.hybrid(query, &self.embed_query(query)?, k),
        }
    }

    pub fn text(&self, id: &str) -> Option<&str> {
        self.corpus.as_ref()?.get(id).map(|d| d.text.as_str())
    }
}
