//! Dense retrieval: embedding vectors, a flat vector store with exhaustive
//! cosine top-k, the embedding-provider contract with a deterministic mock,
//! and the in-batch multiple-negatives ranking loss.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot_norms, exp, ln, sqrt};
use crate::text::analyze;
use crate::{Error, Result};

/// Which side of a query/passage pair is being embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TextKind {
    Query,
    Passage,
}

impl TextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TextKind::Query => "query",
            TextKind::Passage => "passage",
        }
    }
}

/// A finite, non-empty embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

pub fn l2_norm(v: &[f32]) -> f64 {
    sqrt(v.iter().map(|&x| f64::from(x) * f64::from(x)).sum())
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (dot, na, nb) = dot_norms(a, b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (sqrt(na) * sqrt(nb))).clamp(-1.0, 1.0))
}

/// Produces embeddings for batches of texts.
pub trait Embedder {
    fn dim(&self) -> usize;

    /// One vector per input text, in input order.
    fn embed(&self, texts: &[&str], kind: TextKind) -> Result<Vec<EmbeddingVector>>;
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed(&self, texts: &[&str], kind: TextKind) -> Result<Vec<EmbeddingVector>> {
        (**self).embed(texts, kind)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a; fixed across platforms and releases, unlike `Hash`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Hash bucket of `token` in a `dim`-dimensional mock embedding.
pub fn token_bucket(token: &str, dim: usize) -> usize {
    (fnv1a64(token.as_bytes()) % dim as u64) as usize
}

/// Deterministic bag-of-hashed-tokens embedding of `text`.
pub fn mock_embed(text: &str, dim: usize) -> Result<EmbeddingVector> {
    MockEmbedder::new(dim)?.embed_one(text)
}

/// Embedding stand-in: tokens are hashed into `dim` buckets, counts are
/// accumulated and the result is L2-normalized.
///
/// An optional canonicalization table maps tokens onto representatives
/// before hashing, which lets tests model synonyms the lexical side cannot
/// see.
#[derive(Debug, Clone, Default)]
pub struct MockEmbedder {
    dim: usize,
    canonical: BTreeMap<String, String>,
    query_prefix: Option<String>,
    passage_prefix: Option<String>,
}

impl MockEmbedder {
    pub const MIN_DIM: usize = 8;

    pub fn new(dim: usize) -> Result<Self> {
        if dim < Self::MIN_DIM {
            return Err(Error::Config(format!(
                "mock embedder needs dim >= {}, got {dim}",
                Self::MIN_DIM
            )));
        }
        Ok(Self {
            dim,
            ..Self::default()
        })
    }

    pub fn with_canonical_map(mut self, map: BTreeMap<String, String>) -> Self {
        self.canonical = map;
        self
    }

    pub fn with_prefixes(mut self, query: Option<String>, passage: Option<String>) -> Self {
        self.query_prefix = query;
        self.passage_prefix = passage;
        self
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector> {
        let tokens = analyze(text);
        if tokens.is_empty() {
            return Err(Error::EmptyTokens);
        }
        let mut counts = vec![0.0f64; self.dim];
        for token in &tokens {
            let key = self.canonical.get(token).unwrap_or(token);
            counts[token_bucket(key, self.dim)] += 1.0;
        }
        let norm = sqrt(counts.iter().map(|c| c * c).sum());
        Ok(EmbeddingVector(
            counts.iter().map(|c| (c / norm) as f32).collect(),
        ))
    }

    fn prefix(&self, kind: TextKind) -> Option<&str> {
        match kind {
            TextKind::Query => self.query_prefix.as_deref(),
            TextKind::Passage => self.passage_prefix.as_deref(),
        }
    }
}

impl Embedder for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[&str], kind: TextKind) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .map(|t| match self.prefix(kind) {
                Some(p) => self.embed_one(&format!("{p}{t}")),
                None => self.embed_one(t),
            })
            .collect()
    }
}

/// Fixed-dimension table of embeddings keyed by id.
///
/// When `normalized` is set every stored vector has unit norm (within 1e-6);
/// inserts accept vectors off by up to the given tolerance and rescale them.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    normalized: bool,
    ids: Vec<String>,
    data: Vec<f32>,
    norms: Vec<f64>,
    by_id: BTreeMap<String, usize>,
}

/// Tolerance on the norm of vectors claimed to be unit length.
pub const IMPORT_NORM_TOLERANCE: f64 = 1e-4;

impl VectorStore {
    pub fn new(dim: usize, normalized: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("vector dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            normalized,
            ids: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
            by_id: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.by_id.get(id).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.row(i)))
    }

    /// Insert with the default norm tolerance of `1e-6`.
    pub fn insert(&mut self, id: impl Into<String>, values: &[f32]) -> Result<()> {
        self.insert_with_tolerance(id, values, 1e-6)
    }

    pub fn insert_with_tolerance(
        &mut self,
        id: impl Into<String>,
        values: &[f32],
        norm_tolerance: f64,
    ) -> Result<()> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::EmptyId);
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        if values.len() != self.dim {
            return Err(Error::VectorDimension(id, values.len(), self.dim));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = l2_norm(values);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        self.by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id.clone());
        if self.normalized {
            if (norm - 1.0).abs() > norm_tolerance {
                self.ids.pop();
                self.by_id.remove(&id);
                return Err(Error::NotNormalized { id, norm });
            }
            self.data
                .extend(values.iter().map(|&v| (f64::from(v) / norm) as f32));
            let rescaled = l2_norm(self.row(self.ids.len() - 1));
            self.norms.push(rescaled);
        } else {
            self.data.extend_from_slice(values);
            self.norms.push(norm);
        }
        Ok(())
    }

    /// Multiply every stored vector by `factor` (> 0). Only meaningful for
    /// unnormalized stores.
    pub fn rescaled(&self, factor: f32) -> Result<Self> {
        let mut out = Self::new(self.dim, false)?;
        for (id, row) in self.iter() {
            let scaled: Vec<f32> = row.iter().map(|v| v * factor).collect();
            out.insert(id, &scaled)?;
        }
        Ok(out)
    }
}

/// Exhaustive cosine top-`k` over `store`, ties broken by ascending id.
pub fn dense_search(store: &VectorStore, query: &[f32], k: usize) -> Result<Vec<(String, f64)>> {
    if query.len() != store.dim {
        return Err(Error::DimensionMismatch {
            expected: store.dim,
            actual: query.len(),
        });
    }
    let qnorm = l2_norm(query);
    if qnorm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut scored: Vec<(usize, f64)> = (0..store.len())
        .map(|i| {
            let dot: f64 = store
                .row(i)
                .iter()
                .zip(query)
                .map(|(&x, &y)| f64::from(x) * f64::from(y))
                .sum();
            (i, (dot / (store.norms[i] * qnorm)).clamp(-1.0, 1.0))
        })
        .collect();
    let by_rank = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.total_cmp(&a.1)
            .then_with(|| store.ids[a.0].cmp(&store.ids[b.0]))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
    Ok(scored
        .into_iter()
        .map(|(i, s)| (store.ids[i].clone(), s))
        .collect())
}

/// Scale applied to cosine logits in the ranking loss.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MnrlConfig {
    pub scale: f64,
}

impl Default for MnrlConfig {
    fn default() -> Self {
        Self { scale: 20.0 }
    }
}

/// Multiple-negatives ranking loss: softmax cross-entropy of each query over
/// all positives in the batch, with its own positive as the target.
///
/// `loss = -(1/B) * sum_i log( exp(s*cos(q_i,p_i)) / sum_j exp(s*cos(q_i,p_j)) )`
pub fn mnrl_loss<Q: AsRef<[f32]>, P: AsRef<[f32]>>(
    queries: &[Q],
    positives: &[P],
    config: &MnrlConfig,
) -> Result<f64> {
    if !(config.scale > 0.0 && config.scale.is_finite()) {
        return Err(Error::Config(format!(
            "loss scale must be positive, got {}",
            config.scale
        )));
    }
    if queries.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if queries.len() != positives.len() {
        return Err(Error::BatchMismatch(queries.len(), positives.len()));
    }
    let batch = queries.len();
    let mut logits = vec![0.0f64; batch];
    let mut total = 0.0;
    for (i, q) in queries.iter().enumerate() {
        for (j, p) in positives.iter().enumerate() {
            logits[j] = config.scale * cosine_similarity(q.as_ref(), p.as_ref())?;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|&l| exp(l - max)).sum();
        total += max + ln(sum) - logits[i];
    }
    // Each term is >= 0 mathematically; clip rounding noise.
    Ok((total / batch as f64).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    #[allow(clippy::approx_constant)]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((c - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn mock_embedding_is_unit_and_deterministic() {
        let a = mock_embed("राहदानी कहाँ बन्छ", 64).unwrap();
        let b = mock_embed("राहदानी कहाँ बन्छ", 64).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert_eq!(mock_embed("", 64), Err(Error::EmptyTokens));
        assert_eq!(mock_embed("। ?", 64), Err(Error::EmptyTokens));
        assert!(mock_embed("x", 4).is_err());
    }

    #[test]
    fn mock_disjoint_tokens_are_orthogonal() {
        // Buckets checked directly: the two token sets land in distinct cells.
        let dim = 4096;
        let left = ["राहदानी", "कार्यालय"];
        let right = ["नागरिकता", "शुल्क"];
        let lb: Vec<usize> = left.iter().map(|t| token_bucket(t, dim)).collect();
        let rb: Vec<usize> = right.iter().map(|t| token_bucket(t, dim)).collect();
        assert!(lb.iter().all(|b| !rb.contains(b)));
        let a = mock_embed(&left.join(" "), dim).unwrap();
        let b = mock_embed(&right.join(" "), dim).unwrap();
        assert_eq!(cosine_similarity(a.as_slice(), b.as_slice()).unwrap(), 0.0);
    }

    #[test]
    fn canonical_map_merges_synonyms() {
        let mut map = BTreeMap::new();
        map.insert("पासपोर्ट".to_string(), "राहदानी".to_string());
        let e = MockEmbedder::new(128).unwrap().with_canonical_map(map);
        let a = e.embed_one("राहदानी").unwrap();
        let b = e.embed_one("पासपोर्ट").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn store_validation() {
        let mut store = VectorStore::new(2, true).unwrap();
        store.insert("d1", &[1.0, 0.0]).unwrap();
        assert_eq!(store.insert("d1", &[0.0, 1.0]), Err(Error::DuplicateId("d1".into())));
        assert!(matches!(
            store.insert("d2", &[0.5, 0.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert_eq!(store.len(), 1);
        assert!(matches!(
            store.insert("d3", &[1.0]),
            Err(Error::VectorDimension(..))
        ));
        assert_eq!(store.insert("d4", &[0.0, 0.0]), Err(Error::ZeroVector));
        store
            .insert_with_tolerance("d5", &[0.0, 1.00005], IMPORT_NORM_TOLERANCE)
            .unwrap();
        assert!((l2_norm(store.get("d5").unwrap()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn search_examples() {
        let mut store = VectorStore::new(2, true).unwrap();
        store.insert("d1", &[1.0, 0.0]).unwrap();
        store.insert("d2", &[0.0, 1.0]).unwrap();
        assert_eq!(
            dense_search(&store, &[1.0, 0.0], 1).unwrap(),
            vec![("d1".to_string(), 1.0)]
        );
        let all = dense_search(&store, &[1.0, 0.0], 10).unwrap();
        assert_eq!(all.len(), 2);
        assert!(dense_search(&store, &[1.0], 1).is_err());
    }

    #[test]
    fn search_ties_by_id() {
        let mut store = VectorStore::new(2, false).unwrap();
        store.insert("b", &[1.0, 1.0]).unwrap();
        store.insert("a", &[2.0, 2.0]).unwrap();
        store.insert("c", &[1.0, 0.0]).unwrap();
        let ids: Vec<String> = dense_search(&store, &[1.0, 1.0], 2)
            .unwrap()
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        assert_eq!(ids, vec!["a", "b"]);
    }

    #[test]
    fn mnrl_examples() {
        let cfg1 = MnrlConfig { scale: 1.0 };
        assert_eq!(mnrl_loss(&[[1.0f32, 0.0]], &[[0.3f32, 0.7]], &cfg1).unwrap(), 0.0);

        let q = [[1.0f32, 0.0], [0.0, 1.0]];
        let loss = mnrl_loss(&q, &q, &cfg1).unwrap();
        assert!((loss - ln(1.0 + exp(-1.0))).abs() < 1e-12);
        assert!((loss - 0.31326).abs() < 1e-5);

        let same = [[0.6f32, 0.8]; 2];
        let loss = mnrl_loss(&same, &same, &MnrlConfig { scale: 7.5 }).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn mnrl_errors() {
        let cfg = MnrlConfig::default();
        assert!(mnrl_loss::<[f32; 2], [f32; 2]>(&[], &[], &cfg).is_err());
        assert!(mnrl_loss(&[[1.0f32, 0.0]], &[[1.0f32, 0.0, 0.0]], &cfg).is_err());
        assert!(mnrl_loss(&[[0.0f32, 0.0]], &[[1.0f32, 0.0]], &cfg).is_err());
        assert!(mnrl_loss(&[[1.0f32, 0.0]], &[[1.0f32, 0.0]], &MnrlConfig { scale: 0.0 }).is_err());
    }
}
