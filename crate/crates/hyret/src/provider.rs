//! Embedding providers: the hashing mock, pre-computed vector files, and a
//! remote `/embed` endpoint.

use std::path::{Path, PathBuf};
use std::time::Duration;

use hyret_core::dense::{
    EmbeddingVector, Embedder, MockEmbedder, TextKind, VectorStore, IMPORT_NORM_TOLERANCE,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;

pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    /// Vectors come from files; free text cannot be embedded.
    File,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingProviderSpec {
    pub kind: ProviderKind,
    pub dim: usize,
    pub model_name: Option<String>,
    pub query_prefix: Option<String>,
    pub passage_prefix: Option<String>,
    /// Base URL of the remote service, e.g. `http://127.0.0.1:8000`.
    pub endpoint: Option<String>,
    /// Token -> canonical token table for the mock provider.
    pub synonyms: Option<PathBuf>,
    pub batch_size: usize,
    pub timeout_secs: u64,
}

impl Default for EmbeddingProviderSpec {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            dim: DEFAULT_DIM,
            model_name: None,
            query_prefix: None,
            passage_prefix: None,
            endpoint: None,
            synonyms: None,
            batch_size: 64,
            timeout_secs: 60,
        }
    }
}

impl EmbeddingProviderSpec {
    pub fn model(&self) -> String {
        self.model_name.clone().unwrap_or_else(|| match self.kind {
            ProviderKind::Mock => format!("mock-fnv1a-{}", self.dim),
            ProviderKind::File => "file".into(),
            ProviderKind::Remote => "remote".into(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("provider dim must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("provider batch_size must be positive".into()));
        }
        if self.kind == ProviderKind::Remote && self.endpoint.is_none() {
            return Err(Error::Config("remote provider needs an endpoint".into()));
        }
        Ok(())
    }

    /// Build the embedder; `None` for file providers. Relative synonym paths
    /// resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Option<Box<dyn Embedder + Send + Sync>>> {
        self.validate()?;
        match self.kind {
            ProviderKind::File => Ok(None),
            ProviderKind::Mock => {
                let mut mock = MockEmbedder::new(self.dim)?
                    .with_prefixes(self.query_prefix.clone(), self.passage_prefix.clone());
                if let Some(path) = &self.synonyms {
                    let path = resolve(base, path);
                    mock = mock.with_canonical_map(formats::load_synonyms(&path)?);
                }
                Ok(Some(Box::new(mock)))
            }
            ProviderKind::Remote => Ok(Some(Box::new(RemoteEmbedder::new(self)?))),
        }
    }
}

pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
    pub kind: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f32>>,
}

/// Client for `POST {endpoint}/embed`. Prefixes are applied client-side.
pub struct RemoteEmbedder {
    url: String,
    dim: usize,
    batch_size: usize,
    query_prefix: Option<String>,
    passage_prefix: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub fn new(spec: &EmbeddingProviderSpec) -> Result<Self> {
        let endpoint = spec
            .endpoint
            .as_deref()
            .ok_or_else(|| Error::Config("remote provider needs an endpoint".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(spec.timeout_secs))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(Self {
            url: format!("{}/embed", endpoint.trim_end_matches('/')),
            dim: spec.dim,
            batch_size: spec.batch_size,
            query_prefix: spec.query_prefix.clone(),
            passage_prefix: spec.passage_prefix.clone(),
            client,
        })
    }

    fn call(&self, texts: Vec<String>, kind: TextKind) -> Result<Vec<EmbeddingVector>> {
        let expected = texts.len();
        let body = EmbedRequest { texts, kind: kind.as_str().into() };
        let resp = self
            .client
            .post(&self.url)
            .json(&body)
            .send()
            .map_err(|e| Error::Provider(format!("{}: {e}", self.url)))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(Error::Provider(format!("{} returned {status}: {text}", self.url)));
        }
        let parsed: EmbedResponse = resp
            .json()
            .map_err(|e| Error::Provider(format!("malformed response: {e}")))?;
        if parsed.dim != self.dim {
            return Err(Error::Provider(format!(
                "service dim {} differs from configured dim {}",
                parsed.dim, self.dim
            )));
        }
        if parsed.vectors.len() != expected {
            return Err(Error::Provider(format!(
                "asked for {expected} vectors, got {}",
                parsed.vectors.len()
            )));
        }
        parsed
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Error::Provider(format!("vector of length {} in response", v.len())));
                }
                EmbeddingVector::new(v).map_err(|e| Error::Provider(e.to_string()))
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[&str], kind: TextKind) -> hyret_core::Result<Vec<EmbeddingVector>> {
        let prefix = match kind {
            TextKind::Query => self.query_prefix.as_deref(),
            TextKind::Passage => self.passage_prefix.as_deref(),
        }
        .unwrap_or("");
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            let batch = chunk.iter().map(|t| format!("{prefix}{t}")).collect();
            let vectors = self.call(batch, kind).map_err(|e| match e {
                Error::Provider(msg) => hyret_core::Error::Provider(msg),
                other => hyret_core::Error::Provider(other.to_string()),
            })?;
            out.extend(vectors);
        }
        Ok(out)
    }
}

/// Embed `(id, text)` pairs into a store.
pub fn embed_into_store(
    embedder: &dyn Embedder,
    items: &[(&str, &str)],
    kind: TextKind,
) -> Result<VectorStore> {
    let texts: Vec<&str> = items.iter().map(|(_, t)| *t).collect();
    let vectors = embedder.embed(&texts, kind)?;
    let normalized = vectors
        .iter()
        .all(|v| (v.norm() - 1.0).abs() <= IMPORT_NORM_TOLERANCE);
    let mut store = VectorStore::new(embedder.dim(), normalized)?;
    for ((id, _), v) in items.iter().zip(vectors) {
        store.insert_with_tolerance(*id, v.as_slice(), IMPORT_NORM_TOLERANCE)?;
    }
    Ok(store)
}
