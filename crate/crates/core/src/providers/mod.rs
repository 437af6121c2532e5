//! Semantic scoring and text generation behind uniform contracts.
//!
//! * [`Embedder`] encodes texts into unit vectors; [`BiEncoderScorer`] turns
//!   any embedder into a cosine [`SemanticScorer`].
//! * Cross-encoder scorers score (query, text) pairs jointly.
//! * [`Generator`] produces text from a prompt.
//!
//! Implementations: the offline [`StubEmbedder`], the HTTP sidecar client in
//! [`remote`], and content-addressed caching wrappers in [`cache`].

pub mod cache;
pub mod remote;
mod stub;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cache::{CachedEmbedder, CachedGenerator, CachedScorer, ContentCache};
pub use remote::{Endpoint, RemoteClient, RemoteConfig, RemoteCrossEncoder, RemoteEmbedder, RemoteGenerator};
pub use stub::{StubEmbedder, STUB_DIM};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error("{endpoint}: request timed out")]
    Timeout { endpoint: String },
    #[error("{endpoint}: transport error: {message}")]
    Transport { endpoint: String, message: String },
    #[error("{endpoint}: HTTP {status}: {body}")]
    Status { endpoint: String, status: u16, body: String },
    #[error("{endpoint}: malformed response: {message}")]
    Malformed { endpoint: String, message: String },
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{0}")]
    Other(String),
}

impl ProviderError {
    /// Transport failures, timeouts, and 5xx responses may succeed on retry.
    pub fn is_retryable(&self) -> bool {
        match self {
            Self::Timeout { .. } | Self::Transport { .. } => true,
            Self::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// A unit-length embedding (or the zero vector for text with no tokens).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// L2-normalizes `values`; an all-zero input stays zero.
    pub fn normalized(values: Vec<f32>) -> Self {
        let norm = values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self(values);
        }
        Self(values.into_iter().map(|v| (v as f64 / norm) as f32).collect())
    }

    /// Wraps values that are already normalized (e.g. from the sidecar).
    pub fn from_raw(values: Vec<f32>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    /// Cosine similarity; zero if either side is the zero vector.
    pub fn cosine(&self, other: &Self) -> Result<f64, ProviderError> {
        if self.dim() != other.dim() {
            return Err(ProviderError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        let dot: f64 = self.0.iter().zip(&other.0).map(|(&a, &b)| a as f64 * b as f64).sum();
        Ok(dot / (na * nb))
    }
}

pub trait Embedder: Send + Sync {
    fn provider_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    BiEncoder,
    CrossEncoder,
}

pub trait SemanticScorer: Send + Sync {
    fn provider_id(&self) -> &str;
    fn mode(&self) -> ScoringMode;
    /// One finite score per text, aligned with `texts`.
    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError>;
}

pub trait Generator: Send + Sync {
    fn provider_id(&self) -> &str;
    fn generate(&self, prompt: &str) -> Result<String, ProviderError>;
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<T: SemanticScorer + ?Sized> SemanticScorer for Arc<T> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn mode(&self) -> ScoringMode {
        (**self).mode()
    }
    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        (**self).score(query, texts)
    }
}

impl<T: Generator + ?Sized> Generator for Arc<T> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        (**self).generate(prompt)
    }
}

/// Cosine similarity between separately encoded query and text.
pub struct BiEncoderScorer<E> {
    embedder: E,
}

impl<E: Embedder> BiEncoderScorer<E> {
    pub fn new(embedder: E) -> Self {
        Self { embedder }
    }

    pub fn embedder(&self) -> &E {
        &self.embedder
    }
}

impl<E: Embedder> SemanticScorer for BiEncoderScorer<E> {
    fn provider_id(&self) -> &str {
        self.embedder.provider_id()
    }

    fn mode(&self) -> ScoringMode {
        ScoringMode::BiEncoder
    }

    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.embedder.embed(&[query])?;
        let q = q.into_iter().next().ok_or_else(|| ProviderError::Other("embedder returned no vector".into()))?;
        let vs = self.embedder.embed(texts)?;
        if vs.len() != texts.len() {
            return Err(ProviderError::Other(format!(
                "embedder returned {} vectors for {} texts",
                vs.len(),
                texts.len()
            )));
        }
        vs.iter().map(|v| q.cosine(v)).collect()
    }
}

/// Score of one text against a query.
pub fn semantic_score(scorer: &dyn SemanticScorer, query: &str, text: &str) -> Result<f64, ProviderError> {
    scorer
        .score(query, &[text])?
        .into_iter()
        .next()
        .ok_or_else(|| ProviderError::Other("scorer returned no score".into()))
}
