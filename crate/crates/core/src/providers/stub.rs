use std::hash::Hasher;

use fnv::FnvHasher;

use super::{Embedder, EmbeddingVector, ProviderError};
use crate::lexical::tokenize;

pub const STUB_DIM: usize = 256;

/// Offline, deterministic hashed bag-of-words embedder.
///
/// Every token from [`tokenize`] is hashed with 64-bit FNV-1a over its UTF-8
/// bytes; the hash modulo 256 picks a bucket. Bucket counts are
/// L2-normalized. This is a test double for learned encoders, not a quality
/// model: scores produced with it are not comparable to neural retrievers.
#[derive(Debug, Clone, Default)]
pub struct StubEmbedder;

impl StubEmbedder {
    pub const PROVIDER_ID: &'static str = "stub-fnv1a-256";

    pub fn new() -> Self {
        Self
    }

    pub fn bucket(token: &str) -> usize {
        let mut h = FnvHasher::default();
        h.write(token.as_bytes());
        (h.finish() % STUB_DIM as u64) as usize
    }

    pub fn embed_one(text: &str) -> EmbeddingVector {
        let mut counts = vec![0f32; STUB_DIM];
        for t in tokenize(text) {
            counts[Self::bucket(&t)] += 1.0;
        }
        EmbeddingVector::normalized(counts)
    }
}

impl Embedder for StubEmbedder {
    fn provider_id(&self) -> &str {
        Self::PROVIDER_ID
    }

    fn dim(&self) -> usize {
        STUB_DIM
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}
