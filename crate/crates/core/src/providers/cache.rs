//! Content-addressed, on-disk memoization of provider calls.
//!
//! Key = SHA-256 of `provider_id \0 operation \0 canonical-JSON(payload)`.
//! Each entry is one file named by the hex key holding the JSON result.
//! Unreadable entries are treated as misses.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{Embedder, EmbeddingVector, Generator, ProviderError, ScoringMode, SemanticScorer};

#[derive(Debug)]
pub struct ContentCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ContentCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, write_lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(provider_id: &str, operation: &str, payload: &Value) -> String {
        // serde_json's default map is ordered, so to_string is canonical
        let mut h = Sha256::new();
        h.update(provider_id.as_bytes());
        h.update([0]);
        h.update(operation.as_bytes());
        h.update([0]);
        h.update(payload.to_string().as_bytes());
        hex::encode(h.finalize())
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let path = self.dir.join(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {} unreadable: {e}", path.display());
                return None;
            }
        };
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("cache entry {} corrupt, ignoring: {e}", path.display());
                None
            }
        }
    }

    pub fn put<T: Serialize>(&self, key: &str, value: &T) {
        let _guard = self.write_lock.lock().unwrap();
        let result = (|| -> std::io::Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            serde_json::to_writer(&mut tmp, value)?;
            tmp.flush()?;
            tmp.persist(self.dir.join(key)).map_err(|e| e.error)?;
            Ok(())
        })();
        if let Err(e) = result {
            log::warn!("failed to write cache entry {key}: {e}");
        }
    }

    /// Looks up `key`, calling `compute` and storing its result on a miss.
    pub fn get_or_insert_with<T, F>(&self, key: &str, compute: F) -> Result<T, ProviderError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, ProviderError>,
    {
        if let Some(v) = self.get(key) {
            return Ok(v);
        }
        let v = compute()?;
        self.put(key, &v);
        Ok(v)
    }
}

/// Caches embeddings per text.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: ContentCache,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, cache: ContentCache) -> Self {
        Self { inner, cache }
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let keys: Vec<String> =
            texts.iter().map(|t| ContentCache::key(self.inner.provider_id(), "embed", &json!({ "text": t }))).collect();
        let mut out: Vec<Option<EmbeddingVector>> =
            keys.iter().map(|k| self.cache.get::<EmbeddingVector>(k).filter(|v| v.dim() == self.inner.dim())).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
            let fresh = self.inner.embed(&batch)?;
            for (&i, v) in missing.iter().zip(fresh) {
                self.cache.put(&keys[i], &v);
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }
}

/// Caches scores per (query, text) pair.
pub struct CachedScorer<S> {
    inner: S,
    cache: ContentCache,
}

impl<S: SemanticScorer> CachedScorer<S> {
    pub fn new(inner: S, cache: ContentCache) -> Self {
        Self { inner, cache }
    }
}

impl<S: SemanticScorer> SemanticScorer for CachedScorer<S> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn mode(&self) -> ScoringMode {
        self.inner.mode()
    }

    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        let keys: Vec<String> = texts
            .iter()
            .map(|t| ContentCache::key(self.inner.provider_id(), "score", &json!({ "query": query, "text": t })))
            .collect();
        let mut out: Vec<Option<f64>> = keys.iter().map(|k| self.cache.get::<f64>(k)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
            let fresh = self.inner.score(query, &batch)?;
            if fresh.len() != batch.len() {
                return Err(ProviderError::Other(format!(
                    "scorer returned {} scores for {} texts",
                    fresh.len(),
                    batch.len()
                )));
            }
            for (&i, s) in missing.iter().zip(fresh) {
                self.cache.put(&keys[i], &s);
                out[i] = Some(s);
            }
        }
        Ok(out.into_iter().map(|s| s.expect("filled")).collect())
    }
}

/// Caches generations per prompt. Only worthwhile for deterministic generators.
pub struct CachedGenerator<G> {
    inner: G,
    cache: ContentCache,
}

impl<G: Generator> CachedGenerator<G> {
    pub fn new(inner: G, cache: ContentCache) -> Self {
        Self { inner, cache }
    }
}

impl<G: Generator> Generator for CachedGenerator<G> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        let key = ContentCache::key(self.inner.provider_id(), "generate", &json!({ "prompt": prompt }));
        self.cache.get_or_insert_with(&key, || self.inner.generate(prompt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{BiEncoderScorer, StubEmbedder};
    use crate::testkit::{CountingScorer, ScriptedGenerator};

    #[test]
    fn keys_depend_on_provider_and_op() {
        let p = json!({"text": "x"});
        assert_ne!(ContentCache::key("a", "embed", &p), ContentCache::key("b", "embed", &p));
        assert_ne!(ContentCache::key("a", "embed", &p), ContentCache::key("a", "score", &p));
        assert_eq!(ContentCache::key("a", "embed", &p), ContentCache::key("a", "embed", &json!({"text": "x"})));
        assert_eq!(ContentCache::key("a", "embed", &p).len(), 64);
    }

    #[test]
    fn second_call_hits() {
        let dir = tempfile::tempdir().unwrap();
        let inner = CountingScorer::new("m1");
        let calls = inner.counter();
        let cached = CachedScorer::new(inner, ContentCache::open(dir.path()).unwrap());
        let a = cached.score("q", &["x", "y"]).unwrap();
        let b = cached.score("q", &["x", "y"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(calls.load(std::sync::atomic::Ordering::SeqCst), 2);
    }

    #[test]
    fn different_provider_misses() {
        let dir = tempfile::tempdir().unwrap();
        let c1 = CountingScorer::new("m1");
        let c2 = CountingScorer::new("m2");
        let n2 = c2.counter();
        CachedScorer::new(c1, ContentCache::open(dir.path()).unwrap()).score("q", &["x"]).unwrap();
        CachedScorer::new(c2, ContentCache::open(dir.path()).unwrap()).score("q", &["x"]).unwrap();
        assert_eq!(n2.load(std::sync::atomic::Ordering::SeqCst), 1);
    }

    #[test]
    fn persists_across_instances_and_tolerates_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let first = CountingScorer::new("m");
        CachedScorer::new(first, ContentCache::open(dir.path()).unwrap()).score("q", &["x"]).unwrap();
        let second = CountingScorer::new("m");
        let n = second.counter();
        let cached = CachedScorer::new(second, ContentCache::open(dir.path()).unwrap());
        cached.score("q", &["x"]).unwrap();
        assert_eq!(n.load(std::sync::atomic::Ordering::SeqCst), 0);

        for entry in fs::read_dir(dir.path()).unwrap() {
            fs::write(entry.unwrap().path(), b"{garbage").unwrap();
        }
        cached.score("q", &["x"]).unwrap();
        assert_eq!(n.load(std::sync::atomic::Ordering::SeqCst), 1);
    }

    #[test]
    fn transparent_for_pure_providers() {
        let dir = tempfile::tempdir().unwrap();
        let plain = BiEncoderScorer::new(StubEmbedder::new());
        let cached =
            BiEncoderScorer::new(CachedEmbedder::new(StubEmbedder::new(), ContentCache::open(dir.path()).unwrap()));
        let texts = ["The 2018 Winter Olympics", "South Korea hosted", "Olympics in 1988"];
        for _ in 0..2 {
            assert_eq!(
                plain.score("Olympics South Korea", &texts).unwrap(),
                cached.score("Olympics South Korea", &texts).unwrap()
            );
        }
    }

    #[test]
    fn generator_cache() {
        let dir = tempfile::tempdir().unwrap();
        let g = ScriptedGenerator::constant("hello");
        let n = g.counter();
        let cached = CachedGenerator::new(g, ContentCache::open(dir.path()).unwrap());
        assert_eq!(cached.generate("p").unwrap(), "hello");
        assert_eq!(cached.generate("p").unwrap(), "hello");
        assert_eq!(n.load(std::sync::atomic::Ordering::SeqCst), 1);
    }
}
