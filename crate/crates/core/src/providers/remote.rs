//! HTTP+JSON client for the model sidecar.
//!
//! Protocol (all `POST`, JSON bodies):
//!
//! | path           | request                                   | response                                  |
//! |----------------|-------------------------------------------|-------------------------------------------|
//! | `/v1/health`   | `{}`                                      | `{status:"ok", models:{..}, dims:{embed}}` |
//! | `/v1/embed`    | `{texts:[str]}`                           | `{vectors:[[f]], dim}`                    |
//! | `/v1/score`    | `{query, candidates:[str]}`               | `{scores:[f]}`                            |
//! | `/v1/generate` | `{prompt, max_tokens, stop:[str]}`        | `{text}`                                  |

use std::fmt;
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Embedder, EmbeddingVector, Generator, ProviderError, ScoringMode, SemanticScorer};

pub const SIDECAR_URL_ENV: &str = "MRAG_SIDECAR_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Health,
    Embed,
    Score,
    Generate,
}

impl Endpoint {
    pub fn path(self) -> &'static str {
        match self {
            Self::Health => "/v1/health",
            Self::Embed => "/v1/embed",
            Self::Score => "/v1/score",
            Self::Generate => "/v1/generate",
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.path())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout_secs: f64,
    /// Total attempts per request, including the first.
    pub attempts: u32,
    pub backoff_base_secs: f64,
    pub max_in_flight: usize,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8765".into(),
            timeout_secs: 30.0,
            attempts: 3,
            backoff_base_secs: 0.5,
            max_in_flight: 8,
            max_tokens: 256,
            stop: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    #[serde(default)]
    pub models: serde_json::Map<String, Value>,
    pub dims: HealthDims,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct HealthDims {
    pub embed: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
    dim: usize,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(n: usize) -> Self {
        Self { available: Mutex::new(n.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

pub struct RemoteClient {
    config: RemoteConfig,
    agent: ureq::Agent,
    in_flight: InFlight,
    embed_dim: OnceLock<usize>,
}

impl fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteClient").field("config", &self.config).finish()
    }
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { in_flight: InFlight::new(config.max_in_flight), config, agent, embed_dim: OnceLock::new() }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// POSTs `payload` with bounded retries and exponential backoff.
    pub fn remote_call(&self, endpoint: Endpoint, payload: &Value) -> Result<Value, ProviderError> {
        let attempts = self.config.attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self.config.backoff_base_secs * 2f64.powi(attempt as i32 - 1);
                std::thread::sleep(Duration::from_secs_f64(wait));
            }
            match self.call_once(endpoint, payload) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() => {
                    log::debug!("{endpoint} attempt {} failed: {e}", attempt + 1);
                    last = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn call_once(&self, endpoint: Endpoint, payload: &Value) -> Result<Value, ProviderError> {
        let _slot = self.in_flight.acquire();
        let url = format!("{}{}", self.config.base_url.trim_end_matches('/'), endpoint.path());
        let name = endpoint.to_string();
        let mut resp = self.agent.post(&url).send_json(payload).map_err(|e| map_ureq(&name, e))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| map_ureq(&name, e))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { endpoint: name, status, body });
        }
        serde_json::from_str(&body).map_err(|e| ProviderError::Malformed { endpoint: name, message: e.to_string() })
    }

    fn typed<T: DeserializeOwned>(&self, endpoint: Endpoint, payload: Value) -> Result<T, ProviderError> {
        let value = self.remote_call(endpoint, &payload)?;
        serde_json::from_value(value)
            .map_err(|e| ProviderError::Malformed { endpoint: endpoint.to_string(), message: e.to_string() })
    }

    pub fn health(&self) -> Result<HealthResponse, ProviderError> {
        let h: HealthResponse = self.typed(Endpoint::Health, json!({}))?;
        if h.status != "ok" {
            return Err(ProviderError::Malformed {
                endpoint: Endpoint::Health.to_string(),
                message: format!("status {:?}", h.status),
            });
        }
        let _ = self.embed_dim.set(h.dims.embed);
        Ok(h)
    }

    /// Embedding dimension reported by `/v1/health`, fetched once.
    pub fn embed_dim(&self) -> Result<usize, ProviderError> {
        if let Some(&d) = self.embed_dim.get() {
            return Ok(d);
        }
        Ok(self.health()?.dims.embed)
    }

    pub fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let expected = self.embed_dim()?;
        let r: EmbedResponse = self.typed(Endpoint::Embed, json!({ "texts": texts }))?;
        if r.vectors.len() != texts.len() {
            return Err(ProviderError::Malformed {
                endpoint: Endpoint::Embed.to_string(),
                message: format!("{} vectors for {} texts", r.vectors.len(), texts.len()),
            });
        }
        if r.dim != expected {
            return Err(ProviderError::DimensionMismatch { expected, actual: r.dim });
        }
        r.vectors
            .into_iter()
            .map(|v| {
                if v.len() != expected {
                    return Err(ProviderError::DimensionMismatch { expected, actual: v.len() });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ProviderError::Malformed {
                        endpoint: Endpoint::Embed.to_string(),
                        message: "non-finite vector component".into(),
                    });
                }
                Ok(EmbeddingVector::from_raw(v))
            })
            .collect()
    }

    pub fn score(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>, ProviderError> {
        let r: ScoreResponse = self.typed(Endpoint::Score, json!({ "query": query, "candidates": candidates }))?;
        if r.scores.len() != candidates.len() {
            return Err(ProviderError::Malformed {
                endpoint: Endpoint::Score.to_string(),
                message: format!("{} scores for {} candidates", r.scores.len(), candidates.len()),
            });
        }
        if r.scores.iter().any(|s| !s.is_finite()) {
            return Err(ProviderError::Malformed {
                endpoint: Endpoint::Score.to_string(),
                message: "non-finite score".into(),
            });
        }
        Ok(r.scores)
    }

    pub fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        let r: GenerateResponse = self.typed(
            Endpoint::Generate,
            json!({ "prompt": prompt, "max_tokens": self.config.max_tokens, "stop": self.config.stop }),
        )?;
        Ok(r.text)
    }
}

fn map_ureq(endpoint: &str, e: ureq::Error) -> ProviderError {
    match e {
        ureq::Error::Timeout(_) => ProviderError::Timeout { endpoint: endpoint.to_string() },
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
            ProviderError::Timeout { endpoint: endpoint.to_string() }
        }
        ureq::Error::Json(j) => ProviderError::Malformed { endpoint: endpoint.to_string(), message: j.to_string() },
        other => ProviderError::Transport { endpoint: endpoint.to_string(), message: other.to_string() },
    }
}

/// Sidecar-backed bi-encoder embeddings.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    client: Arc<RemoteClient>,
    provider_id: String,
    dim: usize,
}

impl RemoteEmbedder {
    /// Queries `/v1/health` for the embedding dimension.
    pub fn connect(client: Arc<RemoteClient>) -> Result<Self, ProviderError> {
        let health = client.health()?;
        let model = health.models.get("embed").and_then(Value::as_str).unwrap_or("embed");
        Ok(Self { provider_id: format!("remote:{model}"), dim: health.dims.embed, client })
    }
}

impl Embedder for RemoteEmbedder {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        self.client.embed(texts)
    }
}

/// Sidecar-backed joint (query, text) scoring.
#[derive(Debug, Clone)]
pub struct RemoteCrossEncoder {
    client: Arc<RemoteClient>,
    provider_id: String,
}

impl RemoteCrossEncoder {
    pub fn new(client: Arc<RemoteClient>, model: &str) -> Self {
        Self { provider_id: format!("remote:{model}"), client }
    }
}

impl SemanticScorer for RemoteCrossEncoder {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn mode(&self) -> ScoringMode {
        ScoringMode::CrossEncoder
    }

    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        self.client.score(query, texts)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    client: Arc<RemoteClient>,
    provider_id: String,
}

impl RemoteGenerator {
    pub fn new(client: Arc<RemoteClient>, model: &str) -> Self {
        Self { provider_id: format!("remote:{model}"), client }
    }
}

impl Generator for RemoteGenerator {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        self.client.generate(prompt)
    }
}
