//! Test doubles: scripted generators, counting scorers, and an in-process
//! mock of the sidecar HTTP protocol.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::{json, Value};

use crate::providers::{
    BiEncoderScorer, Embedder, Generator, ProviderError, ScoringMode, SemanticScorer, StubEmbedder, STUB_DIM,
};

type PairFn = Box<dyn Fn(&str, &str) -> f64 + Send + Sync>;
type Responder = Box<dyn Fn(&str, usize) -> Result<String, ProviderError> + Send + Sync>;

/// Generator whose replies are fixed in advance.
pub struct ScriptedGenerator {
    id: String,
    responder: Responder,
    delay: Option<Duration>,
    calls: Arc<AtomicUsize>,
}

impl ScriptedGenerator {
    pub fn from_fn(f: impl Fn(&str, usize) -> Result<String, ProviderError> + Send + Sync + 'static) -> Self {
        Self { id: "scripted".into(), responder: Box::new(f), delay: None, calls: Arc::new(AtomicUsize::new(0)) }
    }

    pub fn constant(reply: &str) -> Self {
        let reply = reply.to_string();
        Self::from_fn(move |_, _| Ok(reply.clone()))
    }

    /// Replies in order; the last reply repeats once the list is exhausted.
    pub fn sequence(replies: Vec<String>) -> Self {
        assert!(!replies.is_empty());
        Self::from_fn(move |_, i| Ok(replies[i.min(replies.len() - 1)].clone()))
    }

    pub fn garbage() -> Self {
        Self::constant("}}{{ <<not a valid reply>> ::")
    }

    pub fn failing() -> Self {
        Self::from_fn(|_, _| {
            Err(ProviderError::Transport { endpoint: "/v1/generate".into(), message: "connection refused".into() })
        })
    }

    /// Sleeps for `after`, then reports a timeout.
    pub fn timing_out(after: Duration) -> Self {
        let mut g = Self::from_fn(|_, _| Err(ProviderError::Timeout { endpoint: "/v1/generate".into() }));
        g.delay = Some(after);
        g
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.into();
        self
    }

    pub fn counter(&self) -> Arc<AtomicUsize> {
        self.calls.clone()
    }
}

impl Generator for ScriptedGenerator {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        (self.responder)(prompt, i)
    }
}

/// Stub bi-encoder scorer that counts how many texts it scored.
pub struct CountingScorer {
    id: String,
    inner: BiEncoderScorer<StubEmbedder>,
    scored: Arc<AtomicUsize>,
}

impl CountingScorer {
    pub fn new(id: &str) -> Self {
        Self { id: id.into(), inner: BiEncoderScorer::new(StubEmbedder::new()), scored: Arc::new(AtomicUsize::new(0)) }
    }

    pub fn counter(&self) -> Arc<AtomicUsize> {
        self.scored.clone()
    }
}

impl SemanticScorer for CountingScorer {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn mode(&self) -> ScoringMode {
        ScoringMode::BiEncoder
    }

    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        self.scored.fetch_add(texts.len(), Ordering::SeqCst);
        self.inner.score(query, texts)
    }
}

/// Scorer defined by a closure over (query, text).
pub struct FnScorer {
    mode: ScoringMode,
    f: PairFn,
}

impl FnScorer {
    pub fn new(mode: ScoringMode, f: impl Fn(&str, &str) -> f64 + Send + Sync + 'static) -> Self {
        Self { mode, f: Box::new(f) }
    }
}

impl SemanticScorer for FnScorer {
    fn provider_id(&self) -> &str {
        "fn-scorer"
    }

    fn mode(&self) -> ScoringMode {
        self.mode
    }

    fn score(&self, query: &str, texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        Ok(texts.iter().map(|t| (self.f)(query, t)).collect())
    }
}

/// Scorer that always fails.
pub struct FailingScorer;

impl SemanticScorer for FailingScorer {
    fn provider_id(&self) -> &str {
        "failing"
    }

    fn mode(&self) -> ScoringMode {
        ScoringMode::CrossEncoder
    }

    fn score(&self, _query: &str, _texts: &[&str]) -> Result<Vec<f64>, ProviderError> {
        Err(ProviderError::Transport { endpoint: "/v1/score".into(), message: "scorer unavailable".into() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockBehavior {
    Healthy,
    /// `/v1/embed` returns vectors one shorter than `/v1/health` announces.
    WrongDim,
    /// Every request gets this HTTP status.
    Status(u16),
    /// 200 responses whose body is not JSON.
    Malformed,
    /// Healthy responses sent after a pause.
    Delay(Duration),
}

#[derive(Debug)]
struct MockState {
    behavior: MockBehavior,
    scores: Option<Vec<f64>>,
    reply: String,
}

/// In-process HTTP server speaking the sidecar protocol.
///
/// Embeddings come from [`StubEmbedder`], scores are stub cosines unless
/// canned ones are set, and generation returns a fixed reply cut at the
/// first requested stop sequence.
pub struct MockSidecar {
    url: String,
    server: Arc<tiny_http::Server>,
    state: Arc<Mutex<MockState>>,
    requests: Arc<AtomicUsize>,
    worker: Option<JoinHandle<()>>,
}

impl MockSidecar {
    pub fn start(behavior: MockBehavior) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock sidecar"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let state = Arc::new(Mutex::new(MockState { behavior, scores: None, reply: "None".into() }));
        let requests = Arc::new(AtomicUsize::new(0));
        let worker = {
            let (server, state, requests) = (server.clone(), state.clone(), requests.clone());
            std::thread::spawn(move || {
                for req in server.incoming_requests() {
                    requests.fetch_add(1, Ordering::SeqCst);
                    let state = state.clone();
                    std::thread::spawn(move || handle(req, &state));
                }
            })
        };
        Self { url: format!("http://127.0.0.1:{port}"), server, state, requests, worker: Some(worker) }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn set_behavior(&self, behavior: MockBehavior) {
        self.state.lock().unwrap().behavior = behavior;
    }

    /// Scores returned verbatim by `/v1/score`.
    pub fn set_scores(&self, scores: Vec<f64>) {
        self.state.lock().unwrap().scores = Some(scores);
    }

    pub fn set_reply(&self, reply: &str) {
        self.state.lock().unwrap().reply = reply.into();
    }
}

impl Drop for MockSidecar {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn handle(mut req: tiny_http::Request, state: &Mutex<MockState>) {
    let mut body = String::new();
    let _ = req.as_reader().read_to_string(&mut body);
    let (behavior, scores, reply) = {
        let s = state.lock().unwrap();
        (s.behavior.clone(), s.scores.clone(), s.reply.clone())
    };
    let (status, text) = match behavior {
        MockBehavior::Status(code) => (code, json!({"error": "injected"}).to_string()),
        MockBehavior::Malformed => (200, "<html>not json</html>".to_string()),
        MockBehavior::Delay(d) => {
            std::thread::sleep(d);
            respond_healthy(req.url(), &body, scores, &reply, false)
        }
        MockBehavior::Healthy => respond_healthy(req.url(), &body, scores, &reply, false),
        MockBehavior::WrongDim => respond_healthy(req.url(), &body, scores, &reply, true),
    };
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
    let _ = req.respond(tiny_http::Response::from_string(text).with_status_code(status).with_header(header));
}

fn respond_healthy(path: &str, body: &str, scores: Option<Vec<f64>>, reply: &str, wrong_dim: bool) -> (u16, String) {
    let Ok(payload) = serde_json::from_str::<Value>(body) else {
        return (400, json!({"error": "body is not JSON"}).to_string());
    };
    let strings = |key: &str| -> Option<Vec<String>> {
        payload.get(key)?.as_array()?.iter().map(|v| v.as_str().map(String::from)).collect()
    };
    match path {
        "/v1/health" => (
            200,
            json!({
                "status": "ok",
                "models": {"embed": "mock-embed", "score": "mock-rerank", "generate": "mock-gen"},
                "dims": {"embed": STUB_DIM},
            })
            .to_string(),
        ),
        "/v1/embed" => {
            let Some(texts) = strings("texts") else {
                return (400, json!({"error": "texts required"}).to_string());
            };
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let mut vectors: Vec<Vec<f32>> =
                StubEmbedder.embed(&refs).unwrap().into_iter().map(|v| v.values().to_vec()).collect();
            let mut dim = STUB_DIM;
            if wrong_dim {
                vectors.iter_mut().for_each(|v| {
                    v.pop();
                });
                dim -= 1;
            }
            (200, json!({"vectors": vectors, "dim": dim}).to_string())
        }
        "/v1/score" => {
            let (Some(query), Some(cands)) = (payload.get("query").and_then(Value::as_str), strings("candidates"))
            else {
                return (400, json!({"error": "query and candidates required"}).to_string());
            };
            let scores = scores.unwrap_or_else(|| {
                let refs: Vec<&str> = cands.iter().map(String::as_str).collect();
                BiEncoderScorer::new(StubEmbedder).score(query, &refs).unwrap()
            });
            (200, json!({"scores": scores}).to_string())
        }
        "/v1/generate" => {
            if payload.get("prompt").and_then(Value::as_str).is_none() {
                return (400, json!({"error": "prompt required"}).to_string());
            }
            let mut text = reply.to_string();
            for stop in strings("stop").unwrap_or_default() {
                if let Some(i) = text.find(&stop) {
                    text.truncate(i);
                }
            }
            (200, json!({"text": text}).to_string())
        }
        _ => (404, json!({"error": "unknown endpoint"}).to_string()),
    }
}

/// Deterministic corpus of recurring fictional events, each won by a
/// different person in different years, plus one time-constrained question
/// per event whose answer depends on the dates. No question mentions a
/// year that appears in any passage.
pub fn synthetic_benchmark(
    events: usize,
    per_event: usize,
) -> (crate::corpus::Corpus, Vec<crate::eval::BenchmarkSample>) {
    use crate::corpus::{Corpus, Passage};
    use crate::eval::{BenchmarkSample, Source};

    const PLACE: [&str; 8] = ["Varn", "Oskel", "Trebin", "Quarrow", "Lissim", "Dunmere", "Halvik", "Pendry"];
    const KIND: [&str; 6] = ["Regatta", "Open", "Marathon", "Derby", "Cup", "Rally"];
    const FIRST: [&str; 20] = [
        "Abel", "Brina", "Corvin", "Dessa", "Emrys", "Fenna", "Gideon", "Hollis", "Ilka", "Jorund", "Kestrel", "Lorne",
        "Maelis", "Nadir", "Orla", "Peregrin", "Quilla", "Rhosyn", "Sabeth", "Tamsin",
    ];
    const LAST: [&str; 16] = [
        "Ashgrove",
        "Bellweather",
        "Coldridge",
        "Dunleavy",
        "Everhart",
        "Fairbanks",
        "Greywell",
        "Hartmoor",
        "Ironside",
        "Jessop",
        "Kingsley",
        "Larkspur",
        "Merriwether",
        "Northcott",
        "Oakhurst",
        "Pemberton",
    ];
    assert!(events <= PLACE.len() * KIND.len() && events * per_event <= FIRST.len() * LAST.len() && per_event >= 3);

    let mut passages = Vec::new();
    let mut samples = Vec::new();
    for e in 0..events {
        let event = format!("{} {}", PLACE[e % PLACE.len()], KIND[e / PLACE.len()]);
        let years: Vec<i32> =
            (0..per_event).map(|j| 1950 + (e as i32 % 9) + 6 * j as i32 + (j as i32 * 7) % 3).collect();
        let winners: Vec<String> = (0..per_event)
            .map(|j| {
                let n = e * per_event + j;
                format!("{} {}", FIRST[n % FIRST.len()], LAST[(n / FIRST.len()) % LAST.len()])
            })
            .collect();
        let ids: Vec<String> = (0..per_event).map(|j| format!("ev{e:02}-{j}")).collect();
        // canonical order is scrambled so that position does not track year
        let mut order: Vec<usize> = (0..per_event).collect();
        order.rotate_left(e % per_event);
        for &j in &order {
            passages.push(Passage::new(
                ids[j].clone(),
                format!("{event} {}", years[j]),
                format!(
                    "The {event} of {} was won by {}. The {event} draws crowds every season.",
                    years[j], winners[j]
                ),
            ));
        }
        let k = 1 + e % (per_event - 2);
        let (question, gold) = match e % 4 {
            0 => (format!("Who won the {event} as of {}?", years[k] + 2), k),
            1 => (format!("Who won the {event} before {}?", years[k + 1] - 1), k),
            2 => (format!("Who was the first winner of the {event} after {}?", years[k - 1] + 1), k),
            _ => (format!("Who won the {event} as of {}?", years[k] + 3), k),
        };
        samples.push(BenchmarkSample {
            id: format!("q{e:02}"),
            question,
            answers: vec![winners[gold].clone()],
            gold_evidence: vec![ids[gold].clone()],
            source: Source::Other,
            perturbed: true,
        });
    }
    (Corpus::from_passages(passages).expect("unique ids"), samples)
}
