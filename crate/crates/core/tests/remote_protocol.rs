use std::sync::Arc;
use std::time::{Duration, Instant};

use mrag::providers::{
    BiEncoderScorer, Embedder, Generator, ProviderError, RemoteClient, RemoteConfig, RemoteCrossEncoder,
    RemoteEmbedder, RemoteGenerator, ScoringMode, SemanticScorer, StubEmbedder,
};
use mrag::testkit::{MockBehavior, MockSidecar};

fn client(mock: &MockSidecar) -> RemoteClient {
    RemoteClient::new(RemoteConfig { base_url: mock.url().to_string(), backoff_base_secs: 0.01, ..Default::default() })
}

#[test]
fn health_and_embed_round_trip() {
    let mock = MockSidecar::start(MockBehavior::Healthy);
    let c = Arc::new(client(&mock));
    let h = c.health().unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.dims.embed, 256);
    let e = RemoteEmbedder::connect(c).unwrap();
    assert_eq!(e.dim(), 256);
    assert_eq!(e.provider_id(), "remote:mock-embed");
    let texts = ["x", "x", "Kyla Coleman won in 2018"];
    let v = e.embed(&texts).unwrap();
    assert_eq!(v[0], v[1]);
    assert_eq!(v, StubEmbedder.embed(&texts).unwrap());
}

#[test]
fn remote_bi_encoder_equals_local_stub() {
    let mock = MockSidecar::start(MockBehavior::Healthy);
    let remote = BiEncoderScorer::new(RemoteEmbedder::connect(Arc::new(client(&mock))).unwrap());
    let local = BiEncoderScorer::new(StubEmbedder);
    let texts = ["Houston Rockets won in 1994", "Tomatoes need sun", "Rockets NBA title 1995"];
    assert_eq!(remote.score("Rockets NBA", &texts).unwrap(), local.score("Rockets NBA", &texts).unwrap());
}

#[test]
fn canned_scores_pass_through() {
    let mock = MockSidecar::start(MockBehavior::Healthy);
    let canned = vec![3.5, -1.25, 0.0, 12.0, -7.5];
    mock.set_scores(canned.clone());
    let s = RemoteCrossEncoder::new(Arc::new(client(&mock)), "mock-rerank");
    assert_eq!(s.mode(), ScoringMode::CrossEncoder);
    let got = s.score("q", &["p1", "p2", "p3", "p4", "p5"]).unwrap();
    assert_eq!(got, canned);
}

#[test]
fn score_arity_is_enforced() {
    let mock = MockSidecar::start(MockBehavior::Healthy);
    mock.set_scores(vec![1.0, 2.0]);
    let err = client(&mock).score("q", &["a", "b", "c"]).unwrap_err();
    assert!(matches!(err, ProviderError::Malformed { .. }), "{err}");
}

#[test]
fn generate_honors_stop_sequences() {
    let mock = MockSidecar::start(MockBehavior::Healthy);
    mock.set_reply("2018\n</Answer>\ntrailing");
    let c = RemoteClient::new(RemoteConfig {
        base_url: mock.url().to_string(),
        stop: vec!["</Answer>".into()],
        ..Default::default()
    });
    let g = RemoteGenerator::new(Arc::new(c), "mock-gen");
    assert_eq!(g.generate("prompt").unwrap(), "2018\n");
}

#[test]
fn wrong_dimension_is_typed() {
    let mock = MockSidecar::start(MockBehavior::WrongDim);
    let err = client(&mock).embed(&["a"]).unwrap_err();
    assert!(matches!(err, ProviderError::DimensionMismatch { expected: 256, actual: 255 }), "{err}");
}

#[test]
fn server_errors_are_retried_then_reported() {
    let mock = MockSidecar::start(MockBehavior::Status(503));
    let err = client(&mock).generate("p").unwrap_err();
    assert!(matches!(err, ProviderError::Status { status: 503, .. }), "{err}");
    assert_eq!(mock.request_count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let mock = MockSidecar::start(MockBehavior::Status(400));
    let err = client(&mock).generate("p").unwrap_err();
    assert!(matches!(err, ProviderError::Status { status: 400, .. }));
    assert_eq!(mock.request_count(), 1);
}

#[test]
fn malformed_body_is_typed() {
    let mock = MockSidecar::start(MockBehavior::Malformed);
    let err = client(&mock).generate("p").unwrap_err();
    assert!(matches!(err, ProviderError::Malformed { .. }), "{err}");
}

#[test]
fn slow_server_times_out() {
    let mock = MockSidecar::start(MockBehavior::Delay(Duration::from_secs(3)));
    let c = RemoteClient::new(RemoteConfig {
        base_url: mock.url().to_string(),
        timeout_secs: 0.3,
        attempts: 1,
        ..Default::default()
    });
    let start = Instant::now();
    let err = c.generate("p").unwrap_err();
    assert!(matches!(err, ProviderError::Timeout { .. }), "{err}");
    assert!(start.elapsed() < Duration::from_secs(2));
}

#[test]
fn unreachable_server_is_transport_error() {
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let c = RemoteClient::new(RemoteConfig {
        base_url: format!("http://127.0.0.1:{port}"),
        backoff_base_secs: 0.01,
        ..Default::default()
    });
    let err = c.health().unwrap_err();
    assert!(matches!(err, ProviderError::Transport { .. }), "{err}");
}

#[test]
fn in_flight_requests_are_bounded() {
    let mock = MockSidecar::start(MockBehavior::Delay(Duration::from_millis(150)));
    let c = Arc::new(RemoteClient::new(RemoteConfig {
        base_url: mock.url().to_string(),
        max_in_flight: 2,
        ..Default::default()
    }));
    let start = Instant::now();
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let c = c.clone();
            std::thread::spawn(move || c.generate("p").unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    // six requests, two at a time, 150 ms each
    assert!(start.elapsed() >= Duration::from_millis(440));
}
