mod common;

use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use common::*;
use http_body_util::BodyExt;
use hyret::engine::{SearchEngine, SearchMode};
use hyret::formats;
use hyret::provider::{embed_into_store, EmbedRequest, EmbedResponse, EmbeddingProviderSpec, ProviderKind};
use hyret::service::{router, Health, SearchResponse};
use hyret_core::dense::{Embedder, MockEmbedder, TextKind, VectorStore};
use hyret_core::hybrid::FusionConfig;
use hyret_core::lexical::{build_index, Bm25Params};
use tower::ServiceExt;

const DIM: usize = 16;

fn doc_vectors() -> VectorStore {
    let corpus = formats::parse_corpus(Path::new("c"), TINY_CORPUS).unwrap();
    let texts: Vec<(String, String)> =
        corpus.documents().iter().map(|d| (d.id.clone(), d.full_text())).collect();
    let items: Vec<(&str, &str)> = texts.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    embed_into_store(&MockEmbedder::new(DIM).unwrap(), &items, TextKind::Passage).unwrap()
}

fn engine(dense: Option<Box<dyn Embedder + Send + Sync>>) -> SearchEngine {
    let corpus = formats::parse_corpus(Path::new("c"), TINY_CORPUS).unwrap();
    let index = build_index(&corpus, Bm25Params::default()).unwrap();
    let mut e = SearchEngine::new(FusionConfig::default()).unwrap().with_corpus(corpus).with_index(index);
    if let Some(embedder) = dense {
        e = e.with_dense(doc_vectors(), Some(embedder)).unwrap();
    }
    e
}

fn get(engine: &Arc<SearchEngine>, uri: &str) -> (StatusCode, serde_json::Value) {
    let app = router(Arc::clone(engine));
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let resp = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap())
    })
}

#[test]
fn search_endpoint() {
    let e = Arc::new(engine(None));
    let (status, body) = get(&e, "/search?q=a&k=2&mode=bm25");
    assert_eq!(status, StatusCode::OK);
    let resp: SearchResponse = serde_json::from_value(body).unwrap();
    assert_eq!(resp.mode, "bm25");
    let ids: Vec<&str> = resp.results.iter().map(|h| h.id.as_str()).collect();
    assert_eq!(ids, ["d1", "d2"]);
    assert_eq!(resp.results[0].text, "a b");
    assert_eq!(resp.results[1].rank, 2);

    for bad in ["/search?q=", "/search?q=%20%2C", "/search?q=a&k=0", "/search?q=a&k=101", "/search?q=a&k=x", "/search?q=a&mode=fuzzy"] {
        let (status, body) = get(&e, bad);
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(body["error"].is_string());
    }
    assert_eq!(get(&e, "/search?q=a&k=100&mode=bm25").0, StatusCode::OK);
    assert_eq!(get(&e, "/search?q=a&mode=dense").0, StatusCode::CONFLICT);
    // hybrid is the default mode and needs vectors too
    assert_eq!(get(&e, "/search?q=a").0, StatusCode::CONFLICT);
}

#[test]
fn healthz_endpoint() {
    let e = Arc::new(engine(Some(Box::new(MockEmbedder::new(DIM).unwrap()))));
    let (status, body) = get(&e, "/healthz");
    assert_eq!(status, StatusCode::OK);
    let h: Health = serde_json::from_value(body).unwrap();
    assert_eq!((h.status.as_str(), h.documents, h.indexed, h.vectors), ("ok", 3, 3, 3));
}

#[test]
fn service_matches_engine() {
    let e = Arc::new(engine(Some(Box::new(MockEmbedder::new(DIM).unwrap()))));
    for mode in SearchMode::ALL {
        for q in ["a", "b c", "c c a"] {
            let (status, body) = get(&e, &format!("/search?q={}&k=3&mode={mode}", q.replace(' ', "+")));
            assert_eq!(status, StatusCode::OK);
            let resp: SearchResponse = serde_json::from_value(body).unwrap();
            let direct = e.search(q, 3, mode).unwrap();
            let got: Vec<(String, f64)> = resp.results.into_iter().map(|h| (h.id, h.score)).collect();
            let want: Vec<(String, f64)> = direct.into_iter().map(|h| (h.id, h.score)).collect();
            assert_eq!(got, want, "{mode} {q}");
        }
    }
}

/// `/embed` backed by the mock embedder. Records every request. When
/// `lie_dim` is set, reports that dimension instead of the real one.
fn spawn_embed_server(lie_dim: Option<usize>) -> (String, Arc<Mutex<Vec<EmbedRequest>>>) {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let app = Router::new().route(
                "/embed",
                post(move |Json(req): Json<EmbedRequest>| async move {
                    let mock = MockEmbedder::new(DIM).unwrap();
                    let vectors = req.texts.iter().map(|t| mock.embed_one(t).unwrap().into_vec()).collect();
                    log.lock().unwrap().push(req);
                    Json(EmbedResponse { dim: lie_dim.unwrap_or(DIM), vectors })
                }),
            );
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (format!("http://{}", rx.recv().unwrap()), seen)
}

fn remote_spec(endpoint: String) -> EmbeddingProviderSpec {
    EmbeddingProviderSpec {
        kind: ProviderKind::Remote,
        dim: DIM,
        endpoint: Some(endpoint),
        batch_size: 2,
        ..EmbeddingProviderSpec::default()
    }
}

#[test]
fn remote_provider_round_trip() {
    let (url, seen) = spawn_embed_server(None);
    let spec = EmbeddingProviderSpec { query_prefix: Some("query: ".into()), ..remote_spec(url) };
    let remote = spec.build(None).unwrap().unwrap();
    let texts = ["a b", "b c", "c", "a"];
    let got = remote.embed(&texts, TextKind::Passage).unwrap();
    let local = MockEmbedder::new(DIM).unwrap();
    for (t, v) in texts.iter().zip(&got) {
        assert_eq!(v, &local.embed_one(t).unwrap());
    }
    remote.embed(&["a"], TextKind::Query).unwrap();
    let log = seen.lock().unwrap();
    // four passages in batches of two, then one query
    assert_eq!(log.len(), 3);
    assert_eq!(log[0].texts, ["a b", "b c"]);
    assert_eq!(log[2].kind, "query");
    assert_eq!(log[2].texts, ["query: a"]);
    drop(log);

    let e = Arc::new(engine(Some(remote)));
    let (status, body) = get(&e, "/search?q=a+b&mode=dense&k=3");
    assert_eq!(status, StatusCode::OK);
    let resp: SearchResponse = serde_json::from_value(body).unwrap();
    assert_eq!(resp.results[0].id, "d1");
}

#[test]
fn remote_provider_errors() {
    let (url, _) = spawn_embed_server(Some(DIM + 1));
    let remote = remote_spec(url).build(None).unwrap().unwrap();
    let err = remote.embed(&["a"], TextKind::Query).unwrap_err();
    assert!(matches!(err, hyret_core::Error::Provider(_)), "{err}");
    assert!(err.to_string().contains("dim"), "{err}");
    let e = Arc::new(engine(Some(remote)));
    assert_eq!(get(&e, "/search?q=a&mode=dense").0, StatusCode::INTERNAL_SERVER_ERROR);

    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "c.jsonl", TINY_CORPUS);
    let vectors = dir.path().join("v.jsonl");
    formats::write_vectors(&vectors, &doc_vectors(), "mock").unwrap();
    let config = serde_json::json!({
        "provider": { "kind": "remote", "dim": DIM, "endpoint": "http://127.0.0.1:9", "timeout_secs": 5 }
    });
    let config = write(dir.path(), "cfg.json", &config.to_string());
    let o = hyret([
        "--config", config.to_str().unwrap(), "search", "--corpus", corpus.to_str().unwrap(),
        "--vectors", vectors.to_str().unwrap(), "-q", "a", "--mode", "dense",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}
