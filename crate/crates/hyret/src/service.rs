//! Read-only HTTP search: `GET /search` and `GET /healthz`.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use hyret_core::text::analyze;
use serde::{Deserialize, Serialize};

use crate::engine::{SearchEngine, SearchMode};
use crate::error::Error;

pub const MAX_K: usize = 100;
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    pub k: Option<String>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub text: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub mode: String,
    pub results: Vec<Hit>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub documents: usize,
    pub indexed: usize,
    pub vectors: usize,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

pub fn router(engine: Arc<SearchEngine>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/healthz", get(healthz))
        .with_state(engine)
}

async fn healthz(State(engine): State<Arc<SearchEngine>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        documents: engine.corpus.as_ref().map_or(0, |c| c.len()),
        indexed: engine.index.as_ref().map_or(0, |i| i.num_docs()),
        vectors: engine.vectors.as_ref().map_or(0, |v| v.len()),
    })
}

async fn search(
    State(engine): State<Arc<SearchEngine>>,
    Query(params): Query<SearchParams>,
) -> Result<Json<SearchResponse>, ApiError> {
    let q = params.q.unwrap_or_default();
    if analyze(&q).is_empty() {
        return Err(bad_request("q must contain at least one token"));
    }
    let k = match params.k.as_deref() {
        None => DEFAULT_K,
        Some(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|k| (1..=MAX_K).contains(k))
            .ok_or_else(|| bad_request(format!("k must be an integer in 1..={MAX_K}")))?,
    };
    let mode = match params.mode.as_deref() {
        None => SearchMode::default(),
        Some(raw) => raw.parse().map_err(|e: Error| bad_request(e.to_string()))?,
    };
    if !engine.supports(mode) {
        return Err(ApiError(
            StatusCode::CONFLICT,
            format!("mode `{mode}` is not available: {}", crate::engine::NO_VECTORS),
        ));
    }
    // Remote embedding uses a blocking client; keep it off the async workers.
    let worker = Arc::clone(&engine);
    let query = q.clone();
    let hits = tokio::task::spawn_blocking(move || worker.search(&query, k, mode))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let results = hits
        .into_iter()
        .enumerate()
        .map(|(i, h)| Hit {
            text: engine.text(&h.id).unwrap_or_default().to_string(),
            id: h.id,
            score: h.score,
            rank: i + 1,
        })
        .collect();
    Ok(Json(SearchResponse { query: q, mode: mode.to_string(), results }))
}

/// Bind and serve until the process is stopped.
pub fn serve(engine: SearchEngine, addr: &str) -> crate::error::Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Internal(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::Usage(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Error::Internal(e.to_string()))?;
        eprintln!("listening on http://{local}");
        axum::serve(listener, router(Arc::new(engine)))
            .await
            .map_err(|e| Error::Internal(e.to_string()))
    })
}
