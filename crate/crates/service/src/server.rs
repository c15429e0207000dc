//! HTTP session API. Agent traces stream back as server-sent events.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/v1/sessions` | create; optional body `{max_steps, max_tokens, temperature}` |
//! | GET | `/v1/sessions` | list summaries |
//! | GET | `/v1/sessions/{id}` | turns and traces |
//! | DELETE | `/v1/sessions/{id}` | remove |
//! | POST | `/v1/sessions/{id}/messages` | body `{text}`; SSE stream of `thought`, `action`, `observation`, then `final` or `error` |

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use futures::StreamExt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::mpsc;
use tokio_stream::wrappers::UnboundedReceiverStream;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use workbench_core::agent::{EventBody, TraceEvent};

use crate::session::{SessionOverrides, SessionStore, StoreError};

/// One SSE payload. `seq` counts from 0 within a message and has no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub seq: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_index: Option<u32>,
    pub payload: Value,
    pub timestamp: DateTime<Utc>,
}

impl StreamEvent {
    fn from_trace(seq: u64, event: &TraceEvent) -> Self {
        let payload = match &event.body {
            EventBody::Thought(t) | EventBody::Observation(t) | EventBody::FinalAnswer(t) => Value::String(t.clone()),
            EventBody::Action(blob) => serde_json::to_value(blob).expect("action serializes"),
        };
        StreamEvent {
            seq,
            kind: event.kind().to_string(),
            step_index: Some(event.step_index),
            payload,
            timestamp: event.timestamp,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == "final" || self.kind == "error"
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageBody {
    text: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Busy(_) => StatusCode::CONFLICT,
            StoreError::InvalidOverrides(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn parse_body<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}")))
}

async fn create_session(State(store): State<Arc<SessionStore>>, body: Bytes) -> Result<Response, ApiError> {
    let overrides: SessionOverrides = parse_body(&body)?;
    let view = tokio::task::spawn_blocking(move || store.create(&overrides))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_sessions(State(store): State<Arc<SessionStore>>) -> Response {
    Json(json!({ "sessions": store.list() })).into_response()
}

async fn get_session(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(store.get(&id)?).into_response())
}

async fn delete_session(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    store.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn post_message(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let message: MessageBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("expected {{\"text\": ...}}: {e}")))?;
    if message.text.trim().is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "text must not be empty".into()));
    }
    let guard = store.begin(&id)?;
    let (tx, rx) = mpsc::unbounded_channel::<StreamEvent>();

    tokio::task::spawn_blocking(move || {
        let mut seq = 0u64;
        let mut held_final = None;
        let result = guard.run(&message.text, &mut |event| {
            // the final event goes out after the session is released
            if matches!(event.body, EventBody::FinalAnswer(_)) {
                held_final = Some(event.clone());
            } else {
                let _ = tx.send(StreamEvent::from_trace(seq, event));
                seq += 1;
            }
        });
        drop(guard);
        let terminal = match (result, held_final) {
            (Ok(_), Some(event)) => StreamEvent::from_trace(seq, &event),
            (Ok(outcome), None) => StreamEvent {
                seq,
                kind: "final".into(),
                step_index: None,
                payload: Value::String(outcome.answer),
                timestamp: Utc::now(),
            },
            (Err(e), _) => StreamEvent {
                seq,
                kind: "error".into(),
                step_index: None,
                payload: json!({ "message": e.to_string() }),
                timestamp: Utc::now(),
            },
        };
        let _ = tx.send(terminal);
    });

    let stream = UnboundedReceiverStream::new(rx).map(|event| {
        let sse = Event::default()
            .event(event.kind.clone())
            .id(event.seq.to_string())
            .json_data(&event)
            .expect("stream events serialize");
        Ok::<_, Infallible>(sse)
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()).into_response())
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers(Any);
    if origins.is_empty() || origins.iter().any(|o| o == "*") {
        layer.allow_origin(Any)
    } else {
        let values: Vec<HeaderValue> = origins.iter().filter_map(|o| o.parse().ok()).collect();
        layer.allow_origin(AllowOrigin::list(values))
    }
}

pub fn router(store: Arc<SessionStore>, cors_origins: &[String]) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/v1/sessions", post(create_session).get(list_sessions))
        .route("/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/v1/sessions/{id}/messages", post(post_message))
        .layer(cors(cors_origins))
        .with_state(store)
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Parse an SSE body into its events; used by clients and tests.
pub fn parse_sse(body: &str) -> Vec<StreamEvent> {
    body.split("\n\n")
        .filter_map(|block| {
            let data: Vec<&str> = block.lines().filter_map(|l| l.strip_prefix("data:")).map(str::trim_start).collect();
            (!data.is_empty()).then(|| serde_json::from_str(&data.join("\n")).ok()).flatten()
        })
        .collect()
}
