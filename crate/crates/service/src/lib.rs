//! Live handover sessions over HTTP.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/api/sessions` | `{"scenario": {...}, "mode": "stepped" \| "realtime"}` |
//! | POST | `/api/sessions/{id}/step` | `{"n": 1}` (stepped sessions only) |
//! | POST | `/api/sessions/{id}/response` | `{"kind": "ack" \| "takeover" \| "handback", "metadata": ...}` |
//! | GET | `/api/sessions/{id}/state` | |
//! | GET | `/api/sessions/{id}/events?since=SEQ` | server-sent events, or JSON long-poll |
//!
//! Everything else is served from the static directory. Sessions created
//! here have no scripted driver: the connected client is the only source of
//! responses.

mod error;
mod registry;

use std::collections::{HashMap, VecDeque};
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use handover_core::driver::ResponseKind;
use handover_core::orchestrator::{metrics, Event, Responder, SessionConfig};
use handover_core::scenario::{scenario_from_value, ScenarioError};
use serde_json::{json, Map, Value};
use tokio::time::MissedTickBehavior;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use registry::{LiveSession, Mode, Registry};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Template for every new session. The responder is forced to
    /// [`Responder::None`].
    pub session: SessionConfig,
    /// Wall-clock seconds per simulated second in realtime mode.
    pub time_scale: f64,
    pub static_dir: Option<PathBuf>,
    /// Longest a long-poll request waits for new events.
    pub long_poll: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            session: SessionConfig::default(),
            time_scale: 1.0,
            static_dir: Some(default_static_dir()),
            long_poll: Duration::from_secs(20),
        }
    }
}

/// The bundled placeholder page.
pub fn default_static_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/static"))
}

struct Shared {
    registry: Registry,
    config: ServiceConfig,
}

type AppState = State<Arc<Shared>>;

pub fn router(config: ServiceConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let shared = Arc::new(Shared {
        registry: Registry::default(),
        config,
    });
    let api = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/step", post(step_session))
        .route("/api/sessions/{id}/response", post(post_response))
        .route("/api/sessions/{id}/state", get(session_state))
        .route("/api/sessions/{id}/events", get(stream_events))
        .with_state(shared);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves on `127.0.0.1:port` until the process ends.
pub async fn serve(port: u16, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(config)).await
}

fn parse_body(body: &Bytes) -> Result<Map<String, Value>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Map::new());
    }
    match serde_json::from_slice(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ApiError::bad("$", "expected a JSON object")),
        Err(e) => Err(ApiError::bad("$", e.to_string())),
    }
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str]) -> Result<(), ApiError> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ApiError::bad(k.as_str(), "unknown field")),
        None => Ok(()),
    }
}

async fn create_session(State(shared): AppState, body: Bytes) -> Result<Response, ApiError> {
    let map = parse_body(&body)?;
    reject_unknown(&map, &["scenario", "mode"])?;
    let doc = map
        .get("scenario")
        .ok_or_else(|| ApiError::bad("scenario", "missing required field"))?;
    let scenario = scenario_from_value(doc).map_err(|e| match e {
        ScenarioError::Validation { path, message } => {
            let path = if path == "$" { "scenario".into() } else { format!("scenario.{path}") };
            ApiError::BadRequest { path, message }
        }
        other => ApiError::bad("scenario", other.to_string()),
    })?;
    let mode = match map.get("mode") {
        None => Mode::Stepped,
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|_| ApiError::bad("mode", "expected \"realtime\" or \"stepped\""))?,
    };
    let config = SessionConfig {
        responder: Responder::None,
        ..shared.config.session.clone()
    };
    let live = shared
        .registry
        .create(scenario, mode, config, shared.config.time_scale.max(1e-3));
    if mode == Mode::Realtime {
        spawn_ticker(live.clone());
    }
    let machine = live.lock().session.machine();
    let body = json!({"id": live.id, "mode": mode, "machine": machine});
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn spawn_ticker(live: Arc<LiveSession>) {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(live.tick_period());
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        interval.tick().await;
        loop {
            interval.tick().await;
            let l = live.clone();
            let done = tokio::task::spawn_blocking(move || {
                let _ = l.step(1);
                l.lock().session.is_done()
            })
            .await
            .unwrap_or(true);
            if done {
                break;
            }
        }
    });
}

async fn step_session(State(shared): AppState, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let live = shared.registry.get(&id)?;
    let map = parse_body(&body)?;
    reject_unknown(&map, &["n"])?;
    let n = match map.get("n") {
        None => 1,
        Some(v) => v
            .as_u64()
            .filter(|n| (1..=100_000).contains(n))
            .ok_or_else(|| ApiError::bad("n", "expected an integer in [1, 100000]"))? as u32,
    };
    if live.mode == Mode::Realtime {
        let state = live.lock().session.machine();
        return Err(ApiError::Conflict {
            state,
            message: "realtime sessions tick on their own".into(),
        });
    }
    let l = live.clone();
    let events = tokio::task::spawn_blocking(move || l.step(n))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let inner = live.lock();
    Ok(Json(json!({
        "events": events,
        "machine": inner.session.machine(),
        "done": inner.session.is_done(),
    })))
}

async fn post_response(
    State(shared): AppState,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let live = shared.registry.get(&id)?;
    let map = parse_body(&body)?;
    reject_unknown(&map, &["kind", "metadata"])?;
    let kind = match map.get("kind").and_then(Value::as_str).map(str::to_ascii_lowercase).as_deref() {
        Some("ack") => ResponseKind::Ack,
        Some("takeover") => ResponseKind::Takeover,
        Some("handback") => ResponseKind::Handback,
        _ => return Err(ApiError::bad("kind", "expected \"ack\", \"takeover\" or \"handback\"")),
    };
    let events = live.respond(kind, map.get("metadata").cloned())?;
    let machine = live.lock().session.machine();
    Ok(Json(json!({"events": events, "machine": machine})))
}

async fn session_state(State(shared): AppState, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let live = shared.registry.get(&id)?;
    let inner = live.lock();
    let s = &inner.session;
    Ok(Json(json!({
        "id": live.id,
        "mode": live.mode,
        "done": s.is_done(),
        "snapshot": s.snapshot(),
        "metrics": metrics(s.log()),
        "metadata": inner.metadata,
    })))
}

fn parse_query(q: &HashMap<String, String>, key: &str) -> Result<Option<u64>, ApiError> {
    q.get(key)
        .map(|v| v.parse().map_err(|_| ApiError::bad(key, "expected a non-negative integer")))
        .transpose()
}

async fn stream_events(
    State(shared): AppState,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let live = shared.registry.get(&id)?;
    let mut since = parse_query(&q, "since")?;
    let wants_stream = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("text/event-stream"));
    if wants_stream {
        if let Some(last) = headers.get("last-event-id").and_then(|v| v.to_str().ok()) {
            since = Some(last.parse().map_err(|_| ApiError::bad("Last-Event-ID", "expected a sequence number"))?);
        }
        let stream = event_stream(live, since);
        return Ok(Sse::new(stream).keep_alive(KeepAlive::default()).into_response());
    }
    let wait = parse_query(&q, "wait_ms")?.map_or(shared.config.long_poll, Duration::from_millis);
    let wait = wait.min(shared.config.long_poll);
    let mut rx = live.subscribe();
    rx.borrow_and_update();
    let read = |live: &LiveSession| {
        let inner = live.lock();
        (inner.session.events_since(since).to_vec(), inner.session.is_done())
    };
    let (mut events, mut done) = read(&live);
    if events.is_empty() && !done && tokio::time::timeout(wait, rx.changed()).await.is_ok() {
        (events, done) = read(&live);
    }
    Ok(Json(json!({"events": events, "done": done})).into_response())
}

struct Cursor {
    live: Arc<LiveSession>,
    since: Option<u64>,
    rx: tokio::sync::watch::Receiver<u64>,
    queue: VecDeque<Event>,
}

/// Every event after `since` in order, then new ones as they are logged;
/// ends once a finished session has been drained.
fn event_stream(live: Arc<LiveSession>, since: Option<u64>) -> impl Stream<Item = Result<SseEvent, Infallible>> {
    let rx = live.subscribe();
    let cursor = Cursor {
        live,
        since,
        rx,
        queue: VecDeque::new(),
    };
    stream::unfold(cursor, |mut c| async move {
        loop {
            if let Some(e) = c.queue.pop_front() {
                c.since = Some(e.seq);
                let data = serde_json::to_string(&e).expect("events serialize");
                return Some((Ok(SseEvent::default().id(e.seq.to_string()).data(data)), c));
            }
            c.rx.borrow_and_update();
            let (batch, done) = {
                let inner = c.live.lock();
                (inner.session.events_since(c.since).to_vec(), inner.session.is_done())
            };
            if !batch.is_empty() {
                c.queue.extend(batch);
                continue;
            }
            if done || c.rx.changed().await.is_err() {
                return None;
            }
        }
    })
}
