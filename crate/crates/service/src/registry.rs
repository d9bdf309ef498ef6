use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use handover_core::driver::ResponseKind;
use handover_core::orchestrator::{Event, HandoverSession, SessionConfig, SessionError};
use handover_core::scenario::Scenario;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::watch;

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One tick per `dt` of wall-clock time.
    Realtime,
    /// Ticks only on request.
    Stepped,
}

/// Session state guarded by the per-session lock.
pub struct Inner {
    pub session: HandoverSession,
    /// Client-supplied annotations posted with responses, in arrival order.
    pub metadata: Vec<Value>,
    last_tick: Instant,
}

/// A running session plus the channel subscribers wait on.
pub struct LiveSession {
    pub id: String,
    pub mode: Mode,
    time_scale: f64,
    inner: Mutex<Inner>,
    last_seq: watch::Sender<u64>,
}

impl LiveSession {
    pub fn lock(&self) -> MutexGuard<'_, Inner> {
        // a panic inside one request must not wedge the session for everyone
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.last_seq.subscribe()
    }

    fn publish(&self, inner: &Inner) {
        let last = inner.session.log().last().map_or(0, |e| e.seq);
        self.last_seq.send_replace(last);
    }

    /// Real time one tick takes.
    pub fn tick_period(&self) -> Duration {
        let dt = self.lock().session.scenario().dt;
        Duration::from_secs_f64(dt * self.time_scale)
    }

    /// Advances up to `n` ticks, stopping early when the session ends.
    pub fn step(&self, n: u32) -> Result<Vec<Event>, ApiError> {
        let mut inner = self.lock();
        if inner.session.is_done() {
            return Err(ApiError::Gone);
        }
        let mut out = Vec::new();
        for _ in 0..n {
            if inner.session.is_done() {
                break;
            }
            out.extend(inner.session.tick().map_err(|e| ApiError::Internal(e.to_string()))?);
        }
        inner.last_tick = Instant::now();
        self.publish(&inner);
        Ok(out)
    }

    /// Applies a human response between ticks.
    pub fn respond(&self, kind: ResponseKind, metadata: Option<Value>) -> Result<Vec<Event>, ApiError> {
        let mut inner = self.lock();
        // stepped sessions measure latency in simulated time; realtime ones
        // add the wall-clock time since the last tick
        let latency_ms = inner.session.alert_age().map(|age| {
            let extra = match self.mode {
                Mode::Stepped => 0.0,
                Mode::Realtime => inner.last_tick.elapsed().as_secs_f64() / self.time_scale,
            };
            (age + extra) * 1000.0
        });
        let events = inner
            .session
            .handle_response_with(kind, latency_ms)
            .map_err(|e| match e {
                SessionError::SessionFinished => ApiError::Gone,
                SessionError::InvalidTransition { state, .. } => ApiError::Conflict {
                    state,
                    message: e.to_string(),
                },
            })?;
        if let Some(m) = metadata {
            inner.metadata.push(m);
        }
        self.publish(&inner);
        Ok(events)
    }
}

/// All live sessions of one service instance.
#[derive(Default)]
pub struct Registry {
    sessions: Mutex<HashMap<String, Arc<LiveSession>>>,
    next_id: AtomicU64,
}

impl Registry {
    pub fn create(&self, scenario: Scenario, mode: Mode, config: SessionConfig, time_scale: f64) -> Arc<LiveSession> {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let id = format!("s{n:06}");
        let session = HandoverSession::new(scenario, config);
        let (last_seq, _) = watch::channel(0);
        let live = Arc::new(LiveSession {
            id: id.clone(),
            mode,
            time_scale,
            inner: Mutex::new(Inner {
                session,
                metadata: Vec::new(),
                last_tick: Instant::now(),
            }),
            last_seq,
        });
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, live.clone());
        live
    }

    pub fn get(&self, id: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }
}
