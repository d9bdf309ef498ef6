//! Session events and their JSON Lines encoding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    /// Header at seq 0 echoing the scenario.
    SessionStarted,
    Tick,
    Criticality,
    ReplanAdopted,
    AlertIssued,
    Escalation,
    Ack,
    Takeover,
    Handback,
    SafeStopStarted,
    Stopped,
    Completed,
}

impl EventKind {
    pub const ALL: [EventKind; 12] = [
        EventKind::SessionStarted,
        EventKind::Tick,
        EventKind::Criticality,
        EventKind::ReplanAdopted,
        EventKind::AlertIssued,
        EventKind::Escalation,
        EventKind::Ack,
        EventKind::Takeover,
        EventKind::Handback,
        EventKind::SafeStopStarted,
        EventKind::Stopped,
        EventKind::Completed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::SessionStarted => "SESSION_STARTED",
            EventKind::Tick => "TICK",
            EventKind::Criticality => "CRITICALITY",
            EventKind::ReplanAdopted => "REPLAN_ADOPTED",
            EventKind::AlertIssued => "ALERT_ISSUED",
            EventKind::Escalation => "ESCALATION",
            EventKind::Ack => "ACK",
            EventKind::Takeover => "TAKEOVER",
            EventKind::Handback => "HANDBACK",
            EventKind::SafeStopStarted => "SAFE_STOP_STARTED",
            EventKind::Stopped => "STOPPED",
            EventKind::Completed => "COMPLETED",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

/// One log entry: `{"seq", "t", "kind", "payload"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// Session time in seconds.
    pub t: f64,
    pub kind: EventKind,
    pub payload: Value,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: sequence number {seq} does not follow {prev}")]
    Sequence { line: usize, seq: u64, prev: u64 },
}

/// Encodes events as JSON Lines, one object per line.
pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// Decodes a JSON Lines log, checking that sequence numbers increase.
pub fn from_jsonl(text: &str) -> Result<Vec<Event>, LogError> {
    let mut events: Vec<Event> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: Event = serde_json::from_str(line).map_err(|source| LogError::Json { line: i + 1, source })?;
        if let Some(prev) = events.last() {
            if e.seq <= prev.seq {
                return Err(LogError::Sequence {
                    line: i + 1,
                    seq: e.seq,
                    prev: prev.seq,
                });
            }
        }
        events.push(e);
    }
    Ok(events)
}
