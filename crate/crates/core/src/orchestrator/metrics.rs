//! Session metrics computed from an event log.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::events::{Event, EventKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub safe: usize,
    pub avoidable: usize,
    pub unavoidable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Final event kind, `STOPPED` or `COMPLETED`; `None` if unfinished.
    pub outcome: Option<String>,
    pub ticks: usize,
    pub final_position: Option<f64>,
    /// Seconds between the first alert and the predicted critical time.
    pub notice_lead_time: Option<f64>,
    pub handovers_avoided: usize,
    pub alerts: usize,
    pub escalations: usize,
    pub safe_stops: usize,
    /// Seconds from the first alert to the first takeover.
    pub takeover_latency: Option<f64>,
    /// Word counts of every alert and escalation message.
    pub message_words: Vec<usize>,
    pub words_total: usize,
    pub verdicts: VerdictCounts,
    pub budget_exhausted: bool,
}

fn f(payload: &Value, key: &str) -> Option<f64> {
    payload.get(key).and_then(Value::as_f64)
}

pub fn metrics(log: &[Event]) -> MetricsReport {
    let mut m = MetricsReport::default();
    let mut first_alert: Option<f64> = None;
    for e in log {
        match e.kind {
            EventKind::Tick => {
                m.ticks += 1;
                m.final_position = e.payload.pointer("/state/position").and_then(Value::as_f64);
            }
            EventKind::ReplanAdopted => m.handovers_avoided += 1,
            EventKind::AlertIssued | EventKind::Escalation => {
                if e.kind == EventKind::AlertIssued {
                    m.alerts += 1;
                    if first_alert.is_none() {
                        first_alert = Some(e.t);
                        m.notice_lead_time = f(&e.payload, "critical_at").map(|c| c - e.t);
                    }
                } else {
                    m.escalations += 1;
                }
                if let Some(w) = e.payload.pointer("/message/word_count").and_then(Value::as_u64) {
                    m.message_words.push(w as usize);
                    m.words_total += w as usize;
                }
            }
            EventKind::Takeover => {
                if m.takeover_latency.is_none() {
                    m.takeover_latency = first_alert.map(|a| e.t - a);
                }
            }
            EventKind::SafeStopStarted => m.safe_stops += 1,
            EventKind::Criticality if e.payload.get("refused").is_none() => {
                match e.payload.get("verdict").and_then(Value::as_str) {
                    Some("SAFE") => m.verdicts.safe += 1,
                    Some("AVOIDABLE") => m.verdicts.avoidable += 1,
                    Some("UNAVOIDABLE") => m.verdicts.unavoidable += 1,
                    _ => {}
                }
                if e.payload.get("budget_exhausted") == Some(&Value::Bool(true)) {
                    m.budget_exhausted = true;
                }
            }
            EventKind::Stopped | EventKind::Completed => m.outcome = Some(e.kind.as_str().to_string()),
            _ => {}
        }
    }
    m
}
