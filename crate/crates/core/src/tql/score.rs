use serde::{Deserialize, Serialize};

use super::abstraction::PropositionSet;
use super::catalog::QueryCatalog;
use super::eval::earliest_match;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Level {
    Low,
    Elevated,
    Critical,
}

/// Score thresholds: `elevated <= score < critical` is ELEVATED.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub elevated: f64,
    pub critical: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            elevated: 2.0,
            critical: 5.0,
        }
    }
}

impl Thresholds {
    pub fn level(&self, score: f64) -> Level {
        if score >= self.critical {
            Level::Critical
        } else if score >= self.elevated {
            Level::Elevated
        } else {
            Level::Low
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMatch {
    pub name: String,
    pub matched: bool,
    pub earliest_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub matches: Vec<QueryMatch>,
    pub score: f64,
    pub level: Level,
    /// Seconds until the earliest match; present iff level is above LOW.
    pub time_to_critical: Option<f64>,
}

impl CriticalityReport {
    pub fn matched(&self) -> impl Iterator<Item = &QueryMatch> {
        self.matches.iter().filter(|m| m.matched)
    }

    pub fn earliest_step(&self) -> Option<usize> {
        self.matched().filter_map(|m| m.earliest_step).min()
    }

    pub fn is_low(&self) -> bool {
        self.level == Level::Low
    }
}

/// Scores a predicted trace against every catalog query, anchored at the
/// first state.
pub fn score_trace(
    trace: &[PropositionSet],
    catalog: &QueryCatalog,
    thresholds: &Thresholds,
    dt: f64,
) -> CriticalityReport {
    assert!(!trace.is_empty(), "cannot score an empty trace");
    let mut score = 0.0;
    let matches: Vec<QueryMatch> = catalog
        .entries()
        .iter()
        .map(|e| {
            let step = earliest_match(&e.formula, trace);
            if step.is_some() {
                score += e.contribution();
            }
            QueryMatch {
                name: e.name.clone(),
                matched: step.is_some(),
                earliest_step: step,
            }
        })
        .collect();
    let level = thresholds.level(score);
    let time_to_critical = if level > Level::Low {
        matches
            .iter()
            .filter_map(|m| m.earliest_step)
            .min()
            .map(|s| s as f64 * dt)
    } else {
        None
    };
    CriticalityReport {
        matches,
        score,
        level,
        time_to_critical,
    }
}
