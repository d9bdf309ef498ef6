//! Scripted stand-in for the human driver: vigilance dynamics and
//! modality-dependent reaction times drawn from a measured table.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

const DEFAULT_TABLE: &str = include_str!("../data/reaction_table.json");

/// Latencies below this are physically implausible and are redrawn.
pub const MIN_LATENCY_MS: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Modality {
    Tactile,
    Audio,
    Visual,
}

impl Modality {
    /// Fixed tie-break order, most preferred first.
    pub const ALL: [Modality; 3] = [Modality::Tactile, Modality::Audio, Modality::Visual];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Tactile => "TACTILE",
            Modality::Audio => "AUDIO",
            Modality::Visual => "VISUAL",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Modality::ALL.into_iter().find(|m| m.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    Easy,
    Hard,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Easy, Condition::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Easy => "EASY",
            Condition::Hard => "HARD",
        }
    }
}

impl FromStr for Condition {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Condition::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Expertise {
    Novice,
    Expert,
}

impl Expertise {
    pub fn as_str(self) -> &'static str {
        match self {
            Expertise::Novice => "NOVICE",
            Expertise::Expert => "EXPERT",
        }
    }
}

impl FromStr for Expertise {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "NOVICE" => Ok(Expertise::Novice),
            "EXPERT" => Ok(Expertise::Expert),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    /// Readiness to respond, in `[0, 1]`.
    pub vigilance: f64,
    /// Cognitive load level 1..=3.
    pub load: u8,
    pub secondary_task: bool,
    pub condition: Condition,
    pub expertise: Expertise,
}

impl Default for DriverProfile {
    fn default() -> Self {
        Self {
            vigilance: 1.0,
            load: 1,
            secondary_task: false,
            condition: Condition::Hard,
            expertise: Expertise::Novice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionCell {
    pub mean_ms: f64,
    pub std_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriverError {
    #[error("no reaction entry for {modality}.{load}.{condition}")]
    MissingEntry {
        modality: Modality,
        load: u8,
        condition: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("reaction table is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reaction table must be a JSON object")]
    NotAnObject,
    #[error("invalid key `{0}`, expected MODALITY.LOAD.CONDITION")]
    Key(String),
    #[error("entry `{key}`: {message}")]
    Value { key: String, message: String },
}

/// Reaction-time distribution per (modality, load, condition) plus a
/// preference tally per modality.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionTable {
    cells: BTreeMap<(Modality, u8, Condition), ReactionCell>,
    preferences: BTreeMap<Modality, u32>,
}

fn bad(key: &str, message: impl Into<String>) -> TableError {
    TableError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ReactionTable {
    pub fn new(
        cells: BTreeMap<(Modality, u8, Condition), ReactionCell>,
        preferences: BTreeMap<Modality, u32>,
    ) -> Self {
        Self { cells, preferences }
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let doc: Value = serde_json::from_str(text)?;
        let obj = doc.as_object().ok_or(TableError::NotAnObject)?;
        let mut cells = BTreeMap::new();
        let mut preferences = BTreeMap::new();
        for (key, value) in obj {
            if key == "preferences" {
                let prefs = value.as_object().ok_or_else(|| bad(key, "expected an object"))?;
                for (m, score) in prefs {
                    let modality = m.parse().map_err(|_| bad(key, format!("unknown modality `{m}`")))?;
                    let score = score
                        .as_u64()
                        .and_then(|s| u32::try_from(s).ok())
                        .ok_or_else(|| bad(key, format!("score for {m} must be a non-negative integer")))?;
                    preferences.insert(modality, score);
                }
                continue;
            }
            let parts: Vec<&str> = key.split('.').collect();
            let [m, l, c] = parts[..] else {
                return Err(TableError::Key(key.clone()));
            };
            let modality: Modality = m.parse().map_err(|_| TableError::Key(key.clone()))?;
            let load: u8 = l
                .parse()
                .ok()
                .filter(|l| (1..=3).contains(l))
                .ok_or_else(|| TableError::Key(key.clone()))?;
            let condition: Condition = c.parse().map_err(|_| TableError::Key(key.clone()))?;
            let field = |name: &str| {
                value
                    .get(name)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| bad(key, format!("missing numeric `{name}`")))
            };
            let (mean_ms, std_ms) = (field("mean_ms")?, field("std_ms")?);
            if !(mean_ms > 0.0 && std_ms >= 0.0) {
                return Err(bad(key, "mean must be positive and std non-negative"));
            }
            cells.insert((modality, load, condition), ReactionCell { mean_ms, std_ms });
        }
        Ok(Self { cells, preferences })
    }

    /// The shipped table of measured reaction times.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_TABLE).expect("shipped reaction table is valid")
    }

    pub fn get(&self, modality: Modality, load: u8, condition: Condition) -> Result<ReactionCell, DriverError> {
        self.cells
            .get(&(modality, load, condition))
            .copied()
            .ok_or(DriverError::MissingEntry {
                modality,
                load,
                condition: condition.as_str(),
            })
    }

    pub fn preference(&self, modality: Modality) -> u32 {
        self.preferences.get(&modality).copied().unwrap_or(0)
    }

    pub fn cells(&self) -> impl Iterator<Item = ((Modality, u8, Condition), ReactionCell)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }
}

/// Location of the normal that, truncated below at [`MIN_LATENCY_MS`], has
/// mean `cell.mean_ms`. The scale stays `cell.std_ms`.
pub fn truncated_location(cell: &ReactionCell) -> f64 {
    let (m, sigma, a) = (cell.mean_ms, cell.std_ms, MIN_LATENCY_MS);
    if sigma == 0.0 {
        return m;
    }
    let unit = StdNormal::new(0.0, 1.0).expect("standard normal");
    let truncated_mean = |mu: f64| {
        let alpha = (a - mu) / sigma;
        // inverse Mills ratio, asymptotic where the tail underflows
        let hazard = if alpha > 30.0 {
            alpha + 1.0 / alpha
        } else {
            unit.pdf(alpha) / unit.sf(alpha)
        };
        mu + sigma * hazard
    };
    let (mut lo, mut hi) = (a - 40.0 * sigma, m);
    if truncated_mean(lo) >= m {
        return lo;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if truncated_mean(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Draws a reaction latency in milliseconds from a normal truncated below
/// at [`MIN_LATENCY_MS`] whose mean is the cell's mean.
pub fn sample_reaction<R: Rng + ?Sized>(
    table: &ReactionTable,
    modality: Modality,
    load: u8,
    condition: Condition,
    rng: &mut R,
) -> Result<f64, DriverError> {
    let cell = table.get(modality, load, condition)?;
    if cell.std_ms == 0.0 {
        return Ok(cell.mean_ms.max(MIN_LATENCY_MS));
    }
    let normal = Normal::new(truncated_location(&cell), cell.std_ms).expect("validated std");
    // A cell whose mass lies almost entirely below the floor would spin
    // forever; after many rejections the floor itself is returned.
    for _ in 0..10_000 {
        let x = normal.sample(rng);
        if x >= MIN_LATENCY_MS {
            return Ok(x);
        }
    }
    Ok(MIN_LATENCY_MS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VigilanceParams {
    /// Linear decay per second of automated driving.
    pub decay_per_s: f64,
    pub floor: f64,
    pub alert_boost: f64,
    /// Decay multiplier while a secondary task is running.
    pub secondary_task_factor: f64,
    /// Scales the miss probability `1 - vigilance`.
    pub miss_factor: f64,
}

impl Default for VigilanceParams {
    fn default() -> Self {
        Self {
            decay_per_s: 0.005,
            floor: 0.2,
            alert_boost: 0.3,
            secondary_task_factor: 2.0,
            miss_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VigilanceEvent {
    None,
    Alert,
    TookOver,
}

pub fn update_vigilance(
    profile: &DriverProfile,
    dt: f64,
    event: VigilanceEvent,
    params: &VigilanceParams,
) -> DriverProfile {
    let v = profile.vigilance;
    let vigilance = match event {
        VigilanceEvent::None => {
            let rate = if profile.secondary_task {
                params.decay_per_s * params.secondary_task_factor
            } else {
                params.decay_per_s
            };
            params.floor.max(v - rate * dt)
        }
        VigilanceEvent::Alert => (v + params.alert_boost).min(1.0),
        VigilanceEvent::TookOver => 1.0,
    };
    DriverProfile { vigilance, ..*profile }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResponseKind {
    Ack,
    Takeover,
    Handback,
    Miss,
}

impl ResponseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::Ack => "ACK",
            ResponseKind::Takeover => "TAKEOVER",
            ResponseKind::Handback => "HANDBACK",
            ResponseKind::Miss => "MISS",
        }
    }
}

impl FromStr for ResponseKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_uppercase().as_str() {
            "ACK" => Ok(ResponseKind::Ack),
            "TAKEOVER" => Ok(ResponseKind::Takeover),
            "HANDBACK" => Ok(ResponseKind::Handback),
            "MISS" => Ok(ResponseKind::Miss),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub kind: ResponseKind,
    /// Absent for a miss.
    pub latency_ms: Option<f64>,
}

/// Simulated reaction to an alert delivered on `modalities` (several for a
/// multimodal burst, in which case the fastest channel wins).
pub fn respond<R: Rng + ?Sized>(
    profile: &DriverProfile,
    modalities: &[Modality],
    table: &ReactionTable,
    params: &VigilanceParams,
    rng: &mut R,
) -> Result<Response, DriverError> {
    let p_miss = (1.0 - profile.vigilance) * params.miss_factor;
    let u: f64 = rng.random();
    if u < p_miss {
        return Ok(Response {
            kind: ResponseKind::Miss,
            latency_ms: None,
        });
    }
    let mut best = f64::INFINITY;
    for m in modalities {
        best = best.min(sample_reaction(table, *m, profile.load, profile.condition, rng)?);
    }
    Ok(Response {
        kind: ResponseKind::Ack,
        latency_ms: Some(best),
    })
}
