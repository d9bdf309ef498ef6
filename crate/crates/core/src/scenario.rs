//! Declarative scenario files: parsing with field-path diagnostics,
//! validation, and a canonical serializer.
//!
//! ```json
//! {
//!   "name": "fog_highway", "cruise_speed": 30, "horizon": 30, "seed": 7,
//!   "initial": {"position": 0, "lane": 0, "speed": 30},
//!   "driver": {"vigilance": 0.8, "load": 2, "secondary_task": true, "condition": "HARD"},
//!   "segments": [{"length": 1200, "lanes": 2, "speed_limit": 33, "tags": [], "obstacles": []}]
//! }
//! ```

use std::collections::BTreeSet;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::driver::{Condition, DriverProfile, Expertise};
use crate::road::{Obstacle, Road, Segment, Tag};
use crate::world::{SimParams, WorldState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
}

impl ScenarioError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ScenarioError::Validation { path, .. } => Some(path),
            ScenarioError::Syntax { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub cruise_speed: f64,
    /// Planning horizon in ticks.
    pub horizon: u32,
    pub seed: u64,
    pub dt: f64,
    pub initial: WorldState,
    pub road: Road,
    pub driver: DriverProfile,
}

impl Scenario {
    /// Simulation constants for this scenario: defaults with the scenario's
    /// tick length and cruise speed.
    pub fn params(&self) -> SimParams {
        SimParams {
            dt: self.dt,
            cruise_speed: self.cruise_speed,
            ..SimParams::default()
        }
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

fn join(base: &str, key: &str) -> String {
    if base.is_empty() {
        key.to_string()
    } else {
        format!("{base}.{key}")
    }
}

/// Typed accessors over one JSON object that record the field path and
/// reject keys nobody asked for.
struct Fields<'a> {
    path: String,
    map: &'a Map<String, Value>,
    allowed: &'static [&'static str],
}

impl<'a> Fields<'a> {
    fn new(value: &'a Value, path: &str, allowed: &'static [&'static str]) -> Result<Self, ScenarioError> {
        let map = value
            .as_object()
            .ok_or_else(|| invalid(if path.is_empty() { "$" } else { path }, "expected an object"))?;
        if let Some(unknown) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid(join(path, unknown), "unknown key"));
        }
        Ok(Self {
            path: path.to_string(),
            map,
            allowed,
        })
    }

    fn at(&self, key: &str) -> String {
        debug_assert!(self.allowed.contains(&key));
        join(&self.path, key)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn require(&self, key: &str) -> Result<&'a Value, ScenarioError> {
        self.get(key).ok_or_else(|| invalid(self.at(key), "missing required field"))
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64, ScenarioError> {
        match (self.get(key), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(invalid(self.at(key), "missing required field")),
            (Some(v), _) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(self.at(key), "expected a number")),
        }
    }

    fn integer(&self, key: &str, default: Option<u64>) -> Result<u64, ScenarioError> {
        match (self.get(key), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(invalid(self.at(key), "missing required field")),
            (Some(v), _) => v
                .as_u64()
                .ok_or_else(|| invalid(self.at(key), "expected a non-negative integer")),
        }
    }

    fn string(&self, key: &str, default: Option<&'a str>) -> Result<&'a str, ScenarioError> {
        match (self.get(key), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(invalid(self.at(key), "missing required field")),
            (Some(v), _) => v.as_str().ok_or_else(|| invalid(self.at(key), "expected a string")),
        }
    }

    fn array(&self, key: &str, required: bool) -> Result<&'a [Value], ScenarioError> {
        match self.get(key) {
            None if required => Err(invalid(self.at(key), "missing required field")),
            None => Ok(&[]),
            Some(v) => v
                .as_array()
                .map(Vec::as_slice)
                .ok_or_else(|| invalid(self.at(key), "expected an array")),
        }
    }
}

fn check(ok: bool, path: String, message: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(path, message))
    }
}

fn lane_count(value: u64, path: String) -> Result<u32, ScenarioError> {
    u32::try_from(value).map_err(|_| invalid(path, "lane index out of range"))
}

fn parse_segment(value: &Value, path: &str) -> Result<Segment, ScenarioError> {
    let f = Fields::new(value, path, &["length", "lanes", "speed_limit", "tags", "obstacles"])?;
    let length = f.number("length", None)?;
    check(length > 0.0, f.at("length"), "must be positive")?;
    let lanes = lane_count(f.integer("lanes", None)?, f.at("lanes"))?;
    check(lanes >= 1, f.at("lanes"), "must be at least 1")?;
    let speed_limit = f.number("speed_limit", None)?;
    check(speed_limit > 0.0, f.at("speed_limit"), "must be positive")?;

    let mut tags = BTreeSet::new();
    for (i, t) in f.array("tags", false)?.iter().enumerate() {
        let tpath = format!("{}[{i}]", f.at("tags"));
        let name = t.as_str().ok_or_else(|| invalid(&tpath, "expected a string"))?;
        let tag: Tag = name.parse().map_err(|_| {
            invalid(
                f.at("tags"),
                format!("unknown tag `{name}` (expected one of TUNNEL, FOG, CONSTRUCTION, ICE, SENSOR_DEAD_ZONE)"),
            )
        })?;
        if !tags.insert(tag) {
            return Err(invalid(tpath, format!("duplicate tag `{name}`")));
        }
    }

    let mut obstacles = Vec::new();
    for (i, o) in f.array("obstacles", false)?.iter().enumerate() {
        let opath = format!("{}[{i}]", f.at("obstacles"));
        let of = Fields::new(o, &opath, &["lane", "at"])?;
        let lane = lane_count(of.integer("lane", None)?, of.at("lane"))?;
        check(lane < lanes, of.at("lane"), "obstacle lane does not exist on this segment")?;
        let at = of.number("at", None)?;
        check((0.0..length).contains(&at), of.at("at"), "obstacle offset must lie in [0, length)")?;
        obstacles.push(Obstacle { lane, at });
    }

    Ok(Segment {
        length,
        lanes,
        speed_limit,
        tags,
        obstacles,
    })
}

fn parse_driver(value: Option<&Value>) -> Result<DriverProfile, ScenarioError> {
    let d = DriverProfile::default();
    let Some(value) = value else {
        return Ok(d);
    };
    let f = Fields::new(
        value,
        "driver",
        &["vigilance", "load", "secondary_task", "condition", "expertise"],
    )?;
    let vigilance = f.number("vigilance", Some(d.vigilance))?;
    check((0.0..=1.0).contains(&vigilance), f.at("vigilance"), "must lie in [0, 1]")?;
    let load = f.integer("load", Some(u64::from(d.load)))?;
    check((1..=3).contains(&load), f.at("load"), "must be 1, 2 or 3")?;
    let secondary_task = match f.get("secondary_task") {
        None => d.secondary_task,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| invalid(f.at("secondary_task"), "expected a boolean"))?,
    };
    let condition: Condition = f
        .string("condition", Some(d.condition.as_str()))?
        .parse()
        .map_err(|_| invalid(f.at("condition"), "expected EASY or HARD"))?;
    let expertise: Expertise = f
        .string("expertise", Some(d.expertise.as_str()))?
        .parse()
        .map_err(|_| invalid(f.at("expertise"), "expected NOVICE or EXPERT"))?;
    Ok(DriverProfile {
        vigilance,
        load: load as u8,
        secondary_task,
        condition,
        expertise,
    })
}

/// Parses and validates a scenario document. Omitted optional fields take
/// their defaults: `cruise_speed` 30, `horizon` 30, `seed` 0, `dt` 1, a
/// fully vigilant unloaded driver, full sensor health.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario, ScenarioError> {
    let text = std::str::from_utf8(text).map_err(|e| {
        let prefix = &text[..e.valid_up_to()];
        let line = prefix.iter().filter(|b| **b == b'\n').count() + 1;
        let column = prefix.iter().rev().take_while(|b| **b != b'\n').count() + 1;
        ScenarioError::Syntax {
            line,
            column,
            message: "input is not valid UTF-8".into(),
        }
    })?;
    let doc: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario_from_value(&doc)
}

/// Validates an already-decoded JSON document.
pub fn scenario_from_value(doc: &Value) -> Result<Scenario, ScenarioError> {
    let defaults = SimParams::default();
    let f = Fields::new(
        doc,
        "",
        &["name", "cruise_speed", "horizon", "seed", "dt", "initial", "driver", "segments"],
    )?;
    let name = f.string("name", None)?.to_string();
    check(!name.trim().is_empty(), f.at("name"), "must not be empty")?;
    let cruise_speed = f.number("cruise_speed", Some(defaults.cruise_speed))?;
    check(
        cruise_speed > 0.0 && cruise_speed <= defaults.v_max,
        f.at("cruise_speed"),
        "must lie in (0, v_max]",
    )?;
    let horizon = f.integer("horizon", Some(30))?;
    check(
        (1..=u64::from(u32::MAX)).contains(&horizon),
        f.at("horizon"),
        "must be at least 1",
    )?;
    let seed = f.integer("seed", Some(0))?;
    let dt = f.number("dt", Some(defaults.dt))?;
    check(dt > 0.0, f.at("dt"), "must be positive")?;

    let raw_segments = f.array("segments", true)?;
    check(!raw_segments.is_empty(), f.at("segments"), "at least one segment is required")?;
    let segments = raw_segments
        .iter()
        .enumerate()
        .map(|(i, s)| parse_segment(s, &format!("segments[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let road = Road::new(segments);

    let init = Fields::new(f.require("initial")?, "initial", &["position", "lane", "speed", "sensor_health"])?;
    let position = init.number("position", None)?;
    check(
        position >= 0.0 && position < road.total_length(),
        init.at("position"),
        "must lie on the route",
    )?;
    let lane = lane_count(init.integer("lane", None)?, init.at("lane"))?;
    check(
        lane < road.lanes_at(position),
        init.at("lane"),
        "lane does not exist at the initial position",
    )?;
    let speed = init.number("speed", None)?;
    check(
        (0.0..=defaults.v_max).contains(&speed),
        init.at("speed"),
        "must lie in [0, v_max]",
    )?;
    let sensor_health = init.number("sensor_health", Some(1.0))?;
    check(
        (0.0..=1.0).contains(&sensor_health),
        init.at("sensor_health"),
        "must lie in [0, 1]",
    )?;
    let initial = WorldState {
        sensor_health,
        ..WorldState::new(position, lane, speed)
    };

    let driver = parse_driver(f.get("driver"))?;

    Ok(Scenario {
        name,
        cruise_speed,
        horizon: horizon as u32,
        seed,
        dt,
        initial,
        road,
        driver,
    })
}

/// Rounds to 6 significant digits.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn float(x: f64) -> Value {
    let r = round_sig(x);
    if r.fract() == 0.0 && r.abs() < 9.0e15 {
        Value::Number(Number::from(r as i64))
    } else {
        Number::from_f64(r).map_or(Value::Null, Value::Number)
    }
}

fn obj(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn to_value(s: &Scenario) -> Value {
    let segments = s
        .road
        .segments()
        .iter()
        .map(|seg| {
            obj(vec![
                ("length", float(seg.length)),
                ("lanes", Value::from(seg.lanes)),
                ("speed_limit", float(seg.speed_limit)),
                ("tags", seg.tags.iter().map(|t| Value::from(t.as_str())).collect()),
                (
                    "obstacles",
                    seg.obstacles
                        .iter()
                        .map(|o| obj(vec![("lane", Value::from(o.lane)), ("at", float(o.at))]))
                        .collect(),
                ),
            ])
        })
        .collect();
    obj(vec![
        ("name", Value::from(s.name.as_str())),
        ("cruise_speed", float(s.cruise_speed)),
        ("horizon", Value::from(s.horizon)),
        ("seed", Value::from(s.seed)),
        ("dt", float(s.dt)),
        (
            "initial",
            obj(vec![
                ("position", float(s.initial.position)),
                ("lane", Value::from(s.initial.lane)),
                ("speed", float(s.initial.speed)),
                ("sensor_health", float(s.initial.sensor_health)),
            ]),
        ),
        (
            "driver",
            obj(vec![
                ("vigilance", float(s.driver.vigilance)),
                ("load", Value::from(s.driver.load)),
                ("secondary_task", Value::from(s.driver.secondary_task)),
                ("condition", Value::from(s.driver.condition.as_str())),
                ("expertise", Value::from(s.driver.expertise.as_str())),
            ]),
        ),
        ("segments", Value::Array(segments)),
    ])
}

/// Canonical JSON text: keys sorted, floats rounded to 6 significant
/// digits, integral values written without a fraction, two-space indent,
/// trailing newline.
pub fn serialize_scenario(s: &Scenario) -> Vec<u8> {
    // serde_json's map type keeps keys sorted, so pretty printing is canonical.
    let mut out = serde_json::to_vec_pretty(&to_value(s)).expect("values are serializable");
    out.push(b'\n');
    out
}

/// The scenario as a JSON value in canonical form.
pub fn scenario_to_value(s: &Scenario) -> Value {
    to_value(s)
}
