//! Grounding: turn the matched queries of a report into situation facts.

use serde::{Deserialize, Serialize};

use crate::planner::Trace;
use crate::road::{Road, Tag};
use crate::tql::{CriticalityReport, Proposition, QueryCatalog};
use crate::world::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "predicate", content = "tag", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Predicate {
    Hazard(Tag),
    Obstacle,
    SensorLoss,
    HandoverRequest,
    TimeBudget,
    ActionAdvice,
}

impl Predicate {
    pub fn is_core(self) -> bool {
        matches!(self, Predicate::HandoverRequest | Predicate::TimeBudget)
    }

    /// Template key of the single-fact sentence.
    pub fn key(self) -> String {
        match self {
            Predicate::Hazard(tag) => format!("HAZARD_{}", tag.as_str()),
            Predicate::Obstacle => "OBSTACLE".into(),
            Predicate::SensorLoss => "SENSOR_LOSS".into(),
            Predicate::HandoverRequest => "HANDOVER_REQUEST".into(),
            Predicate::TimeBudget => "TIME_BUDGET".into(),
            Predicate::ActionAdvice => "ACTION_ADVICE".into(),
        }
    }

    /// Sentence order among facts due at the same time.
    pub(crate) fn rank(self) -> u8 {
        match self {
            Predicate::HandoverRequest => 0,
            Predicate::TimeBudget => 1,
            Predicate::Hazard(_) => 2,
            Predicate::SensorLoss => 3,
            Predicate::Obstacle => 4,
            Predicate::ActionAdvice => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub predicate: Predicate,
    /// Meters from the vehicle to the referent.
    pub distance: Option<f64>,
    /// Seconds until the fact becomes relevant.
    pub time: f64,
    /// Lane index, 0 leftmost.
    pub lane: Option<u32>,
    /// Segment the referent lies in; hazards sharing one are aggregated.
    pub segment: Option<usize>,
    pub advice: Option<String>,
    pub salience: f64,
    /// Catalog position of the query that produced the fact.
    pub order: usize,
    /// Name of that query; `None` for the mandatory core.
    pub source: Option<String>,
}

impl Fact {
    fn new(predicate: Predicate, time: f64) -> Self {
        Self {
            predicate,
            distance: None,
            time,
            lane: None,
            segment: None,
            advice: None,
            salience: f64::INFINITY,
            order: 0,
            source: None,
        }
    }

    pub fn handover_request(time: f64) -> Self {
        Self::new(Predicate::HandoverRequest, time.max(0.0))
    }

    pub fn time_budget(time: f64) -> Self {
        Self::new(Predicate::TimeBudget, time.max(0.0))
    }

    /// An optional situation fact with the given salience.
    pub fn situation(predicate: Predicate, time: f64, salience: f64, order: usize) -> Self {
        Self {
            salience,
            order,
            ..Self::new(predicate, time)
        }
    }

    pub fn with_distance(mut self, d: f64) -> Self {
        self.distance = Some(d);
        self
    }

    pub fn with_segment(mut self, s: usize) -> Self {
        self.segment = Some(s);
        self
    }

    pub fn with_lane(mut self, lane: u32) -> Self {
        self.lane = Some(lane);
        self
    }

    pub fn with_advice(mut self, advice: &str) -> Self {
        self.advice = Some(advice.to_string());
        self
    }
}

/// Salience of a situation fact: severity over time-to-event, with the
/// time floored at one tick.
pub fn salience(severity: u8, time: f64, dt: f64) -> f64 {
    f64::from(severity) / time.max(dt)
}

/// The two facts every handover message carries.
pub fn core_facts(time_to_critical: f64, t_safe: f64) -> Vec<Fact> {
    vec![
        Fact::handover_request(time_to_critical - t_safe),
        Fact::time_budget(time_to_critical),
    ]
}

/// Facts grounded at the earliest-match state of every matched query,
/// preceded by the mandatory core. Duplicate referents keep the most
/// salient instance.
pub fn derive_facts(
    report: &CriticalityReport,
    trace: &Trace,
    catalog: &QueryCatalog,
    road: &Road,
    params: &SimParams,
    t_safe: f64,
) -> Vec<Fact> {
    let ttc = report.time_to_critical.unwrap_or(0.0);
    let mut facts = core_facts(ttc, t_safe);
    let here = trace.states[0].position;
    for (order, (entry, m)) in catalog.entries().iter().zip(&report.matches).enumerate() {
        let Some(j) = m.earliest_step.filter(|_| m.matched) else {
            continue;
        };
        let at = &trace.states[j.min(trace.states.len() - 1)];
        let time = j as f64 * params.dt;
        let sal = salience(entry.severity, time, params.dt);
        let seg = road.segment_index(at.position);
        let seg_distance = (road.segment_start(seg) - here).max(0.0);
        let mut atoms: Vec<Proposition> = entry.formula.atoms().into_iter().copied().collect();
        atoms.dedup();
        for atom in atoms {
            let base = |p| Fact {
                source: Some(entry.name.clone()),
                ..Fact::situation(p, time, sal, order)
            };
            let fact = match atom {
                Proposition::InFog => base(Predicate::Hazard(Tag::Fog)),
                Proposition::InTunnel => base(Predicate::Hazard(Tag::Tunnel)),
                Proposition::InConstruction => base(Predicate::Hazard(Tag::Construction)),
                Proposition::OnIce => base(Predicate::Hazard(Tag::Ice)),
                Proposition::SensorDegraded => {
                    let d = if road.segment_at(at.position).has(Tag::SensorDeadZone) {
                        seg_distance
                    } else {
                        0.0
                    };
                    facts_push(&mut facts, base(Predicate::SensorLoss).with_distance(d));
                    continue;
                }
                Proposition::LaneBlocked | Proposition::ObstacleAhead => {
                    let Some(pos) = road.obstacle_within(at.lane, at.position, params.obstacle_horizon) else {
                        continue;
                    };
                    facts_push(
                        &mut facts,
                        base(Predicate::Obstacle)
                            .with_distance(pos - here)
                            .with_lane(at.lane)
                            .with_segment(road.segment_index(pos)),
                    );
                    continue;
                }
                Proposition::HighSpeed => {
                    facts_push(&mut facts, base(Predicate::ActionAdvice).with_advice("slow down"));
                    continue;
                }
                Proposition::AdjacentLaneFree | Proposition::NearRouteEnd => continue,
            };
            facts_push(&mut facts, fact.with_distance(seg_distance).with_segment(seg));
        }
    }
    facts
}

fn facts_push(facts: &mut Vec<Fact>, fact: Fact) {
    if let Some(existing) = facts
        .iter_mut()
        .find(|f| f.predicate == fact.predicate && f.segment == fact.segment)
    {
        if fact.salience > existing.salience {
            *existing = Fact {
                order: existing.order.min(fact.order),
                ..fact
            };
        }
        return;
    }
    facts.push(fact);
}
