//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use handover_core::nlg::{derive_facts, Fact};
use handover_core::planner::{rollout, PlannerConfig};
use handover_core::road::{Road, Segment, Tag};
use handover_core::scenario::{parse_scenario, Scenario};
use handover_core::tql::{
    abstract_state, score_trace, CriticalityReport, Formula, Level, Proposition, PropositionSet, QueryCatalog,
    Thresholds,
};
use handover_core::world::{step, Action, ActionKind, SimParams, WorldState};
use proptest::prelude::*;
use rand::Rng;

pub const ATOMS: [Proposition; 3] = [Proposition::InFog, Proposition::HighSpeed, Proposition::InTunnel];

// ---------------------------------------------------------------- TQL

/// Evaluates `f` at `i` straight from the quantifier definitions, with no
/// sharing between sub-results.
pub fn brute_eval(f: &Formula<Proposition>, trace: &[PropositionSet], i: usize) -> bool {
    let n = trace.len() - 1;
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p) => trace[i].contains(*p),
        Formula::Not(g) => !brute_eval(g, trace, i),
        Formula::And(l, r) => brute_eval(l, trace, i) && brute_eval(r, trace, i),
        Formula::Or(l, r) => brute_eval(l, trace, i) || brute_eval(r, trace, i),
        Formula::Next(g) => i < n && brute_eval(g, trace, i + 1),
        Formula::Finally(k, g) => (i..=n.min(i + *k as usize)).any(|j| brute_eval(g, trace, j)),
        Formula::Globally(k, g) => (i..=n.min(i + *k as usize)).all(|j| brute_eval(g, trace, j)),
        Formula::Until(k, l, r) => (i..=n.min(i + *k as usize))
            .any(|j| brute_eval(r, trace, j) && (i..j).all(|m| brute_eval(l, trace, m))),
    }
}

/// Random formula of depth at most `depth` with bounds in `0..=max_bound`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: u32, max_bound: u32) -> Formula<Proposition> {
    if depth == 0 || rng.random_ratio(1, 5) {
        return match rng.random_range(0..8) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(ATOMS[rng.random_range(0..ATOMS.len())]),
        };
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, max_bound);
    match rng.random_range(0..7) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::next(sub(rng)),
        4 => Formula::finally(rng.random_range(0..=max_bound), sub(rng)),
        5 => Formula::globally(rng.random_range(0..=max_bound), sub(rng)),
        _ => {
            let k = rng.random_range(0..=max_bound);
            Formula::until(k, sub(rng), sub(rng))
        }
    }
}

pub fn random_trace<R: Rng>(rng: &mut R, max_len: usize) -> Vec<PropositionSet> {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| ATOMS.iter().copied().filter(|_| rng.random_bool(0.5)).collect())
        .collect()
}

pub fn arb_formula() -> impl Strategy<Value = Formula<Proposition>> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        (0..ATOMS.len()).prop_map(|i| Formula::Atom(ATOMS[i])),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            inner.clone().prop_map(Formula::next),
            (0u32..=5, inner.clone()).prop_map(|(k, f)| Formula::finally(k, f)),
            (0u32..=5, inner.clone()).prop_map(|(k, f)| Formula::globally(k, f)),
            (0u32..=5, inner.clone(), inner).prop_map(|(k, l, r)| Formula::until(k, l, r)),
        ]
    })
}

pub fn arb_trace() -> impl Strategy<Value = Vec<PropositionSet>> {
    proptest::collection::vec(
        proptest::collection::vec(any::<bool>(), ATOMS.len()).prop_map(|bits| {
            ATOMS
                .iter()
                .zip(bits)
                .filter(|(_, b)| *b)
                .map(|(p, _)| *p)
                .collect::<PropositionSet>()
        }),
        1..=8,
    )
}

/// Catalog score of a trace computed from the brute-force evaluator.
pub fn brute_level(trace: &[PropositionSet], catalog: &QueryCatalog, thresholds: &Thresholds) -> Level {
    let score: f64 = catalog
        .entries()
        .iter()
        .filter(|e| brute_eval(&e.formula, trace, 0))
        .map(|e| e.contribution())
        .sum();
    thresholds.level(score)
}

// ---------------------------------------------------------------- pack

pub fn pack_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../pack")
}

/// The shipped scenarios, sorted by name.
pub fn load_pack() -> Vec<Scenario> {
    let mut paths: Vec<_> = std::fs::read_dir(pack_dir())
        .expect("pack directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| parse_scenario(&std::fs::read(p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display())))
        .collect()
}

pub fn pack_scenario(name: &str) -> Scenario {
    load_pack()
        .into_iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("no pack scenario {name}"))
}

/// Start of the first segment carrying a hazard tag, or the first obstacle,
/// whichever comes first.
pub fn first_critical_boundary(road: &Road) -> Option<f64> {
    let tagged = road
        .segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            [Tag::Fog, Tag::Tunnel, Tag::Construction, Tag::Ice, Tag::SensorDeadZone]
                .iter()
                .any(|t| s.has(*t))
        })
        .map(|(i, _)| road.segment_start(i));
    let obstacles = road.obstacles().iter().map(|o| o.position);
    tagged.chain(obstacles).min_by(f64::total_cmp)
}

// ---------------------------------------------------------------- planner

pub const BRANCHING: [Action; 6] = [
    Action::hold(),
    Action::accel(3.0),
    Action::decel(3.0),
    Action::decel(1.5),
    Action::lane_left(),
    Action::lane_right(),
];

/// Per-tick cost: dt, plus 0.5 per lane change, plus 0.2 per a_max of
/// braking.
pub fn oracle_cost(a: &Action, params: &SimParams) -> f64 {
    let lane = if matches!(a.kind, ActionKind::LaneLeft | ActionKind::LaneRight) {
        0.5
    } else {
        0.0
    };
    let brake = if a.kind == ActionKind::Decel {
        0.2 * a.magnitude / params.a_max
    } else {
        0.0
    };
    params.dt + lane + brake
}

/// Cheapest goal cost found by enumerating every action sequence of the
/// planner's horizon, or `None` when no sequence is a goal. A sequence is a
/// goal when every step is applicable and sweeps no obstacle in the lane it
/// ends in, its trace (padded with the final state once the route ends)
/// scores LOW, and it ends no more than the slack behind the default
/// rollout.
pub fn exhaustive_best(
    root: &WorldState,
    road: &Road,
    params: &SimParams,
    config: &PlannerConfig,
    catalog: &QueryCatalog,
) -> Option<f64> {
    let target = rollout(root, road, params, config.horizon).final_state().position - config.slack;
    let mut best: Option<f64> = None;
    let mut states = vec![*root];
    enumerate(road, params, config, catalog, target, &mut states, 0.0, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    road: &Road,
    params: &SimParams,
    config: &PlannerConfig,
    catalog: &QueryCatalog,
    target: f64,
    states: &mut Vec<WorldState>,
    cost: f64,
    best: &mut Option<f64>,
) {
    let cur = *states.last().unwrap();
    let depth = states.len() - 1;
    let horizon = config.horizon as usize;
    if depth == horizon || (depth > 0 && road.at_end(cur.position)) {
        let padded = (horizon - depth) as f64 * params.dt;
        let mut full = states.clone();
        full.resize(horizon + 1, cur);
        let props: Vec<PropositionSet> = full.iter().map(|s| abstract_state(s, road, params)).collect();
        if cur.position >= target && brute_level(&props, catalog, &config.thresholds) == Level::Low {
            let total = cost + padded;
            if best.is_none_or(|b| total < b) {
                *best = Some(total);
            }
        }
        return;
    }
    for a in BRANCHING {
        let Ok(next) = step(&cur, &a, road, params) else {
            continue;
        };
        if road.sweeps_obstacle(next.lane, cur.position, next.position) {
            continue;
        }
        states.push(next);
        enumerate(road, params, config, catalog, target, states, cost + oracle_cost(&a, params), best);
        states.pop();
    }
}

/// States around every hazard of `scenario` at which the planner is probed.
pub fn probe_states(scenario: &Scenario) -> Vec<WorldState> {
    let road = &scenario.road;
    let mut anchors: Vec<f64> = road
        .segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.tags.is_empty())
        .map(|(i, _)| road.segment_start(i))
        .collect();
    anchors.extend(road.obstacles().iter().map(|o| o.position));
    let mut out = vec![scenario.initial];
    for anchor in anchors {
        for back in [220.0, 160.0, 110.0, 70.0, 30.0] {
            let position = anchor - back;
            if position < 0.0 {
                continue;
            }
            for lane in 0..road.lanes_at(position) {
                for speed in [0.0, 15.0, 26.0, 36.0] {
                    out.push(WorldState::new(position, lane, speed));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------- NLG

/// A fog bank inside a tunnel with a sensor dead zone, plus a lane
/// blockage behind it: every predicate has a referent.
pub fn nlg_situation() -> (CriticalityReport, Vec<Fact>) {
    let road = Road::new(vec![
        Segment::new(600.0, 1, 36.0),
        Segment::new(400.0, 1, 36.0)
            .with_tag(Tag::Fog)
            .with_tag(Tag::Tunnel)
            .with_tag(Tag::SensorDeadZone),
        Segment::new(400.0, 1, 36.0).with_obstacle(0, 100.0),
        Segment::new(800.0, 1, 36.0).with_tag(Tag::Construction),
    ]);
    let params = SimParams::default();
    let catalog = QueryCatalog::default_catalog();
    let state = WorldState::new(300.0, 0, 30.0);
    let trace = rollout(&state, &road, &params, 30);
    let report = score_trace(&trace.propositions, &catalog, &Thresholds::default(), params.dt);
    let facts = derive_facts(&report, &trace, &catalog, &road, &params, 11.0);
    (report, facts)
}

pub const NOTICES: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
