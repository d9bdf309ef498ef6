//! Monitoring and replanning.
//!
//! [`rollout`] simulates the default policy over the horizon and
//! [`assess`] scores that prediction. When the prediction is not LOW,
//! [`find_safe_plan`] runs a best-first search over six abstract actions
//! for a plan whose own trace scores LOW while still making progress.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::road::Road;
use crate::tql::{
    abstract_state, eval_final, progress, score_trace, CriticalityReport, Formula, Proposition, PropositionSet,
    QueryCatalog, Thresholds,
};
use crate::world::{default_policy, step, Action, ActionKind, SimParams, StepError, WorldState};

/// A predicted future: `states[0]` is the start, `propositions[i]` abstracts
/// `states[i]`. `actions[i]` leads from `states[i]` to `states[i + 1]`; once
/// the route end is reached the remaining entries repeat the terminal state
/// and no further actions are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<WorldState>,
    pub actions: Vec<Action>,
    pub propositions: Vec<PropositionSet>,
}

impl Trace {
    pub fn final_state(&self) -> &WorldState {
        self.states.last().expect("traces are never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<Action>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    Safe,
    Avoidable { plan: Plan },
    Unavoidable,
}

impl VerdictKind {
    pub fn name(&self) -> &'static str {
        match self {
            VerdictKind::Safe => "SAFE",
            VerdictKind::Avoidable { .. } => "AVOIDABLE",
            VerdictKind::Unavoidable => "UNAVOIDABLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerVerdict {
    pub kind: VerdictKind,
    /// Score of the default-policy rollout.
    pub report: CriticalityReport,
    /// Set when the search gave up on its node budget.
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub horizon: u32,
    pub thresholds: Thresholds,
    /// A plan may end at most this many meters behind the default rollout.
    pub slack: f64,
    pub node_budget: usize,
    pub lane_change_cost: f64,
    pub brake_cost: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 30,
            thresholds: Thresholds::default(),
            slack: 100.0,
            node_budget: 200_000,
            lane_change_cost: 0.5,
            brake_cost: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found(Plan),
    NoPlan { budget_exhausted: bool },
}

/// The search's branching set, in tie-break order.
pub fn branching_actions(params: &SimParams) -> [Action; 6] {
    [
        Action::hold(),
        Action::accel(params.a_max),
        Action::decel(params.a_max),
        Action::decel(params.a_max / 2.0),
        Action::lane_left(),
        Action::lane_right(),
    ]
}

/// Cost of one tick under `action`.
pub fn step_cost(action: &Action, params: &SimParams, config: &PlannerConfig) -> f64 {
    let mut c = params.dt;
    if action.is_lane_change() {
        c += config.lane_change_cost;
    }
    if action.kind == ActionKind::Decel {
        c += config.brake_cost * action.magnitude / params.a_max;
    }
    c
}

/// Lower bound on the cost still to pay from a node at `depth` and
/// `position`: every remaining tick costs at least `dt`, and the distance
/// left to `target` cannot be covered faster than `v_max`.
pub fn heuristic(position: f64, depth: u32, target: f64, params: &SimParams, config: &PlannerConfig) -> f64 {
    let remaining_ticks = f64::from(config.horizon.saturating_sub(depth)) * params.dt;
    let progress = (target - position).max(0.0) / params.v_max;
    remaining_ticks.max(progress)
}

/// Applies the default policy for `horizon` ticks.
pub fn rollout(state: &WorldState, road: &Road, params: &SimParams, horizon: u32) -> Trace {
    simulate(state, &[], true, road, params, horizon).expect("the default policy is always applicable")
}

/// Applies `actions` in order, then (if `continue_default`) the default
/// policy until the horizon. Without continuation a short action list is
/// padded by repeating its last state.
pub fn simulate(
    state: &WorldState,
    actions: &[Action],
    continue_default: bool,
    road: &Road,
    params: &SimParams,
    horizon: u32,
) -> Result<Trace, StepError> {
    let mut states = vec![*state];
    let mut taken = Vec::new();
    let mut cur = *state;
    for i in 0..horizon as usize {
        if road.at_end(cur.position) {
            break;
        }
        let action = match actions.get(i) {
            Some(a) => *a,
            None if continue_default => default_policy(&cur, road, params),
            None => break,
        };
        cur = step(&cur, &action, road, params)?;
        taken.push(action);
        states.push(cur);
    }
    while states.len() < horizon as usize + 1 {
        states.push(cur);
    }
    let propositions = states.iter().map(|s| abstract_state(s, road, params)).collect();
    Ok(Trace {
        states,
        actions: taken,
        propositions,
    })
}

/// Scores the default rollout and, when it is not LOW, searches for an
/// alternative.
pub fn assess(
    state: &WorldState,
    road: &Road,
    params: &SimParams,
    config: &PlannerConfig,
    catalog: &QueryCatalog,
) -> PlannerVerdict {
    let trace = rollout(state, road, params, config.horizon);
    let report = score_trace(&trace.propositions, catalog, &config.thresholds, params.dt);
    if report.is_low() {
        return PlannerVerdict {
            kind: VerdictKind::Safe,
            report,
            budget_exhausted: false,
        };
    }
    let target = trace.final_state().position - config.slack;
    match search(state, target, road, params, config, catalog) {
        SearchOutcome::Found(plan) => PlannerVerdict {
            kind: VerdictKind::Avoidable { plan },
            report,
            budget_exhausted: false,
        },
        SearchOutcome::NoPlan { budget_exhausted } => PlannerVerdict {
            kind: VerdictKind::Unavoidable,
            report,
            budget_exhausted,
        },
    }
}

/// Searches for the cheapest plan whose trace scores LOW and ends no more
/// than `slack` meters behind the default rollout.
pub fn find_safe_plan(
    state: &WorldState,
    road: &Road,
    params: &SimParams,
    config: &PlannerConfig,
    catalog: &QueryCatalog,
) -> SearchOutcome {
    let trace = rollout(state, road, params, config.horizon);
    let target = trace.final_state().position - config.slack;
    search(state, target, road, params, config, catalog)
}

/// Seconds until the earliest predicted match, for unavoidable verdicts.
pub fn time_to_critical(verdict: &PlannerVerdict, dt: f64) -> Option<f64> {
    match verdict.kind {
        VerdictKind::Unavoidable => verdict.report.earliest_step().map(|s| s as f64 * dt),
        _ => None,
    }
}

/// Progress-target check shared by the search and its callers: the
/// furthest position reachable from `state` in `ticks` ticks.
pub fn max_reach(state: &WorldState, ticks: u32, params: &SimParams) -> f64 {
    let (mut pos, mut v) = (state.position, state.speed);
    for _ in 0..ticks {
        let next = (v + params.a_max * params.dt).min(params.v_max);
        pos += (v + next) / 2.0 * params.dt;
        v = next;
    }
    pos
}

struct Node {
    parent: Option<usize>,
    action: u8,
    depth: u32,
    state: WorldState,
    /// Interned catalog formulas progressed through every state before
    /// this one.
    residuals: u32,
    g: f64,
    goal: bool,
}

#[derive(Debug, PartialEq, Eq)]
struct OpenEntry {
    f: i64,
    depth: u32,
    action: u8,
    order: u64,
    node: usize,
}

impl Ord for OpenEntry {
    // BinaryHeap pops the greatest entry, so "better" must compare greater:
    // lower f, then deeper, then lower action ordinal, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(self.depth.cmp(&other.depth))
            .then(other.action.cmp(&self.action))
            .then(other.order.cmp(&self.order))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(PartialEq, Eq, Hash)]
struct Key {
    depth: u32,
    lane: u32,
    position: u64,
    speed: u64,
    residuals: u32,
}

/// Interned residual vectors with memoized progression. Distinct search
/// nodes share few residual vectors, so progressing each one once per
/// proposition set saves most of the formula work.
struct Residuals<'a> {
    catalog: &'a QueryCatalog,
    thresholds: &'a Thresholds,
    vectors: Vec<Vec<Formula<Proposition>>>,
    ids: HashMap<Vec<Formula<Proposition>>, u32>,
    steps: HashMap<(u32, PropositionSet), (u32, bool)>,
    terminal: HashMap<(u32, PropositionSet, u32), bool>,
}

impl<'a> Residuals<'a> {
    fn new(catalog: &'a QueryCatalog, thresholds: &'a Thresholds) -> Self {
        Self {
            catalog,
            thresholds,
            vectors: Vec::new(),
            ids: HashMap::new(),
            steps: HashMap::new(),
            terminal: HashMap::new(),
        }
    }

    fn intern(&mut self, v: Vec<Formula<Proposition>>) -> u32 {
        if let Some(id) = self.ids.get(&v) {
            return *id;
        }
        let id = self.vectors.len() as u32;
        self.vectors.push(v.clone());
        self.ids.insert(v, id);
        id
    }

    /// Progresses `id` through `props`; also reports whether the result is
    /// doomed.
    fn step(&mut self, id: u32, props: PropositionSet) -> (u32, bool) {
        if let Some(r) = self.steps.get(&(id, props)) {
            return *r;
        }
        let next: Vec<_> = self.vectors[id as usize].iter().map(|r| progress(r, &props)).collect();
        let is_doomed = doomed(&next, self.catalog, self.thresholds);
        let r = (self.intern(next), is_doomed);
        self.steps.insert((id, props), r);
        r
    }

    fn terminal_is_low(&mut self, id: u32, props: PropositionSet, remaining: u32) -> bool {
        if let Some(r) = self.terminal.get(&(id, props, remaining)) {
            return *r;
        }
        let r = terminal_is_low(&self.vectors[id as usize], &props, remaining, self.catalog, self.thresholds);
        self.terminal.insert((id, props, remaining), r);
        r
    }
}

fn micro(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

/// Whether the entries already certain to match push the score to θ1.
fn doomed(residuals: &[Formula<Proposition>], catalog: &QueryCatalog, thresholds: &Thresholds) -> bool {
    let certain: f64 = residuals
        .iter()
        .zip(catalog.entries())
        .filter(|(r, _)| **r == Formula::True)
        .map(|(_, e)| e.contribution())
        .sum();
    certain >= thresholds.elevated
}

/// Finishes the evaluation of a terminal node: `residuals` have been
/// progressed through every earlier state and `props` repeats until the
/// horizon.
fn terminal_is_low(
    residuals: &[Formula<Proposition>],
    props: &PropositionSet,
    remaining: u32,
    catalog: &QueryCatalog,
    thresholds: &Thresholds,
) -> bool {
    let mut score = 0.0;
    for (r, e) in residuals.iter().zip(catalog.entries()) {
        let mut r = r.clone();
        for _ in 0..remaining {
            if matches!(r, Formula::True | Formula::False) {
                break;
            }
            r = progress(&r, props);
        }
        if eval_final(&r, props) {
            score += e.contribution();
        }
    }
    thresholds.level(score) == crate::tql::Level::Low
}

fn search(
    root: &WorldState,
    target: f64,
    road: &Road,
    params: &SimParams,
    config: &PlannerConfig,
    catalog: &QueryCatalog,
) -> SearchOutcome {
    let horizon = config.horizon;
    let thresholds = &config.thresholds;
    let actions = branching_actions(params);
    let residuals: Vec<_> = catalog.entries().iter().map(|e| e.formula.clone()).collect();

    if road.at_end(root.position) {
        let props = abstract_state(root, road, params);
        return if terminal_is_low(&residuals, &props, horizon, catalog, thresholds) && root.position >= target {
            SearchOutcome::Found(Plan {
                actions: Vec::new(),
                cost: f64::from(horizon) * params.dt,
            })
        } else {
            SearchOutcome::NoPlan { budget_exhausted: false }
        };
    }

    let mut interned = Residuals::new(catalog, thresholds);
    let root_residuals = interned.intern(residuals);
    let mut nodes = vec![Node {
        parent: None,
        action: 0,
        depth: 0,
        state: *root,
        residuals: root_residuals,
        g: 0.0,
        goal: false,
    }];
    let mut open = BinaryHeap::new();
    let mut best_g: HashMap<Key, f64> = HashMap::new();
    let mut order = 0u64;
    open.push(OpenEntry {
        f: micro(heuristic(root.position, 0, target, params, config)),
        depth: 0,
        action: 0,
        order,
        node: 0,
    });
    let mut expanded = 0usize;

    while let Some(entry) = open.pop() {
        let idx = entry.node;
        if nodes[idx].goal {
            return SearchOutcome::Found(extract(&nodes, idx, &actions));
        }
        if expanded >= config.node_budget {
            return SearchOutcome::NoPlan { budget_exhausted: true };
        }
        expanded += 1;

        let (state, depth, g) = (nodes[idx].state, nodes[idx].depth, nodes[idx].g);
        let props = abstract_state(&state, road, params);
        let (child_residuals, is_doomed) = interned.step(nodes[idx].residuals, props);
        if is_doomed {
            continue;
        }

        for (ord, action) in actions.iter().enumerate() {
            let Ok(next) = step(&state, action, road, params) else {
                continue;
            };
            if road.sweeps_obstacle(next.lane, state.position, next.position) {
                continue;
            }
            let child_depth = depth + 1;
            let mut child_g = g + step_cost(action, params, config);
            let at_end = road.at_end(next.position);
            let remaining = horizon - child_depth;
            let mut goal = false;
            if child_depth == horizon || at_end {
                // terminal: padded ticks each cost dt
                child_g += f64::from(remaining) * params.dt;
                let next_props = abstract_state(&next, road, params);
                if next.position < target || !interned.terminal_is_low(child_residuals, next_props, remaining) {
                    continue;
                }
                goal = true;
            } else if max_reach(&next, remaining, params) < target {
                continue;
            }

            let key = Key {
                depth: child_depth,
                lane: next.lane,
                position: next.position.to_bits(),
                speed: next.speed.to_bits(),
                residuals: child_residuals,
            };
            match best_g.entry(key) {
                Entry::Occupied(mut e) => {
                    if *e.get() <= child_g {
                        continue;
                    }
                    e.insert(child_g);
                }
                Entry::Vacant(e) => {
                    e.insert(child_g);
                }
            }

            let h = if goal {
                0.0
            } else {
                heuristic(next.position, child_depth, target, params, config)
            };
            order += 1;
            nodes.push(Node {
                parent: Some(idx),
                action: ord as u8,
                depth: child_depth,
                state: next,
                residuals: child_residuals,
                g: child_g,
                goal,
            });
            open.push(OpenEntry {
                f: micro(child_g + h),
                depth: child_depth,
                action: ord as u8,
                order,
                node: nodes.len() - 1,
            });
        }
    }
    SearchOutcome::NoPlan { budget_exhausted: false }
}

fn extract(nodes: &[Node], mut idx: usize, actions: &[Action; 6]) -> Plan {
    let cost = nodes[idx].g;
    let mut out = Vec::new();
    while let Some(p) = nodes[idx].parent {
        out.push(actions[nodes[idx].action as usize]);
        idx = p;
    }
    out.reverse();
    Plan { actions: out, cost }
}
