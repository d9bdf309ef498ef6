//! One handover session: world state, mode machine, timers and event log.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::events::{Event, EventKind};
use super::select_modality;
use crate::driver::{
    respond, update_vigilance, DriverProfile, Modality, ReactionTable, ResponseKind, VigilanceEvent, VigilanceParams,
};
use crate::nlg::{compose, derive_facts, Message, NlgConfig};
use crate::planner::{find_safe_plan, rollout, simulate, PlannerConfig, SearchOutcome, Trace};
use crate::scenario::{scenario_to_value, Scenario};
use crate::tql::{score_trace, CriticalityReport, Level, QueryCatalog};
use crate::world::{default_policy, reaction_range, step, Action, Mode, SimParams, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MachineState {
    Autonomous,
    PlanAdapted,
    Announced,
    AwaitingAck,
    Escalated,
    HumanControl,
    MinimalRisk,
    Done,
}

impl MachineState {
    pub fn as_str(self) -> &'static str {
        match self {
            MachineState::Autonomous => "AUTONOMOUS",
            MachineState::PlanAdapted => "PLAN_ADAPTED",
            MachineState::Announced => "ANNOUNCED",
            MachineState::AwaitingAck => "AWAITING_ACK",
            MachineState::Escalated => "ESCALATED",
            MachineState::HumanControl => "HUMAN_CONTROL",
            MachineState::MinimalRisk => "MINIMAL_RISK",
            MachineState::Done => "DONE",
        }
    }

    /// States in which the automation drives and no stop is under way.
    pub fn is_pre_critical(self) -> bool {
        matches!(
            self,
            MachineState::Autonomous
                | MachineState::PlanAdapted
                | MachineState::Announced
                | MachineState::AwaitingAck
                | MachineState::Escalated
        )
    }

    /// States in which the planner searches for alternatives.
    fn searches(self) -> bool {
        matches!(
            self,
            MachineState::Autonomous | MachineState::PlanAdapted | MachineState::Announced
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingPolicy {
    /// Seconds the driver needs to take over after an alert.
    pub t_transfer: f64,
    /// Acknowledgement window per alert, seconds.
    pub t_ack: f64,
    /// Alerts are issued once the notice drops to this many seconds.
    pub announce_lead: f64,
    /// Added to the pure braking time to get T_safe.
    pub safe_margin: f64,
}

impl Default for TimingPolicy {
    fn default() -> Self {
        Self {
            t_transfer: 8.0,
            t_ack: 5.0,
            announce_lead: 20.0,
            safe_margin: 1.0,
        }
    }
}

impl TimingPolicy {
    /// Seconds a safe stop needs from `speed`.
    pub fn t_safe(&self, speed: f64, params: &SimParams) -> f64 {
        speed / params.a_max + self.safe_margin
    }
}

/// Who answers alerts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Responder {
    /// The simulated driver model.
    Scripted,
    /// Nobody, unless responses arrive through `handle_response`.
    None,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// `horizon` is taken from the scenario.
    pub planner: PlannerConfig,
    pub catalog: QueryCatalog,
    pub timing: TimingPolicy,
    pub nlg: NlgConfig,
    pub reactions: ReactionTable,
    pub vigilance: VigilanceParams,
    pub responder: Responder,
    /// Sessions end as COMPLETED after this many ticks.
    pub max_ticks: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            catalog: QueryCatalog::default_catalog(),
            timing: TimingPolicy::default(),
            nlg: NlgConfig::default(),
            reactions: ReactionTable::default_table(),
            vigilance: VigilanceParams::default(),
            responder: Responder::Scripted,
            max_ticks: 3600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("session is finished")]
    SessionFinished,
    #[error("{response:?} is not accepted in state {}", state.as_str())]
    InvalidTransition {
        state: MachineState,
        response: ResponseKind,
    },
}

/// Externally visible session status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub t: f64,
    pub machine: MachineState,
    pub state: WorldState,
    pub driver: DriverProfile,
    pub critical_at: Option<f64>,
    pub ack_deadline: Option<f64>,
    pub escalation_level: u8,
    pub plan_remaining: usize,
    pub last_seq: u64,
}

#[derive(Debug, Clone)]
struct Pending {
    due: f64,
    kind: ResponseKind,
    latency_ms: Option<f64>,
}

/// Latest monitoring result, kept for message composition.
#[derive(Debug, Clone)]
struct Assessment {
    trace: Trace,
    report: CriticalityReport,
}

const EPS: f64 = 1e-9;

pub struct HandoverSession {
    scenario: Scenario,
    params: SimParams,
    planner: PlannerConfig,
    config: SessionConfig,
    state: WorldState,
    machine: MachineState,
    plan: VecDeque<Action>,
    critical_at: Option<f64>,
    ack_deadline: Option<f64>,
    escalation_level: u8,
    unavoidable: bool,
    assessment: Option<Assessment>,
    last_reported: Option<(&'static str, Level)>,
    driver: DriverProfile,
    rng: ChaCha8Rng,
    pending: Vec<Pending>,
    log: Vec<Event>,
    budget_exhausted: bool,
}

fn action_value(a: &Action) -> Value {
    json!({"kind": a.kind, "magnitude": a.magnitude})
}

fn message_value(m: &Message) -> Value {
    json!({
        "text": m.text,
        "word_count": m.word_count,
        "est_duration": m.est_duration,
        "verbosity": m.verbosity,
        "channel": m.channel,
        "fits": m.fits,
        "facts": m.facts_included.iter().map(|f| f.predicate).collect::<Vec<_>>(),
    })
}

/// Human driving while in control: hold the lane, track the segment limit
/// and brake for an obstacle in range.
fn human_policy(state: &WorldState, scenario: &Scenario, params: &SimParams) -> Action {
    let road = &scenario.road;
    if road
        .obstacle_within(state.lane, state.position, reaction_range(state.speed, params))
        .is_some()
    {
        return Action::decel(params.a_max);
    }
    let target = road.segment_at(state.position).speed_limit.min(params.v_max);
    if state.speed > target {
        Action::decel(((state.speed - target) / params.dt).min(params.a_max))
    } else if state.speed < target {
        Action::accel(((target - state.speed) / params.dt).min(params.a_max))
    } else {
        Action::hold()
    }
}

impl HandoverSession {
    pub fn new(scenario: Scenario, config: SessionConfig) -> Self {
        let params = scenario.params();
        let planner = PlannerConfig {
            horizon: scenario.horizon,
            ..config.planner
        };
        let mut session = Self {
            params,
            planner,
            state: scenario.initial,
            machine: MachineState::Autonomous,
            plan: VecDeque::new(),
            critical_at: None,
            ack_deadline: None,
            escalation_level: 0,
            unavoidable: false,
            assessment: None,
            last_reported: None,
            driver: scenario.driver,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            pending: Vec::new(),
            log: Vec::new(),
            budget_exhausted: false,
            scenario,
            config,
        };
        let header = json!({
            "name": session.scenario.name,
            "seed": session.scenario.seed,
            "responder": session.config.responder,
            "scenario": scenario_to_value(&session.scenario),
        });
        session.emit(0.0, EventKind::SessionStarted, header);
        session
    }

    /// Replaces the scenario seed (and reseeds the driver generator).
    pub fn with_seed(scenario: Scenario, seed: u64, config: SessionConfig) -> Self {
        Self::new(Scenario { seed, ..scenario }, config)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn machine(&self) -> MachineState {
        self.machine
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn driver(&self) -> &DriverProfile {
        &self.driver
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    /// Events with `seq > since`.
    pub fn events_since(&self, since: Option<u64>) -> &[Event] {
        let start = since.map_or(0, |s| (s + 1) as usize).min(self.log.len());
        &self.log[start..]
    }

    pub fn is_done(&self) -> bool {
        self.machine == MachineState::Done
    }

    pub fn critical_at(&self) -> Option<f64> {
        self.critical_at
    }

    /// True when any planner search ran out of nodes.
    pub fn budget_exhausted(&self) -> bool {
        self.budget_exhausted
    }

    /// Session time in seconds.
    pub fn now(&self) -> f64 {
        self.state.tick as f64 * self.params.dt
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            t: self.now(),
            machine: self.machine,
            state: self.state,
            driver: self.driver,
            critical_at: self.critical_at,
            ack_deadline: self.ack_deadline,
            escalation_level: self.escalation_level,
            plan_remaining: self.plan.len(),
            last_seq: self.log.last().map_or(0, |e| e.seq),
        }
    }

    fn emit(&mut self, t: f64, kind: EventKind, payload: Value) {
        let seq = self.log.len() as u64;
        self.log.push(Event { seq, t, kind, payload });
    }

    fn t_safe(&self) -> f64 {
        self.config.timing.t_safe(self.state.speed, &self.params)
    }

    /// Advances one tick and returns the events it produced.
    pub fn tick(&mut self) -> Result<Vec<Event>, SessionError> {
        if self.is_done() {
            return Err(SessionError::SessionFinished);
        }
        let start = self.log.len();
        let t0 = self.now();

        // responses that arrived during the previous tick
        self.pending.sort_by(|a, b| a.due.total_cmp(&b.due));
        let due: Vec<Pending> = {
            let split = self.pending.partition_point(|p| p.due <= t0 + EPS);
            self.pending.drain(..split).collect()
        };
        for p in due {
            // a response overtaken by events (e.g. a stop already started)
            // is dropped without trace
            let _ = self.apply_response(p.kind, p.latency_ms, t0);
        }

        self.advance_world();
        let t = self.now();
        self.emit(
            t,
            EventKind::Tick,
            json!({"state": self.state, "machine": self.machine}),
        );

        if self.machine != MachineState::HumanControl {
            self.driver = update_vigilance(&self.driver, self.params.dt, VigilanceEvent::None, &self.config.vigilance);
        }

        if self.scenario.road.at_end(self.state.position) {
            self.finish(t, EventKind::Completed, json!({"reason": "route_end", "position": self.state.position}));
        } else if self.machine == MachineState::MinimalRisk && self.state.speed == 0.0 {
            self.finish(t, EventKind::Stopped, json!({"position": self.state.position, "lane": self.state.lane}));
        } else if self.state.tick >= self.config.max_ticks {
            self.finish(t, EventKind::Completed, json!({"reason": "tick_limit", "position": self.state.position}));
        } else {
            if self.machine.is_pre_critical() {
                self.monitor(t);
            }
            let critical = self.critical_at.is_some_and(|c| c - t <= self.t_safe() + EPS);
            if self.machine.is_pre_critical() && critical {
                self.start_minimal_risk(t, "time_to_critical");
            } else {
                self.alerts(t);
            }
        }
        Ok(self.log[start..].to_vec())
    }

    /// Ticks until the session is done.
    pub fn run_to_end(&mut self) -> Result<(), SessionError> {
        while !self.is_done() {
            self.tick()?;
        }
        Ok(())
    }

    fn finish(&mut self, t: f64, kind: EventKind, payload: Value) {
        self.emit(t, kind, payload);
        self.machine = MachineState::Done;
        self.plan.clear();
        self.pending.clear();
        self.ack_deadline = None;
    }

    fn advance_world(&mut self) {
        let road = &self.scenario.road;
        let params = &self.params;
        let default = default_policy(&self.state, road, params);
        let action = match self.machine {
            MachineState::HumanControl => human_policy(&self.state, &self.scenario, params),
            MachineState::MinimalRisk => Action::new(crate::world::ActionKind::SafeStop, params.a_max),
            MachineState::PlanAdapted => self.plan.pop_front().unwrap_or(default),
            _ => default,
        };
        let mut next = step(&self.state, &action, road, params)
            .or_else(|_| step(&self.state, &default, road, params))
            .expect("the default policy is always applicable");
        next.mode = match self.machine {
            MachineState::HumanControl => Mode::Human,
            MachineState::MinimalRisk => Mode::SafeStop,
            _ => Mode::Auto,
        };
        self.state = next;
    }

    fn monitor(&mut self, t: f64) {
        let road = &self.scenario.road;
        let trace = rollout(&self.state, road, &self.params, self.planner.horizon);
        let report = score_trace(&trace.propositions, &self.config.catalog, &self.planner.thresholds, self.params.dt);
        self.unavoidable = false;
        let mut exhausted = false;

        let verdict: &'static str = if report.is_low() {
            if self.machine.searches() {
                self.machine = MachineState::Autonomous;
                self.plan.clear();
                self.critical_at = None;
            }
            "SAFE"
        } else if !self.machine.searches() {
            // alert outstanding: keep tracking the predicted critical time
            self.update_critical_at(t, &report);
            "UNAVOIDABLE"
        } else if self.machine == MachineState::PlanAdapted && self.plan_still_valid(trace.final_state().position) {
            "AVOIDABLE"
        } else {
            match find_safe_plan(&self.state, road, &self.params, &self.planner, &self.config.catalog) {
                SearchOutcome::Found(plan) => {
                    // revisions inside PLAN_ADAPTED replace the plan quietly
                    if self.machine != MachineState::PlanAdapted {
                        self.emit(
                            t,
                            EventKind::ReplanAdopted,
                            json!({
                                "actions": plan.actions.iter().map(action_value).collect::<Vec<_>>(),
                                "cost": plan.cost,
                            }),
                        );
                    }
                    self.machine = MachineState::PlanAdapted;
                    self.critical_at = None;
                    self.plan = plan.actions.into();
                    "AVOIDABLE"
                }
                SearchOutcome::NoPlan { budget_exhausted } => {
                    exhausted = budget_exhausted;
                    self.budget_exhausted |= budget_exhausted;
                    self.plan.clear();
                    if self.machine == MachineState::PlanAdapted {
                        self.machine = MachineState::Autonomous;
                    }
                    self.unavoidable = true;
                    self.update_critical_at(t, &report);
                    "UNAVOIDABLE"
                }
            }
        };

        if self.last_reported != Some((verdict, report.level)) || exhausted {
            self.last_reported = Some((verdict, report.level));
            self.emit(t, EventKind::Criticality, criticality_payload(verdict, &report, exhausted));
        }
        self.assessment = Some(Assessment { trace, report });
    }

    fn update_critical_at(&mut self, t: f64, report: &CriticalityReport) {
        if let Some(ttc) = report.time_to_critical {
            let at = t + ttc;
            self.critical_at = Some(self.critical_at.map_or(at, |c| c.min(at)));
        }
    }

    /// Whether the rest of the adopted plan, padded with HOLD to the
    /// horizon, is still a goal: LOW and within the progress slack of
    /// `default_end`.
    fn plan_still_valid(&self, default_end: f64) -> bool {
        let mut actions: Vec<Action> = self.plan.iter().copied().collect();
        actions.resize(self.planner.horizon as usize, Action::hold());
        let Ok(trace) = simulate(&self.state, &actions, false, &self.scenario.road, &self.params, self.planner.horizon)
        else {
            return false;
        };
        trace.final_state().position >= default_end - self.planner.slack
            && score_trace(&trace.propositions, &self.config.catalog, &self.planner.thresholds, self.params.dt).is_low()
    }

    fn start_minimal_risk(&mut self, t: f64, reason: &str) {
        self.machine = MachineState::MinimalRisk;
        self.plan.clear();
        self.ack_deadline = None;
        self.pending.clear();
        self.emit(
            t,
            EventKind::SafeStopStarted,
            json!({"reason": reason, "critical_at": self.critical_at, "speed": self.state.speed}),
        );
    }

    fn alerts(&mut self, t: f64) {
        if self.unavoidable && self.machine.searches() {
            let critical_at = self.critical_at.expect("unavoidable verdicts carry a critical time");
            let notice = critical_at - t - self.config.timing.t_transfer;
            if notice <= self.config.timing.announce_lead + EPS {
                self.issue(t, 0);
            } else {
                self.machine = MachineState::Announced;
            }
            return;
        }
        let waiting = matches!(self.machine, MachineState::AwaitingAck | MachineState::Escalated);
        if waiting && self.ack_deadline.is_some_and(|d| t + EPS >= d) {
            if self.escalation_level < 2 {
                self.issue(t, self.escalation_level + 1);
            } else {
                self.start_minimal_risk(t, "no_response");
            }
        }
    }

    /// Issues the alert (level 0) or an escalation (levels 1 and 2).
    fn issue(&mut self, t: f64, level: u8) {
        let modalities = select_modality(&self.driver, &self.config.reactions, level)
            .expect("the reaction table covers every load and condition");
        let channel = if modalities.len() > 1 {
            Modality::Audio
        } else {
            modalities[0]
        };
        let ttc = self.critical_at.map_or(0.0, |c| c - t);
        let message = self.compose_message(channel, ttc);
        let deadline = t + self.config.timing.t_ack;
        self.ack_deadline = Some(deadline);
        self.escalation_level = level;
        let mut payload = json!({
            "level": level,
            "modalities": modalities,
            "message": message_value(&message),
            "critical_at": self.critical_at,
            "notice": ttc,
            "ack_deadline": deadline,
        });
        if level == 0 {
            payload["modality"] = json!(modalities[0]);
            self.machine = MachineState::AwaitingAck;
            self.emit(t, EventKind::AlertIssued, payload);
        } else {
            self.machine = MachineState::Escalated;
            self.emit(t, EventKind::Escalation, payload);
        }
        self.driver_alerted(&modalities, t);
    }

    fn compose_message(&self, channel: Modality, ttc: f64) -> Message {
        let a = self.assessment.as_ref().expect("alerts follow an assessment");
        let facts = derive_facts(
            &a.report,
            &a.trace,
            &self.config.catalog,
            &self.scenario.road,
            &self.params,
            self.t_safe(),
        );
        compose(&a.report, &facts, channel, ttc.max(EPS), self.driver.load, &self.config.nlg)
            .expect("shipped templates are complete")
    }

    fn driver_alerted(&mut self, modalities: &[Modality], t: f64) {
        self.driver = update_vigilance(&self.driver, self.params.dt, VigilanceEvent::Alert, &self.config.vigilance);
        if self.config.responder != Responder::Scripted {
            return;
        }
        let response = respond(
            &self.driver,
            modalities,
            &self.config.reactions,
            &self.config.vigilance,
            &mut self.rng,
        )
        .expect("the reaction table covers every load and condition");
        if let (ResponseKind::Ack, Some(latency)) = (response.kind, response.latency_ms) {
            self.pending.push(Pending {
                due: t + latency / 1000.0,
                kind: ResponseKind::Ack,
                latency_ms: Some(latency),
            });
        }
    }

    /// Applies a driver response now and returns the events it produced.
    pub fn handle_response(&mut self, kind: ResponseKind) -> Result<Vec<Event>, SessionError> {
        self.handle_response_with(kind, None)
    }

    /// Like [`handle_response`](Self::handle_response), recording a
    /// measured reaction latency on ACK events.
    pub fn handle_response_with(
        &mut self,
        kind: ResponseKind,
        latency_ms: Option<f64>,
    ) -> Result<Vec<Event>, SessionError> {
        let start = self.log.len();
        self.apply_response(kind, latency_ms, self.now())?;
        Ok(self.log[start..].to_vec())
    }

    /// Checks whether `kind` would be accepted in the current state
    /// without applying it. A HANDBACK may still be refused by its guard.
    pub fn accepts(&self, kind: ResponseKind) -> Result<(), SessionError> {
        use MachineState::*;
        match (kind, self.machine) {
            (_, Done) => Err(SessionError::SessionFinished),
            (ResponseKind::Ack, AwaitingAck | Escalated) | (ResponseKind::Handback, HumanControl) => Ok(()),
            (ResponseKind::Takeover, s) if s.is_pre_critical() => Ok(()),
            (response, state) => Err(SessionError::InvalidTransition { state, response }),
        }
    }

    /// Seconds since the outstanding alert or escalation was issued.
    pub fn alert_age(&self) -> Option<f64> {
        let deadline = self.ack_deadline?;
        Some(self.now() - (deadline - self.config.timing.t_ack))
    }

    fn apply_response(&mut self, kind: ResponseKind, latency_ms: Option<f64>, t: f64) -> Result<(), SessionError> {
        use MachineState::*;
        match (kind, self.machine) {
            (_, Done) => Err(SessionError::SessionFinished),
            (ResponseKind::Ack, AwaitingAck | Escalated) => {
                self.emit(t, EventKind::Ack, json!({"latency_ms": latency_ms, "level": self.escalation_level}));
                self.emit(t, EventKind::Takeover, json!({"response": "ACK"}));
                self.take_over();
                Ok(())
            }
            (ResponseKind::Takeover, s) if s.is_pre_critical() => {
                self.emit(t, EventKind::Takeover, json!({"response": "TAKEOVER"}));
                self.take_over();
                Ok(())
            }
            (ResponseKind::Handback, HumanControl) => {
                let trace = rollout(&self.state, &self.scenario.road, &self.params, self.planner.horizon);
                let report =
                    score_trace(&trace.propositions, &self.config.catalog, &self.planner.thresholds, self.params.dt);
                if report.is_low() {
                    self.emit(t, EventKind::Handback, json!({"accepted": true}));
                    self.machine = Autonomous;
                    self.critical_at = None;
                    self.escalation_level = 0;
                    self.last_reported = Some(("SAFE", report.level));
                } else {
                    let mut payload = criticality_payload("UNAVOIDABLE", &report, false);
                    payload["refused"] = json!("HANDBACK");
                    self.emit(t, EventKind::Criticality, payload);
                }
                Ok(())
            }
            (response, state) => Err(SessionError::InvalidTransition { state, response }),
        }
    }

    fn take_over(&mut self) {
        self.machine = MachineState::HumanControl;
        self.driver = update_vigilance(&self.driver, self.params.dt, VigilanceEvent::TookOver, &self.config.vigilance);
        self.ack_deadline = None;
        self.plan.clear();
        self.pending.clear();
        self.unavoidable = false;
    }
}

fn criticality_payload(verdict: &str, report: &CriticalityReport, budget_exhausted: bool) -> Value {
    json!({
        "verdict": verdict,
        "level": report.level,
        "score": report.score,
        "time_to_critical": report.time_to_critical,
        "matched": report.matched().map(|m| m.name.clone()).collect::<Vec<_>>(),
        "budget_exhausted": budget_exhausted,
    })
}

/// `(state, machine)` after every tick, read from TICK events.
pub fn state_sequence(log: &[Event]) -> Vec<(WorldState, MachineState)> {
    log.iter()
        .filter(|e| e.kind == EventKind::Tick)
        .filter_map(|e| {
            let state = serde_json::from_value(e.payload.get("state")?.clone()).ok()?;
            let machine = serde_json::from_value(e.payload.get("machine")?.clone()).ok()?;
            Some((state, machine))
        })
        .collect()
}

/// Re-runs `scenario` with no scripted responder, injecting the responses
/// recorded in `log` at the tick boundaries where they occurred. Returns the
/// new log.
pub fn replay(scenario: Scenario, config: SessionConfig, log: &[Event]) -> Result<Vec<Event>, SessionError> {
    let mut session = HandoverSession::new(
        scenario,
        SessionConfig {
            responder: Responder::None,
            ..config
        },
    );
    for e in log.iter().filter(|e| e.kind != EventKind::SessionStarted) {
        let t = session.now();
        match e.kind {
            EventKind::Tick => {
                session.tick()?;
            }
            EventKind::Ack => {
                let latency = e.payload.get("latency_ms").and_then(Value::as_f64);
                session.apply_response(ResponseKind::Ack, latency, t)?;
            }
            EventKind::Takeover if e.payload.get("response") == Some(&json!("TAKEOVER")) => {
                session.apply_response(ResponseKind::Takeover, None, t)?;
            }
            EventKind::Handback => {
                session.apply_response(ResponseKind::Handback, None, t)?;
            }
            EventKind::Criticality if e.payload.get("refused").is_some() => {
                session.apply_response(ResponseKind::Handback, None, t)?;
            }
            _ => {}
        }
    }
    Ok(session.log)
}
