//! Abstract world model: vehicle snapshots, abstract actions, the
//! deterministic transition function and the default driving policy whose
//! decisions the monitor tests ahead of time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::Road;

/// Who is driving, as seen from the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Auto,
    Human,
    SafeStop,
}

/// Vehicle snapshot at one simulation tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Meters along the route.
    pub position: f64,
    /// Lane index, 0 is leftmost.
    pub lane: u32,
    /// Meters per second.
    pub speed: f64,
    pub tick: u64,
    pub mode: Mode,
    /// Fraction in `[0, 1]`.
    pub sensor_health: f64,
}

impl WorldState {
    pub fn new(position: f64, lane: u32, speed: f64) -> Self {
        Self {
            position,
            lane,
            speed,
            tick: 0,
            mode: Mode::Auto,
            sensor_health: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Hold,
    Accel,
    Decel,
    LaneLeft,
    LaneRight,
    InitiateHandover,
    SafeStop,
}

/// An abstract action. `magnitude` is an acceleration in m/s² and is only
/// meaningful for `Accel` and `Decel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub magnitude: f64,
}

impl Action {
    pub const fn new(kind: ActionKind, magnitude: f64) -> Self {
        Self { kind, magnitude }
    }

    pub const fn hold() -> Self {
        Self::new(ActionKind::Hold, 0.0)
    }

    pub const fn accel(magnitude: f64) -> Self {
        Self::new(ActionKind::Accel, magnitude)
    }

    pub const fn decel(magnitude: f64) -> Self {
        Self::new(ActionKind::Decel, magnitude)
    }

    pub const fn lane_left() -> Self {
        Self::new(ActionKind::LaneLeft, 0.0)
    }

    pub const fn lane_right() -> Self {
        Self::new(ActionKind::LaneRight, 0.0)
    }

    pub fn is_lane_change(&self) -> bool {
        matches!(self.kind, ActionKind::LaneLeft | ActionKind::LaneRight)
    }
}

/// Simulation constants. All values must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Seconds per tick.
    pub dt: f64,
    /// Maximum |acceleration|, m/s².
    pub a_max: f64,
    pub v_max: f64,
    pub high_speed_threshold: f64,
    /// Look-ahead distance for obstacle and route-end concepts, meters.
    pub obstacle_horizon: f64,
    /// Speed the default policy aims for where the segment limit allows.
    pub cruise_speed: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            a_max: 3.0,
            v_max: 36.0,
            high_speed_threshold: 25.0,
            obstacle_horizon: 150.0,
            cruise_speed: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("inapplicable action {kind:?}: {reason}")]
    InapplicableAction { kind: ActionKind, reason: String },
}

fn inapplicable(kind: ActionKind, reason: impl Into<String>) -> StepError {
    StepError::InapplicableAction {
        kind,
        reason: reason.into(),
    }
}

/// Distance needed to stop from `speed` at constant deceleration `a_max`.
pub fn braking_distance(speed: f64, a_max: f64) -> f64 {
    speed * speed / (2.0 * a_max)
}

/// Range within which an in-lane obstacle forces a reaction this tick.
pub fn reaction_range(speed: f64, params: &SimParams) -> f64 {
    braking_distance(speed, params.a_max) + speed * params.dt
}

/// Advances the world by one tick.
///
/// Speed changes by `a·dt` and is clamped to `[0, v_max]`; position advances
/// by the midpoint rule. Lane changes are atomic and keep speed. When the
/// current lane does not exist at the arrival position the vehicle merges
/// into the rightmost remaining lane.
pub fn step(
    state: &WorldState,
    action: &Action,
    road: &Road,
    params: &SimParams,
) -> Result<WorldState, StepError> {
    let kind = action.kind;
    let accel = match kind {
        ActionKind::Accel | ActionKind::Decel => {
            let m = action.magnitude;
            if !(m.is_finite() && m >= 0.0) {
                return Err(inapplicable(kind, format!("magnitude {m} is not a non-negative number")));
            }
            if m > params.a_max + 1e-9 {
                return Err(inapplicable(
                    kind,
                    format!("magnitude {m} exceeds a_max {}", params.a_max),
                ));
            }
            if kind == ActionKind::Accel {
                m
            } else {
                -m
            }
        }
        ActionKind::SafeStop => -params.a_max,
        ActionKind::Hold
        | ActionKind::LaneLeft
        | ActionKind::LaneRight
        | ActionKind::InitiateHandover => 0.0,
    };

    let speed = (state.speed + accel * params.dt).clamp(0.0, params.v_max);
    let position = state.position + (state.speed + speed) / 2.0 * params.dt;

    let lane = match kind {
        ActionKind::LaneLeft | ActionKind::LaneRight => {
            let target = if kind == ActionKind::LaneLeft {
                state
                    .lane
                    .checked_sub(1)
                    .ok_or_else(|| inapplicable(kind, "already in the leftmost lane"))?
            } else {
                state.lane + 1
            };
            if target >= road.lanes_at(state.position) || target >= road.lanes_at(position) {
                return Err(inapplicable(kind, format!("lane {target} does not exist")));
            }
            if road.sweeps_obstacle(target, state.position, position) {
                return Err(inapplicable(kind, format!("lane {target} is blocked at arrival")));
            }
            target
        }
        _ => state.lane.min(road.lanes_at(position) - 1),
    };

    let mode = if kind == ActionKind::SafeStop {
        Mode::SafeStop
    } else {
        state.mode
    };

    Ok(WorldState {
        position,
        lane,
        speed,
        tick: state.tick + 1,
        mode,
        sensor_health: state.sensor_health,
    })
}

/// True when `lane` is a usable evasion target from `state`: it exists, has
/// no obstacle within the obstacle horizon and a lane change into it is
/// applicable.
fn lane_free(state: &WorldState, lane: u32, road: &Road, params: &SimParams) -> bool {
    if lane >= road.lanes_at(state.position) {
        return false;
    }
    if road
        .obstacle_within(lane, state.position, params.obstacle_horizon)
        .is_some()
    {
        return false;
    }
    let action = if lane < state.lane {
        Action::lane_left()
    } else {
        Action::lane_right()
    };
    step(state, &action, road, params).is_ok()
}

/// Speed the policy aims for on the current segment.
pub fn target_speed(state: &WorldState, road: &Road, params: &SimParams) -> f64 {
    road.segment_at(state.position)
        .speed_limit
        .min(params.cruise_speed)
}

/// The automation's own driving policy. Returns the first matching rule:
/// evade an in-range obstacle into a free adjacent lane (left first), brake
/// hard if no lane is free, otherwise track the target speed.
pub fn default_policy(state: &WorldState, road: &Road, params: &SimParams) -> Action {
    let range = reaction_range(state.speed, params);
    if road.obstacle_within(state.lane, state.position, range).is_some() {
        let left = state.lane.checked_sub(1);
        let right = state.lane + 1;
        if left.is_some_and(|l| lane_free(state, l, road, params)) {
            return Action::lane_left();
        }
        if lane_free(state, right, road, params) {
            return Action::lane_right();
        }
        return Action::decel(params.a_max);
    }

    let target = target_speed(state, road, params);
    if state.speed > target {
        Action::decel(((state.speed - target) / params.dt).min(params.a_max))
    } else if state.speed < target {
        Action::accel(((target - state.speed) / params.dt).min(params.a_max))
    } else {
        Action::hold()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::Segment;

    fn one_segment(lanes: u32) -> Road {
        Road::new(vec![Segment::new(2000.0, lanes, 36.0)])
    }

    #[test]
    fn hold_is_constant_velocity() {
        let road = one_segment(2);
        let s = WorldState::new(100.0, 0, 20.0);
        let next = step(&s, &Action::hold(), &road, &SimParams::default()).unwrap();
        assert_eq!(next.position, 120.0);
        assert_eq!(next.speed, 20.0);
        assert_eq!(next.tick, 1);
    }

    #[test]
    fn decel_clamps_at_zero_with_midpoint_rule() {
        let road = one_segment(2);
        let s = WorldState::new(0.0, 0, 2.0);
        let next = step(&s, &Action::decel(3.0), &road, &SimParams::default()).unwrap();
        assert_eq!(next.speed, 0.0);
        assert_eq!(next.position, 1.0);
    }

    #[test]
    fn lane_change_is_atomic() {
        let road = one_segment(2);
        let s = WorldState::new(0.0, 0, 20.0);
        let next = step(&s, &Action::lane_right(), &road, &SimParams::default()).unwrap();
        assert_eq!(next.lane, 1);
        assert_eq!(next.speed, 20.0);
        assert_eq!(next.position, 20.0);
    }

    #[test]
    fn inapplicable_actions() {
        let road = one_segment(2);
        let params = SimParams::default();
        let s = WorldState::new(0.0, 0, 20.0);
        assert!(step(&s, &Action::lane_left(), &road, &params).is_err());
        let s1 = WorldState::new(0.0, 1, 20.0);
        assert!(step(&s1, &Action::lane_right(), &road, &params).is_err());
        assert!(step(&s, &Action::accel(3.5), &road, &params).is_err());
        assert!(step(&s, &Action::decel(f64::NAN), &road, &params).is_err());
    }

    #[test]
    fn lane_change_into_obstacle_rejected() {
        let road = Road::new(vec![Segment::new(500.0, 2, 30.0).with_obstacle(1, 10.0)]);
        let s = WorldState::new(0.0, 0, 20.0);
        assert!(step(&s, &Action::lane_right(), &road, &SimParams::default()).is_err());
    }

    #[test]
    fn lane_drop_merges() {
        let road = Road::new(vec![Segment::new(50.0, 3, 30.0), Segment::new(500.0, 2, 30.0)]);
        let s = WorldState::new(40.0, 2, 20.0);
        let next = step(&s, &Action::hold(), &road, &SimParams::default()).unwrap();
        assert_eq!(next.lane, 1);
    }

    #[test]
    fn braking_distance_examples() {
        assert_eq!(braking_distance(20.0, 4.0), 50.0);
        assert_eq!(braking_distance(0.0, 3.0), 0.0);
        assert_eq!(braking_distance(30.0, 5.0), 90.0);
    }

    #[test]
    fn policy_accelerates_on_empty_road() {
        let road = one_segment(2);
        let s = WorldState::new(0.0, 0, 10.0);
        let a = default_policy(&s, &road, &SimParams::default());
        assert_eq!(a.kind, ActionKind::Accel);
        assert_eq!(a.magnitude, 3.0);
    }

    // Rule enumeration by hand: braking_distance(20, 4) = 50, range = 70 ≥ 40,
    // so rule 1 applies when an adjacent lane is free.
    #[test]
    fn policy_evades_into_free_lane() {
        let road = Road::new(vec![Segment::new(1000.0, 2, 30.0).with_obstacle(0, 140.0)]);
        let params = SimParams {
            a_max: 4.0,
            ..SimParams::default()
        };
        let s = WorldState::new(100.0, 0, 20.0);
        assert_eq!(default_policy(&s, &road, &params).kind, ActionKind::LaneRight);
    }

    #[test]
    fn policy_prefers_left_on_tie() {
        let road = Road::new(vec![Segment::new(1000.0, 3, 30.0).with_obstacle(1, 140.0)]);
        let s = WorldState::new(100.0, 1, 20.0);
        assert_eq!(
            default_policy(&s, &road, &SimParams::default()).kind,
            ActionKind::LaneLeft
        );
    }

    #[test]
    fn policy_brakes_on_single_lane() {
        let road = Road::new(vec![Segment::new(1000.0, 1, 30.0).with_obstacle(0, 140.0)]);
        let params = SimParams {
            a_max: 4.0,
            ..SimParams::default()
        };
        let s = WorldState::new(100.0, 0, 20.0);
        assert_eq!(default_policy(&s, &road, &params), Action::decel(4.0));
    }

    #[test]
    fn policy_tracks_segment_limit() {
        let road = Road::new(vec![Segment::new(1000.0, 1, 20.0)]);
        let s = WorldState::new(0.0, 0, 21.0);
        assert_eq!(default_policy(&s, &road, &SimParams::default()), Action::decel(1.0));
        let s = WorldState::new(0.0, 0, 20.0);
        assert_eq!(default_policy(&s, &road, &SimParams::default()), Action::hold());
    }

    #[test]
    fn repeated_full_braking_stops_in_braking_distance() {
        let road = one_segment(1);
        let params = SimParams::default();
        for v in [3.0, 12.0, 30.0, 36.0] {
            let mut s = WorldState::new(0.0, 0, v);
            let mut ticks = 0;
            while s.speed > 0.0 {
                s = step(&s, &Action::decel(params.a_max), &road, &params).unwrap();
                ticks += 1;
            }
            assert_eq!(ticks, (v / (params.a_max * params.dt)).ceil() as u32);
            assert!((s.position - braking_distance(v, params.a_max)).abs() < 1e-9);
        }
    }
}
