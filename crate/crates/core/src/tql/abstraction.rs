//! Concept abstraction: maps a concrete world state onto the fixed
//! proposition alphabet the temporal queries are written against.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::road::{Road, Tag};
use crate::world::{reaction_range, SimParams, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Proposition {
    InTunnel,
    InFog,
    InConstruction,
    OnIce,
    SensorDegraded,
    HighSpeed,
    ObstacleAhead,
    LaneBlocked,
    AdjacentLaneFree,
    NearRouteEnd,
}

impl Proposition {
    pub const ALL: [Proposition; 10] = [
        Proposition::InTunnel,
        Proposition::InFog,
        Proposition::InConstruction,
        Proposition::OnIce,
        Proposition::SensorDegraded,
        Proposition::HighSpeed,
        Proposition::ObstacleAhead,
        Proposition::LaneBlocked,
        Proposition::AdjacentLaneFree,
        Proposition::NearRouteEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Proposition::InTunnel => "InTunnel",
            Proposition::InFog => "InFog",
            Proposition::InConstruction => "InConstruction",
            Proposition::OnIce => "OnIce",
            Proposition::SensorDegraded => "SensorDegraded",
            Proposition::HighSpeed => "HighSpeed",
            Proposition::ObstacleAhead => "ObstacleAhead",
            Proposition::LaneBlocked => "LaneBlocked",
            Proposition::AdjacentLaneFree => "AdjacentLaneFree",
            Proposition::NearRouteEnd => "NearRouteEnd",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Proposition {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Proposition::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or(())
    }
}

/// A set of propositions, stored as a bit mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PropositionSet(u16);

impl PropositionSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, p: Proposition) {
        self.0 |= p.bit();
    }

    pub fn with(mut self, p: Proposition) -> Self {
        self.insert(p);
        self
    }

    pub fn contains(&self, p: Proposition) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Proposition> + '_ {
        Proposition::ALL.into_iter().filter(|p| self.contains(*p))
    }

    /// Parses a list of proposition names; returns the first unknown name.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, String> {
        let mut set = Self::empty();
        for n in names {
            let p = n.as_ref().parse().map_err(|_| n.as_ref().to_string())?;
            set.insert(p);
        }
        Ok(set)
    }
}

impl FromIterator<Proposition> for PropositionSet {
    fn from_iter<T: IntoIterator<Item = Proposition>>(iter: T) -> Self {
        let mut set = Self::empty();
        for p in iter {
            set.insert(p);
        }
        set
    }
}

impl Serialize for PropositionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(Proposition::name))
    }
}

impl<'de> Deserialize<'de> for PropositionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        PropositionSet::from_names(&names)
            .map_err(|n| serde::de::Error::custom(format!("unknown proposition `{n}`")))
    }
}

/// Abstracts `state` into the propositions that hold there.
pub fn abstract_state(state: &WorldState, road: &Road, params: &SimParams) -> PropositionSet {
    let seg = road.segment_at(state.position);
    let mut set = PropositionSet::empty();
    for (tag, prop) in [
        (Tag::Tunnel, Proposition::InTunnel),
        (Tag::Fog, Proposition::InFog),
        (Tag::Construction, Proposition::InConstruction),
        (Tag::Ice, Proposition::OnIce),
    ] {
        if seg.has(tag) {
            set.insert(prop);
        }
    }
    if state.sensor_health < 0.5 || seg.has(Tag::SensorDeadZone) {
        set.insert(Proposition::SensorDegraded);
    }
    if state.speed > params.high_speed_threshold {
        set.insert(Proposition::HighSpeed);
    }
    if road
        .obstacle_within(state.lane, state.position, params.obstacle_horizon)
        .is_some()
    {
        set.insert(Proposition::ObstacleAhead);
    }
    if road
        .obstacle_within(state.lane, state.position, reaction_range(state.speed, params))
        .is_some()
    {
        set.insert(Proposition::LaneBlocked);
    }
    let lanes = seg.lanes;
    let adjacent = [state.lane.checked_sub(1), Some(state.lane + 1)];
    if adjacent.into_iter().flatten().any(|l| {
        l < lanes
            && road
                .obstacle_within(l, state.position, params.obstacle_horizon)
                .is_none()
    }) {
        set.insert(Proposition::AdjacentLaneFree);
    }
    if road.total_length() - state.position < params.obstacle_horizon {
        set.insert(Proposition::NearRouteEnd);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::Segment;
    use Proposition::*;

    #[test]
    fn fog_and_high_speed() {
        let road = Road::new(vec![Segment::new(1000.0, 1, 36.0).with_tag(Tag::Fog)]);
        let s = WorldState::new(0.0, 0, 30.0);
        let set = abstract_state(&s, &road, &SimParams::default());
        assert_eq!(set, PropositionSet::from_iter([InFog, HighSpeed]));
    }

    #[test]
    fn tunnel_with_weak_sensors() {
        let road = Road::new(vec![Segment::new(1000.0, 2, 36.0).with_tag(Tag::Tunnel)]);
        let mut s = WorldState::new(0.0, 0, 20.0);
        s.sensor_health = 0.3;
        let set = abstract_state(&s, &road, &SimParams::default());
        assert!(set.contains(InTunnel));
        assert!(set.contains(SensorDegraded));
        assert!(set.contains(AdjacentLaneFree));
    }

    #[test]
    fn dead_zone_degrades_sensors() {
        let road = Road::new(vec![Segment::new(1000.0, 1, 36.0).with_tag(Tag::SensorDeadZone)]);
        let s = WorldState::new(0.0, 0, 20.0);
        assert!(abstract_state(&s, &road, &SimParams::default()).contains(SensorDegraded));
    }

    #[test]
    fn obstacle_ranges() {
        let road = Road::new(vec![Segment::new(1000.0, 2, 36.0)
            .with_obstacle(0, 140.0)
            .with_obstacle(1, 200.0)]);
        let s = WorldState::new(100.0, 0, 20.0);
        let set = abstract_state(&s, &road, &SimParams::default());
        assert!(set.contains(ObstacleAhead));
        assert!(set.contains(LaneBlocked));
        assert!(!set.contains(AdjacentLaneFree));

        let far = WorldState::new(0.0, 0, 20.0);
        let set = abstract_state(&far, &road, &SimParams::default());
        assert!(set.contains(ObstacleAhead));
        assert!(!set.contains(LaneBlocked));
    }

    #[test]
    fn near_route_end() {
        let road = Road::new(vec![Segment::new(1000.0, 1, 36.0)]);
        let s = WorldState::new(900.0, 0, 10.0);
        assert!(abstract_state(&s, &road, &SimParams::default()).contains(NearRouteEnd));
    }

    #[test]
    fn names_round_trip() {
        for p in Proposition::ALL {
            assert_eq!(p.name().parse::<Proposition>(), Ok(p));
        }
        let set = PropositionSet::from_iter([InFog, LaneBlocked]);
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(json, r#"["InFog","LaneBlocked"]"#);
        assert_eq!(serde_json::from_str::<PropositionSet>(&json).unwrap(), set);
    }
}
