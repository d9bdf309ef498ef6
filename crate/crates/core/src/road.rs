//! Segmented routes with tagged hazards and static obstacles.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed vocabulary of situation tags a segment may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tag {
    Tunnel,
    Fog,
    Construction,
    Ice,
    SensorDeadZone,
}

impl Tag {
    pub const ALL: [Tag; 5] = [
        Tag::Tunnel,
        Tag::Fog,
        Tag::Construction,
        Tag::Ice,
        Tag::SensorDeadZone,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Tunnel => "TUNNEL",
            Tag::Fog => "FOG",
            Tag::Construction => "CONSTRUCTION",
            Tag::Ice => "ICE",
            Tag::SensorDeadZone => "SENSOR_DEAD_ZONE",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

/// A static obstacle, `at` meters into its segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub lane: u32,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    pub lanes: u32,
    pub speed_limit: f64,
    pub tags: BTreeSet<Tag>,
    pub obstacles: Vec<Obstacle>,
}

impl Segment {
    pub fn new(length: f64, lanes: u32, speed_limit: f64) -> Self {
        Self {
            length,
            lanes,
            speed_limit,
            tags: BTreeSet::new(),
            obstacles: Vec::new(),
        }
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tags.insert(tag);
        self
    }

    pub fn with_obstacle(mut self, lane: u32, at: f64) -> Self {
        self.obstacles.push(Obstacle { lane, at });
        self
    }

    pub fn has(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }
}

/// An obstacle resolved to an absolute route position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedObstacle {
    pub lane: u32,
    pub position: f64,
}

/// Ordered list of segments. Segment start offsets and absolute obstacle
/// positions are precomputed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    segments: Vec<Segment>,
    starts: Vec<f64>,
    total_length: f64,
    obstacles: Vec<PlacedObstacle>,
}

impl Road {
    /// Builds a road; callers are expected to have validated the segments
    /// (see `scenario::parse_scenario`).
    pub fn new(segments: Vec<Segment>) -> Self {
        assert!(!segments.is_empty(), "a road needs at least one segment");
        let mut starts = Vec::with_capacity(segments.len());
        let mut obstacles = Vec::new();
        let mut acc = 0.0;
        for seg in &segments {
            starts.push(acc);
            for o in &seg.obstacles {
                obstacles.push(PlacedObstacle {
                    lane: o.lane,
                    position: acc + o.at,
                });
            }
            acc += seg.length;
        }
        obstacles.sort_by(|a, b| a.position.total_cmp(&b.position).then(a.lane.cmp(&b.lane)));
        Self {
            segments,
            starts,
            total_length: acc,
            obstacles,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn obstacles(&self) -> &[PlacedObstacle] {
        &self.obstacles
    }

    /// Start offset of segment `index`.
    pub fn segment_start(&self, index: usize) -> f64 {
        self.starts[index]
    }

    /// Index of the segment containing `position`. Positions at or past the
    /// route end map to the last segment.
    pub fn segment_index(&self, position: f64) -> usize {
        // partition_point: first start strictly greater than position
        let idx = self.starts.partition_point(|s| *s <= position);
        idx.saturating_sub(1)
    }

    pub fn segment_at(&self, position: f64) -> &Segment {
        &self.segments[self.segment_index(position)]
    }

    pub fn lanes_at(&self, position: f64) -> u32 {
        self.segment_at(position).lanes
    }

    pub fn at_end(&self, position: f64) -> bool {
        position >= self.total_length
    }

    /// Nearest obstacle in `lane` with position in `[from, from + range]`.
    pub fn obstacle_within(&self, lane: u32, from: f64, range: f64) -> Option<f64> {
        let lo = self.obstacles.partition_point(|o| o.position < from);
        self.obstacles[lo..]
            .iter()
            .take_while(|o| o.position <= from + range)
            .find(|o| o.lane == lane)
            .map(|o| o.position)
    }

    /// True when an obstacle in `lane` lies on the closed interval swept by
    /// moving from `from` to `to`.
    pub fn sweeps_obstacle(&self, lane: u32, from: f64, to: f64) -> bool {
        self.obstacle_within(lane, from, to - from).is_some()
    }

    /// Start of the first segment at or after `from` carrying `tag`, or the
    /// current segment's start when it carries the tag itself.
    pub fn next_tagged(&self, tag: Tag, from: f64) -> Option<f64> {
        let first = self.segment_index(from);
        (first..self.segments.len())
            .find(|&i| self.segments[i].has(tag))
            .map(|i| self.starts[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road() -> Road {
        Road::new(vec![
            Segment::new(100.0, 2, 30.0),
            Segment::new(200.0, 3, 30.0)
                .with_tag(Tag::Fog)
                .with_obstacle(1, 50.0),
            Segment::new(50.0, 1, 20.0),
        ])
    }

    #[test]
    fn segment_lookup() {
        let r = road();
        assert_eq!(r.total_length(), 350.0);
        assert_eq!(r.segment_index(0.0), 0);
        assert_eq!(r.segment_index(99.9), 0);
        assert_eq!(r.segment_index(100.0), 1);
        assert_eq!(r.segment_index(349.0), 2);
        assert_eq!(r.segment_index(1e6), 2);
        assert_eq!(r.lanes_at(120.0), 3);
    }

    #[test]
    fn obstacle_queries() {
        let r = road();
        assert_eq!(r.obstacle_within(1, 0.0, 150.0), Some(150.0));
        assert_eq!(r.obstacle_within(1, 0.0, 149.0), None);
        assert_eq!(r.obstacle_within(0, 0.0, 400.0), None);
        assert_eq!(r.obstacle_within(1, 151.0, 100.0), None);
        assert!(r.sweeps_obstacle(1, 140.0, 150.0));
        assert!(!r.sweeps_obstacle(1, 150.5, 170.0));
    }

    #[test]
    fn tag_lookup() {
        let r = road();
        assert_eq!(r.next_tagged(Tag::Fog, 0.0), Some(100.0));
        assert_eq!(r.next_tagged(Tag::Fog, 150.0), Some(100.0));
        assert_eq!(r.next_tagged(Tag::Fog, 320.0), None);
        assert_eq!("SENSOR_DEAD_ZONE".parse::<Tag>(), Ok(Tag::SensorDeadZone));
        assert!("LAVA".parse::<Tag>().is_err());
    }
}
