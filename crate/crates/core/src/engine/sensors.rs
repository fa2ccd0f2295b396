//! Sensor frame construction from the start-of-step world snapshot.

use crate::comms::NeighborGraph;
use crate::config::Tunables;
use crate::geom::{angle_diff, wrap_angle, Vec2};
use crate::world::{Target, TargetStatus, WorldMap};

use super::{RobotKind, RobotState};

/// A ray return: bearing relative to the robot heading, hit distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub bearing: f64,
    pub distance: f64,
}

/// A robot seen within communication range and line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborObs {
    pub id: u16,
    pub kind: RobotKind,
    pub range: f64,
    /// Bearing relative to the observer's heading.
    pub bearing: f64,
}

/// Radiation sensed within the target's disc. Workers only get the
/// distance; guides carry a map and resolve the source location too.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationObs {
    pub target_id: u32,
    pub distance: f64,
    pub position: Option<Vec2>,
}

/// Everything a robot perceives in one control step.
#[derive(Debug, Clone)]
pub struct SensorFrame {
    /// 8 short-range rays, full circle, hits within 0.25 m.
    pub proximity: Vec<RayHit>,
    /// 5 forward-fan ultrasound rays, hits in [0.25, 2] m.
    pub ultrasound: Vec<RayHit>,
    /// Guide lidar fan `(absolute angle, hit distance within range)`.
    pub lidar: Vec<(f64, Option<f64>)>,
    pub radiation: Option<RadiationObs>,
    pub neighbors: Vec<NeighborObs>,
    /// Home beacon strength `1/(1+d²)`; the workers' homing gradient.
    pub home_beacon: f64,
}

impl SensorFrame {
    /// Closest hit within `half_angle` of straight ahead, over proximity
    /// and ultrasound returns.
    pub fn min_ahead(&self, half_angle: f64) -> Option<f64> {
        self.proximity
            .iter()
            .chain(self.ultrasound.iter())
            .filter(|h| h.bearing.abs() <= half_angle)
            .map(|h| h.distance)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Closest hit within a bearing window centered on `center`.
    pub fn min_toward(&self, center: f64, half_angle: f64) -> Option<f64> {
        self.proximity
            .iter()
            .chain(self.ultrasound.iter())
            .filter(|h| angle_diff(h.bearing, center).abs() <= half_angle)
            .map(|h| h.distance)
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn neighbor(&self, id: u16) -> Option<&NeighborObs> {
        self.neighbors.iter().find(|n| n.id == id)
    }
}

/// Immutable per-robot view captured before anyone moves.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot {
    pub position: Vec2,
    pub heading: f64,
    pub kind: RobotKind,
}

pub fn snapshot(robots: &[RobotState]) -> Vec<Snapshot> {
    robots
        .iter()
        .map(|r| Snapshot {
            position: r.pose.position,
            heading: r.pose.heading,
            kind: r.kind,
        })
        .collect()
}

/// Range-and-LOS neighbor graph over the snapshot, adjacency sorted by id.
pub fn build_neighbor_graph(map: &WorldMap, snap: &[Snapshot], range: f64) -> NeighborGraph {
    let mut graph = NeighborGraph::new(snap.len());
    let r2 = range * range;
    for i in 0..snap.len() {
        for j in (i + 1)..snap.len() {
            let d = snap[j].position - snap[i].position;
            if d.x * d.x + d.y * d.y > r2 {
                continue;
            }
            if map.line_of_sight(snap[i].position, snap[j].position) {
                graph.link(i as u16, j as u16);
            }
        }
    }
    graph
}

/// Nearest not-yet-cleaned target within sensing range, honoring line of
/// sight when configured.
pub fn radiation_check(
    map: &WorldMap,
    position: Vec2,
    targets: &[Target],
    range: f64,
    require_los: bool,
) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for t in targets {
        if t.status == TargetStatus::CleanupDone {
            continue;
        }
        let d = position.distance(t.position);
        if d > range.min(t.sense_radius) {
            continue;
        }
        if require_los && !map.line_of_sight(position, t.position) {
            continue;
        }
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((t.id, d));
        }
    }
    best
}

pub fn build_frame(
    map: &WorldMap,
    snap: &[Snapshot],
    graph: &NeighborGraph,
    idx: usize,
    targets: &[Target],
    home_center: Vec2,
    tun: &Tunables,
) -> SensorFrame {
    let me = snap[idx];
    let pos = me.position;

    let mut proximity = Vec::new();
    for k in 0..8 {
        let bearing = k as f64 * std::f64::consts::TAU / 8.0;
        let abs = wrap_angle(me.heading + bearing);
        if let Some(d) = map.raycast(pos, abs, tun.proximity_range) {
            proximity.push(RayHit {
                bearing: angle_diff(bearing, 0.0),
                distance: d,
            });
        }
    }

    let mut ultrasound = Vec::new();
    for k in 0..5 {
        // Forward fan: -90, -45, 0, 45, 90 degrees.
        let bearing = (k as f64 - 2.0) * std::f64::consts::FRAC_PI_4;
        let abs = wrap_angle(me.heading + bearing);
        if let Some(d) = map.raycast(pos, abs, tun.ultrasound_max) {
            if d >= tun.ultrasound_min {
                ultrasound.push(RayHit {
                    bearing,
                    distance: d,
                });
            }
        }
    }

    let mut lidar = Vec::new();
    if me.kind == RobotKind::Guide {
        lidar.reserve(tun.lidar_rays as usize);
        for k in 0..tun.lidar_rays {
            let abs =
                wrap_angle(me.heading + k as f64 * std::f64::consts::TAU / tun.lidar_rays as f64);
            lidar.push((abs, map.raycast(pos, abs, tun.lidar_range)));
        }
    }

    let radiation = radiation_check(map, pos, targets, tun.radiation_range, tun.radiation_los)
        .map(|(target_id, distance)| RadiationObs {
            target_id,
            distance,
            position: if me.kind == RobotKind::Guide {
                Some(targets[target_id as usize].position)
            } else {
                None
            },
        });

    let mut neighbors = Vec::new();
    for &other in graph.neighbors(idx as u16) {
        let o = snap[other as usize];
        let rel = o.position - pos;
        neighbors.push(NeighborObs {
            id: other,
            kind: o.kind,
            range: rel.length(),
            bearing: angle_diff(rel.angle(), me.heading),
        });
    }
    neighbors.sort_by_key(|n| n.id);

    let home_d = pos.distance(home_center);
    SensorFrame {
        proximity,
        ultrasound,
        lidar,
        radiation,
        neighbors,
        home_beacon: 1.0 / (1.0 + home_d * home_d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cell;

    fn worker_at(x: f64, y: f64, heading: f64) -> Snapshot {
        Snapshot {
            position: Vec2::new(x, y),
            heading,
            kind: RobotKind::Worker,
        }
    }

    #[test]
    fn radiation_gate_and_los() {
        let mut map = WorldMap::empty(120, 0.25); // 30 m arena
        let targets = vec![Target::new(0, Vec2::new(20.0, 15.0), 10)];
        // 6 m away: out of the 5 m disc.
        assert_eq!(
            radiation_check(&map, Vec2::new(14.0, 15.0), &targets, 5.0, true),
            None
        );
        // 4 m away with clear line of sight.
        let hit = radiation_check(&map, Vec2::new(16.0, 15.0), &targets, 5.0, true).unwrap();
        assert_eq!(hit.0, 0);
        assert!((hit.1 - 4.0).abs() < 1e-9);
        // Wall in between blocks it.
        for cy in 0..120 {
            map.set_cell(72, cy, Cell::Obstacle); // x in [18.0, 18.25)
        }
        assert_eq!(
            radiation_check(&map, Vec2::new(16.0, 15.0), &targets, 5.0, true),
            None
        );
        // With the LOS requirement off it is sensed again.
        assert!(radiation_check(&map, Vec2::new(16.0, 15.0), &targets, 5.0, false).is_some());
    }

    #[test]
    fn cleaned_targets_are_silent() {
        let map = WorldMap::empty(120, 0.25);
        let mut targets = vec![Target::new(0, Vec2::new(20.0, 15.0), 10)];
        targets[0].status = TargetStatus::CleanupDone;
        assert_eq!(
            radiation_check(&map, Vec2::new(18.0, 15.0), &targets, 5.0, true),
            None
        );
    }

    #[test]
    fn neighbor_graph_respects_range_and_los() {
        let mut map = WorldMap::empty(120, 0.25);
        let snap = vec![
            worker_at(5.0, 5.0, 0.0),
            worker_at(12.0, 5.0, 0.0),  // 7 m from first
            worker_at(28.0, 5.0, 0.0),  // out of range of both
        ];
        let g = build_neighbor_graph(&map, &snap, 10.0);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert!(g.neighbors(2).is_empty());

        // Wall between 0 and 1 kills the link.
        for cy in 0..120 {
            map.set_cell(36, cy, Cell::Obstacle); // x = 9 m
        }
        let g = build_neighbor_graph(&map, &snap, 10.0);
        assert!(g.neighbors(0).is_empty());
    }

    #[test]
    fn frame_reports_relative_bearings() {
        let map = WorldMap::empty(120, 0.25);
        let snap = vec![
            worker_at(15.0, 15.0, std::f64::consts::FRAC_PI_2),
            worker_at(15.0, 20.0, 0.0),
        ];
        let g = build_neighbor_graph(&map, &snap, 10.0);
        let frame = build_frame(
            &map,
            &snap,
            &g,
            0,
            &[],
            Vec2::new(15.0, 15.0),
            &Tunables::default(),
        );
        // Neighbor is straight ahead of the +y-facing observer.
        assert_eq!(frame.neighbors.len(), 1);
        assert!((frame.neighbors[0].range - 5.0).abs() < 1e-9);
        assert!(frame.neighbors[0].bearing.abs() < 1e-9);
        assert!((frame.home_beacon - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wall_ahead_shows_in_ultrasound() {
        let mut map = WorldMap::empty(120, 0.25);
        for cy in 0..120 {
            map.set_cell(64, cy, Cell::Obstacle); // x = 16 m
        }
        let snap = vec![worker_at(15.0, 15.0, 0.0)];
        let g = NeighborGraph::new(1);
        let frame = build_frame(
            &map,
            &snap,
            &g,
            0,
            &[],
            Vec2::new(15.0, 15.0),
            &Tunables::default(),
        );
        let ahead = frame.min_ahead(0.1).unwrap();
        assert!((ahead - 1.0).abs() <= 0.25 + 1e-9);
        // Proximity rays are too short to see a 1 m wall.
        assert!(frame.proximity.is_empty());
    }
}
