//! Mission performance metrics computed from event and trajectory logs.

use serde::{Deserialize, Serialize};

use crate::config::{ArenaType, Strategy};
use crate::events::EventLog;
use crate::geom::Vec2;
use crate::world::{Cell, WorldMap};

/// Mission time ceiling used for normalization: 3.33 hours.
pub const NORMALIZATION_TIME_S: f64 = 12_000.0;

/// Workers cost one unit, guides three.
pub fn swarm_cost(n_workers: u32, n_guides: u32) -> u32 {
    n_workers + 3 * n_guides
}

/// Mission time as a fraction of the experimental ceiling.
pub fn normalized_time(t: f64) -> f64 {
    t / NORMALIZATION_TIME_S
}

/// A mission succeeds when every target completed cleanup inside the limit.
pub fn success(events: &EventLog, n_targets: u32, t_limit: f64) -> bool {
    let done = events.cleanup_times();
    done.len() as u32 == n_targets && done.values().all(|t| *t <= t_limit)
}

/// Mean of the available first-detection times, absent when nothing was
/// detected. Undetected targets are excluded, not zero-filled.
pub fn avg_target_find_time(events: &EventLog) -> Option<f64> {
    let found = events.first_detections();
    if found.is_empty() {
        return None;
    }
    Some(found.values().sum::<f64>() / found.len() as f64)
}

/// Visitation grid over the free space of an arena.
///
/// A coarse cell counts as visited once any robot center enters it; a coarse
/// cell counts as free when it contains at least one free simulation cell,
/// since that is exactly the set of cells a robot center can reach.
#[derive(Debug, Clone)]
pub struct VisitationGrid {
    cell: f64,
    side: usize,
    free: Vec<bool>,
    visited: Vec<bool>,
    free_count: usize,
    visited_count: usize,
    /// Newly visited free cells per time window.
    window_s: f64,
    window_counts: Vec<usize>,
}

impl VisitationGrid {
    pub fn new(map: &WorldMap, cell: f64, window_s: f64) -> Self {
        let side = (map.arena_side() / cell).ceil() as usize;
        let mut free = vec![false; side * side];
        for cy in 0..map.height() {
            for cx in 0..map.width() {
                if map.cell(cx, cy) == Cell::Free {
                    let p = map.cell_center(cx, cy);
                    let gx = ((p.x / cell) as usize).min(side - 1);
                    let gy = ((p.y / cell) as usize).min(side - 1);
                    free[gy * side + gx] = true;
                }
            }
        }
        let free_count = free.iter().filter(|f| **f).count();
        Self {
            cell,
            side,
            free,
            visited: vec![false; side * side],
            free_count,
            visited_count: 0,
            window_s,
            window_counts: Vec::new(),
        }
    }

    pub fn visit(&mut self, p: Vec2, t: f64) {
        if p.x < 0.0 || p.y < 0.0 {
            return;
        }
        let gx = (p.x / self.cell) as usize;
        let gy = (p.y / self.cell) as usize;
        if gx >= self.side || gy >= self.side {
            return;
        }
        let idx = gy * self.side + gx;
        if self.free[idx] && !self.visited[idx] {
            self.visited[idx] = true;
            self.visited_count += 1;
            let w = (t / self.window_s) as usize;
            if self.window_counts.len() <= w {
                self.window_counts.resize(w + 1, 0);
            }
            self.window_counts[w] += 1;
        }
    }

    pub fn explored_fraction(&self) -> f64 {
        if self.free_count == 0 {
            return 0.0;
        }
        self.visited_count as f64 / self.free_count as f64
    }

    /// Newly covered fraction per window; sums to the explored fraction.
    pub fn incremental_coverage(&self) -> Vec<f64> {
        self.window_counts
            .iter()
            .map(|c| *c as f64 / self.free_count.max(1) as f64)
            .collect()
    }
}

/// Trajectory sample, matching the optional trajectory log rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajPoint {
    pub t: f64,
    pub robot: u16,
    pub position: Vec2,
}

/// Ratio of visited to free cells after replaying a trajectory.
pub fn explored_fraction(trajectories: &[TrajPoint], map: &WorldMap, cell: f64) -> f64 {
    let mut grid = VisitationGrid::new(map, cell, f64::INFINITY);
    for p in trajectories {
        grid.visit(p.position, 0.0);
    }
    grid.explored_fraction()
}

/// Newly visited fraction per time window from a trajectory replay.
pub fn incremental_coverage(
    trajectories: &[TrajPoint],
    map: &WorldMap,
    cell: f64,
    window_s: f64,
) -> Vec<f64> {
    let mut grid = VisitationGrid::new(map, cell, window_s);
    for p in trajectories {
        grid.visit(p.position, p.t);
    }
    grid.incremental_coverage()
}

/// Streaming accumulator for the neighbor metrics.
///
/// Per step and per robot, the distances to every other robot in range join
/// one flat list and the in-range count joins another; the averages are over
/// those flat lists, not per-robot means of means.
#[derive(Debug, Clone, Default)]
pub struct NeighborAccumulator {
    distance_sum: f64,
    distance_count: u64,
    count_sum: u64,
    count_samples: u64,
}

impl NeighborAccumulator {
    pub fn record_step(&mut self, positions: &[Vec2], range: f64) {
        for (i, a) in positions.iter().enumerate() {
            let mut in_range = 0u64;
            for (j, b) in positions.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = a.distance(*b);
                if d <= range {
                    in_range += 1;
                    self.distance_sum += d;
                    self.distance_count += 1;
                }
            }
            self.count_sum += in_range;
            self.count_samples += 1;
        }
    }

    /// `(average distance, average count)`; distance is absent when no pair
    /// was ever in range.
    pub fn finish(&self) -> (Option<f64>, f64) {
        let avg_dist = if self.distance_count > 0 {
            Some(self.distance_sum / self.distance_count as f64)
        } else {
            None
        };
        let avg_count = if self.count_samples > 0 {
            self.count_sum as f64 / self.count_samples as f64
        } else {
            0.0
        };
        (avg_dist, avg_count)
    }
}

/// Neighbor metrics over per-step position snapshots.
pub fn neighbor_stats(steps: &[Vec<Vec2>], range: f64) -> (Option<f64>, f64) {
    let mut acc = NeighborAccumulator::default();
    for positions in steps {
        acc.record_step(positions, range);
    }
    acc.finish()
}

/// Everything recorded about one episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: String,
    pub seed: u64,
    pub strategy: Strategy,
    pub arena_type: ArenaType,
    pub arena_side: f64,
    pub n_workers: u32,
    pub n_guides: u32,
    pub n_targets: u32,
    pub success: bool,
    /// Completion time; absent for failures.
    pub t_s: Option<f64>,
    pub t_norm: Option<f64>,
    pub explored_frac: f64,
    pub avg_nb_dist: Option<f64>,
    pub avg_nb_count: f64,
    pub cost: u32,
    /// Newly covered fraction per coverage window.
    pub coverage_series: Vec<f64>,
    /// First detection time per target id.
    pub detection_times: Vec<(u32, f64)>,
    /// Cleanup completion time per target id.
    pub cleanup_times: Vec<(u32, f64)>,
}

impl RunRecord {
    pub fn csv_header() -> &'static str {
        "config_id,seed,strategy,arena_type,arena_side,n_workers,n_guides,n_targets,\
         success,t_s,t_norm,explored_frac,avg_nb_dist,avg_nb_count,cost"
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>, digits: usize| match v {
            Some(x) => format!("{x:.digits$}"),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{:.6},{}",
            self.config_id,
            self.seed,
            self.strategy,
            self.arena_type,
            self.arena_side,
            self.n_workers,
            self.n_guides,
            self.n_targets,
            u8::from(self.success),
            opt(self.t_s, 1),
            opt(self.t_norm, 6),
            self.explored_frac,
            opt(self.avg_nb_dist, 6),
            self.avg_nb_count,
            self.cost,
        )
    }
}

/// Per-target cleanup bookkeeping during an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CleanupStatus {
    Pending,
    Done,
}

/// A target is done once `quorum` workers stand inside its sensing disc at
/// the same time.
pub fn cleanup_check(
    target: Vec2,
    sense_radius: f64,
    quorum: u32,
    worker_positions: &[Vec2],
) -> CleanupStatus {
    let inside = worker_positions
        .iter()
        .filter(|p| p.distance(target) <= sense_radius)
        .count();
    if inside as u32 >= quorum {
        CleanupStatus::Done
    } else {
        CleanupStatus::Pending
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventKind;
    use crate::world::WorldMap;

    #[test]
    fn cost_matches_uniform_cost_swarms() {
        assert_eq!(swarm_cost(16, 0), 16);
        assert_eq!(swarm_cost(10, 2), 16);
        assert_eq!(swarm_cost(10, 18), 64);
    }

    #[test]
    fn normalized_time_anchors() {
        assert!((normalized_time(12_000.0) - 1.0).abs() < 1e-12);
        assert!((normalized_time(533.33) - 0.0444).abs() < 1e-4);
        assert!((normalized_time(6_000.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn success_requires_all_targets() {
        let mut log = EventLog::default();
        log.push(10.0, 0, EventKind::CleanupDone, "target=0");
        assert!(success(&log, 1, 100.0));
        assert!(!success(&log, 2, 100.0));
        assert!(!success(&log, 1, 5.0));
        log.push(20.0, 0, EventKind::CleanupDone, "target=1");
        assert!(success(&log, 2, 100.0));
    }

    #[test]
    fn find_time_averages_available_targets() {
        let mut log = EventLog::default();
        assert_eq!(avg_target_find_time(&log), None);
        log.push(100.0, 0, EventKind::TargetDetected, "target=0");
        assert_eq!(avg_target_find_time(&log), Some(100.0));
        log.push(300.0, 1, EventKind::TargetDetected, "target=1");
        log.push(999.0, 2, EventKind::TargetDetected, "target=1"); // repeat, ignored
        assert_eq!(avg_target_find_time(&log), Some(200.0));
    }

    #[test]
    fn lawnmower_sweep_covers_everything() {
        let map = WorldMap::empty(40, 0.25); // 10 m arena
        let mut traj = Vec::new();
        let mut t = 0.0;
        for row in 0..10 {
            for col in 0..10 {
                traj.push(TrajPoint {
                    t,
                    robot: 0,
                    position: Vec2::new(col as f64 + 0.5, row as f64 + 0.5),
                });
                t += 1.0;
            }
        }
        assert!((explored_fraction(&traj, &map, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn obstacles_are_excluded_from_both_sides() {
        let mut map = WorldMap::empty(8, 1.0); // 8 m arena, 1 m cells
        for cy in 0..8 {
            for cx in 4..8 {
                map.set_cell(cx, cy, crate::world::Cell::Obstacle);
            }
        }
        let traj = vec![
            TrajPoint {
                t: 0.0,
                robot: 0,
                position: Vec2::new(0.5, 0.5),
            },
            // Inside the obstacle half: never counted.
            TrajPoint {
                t: 1.0,
                robot: 0,
                position: Vec2::new(6.5, 6.5),
            },
        ];
        let frac = explored_fraction(&traj, &map, 1.0);
        assert!((frac - 1.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn incremental_series_sums_to_total() {
        let map = WorldMap::empty(40, 0.25);
        let mut traj = Vec::new();
        // Two-phase sweep: three cells early, two cells late.
        for (i, x) in [0.5, 1.5, 2.5].iter().enumerate() {
            traj.push(TrajPoint {
                t: i as f64,
                robot: 0,
                position: Vec2::new(*x, 0.5),
            });
        }
        for (i, x) in [3.5, 4.5].iter().enumerate() {
            traj.push(TrajPoint {
                t: 70.0 + i as f64,
                robot: 0,
                position: Vec2::new(*x, 0.5),
            });
        }
        let series = incremental_coverage(&traj, &map, 1.0, 60.0);
        assert_eq!(series.len(), 2);
        assert!((series[0] - 3.0 / 100.0).abs() < 1e-12);
        assert!((series[1] - 2.0 / 100.0).abs() < 1e-12);
        let total = explored_fraction(&traj, &map, 1.0);
        assert!((series.iter().sum::<f64>() - total).abs() < 1e-12);
    }

    #[test]
    fn static_swarm_coverage_is_first_window_only() {
        let map = WorldMap::empty(40, 0.25);
        let mut traj = Vec::new();
        for k in 0..200 {
            traj.push(TrajPoint {
                t: k as f64,
                robot: 0,
                position: Vec2::new(5.0, 5.0),
            });
        }
        let series = incremental_coverage(&traj, &map, 1.0, 60.0);
        assert!(series[0] > 0.0);
        assert!(series.iter().skip(1).all(|w| *w == 0.0));
    }

    #[test]
    fn two_static_robots() {
        let steps = vec![vec![Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)]];
        let (dist, count) = neighbor_stats(&steps, 10.0);
        assert_eq!(dist, Some(4.0));
        assert_eq!(count, 1.0);
    }

    #[test]
    fn collinear_trio_uses_flat_lists() {
        // Robots at 0, 4, 8 m: ordered pairs (0,4) (4,0) (4,8) (8,4) (0,8) (8,0),
        // average distance (4+4+4+4+8+8)/6, average count 6/3.
        let steps = vec![vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(8.0, 0.0),
        ]];
        let (dist, count) = neighbor_stats(&steps, 10.0);
        assert!((dist.unwrap() - 32.0 / 6.0).abs() < 1e-12);
        assert!((count - 2.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_pairs_excluded() {
        let steps = vec![vec![Vec2::new(0.0, 0.0), Vec2::new(11.0, 0.0)]];
        let (dist, count) = neighbor_stats(&steps, 10.0);
        assert_eq!(dist, None);
        assert_eq!(count, 0.0);
    }

    #[test]
    fn quorum_counting() {
        let target = Vec2::new(0.0, 0.0);
        let mut workers: Vec<Vec2> = (0..9).map(|i| Vec2::new(i as f64 * 0.3, 0.0)).collect();
        assert_eq!(
            cleanup_check(target, 5.0, 10, &workers),
            CleanupStatus::Pending
        );
        workers.push(Vec2::new(0.0, 1.0));
        assert_eq!(cleanup_check(target, 5.0, 10, &workers), CleanupStatus::Done);
        // Configurable quorum of four.
        assert_eq!(
            cleanup_check(target, 5.0, 4, &workers[..4]),
            CleanupStatus::Done
        );
    }

    #[test]
    fn csv_row_shape() {
        let rec = RunRecord {
            config_id: "c0".into(),
            seed: 7,
            strategy: Strategy::Egalitarian,
            arena_type: ArenaType::Maze,
            arena_side: 30.0,
            n_workers: 16,
            n_guides: 0,
            n_targets: 1,
            success: true,
            t_s: Some(533.3),
            t_norm: Some(533.3 / 12_000.0),
            explored_frac: 0.41,
            avg_nb_dist: Some(5.2),
            avg_nb_count: 2.5,
            cost: 16,
            coverage_series: vec![],
            detection_times: vec![],
            cleanup_times: vec![],
        };
        let row = rec.to_csv_row();
        assert_eq!(row.split(',').count(), RunRecord::csv_header().split(',').count());
        assert!(row.starts_with("c0,7,egalitarian,maze,30,16,0,1,1,533.3,"));
    }
}
