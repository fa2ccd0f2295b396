//! Frontier exploration and homing paths over a guide's local map.
//!
//! Paths run 8-connected over known-free cells, keep one inflated cell away
//! from known obstacles, and never cross Unknown space. Frontier clusters
//! are scored by unexplored gain, discounted by distance, and biased toward
//! the robot's preferred exploration direction; the deterministic tie-break
//! is the lowest cell index.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geom::{angle_diff, Vec2};
use crate::world::local::{LocalCell, LocalMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanError {
    /// No frontier cell remains; exploration is complete.
    ExplorationExhausted,
    /// The goal is not reachable through known free space.
    NoPath,
}

/// Straight/diagonal move costs in tenths of a cell.
const STRAIGHT: u32 = 10;
const DIAGONAL: u32 = 14;
/// Distance discount scale for frontier scoring, meters.
const DISTANCE_SCALE: f64 = 20.0;
/// Gain neighborhood radius around a cluster centroid, meters.
const GAIN_RADIUS: f64 = 8.0;
/// Directional bias weight.
const DIRECTION_WEIGHT: f64 = 0.5;
/// At most this many clusters are scored, largest first.
const MAX_CLUSTERS: usize = 48;
/// Keep every k-th waypoint of the cell path.
const WAYPOINT_STRIDE: usize = 2;

/// A cell is traversable when it is known free and not flush against a
/// known obstacle (one-cell inflation covers the robot body).
fn passable(map: &LocalMap, cx: usize, cy: usize) -> bool {
    if map.cell(cx, cy) != LocalCell::Free {
        return false;
    }
    let side = map.side() as isize;
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (cx as isize + dx, cy as isize + dy);
            if nx < 0 || ny < 0 || nx >= side || ny >= side {
                continue;
            }
            if map.cell(nx as usize, ny as usize) == LocalCell::Obstacle {
                return false;
            }
        }
    }
    true
}

fn octile(a: (usize, usize), b: (usize, usize)) -> u32 {
    let dx = a.0.abs_diff(b.0) as u32;
    let dy = a.1.abs_diff(b.1) as u32;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    DIAGONAL * lo + STRAIGHT * (hi - lo)
}

/// A* over the local map. Returns cell waypoints from start to goal
/// (inclusive), or `NoPath`.
pub fn astar(
    map: &LocalMap,
    start: (usize, usize),
    goal: (usize, usize),
) -> Result<Vec<(usize, usize)>, PlanError> {
    let side = map.side();
    let idx = |c: (usize, usize)| c.1 * side + c.0;
    // The start is wherever the robot stands, inflated or not; the goal
    // must be properly passable.
    if !passable(map, goal.0, goal.1) {
        return Err(PlanError::NoPath);
    }
    let mut g = vec![u32::MAX; side * side];
    let mut parent = vec![u32::MAX; side * side];
    let mut heap: BinaryHeap<Reverse<(u32, u32)>> = BinaryHeap::new();
    g[idx(start)] = 0;
    heap.push(Reverse((octile(start, goal), idx(start) as u32)));

    const MOVES: [(isize, isize, u32); 8] = [
        (1, 0, STRAIGHT),
        (-1, 0, STRAIGHT),
        (0, 1, STRAIGHT),
        (0, -1, STRAIGHT),
        (1, 1, DIAGONAL),
        (1, -1, DIAGONAL),
        (-1, 1, DIAGONAL),
        (-1, -1, DIAGONAL),
    ];

    while let Some(Reverse((f, at))) = heap.pop() {
        let at = at as usize;
        let (ax, ay) = (at % side, at / side);
        let g_at = g[at];
        if f > g_at.saturating_add(octile((ax, ay), goal)) {
            continue; // stale entry
        }
        if (ax, ay) == goal {
            let mut path = vec![(ax, ay)];
            let mut cur = at;
            while parent[cur] != u32::MAX {
                cur = parent[cur] as usize;
                path.push((cur % side, cur / side));
            }
            path.reverse();
            return Ok(path);
        }
        for (dx, dy, cost) in MOVES {
            let (nx, ny) = (ax as isize + dx, ay as isize + dy);
            if nx < 0 || ny < 0 || nx >= side as isize || ny >= side as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !passable(map, nx, ny) {
                continue;
            }
            // No corner cutting: a diagonal needs both orthogonal cells.
            if dx != 0 && dy != 0 {
                if !passable(map, nx, ay) || !passable(map, ax, ny) {
                    continue;
                }
            }
            let ni = ny * side + nx;
            let ng = g_at + cost;
            if ng < g[ni] {
                g[ni] = ng;
                parent[ni] = at as u32;
                heap.push(Reverse((ng + octile((nx, ny), goal), ni as u32)));
            }
        }
    }
    Err(PlanError::NoPath)
}

fn cells_to_waypoints(map: &LocalMap, path: &[(usize, usize)]) -> Vec<Vec2> {
    let mut out = Vec::new();
    for (i, &(cx, cy)) in path.iter().enumerate() {
        if i % WAYPOINT_STRIDE == 0 || i == path.len() - 1 {
            out.push(map.cell_center(cx, cy));
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Cluster {
    cells: Vec<(usize, usize)>,
    min_index: usize,
    centroid: Vec2,
    representative: (usize, usize),
}

/// Group frontier cells by 8-adjacency.
fn cluster_frontiers(map: &LocalMap, frontiers: &[(usize, usize)]) -> Vec<Cluster> {
    let side = map.side();
    let mut mark = vec![false; side * side];
    let frontier_set: std::collections::BTreeSet<usize> =
        frontiers.iter().map(|&(x, y)| y * side + x).collect();
    let mut clusters = Vec::new();
    for &(sx, sy) in frontiers {
        let start = sy * side + sx;
        if mark[start] {
            continue;
        }
        mark[start] = true;
        let mut cells = vec![(sx, sy)];
        let mut queue = std::collections::VecDeque::from([(sx, sy)]);
        while let Some((x, y)) = queue.pop_front() {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= side as isize || ny >= side as isize {
                        continue;
                    }
                    let ni = ny as usize * side + nx as usize;
                    if !mark[ni] && frontier_set.contains(&ni) {
                        mark[ni] = true;
                        cells.push((nx as usize, ny as usize));
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
        }
        let min_index = cells.iter().map(|&(x, y)| y * side + x).min().unwrap();
        let sum = cells.iter().fold(Vec2::ZERO, |acc, &(x, y)| {
            acc + map.cell_center(x, y)
        });
        let centroid = sum.scaled(1.0 / cells.len() as f64);
        let representative = *cells
            .iter()
            .min_by(|a, b| {
                let da = map.cell_center(a.0, a.1).distance(centroid);
                let db = map.cell_center(b.0, b.1).distance(centroid);
                da.total_cmp(&db).then(
                    (a.1 * side + a.0).cmp(&(b.1 * side + b.0)),
                )
            })
            .unwrap();
        clusters.push(Cluster {
            cells,
            min_index,
            centroid,
            representative,
        });
    }
    clusters
}

/// Unknown cells within the gain radius of a point.
fn unknown_gain(map: &LocalMap, around: Vec2) -> u32 {
    let res = map.resolution();
    let r_cells = (GAIN_RADIUS / res).ceil() as isize;
    let (cx, cy) = match map.cell_at(around) {
        Some(c) => c,
        None => return 0,
    };
    let side = map.side() as isize;
    let r2 = GAIN_RADIUS * GAIN_RADIUS;
    let mut gain = 0;
    for dy in -r_cells..=r_cells {
        for dx in -r_cells..=r_cells {
            let (nx, ny) = (cx as isize + dx, cy as isize + dy);
            if nx < 0 || ny < 0 || nx >= side || ny >= side {
                continue;
            }
            let p = map.cell_center(nx as usize, ny as usize);
            let d = p - around;
            if d.x * d.x + d.y * d.y <= r2
                && map.cell(nx as usize, ny as usize) == LocalCell::Unknown
            {
                gain += 1;
            }
        }
    }
    gain
}

/// Exhaustive frontier scoring used by both the planner and its test
/// oracle: `gain · e^(−dist/20) · (1 + 0.5·cos(bearing − preferred))`.
pub fn score_cluster(gain: u32, distance: f64, bearing: f64, preferred: f64) -> f64 {
    gain as f64
        * (-distance / DISTANCE_SCALE).exp()
        * (1.0 + DIRECTION_WEIGHT * angle_diff(bearing, preferred).cos())
}

/// Choose the best frontier cluster and plan a path to it.
pub fn frontier_plan(
    map: &LocalMap,
    pose: Vec2,
    preferred_direction: f64,
) -> Result<Vec<Vec2>, PlanError> {
    let frontiers = map.frontier_cells();
    if frontiers.is_empty() {
        return Err(PlanError::ExplorationExhausted);
    }
    let mut clusters = cluster_frontiers(map, &frontiers);
    clusters.sort_by(|a, b| b.cells.len().cmp(&a.cells.len()).then(a.min_index.cmp(&b.min_index)));
    clusters.truncate(MAX_CLUSTERS);

    let mut scored: Vec<(f64, usize)> = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let rel = c.centroid - pose;
            let score = score_cluster(
                unknown_gain(map, c.centroid),
                rel.length(),
                rel.angle(),
                preferred_direction,
            );
            (score, i)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(clusters[a.1].min_index.cmp(&clusters[b.1].min_index))
    });

    let start = match map.cell_at(pose) {
        Some(c) => c,
        None => return Err(PlanError::NoPath),
    };
    // Walk the whole ranking: exploration is only exhausted when no
    // cluster is reachable at all.
    for &(_, ci) in scored.iter() {
        let cluster = &clusters[ci];
        if let Ok(path) = astar(map, start, cluster.representative) {
            return Ok(cells_to_waypoints(map, &path));
        }
        // Try the frontier cell nearest the robot as a fallback goal.
        if let Some(&alt) = cluster
            .cells
            .iter()
            .min_by(|a, b| {
                let da = map.cell_center(a.0, a.1).distance(pose);
                let db = map.cell_center(b.0, b.1).distance(pose);
                da.total_cmp(&db)
            })
        {
            if alt != cluster.representative {
                if let Ok(path) = astar(map, start, alt) {
                    return Ok(cells_to_waypoints(map, &path));
                }
            }
        }
    }
    Err(PlanError::ExplorationExhausted)
}

/// Shortest known-free path to a goal point (home base or a target).
pub fn homing_plan(map: &LocalMap, pose: Vec2, goal: Vec2) -> Result<Vec<Vec2>, PlanError> {
    let start = map.cell_at(pose).ok_or(PlanError::NoPath)?;
    let goal_cell = map.cell_at(goal).ok_or(PlanError::NoPath)?;
    if let Ok(path) = astar(map, start, goal_cell) {
        return Ok(cells_to_waypoints(map, &path));
    }
    // The exact goal cell may be inflated away; accept a cell within two
    // rings. A goal deeper inside unknown space stays unreachable.
    let side = map.side();
    let mut best: Option<(usize, usize)> = None;
    let mut best_d = f64::MAX;
    for ring in 1..=2isize {
        for dy in -ring..=ring {
            for dx in -ring..=ring {
                if dx.abs() != ring && dy.abs() != ring {
                    continue;
                }
                let (nx, ny) = (goal_cell.0 as isize + dx, goal_cell.1 as isize + dy);
                if nx < 0 || ny < 0 || nx >= side as isize || ny >= side as isize {
                    continue;
                }
                let c = (nx as usize, ny as usize);
                if passable(map, c.0, c.1) {
                    let d = map.cell_center(c.0, c.1).distance(goal);
                    if d < best_d {
                        best_d = d;
                        best = Some(c);
                    }
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    match best {
        Some(c) => astar(map, start, c).map(|p| cells_to_waypoints(map, &p)),
        None => Err(PlanError::NoPath),
    }
}

/// Tracks which parts of the arena a guide has swept with its radiation
/// sensor. Mapping an area through a distant lidar return is not the same
/// as having stood close enough to sense a target in it, so once map
/// frontiers run out the guide sweeps the cells its sensor never covered.
#[derive(Debug, Clone)]
pub struct CoverageTracker {
    cell: f64,
    side: usize,
    covered: Vec<bool>,
    radius: f64,
}

impl CoverageTracker {
    pub fn new(arena_side: f64, sense_radius: f64) -> Self {
        let cell = 1.0;
        let side = (arena_side / cell).ceil() as usize;
        Self {
            cell,
            side,
            covered: vec![false; side * side],
            radius: sense_radius,
        }
    }

    /// Mark everything within the sensing radius of a pose as covered.
    pub fn mark(&mut self, pos: Vec2) {
        let r_cells = (self.radius / self.cell).ceil() as isize;
        let cx = (pos.x / self.cell) as isize;
        let cy = (pos.y / self.cell) as isize;
        let r2 = self.radius * self.radius;
        for dy in -r_cells..=r_cells {
            for dx in -r_cells..=r_cells {
                let (nx, ny) = (cx + dx, cy + dy);
                if nx < 0 || ny < 0 || nx >= self.side as isize || ny >= self.side as isize {
                    continue;
                }
                let center = Vec2::new(
                    (nx as f64 + 0.5) * self.cell,
                    (ny as f64 + 0.5) * self.cell,
                );
                let d = center - pos;
                if d.x * d.x + d.y * d.y <= r2 {
                    self.covered[ny as usize * self.side + nx as usize] = true;
                }
            }
        }
    }

    /// Nearest known-free, reachable-looking cell the sensor never swept.
    pub fn nearest_uncovered(&self, map: &LocalMap, pose: Vec2) -> Option<Vec2> {
        let mut best: Option<(f64, Vec2)> = None;
        for cy in 0..self.side {
            for cx in 0..self.side {
                if self.covered[cy * self.side + cx] {
                    continue;
                }
                let center = Vec2::new(
                    (cx as f64 + 0.5) * self.cell,
                    (cy as f64 + 0.5) * self.cell,
                );
                // The coarse cell must contain a passable fine cell.
                let Some((fx, fy)) = map.cell_at(center) else {
                    continue;
                };
                if !passable(map, fx, fy) {
                    continue;
                }
                let d = center.distance(pose);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, center));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    pub fn covered_fraction(&self) -> f64 {
        self.covered.iter().filter(|c| **c).count() as f64 / self.covered.len() as f64
    }
}

/// Straight segment over known-free cells only (for waypoint shortcuts).
pub fn segment_is_free(map: &LocalMap, a: Vec2, b: Vec2) -> bool {
    let d = b - a;
    let len = d.length();
    if len < 1e-9 {
        return true;
    }
    let steps = (len / (map.resolution() * 0.5)).ceil() as usize;
    for i in 0..=steps {
        let p = a + d.scaled(i as f64 / steps as f64);
        match map.cell_at(p) {
            Some((cx, cy)) if map.cell(cx, cy) == LocalCell::Free => {}
            _ => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fully known map from ASCII rows: `.` free, `#` obstacle, `?` unknown.
    fn local_from(rows: &[&str], res: f64) -> LocalMap {
        let side = rows.len();
        assert!(rows.iter().all(|r| r.len() == side));
        let mut m = LocalMap::new(side, res);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                match c {
                    '.' => m.observe(x, y, LocalCell::Free),
                    '#' => m.observe(x, y, LocalCell::Obstacle),
                    '?' => {}
                    _ => panic!("bad glyph"),
                }
            }
        }
        m
    }

    /// Brute-force Dijkstra with the same move set, used as the oracle.
    fn brute_force_cost(
        map: &LocalMap,
        start: (usize, usize),
        goal: (usize, usize),
    ) -> Option<u32> {
        let side = map.side();
        let mut dist = vec![u32::MAX; side * side];
        dist[start.1 * side + start.0] = 0;
        let mut changed = true;
        while changed {
            changed = false;
            for y in 0..side {
                for x in 0..side {
                    let d = dist[y * side + x];
                    if d == u32::MAX {
                        continue;
                    }
                    for (dx, dy, c) in [
                        (1isize, 0isize, 10u32),
                        (-1, 0, 10),
                        (0, 1, 10),
                        (0, -1, 10),
                        (1, 1, 14),
                        (1, -1, 14),
                        (-1, 1, 14),
                        (-1, -1, 14),
                    ] {
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if nx < 0 || ny < 0 || nx >= side as isize || ny >= side as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if !passable(map, nx, ny) {
                            continue;
                        }
                        if dx != 0 && dy != 0 && (!passable(map, nx, y) || !passable(map, x, ny)) {
                            continue;
                        }
                        if d + c < dist[ny * side + nx] {
                            dist[ny * side + nx] = d + c;
                            changed = true;
                        }
                    }
                }
            }
        }
        let d = dist[goal.1 * side + goal.0];
        (d != u32::MAX).then_some(d)
    }

    fn path_cost(path: &[(usize, usize)]) -> u32 {
        path.windows(2)
            .map(|w| {
                let dx = w[0].0.abs_diff(w[1].0);
                let dy = w[0].1.abs_diff(w[1].1);
                if dx + dy == 2 {
                    14
                } else {
                    10
                }
            })
            .sum()
    }

    #[test]
    fn straight_corridor_is_straight() {
        let rows = [
            "##########",
            "#........#",
            "#........#",
            "#........#",
            "#........#",
            "#........#",
            "#........#",
            "#........#",
            "#........#",
            "##########",
        ];
        let m = local_from(&rows, 1.0);
        let path = astar(&m, (2, 4), (7, 4)).unwrap();
        assert_eq!(path.len(), 6);
        assert!(path.iter().all(|&(_, y)| y == 4));
    }

    #[test]
    fn u_shape_matches_brute_force_oracle() {
        // Wall with a gap at the bottom forces a detour around the U.
        let rows = [
            "############",
            "#..........#",
            "#....##....#",
            "#....##....#",
            "#....##....#",
            "#....##....#",
            "#....##....#",
            "#....##....#",
            "#..........#",
            "#..........#",
            "#..........#",
            "############",
        ];
        let m = local_from(&rows, 1.0);
        let start = (3, 4);
        let goal = (8, 4);
        let path = astar(&m, start, goal).unwrap();
        let oracle = brute_force_cost(&m, start, goal).unwrap();
        assert_eq!(path_cost(&path), oracle);
        assert!(path.iter().all(|&(x, y)| passable(&m, x, y)));
    }

    #[test]
    fn unreachable_goal_is_no_path() {
        let rows = [
            "##########",
            "#...#....#",
            "#...#....#",
            "#...#....#",
            "#...#....#",
            "#...#....#",
            "#...#....#",
            "#...#....#",
            "#...#....#",
            "##########",
        ];
        let m = local_from(&rows, 1.0);
        assert_eq!(astar(&m, (1, 1), (8, 8)), Err(PlanError::NoPath));
    }

    #[test]
    fn goal_in_unknown_region_is_no_path() {
        // Right half never explored; a goal deep inside it is unreachable.
        let rows = [
            "??????????",
            "?...??????",
            "?...??????",
            "?...??????",
            "?...??????",
            "?...??????",
            "?...??????",
            "?...??????",
            "?...??????",
            "??????????",
        ];
        let m = local_from(&rows, 1.0);
        let r = homing_plan(&m, Vec2::new(1.5, 1.5), Vec2::new(8.5, 5.5));
        assert_eq!(r, Err(PlanError::NoPath));
    }

    #[test]
    fn fully_known_map_is_exhausted() {
        let rows = [
            "#####",
            "#...#",
            "#...#",
            "#...#",
            "#####",
        ];
        let m = local_from(&rows, 1.0);
        assert_eq!(
            frontier_plan(&m, Vec2::new(2.5, 2.5), 0.0),
            Err(PlanError::ExplorationExhausted)
        );
    }

    #[test]
    fn frontier_heads_for_the_unknown_side() {
        // Left half known free, right half unknown: the plan ends near the
        // boundary between them.
        let mut rows = Vec::new();
        for _ in 0..16 {
            rows.push("........????????".to_string());
        }
        let refs: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        let m = local_from(&refs, 1.0);
        let path = frontier_plan(&m, Vec2::new(2.5, 8.5), 0.0).unwrap();
        let end = *path.last().unwrap();
        assert!(end.x > 5.0, "path should head right, ends at {end:?}");
    }

    #[test]
    fn preferred_direction_breaks_gain_ties() {
        // Unknown strips on both sides, symmetric gain; the cosine bias
        // must pick the cluster aligned with the preferred direction.
        let mut rows = Vec::new();
        for _ in 0..17 {
            rows.push("????.........????".to_string());
        }
        let refs: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        let m = local_from(&refs, 1.0);
        let path = frontier_plan(&m, Vec2::new(8.5, 8.5), 0.0).unwrap();
        let end = *path.last().unwrap();
        assert!(end.x > 8.5, "cosine bias should pick +x, got {end:?}");

        let path_left = frontier_plan(&m, Vec2::new(8.5, 8.5), std::f64::consts::PI).unwrap();
        let end_left = *path_left.last().unwrap();
        assert!(end_left.x < 8.5, "bias toward -x, got {end_left:?}");
    }

    #[test]
    fn frontier_paths_avoid_unknown_and_obstacles() {
        let rows = [
            "????????????",
            "?..........?",
            "?.########..",
            "?.#......#.?",
            "?.#......#.?",
            "?.########.?",
            "?..........?",
            "?..........?",
            "?..........?",
            "?..........?",
            "?..........?",
            "????????????",
        ];
        let m = local_from(&rows, 1.0);
        let path = frontier_plan(&m, Vec2::new(6.5, 8.5), 0.0).unwrap();
        for wp in &path {
            let (cx, cy) = m.cell_at(*wp).unwrap();
            assert_eq!(m.cell(cx, cy), LocalCell::Free);
        }
    }
}
