//! Environment construction and grid geometry.
//!
//! Arenas are square occupancy grids with a metric scale. Cells outside the
//! grid count as obstacles: the arena is walled, so rays and robots stop at
//! its edge. Maps come from octile benchmark files ([`octile`]), from the
//! procedural generators ([`synth`], [`forest`]), or from tiling/cropping an
//! existing map to reach the requested arena size.

pub mod forest;
pub mod local;
pub mod octile;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Simulation grid resolution, meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.25;
/// Radius of the home disc at the arena center, meters.
pub const DEFAULT_HOME_RADIUS: f64 = 3.0;
/// How far inside the arena border targets are placed, meters.
pub const BORDER_BAND: f64 = 2.0;
/// Radiation sensing radius around a target, meters.
pub const TARGET_SENSE_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetStatus {
    Unfound,
    Found,
    CleanupDone,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Target {
    pub id: u32,
    pub position: Vec2,
    pub sense_radius: f64,
    pub quorum: u32,
    pub status: TargetStatus,
}

impl Target {
    pub fn new(id: u32, position: Vec2, quorum: u32) -> Self {
        Self {
            id,
            position,
            sense_radius: TARGET_SENSE_RADIUS,
            quorum,
            status: TargetStatus::Unfound,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Home {
    pub center: Vec2,
    pub radius: f64,
}

/// Square occupancy-grid arena.
#[derive(Debug, Clone)]
pub struct WorldMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<Cell>,
    pub home: Home,
    pub targets: Vec<Target>,
}

impl WorldMap {
    /// All-free square map.
    pub fn empty(side_cells: usize, resolution: f64) -> Self {
        Self::from_cells(
            side_cells,
            side_cells,
            resolution,
            vec![Cell::Free; side_cells * side_cells],
        )
        .expect("square by construction")
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        cells: Vec<Cell>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("map dimensions must be positive".into()));
        }
        if width != height {
            return Err(Error::Domain(format!(
                "arena must be square, got {width}x{height}"
            )));
        }
        if cells.len() != width * height {
            return Err(Error::Domain("cell buffer does not match dimensions".into()));
        }
        let side = width as f64 * resolution;
        Ok(Self {
            width,
            height,
            resolution,
            cells,
            home: Home {
                center: Vec2::new(side / 2.0, side / 2.0),
                radius: DEFAULT_HOME_RADIUS,
            },
            targets: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn arena_side(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn cell(&self, cx: usize, cy: usize) -> Cell {
        self.cells[cy * self.width + cx]
    }

    pub fn set_cell(&mut self, cx: usize, cy: usize, cell: Cell) {
        self.cells[cy * self.width + cx] = cell;
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn obstacle_fraction(&self) -> f64 {
        let obstacles = self.cells.iter().filter(|c| **c == Cell::Obstacle).count();
        obstacles as f64 / self.cells.len() as f64
    }

    /// Grid cell containing a world point, if inside the arena.
    pub fn cell_at(&self, p: Vec2) -> Option<(usize, usize)> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let cx = (p.x / self.resolution) as usize;
        let cy = (p.y / self.resolution) as usize;
        if cx >= self.width || cy >= self.height {
            return None;
        }
        Some((cx, cy))
    }

    /// Out-of-bounds points count as obstructed.
    pub fn is_free_at(&self, p: Vec2) -> bool {
        match self.cell_at(p) {
            Some((cx, cy)) => self.cell(cx, cy) == Cell::Free,
            None => false,
        }
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> Vec2 {
        Vec2::new(
            (cx as f64 + 0.5) * self.resolution,
            (cy as f64 + 0.5) * self.resolution,
        )
    }

    /// Set the metric scale so the arena spans `side` meters.
    pub fn with_arena_side(mut self, side: f64) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::Domain(format!("arena side must be positive, got {side}")));
        }
        self.resolution = side / self.width as f64;
        let c = side / 2.0;
        self.home.center = Vec2::new(c, c);
        Ok(self)
    }

    /// Repeat the cell pattern to grow the arena; `factor` is the total
    /// repetition count and must be a perfect square (1, 4, 16).
    pub fn tile(&self, factor: u32) -> Result<WorldMap> {
        let per_axis = match factor {
            1 => 1usize,
            4 => 2,
            16 => 4,
            other => {
                return Err(Error::Domain(format!(
                    "unsupported tile factor {other}; expected 1, 4 or 16"
                )))
            }
        };
        if per_axis == 1 {
            return Ok(self.clone());
        }
        let w = self.width * per_axis;
        let h = self.height * per_axis;
        let mut cells = vec![Cell::Free; w * h];
        for y in 0..h {
            for x in 0..w {
                cells[y * w + x] = self.cell(x % self.width, y % self.height);
            }
        }
        WorldMap::from_cells(w, h, self.resolution, cells)
    }

    /// Keep the lower-left half of the map in each axis.
    pub fn crop_half(&self) -> Result<WorldMap> {
        if self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(Error::Domain(format!(
                "crop requires even dimensions, got {}x{}",
                self.width, self.height
            )));
        }
        let w = self.width / 2;
        let h = self.height / 2;
        let mut cells = vec![Cell::Free; w * h];
        for y in 0..h {
            for x in 0..w {
                cells[y * w + x] = self.cell(x, y);
            }
        }
        WorldMap::from_cells(w, h, self.resolution, cells)
    }

    /// Nearest-neighbor resample to a new grid resolution.
    pub fn resample(&self, resolution: f64) -> Result<WorldMap> {
        if !(resolution > 0.0) {
            return Err(Error::Domain("resolution must be positive".into()));
        }
        let side = self.arena_side();
        let n = (side / resolution).round().max(1.0) as usize;
        let mut cells = vec![Cell::Free; n * n];
        for y in 0..n {
            for x in 0..n {
                let sx = ((x as f64 + 0.5) * self.width as f64 / n as f64) as usize;
                let sy = ((y as f64 + 0.5) * self.height as f64 / n as f64) as usize;
                cells[y * n + x] = self.cell(sx.min(self.width - 1), sy.min(self.height - 1));
            }
        }
        let mut out = WorldMap::from_cells(n, n, side / n as f64, cells)?;
        out.home = self.home;
        out.targets = self.targets.clone();
        Ok(out)
    }

    /// The home disc must be obstacle-free; robots deploy there.
    pub fn validate_home(&self) -> Result<()> {
        let r = self.home.radius;
        let c = self.home.center;
        let lo_x = ((c.x - r) / self.resolution).floor().max(0.0) as usize;
        let hi_x = (((c.x + r) / self.resolution).ceil() as usize).min(self.width);
        let lo_y = ((c.y - r) / self.resolution).floor().max(0.0) as usize;
        let hi_y = (((c.y + r) / self.resolution).ceil() as usize).min(self.height);
        for cy in lo_y..hi_y {
            for cx in lo_x..hi_x {
                if self.cell_center(cx, cy).distance(c) <= r && self.cell(cx, cy) == Cell::Obstacle
                {
                    return Err(Error::Config(format!(
                        "home region is not free at cell ({cx}, {cy})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Carve the home disc free. Used by generators; parsed benchmark maps
    /// are validated instead so their geometry is not silently edited.
    pub fn clear_home_region(&mut self) {
        let r = self.home.radius;
        let c = self.home.center;
        for cy in 0..self.height {
            for cx in 0..self.width {
                if self.cell_center(cx, cy).distance(c) <= r {
                    self.set_cell(cx, cy, Cell::Free);
                }
            }
        }
    }

    /// Distance along `heading` from `from` to the first obstructed cell
    /// boundary, within `max_range`. The arena edge counts as a wall. A ray
    /// started inside an obstacle degenerates to a hit at distance zero.
    pub fn raycast(&self, from: Vec2, heading: f64, max_range: f64) -> Option<f64> {
        let dir = Vec2::from_angle(heading);
        let res = self.resolution;
        let (mut cx, mut cy) = match self.cell_at(from) {
            Some(c) => c,
            None => return Some(0.0),
        };
        if self.cell(cx, cy) == Cell::Obstacle {
            return Some(0.0);
        }

        // Amanatides-Woo traversal.
        let step_x: isize = if dir.x > 0.0 { 1 } else { -1 };
        let step_y: isize = if dir.y > 0.0 { 1 } else { -1 };
        let next_x = if dir.x > 0.0 {
            (cx as f64 + 1.0) * res
        } else {
            cx as f64 * res
        };
        let next_y = if dir.y > 0.0 {
            (cy as f64 + 1.0) * res
        } else {
            cy as f64 * res
        };
        let mut t_max_x = if dir.x != 0.0 {
            (next_x - from.x) / dir.x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dir.y != 0.0 {
            (next_y - from.y) / dir.y
        } else {
            f64::INFINITY
        };
        let t_delta_x = if dir.x != 0.0 {
            res / dir.x.abs()
        } else {
            f64::INFINITY
        };
        let t_delta_y = if dir.y != 0.0 {
            res / dir.y.abs()
        } else {
            f64::INFINITY
        };

        loop {
            let t = t_max_x.min(t_max_y);
            if t > max_range {
                return None;
            }
            if t_max_x <= t_max_y {
                let nx = cx as isize + step_x;
                if nx < 0 || nx >= self.width as isize {
                    return Some(t);
                }
                cx = nx as usize;
                t_max_x += t_delta_x;
            } else {
                let ny = cy as isize + step_y;
                if ny < 0 || ny >= self.height as isize {
                    return Some(t);
                }
                cy = ny as usize;
                t_max_y += t_delta_y;
            }
            if self.cell(cx, cy) == Cell::Obstacle {
                return Some(t);
            }
        }
    }

    /// True when the straight segment between two points crosses no
    /// obstacle cell.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        let d = b - a;
        let range = d.length();
        if range < 1e-9 {
            return self.is_free_at(a);
        }
        match self.raycast(a, d.angle(), range) {
            None => true,
            // Allow a hit in the endpoint's own cell (targets may sit flush
            // against a wall boundary).
            Some(hit) => hit >= range - self.resolution,
        }
    }

    /// Nearest free cell center to `p` within `radius`, scanning outward.
    pub fn nearest_free_cell(&self, p: Vec2, radius: f64) -> Option<Vec2> {
        let max_ring = (radius / self.resolution).ceil() as isize;
        let (px, py) = (
            (p.x / self.resolution).floor() as isize,
            (p.y / self.resolution).floor() as isize,
        );
        let mut best: Option<(f64, Vec2)> = None;
        for ring in 0..=max_ring {
            if let Some((d, _)) = best {
                if (ring - 1) as f64 * self.resolution > d {
                    break;
                }
            }
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let (cx, cy) = (px + dx, py + dy);
                    if cx < 0 || cy < 0 || cx >= self.width as isize || cy >= self.height as isize
                    {
                        continue;
                    }
                    if self.cell(cx as usize, cy as usize) == Cell::Free {
                        let center = self.cell_center(cx as usize, cy as usize);
                        let d = center.distance(p);
                        if d <= radius && best.map_or(true, |(bd, _)| d < bd) {
                            best = Some((d, center));
                        }
                    }
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

/// Target bearing sequence: symmetric angles on the arena border, in degrees
/// from the arena center, refined by repeated bisection.
pub fn target_angles(n: usize) -> Vec<f64> {
    const BASE: [f64; 16] = [
        0.0, 180.0, 90.0, 270.0, 45.0, 135.0, 225.0, 315.0, 22.5, 67.5, 112.5, 157.5, 202.5,
        247.5, 292.5, 337.5,
    ];
    let mut angles: Vec<f64> = BASE.to_vec();
    // One more bisection level covers n = 32.
    let mut k = 11.25;
    while angles.len() < n {
        angles.push(k);
        k += 22.5;
    }
    angles.truncate(n);
    angles
}

/// Place `n` targets on the arena border band, snapped to free cells.
///
/// A single target goes to the (+x, +y) corner; multiple targets use the
/// symmetric angle sequence measured from the arena center.
pub fn place_targets(map: &WorldMap, n: u32, quorum: u32) -> Result<Vec<Target>> {
    const ALLOWED: [u32; 6] = [1, 2, 4, 8, 16, 32];
    if !ALLOWED.contains(&n) {
        return Err(Error::Domain(format!(
            "target count must be one of {ALLOWED:?}, got {n}"
        )));
    }
    let side = map.arena_side();
    let center = Vec2::new(side / 2.0, side / 2.0);
    let mut nominal = Vec::new();
    if n == 1 {
        nominal.push(Vec2::new(side - BORDER_BAND, side - BORDER_BAND));
    } else {
        for deg in target_angles(n as usize) {
            let theta = deg.to_radians();
            let dir = Vec2::from_angle(theta);
            // Distance from center to the square border along this bearing.
            let half = side / 2.0;
            let tx = if dir.x.abs() > 1e-12 {
                half / dir.x.abs()
            } else {
                f64::INFINITY
            };
            let ty = if dir.y.abs() > 1e-12 {
                half / dir.y.abs()
            } else {
                f64::INFINITY
            };
            let reach = tx.min(ty) - BORDER_BAND;
            nominal.push(center + dir.scaled(reach));
        }
    }
    let mut targets = Vec::with_capacity(nominal.len());
    for (i, p) in nominal.into_iter().enumerate() {
        let snapped = map
            .nearest_free_cell(p, BORDER_BAND + 1.0)
            .ok_or_else(|| {
                Error::Placement(format!(
                    "no free cell within the border band near ({:.2}, {:.2})",
                    p.x, p.y
                ))
            })?;
        targets.push(Target::new(i as u32, snapped, quorum));
    }
    Ok(targets)
}
