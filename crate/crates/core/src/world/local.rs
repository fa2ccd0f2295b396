//! Per-guide occupancy maps built from lidar returns.
//!
//! Cells start Unknown and move monotonically to Free or Obstacle. Once
//! known, a cell never changes class again; contradicting observations are
//! counted instead so mapping noise is visible in the episode diagnostics.

use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalCell {
    Unknown,
    Free,
    Obstacle,
}

#[derive(Debug, Clone)]
pub struct LocalMap {
    side: usize,
    resolution: f64,
    cells: Vec<LocalCell>,
    /// Observations that contradicted an already-known cell.
    pub conflicts: u64,
    /// Append-only record of cells as they became known; peers exchange
    /// slices of this journal as incremental map diffs.
    journal: Vec<(u32, u8)>,
}

impl LocalMap {
    pub fn new(side: usize, resolution: f64) -> Self {
        Self {
            side,
            resolution,
            cells: vec![LocalCell::Unknown; side * side],
            conflicts: 0,
            journal: Vec::new(),
        }
    }

    pub fn journal(&self) -> &[(u32, u8)] {
        &self.journal
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cell(&self, cx: usize, cy: usize) -> LocalCell {
        self.cells[cy * self.side + cx]
    }

    pub fn cell_index(&self, cx: usize, cy: usize) -> usize {
        cy * self.side + cx
    }

    pub fn cell_at(&self, p: Vec2) -> Option<(usize, usize)> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let cx = (p.x / self.resolution) as usize;
        let cy = (p.y / self.resolution) as usize;
        if cx >= self.side || cy >= self.side {
            return None;
        }
        Some((cx, cy))
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> Vec2 {
        Vec2::new(
            (cx as f64 + 0.5) * self.resolution,
            (cy as f64 + 0.5) * self.resolution,
        )
    }

    /// Monotone write: Unknown cells take the observation, known cells keep
    /// their class and count disagreements.
    pub fn observe(&mut self, cx: usize, cy: usize, observed: LocalCell) {
        debug_assert!(observed != LocalCell::Unknown);
        let idx = cy * self.side + cx;
        let slot = &mut self.cells[idx];
        match (*slot, observed) {
            (LocalCell::Unknown, _) => {
                *slot = observed;
                self.journal.push((idx as u32, cell_code(observed)));
            }
            (a, b) if a == b => {}
            _ => self.conflicts += 1,
        }
    }

    /// Merge a peer's known cells, receiver-wins on conflicts. Newly learned
    /// cells enter this map's journal so they relay onward.
    pub fn merge_diff(&mut self, diff: &[(u32, LocalCell)]) {
        for &(idx, observed) in diff {
            let idx = idx as usize;
            if idx >= self.cells.len() || observed == LocalCell::Unknown {
                continue;
            }
            let slot = &mut self.cells[idx];
            match (*slot, observed) {
                (LocalCell::Unknown, _) => {
                    *slot = observed;
                    self.journal.push((idx as u32, cell_code(observed)));
                }
                (a, b) if a == b => {}
                _ => self.conflicts += 1,
            }
        }
    }

    /// Merge wire-format diff cells.
    pub fn merge_wire_diff(&mut self, cells: &[(u32, u8)]) {
        let decoded: Vec<(u32, LocalCell)> = cells
            .iter()
            .filter_map(|&(idx, code)| cell_from_code(code).map(|c| (idx, c)))
            .collect();
        self.merge_diff(&decoded);
    }

    pub fn known_fraction(&self) -> f64 {
        let known = self
            .cells
            .iter()
            .filter(|c| **c != LocalCell::Unknown)
            .count();
        known as f64 / self.cells.len() as f64
    }

    /// A frontier is a known-Free cell with at least one Unknown 4-neighbor.
    pub fn is_frontier(&self, cx: usize, cy: usize) -> bool {
        if self.cell(cx, cy) != LocalCell::Free {
            return false;
        }
        let side = self.side as isize;
        for (dx, dy) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (cx as isize + dx, cy as isize + dy);
            if nx < 0 || ny < 0 || nx >= side || ny >= side {
                continue;
            }
            if self.cell(nx as usize, ny as usize) == LocalCell::Unknown {
                return true;
            }
        }
        false
    }

    pub fn frontier_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for cy in 0..self.side {
            for cx in 0..self.side {
                if self.is_frontier(cx, cy) {
                    out.push((cx, cy));
                }
            }
        }
        out
    }
}

/// Wire code for a known cell class.
pub fn cell_code(cell: LocalCell) -> u8 {
    match cell {
        LocalCell::Unknown => 0,
        LocalCell::Free => 1,
        LocalCell::Obstacle => 2,
    }
}

pub fn cell_from_code(code: u8) -> Option<LocalCell> {
    match code {
        1 => Some(LocalCell::Free),
        2 => Some(LocalCell::Obstacle),
        _ => None,
    }
}
