//! Forest arena generation: uniformly scattered cylindrical trunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::world::{Cell, WorldMap, DEFAULT_RESOLUTION};

/// Default trunk radius, meters. Sub-robot-width so single trunks are
/// avoidable obstacles rather than walls.
pub const DEFAULT_CYLINDER_RADIUS: f64 = 0.3;

/// Scatter cylinders uniformly until the requested obstacle density is
/// reached. The home disc stays clear and generation is deterministic per
/// seed.
pub fn generate_forest(
    arena_side: f64,
    density: f64,
    cylinder_radius: f64,
    seed: u64,
) -> Result<WorldMap> {
    if !(0.0..1.0).contains(&density) {
        return Err(Error::Domain(format!(
            "forest density must be in [0, 1), got {density}"
        )));
    }
    if !(cylinder_radius > 0.0) {
        return Err(Error::Domain("cylinder radius must be positive".into()));
    }
    if !(arena_side > 0.0) {
        return Err(Error::Domain("arena side must be positive".into()));
    }

    let cells_per_side = (arena_side / DEFAULT_RESOLUTION).round() as usize;
    let mut map = WorldMap::empty(cells_per_side, arena_side / cells_per_side as f64);
    if density == 0.0 {
        return Ok(map);
    }

    let total = (cells_per_side * cells_per_side) as f64;
    let target_obstacles = (density * total).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep_clear = map.home.radius + cylinder_radius + 0.5;

    let mut obstacles = 0usize;
    // Each trunk paints only a handful of cells, so the final fraction lands
    // well inside the ±0.02 band around the requested density.
    let max_attempts = target_obstacles * 1000;
    for _ in 0..max_attempts {
        if obstacles >= target_obstacles {
            break;
        }
        let center = Vec2::new(
            rng.gen_range(0.0..arena_side),
            rng.gen_range(0.0..arena_side),
        );
        if center.distance(map.home.center) < keep_clear {
            continue;
        }
        obstacles += paint_disc(&mut map, center, cylinder_radius);
    }
    Ok(map)
}

/// Mark the cells of a disc as obstacles, returning how many flipped.
fn paint_disc(map: &mut WorldMap, center: Vec2, radius: f64) -> usize {
    let res = map.resolution();
    let lo_x = ((center.x - radius) / res).floor().max(0.0) as usize;
    let hi_x = (((center.x + radius) / res).ceil() as usize).min(map.width());
    let lo_y = ((center.y - radius) / res).floor().max(0.0) as usize;
    let hi_y = (((center.y + radius) / res).ceil() as usize).min(map.height());
    let mut flipped = 0;
    for cy in lo_y..hi_y {
        for cx in lo_x..hi_x {
            if map.cell_center(cx, cy).distance(center) <= radius
                && map.cell(cx, cy) == Cell::Free
            {
                map.set_cell(cx, cy, Cell::Obstacle);
                flipped += 1;
            }
        }
    }
    flipped
}
