//! Procedural urban and maze arenas.
//!
//! Batch campaigns need families of distinct maps per environment class.
//! These generators emit octile-compatible grids in the same style as the
//! benchmark files: urban maps are city blocks separated by streets, maze
//! maps are recursive-division mazes. Corridors stay wide enough for a robot
//! chain, the center deployment disc is kept clear, and a free ring inside
//! the border keeps every target bearing reachable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::world::{Cell, WorldMap, DEFAULT_RESOLUTION};

/// Streets and maze corridors, meters. Wide enough for two robots abreast.
const CORRIDOR_WIDTH: f64 = 2.0;
/// Free ring inside the arena border, meters.
const BORDER_RING: f64 = 2.5;

fn empty_arena(arena_side: f64) -> WorldMap {
    let n = (arena_side / DEFAULT_RESOLUTION).round() as usize;
    WorldMap::empty(n, arena_side / n as f64)
}

fn fill_rect(map: &mut WorldMap, x0: usize, y0: usize, x1: usize, y1: usize) {
    for y in y0..y1.min(map.height()) {
        for x in x0..x1.min(map.width()) {
            map.set_cell(x, y, Cell::Obstacle);
        }
    }
}

/// City-block arena: rectangular buildings on a jittered street grid.
pub fn generate_urban(arena_side: f64, seed: u64) -> Result<WorldMap> {
    let mut map = empty_arena(arena_side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5542_414e); // distinct stream per class
    let res = map.resolution();
    let ring = (BORDER_RING / res).round() as usize;
    let street = (CORRIDOR_WIDTH / res).round() as usize;
    let n = map.width();

    // Block pitch 6..10 m.
    let mut y = ring + street;
    while y + street < n - ring {
        let block_h = rng.gen_range((5.0 / res) as usize..(9.0 / res) as usize);
        let mut x = ring + street;
        while x + street < n - ring {
            let block_w = rng.gen_range((5.0 / res) as usize..(9.0 / res) as usize);
            let x1 = (x + block_w).min(n - ring - street);
            let y1 = (y + block_h).min(n - ring - street);
            // Occasional empty lot keeps the street graph irregular.
            if x1 > x && y1 > y && !rng.gen_bool(0.15) {
                fill_rect(&mut map, x, y, x1, y1);
            }
            x = x1 + street;
        }
        y += block_h + street;
    }

    map.clear_home_region();
    Ok(map)
}

/// Recursive-division maze with doors wide enough for a chain of robots.
pub fn generate_maze(arena_side: f64, seed: u64) -> Result<WorldMap> {
    let mut map = empty_arena(arena_side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4d41_5a45);
    let res = map.resolution();
    let ring = (BORDER_RING / res).round() as usize;
    let wall = (0.5 / res).round().max(1.0) as usize;
    let door = (CORRIDOR_WIDTH / res).round() as usize;
    let min_room = (4.0 / res).round() as usize;
    let n = map.width();

    divide(
        &mut map,
        &mut rng,
        ring,
        ring,
        n - ring,
        n - ring,
        wall,
        door,
        min_room,
        0,
    );
    map.clear_home_region();
    Ok(map)
}

#[allow(clippy::too_many_arguments)]
fn divide(
    map: &mut WorldMap,
    rng: &mut ChaCha8Rng,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    wall: usize,
    door: usize,
    min_room: usize,
    depth: usize,
) {
    let w = x1.saturating_sub(x0);
    let h = y1.saturating_sub(y0);
    if depth > 6 || (w < 2 * min_room + wall && h < 2 * min_room + wall) {
        return;
    }
    let horizontal = if w < 2 * min_room + wall {
        true
    } else if h < 2 * min_room + wall {
        false
    } else {
        rng.gen_bool(0.5)
    };

    if horizontal {
        let wy = rng.gen_range(y0 + min_room..y1 - min_room - wall + 1);
        let gap = rng.gen_range(x0..x1 - door + 1);
        fill_rect(map, x0, wy, gap, wy + wall);
        fill_rect(map, gap + door, wy, x1, wy + wall);
        divide(map, rng, x0, y0, x1, wy, wall, door, min_room, depth + 1);
        divide(map, rng, x0, wy + wall, x1, y1, wall, door, min_room, depth + 1);
    } else {
        let wx = rng.gen_range(x0 + min_room..x1 - min_room - wall + 1);
        let gap = rng.gen_range(y0..y1 - door + 1);
        fill_rect(map, wx, y0, wx + wall, gap);
        fill_rect(map, wx, gap + door, wx + wall, y1);
        divide(map, rng, x0, y0, wx, y1, wall, door, min_room, depth + 1);
        divide(map, rng, wx + wall, y0, x1, y1, wall, door, min_room, depth + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::place_targets;

    #[test]
    fn urban_is_deterministic_and_walkable() {
        let a = generate_urban(30.0, 3).unwrap();
        let b = generate_urban(30.0, 3).unwrap();
        assert_eq!(a.cells(), b.cells());
        a.validate_home().unwrap();
        let frac = a.obstacle_fraction();
        assert!(frac > 0.1 && frac < 0.8, "obstacle fraction {frac}");
        place_targets(&a, 1, 10).unwrap();
        place_targets(&a, 4, 10).unwrap();
    }

    #[test]
    fn maze_is_deterministic_and_walkable() {
        let a = generate_maze(30.0, 11).unwrap();
        let b = generate_maze(30.0, 11).unwrap();
        assert_eq!(a.cells(), b.cells());
        a.validate_home().unwrap();
        assert!(a.obstacle_fraction() > 0.01);
        place_targets(&a, 2, 10).unwrap();
    }

    #[test]
    fn distinct_seeds_differ() {
        let a = generate_maze(30.0, 1).unwrap();
        let b = generate_maze(30.0, 2).unwrap();
        assert_ne!(a.cells(), b.cells());
    }

    /// Every free cell in the border ring must be reachable from home:
    /// flood fill from the center and check the target corners.
    #[test]
    fn arenas_are_connected() {
        for seed in 0..5u64 {
            for map in [
                generate_urban(30.0, seed).unwrap(),
                generate_maze(30.0, seed).unwrap(),
            ] {
                let n = map.width();
                let mut seen = vec![false; n * n];
                let start = (n / 2, n / 2);
                let mut queue = std::collections::VecDeque::from([start]);
                seen[start.1 * n + start.0] = true;
                while let Some((x, y)) = queue.pop_front() {
                    for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if !seen[ny * n + nx] && map.cell(nx, ny) == Cell::Free {
                            seen[ny * n + nx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
                for t in place_targets(&map, 4, 10).unwrap() {
                    let (cx, cy) = map.cell_at(t.position).unwrap();
                    assert!(seen[cy * n + cx], "target {:?} unreachable", t.position);
                }
            }
        }
    }
}
