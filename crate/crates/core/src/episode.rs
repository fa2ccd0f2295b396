//! One episode end to end: build the arena, deploy the swarm, step the
//! engine to completion or the time limit, and distill the run record.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{splitmix64, ArenaType, Placement, ScenarioConfig, Strategy};
use crate::engine::{deploy_at_home, deploy_uniform, ChainStats, Sim};
use crate::error::{Error, Result};
use crate::events::EventKind;
use crate::metrics::{
    normalized_time, swarm_cost, NeighborAccumulator, RunRecord, VisitationGrid,
};
use crate::world::forest::generate_forest;
use crate::world::octile::parse_octile;
use crate::world::synth::{generate_maze, generate_urban};
use crate::world::{place_targets, WorldMap, DEFAULT_RESOLUTION};

/// Everything produced by one episode.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub record: RunRecord,
    /// Newline-delimited event log, the external format.
    pub event_text: String,
    /// Optional `t_s,robot_id,x,y,theta` rows.
    pub trajectory_text: Option<String>,
    pub chain_stats: ChainStats,
    /// Local-map observation conflicts summed over guides.
    pub map_conflicts: u64,
    /// Largest quota-counted byte total any robot flushed in one step.
    pub max_flushed_bytes: usize,
}

/// Build the arena for a config. The seed only matters for generated maps
/// when the config does not pin one.
pub fn build_world(cfg: &ScenarioConfig, run_seed: u64) -> Result<WorldMap> {
    let map_seed = cfg
        .map_seed
        .unwrap_or_else(|| splitmix64(run_seed ^ 0x6d61_7073));
    let mut map = match (cfg.arena, cfg.map_path.as_deref()) {
        (ArenaType::Empty, _) => {
            let cells = (cfg.arena_side / DEFAULT_RESOLUTION).round() as usize;
            WorldMap::empty(cells, cfg.arena_side / cells as f64)
        }
        (ArenaType::Forest, _) => generate_forest(
            cfg.arena_side,
            cfg.tunables.forest_density,
            cfg.tunables.forest_cylinder_radius,
            map_seed,
        )?,
        (ArenaType::Urban, None) => generate_urban(cfg.arena_side, map_seed)?,
        (ArenaType::Maze, None) => generate_maze(cfg.arena_side, map_seed)?,
        (ArenaType::Urban | ArenaType::Maze, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let parsed = parse_octile(&text)?.with_arena_side(30.0)?;
            let sized = match cfg.arena_side.round() as u32 {
                15 => parsed.crop_half()?,
                30 => parsed,
                60 => parsed.tile(4)?,
                120 => parsed.tile(16)?,
                other => {
                    return Err(Error::Config(format!(
                        "no tiling rule for arena side {other}"
                    )))
                }
            };
            sized.resample(DEFAULT_RESOLUTION)?
        }
    };
    map.validate_home()?;
    map.targets = place_targets(&map, cfg.n_targets, cfg.quorum)?;
    Ok(map)
}

/// Run one episode on a freshly built world.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    let map = build_world(cfg, seed)?;
    run_episode_on(&map, cfg, seed)
}

/// Run one episode on a caller-provided world (targets already placed).
pub fn run_episode_on(map: &WorldMap, cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robots = match cfg.placement {
        Placement::Home => deploy_at_home(map, cfg.strategy, cfg.n_guides, cfg.n_workers),
        Placement::Uniform => deploy_uniform(map, cfg.strategy, cfg.n_workers, &mut rng),
    };
    let comms_enabled = cfg.strategy != Strategy::Ballistic;
    let mut sim = Sim::new(
        map,
        cfg.tunables,
        robots,
        map.targets.clone(),
        rng,
        comms_enabled,
    );

    let mut grid = VisitationGrid::new(map, cfg.tunables.visitation_cell, cfg.tunables.coverage_window_s);
    let mut neighbors = NeighborAccumulator::default();
    let mut trajectory = cfg.log_trajectories.then(String::new);

    let max_steps = (cfg.t_limit / cfg.tunables.dt).ceil() as u64;
    let mut positions = Vec::with_capacity(sim.robots.len());
    loop {
        positions.clear();
        positions.extend(sim.robots.iter().map(|r| r.pose.position));
        for (i, p) in positions.iter().enumerate() {
            grid.visit(*p, sim.t);
            if let Some(text) = trajectory.as_mut() {
                let _ = writeln!(
                    text,
                    "{:.1},{},{:.3},{:.3},{:.3}",
                    sim.t,
                    i,
                    p.x,
                    p.y,
                    sim.robots[i].pose.heading
                );
            }
        }
        neighbors.record_step(&positions, cfg.tunables.comm_range);

        if sim.mission_complete || sim.step_count >= max_steps {
            break;
        }
        sim.step();
    }
    if !sim.mission_complete {
        sim.events
            .push(sim.t, 0, EventKind::Timeout, "time limit reached");
    }

    let (avg_nb_dist, avg_nb_count) = neighbors.finish();
    let success = sim.mission_complete;
    let t_s = sim.completion_time.filter(|_| success);
    let record = RunRecord {
        config_id: cfg.id.clone(),
        seed,
        strategy: cfg.strategy,
        arena_type: cfg.arena,
        arena_side: cfg.arena_side,
        n_workers: cfg.n_workers,
        n_guides: cfg.n_guides,
        n_targets: cfg.n_targets,
        success,
        t_s,
        t_norm: t_s.map(normalized_time),
        explored_frac: grid.explored_fraction(),
        avg_nb_dist,
        avg_nb_count,
        cost: swarm_cost(cfg.n_workers, cfg.n_guides),
        coverage_series: grid.incremental_coverage(),
        detection_times: sim.events.first_detections().into_iter().collect(),
        cleanup_times: sim.events.cleanup_times().into_iter().collect(),
    };
    let map_conflicts = sim
        .robots
        .iter()
        .filter_map(|r| r.local_map.as_ref())
        .map(|m| m.conflicts)
        .sum();
    Ok(EpisodeOutcome {
        record,
        event_text: sim.events.render(),
        trajectory_text: trajectory,
        chain_stats: sim.chain_stats,
        map_conflicts,
        max_flushed_bytes: sim.comms.max_flushed_bytes,
    })
}

/// Run a set of (config, seed) pairs, optionally across the worker pool.
/// Results come back sorted by (config id, seed) regardless of scheduling;
/// per-run failures are isolated as error rows.
pub fn run_batch(
    runs: &[(ScenarioConfig, u64)],
    parallel: bool,
) -> Vec<(String, u64, Result<EpisodeOutcome>)> {
    let execute = |(cfg, seed): &(ScenarioConfig, u64)| {
        (cfg.id.clone(), *seed, run_episode(cfg, *seed))
    };
    let mut results: Vec<(String, u64, Result<EpisodeOutcome>)> = if parallel {
        runs.par_iter().map(execute).collect()
    } else {
        runs.iter().map(execute).collect()
    };
    results.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tunables;

    fn ballistic_cfg(side: f64, n: u32) -> ScenarioConfig {
        ScenarioConfig {
            id: "ballistic".into(),
            strategy: Strategy::Ballistic,
            arena: ArenaType::Empty,
            arena_side: side,
            map_path: None,
            map_seed: None,
            n_workers: n,
            n_guides: 0,
            n_targets: 1,
            quorum: 10,
            t_limit: 600.0,
            placement: Placement::Uniform,
            log_trajectories: false,
            tunables: Tunables::default(),
        }
    }

    #[test]
    fn ballistic_runs_are_deterministic() {
        let cfg = ballistic_cfg(30.0, 5);
        let a = run_episode(&cfg, 42).unwrap();
        let b = run_episode(&cfg, 42).unwrap();
        assert_eq!(a.event_text, b.event_text);
        assert_eq!(a.record.to_csv_row(), b.record.to_csv_row());
        let c = run_episode(&cfg, 43).unwrap();
        assert_ne!(a.event_text, c.event_text);
    }

    #[test]
    fn robots_never_leave_free_space() {
        let mut cfg = ballistic_cfg(15.0, 8);
        cfg.arena = ArenaType::Forest;
        cfg.map_seed = Some(3);
        cfg.t_limit = 60.0;
        let map = build_world(&cfg, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let robots = deploy_uniform(&map, Strategy::Ballistic, 8, &mut rng);
        let mut sim = Sim::new(&map, cfg.tunables, robots, map.targets.clone(), rng, false);
        for _ in 0..600 {
            sim.step();
            for r in &sim.robots {
                assert!(
                    map.is_free_at(r.pose.position),
                    "robot {} inside an obstacle at {:?}",
                    r.id,
                    r.pose.position
                );
                assert!(r.recorded_speed <= cfg.tunables.v_max + 1e-9);
            }
        }
    }

    #[test]
    fn batch_parallel_matches_serial() {
        let cfg = ballistic_cfg(30.0, 4);
        let runs: Vec<(ScenarioConfig, u64)> =
            (0..4).map(|s| (cfg.clone(), s as u64)).collect();
        let serial = run_batch(&runs, false);
        let parallel = run_batch(&runs, true);
        assert_eq!(serial.len(), parallel.len());
        for (s, p) in serial.iter().zip(parallel.iter()) {
            assert_eq!(s.0, p.0);
            assert_eq!(s.1, p.1);
            let (sr, pr) = (s.2.as_ref().unwrap(), p.2.as_ref().unwrap());
            assert_eq!(sr.record.to_csv_row(), pr.record.to_csv_row());
            assert_eq!(sr.event_text, pr.event_text);
        }
    }
}
