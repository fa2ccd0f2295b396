//! Stepwise state dump for chain debugging.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use radswarm_core::config::{ArenaType, Placement, ScenarioConfig, Strategy, Tunables};
use radswarm_core::engine::{deploy_at_home, Sim};
use radswarm_core::episode::build_world;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arena = match args.get(1).map(String::as_str) {
        Some("urban") => ArenaType::Urban,
        Some("maze") => ArenaType::Maze,
        _ => ArenaType::Empty,
    };
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = ScenarioConfig {
        id: "dbg".into(),
        strategy: Strategy::Hierarchical,
        arena,
        arena_side: 30.0,
        map_path: None,
        map_seed: Some(5 + seed),
        n_workers: 10,
        n_guides: 2,
        n_targets: 1,
        quorum: 10,
        t_limit: 2400.0,
        placement: Placement::Home,
        log_trajectories: false,
        tunables: Tunables::default(),
    };
    let map = build_world(&cfg, seed).unwrap();
    println!("target at {:?}", map.targets[0].position);
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let robots = deploy_at_home(&map, cfg.strategy, cfg.n_guides, cfg.n_workers);
    let mut sim = Sim::new(&map, cfg.tunables, robots, map.targets.clone(), rng, true);
    let dump_every = 300.0_f64;
    let mut next_dump = 0.0;
    while sim.t < cfg.t_limit && !sim.mission_complete {
        if sim.t >= next_dump {
            next_dump += dump_every;
            println!("--- t={:.1}", sim.t);
            for r in &sim.robots {
                let d_target = r.pose.position.distance(map.targets[0].position);
                let parent_info = r.chain.and_then(|l| l.parent).map(|p| {
                    let pp = sim.robots[p as usize].pose.position;
                    (p, r.pose.position.distance(pp))
                });
                println!(
                    "  {:2} {:?} act={} chain={:?} parent={:?} pos=({:.1},{:.1}) dt={:.1} v={:.2} cmd=({:.2},{:.2})",
                    r.id,
                    r.kind,
                    r.brain.action,
                    r.chain.map(|l| (l.index, l.phase)),
                    parent_info,
                    r.pose.position.x,
                    r.pose.position.y,
                    d_target,
                    r.recorded_speed,
                    r.cmd.v,
                    r.cmd.omega,
                );
            }
        }
        sim.step();
    }
    println!("done t={:.1} complete={}", sim.t, sim.mission_complete);
}
