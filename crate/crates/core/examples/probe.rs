//! Scratch harness for behavior tuning runs.

use radswarm_core::config::{ArenaType, Placement, ScenarioConfig, Strategy, Tunables};
use radswarm_core::episode::run_episode;

fn cfg(id: &str, strategy: Strategy, arena: ArenaType, side: f64, w: u32, g: u32) -> ScenarioConfig {
    ScenarioConfig {
        id: id.into(),
        strategy,
        arena,
        arena_side: side,
        map_path: None,
        map_seed: Some(5),
        n_workers: w,
        n_guides: g,
        n_targets: 1,
        quorum: 10,
        t_limit: 2400.0,
        placement: Placement::Home,
        log_trajectories: false,
        tunables: Tunables::default(),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("egal-empty");
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let verbose = args.iter().any(|a| a == "-v");

    let c = match which {
        "egal-empty" => cfg("egal-empty", Strategy::Egalitarian, ArenaType::Empty, 30.0, 16, 0),
        "egal-maze" => cfg("egal-maze", Strategy::Egalitarian, ArenaType::Maze, 30.0, 16, 0),
        "egal-maze-64" => cfg("egal-maze-64", Strategy::Egalitarian, ArenaType::Maze, 30.0, 64, 0),
        "hier-empty" => cfg("hier-empty", Strategy::Hierarchical, ArenaType::Empty, 30.0, 10, 2),
        "hier-urban" => cfg("hier-urban", Strategy::Hierarchical, ArenaType::Urban, 30.0, 10, 2),
        "hier-urban-60" => cfg("hier-urban-60", Strategy::Hierarchical, ArenaType::Urban, 60.0, 10, 2),
        "hier-maze-60" => cfg("hier-maze-60", Strategy::Hierarchical, ArenaType::Maze, 60.0, 10, 2),
        "egal-maze-60" => cfg("egal-maze-60", Strategy::Egalitarian, ArenaType::Maze, 60.0, 16, 0),
        "het-urban" => cfg("het-urban", Strategy::Heterogeneous, ArenaType::Urban, 30.0, 10, 2),
        other => {
            eprintln!("unknown scenario {other}");
            std::process::exit(1);
        }
    };

    let t0 = std::time::Instant::now();
    let mut successes = 0;
    for seed in 0..seeds {
        let mut c = c.clone();
        c.map_seed = Some(5 + seed);
        let started = std::time::Instant::now();
        match run_episode(&c, seed) {
            Ok(out) => {
                successes += out.record.success as u32;
                println!(
                    "seed {seed}: success={} t={:?} explored={:.3} events={} wall={:.2}s chain={:?}",
                    out.record.success,
                    out.record.t_s,
                    out.record.explored_frac,
                    out.event_text.lines().count(),
                    started.elapsed().as_secs_f64(),
                    out.chain_stats,
                );
                if verbose {
                    for line in out.event_text.lines().take(120) {
                        println!("    {line}");
                    }
                }
            }
            Err(e) => println!("seed {seed}: ERROR {e}"),
        }
    }
    println!(
        "{which}: {successes}/{seeds} successes, total wall {:.1}s",
        t0.elapsed().as_secs_f64()
    );
}
