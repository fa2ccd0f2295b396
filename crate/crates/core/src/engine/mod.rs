//! Fixed-timestep simulation core.
//!
//! One control step advances every robot in ascending id order: build its
//! sensor frame from the start-of-step snapshot, hand it the messages that
//! arrived this step, run its behavior, soften the command with the
//! obstacle potential, then integrate unicycle kinematics against the grid
//! (robots stall rather than penetrate walls). Detections, arrivals and
//! cleanup completions are appended to the event log with timestamps.
//! Identical (world, config, seed) inputs produce bit-identical logs.

pub mod sensors;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::behaviors::{self, Brain};
use crate::comms::{stigmergy::Replica, CommsBus, LinkPhase};
use crate::config::{Strategy, Tunables};
use crate::error::{Error, Result};
use crate::events::{EventKind, EventLog};
use crate::geom::{wrap_angle, Pose, Vec2};
use crate::metrics::{cleanup_check, CleanupStatus};
use crate::world::local::LocalMap;
use crate::world::{Target, TargetStatus, WorldMap};

pub use sensors::{NeighborObs, RadiationObs, RayHit, SensorFrame, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobotKind {
    Guide,
    Worker,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
}

/// A link in a delivery chain: robots between the lead guide and the tail
/// know their parent (toward the lead) and child (away from it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainLink {
    /// Chain identifier; the target it delivers to.
    pub chain_id: u32,
    /// 0 is the lead guide.
    pub index: u16,
    pub parent: Option<u16>,
    pub child: Option<u16>,
    pub phase: LinkPhase,
}

#[derive(Debug)]
pub struct RobotState {
    pub id: u16,
    pub kind: RobotKind,
    pub pose: Pose,
    /// Command issued by the behavior this step, before the potential.
    pub cmd: Command,
    /// Exploration direction assigned at deployment.
    pub preferred_direction: f64,
    /// Guides carry an occupancy map; workers never do.
    pub local_map: Option<LocalMap>,
    pub chain: Option<ChainLink>,
    pub brain: Brain,
    /// Realized speed after clamping, m/s.
    pub recorded_speed: f64,
}

/// Harmonic obstacle potential: `a0 + k d³ / (2|d|)` below the distance
/// threshold, zero at or beyond it, zero at contact (the limit).
pub fn repulsion(d: f64, tun: &Tunables) -> Result<f64> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::Domain(format!(
            "repulsion distance must be nonnegative, got {d}"
        )));
    }
    if d == 0.0 || d >= tun.repulsion_threshold {
        return Ok(0.0);
    }
    Ok(tun.repulsion_a0 + tun.repulsion_k * d.powi(3) / (2.0 * d))
}

/// Steering gain that turns the lateral part of the repulsion into a yaw
/// correction; the potential itself only defines the vector magnitude.
const REPULSION_STEER_GAIN: f64 = 4.0;

/// Subtract the summed obstacle potential from the commanded velocity
/// vector. Hits are `(bearing relative to heading, distance)`.
pub fn apply_repulsion(cmd: Command, hits: &[(f64, f64)], tun: &Tunables) -> Command {
    let mut fwd = cmd.v;
    let mut lat = 0.0;
    for &(bearing, d) in hits {
        let phi = repulsion(d, tun).unwrap_or(0.0);
        if phi == 0.0 {
            continue;
        }
        fwd -= phi * bearing.cos();
        lat -= phi * bearing.sin();
    }
    Command {
        v: fwd.clamp(-tun.v_max, tun.v_max),
        omega: (cmd.omega + REPULSION_STEER_GAIN * lat).clamp(-tun.omega_max, tun.omega_max),
    }
}

/// Forward-Euler unicycle step with axis-sliding obstacle clamp. Returns
/// the realized displacement.
fn integrate(map: &WorldMap, pose: &mut Pose, cmd: Command, tun: &Tunables) -> f64 {
    let v = cmd.v.clamp(-tun.v_max, tun.v_max);
    let omega = cmd.omega.clamp(-tun.omega_max, tun.omega_max);
    let dir = Vec2::from_angle(pose.heading);
    let step = dir.scaled(v * tun.dt);
    let from = pose.position;
    let candidates = [
        from + step,
        Vec2::new(from.x + step.x, from.y),
        Vec2::new(from.x, from.y + step.y),
    ];
    let mut moved = from;
    for c in candidates {
        if map.is_free_at(c) {
            moved = c;
            break;
        }
    }
    pose.position = moved;
    pose.heading = wrap_angle(pose.heading + omega * tun.dt);
    moved.distance(from)
}

/// Carve one lidar frame into a guide's local map.
pub fn lidar_update(local: &mut LocalMap, from: Vec2, frame: &SensorFrame, max_range: f64) {
    use crate::world::local::LocalCell;
    let res = local.resolution();
    for &(angle, hit) in &frame.lidar {
        let reach = hit.unwrap_or(max_range);
        let dir = Vec2::from_angle(angle);
        // March in half-cell steps; cheap and monotone.
        let mut s = 0.0;
        while s < reach {
            let p = from + dir.scaled(s);
            if let Some((cx, cy)) = local.cell_at(p) {
                local.observe(cx, cy, LocalCell::Free);
            }
            s += res * 0.5;
        }
        if let Some(h) = hit {
            let p = from + dir.scaled(h + res * 0.5);
            if let Some((cx, cy)) = local.cell_at(p) {
                local.observe(cx, cy, LocalCell::Obstacle);
            }
        }
    }
}

/// Chain-safety counters for the whole episode.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainStats {
    /// Steps where a follower was in Move or Wait.
    pub move_wait_steps: u64,
    /// Of those, steps with parent distance inside [0.3, 3.0] m.
    pub in_band_steps: u64,
    pub recover_entries: u64,
    pub recover_reacquired: u64,
    pub lost_parent_events: u64,
    /// Steps where a link contradicted its assembly-time record.
    pub order_mutations: u64,
}

/// One running episode: world geometry plus all mutable swarm state.
pub struct Sim<'w> {
    pub map: &'w WorldMap,
    pub tun: Tunables,
    pub t: f64,
    pub step_count: u64,
    pub robots: Vec<RobotState>,
    pub comms: CommsBus,
    pub stig: Vec<Replica>,
    pub targets: Vec<Target>,
    pub events: EventLog,
    pub rng: ChaCha8Rng,
    /// Ballistic validation runs skip messaging entirely.
    pub comms_enabled: bool,
    pub n_targets_total: u32,
    pub chain_stats: ChainStats,
    /// Per-target: has its first detection been logged.
    detected: Vec<bool>,
    /// Per-target set of robots that have entered the disc.
    arrived: Vec<Vec<bool>>,
    /// Assembly-time chain records for order-mutation checks.
    chain_records: Vec<Option<(u32, u16, Option<u16>)>>,
    pub mission_complete: bool,
    pub completion_time: Option<f64>,
}

impl<'w> Sim<'w> {
    pub fn new(
        map: &'w WorldMap,
        tun: Tunables,
        robots: Vec<RobotState>,
        targets: Vec<Target>,
        rng: ChaCha8Rng,
        comms_enabled: bool,
    ) -> Self {
        let n = robots.len();
        let nt = targets.len();
        Self {
            map,
            tun,
            t: 0.0,
            step_count: 0,
            robots,
            comms: CommsBus::new(n),
            stig: vec![Replica::new(); n],
            targets,
            events: EventLog::default(),
            rng,
            comms_enabled,
            n_targets_total: nt as u32,
            chain_stats: ChainStats::default(),
            detected: vec![false; nt],
            arrived: vec![vec![false; n]; nt],
            chain_records: vec![None; n],
            mission_complete: false,
            completion_time: None,
        }
    }

    /// Advance the swarm by one control step.
    pub fn step(&mut self) {
        let snap = sensors::snapshot(&self.robots);
        let graph = if self.comms_enabled {
            sensors::build_neighbor_graph(self.map, &snap, self.tun.comm_range)
        } else {
            crate::comms::NeighborGraph::new(self.robots.len())
        };

        for i in 0..self.robots.len() {
            let frame = sensors::build_frame(
                self.map,
                &snap,
                &graph,
                i,
                &self.targets,
                self.map.home.center,
                &self.tun,
            );

            // Guides map continuously while they drive.
            if self.robots[i].kind == RobotKind::Guide {
                let from = self.robots[i].pose.position;
                let range = self.tun.lidar_range;
                if let Some(local) = self.robots[i].local_map.as_mut() {
                    lidar_update(local, from, &frame, range);
                }
            }

            // Target-level first detection.
            if let Some(rad) = frame.radiation {
                let tid = rad.target_id as usize;
                if !self.detected[tid] {
                    self.detected[tid] = true;
                    self.events.push(
                        self.t,
                        self.robots[i].id,
                        EventKind::TargetDetected,
                        format!("target={};dist={:.2}", rad.target_id, rad.distance),
                    );
                    self.targets[tid].status = TargetStatus::Found;
                }
            }

            let inbox = if self.comms_enabled {
                self.comms.take_inbox(i as u16)
            } else {
                Vec::new()
            };

            let quorum = self.targets.first().map(|t| t.quorum).unwrap_or(10);
            let out = behaviors::mission_step(
                &mut self.robots[i],
                &mut self.stig[i],
                behaviors::StepInput {
                    frame: &frame,
                    inbox,
                    t: self.t,
                    tun: &self.tun,
                    home: self.map.home,
                    arena_side: self.map.arena_side(),
                    n_targets_total: self.n_targets_total,
                    quorum,
                    rng: &mut self.rng,
                },
            );

            for (kind, detail) in out.events {
                self.events.push(self.t, self.robots[i].id, kind, detail);
            }
            if self.comms_enabled {
                for msg in out.outgoing {
                    // Oversized messages cannot exist in this taxonomy.
                    let _ = self.comms.enqueue(i as u16, msg);
                }
            }

            // Obstacle potential over short-range hits plus close robots.
            let mut hits: Vec<(f64, f64)> = Vec::new();
            for h in frame.proximity.iter().chain(frame.ultrasound.iter()) {
                if h.distance < self.tun.repulsion_threshold {
                    hits.push((h.bearing, h.distance));
                }
            }
            for n in &frame.neighbors {
                if n.range < self.tun.repulsion_threshold {
                    hits.push((n.bearing, n.range));
                }
            }
            let adjusted = apply_repulsion(out.cmd, &hits, &self.tun);
            self.robots[i].cmd = adjusted;
            let moved = integrate(self.map, &mut self.robots[i].pose, adjusted, &self.tun);
            self.robots[i].recorded_speed = moved / self.tun.dt;
        }

        self.track_arrivals_and_cleanup();
        self.track_chain_safety();

        if self.comms_enabled {
            if self.tun.message_loss > 0.0 {
                self.comms
                    .flush_and_deliver_lossy(&graph, self.tun.message_loss, &mut self.rng);
            } else {
                self.comms.flush_and_deliver(&graph);
            }
        }
        self.step_count += 1;
        self.t = self.step_count as f64 * self.tun.dt;
    }

    fn track_arrivals_and_cleanup(&mut self) {
        let worker_positions: Vec<Vec2> = self
            .robots
            .iter()
            .filter(|r| r.kind == RobotKind::Worker)
            .map(|r| r.pose.position)
            .collect();

        for tid in 0..self.targets.len() {
            if self.targets[tid].status == TargetStatus::CleanupDone {
                continue;
            }
            let target = self.targets[tid].position;
            let radius = self.targets[tid].sense_radius;
            for r in &self.robots {
                if r.kind != RobotKind::Worker {
                    continue;
                }
                if !self.arrived[tid][r.id as usize]
                    && r.pose.position.distance(target) <= radius
                {
                    self.arrived[tid][r.id as usize] = true;
                    self.events.push(
                        self.t,
                        r.id,
                        EventKind::TargetArrival,
                        format!("target={tid}"),
                    );
                }
            }
            let quorum = self.targets[tid].quorum;
            if cleanup_check(target, radius, quorum, &worker_positions) == CleanupStatus::Done {
                self.targets[tid].status = TargetStatus::CleanupDone;
                let reporter = self
                    .robots
                    .iter()
                    .find(|r| {
                        r.kind == RobotKind::Worker
                            && r.pose.position.distance(target) <= radius
                    })
                    .map(|r| r.id)
                    .unwrap_or(0);
                self.events.push(
                    self.t,
                    reporter,
                    EventKind::CleanupDone,
                    format!("target={tid}"),
                );
            }
        }

        if !self.mission_complete
            && self
                .targets
                .iter()
                .all(|t| t.status == TargetStatus::CleanupDone)
        {
            self.mission_complete = true;
            self.completion_time = Some(self.t);
            self.events
                .push(self.t, 0, EventKind::MissionComplete, "all targets done");
        }
    }

    fn track_chain_safety(&mut self) {
        let positions: Vec<Vec2> = self.robots.iter().map(|r| r.pose.position).collect();
        for r in &self.robots {
            let Some(link) = r.chain else {
                if self.chain_records[r.id as usize].is_some() {
                    self.chain_records[r.id as usize] = None;
                }
                continue;
            };
            // Record the assembled shape once the link leaves Forming.
            if link.phase != LinkPhase::Forming {
                let rec = (link.chain_id, link.index, link.parent);
                match self.chain_records[r.id as usize] {
                    None => self.chain_records[r.id as usize] = Some(rec),
                    Some(prev) if prev != rec => self.chain_stats.order_mutations += 1,
                    _ => {}
                }
            }
            if matches!(link.phase, LinkPhase::Move | LinkPhase::Wait) {
                if let Some(parent) = link.parent {
                    let d = positions[r.id as usize].distance(positions[parent as usize]);
                    self.chain_stats.move_wait_steps += 1;
                    if (0.3..=3.0).contains(&d) {
                        self.chain_stats.in_band_steps += 1;
                    }
                }
            }
        }
    }
}

/// Deterministic deployment inside the home disc: guides first, then
/// workers, on a spiral, each with an evenly spread preferred direction.
pub fn deploy_at_home(
    map: &WorldMap,
    strategy: Strategy,
    n_guides: u32,
    n_workers: u32,
) -> Vec<RobotState> {
    let n = (n_guides + n_workers) as usize;
    let home = map.home;
    let mut robots = Vec::with_capacity(n);
    for i in 0..n {
        let kind = if (i as u32) < n_guides {
            RobotKind::Guide
        } else {
            RobotKind::Worker
        };
        // Sunflower spiral keeps bodies separated and inside the disc.
        let frac = (i as f64 + 0.5) / n as f64;
        let r = (home.radius - 0.3) * frac.sqrt();
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        let ang = i as f64 * golden;
        let mut position = home.center + Vec2::from_angle(ang).scaled(r);
        if !map.is_free_at(position) {
            position = map
                .nearest_free_cell(position, home.radius)
                .unwrap_or(home.center);
        }
        let preferred = behaviors::preferred_direction_for(i, n);
        robots.push(make_robot(i as u16, kind, strategy, position, preferred, map));
    }
    robots
}

/// Uniform random poses over free space (model-validation placement).
pub fn deploy_uniform(
    map: &WorldMap,
    strategy: Strategy,
    n_workers: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<RobotState> {
    let side = map.arena_side();
    let mut robots = Vec::with_capacity(n_workers as usize);
    for i in 0..n_workers {
        let mut position;
        loop {
            position = Vec2::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side));
            if map.is_free_at(position) {
                break;
            }
        }
        let heading = rng.gen_range(0.0..std::f64::consts::TAU);
        robots.push(make_robot(
            i as u16,
            RobotKind::Worker,
            strategy,
            position,
            heading,
            map,
        ));
    }
    robots
}

fn make_robot(
    id: u16,
    kind: RobotKind,
    strategy: Strategy,
    position: Vec2,
    preferred: f64,
    map: &WorldMap,
) -> RobotState {
    RobotState {
        id,
        kind,
        pose: Pose {
            position,
            heading: wrap_angle(preferred),
        },
        cmd: Command::default(),
        preferred_direction: wrap_angle(preferred),
        local_map: (kind == RobotKind::Guide)
            .then(|| LocalMap::new(map.width(), map.resolution())),
        chain: None,
        brain: Brain::new(id, kind, strategy, preferred),
        recorded_speed: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tun() -> Tunables {
        Tunables::default()
    }

    #[test]
    fn repulsion_matches_closed_form() {
        let t = tun();
        assert_eq!(repulsion(0.6, &t).unwrap(), 0.0);
        assert!((repulsion(0.3, &t).unwrap() - 0.009).abs() < 1e-12);
        // Strict inequality branch at the threshold.
        assert_eq!(repulsion(0.5, &t).unwrap(), 0.0);
        // Defined as the limit value at contact.
        assert_eq!(repulsion(0.0, &t).unwrap(), 0.0);
        assert!(repulsion(-0.1, &t).is_err());
        // Continuity toward zero.
        assert!(repulsion(1e-9, &t).unwrap() < 1e-12);
    }

    #[test]
    fn repulsion_adjusts_commands() {
        let t = tun();
        let cmd = Command { v: 0.5, omega: 0.0 };
        // No hits: unchanged.
        let same = apply_repulsion(cmd, &[], &t);
        assert_eq!(same, cmd);
        // Head-on hit at 0.3 m shaves the forward speed by phi(0.3).
        let adj = apply_repulsion(cmd, &[(0.0, 0.3)], &t);
        assert!((adj.v - (0.5 - 0.009)).abs() < 1e-12);
        assert_eq!(adj.omega, 0.0);
        // Symmetric side hits cancel laterally.
        let sym = apply_repulsion(
            cmd,
            &[
                (std::f64::consts::FRAC_PI_2, 0.3),
                (-std::f64::consts::FRAC_PI_2, 0.3),
            ],
            &t,
        );
        assert!((sym.omega).abs() < 1e-12);
        assert!((sym.v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn euler_step_moves_along_heading() {
        let map = WorldMap::empty(120, 0.25);
        let t = tun();
        let mut pose = Pose::new(15.0, 15.0, 0.0);
        let moved = integrate(&map, &mut pose, Command { v: 0.5, omega: 0.0 }, &t);
        assert!((moved - 0.05).abs() < 1e-12);
        assert!((pose.position.x - 15.05).abs() < 1e-12);
        // Zero command: no motion.
        let stay = integrate(&map, &mut pose, Command::default(), &t);
        assert_eq!(stay, 0.0);
    }

    #[test]
    fn wall_blocks_motion() {
        let mut map = WorldMap::empty(120, 0.25);
        for cy in 0..120 {
            map.set_cell(64, cy, crate::world::Cell::Obstacle); // x = 16 m
        }
        let t = tun();
        let mut pose = Pose::new(15.99, 15.0, 0.0);
        let moved = integrate(&map, &mut pose, Command { v: 0.5, omega: 0.0 }, &t);
        assert_eq!(moved, 0.0);
        assert!(map.is_free_at(pose.position));
        // Sliding along the wall still works.
        let mut pose = Pose::new(15.99, 15.0, std::f64::consts::FRAC_PI_4);
        let moved = integrate(&map, &mut pose, Command { v: 0.5, omega: 0.0 }, &t);
        assert!(moved > 0.0);
        assert!((pose.position.x - 15.99).abs() < 1e-12);
        assert!(pose.position.y > 15.0);
    }

    #[test]
    fn speed_clamp_holds() {
        let map = WorldMap::empty(120, 0.25);
        let t = tun();
        let mut pose = Pose::new(15.0, 15.0, 0.0);
        let moved = integrate(&map, &mut pose, Command { v: 9.0, omega: 99.0 }, &t);
        assert!(moved / t.dt <= t.v_max + 1e-12);
    }

    #[test]
    fn lidar_carves_free_disc() {
        use crate::world::local::LocalCell;
        let map = WorldMap::empty(120, 0.25); // 30 m arena, all free
        let t = tun();
        let snap = vec![Snapshot {
            position: Vec2::new(15.0, 15.0),
            heading: 0.0,
            kind: RobotKind::Guide,
        }];
        let graph = crate::comms::NeighborGraph::new(1);
        let frame =
            sensors::build_frame(&map, &snap, &graph, 0, &[], map.home.center, &t);
        let mut local = LocalMap::new(map.width(), map.resolution());
        lidar_update(&mut local, Vec2::new(15.0, 15.0), &frame, t.lidar_range);
        // Near cells along rays become free, far cells stay unknown.
        let (cx, cy) = local.cell_at(Vec2::new(15.0, 15.0)).unwrap();
        assert_eq!(local.cell(cx, cy), LocalCell::Free);
        let (fx, fy) = local.cell_at(Vec2::new(21.0, 15.0)).unwrap();
        assert_eq!(local.cell(fx, fy), LocalCell::Free);
        let (ux, uy) = local.cell_at(Vec2::new(28.0, 15.0)).unwrap();
        assert_eq!(local.cell(ux, uy), LocalCell::Unknown);
        assert_eq!(local.conflicts, 0);

        // Repeating the same frame is idempotent.
        let known = local.known_fraction();
        lidar_update(&mut local, Vec2::new(15.0, 15.0), &frame, t.lidar_range);
        assert_eq!(local.known_fraction(), known);
        assert_eq!(local.conflicts, 0);
    }

    #[test]
    fn lidar_marks_wall_cells() {
        use crate::world::local::LocalCell;
        let mut map = WorldMap::empty(120, 0.25);
        for cy in 0..120 {
            map.set_cell(72, cy, crate::world::Cell::Obstacle); // x = 18 m
        }
        let t = tun();
        let snap = vec![Snapshot {
            position: Vec2::new(15.0, 15.0),
            heading: 0.0,
            kind: RobotKind::Guide,
        }];
        let graph = crate::comms::NeighborGraph::new(1);
        let frame =
            sensors::build_frame(&map, &snap, &graph, 0, &[], map.home.center, &t);
        let mut local = LocalMap::new(map.width(), map.resolution());
        lidar_update(&mut local, Vec2::new(15.0, 15.0), &frame, t.lidar_range);
        // Cells on the near side of the wall are free, the wall is marked.
        let (cx, cy) = local.cell_at(Vec2::new(17.5, 15.0)).unwrap();
        assert_eq!(local.cell(cx, cy), LocalCell::Free);
        let (wx, wy) = local.cell_at(Vec2::new(18.1, 15.0)).unwrap();
        assert_eq!(local.cell(wx, wy), LocalCell::Obstacle);
    }
}
