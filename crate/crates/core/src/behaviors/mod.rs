//! Robot decision logic for the radiation-cleanup mission.
//!
//! Every robot runs the same step function; the branches that fire depend
//! on its kind, strategy and current action state. Guides explore with a
//! frontier planner over their own map, report found targets through the
//! shared stigmergy tables, home with a grid planner, negotiate chain
//! leadership by lowest cost, and lead worker chains to targets. Workers
//! explore with the gradient bug navigator, chase radiation gradients,
//! beckon and follow beckons, and join chains by turn-taking election.

pub mod allocate;
pub mod chain;
pub mod planner;
pub mod sgba;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::comms::stigmergy::{MergeOutcome, Replica, Table};
use crate::comms::{Body, LinkPhase, Message, NeighborCmd};
use crate::config::{Strategy, Tunables};
use crate::engine::sensors::SensorFrame;
use crate::engine::{ChainLink, Command, RobotKind, RobotState};
use crate::events::EventKind;
use crate::geom::{angle_diff, wrap_angle, Vec2};
use crate::world::Home;

use chain::FollowerMemory;
use planner::CoverageTracker;
use sgba::{SgbaMode, SgbaState};

/// Seconds a beckon stays fresh after the last broadcast heard.
const BECKON_TTL: f64 = 1.0;
/// Chemotaxis re-evaluation period for target seeking, seconds.
const SEEK_PERIOD: f64 = 0.3;
/// Heading change applied when the radiation gradient worsens.
const SEEK_TURN: f64 = 0.9;
/// Seconds between chain status broadcasts.
const STATUS_PERIOD: f64 = 0.5;
/// Seconds an elector waits for a join response before trying another.
const ELECT_TIMEOUT: f64 = 1.5;
/// Seconds the lead leaves for spare guides to append after the last
/// worker commits.
const SPARE_WINDOW: f64 = 2.0;
/// Follower slot tolerance that counts as "in position" during formation.
const FORMED_BAND: (f64, f64) = (0.55, 1.6);
/// Lead cruise speed fraction while dragging the chain.
const LEAD_SPEED: f64 = 0.55;
/// Bid bonus that makes the guide that found the target win leadership.
const FOUNDER_BONUS: f64 = 1.0e6;
/// How long non-founders hold the leadership decision open for the
/// founder's bid to arrive.
const FOUNDER_GRACE_S: f64 = 10.0;
/// Guide replan back-off, seconds.
const REPLAN_BACKOFF: f64 = 1.0;
/// Considered stuck after this long without progress, seconds.
const STUCK_AFTER: f64 = 2.0;
/// Back-off before a guide with nothing to do re-enters exploration.
const EXPLORE_RETRY_S: f64 = 10.0;

/// Target table value: position, status, discovery time.
pub const TARGET_FOUND: u8 = 0;
pub const TARGET_CHAIN_FORMING: u8 = 1;
pub const TARGET_DONE: u8 = 2;

pub fn encode_target_entry(pos: Vec2, status: u8, found_t: f64) -> Vec<u8> {
    let mut v = Vec::with_capacity(13);
    v.extend_from_slice(&(pos.x as f32).to_le_bytes());
    v.extend_from_slice(&(pos.y as f32).to_le_bytes());
    v.push(status);
    v.extend_from_slice(&(found_t as f32).to_le_bytes());
    v
}

pub fn decode_target_entry(bytes: &[u8]) -> Option<(Vec2, u8, f64)> {
    if bytes.len() != 13 {
        return None;
    }
    let x = f32::from_le_bytes(bytes[0..4].try_into().ok()?) as f64;
    let y = f32::from_le_bytes(bytes[4..8].try_into().ok()?) as f64;
    let status = bytes[8];
    let found_t = f32::from_le_bytes(bytes[9..13].try_into().ok()?) as f64;
    Some((Vec2::new(x, y), status, found_t))
}

const AVAILABLE: u8 = 0;
const BUSY: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Explore,
    TargetSeek,
    NeighbourSeek,
    Beckon,
    Homing,
    WaitForGuides,
    ChainBidding,
    ChainFormation,
    ChainMovement,
    Idle,
    Ballistic,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Action::Explore => "Explore",
            Action::TargetSeek => "TargetSeek",
            Action::NeighbourSeek => "NeighbourSeek",
            Action::Beckon => "Beckon",
            Action::Homing => "Homing",
            Action::WaitForGuides => "WaitForGuides",
            Action::ChainBidding => "ChainBidding",
            Action::ChainFormation => "ChainFormation",
            Action::ChainMovement => "ChainMovement",
            Action::Idle => "Idle",
            Action::Ballistic => "Ballistic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy)]
struct BeckonInfo {
    sender: u16,
    target_id: u32,
    heard_t: f64,
}

/// Mutable decision state carried by each robot.
#[derive(Debug)]
pub struct Brain {
    pub strategy: Strategy,
    pub action: Action,
    pub sgba: SgbaState,

    // Worker seeking.
    beckon: Option<BeckonInfo>,
    last_radiation_dist: Option<f64>,
    seek_eval_t: f64,
    /// A guide announced a new target (heterogeneous homing trigger).
    guide_target_heard: bool,
    availability_put: bool,

    // Guide planning.
    path: Vec<Vec2>,
    path_idx: usize,
    next_replan_t: f64,
    stuck_since: Option<f64>,
    home_arrival_t: Option<f64>,
    found_target: Option<u32>,

    // Allocation.
    bids_put: BTreeSet<u32>,
    alloc_watch: BTreeMap<u32, (usize, f64)>,
    alloc_decided: BTreeSet<u32>,

    // Chain.
    pub follower_mem: FollowerMemory,
    roster: BTreeMap<u16, u16>,
    elect_pending: Option<(u16, f64)>,
    elect_index: Option<u16>,
    elect_rejected: BTreeSet<u16>,
    known_committed: BTreeSet<u16>,
    ready_members: BTreeSet<u16>,
    last_status_t: f64,
    last_worker_commit_t: Option<f64>,
    last_commit_sender: Option<(u16, u16)>,
    lead_hold: bool,

    explore_retry_t: f64,
    /// Radiation-sweep coverage of the arena (guides only).
    coverage: Option<CoverageTracker>,

    // Guide map exchange: per-peer journal cursor and last exchange time.
    mapdiff_peers: BTreeMap<u16, (usize, f64)>,

    // Ballistic rebound.
    turn_goal: Option<f64>,
}

impl Brain {
    pub fn new(id: u16, kind: RobotKind, strategy: Strategy, preferred: f64) -> Self {
        let action = match (kind, strategy) {
            (_, Strategy::Ballistic) => Action::Ballistic,
            (RobotKind::Guide, _) => Action::Explore,
            (RobotKind::Worker, Strategy::Hierarchical) => Action::ChainBidding,
            (RobotKind::Worker, _) => Action::Explore,
        };
        Self {
            strategy,
            action,
            sgba: SgbaState::new(id, preferred),
            beckon: None,
            last_radiation_dist: None,
            seek_eval_t: f64::NEG_INFINITY,
            guide_target_heard: false,
            availability_put: false,
            path: Vec::new(),
            path_idx: 0,
            next_replan_t: 0.0,
            stuck_since: None,
            home_arrival_t: None,
            found_target: None,
            bids_put: BTreeSet::new(),
            alloc_watch: BTreeMap::new(),
            alloc_decided: BTreeSet::new(),
            follower_mem: FollowerMemory::default(),
            roster: BTreeMap::new(),
            elect_pending: None,
            elect_index: None,
            elect_rejected: BTreeSet::new(),
            known_committed: BTreeSet::new(),
            ready_members: BTreeSet::new(),
            last_status_t: f64::NEG_INFINITY,
            last_worker_commit_t: None,
            last_commit_sender: None,
            lead_hold: false,
            explore_retry_t: 0.0,
            coverage: None,
            mapdiff_peers: BTreeMap::new(),
            turn_goal: None,
        }
    }
}

pub struct StepInput<'a> {
    pub frame: &'a SensorFrame,
    pub inbox: Vec<Message>,
    pub t: f64,
    pub tun: &'a Tunables,
    pub home: Home,
    pub arena_side: f64,
    pub n_targets_total: u32,
    pub quorum: u32,
    pub rng: &'a mut ChaCha8Rng,
}

#[derive(Debug, Default)]
pub struct StepOutput {
    pub cmd: Command,
    pub outgoing: Vec<Message>,
    pub events: Vec<(EventKind, String)>,
}

fn transition(robot_brain: &mut Brain, out: &mut StepOutput, to: Action) {
    if robot_brain.action != to {
        out.events.push((
            EventKind::StateTransition,
            format!("from={};to={}", robot_brain.action, to),
        ));
        robot_brain.action = to;
    }
}

/// One behavior step. Consumes the inbox, returns the motion command plus
/// any broadcasts and events.
pub fn mission_step(
    robot: &mut RobotState,
    stig: &mut Replica,
    mut input: StepInput,
) -> StepOutput {
    let mut out = StepOutput::default();
    let me = robot.id;

    // Gossip layer first: stigmergy merges, map diffs, behavior messages.
    let mut behavioral: Vec<Message> = Vec::new();
    let mut answered: BTreeSet<String> = BTreeSet::new();
    for msg in input.inbox.iter() {
        match &msg.body {
            Body::StigmergyPut(put) => match stig.merge(put) {
                MergeOutcome::Applied(p) => {
                    out.outgoing.push(Message::new(me, Body::StigmergyPut(p)));
                }
                MergeOutcome::Stale(local) => {
                    if answered.insert(local.key.clone()) {
                        out.outgoing.push(Message::new(me, Body::StigmergyPut(local)));
                    }
                }
                MergeOutcome::Duplicate => {}
            },
            Body::StigmergyQuery { key } => {
                if let Some(e) = stig.get(key) {
                    if answered.insert(key.clone()) {
                        out.outgoing.push(Message::new(
                            me,
                            Body::StigmergyPut(crate::comms::stigmergy::PutBody {
                                key: key.clone(),
                                lamport: e.lamport,
                                writer: e.writer,
                                value: e.value.clone(),
                            }),
                        ));
                    }
                }
            }
            Body::MapDiff { cells } => {
                if let Some(local) = robot.local_map.as_mut() {
                    local.merge_wire_diff(cells);
                }
            }
            _ => behavioral.push(msg.clone()),
        }
    }

    // Shared bookkeeping from behavior messages.
    for msg in &behavioral {
        match &msg.body {
            Body::NeighborCmd(NeighborCmd::Beckon { target_id }) => {
                if let Some(obs) = input.frame.neighbor(msg.sender) {
                    let better = match robot.brain.beckon {
                        None => true,
                        Some(b) => {
                            b.heard_t + BECKON_TTL < input.t
                                || input
                                    .frame
                                    .neighbor(b.sender)
                                    .map_or(true, |old| {
                                        (obs.range, msg.sender) < (old.range, b.sender)
                                    })
                        }
                    };
                    if better {
                        robot.brain.beckon = Some(BeckonInfo {
                            sender: msg.sender,
                            target_id: *target_id,
                            heard_t: input.t,
                        });
                    } else if let Some(b) = robot.brain.beckon.as_mut() {
                        if b.sender == msg.sender {
                            b.heard_t = input.t;
                        }
                    }
                }
            }
            Body::NeighborCmd(NeighborCmd::NewTargetFound { .. }) => {
                if std::env::var("RADSWARM_DEBUG").is_ok() && !robot.brain.guide_target_heard {
                    eprintln!(
                        "t={:.1} robot {me} heard new-target from {}",
                        input.t, msg.sender
                    );
                }
                robot.brain.guide_target_heard = true;
            }
            Body::ChainJoinResponse {
                chain_id,
                accept,
                index,
            } => {
                if *accept {
                    robot.brain.known_committed.insert(msg.sender);
                    robot.brain.roster.insert(*index, msg.sender);
                    robot.brain.last_commit_sender = Some((msg.sender, *index));
                    if *index <= input.quorum as u16 {
                        robot.brain.last_worker_commit_t = Some(input.t);
                    }
                    let _ = chain_id;
                }
            }
            Body::ChainStatus {
                chain_id, index, phase, ..
            } => {
                if matches!(phase, LinkPhase::Move | LinkPhase::Wait) {
                    robot.brain.roster.insert(*index, msg.sender);
                    robot.brain.ready_members.insert(msg.sender);
                }
                robot.brain.known_committed.insert(msg.sender);
                if robot.chain.map_or(false, |l| l.chain_id == *chain_id) {
                    robot.brain.chain_member_obs.insert(msg.sender, *index);
                }
            }
            _ => {}
        }
    }
    if let Some(b) = robot.brain.beckon {
        if b.heard_t + BECKON_TTL < input.t {
            robot.brain.beckon = None;
        }
    }

    match (robot.kind, robot.brain.strategy) {
        (_, Strategy::Ballistic) => ballistic_step(robot, &mut input, &mut out),
        (RobotKind::Worker, _) => worker_step(robot, stig, &input, &behavioral, &mut out),
        (RobotKind::Guide, _) => guide_step(robot, stig, &input, &behavioral, &mut out),
    }
    out
}

// ---------------------------------------------------------------------------
// Ballistic validation mode
// ---------------------------------------------------------------------------

fn ballistic_step(robot: &mut RobotState, input: &mut StepInput, out: &mut StepOutput) {
    let tun = input.tun;
    let heading = robot.pose.heading;
    let blocked = input
        .frame
        .min_ahead(1.2)
        .map_or(false, |d| d < 0.4)
        || (input.t > 0.5 && robot.recorded_speed < 0.01 && robot.brain.turn_goal.is_none());
    if blocked && robot.brain.turn_goal.is_none() {
        robot.brain.turn_goal = Some(input.rng.gen_range(0.0..std::f64::consts::TAU));
    }
    out.cmd = match robot.brain.turn_goal {
        Some(goal) => {
            let diff = angle_diff(goal, heading);
            if diff.abs() < 0.15 {
                robot.brain.turn_goal = None;
                Command {
                    v: tun.v_max,
                    omega: 0.0,
                }
            } else {
                Command {
                    v: 0.02,
                    omega: (3.0 * diff).clamp(-tun.omega_max, tun.omega_max),
                }
            }
        }
        None => Command {
            v: tun.v_max,
            omega: 0.0,
        },
    };
}

// ---------------------------------------------------------------------------
// Worker logic
// ---------------------------------------------------------------------------

fn worker_step(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    behavioral: &[Message],
    out: &mut StepOutput,
) {
    let me = robot.id;

    if robot.chain.is_some() {
        chained_step(robot, stig, input, behavioral, out);
        return;
    }

    // Gathering states run identically under every strategy: a worker that
    // detached from a chain at the target behaves like any other worker
    // pulled in by a beckon.
    if matches!(
        robot.brain.action,
        Action::Beckon | Action::TargetSeek | Action::NeighbourSeek
    ) {
        if robot.brain.action == Action::Beckon {
            beckon_hold(robot, input, out);
        } else if input.frame.radiation.is_some() {
            target_seek(robot, input, out);
        } else if let Some(b) = robot.brain.beckon {
            neighbour_seek(robot, b, input, out);
        } else {
            // Lost both signals.
            let fallback = match robot.brain.strategy {
                Strategy::Hierarchical => Action::Idle,
                _ => Action::Explore,
            };
            robot.brain.sgba.set_mode(SgbaMode::Outbound);
            robot.brain.sgba.set_preferred(robot.preferred_direction);
            transition(&mut robot.brain, out, fallback);
            out.cmd = Command::default();
        }
        return;
    }

    match robot.brain.strategy {
        Strategy::Hierarchical => {
            debug_assert!(
                !matches!(robot.brain.action, Action::Explore | Action::Homing),
                "hierarchical workers never explore"
            );
            if !robot.brain.availability_put {
                robot.brain.availability_put = true;
                put_and_broadcast(stig, me, Table::AvailableWorkers.key(me), vec![AVAILABLE], out);
            }
            handle_join_requests(robot, stig, input, behavioral, out);
            if robot.chain.is_some() {
                transition(&mut robot.brain, out, Action::ChainFormation);
            }
            out.cmd = Command::default();
        }
        Strategy::Egalitarian | Strategy::Heterogeneous => {
            // Priority ladder: own radiation sensing, then beckons, then the
            // guide's recall, then plain exploration.
            if robot.brain.action == Action::ChainBidding {
                // Waiting at home for mobilization (heterogeneous).
                handle_join_requests(robot, stig, input, behavioral, out);
                if robot.chain.is_some() {
                    transition(&mut robot.brain, out, Action::ChainFormation);
                }
                out.cmd = Command::default();
            } else if robot.brain.action == Action::Idle {
                out.cmd = Command::default();
            } else if input.frame.radiation.is_some() {
                target_seek(robot, input, out);
            } else if let Some(b) = robot.brain.beckon {
                neighbour_seek(robot, b, input, out);
            } else if robot.brain.strategy == Strategy::Heterogeneous
                && robot.brain.guide_target_heard
            {
                inbound_homing(robot, stig, input, out);
            } else {
                if robot.brain.action != Action::Explore {
                    transition(&mut robot.brain, out, Action::Explore);
                    robot.brain.sgba.set_mode(SgbaMode::Outbound);
                    robot.brain.sgba.set_preferred(robot.preferred_direction);
                }
                out.cmd =
                    robot
                        .brain
                        .sgba
                        .step(input.frame, robot.pose.heading, input.t, input.tun);
            }
        }
        Strategy::Ballistic => unreachable!("handled in mission_step"),
    }
}

fn target_seek(robot: &mut RobotState, input: &StepInput, out: &mut StepOutput) {
    let rad = input.frame.radiation.expect("caller checked");
    if robot.brain.action != Action::TargetSeek {
        transition(&mut robot.brain, out, Action::TargetSeek);
        robot.brain.last_radiation_dist = None;
        robot.brain.sgba.set_mode(SgbaMode::Outbound);
    }
    if rad.distance <= input.tun.beckon_standoff {
        transition(&mut robot.brain, out, Action::Beckon);
        beckon_hold(robot, input, out);
        return;
    }
    // Distance-only chemotaxis: hold the heading while closing in,
    // otherwise re-aim by a fixed deterministic turn.
    if input.t - robot.brain.seek_eval_t >= SEEK_PERIOD {
        let heading = robot.pose.heading;
        if let Some(prev) = robot.brain.last_radiation_dist {
            if rad.distance < prev - 0.02 {
                robot.brain.sgba.set_preferred(heading);
            } else {
                let turn = if robot.id % 2 == 0 { SEEK_TURN } else { -SEEK_TURN };
                robot.brain.sgba.set_preferred(heading + turn);
            }
        } else {
            robot.brain.sgba.set_preferred(heading);
        }
        robot.brain.last_radiation_dist = Some(rad.distance);
        robot.brain.seek_eval_t = input.t;
    }
    out.cmd = robot
        .brain
        .sgba
        .step(input.frame, robot.pose.heading, input.t, input.tun);
}

fn beckon_hold(robot: &mut RobotState, input: &StepInput, out: &mut StepOutput) {
    match input.frame.radiation {
        Some(rad) => {
            out.outgoing.push(Message::new(
                robot.id,
                Body::NeighborCmd(NeighborCmd::Beckon {
                    target_id: rad.target_id,
                }),
            ));
            // Hold the standoff ring.
            out.cmd = if rad.distance > input.tun.beckon_standoff + 0.5 {
                // Drifted out; close back in.
                robot.brain.last_radiation_dist = None;
                transition(&mut robot.brain, out, Action::TargetSeek);
                return target_seek(robot, input, out);
            } else {
                Command::default()
            };
        }
        None => {
            // Radiation gone: the target was cleaned.
            let next = match robot.brain.strategy {
                Strategy::Egalitarian => Action::Explore,
                _ => Action::Idle,
            };
            robot.brain.sgba.set_mode(SgbaMode::Outbound);
            robot.brain.sgba.set_preferred(robot.preferred_direction);
            transition(&mut robot.brain, out, next);
            out.cmd = Command::default();
        }
    }
}

fn neighbour_seek(
    robot: &mut RobotState,
    beckon: BeckonInfo,
    input: &StepInput,
    out: &mut StepOutput,
) {
    if robot.brain.action != Action::NeighbourSeek {
        transition(&mut robot.brain, out, Action::NeighbourSeek);
        robot.brain.sgba.set_mode(SgbaMode::Outbound);
    }
    if let Some(obs) = input.frame.neighbor(beckon.sender) {
        robot
            .brain
            .sgba
            .set_preferred(robot.pose.heading + obs.bearing);
    }
    out.cmd = robot
        .brain
        .sgba
        .step(input.frame, robot.pose.heading, input.t, input.tun);
}

fn inbound_homing(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    out: &mut StepOutput,
) {
    let me = robot.id;
    if robot.brain.action != Action::Homing {
        transition(&mut robot.brain, out, Action::Homing);
        robot.brain.sgba.set_mode(SgbaMode::Inbound);
    }
    let d = robot.pose.position.distance(input.home.center);
    if d <= input.home.radius {
        put_and_broadcast(stig, me, Table::AvailableWorkers.key(me), vec![AVAILABLE], out);
        robot.brain.availability_put = true;
        robot.brain.sgba.set_mode(SgbaMode::Outbound);
        transition(&mut robot.brain, out, Action::ChainBidding);
        out.cmd = Command::default();
        return;
    }
    out.cmd = robot
        .brain
        .sgba
        .step(input.frame, robot.pose.heading, input.t, input.tun);
}

/// Accept the first chain election addressed to us; reject later ones.
fn handle_join_requests(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    behavioral: &[Message],
    out: &mut StepOutput,
) {
    let me = robot.id;
    for msg in behavioral {
        let Body::ChainJoinRequest {
            chain_id,
            elected,
            index,
        } = msg.body
        else {
            continue;
        };
        if elected != me {
            continue;
        }
        if robot.chain.is_none() {
            robot.chain = Some(ChainLink {
                chain_id,
                index,
                parent: Some(msg.sender),
                child: None,
                phase: LinkPhase::Forming,
            });
            robot.brain.follower_mem = FollowerMemory::default();
            put_and_broadcast(stig, me, Table::AvailableWorkers.key(me), vec![BUSY], out);
            out.outgoing.push(Message::new(
                me,
                Body::ChainJoinResponse {
                    chain_id,
                    accept: true,
                    index,
                },
            ));
            // Turn-taking: a worker that is not the last required link
            // elects the next one.
            if index < input.quorum as u16 {
                robot.brain.elect_index = Some(index + 1);
                robot.brain.elect_pending = None;
                robot.brain.elect_rejected.clear();
            }
        } else {
            out.outgoing.push(Message::new(
                me,
                Body::ChainJoinResponse {
                    chain_id,
                    accept: false,
                    index,
                },
            ));
        }
    }
}

/// Run the election duty of a committed link: pick the nearest uncommitted
/// worker and ask it to take the next slot.
fn election_duty(
    robot: &mut RobotState,
    input: &StepInput,
    behavioral: &[Message],
    out: &mut StepOutput,
) {
    let Some(next_index) = robot.brain.elect_index else {
        return;
    };
    let chain_id = match robot.chain {
        Some(l) => l.chain_id,
        None => return,
    };
    // Did our candidate answer?
    if let Some((cand, _)) = robot.brain.elect_pending {
        for msg in behavioral {
            if msg.sender != cand {
                continue;
            }
            if let Body::ChainJoinResponse { accept, index, .. } = msg.body {
                if index == next_index {
                    if accept {
                        if let Some(link) = robot.chain.as_mut() {
                            if link.child.is_none() {
                                link.child = Some(cand);
                            }
                        }
                        robot.brain.elect_index = None;
                        robot.brain.elect_pending = None;
                        return;
                    }
                    robot.brain.elect_rejected.insert(cand);
                    robot.brain.elect_pending = None;
                }
            }
        }
    }
    if let Some((_, sent)) = robot.brain.elect_pending {
        if input.t - sent > ELECT_TIMEOUT {
            if let Some((cand, _)) = robot.brain.elect_pending.take() {
                robot.brain.elect_rejected.insert(cand);
            }
        } else {
            return;
        }
    }
    // Nearest available worker in sight, ties to the lower id.
    let candidate = input
        .frame
        .neighbors
        .iter()
        .filter(|n| {
            n.kind == RobotKind::Worker
                && !robot.brain.known_committed.contains(&n.id)
                && !robot.brain.elect_rejected.contains(&n.id)
        })
        .min_by(|a, b| a.range.total_cmp(&b.range).then(a.id.cmp(&b.id)));
    if let Some(c) = candidate {
        out.outgoing.push(Message::new(
            robot.id,
            Body::ChainJoinRequest {
                chain_id,
                elected: c.id,
                index: next_index,
            },
        ));
        robot.brain.elect_pending = Some((c.id, input.t));
    }
    // No candidate: assembly stalls until someone becomes available.
}

/// Periodic chain status broadcast.
fn broadcast_status(robot: &mut RobotState, input: &StepInput, out: &mut StepOutput) {
    let Some(link) = robot.chain else { return };
    if input.t - robot.brain.last_status_t >= STATUS_PERIOD {
        robot.brain.last_status_t = input.t;
        out.outgoing.push(Message::new(
            robot.id,
            Body::ChainStatus {
                chain_id: link.chain_id,
                index: link.index,
                phase: link.phase,
            },
        ));
    }
}

/// Chain-member step for workers and spare guides (everyone but the lead).
fn chained_step(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    behavioral: &[Message],
    out: &mut StepOutput,
) {
    let me = robot.id;
    let link_snapshot = robot.chain.expect("caller checked");

    // Arrived: the target is close and the lead beckons; leave the chain
    // and gather on the beckoner. Peeling is gated on the child having
    // caught up, so the pacing protocol never loses the robots behind us.
    if let Some(rad) = input.frame.radiation {
        let child_safe = link_snapshot.child.map_or(true, |c| {
            input
                .frame
                .neighbor(c)
                .map_or(false, |o| o.range <= input.tun.chain_stop)
        });
        if rad.target_id == link_snapshot.chain_id
            && child_safe
            && robot
                .brain
                .beckon
                .map_or(false, |b| b.target_id == link_snapshot.chain_id)
        {
            robot.chain = None;
            robot.brain.sgba.set_mode(SgbaMode::Outbound);
            transition(&mut robot.brain, out, Action::NeighbourSeek);
            if rad.distance <= input.tun.beckon_standoff {
                transition(&mut robot.brain, out, Action::Beckon);
                beckon_hold(robot, input, out);
            } else if let Some(b) = robot.brain.beckon {
                neighbour_seek(robot, b, input, out);
            }
            return;
        }
    }

    election_duty(robot, input, behavioral, out);
    handle_join_requests(robot, stig, input, behavioral, out); // answer rejections
    broadcast_status(robot, input, out);

    let parent = link_snapshot.parent.expect("non-lead link");
    let parent_obs = input.frame.neighbor(parent).and_then(|n| {
        let fov = input.tun.chain_fov_deg.to_radians();
        (n.bearing.abs() <= fov).then_some((n.range, n.bearing))
    });
    let mut wait_rx = false;
    let mut move_rx = false;
    for msg in behavioral {
        match msg.body {
            Body::ParentWait { parent } if parent == me => wait_rx = true,
            Body::ParentMove { parent } if parent == me => move_rx = true,
            Body::ChainStatus { phase, .. } if msg.sender == parent => {
                robot.brain.follower_mem.parent_waiting = phase == LinkPhase::Wait;
            }
            _ => {}
        }
    }

    let link = robot.chain.as_mut().expect("still chained");
    match link.phase {
        LinkPhase::Forming => {
            match parent_obs {
                None => {
                    // Scan for the parent without leaving Forming.
                    out.cmd = Command {
                        v: 0.0,
                        omega: 0.8 * input.tun.omega_max,
                    };
                }
                Some((range, bearing)) => {
                    if (FORMED_BAND.0..=FORMED_BAND.1).contains(&range) {
                        link.phase = LinkPhase::Move;
                        transition(&mut robot.brain, out, Action::ChainMovement);
                        out.cmd = Command::default();
                    } else {
                        let v = (0.8 * (range - input.tun.chain_follow)).clamp(0.0, input.tun.v_max);
                        out.cmd = Command {
                            v: if bearing.abs() > 0.8 { 0.05 } else { v },
                            omega: (2.5 * bearing).clamp(-input.tun.omega_max, input.tun.omega_max),
                        };
                        if robot.brain.action != Action::ChainFormation {
                            transition(&mut robot.brain, out, Action::ChainFormation);
                        }
                    }
                }
            }
        }
        LinkPhase::Move | LinkPhase::Wait | LinkPhase::Recover => {
            let parent_waiting = robot.brain.follower_mem.parent_waiting;
            let (cmd, result) = chain::follower_step(
                me,
                link,
                &mut robot.brain.follower_mem,
                parent_obs,
                parent_waiting,
                wait_rx,
                move_rx,
                input.tun.dt,
                input.tun,
            );
            out.cmd = cmd;
            out.outgoing.extend(result.messages);
            if result.lost_parent {
                out.events
                    .push((EventKind::ParentLost, format!("parent={parent}")));
            }
            if result.reacquired {
                out.events
                    .push((EventKind::ParentRecovered, format!("parent={parent}")));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Guide logic
// ---------------------------------------------------------------------------

fn guide_step(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    behavioral: &[Message],
    out: &mut StepOutput,
) {
    let me = robot.id;
    debug_assert!(robot.local_map.is_some(), "guides carry a map");

    // Keep the radiation-sweep record current wherever the guide is.
    if robot.brain.coverage.is_none() {
        robot.brain.coverage = Some(CoverageTracker::new(
            input.arena_side,
            input.tun.radiation_range,
        ));
    }
    if let Some(cov) = robot.brain.coverage.as_mut() {
        cov.mark(robot.pose.position);
    }

    share_map_diffs(robot, input, out);

    // Lead and spare-guide chain duties.
    if robot.chain.is_some() {
        let is_lead = robot.chain.map_or(false, |l| l.index == 0);
        if is_lead {
            lead_step(robot, stig, input, behavioral, out);
        } else {
            chained_step(robot, stig, input, behavioral, out);
        }
        return;
    }

    match robot.brain.action {
        Action::Explore => {
            if let Some(rad) = input.frame.radiation {
                let key = Table::ListOfTargets.key(rad.target_id);
                if stig.get(&key).is_none() {
                    let pos = rad.position.expect("guides resolve target locations");
                    put_and_broadcast(
                        stig,
                        me,
                        key,
                        encode_target_entry(pos, TARGET_FOUND, input.t),
                        out,
                    );
                    out.outgoing.push(Message::new(
                        me,
                        Body::NeighborCmd(NeighborCmd::NewTargetFound {
                            target_id: rad.target_id,
                            x: pos.x as f32,
                            y: pos.y as f32,
                        }),
                    ));
                    robot.brain.found_target = Some(rad.target_id);
                    robot.brain.path.clear();
                    transition(&mut robot.brain, out, Action::Homing);
                    out.cmd = Command::default();
                    return;
                }
            }
            if robot.brain.guide_target_heard || pending_targets(stig).next().is_some() {
                // Another robot reported a target: return home to negotiate.
                robot.brain.path.clear();
                transition(&mut robot.brain, out, Action::Homing);
                out.cmd = Command::default();
                return;
            }
            out.cmd = explore_drive(robot, input, out);
        }
        Action::Homing => {
            let d = robot.pose.position.distance(input.home.center);
            if d <= input.home.radius {
                robot.brain.home_arrival_t = Some(input.t);
                robot.brain.path.clear();
                put_and_broadcast(stig, me, Table::AvailableGuides.key(me), vec![AVAILABLE], out);
                transition(&mut robot.brain, out, Action::WaitForGuides);
                out.cmd = Command::default();
                return;
            }
            out.cmd = drive_to(robot, input, input.home.center, out);
        }
        Action::WaitForGuides => {
            out.cmd = Command::default();
            wait_and_negotiate(robot, stig, input, behavioral, out);
        }
        Action::ChainBidding => {
            // Lead without a chain link cannot happen; bidding is resolved
            // in WaitForGuides.
            transition(&mut robot.brain, out, Action::WaitForGuides);
            out.cmd = Command::default();
        }
        Action::Idle => {
            out.cmd = Command::default();
        }
        other => {
            debug_assert!(false, "illegal guide action {other}");
            out.cmd = Command::default();
        }
    }
}

/// Found targets not yet served, in discovery order.
fn pending_targets(stig: &Replica) -> impl Iterator<Item = (u32, Vec2, f64)> + '_ {
    let mut found: Vec<(u32, Vec2, f64)> = stig
        .iter_table(Table::ListOfTargets)
        .filter_map(|(suffix, entry)| {
            let id: u32 = suffix.parse().ok()?;
            let (pos, status, found_t) = decode_target_entry(&entry.value)?;
            (status == TARGET_FOUND).then_some((id, pos, found_t))
        })
        .collect();
    found.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    found.into_iter()
}

fn known_target_count(stig: &Replica) -> usize {
    stig.iter_table(Table::ListOfTargets).count()
}

fn target_entry(stig: &Replica, target_id: u32) -> Option<(Vec2, u8, f64)> {
    stig.get_in(Table::ListOfTargets, target_id)
        .and_then(|e| decode_target_entry(&e.value))
}

/// Guide at home: bid for chain leadership over the cost table and decide
/// after the table goes quiet.
fn wait_and_negotiate(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    _behavioral: &[Message],
    out: &mut StepOutput,
) {
    let me = robot.id;
    let eligible = match robot.brain.strategy {
        Strategy::Heterogeneous => robot
            .brain
            .home_arrival_t
            .map_or(false, |t0| input.t - t0 >= input.tun.guide_wait_s),
        _ => true,
    };
    if !eligible {
        return;
    }

    let Some((target_id, target_pos, _)) = pending_targets(stig).next() else {
        if std::env::var("RADSWARM_DEBUG").is_ok() {
            eprintln!(
                "t={:.1} guide {me} no-pending: replica_len={} known={} entries={:?}",
                input.t,
                stig.len(),
                known_target_count(stig),
                stig.snapshot().iter().map(|(k, l, w, v)| (k.clone(), *l, *w, v.len())).collect::<Vec<_>>()
            );
        }
        // Nothing pending: explore if targets remain, otherwise idle. The
        // cooldown keeps a guide whose exploration is exhausted from
        // bouncing between home and the field every step.
        if (known_target_count(stig) as u32) < input.n_targets_total {
            if input.t >= robot.brain.explore_retry_t {
                robot.brain.explore_retry_t = input.t + EXPLORE_RETRY_S;
                put_and_broadcast(stig, me, Table::AvailableGuides.key(me), vec![BUSY], out);
                robot.brain.guide_target_heard = false;
                robot.brain.path.clear();
                robot.brain.next_replan_t = 0.0;
                transition(&mut robot.brain, out, Action::Explore);
            }
        } else if all_targets_done(stig, input.n_targets_total) {
            transition(&mut robot.brain, out, Action::Idle);
        }
        return;
    };

    if robot.brain.alloc_decided.contains(&target_id) {
        // Lost the bid; stand by as a spare.
        spare_append(robot, stig, input, out);
        return;
    }

    if !robot.brain.bids_put.contains(&target_id) {
        let mut cost = robot.brain.home_arrival_t.unwrap_or(input.t);
        if robot.brain.found_target == Some(target_id) {
            cost -= FOUNDER_BONUS;
        }
        put_and_broadcast(
            stig,
            me,
            allocate::bid_key(target_id, me),
            allocate::encode_cost(cost),
            out,
        );
        robot.brain.bids_put.insert(target_id);
        out.outgoing.push(Message::new(
            me,
            Body::TaskAllocState {
                round: target_id as u16,
                target_id,
            },
        ));
    }

    // Quiescence: the bid set must hold still before the decision fires.
    let bids = allocate::bids_for(stig, target_id);
    let watch = robot
        .brain
        .alloc_watch
        .entry(target_id)
        .or_insert((0, input.t));
    if bids.len() != watch.0 {
        *watch = (bids.len(), input.t);
        return;
    }
    if input.t - watch.1 < input.tun.alloc_quiescence_s {
        return;
    }
    // The guide that found the target leads when present: give its bid
    // time to come home before deciding without it.
    let founder_visible = bids.iter().any(|(_, c)| *c < -FOUNDER_BONUS / 2.0);
    let waited = robot
        .brain
        .home_arrival_t
        .map_or(0.0, |t0| input.t - t0);
    if !founder_visible && robot.brain.found_target != Some(target_id) && waited < FOUNDER_GRACE_S
    {
        return;
    }

    let winner = match allocate::allocate(&bids) {
        Ok(w) => w,
        Err(_) => return,
    };
    robot.brain.alloc_decided.insert(target_id);
    out.events.push((
        EventKind::StateTransition,
        format!("alloc_decided;target={target_id};winner={winner}"),
    ));
    if winner == me {
        // Mark the target as being served and become the lead.
        put_and_broadcast(
            stig,
            me,
            Table::ListOfTargets.key(target_id),
            encode_target_entry(target_pos, TARGET_CHAIN_FORMING, 0.0),
            out,
        );
        put_and_broadcast(stig, me, Table::AvailableGuides.key(me), vec![BUSY], out);
        robot.chain = Some(ChainLink {
            chain_id: target_id,
            index: 0,
            parent: None,
            child: None,
            phase: LinkPhase::Forming,
        });
        robot.brain.roster.clear();
        robot.brain.roster.insert(0, me);
        robot.brain.ready_members.clear();
        robot.brain.elect_index = Some(1);
        robot.brain.elect_pending = None;
        robot.brain.elect_rejected.clear();
        robot.brain.last_worker_commit_t = None;
        transition(&mut robot.brain, out, Action::ChainBidding);
    }
}

fn all_targets_done(stig: &Replica, total: u32) -> bool {
    let done = stig
        .iter_table(Table::ListOfTargets)
        .filter_map(|(_, e)| decode_target_entry(&e.value))
        .filter(|(_, status, _)| *status == TARGET_DONE)
        .count() as u32;
    done >= total
}

/// A guide that lost the bid appends itself to the tail once the last
/// required worker has committed.
fn spare_append(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    out: &mut StepOutput,
) {
    let me = robot.id;
    let Some((last_sender, last_index)) = robot.brain.last_commit_sender else {
        return;
    };
    if last_index < input.quorum as u16 {
        return;
    }
    // Rank among the available guides decides who appends next.
    let mut available: Vec<u16> = stig
        .iter_table(Table::AvailableGuides)
        .filter_map(|(suffix, e)| {
            let id: u16 = suffix.parse().ok()?;
            (e.value.first() == Some(&AVAILABLE)).then_some(id)
        })
        .collect();
    available.sort_unstable();
    if available.first() != Some(&me) {
        return;
    }
    let index = last_index + 1;
    robot.chain = Some(ChainLink {
        chain_id: 0,
        index,
        parent: Some(last_sender),
        child: None,
        phase: LinkPhase::Forming,
    });
    // Rebind the chain id from the target being served.
    if let Some((tid, _, _)) = serving_target(stig) {
        if let Some(l) = robot.chain.as_mut() {
            l.chain_id = tid;
        }
    }
    robot.brain.follower_mem = FollowerMemory::default();
    put_and_broadcast(stig, me, Table::AvailableGuides.key(me), vec![BUSY], out);
    out.outgoing.push(Message::new(
        me,
        Body::ChainJoinResponse {
            chain_id: robot.chain.map(|l| l.chain_id).unwrap_or(0),
            accept: true,
            index,
        },
    ));
    transition(&mut robot.brain, out, Action::ChainFormation);
}

fn serving_target(stig: &Replica) -> Option<(u32, Vec2, f64)> {
    stig.iter_table(Table::ListOfTargets)
        .filter_map(|(suffix, entry)| {
            let id: u32 = suffix.parse().ok()?;
            let (pos, status, found_t) = decode_target_entry(&entry.value)?;
            (status == TARGET_CHAIN_FORMING).then_some((id, pos, found_t))
        })
        .next()
}

/// The chain lead: election, formation readiness, then path-following to
/// the target with pacing from its first follower.
fn lead_step(
    robot: &mut RobotState,
    stig: &mut Replica,
    input: &StepInput,
    behavioral: &[Message],
    out: &mut StepOutput,
) {
    let me = robot.id;
    let chain_id = robot.chain.map(|l| l.chain_id).unwrap_or(0);
    broadcast_status(robot, input, out);
    election_duty(robot, input, behavioral, out);

    for msg in behavioral {
        match msg.body {
            Body::ParentWait { parent } if parent == me => robot.brain.lead_hold = true,
            Body::ParentMove { parent } if parent == me => robot.brain.lead_hold = false,
            _ => {}
        }
    }

    match robot.brain.action {
        Action::ChainBidding => {
            out.cmd = Command::default();
            // Workers committed so far are tracked through responses.
            let workers_done = (1..=input.quorum as u16)
                .all(|i| robot.brain.roster.contains_key(&i));
            if workers_done {
                let spare_window_over = robot
                    .brain
                    .last_worker_commit_t
                    .map_or(true, |t0| input.t - t0 >= SPARE_WINDOW);
                if spare_window_over {
                    out.events.push((
                        EventKind::ChainAssembled,
                        format!("chain={chain_id};links={}", robot.brain.roster.len()),
                    ));
                    transition(&mut robot.brain, out, Action::ChainFormation);
                }
            }
        }
        Action::ChainFormation => {
            out.cmd = Command::default();
            // Wait until every committed member has reported itself moving.
            let all_ready = robot
                .brain
                .roster
                .iter()
                .filter(|(idx, _)| **idx > 0)
                .all(|(_, id)| robot.brain.ready_members.contains(id));
            if all_ready {
                if let Some(l) = robot.chain.as_mut() {
                    l.phase = LinkPhase::Move;
                }
                robot.brain.path.clear();
                transition(&mut robot.brain, out, Action::ChainMovement);
            }
        }
        Action::ChainMovement => {
            let target = target_entry(stig, chain_id).map(|(pos, _, _)| pos);
            let Some(target_pos) = target else {
                out.cmd = Command::default();
                return;
            };
            // Arrival: park at the standoff ring and call the workers in.
            if let Some(rad) = input.frame.radiation {
                if rad.target_id == chain_id && rad.distance <= input.tun.beckon_standoff {
                    out.outgoing.push(Message::new(
                        me,
                        Body::NeighborCmd(NeighborCmd::Beckon { target_id: chain_id }),
                    ));
                    if let Some(l) = robot.chain.as_mut() {
                        l.phase = LinkPhase::Wait;
                    }
                    out.cmd = Command::default();
                    return;
                }
            }
            // The target disc went quiet: cleanup finished.
            if target_entry(stig, chain_id).map(|(_, s, _)| s) == Some(TARGET_DONE)
                || (robot.chain.map_or(false, |l| l.phase == LinkPhase::Wait)
                    && input.frame.radiation.is_none())
            {
                let (pos, _, found_t) = target_entry(stig, chain_id)
                    .unwrap_or((target_pos, TARGET_DONE, 0.0));
                put_and_broadcast(
                    stig,
                    me,
                    Table::ListOfTargets.key(chain_id),
                    encode_target_entry(pos, TARGET_DONE, found_t),
                    out,
                );
                robot.chain = None;
                robot.brain.roster.clear();
                robot.brain.ready_members.clear();
                robot.brain.path.clear();
                if (known_target_count(stig) as u32) < input.n_targets_total {
                    transition(&mut robot.brain, out, Action::Explore);
                } else if pending_targets(stig).next().is_some() {
                    transition(&mut robot.brain, out, Action::Homing);
                } else {
                    transition(&mut robot.brain, out, Action::Idle);
                }
                out.cmd = Command::default();
                return;
            }
            if robot.brain.lead_hold {
                if let Some(l) = robot.chain.as_mut() {
                    l.phase = LinkPhase::Wait;
                }
                out.cmd = Command::default();
                return;
            }
            if let Some(l) = robot.chain.as_mut() {
                l.phase = LinkPhase::Move;
            }
            let mut cmd = drive_to(robot, input, target_pos, out);
            cmd.v = cmd.v.min(LEAD_SPEED * input.tun.v_max);
            out.cmd = cmd;
        }
        _ => {
            out.cmd = Command::default();
        }
    }
}

/// Broadcast incremental map journals to guide neighbors on the exchange
/// period. Newly met peers get the whole journal.
fn share_map_diffs(robot: &mut RobotState, input: &StepInput, out: &mut StepOutput) {
    let Some(local) = robot.local_map.as_ref() else {
        return;
    };
    let journal_len = local.journal().len();
    let mut min_cursor = usize::MAX;
    let mut due = Vec::new();
    for n in &input.frame.neighbors {
        if n.kind != RobotKind::Guide {
            continue;
        }
        let (cursor, last_t) = robot
            .brain
            .mapdiff_peers
            .get(&n.id)
            .copied()
            .unwrap_or((0, f64::NEG_INFINITY));
        if input.t - last_t >= input.tun.mapdiff_period_s && cursor < journal_len {
            due.push(n.id);
            min_cursor = min_cursor.min(cursor);
        }
    }
    if due.is_empty() {
        return;
    }
    let cells = robot.local_map.as_ref().unwrap().journal()[min_cursor..].to_vec();
    out.outgoing
        .push(Message::new(robot.id, Body::MapDiff { cells }));
    for id in due {
        robot
            .brain
            .mapdiff_peers
            .insert(id, (journal_len, input.t));
    }
}

/// Follow the current exploration path, replanning when exhausted or stuck.
fn explore_drive(robot: &mut RobotState, input: &StepInput, out: &mut StepOutput) -> Command {
    let pose = robot.pose.position;
    track_stuck(robot, input);
    let need_plan = robot.brain.path.is_empty()
        || robot.brain.path_idx >= robot.brain.path.len()
        || robot.brain.stuck_since.map_or(false, |s| input.t - s > STUCK_AFTER);
    if need_plan && input.t >= robot.brain.next_replan_t {
        robot.brain.next_replan_t = input.t + REPLAN_BACKOFF;
        robot.brain.stuck_since = None;
        let local = robot.local_map.as_ref().expect("guide");
        match planner::frontier_plan(local, pose, robot.preferred_direction) {
            Ok(path) => {
                robot.brain.path = path;
                robot.brain.path_idx = 0;
            }
            Err(_) => {
                // Map frontiers are gone, but the radiation sensor may not
                // have swept everywhere: visit the nearest unswept spot.
                let sweep_goal = robot
                    .brain
                    .coverage
                    .as_ref()
                    .and_then(|cov| cov.nearest_uncovered(local, pose));
                match sweep_goal.and_then(|g| planner::homing_plan(local, pose, g).ok()) {
                    Some(path) => {
                        robot.brain.path = path;
                        robot.brain.path_idx = 0;
                    }
                    None => {
                        // Swept everything reachable: home.
                        robot.brain.path.clear();
                        transition(&mut robot.brain, out, Action::Homing);
                        return Command::default();
                    }
                }
            }
        }
    }
    follow_path(robot, input.tun)
}

/// Plan toward an explicit goal over the local map and follow it.
fn drive_to(
    robot: &mut RobotState,
    input: &StepInput,
    goal: Vec2,
    _out: &mut StepOutput,
) -> Command {
    let pose = robot.pose.position;
    track_stuck(robot, input);
    let need_plan = robot.brain.path.is_empty()
        || robot.brain.path_idx >= robot.brain.path.len()
        || robot.brain.stuck_since.map_or(false, |s| input.t - s > STUCK_AFTER);
    if need_plan && input.t >= robot.brain.next_replan_t {
        robot.brain.next_replan_t = input.t + REPLAN_BACKOFF;
        robot.brain.stuck_since = None;
        let local = robot.local_map.as_ref().expect("guide");
        match planner::homing_plan(local, pose, goal) {
            Ok(path) => {
                robot.brain.path = path;
                robot.brain.path_idx = 0;
            }
            Err(_) => {
                // Goal beyond known space: explore toward its bearing.
                let bearing = (goal - pose).angle();
                match planner::frontier_plan(local, pose, bearing) {
                    Ok(path) => {
                        robot.brain.path = path;
                        robot.brain.path_idx = 0;
                    }
                    Err(_) => return Command::default(),
                }
            }
        }
    }
    follow_path(robot, input.tun)
}

fn track_stuck(robot: &mut RobotState, input: &StepInput) {
    if !robot.brain.path.is_empty() && robot.recorded_speed < 0.02 {
        if robot.brain.stuck_since.is_none() {
            robot.brain.stuck_since = Some(input.t);
        }
    } else {
        robot.brain.stuck_since = None;
    }
}

fn follow_path(robot: &mut RobotState, tun: &Tunables) -> Command {
    let pose = robot.pose.position;
    while robot.brain.path_idx < robot.brain.path.len()
        && pose.distance(robot.brain.path[robot.brain.path_idx]) < 0.3
    {
        robot.brain.path_idx += 1;
    }
    // Shortcut forward only along provably free straight lines, so the
    // robot never cuts a corner it cannot see through.
    if let Some(local) = robot.local_map.as_ref() {
        while robot.brain.path_idx + 1 < robot.brain.path.len()
            && planner::segment_is_free(local, pose, robot.brain.path[robot.brain.path_idx + 1])
        {
            robot.brain.path_idx += 1;
        }
    }
    let Some(&wp) = robot.brain.path.get(robot.brain.path_idx) else {
        return Command::default();
    };
    let bearing = angle_diff((wp - pose).angle(), robot.pose.heading);
    let v = if bearing.abs() > 1.0 {
        0.05
    } else {
        tun.v_max * (1.0 - 0.7 * bearing.abs())
    };
    Command {
        v: v.clamp(0.0, tun.v_max),
        omega: (2.5 * bearing).clamp(-tun.omega_max, tun.omega_max),
    }
}

fn put_and_broadcast(
    stig: &mut Replica,
    me: u16,
    key: String,
    value: Vec<u8>,
    out: &mut StepOutput,
) {
    if let Ok(put) = stig.put(me, key, value) {
        out.outgoing.push(Message::new(me, Body::StigmergyPut(put)));
    }
}

pub fn preferred_direction_for(index: usize, total: usize) -> f64 {
    wrap_angle(index as f64 * std::f64::consts::TAU / total.max(1) as f64)
}
