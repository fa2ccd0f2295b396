//! Proximity-limited broadcast with a per-step byte quota.
//!
//! Every robot owns a prioritized outbox. At the end of a control step the
//! outbox is flushed up to the 500-byte quota and the flushed messages are
//! delivered to all current neighbors at the start of the next step.
//! Delivery is loss-free within range by default; map-diff exchanges between
//! guides bypass the quota and are rate-limited by their sender instead.

pub mod stigmergy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Broadcast byte budget per robot per control step.
pub const BYTE_QUOTA: usize = 500;
/// Broadcast reach in meters (line of sight required).
pub const COMM_RANGE: f64 = 10.0;
/// Serialized ceiling for every message kind except map diffs.
pub const SMALL_MESSAGE_LIMIT: usize = 64;

/// Neighbor-broadcast command carried between robots in range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NeighborCmd {
    /// A guide identified a new target; guides carry its mapped location.
    NewTargetFound { target_id: u32, x: f32, y: f32 },
    /// A worker parked at a target calls nearby workers in.
    Beckon { target_id: u32 },
}

/// Chain-link motion state carried by status broadcasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkPhase {
    Forming,
    Move,
    Wait,
    Recover,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    NeighborCmd(NeighborCmd),
    /// Current task-allocation round and the target it negotiates.
    TaskAllocState { round: u16, target_id: u32 },
    /// `elector` asks `elected` to take chain slot `index`.
    ChainJoinRequest {
        chain_id: u32,
        elected: u16,
        index: u16,
    },
    ChainJoinResponse {
        chain_id: u32,
        accept: bool,
        index: u16,
    },
    /// Child fell behind: addressed parent should hold position.
    ParentWait { parent: u16 },
    /// Child caught up: addressed parent may move again.
    ParentMove { parent: u16 },
    /// Commitment status, used to find electable robots.
    ChainStatus {
        chain_id: u32,
        index: u16,
        phase: LinkPhase,
    },
    StigmergyPut(stigmergy::PutBody),
    /// Ask holders of `key` to re-broadcast their entry.
    StigmergyQuery { key: String },
    /// Incremental local-map cells `(cell index, class)`; class is the
    /// `LocalCell` discriminant. Exempt from the byte quota.
    MapDiff { cells: Vec<(u32, u8)> },
}

impl Body {
    pub fn kind(&self) -> u8 {
        match self {
            Body::NeighborCmd(_) => 0,
            Body::TaskAllocState { .. } => 1,
            Body::ChainJoinRequest { .. } => 2,
            Body::ChainJoinResponse { .. } => 3,
            Body::ParentWait { .. } => 4,
            Body::ParentMove { .. } => 5,
            Body::ChainStatus { .. } => 6,
            Body::StigmergyPut(_) => 7,
            Body::StigmergyQuery { .. } => 8,
            Body::MapDiff { .. } => 9,
        }
    }

    /// Lower value is sent first. Chain pacing commands are safety-critical,
    /// map diffs ride outside the quota anyway.
    pub fn default_priority(&self) -> u8 {
        match self {
            Body::ParentWait { .. } | Body::ParentMove { .. } => 0,
            Body::NeighborCmd(_) => 1,
            Body::ChainJoinRequest { .. }
            | Body::ChainJoinResponse { .. }
            | Body::ChainStatus { .. }
            | Body::TaskAllocState { .. } => 2,
            Body::StigmergyPut(_) | Body::StigmergyQuery { .. } => 3,
            Body::MapDiff { .. } => 4,
        }
    }

    pub fn is_map_diff(&self) -> bool {
        matches!(self, Body::MapDiff { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: u16,
    pub priority: u8,
    pub body: Body,
}

impl Message {
    pub fn new(sender: u16, body: Body) -> Self {
        let priority = body.default_priority();
        Self {
            sender,
            priority,
            body,
        }
    }

    /// Wire layout: `kind:u8, sender:u16, priority:u8, len:u16, payload`,
    /// all little-endian.
    pub fn encode(&self) -> Vec<u8> {
        let payload = encode_payload(&self.body);
        let mut out = Vec::with_capacity(6 + payload.len());
        out.push(self.body.kind());
        out.extend_from_slice(&self.sender.to_le_bytes());
        out.push(self.priority);
        out.extend_from_slice(&(payload.len() as u16).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn encoded_len(&self) -> usize {
        6 + payload_len(&self.body)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 {
            return Err(Error::Domain("message shorter than header".into()));
        }
        let kind = bytes[0];
        let sender = u16::from_le_bytes([bytes[1], bytes[2]]);
        let priority = bytes[3];
        let len = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
        let payload = &bytes[6..];
        if payload.len() != len {
            return Err(Error::Domain(format!(
                "payload length {} does not match header {len}",
                payload.len()
            )));
        }
        let body = decode_payload(kind, payload)?;
        Ok(Self {
            sender,
            priority,
            body,
        })
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, at: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.buf.len() {
            return Err(Error::Domain("truncated payload".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn f32(&mut self) -> Result<f32> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn done(&self) -> Result<()> {
        if self.at != self.buf.len() {
            return Err(Error::Domain("trailing payload bytes".into()));
        }
        Ok(())
    }
}

fn payload_len(body: &Body) -> usize {
    match body {
        Body::NeighborCmd(NeighborCmd::NewTargetFound { .. }) => 13,
        Body::NeighborCmd(NeighborCmd::Beckon { .. }) => 5,
        Body::TaskAllocState { .. } => 6,
        Body::ChainJoinRequest { .. } => 8,
        Body::ChainJoinResponse { .. } => 7,
        Body::ParentWait { .. } | Body::ParentMove { .. } => 2,
        Body::ChainStatus { .. } => 7,
        Body::StigmergyPut(put) => put.encoded_len(),
        Body::StigmergyQuery { key } => 1 + key.len(),
        Body::MapDiff { cells } => 2 + cells.len() * 5,
    }
}

fn encode_payload(body: &Body) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload_len(body));
    match body {
        Body::NeighborCmd(NeighborCmd::NewTargetFound { target_id, x, y }) => {
            out.push(0);
            out.extend_from_slice(&target_id.to_le_bytes());
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
        }
        Body::NeighborCmd(NeighborCmd::Beckon { target_id }) => {
            out.push(1);
            out.extend_from_slice(&target_id.to_le_bytes());
        }
        Body::TaskAllocState { round, target_id } => {
            out.extend_from_slice(&round.to_le_bytes());
            out.extend_from_slice(&target_id.to_le_bytes());
        }
        Body::ChainJoinRequest {
            chain_id,
            elected,
            index,
        } => {
            out.extend_from_slice(&chain_id.to_le_bytes());
            out.extend_from_slice(&elected.to_le_bytes());
            out.extend_from_slice(&index.to_le_bytes());
        }
        Body::ChainJoinResponse {
            chain_id,
            accept,
            index,
        } => {
            out.extend_from_slice(&chain_id.to_le_bytes());
            out.push(u8::from(*accept));
            out.extend_from_slice(&index.to_le_bytes());
        }
        Body::ParentWait { parent } | Body::ParentMove { parent } => {
            out.extend_from_slice(&parent.to_le_bytes());
        }
        Body::ChainStatus {
            chain_id,
            index,
            phase,
        } => {
            out.extend_from_slice(&chain_id.to_le_bytes());
            out.extend_from_slice(&index.to_le_bytes());
            out.push(*phase as u8);
        }
        Body::StigmergyPut(put) => put.encode_into(&mut out),
        Body::StigmergyQuery { key } => {
            out.push(key.len() as u8);
            out.extend_from_slice(key.as_bytes());
        }
        Body::MapDiff { cells } => {
            out.extend_from_slice(&(cells.len() as u16).to_le_bytes());
            for (idx, state) in cells {
                out.extend_from_slice(&idx.to_le_bytes());
                out.push(*state);
            }
        }
    }
    out
}

fn decode_payload(kind: u8, payload: &[u8]) -> Result<Body> {
    let mut r = Reader::new(payload);
    let body = match kind {
        0 => match r.u8()? {
            0 => Body::NeighborCmd(NeighborCmd::NewTargetFound {
                target_id: r.u32()?,
                x: r.f32()?,
                y: r.f32()?,
            }),
            1 => Body::NeighborCmd(NeighborCmd::Beckon {
                target_id: r.u32()?,
            }),
            other => return Err(Error::Domain(format!("unknown neighbor cmd {other}"))),
        },
        1 => Body::TaskAllocState {
            round: r.u16()?,
            target_id: r.u32()?,
        },
        2 => Body::ChainJoinRequest {
            chain_id: r.u32()?,
            elected: r.u16()?,
            index: r.u16()?,
        },
        3 => Body::ChainJoinResponse {
            chain_id: r.u32()?,
            accept: r.u8()? != 0,
            index: r.u16()?,
        },
        4 => Body::ParentWait { parent: r.u16()? },
        5 => Body::ParentMove { parent: r.u16()? },
        6 => Body::ChainStatus {
            chain_id: r.u32()?,
            index: r.u16()?,
            phase: match r.u8()? {
                0 => LinkPhase::Forming,
                1 => LinkPhase::Move,
                2 => LinkPhase::Wait,
                3 => LinkPhase::Recover,
                other => return Err(Error::Domain(format!("unknown link phase {other}"))),
            },
        },
        7 => Body::StigmergyPut(stigmergy::PutBody::decode(&mut r)?),
        8 => {
            let len = r.u8()? as usize;
            let key = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Domain("stigmergy key is not utf-8".into()))?;
            Body::StigmergyQuery { key }
        }
        9 => {
            let n = r.u16()? as usize;
            let mut cells = Vec::with_capacity(n);
            for _ in 0..n {
                cells.push((r.u32()?, r.u8()?));
            }
            Body::MapDiff { cells }
        }
        other => return Err(Error::Domain(format!("unknown message kind {other}"))),
    };
    r.done()?;
    Ok(body)
}

#[derive(Debug, Clone)]
struct Queued {
    seq: u64,
    msg: Message,
}

/// Deterministic neighbor graph for one control step, adjacency in
/// ascending id order.
#[derive(Debug, Clone, Default)]
pub struct NeighborGraph {
    pub adj: Vec<Vec<u16>>,
}

impl NeighborGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn link(&mut self, a: u16, b: u16) {
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
    }

    pub fn neighbors(&self, id: u16) -> &[u16] {
        &self.adj[id as usize]
    }
}

/// All outboxes, pending deliveries and inboxes for one episode.
#[derive(Debug)]
pub struct CommsBus {
    outboxes: Vec<Vec<Queued>>,
    inboxes: Vec<Vec<Message>>,
    staged: Vec<Vec<Message>>,
    seq: u64,
    /// Non-diff bytes flushed by each robot on the last flush.
    pub flushed_bytes: Vec<usize>,
    /// Running maximum of non-diff bytes flushed by any robot in a step.
    pub max_flushed_bytes: usize,
}

impl CommsBus {
    pub fn new(n: usize) -> Self {
        Self {
            outboxes: vec![Vec::new(); n],
            inboxes: vec![Vec::new(); n],
            staged: vec![Vec::new(); n],
            seq: 0,
            flushed_bytes: vec![0; n],
            max_flushed_bytes: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.outboxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outboxes.is_empty()
    }

    /// Queue a message on a robot's outbox. A single message larger than
    /// the whole quota can never be transmitted and is rejected.
    pub fn enqueue(&mut self, robot: u16, msg: Message) -> Result<()> {
        let size = msg.encoded_len();
        if !msg.body.is_map_diff() {
            // Fixed-layout bodies always fit the small-message ceiling;
            // stigmergy sizes depend on the caller's keys and values.
            debug_assert!(
                matches!(
                    msg.body,
                    Body::StigmergyPut(_) | Body::StigmergyQuery { .. }
                ) || size <= SMALL_MESSAGE_LIMIT,
                "oversized {:?}",
                msg.body
            );
            if size > BYTE_QUOTA {
                return Err(Error::OversizedMessage {
                    size,
                    quota: BYTE_QUOTA,
                });
            }
        }
        self.seq += 1;
        self.outboxes[robot as usize].push(Queued {
            seq: self.seq,
            msg,
        });
        Ok(())
    }

    /// Flush outboxes under the quota and stage the result for delivery to
    /// the current neighbors at the start of the next step.
    pub fn flush_and_deliver(&mut self, graph: &NeighborGraph) {
        let n = self.outboxes.len();
        for robot in 0..n {
            let outbox = &mut self.outboxes[robot];
            // Stable order: priority first, then enqueue order.
            outbox.sort_by_key(|q| (q.msg.priority, q.seq));
            let mut sent = Vec::new();
            let mut budget = BYTE_QUOTA;
            let mut bytes = 0usize;
            let mut kept = Vec::new();
            for q in outbox.drain(..) {
                if q.msg.body.is_map_diff() {
                    sent.push(q.msg);
                    continue;
                }
                let size = q.msg.encoded_len();
                if size <= budget {
                    budget -= size;
                    bytes += size;
                    sent.push(q.msg);
                } else {
                    kept.push(q);
                }
            }
            *outbox = kept;
            self.flushed_bytes[robot] = bytes;
            self.max_flushed_bytes = self.max_flushed_bytes.max(bytes);

            for &peer in graph.neighbors(robot as u16) {
                self.staged[peer as usize].extend(sent.iter().cloned());
            }
        }
        for robot in 0..n {
            self.inboxes[robot].append(&mut self.staged[robot]);
        }
    }

    /// Flush with per-delivery Bernoulli loss (robustness experiments).
    pub fn flush_and_deliver_lossy(
        &mut self,
        graph: &NeighborGraph,
        loss: f64,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) {
        use rand::Rng;
        self.flush_and_deliver(graph);
        for inbox in &mut self.inboxes {
            inbox.retain(|_| rng.gen::<f64>() >= loss);
        }
    }

    /// Messages delivered for this robot this step.
    pub fn take_inbox(&mut self, robot: u16) -> Vec<Message> {
        std::mem::take(&mut self.inboxes[robot as usize])
    }

    pub fn pending_outbox(&self, robot: u16) -> usize {
        self.outboxes[robot as usize].len()
    }
}
