//! Virtual stigmergy: a gossip-replicated key/value table.
//!
//! Each robot holds a full replica. A put bumps the key's version counter
//! and queues a broadcast; receivers keep the entry with the highest
//! `(lamport, writer)` pair. A winning merge is re-broadcast so updates
//! flood the mesh; a strictly stale incoming entry triggers re-broadcast of
//! the local one (anti-entropy for lagging peers). The merge is idempotent,
//! commutative and associative, so replicas converge on any connected
//! neighbor graph once puts stop.
//!
//! Mission coordination uses four named tables: the list of found targets,
//! the guides available for allocation, the workers awaiting mobilization,
//! and the cost-negotiation table.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Named tables are key namespaces inside one replicated map, so the wire
/// layout stays `key_len:u8, key, lamport:u32, writer:u16, value_len:u16,
/// value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    ListOfTargets,
    AvailableGuides,
    AvailableWorkers,
    CostNegotiation,
}

impl Table {
    pub fn prefix(self) -> &'static str {
        match self {
            Table::ListOfTargets => "targets",
            Table::AvailableGuides => "guides",
            Table::AvailableWorkers => "workers",
            Table::CostNegotiation => "cost",
        }
    }

    pub fn key(self, suffix: impl std::fmt::Display) -> String {
        format!("{}/{}", self.prefix(), suffix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: Vec<u8>,
    pub lamport: u32,
    pub writer: u16,
}

impl Entry {
    fn version(&self) -> (u32, u16) {
        (self.lamport, self.writer)
    }
}

/// A stigmergy put on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct PutBody {
    pub key: String,
    pub lamport: u32,
    pub writer: u16,
    pub value: Vec<u8>,
}

impl PutBody {
    pub fn encoded_len(&self) -> usize {
        1 + self.key.len() + 4 + 2 + 2 + self.value.len()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.key.len() as u8);
        out.extend_from_slice(self.key.as_bytes());
        out.extend_from_slice(&self.lamport.to_le_bytes());
        out.extend_from_slice(&self.writer.to_le_bytes());
        out.extend_from_slice(&(self.value.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.value);
    }

    pub(crate) fn decode(r: &mut super::Reader<'_>) -> Result<Self> {
        let key_len = r.u8()? as usize;
        let key = String::from_utf8(r.take(key_len)?.to_vec())
            .map_err(|_| Error::Domain("stigmergy key is not utf-8".into()))?;
        let lamport = r.u32()?;
        let writer = r.u16()?;
        let value_len = r.u16()? as usize;
        let value = r.take(value_len)?.to_vec();
        Ok(Self {
            key,
            lamport,
            writer,
            value,
        })
    }
}

/// What a merge decided, and what should go back on the air.
#[derive(Debug, Clone, PartialEq)]
pub enum MergeOutcome {
    /// Incoming won; re-broadcast it onward.
    Applied(PutBody),
    /// Incoming was strictly stale; re-broadcast the local entry.
    Stale(PutBody),
    /// Same version already present; nothing to do.
    Duplicate,
}

/// One robot's replica.
#[derive(Debug, Clone, Default)]
pub struct Replica {
    entries: BTreeMap<String, Entry>,
}

impl Replica {
    pub fn new() -> Self {
        Self::default()
    }

    /// Write locally and return the put to gossip.
    pub fn put(&mut self, writer: u16, key: impl Into<String>, value: Vec<u8>) -> Result<PutBody> {
        let key = key.into();
        if key.is_empty() {
            return Err(Error::Domain("stigmergy key must be nonempty".into()));
        }
        if key.len() > u8::MAX as usize {
            return Err(Error::Domain("stigmergy key longer than 255 bytes".into()));
        }
        let lamport = self.entries.get(&key).map_or(0, |e| e.lamport) + 1;
        self.entries.insert(
            key.clone(),
            Entry {
                value: value.clone(),
                lamport,
                writer,
            },
        );
        Ok(PutBody {
            key,
            lamport,
            writer,
            value,
        })
    }

    /// Merge an incoming entry under the `(lamport, writer)` order.
    pub fn merge(&mut self, incoming: &PutBody) -> MergeOutcome {
        let incoming_version = (incoming.lamport, incoming.writer);
        match self.entries.get(&incoming.key) {
            Some(local) if local.version() > incoming_version => MergeOutcome::Stale(PutBody {
                key: incoming.key.clone(),
                lamport: local.lamport,
                writer: local.writer,
                value: local.value.clone(),
            }),
            Some(local) if local.version() == incoming_version => MergeOutcome::Duplicate,
            _ => {
                self.entries.insert(
                    incoming.key.clone(),
                    Entry {
                        value: incoming.value.clone(),
                        lamport: incoming.lamport,
                        writer: incoming.writer,
                    },
                );
                MergeOutcome::Applied(incoming.clone())
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn get_in(&self, table: Table, suffix: impl std::fmt::Display) -> Option<&Entry> {
        self.get(&table.key(suffix))
    }

    /// Entries of one named table, `(key suffix, entry)`, in key order.
    pub fn iter_table(&self, table: Table) -> impl Iterator<Item = (&str, &Entry)> {
        let prefix = format!("{}/", table.prefix());
        self.entries.range(prefix.clone()..).take_while(move |(k, _)| k.starts_with(&prefix)).map(
            move |(k, e)| {
                let suffix = &k[k.find('/').map(|i| i + 1).unwrap_or(0)..];
                (suffix, e)
            },
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replica contents for convergence checks.
    pub fn snapshot(&self) -> Vec<(String, u32, u16, Vec<u8>)> {
        self.entries
            .iter()
            .map(|(k, e)| (k.clone(), e.lamport, e.writer, e.value.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_bumps_lamport() {
        let mut r = Replica::new();
        let p1 = r.put(4, "targets/0", vec![1]).unwrap();
        assert_eq!(p1.lamport, 1);
        let p2 = r.put(4, "targets/0", vec![2]).unwrap();
        assert_eq!(p2.lamport, 2);
        assert_eq!(r.get("targets/0").unwrap().value, vec![2]);
        assert!(r.put(4, "", vec![]).is_err());
    }

    #[test]
    fn newer_incoming_wins() {
        let mut r = Replica::new();
        r.put(2, "k", vec![1]).unwrap();
        let incoming = PutBody {
            key: "k".into(),
            lamport: 4,
            writer: 1,
            value: vec![9],
        };
        match r.merge(&incoming) {
            MergeOutcome::Applied(p) => assert_eq!(p.lamport, 4),
            other => panic!("expected apply, got {other:?}"),
        }
        assert_eq!(r.get("k").unwrap().value, vec![9]);
    }

    #[test]
    fn writer_id_breaks_ties() {
        let mut r = Replica::new();
        r.merge(&PutBody {
            key: "k".into(),
            lamport: 3,
            writer: 2,
            value: vec![2],
        });
        let higher_writer = PutBody {
            key: "k".into(),
            lamport: 3,
            writer: 5,
            value: vec![5],
        };
        assert!(matches!(r.merge(&higher_writer), MergeOutcome::Applied(_)));
        assert_eq!(r.get("k").unwrap().writer, 5);
        // The losing side of the tie is stale now.
        let lower_writer = PutBody {
            key: "k".into(),
            lamport: 3,
            writer: 2,
            value: vec![2],
        };
        match r.merge(&lower_writer) {
            MergeOutcome::Stale(local) => assert_eq!(local.writer, 5),
            other => panic!("expected stale, got {other:?}"),
        }
    }

    #[test]
    fn stale_incoming_keeps_local_and_answers() {
        let mut r = Replica::new();
        r.merge(&PutBody {
            key: "k".into(),
            lamport: 3,
            writer: 1,
            value: vec![3],
        });
        let stale = PutBody {
            key: "k".into(),
            lamport: 2,
            writer: 9,
            value: vec![2],
        };
        match r.merge(&stale) {
            MergeOutcome::Stale(local) => {
                assert_eq!(local.lamport, 3);
                assert_eq!(local.value, vec![3]);
            }
            other => panic!("expected stale, got {other:?}"),
        }
        assert_eq!(r.get("k").unwrap().value, vec![3]);
    }

    #[test]
    fn local_put_beats_staler_remote() {
        let mut r = Replica::new();
        r.put(7, "k", vec![1]).unwrap();
        r.put(7, "k", vec![2]).unwrap(); // lamport 2
        let remote = PutBody {
            key: "k".into(),
            lamport: 1,
            writer: 3,
            value: vec![9],
        };
        assert!(matches!(r.merge(&remote), MergeOutcome::Stale(_)));
        assert_eq!(r.get("k").unwrap().value, vec![2]);
    }

    #[test]
    fn table_namespaces() {
        let mut r = Replica::new();
        r.put(1, Table::ListOfTargets.key(3), vec![1]).unwrap();
        r.put(1, Table::AvailableGuides.key(7), vec![2]).unwrap();
        r.put(1, Table::ListOfTargets.key(1), vec![3]).unwrap();
        let targets: Vec<_> = r.iter_table(Table::ListOfTargets).collect();
        assert_eq!(targets.len(), 2);
        assert_eq!(targets[0].0, "1");
        assert_eq!(targets[1].0, "3");
        assert!(r.get_in(Table::AvailableGuides, 7).is_some());
        assert!(r.get_in(Table::AvailableWorkers, 7).is_none());
    }
}
