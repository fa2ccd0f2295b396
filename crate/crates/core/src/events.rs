//! Episode event log.
//!
//! External format: one record per line, `t_s,robot_id,event_kind,detail`.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub robot: u16,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TargetDetected,
    TargetArrival,
    CleanupDone,
    StateTransition,
    ChainAssembled,
    ParentLost,
    ParentRecovered,
    MissionComplete,
    Timeout,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::TargetDetected => "TARGET_DETECTED",
            EventKind::TargetArrival => "TARGET_ARRIVAL",
            EventKind::CleanupDone => "CLEANUP_DONE",
            EventKind::StateTransition => "STATE_TRANSITION",
            EventKind::ChainAssembled => "CHAIN_ASSEMBLED",
            EventKind::ParentLost => "LOST_PARENT",
            EventKind::ParentRecovered => "PARENT_RECOVERED",
            EventKind::MissionComplete => "MISSION_COMPLETE",
            EventKind::Timeout => "TIMEOUT",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, t: f64, robot: u16, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            t,
            robot,
            kind,
            detail: detail.into(),
        });
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    /// Newline-delimited `t_s,robot_id,event_kind,detail` records.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(
                out,
                "{:.1},{},{},{}",
                e.t,
                e.robot,
                e.kind.as_str(),
                e.detail
            );
        }
        out
    }

    /// First detection time per target id.
    pub fn first_detections(&self) -> std::collections::BTreeMap<u32, f64> {
        let mut map = std::collections::BTreeMap::new();
        for e in &self.events {
            if e.kind == EventKind::TargetDetected {
                if let Some(id) = parse_target_id(&e.detail) {
                    map.entry(id).or_insert(e.t);
                }
            }
        }
        map
    }

    /// Cleanup completion time per target id.
    pub fn cleanup_times(&self) -> std::collections::BTreeMap<u32, f64> {
        let mut map = std::collections::BTreeMap::new();
        for e in &self.events {
            if e.kind == EventKind::CleanupDone {
                if let Some(id) = parse_target_id(&e.detail) {
                    map.entry(id).or_insert(e.t);
                }
            }
        }
        map
    }
}

fn parse_target_id(detail: &str) -> Option<u32> {
    detail
        .split(';')
        .find_map(|part| part.strip_prefix("target="))
        .and_then(|v| v.parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_external_format() {
        let mut log = EventLog::default();
        log.push(12.4, 3, EventKind::TargetDetected, "target=0;dist=4.2");
        let text = log.render();
        assert_eq!(text, "12.4,3,TARGET_DETECTED,target=0;dist=4.2\n");
    }

    #[test]
    fn extracts_per_target_times() {
        let mut log = EventLog::default();
        log.push(5.0, 1, EventKind::TargetDetected, "target=1");
        log.push(9.0, 2, EventKind::TargetDetected, "target=1");
        log.push(11.0, 2, EventKind::TargetDetected, "target=0");
        log.push(40.0, 0, EventKind::CleanupDone, "target=1");
        let found = log.first_detections();
        assert_eq!(found[&1], 5.0);
        assert_eq!(found[&0], 11.0);
        assert_eq!(log.cleanup_times()[&1], 40.0);
    }
}
