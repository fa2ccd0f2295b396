//! Deterministic multi-robot swarm simulator for a radiation-cleanup
//! mission, plus the closed-form coverage model used to size swarms and to
//! validate the simulator's arrival statistics.
//!
//! The mission: targets sit on the border of a walled arena; a swarm must
//! find every target and assemble a quorum of worker robots at each one.
//! Three control strategies are implemented — hierarchical (guides explore,
//! then lead workers out in a chain), egalitarian (workers only, beckoning
//! each other to found targets), and heterogeneous (both explore, delivery
//! by chain) — over urban, maze and forest arenas.

pub mod behaviors;
pub mod comms;
pub mod config;
pub mod engine;
pub mod episode;
pub mod error;
pub mod events;
pub mod geom;
pub mod metrics;
pub mod model;
pub mod report;
pub mod world;

pub use config::{ArenaType, Campaign, Placement, ScenarioConfig, Strategy, Tunables};
pub use error::{Error, Result};
pub use metrics::RunRecord;
