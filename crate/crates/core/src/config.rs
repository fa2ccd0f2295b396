//! Scenario and campaign configuration.
//!
//! Campaign files are TOML: a `[campaign]` section with the base seed and
//! repetition count, then one `[[config]]` block per scenario. Every
//! behavioral threshold is surfaced here with its default so a results CSV
//! can always be traced back to the exact knob settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Control strategy of a run. `Ballistic` is not a mission strategy: robots
/// fly straight lines with random rebounds, which is the mobility model the
/// closed-form arrival law assumes, so it exists to validate the simulator
/// against that law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Hierarchical,
    Egalitarian,
    Heterogeneous,
    Ballistic,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Hierarchical => "hierarchical",
            Strategy::Egalitarian => "egalitarian",
            Strategy::Heterogeneous => "heterogeneous",
            Strategy::Ballistic => "ballistic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArenaType {
    Urban,
    Maze,
    Forest,
    /// Obstacle-free arena for model validation.
    Empty,
}

impl std::fmt::Display for ArenaType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ArenaType::Urban => "urban",
            ArenaType::Maze => "maze",
            ArenaType::Forest => "forest",
            ArenaType::Empty => "empty",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Deploy packed inside the home disc (mission default).
    Home,
    /// Uniform random poses over free space (validation runs).
    Uniform,
}

/// Every engine and behavior threshold, with mission defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tunables {
    /// Control step, seconds (10 Hz).
    pub dt: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub robot_radius: f64,
    /// 8 short proximity rays.
    pub proximity_range: f64,
    /// 5 ultrasound rays, [min, max].
    pub ultrasound_min: f64,
    pub ultrasound_max: f64,
    /// Guide lidar fan.
    pub lidar_rays: u32,
    pub lidar_range: f64,
    pub comm_range: f64,
    pub radiation_range: f64,
    /// Radiation sensing requires line of sight.
    pub radiation_los: bool,
    /// Obstacle potential constants.
    pub repulsion_a0: f64,
    pub repulsion_k: f64,
    pub repulsion_threshold: f64,
    /// Forward is taken when no hit within this distance ahead.
    pub sgba_clear_ahead: f64,
    /// Heading alignment tolerance for forward motion, degrees.
    pub sgba_align_tol_deg: f64,
    /// Distance a beckoning worker holds from the target center.
    pub beckon_standoff: f64,
    /// Chain spacing: follow setpoint, stop request, resume thresholds.
    pub chain_follow: f64,
    pub chain_stop: f64,
    pub chain_resume: f64,
    /// Parent tracking field of view, degrees each side.
    pub chain_fov_deg: f64,
    /// Cost-negotiation table must be quiet this long before a decision.
    pub alloc_quiescence_s: f64,
    /// Heterogeneous guides wait this long at home before bidding.
    pub guide_wait_s: f64,
    /// Probability a delivered message is dropped (robustness tests).
    pub message_loss: f64,
    /// Map-diff exchange period per guide pair, seconds.
    pub mapdiff_period_s: f64,
    /// Visitation grid cell for coverage metrics, meters.
    pub visitation_cell: f64,
    /// Incremental coverage window, seconds.
    pub coverage_window_s: f64,
    /// Forest trunk radius, meters.
    pub forest_cylinder_radius: f64,
    /// Forest obstacle density.
    pub forest_density: f64,
}

impl Default for Tunables {
    fn default() -> Self {
        Self {
            dt: 0.1,
            v_max: 0.5,
            omega_max: 1.5,
            robot_radius: 0.07,
            proximity_range: 0.25,
            ultrasound_min: 0.25,
            ultrasound_max: 2.0,
            lidar_rays: 90,
            lidar_range: 8.0,
            comm_range: 10.0,
            radiation_range: 5.0,
            radiation_los: true,
            repulsion_a0: 0.0,
            repulsion_k: 0.2,
            repulsion_threshold: 0.5,
            sgba_clear_ahead: 0.5,
            sgba_align_tol_deg: 10.0,
            beckon_standoff: 1.5,
            chain_follow: 1.0,
            chain_stop: 2.0,
            chain_resume: 0.6,
            chain_fov_deg: 60.0,
            alloc_quiescence_s: 2.0,
            guide_wait_s: 30.0,
            message_loss: 0.0,
            mapdiff_period_s: 2.0,
            visitation_cell: 1.0,
            coverage_window_s: 60.0,
            forest_cylinder_radius: 0.3,
            forest_density: 0.1,
        }
    }
}

fn default_quorum() -> u32 {
    10
}

fn default_t_limit() -> f64 {
    12_000.0
}

fn default_n_targets() -> u32 {
    1
}

fn default_placement() -> Placement {
    Placement::Home
}

/// One experimental configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Identifier echoed into result rows.
    pub id: String,
    pub strategy: Strategy,
    pub arena: ArenaType,
    /// Arena side in meters; missions use the benchmark set {15, 30, 60, 120}.
    pub arena_side: f64,
    /// Octile map file; when absent, urban/maze arenas are generated from
    /// the map seed.
    #[serde(default)]
    pub map_path: Option<String>,
    /// Seed for generated arenas (forest, synthetic urban/maze). When
    /// absent, generated arenas derive it from the run seed, which matches
    /// the forest campaigns regenerating a fresh map per run.
    #[serde(default)]
    pub map_seed: Option<u64>,
    pub n_workers: u32,
    #[serde(default)]
    pub n_guides: u32,
    #[serde(default = "default_n_targets")]
    pub n_targets: u32,
    #[serde(default = "default_quorum")]
    pub quorum: u32,
    #[serde(default = "default_t_limit")]
    pub t_limit: f64,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    /// Emit per-step trajectory rows (heavy; off by default).
    #[serde(default)]
    pub log_trajectories: bool,
    #[serde(default)]
    pub tunables: Tunables,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        const SIDES: [f64; 4] = [15.0, 30.0, 60.0, 120.0];
        const TARGET_COUNTS: [u32; 6] = [1, 2, 4, 8, 16, 32];
        if self.id.is_empty() {
            return Err(Error::Config("config id must be nonempty".into()));
        }
        match self.strategy {
            Strategy::Egalitarian => {
                if self.n_guides != 0 {
                    return Err(Error::Config(format!(
                        "egalitarian runs take no guides, got {}",
                        self.n_guides
                    )));
                }
                if self.n_workers == 0 {
                    return Err(Error::Config("egalitarian runs need workers".into()));
                }
            }
            Strategy::Hierarchical => {
                if self.n_guides == 0 {
                    return Err(Error::Config("hierarchical runs need guides".into()));
                }
            }
            Strategy::Heterogeneous => {
                if self.n_guides == 0 || self.n_workers == 0 {
                    return Err(Error::Config(
                        "heterogeneous runs need both guides and workers".into(),
                    ));
                }
            }
            Strategy::Ballistic => {
                if self.n_guides != 0 {
                    return Err(Error::Config("ballistic validation uses workers only".into()));
                }
                if self.n_workers == 0 {
                    return Err(Error::Config("ballistic validation needs workers".into()));
                }
            }
        }
        if self.strategy != Strategy::Ballistic
            && !SIDES.iter().any(|s| (s - self.arena_side).abs() < 1e-9)
        {
            return Err(Error::Config(format!(
                "arena side {} not in the benchmark set {SIDES:?}",
                self.arena_side
            )));
        }
        if self.strategy == Strategy::Ballistic && !(self.arena_side > 0.0) {
            return Err(Error::Config("arena side must be positive".into()));
        }
        if !TARGET_COUNTS.contains(&self.n_targets) {
            return Err(Error::Config(format!(
                "target count {} not in {TARGET_COUNTS:?}",
                self.n_targets
            )));
        }
        if self.quorum == 0 {
            return Err(Error::Config("quorum must be at least 1".into()));
        }
        if !(self.t_limit > 0.0) {
            return Err(Error::Config("time limit must be positive".into()));
        }
        if matches!(self.arena, ArenaType::Urban | ArenaType::Maze)
            && self.map_path.is_none()
            && self.map_seed.is_none()
        {
            return Err(Error::Config(
                "urban/maze arenas need a map path or a map seed".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.tunables.message_loss) {
            return Err(Error::Config("message loss must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Uniform-cost accounting: workers cost one unit, guides three.
    pub fn swarm_cost(&self) -> u32 {
        crate::metrics::swarm_cost(self.n_workers, self.n_guides)
    }
}

/// A batch of configurations sharing a base seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Campaign {
    pub campaign: CampaignHeader,
    #[serde(rename = "config")]
    pub configs: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignHeader {
    pub base_seed: u64,
    /// Repetitions per config.
    pub reps: u32,
}

impl Campaign {
    pub fn from_toml(text: &str) -> Result<Self> {
        let campaign: Campaign =
            toml::from_str(text).map_err(|e| Error::Config(format!("campaign parse: {e}")))?;
        if campaign.configs.is_empty() {
            return Err(Error::Config("campaign has no configs".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for c in &campaign.configs {
            c.validate()?;
            if !ids.insert(c.id.clone()) {
                return Err(Error::Config(format!("duplicate config id `{}`", c.id)));
            }
        }
        Ok(campaign)
    }

    /// Every (config, seed) pair of the campaign.
    pub fn runs(&self) -> Vec<(&ScenarioConfig, u64)> {
        let mut out = Vec::new();
        for (idx, cfg) in self.configs.iter().enumerate() {
            for rep in 0..self.campaign.reps {
                out.push((cfg, mix_seed(self.campaign.base_seed, idx as u64, rep as u64)));
            }
        }
        out
    }
}

/// SplitMix64 step; the standard 64-bit avalanche mix.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed: campaign base seed mixed with the config index and the
/// repetition index through SplitMix64.
pub fn mix_seed(base: u64, config_index: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(base ^ config_index.wrapping_mul(0xA076_1D64_78BD_642F)) ^ rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ScenarioConfig {
        ScenarioConfig {
            id: "c0".into(),
            strategy: Strategy::Egalitarian,
            arena: ArenaType::Maze,
            arena_side: 30.0,
            map_path: None,
            map_seed: Some(1),
            n_workers: 16,
            n_guides: 0,
            n_targets: 1,
            quorum: 10,
            t_limit: 12_000.0,
            placement: Placement::Home,
            log_trajectories: false,
            tunables: Tunables::default(),
        }
    }

    #[test]
    fn valid_config_passes() {
        base_config().validate().unwrap();
    }

    #[test]
    fn egalitarian_rejects_guides() {
        let mut c = base_config();
        c.n_guides = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn arena_side_must_be_benchmark() {
        let mut c = base_config();
        c.arena_side = 45.0;
        assert!(c.validate().is_err());
        c.arena_side = 120.0;
        c.validate().unwrap();
    }

    #[test]
    fn seed_mix_is_stable_and_spread() {
        let a = mix_seed(42, 0, 0);
        assert_eq!(a, mix_seed(42, 0, 0));
        assert_ne!(a, mix_seed(42, 0, 1));
        assert_ne!(a, mix_seed(42, 1, 0));
        assert_ne!(a, mix_seed(43, 0, 0));
    }

    #[test]
    fn campaign_toml_round_trip() {
        let text = r#"
[campaign]
base_seed = 7
reps = 3

[[config]]
id = "maze-16"
strategy = "egalitarian"
arena = "maze"
arena_side = 30.0
map_seed = 5
n_workers = 16

[[config]]
id = "hier-2g"
strategy = "hierarchical"
arena = "urban"
arena_side = 30.0
map_seed = 5
n_workers = 10
n_guides = 2
"#;
        let campaign = Campaign::from_toml(text).unwrap();
        assert_eq!(campaign.configs.len(), 2);
        assert_eq!(campaign.runs().len(), 6);
        assert_eq!(campaign.configs[0].quorum, 10);
        assert_eq!(campaign.configs[0].t_limit, 12_000.0);
        assert!(campaign.configs[0].tunables.radiation_los);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"
[campaign]
base_seed = 7
reps = 1

[[config]]
id = "a"
strategy = "egalitarian"
arena = "maze"
arena_side = 30.0
map_seed = 5
n_workers = 16

[[config]]
id = "a"
strategy = "egalitarian"
arena = "maze"
arena_side = 30.0
map_seed = 6
n_workers = 16
"#;
        assert!(Campaign::from_toml(text).is_err());
    }
}
