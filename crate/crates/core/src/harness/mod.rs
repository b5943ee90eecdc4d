//! Seeded synthetic campaigns: a full results tree without a simulator.
//!
//! Every random draw comes from ChaCha8 seeded with the campaign seed and a
//! stream id derived from what is being drawn (path geometry, obstacle
//! layout, a configuration's failure pattern, one run). Generation order and
//! thread count therefore never change the output.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod generate;

pub use generate::{generate, CampaignSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("output directory {0} is not empty")]
    OutputNotEmpty(PathBuf),
    #[error("invalid harness configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

/// Which configurations a rule applies to. Empty sets match everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    #[serde(default)]
    pub maps: BTreeSet<u32>,
    #[serde(default)]
    pub paths: BTreeSet<u32>,
    #[serde(default)]
    pub densities: Vec<f64>,
    #[serde(default)]
    pub radii: Vec<f64>,
}

impl Selector {
    pub fn any() -> Self {
        Selector::default()
    }

    /// Exactly one configuration.
    pub fn single(map: u32, path: u32, density: f64, radius: f64) -> Self {
        Selector { maps: [map].into(), paths: [path].into(), densities: vec![density], radii: vec![radius] }
    }

    pub fn matches(&self, c: &ConfigKey) -> bool {
        (self.maps.is_empty() || self.maps.contains(&c.map))
            && (self.paths.is_empty() || self.paths.contains(&c.path))
            && (self.densities.is_empty() || self.densities.contains(&c.density))
            && (self.radii.is_empty() || self.radii.contains(&c.radius))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureMode {
    AlwaysFail,
    /// Exactly `k` of the configuration's runs fail; which ones is seeded.
    FailKOfN(u32),
    /// Each run fails independently.
    Probability(f64),
}

/// How a failed run ends. Shapes the report message, duration and how much
/// of the path was covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// Spawned inside the inflated footprint of a wall; never starts moving.
    Spawn,
    Collision,
    Timeout,
}

impl FailureKind {
    pub fn message(self) -> &'static str {
        match self {
            FailureKind::Spawn => "startup failed: start pose lies inside an inflated wall",
            FailureKind::Collision => "collision with obstacle",
            FailureKind::Timeout => crate::capture::report::GOAL_NOT_REACHED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRule {
    pub selector: Selector,
    pub mode: FailureMode,
    pub kind: FailureKind,
}

impl FailureRule {
    pub fn new(selector: Selector, mode: FailureMode, kind: FailureKind) -> Self {
        FailureRule { selector, mode, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub seed: u64,
    pub n_maps: u32,
    pub paths_per_map: u32,
    pub path_length_m: f64,
    pub densities: Vec<f64>,
    pub radii_m: Vec<f64>,
    pub runs_per_config: u32,
    /// First matching rule decides; configurations without one always succeed.
    pub failure_profile: Vec<FailureRule>,
    /// Standard deviation of the estimate columns in pose logs.
    pub pose_noise_m: f64,
    pub dataset_iri: String,
}

/// Position of a configuration in the variation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigKey {
    pub index: u32,
    pub map: u32,
    pub path: u32,
    pub density: f64,
    pub radius: f64,
}

impl ConfigKey {
    /// Index of the concrete scenario: the configuration without its radius.
    pub fn scenario_index(&self, cfg: &HarnessConfig) -> u32 {
        (self.map * cfg.paths_per_map + self.path) * cfg.densities.len() as u32
            + cfg.densities.iter().position(|d| *d == self.density).expect("density from grid") as u32
    }
}

pub const DEFAULT_DATASET_IRI: &str = "https://purl.org/robovast/datasets/navigation-demo";

/// The campaign of the example: spawn block on the last map, two collision
/// hot spots on the map before it, 5% timeouts elsewhere.
impl Default for HarnessConfig {
    fn default() -> Self {
        let mut failure_profile = story_rules(5);
        failure_profile.push(FailureRule::new(Selector::any(), FailureMode::Probability(0.05), FailureKind::Timeout));
        HarnessConfig {
            seed: 42,
            n_maps: 5,
            paths_per_map: 10,
            path_length_m: 10.0,
            densities: vec![0.0, 0.2],
            radii_m: vec![0.175, 0.22],
            runs_per_config: 10,
            failure_profile,
            pose_noise_m: 0.05,
            dataset_iri: DEFAULT_DATASET_IRI.into(),
        }
    }
}

/// Paths (on the second-to-last map, at the higher density) whose two radius
/// configurations fail 9 and 10 of 10 runs.
pub const COLLISION_PATHS: [u32; 2] = [2, 5];
/// Paths on the last map whose start pose is inside a wall's inflation.
pub const SPAWN_PATHS: [u32; 2] = [0, 1];

/// The named failure stories for a grid with `n_maps` maps: 8 always-fail
/// configurations and two 19-of-20 scenarios.
fn story_rules(n_maps: u32) -> Vec<FailureRule> {
    let last = n_maps - 1;
    let mut rules = vec![FailureRule::new(
        Selector { maps: [last].into(), paths: SPAWN_PATHS.into(), ..Selector::default() },
        FailureMode::AlwaysFail,
        FailureKind::Spawn,
    )];
    for p in COLLISION_PATHS {
        for (radius, k) in [(0.175, 9), (0.22, 10)] {
            rules.push(FailureRule::new(Selector::single(last - 1, p, 0.2, radius), FailureMode::FailKOfN(k), FailureKind::Collision));
        }
    }
    rules
}

pub const FULL_PROFILE_FAILURES: u32 = 290;

/// 400 configurations of 10 runs with exactly 290 failures: 80 from the
/// spawn block, 38 from the two collision scenarios and 172 spread as seeded
/// fail-k-of-n rules over otherwise untouched configurations.
pub fn paper_profile() -> HarnessConfig {
    let mut cfg = HarnessConfig { paths_per_map: 20, ..HarnessConfig::default() };
    cfg.failure_profile = story_rules(cfg.n_maps);
    let stories = cfg.failure_profile.clone();
    let mut candidates: Vec<ConfigKey> =
        cfg.configs().into_iter().filter(|k| !stories.iter().any(|r| r.selector.matches(k))).collect();
    let mut rng = rng_for(cfg.seed, Stream::Profile, 0, 0);
    candidates.shuffle(&mut rng);
    let fixed: u32 = 8 * cfg.runs_per_config + 38;
    let mut remaining = FULL_PROFILE_FAILURES - fixed;
    for k in candidates {
        if remaining == 0 {
            break;
        }
        let n = rng.random_range(1..=3).min(remaining);
        remaining -= n;
        cfg.failure_profile.push(FailureRule::new(
            Selector::single(k.map, k.path, k.density, k.radius),
            FailureMode::FailKOfN(n),
            FailureKind::Timeout,
        ));
    }
    cfg
}

#[derive(Debug, Clone, Copy)]
#[repr(u8)]
pub(crate) enum Stream {
    Run = 0,
    Geometry = 1,
    Obstacles = 2,
    FailurePattern = 3,
    Profile = 4,
}

/// Independent generator per (purpose, a, b).
pub(crate) fn rng_for(seed: u64, stream: Stream, a: u32, b: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 56) | ((u64::from(a) & 0xFF_FFFF) << 32) | u64::from(b));
    rng
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.into()));
        if self.n_maps == 0 || self.paths_per_map == 0 || self.runs_per_config == 0 {
            return bad("counts must be at least 1");
        }
        if self.densities.is_empty() || self.radii_m.is_empty() {
            return bad("densities and radii need at least one value");
        }
        if !(self.path_length_m.is_finite() && self.path_length_m > 0.0) {
            return bad("path_length_m must be positive");
        }
        if self.densities.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return bad("densities must be non-negative");
        }
        if self.radii_m.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return bad("radii must be positive");
        }
        for (name, values) in [("densities", &self.densities), ("radii_m", &self.radii_m)] {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(HarnessError::InvalidConfig(format!("{name} contain duplicates")));
            }
        }
        if !(self.pose_noise_m.is_finite() && self.pose_noise_m >= 0.0) {
            return bad("pose_noise_m must be non-negative");
        }
        for r in &self.failure_profile {
            if let FailureMode::Probability(p) = r.mode {
                if !(0.0..=1.0).contains(&p) {
                    return bad("failure probability must be within [0, 1]");
                }
            }
        }
        if self.n_configs() > 0xFF_FFFF {
            return bad("too many configurations");
        }
        crate::identity::BaseIri::new(&self.dataset_iri).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    pub fn n_scenarios(&self) -> u32 {
        self.n_maps * self.paths_per_map * self.densities.len() as u32
    }

    pub fn n_configs(&self) -> u32 {
        self.n_scenarios() * self.radii_m.len() as u32
    }

    pub fn n_runs(&self) -> u64 {
        u64::from(self.n_configs()) * u64::from(self.runs_per_config)
    }

    /// The grid in index order: map, path, density, radius.
    pub fn configs(&self) -> Vec<ConfigKey> {
        let mut out = Vec::with_capacity(self.n_configs() as usize);
        for map in 0..self.n_maps {
            for path in 0..self.paths_per_map {
                for &density in &self.densities {
                    for &radius in &self.radii_m {
                        out.push(ConfigKey { index: out.len() as u32, map, path, density, radius });
                    }
                }
            }
        }
        out
    }

    pub fn rule_for(&self, key: &ConfigKey) -> Option<&FailureRule> {
        self.failure_profile.iter().find(|r| r.selector.matches(key))
    }

    /// Failed run indices and the failure kind for one configuration. Pure in
    /// (config, seed), so the tree writer and tests agree.
    pub fn failures_of(&self, key: &ConfigKey) -> (BTreeSet<u32>, Option<FailureKind>) {
        let n = self.runs_per_config;
        let Some(rule) = self.rule_for(key) else { return (BTreeSet::new(), None) };
        let failed = match rule.mode {
            FailureMode::AlwaysFail => (0..n).collect(),
            FailureMode::FailKOfN(k) => {
                let mut runs: Vec<u32> = (0..n).collect();
                runs.shuffle(&mut rng_for(self.seed, Stream::FailurePattern, key.index, 0));
                runs.into_iter().take(k.min(n) as usize).collect()
            }
            FailureMode::Probability(p) => (0..n)
                .filter(|r| rng_for(self.seed, Stream::FailurePattern, key.index, r + 1).random_bool(p))
                .collect(),
        };
        (failed, Some(rule.kind))
    }

    /// Number of failures the profile produces, without writing anything.
    pub fn expected_failures(&self) -> u64 {
        self.configs().iter().map(|k| self.failures_of(k).0.len() as u64).sum()
    }
}
