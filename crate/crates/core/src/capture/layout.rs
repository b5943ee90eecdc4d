//! File formats of the standardized results tree, shared by the scanner and
//! the synthetic campaign writer.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::CaptureError;

pub const SCENARIO_CONFIG: &str = "scenario.config";
pub const RUN_METADATA: &str = "metadata.yaml";
pub const INPUTS_DIR: &str = "inputs";
pub const MAPS_DIR: &str = "inputs/maps";
pub const ENVIRONMENTS_DIR: &str = "environments";
pub const SCENARIOS_DIR: &str = "scenarios";
pub const CONFIGS_DIR: &str = "configs";
pub const RUNS_DIR: &str = "runs";
pub const SCENARIO_FILE: &str = "scenario.xosc";
pub const PROVENANCE_FILE: &str = "provenance.jsonld";
pub const SUMMARY_FILE: &str = "summary.json";

/// Planar pose: metres and radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.x, self.y, self.yaw)
    }
}

fn parse_pose(key: &str, text: &str) -> Result<Pose, String> {
    let nums: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse::<f64>).collect();
    match nums.map_err(|_| format!("{key}: non-numeric pose {text:?}"))?.as_slice() {
        [x, y] => Ok(Pose { x: *x, y: *y, yaw: 0.0 }),
        [x, y, yaw] => Ok(Pose { x: *x, y: *y, yaw: *yaw }),
        _ => Err(format!("{key}: expected \"x y [yaw]\", got {text:?}")),
    }
}

/// Instantiated parameters of one configuration directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub config_id: String,
    pub scenario: String,
    pub map: String,
    pub robot_config: Option<String>,
    pub start_pose: Pose,
    pub goal_pose: Pose,
    pub path_length_m: f64,
    pub obstacle_density_per_m: f64,
    pub n_obstacles: u32,
    pub obstacle_poses: Vec<Pose>,
    pub robot_radius_m: f64,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    /// `key = value` lines; `#` starts a comment. Implicit values (yaw,
    /// path length, density, obstacle count) are filled in here.
    pub fn parse(text: &str) -> Result<Self, CaptureError> {
        let bad = |m: String| CaptureError::MalformedScenarioConfig(m);
        let mut kv = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key = value", n + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(bad(format!("duplicate key {}", k.trim())));
            }
        }
        let req = |k: &str| kv.get(k).cloned().ok_or_else(|| bad(format!("missing key {k}")));
        let num = |k: &str, v: &str| v.parse::<f64>().map_err(|_| bad(format!("{k}: not a number: {v:?}")));
        let start_pose = parse_pose("start_pose", &req("start_pose")?).map_err(bad)?;
        let goal_pose = parse_pose("goal_pose", &req("goal_pose")?).map_err(bad)?;
        let obstacle_poses = match kv.get("obstacle_poses") {
            Some(v) if !v.is_empty() => {
                v.split(';').map(|p| parse_pose("obstacle_poses", p)).collect::<Result<Vec<_>, _>>().map_err(bad)?
            }
            _ => Vec::new(),
        };
        let path_length_m = match kv.get("path_length_m") {
            Some(v) => num("path_length_m", v)?,
            None => start_pose.distance(&goal_pose),
        };
        let n_obstacles = match kv.get("n_obstacles") {
            Some(v) => v.parse::<u32>().map_err(|_| bad(format!("n_obstacles: {v:?}")))?,
            None => obstacle_poses.len() as u32,
        };
        if n_obstacles as usize != obstacle_poses.len() && kv.contains_key("obstacle_poses") {
            return Err(bad(format!("n_obstacles = {n_obstacles} but {} obstacle poses", obstacle_poses.len())));
        }
        let obstacle_density_per_m = match kv.get("obstacle_density_per_m") {
            Some(v) => num("obstacle_density_per_m", v)?,
            None if path_length_m > 0.0 => f64::from(n_obstacles) / path_length_m,
            None => 0.0,
        };
        let robot_radius_m = num("robot_radius_m", &req("robot_radius_m")?)?;
        let seed = match kv.get("seed") {
            Some(v) => Some(v.parse::<u64>().map_err(|_| bad(format!("seed: {v:?}")))?),
            None => None,
        };
        Ok(ScenarioConfig {
            config_id: req("config_id")?,
            scenario: req("scenario")?,
            map: req("map")?,
            robot_config: kv.get("robot_config").cloned(),
            start_pose,
            goal_pose,
            path_length_m,
            obstacle_density_per_m,
            n_obstacles,
            obstacle_poses,
            robot_radius_m,
            seed,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# instantiated scenario configuration\n");
        let _ = writeln!(s, "config_id = {}", self.config_id);
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "map = {}", self.map);
        if let Some(rc) = &self.robot_config {
            let _ = writeln!(s, "robot_config = {rc}");
        }
        let _ = writeln!(s, "start_pose = {}  # x y yaw", self.start_pose);
        let _ = writeln!(s, "goal_pose = {}", self.goal_pose);
        let _ = writeln!(s, "path_length_m = {}", self.path_length_m);
        let _ = writeln!(s, "obstacle_density_per_m = {}", self.obstacle_density_per_m);
        let _ = writeln!(s, "n_obstacles = {}", self.n_obstacles);
        let poses: Vec<String> = self.obstacle_poses.iter().map(Pose::to_string).collect();
        let _ = writeln!(s, "obstacle_poses = {}", poses.join("; "));
        let _ = writeln!(s, "robot_radius_m = {}", self.robot_radius_m);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemInfo {
    pub hardware: String,
    pub middleware_distribution: String,
    pub runtime_environment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageSummary {
    pub topic: String,
    #[serde(rename = "type")]
    pub message_type: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagSummary {
    pub middleware_version: String,
    pub messages: Vec<MessageSummary>,
}

/// Per-run sidecar: system information plus the bag summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub system: SystemInfo,
    pub bag: BagSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunMetadata {
    pub fn parse(bytes: &[u8]) -> Result<Self, CaptureError> {
        serde_yaml::from_slice(bytes).map_err(|e| CaptureError::MalformedRunMetadata(e.to_string()))
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("plain data serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PersonRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orcid: Option<String>,
}

/// Metadata block of a FloorPlan model (`.fpm`). Every field is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentModelMeta {
    pub attribution: PersonRef,
    pub created: DateTime<Utc>,
    pub modified: DateTime<Utc>,
    /// Size of the model body in bytes.
    pub size: u64,
    pub authors: Vec<PersonRef>,
    pub license: String,
    pub description: String,
    pub map_location: String,
}

#[derive(Serialize, Deserialize)]
struct FrontMatter<T> {
    metadata: T,
}

const FENCE: &str = "---\n";

/// Splits a `---` fenced YAML front matter from the model body.
fn split_front_matter(text: &str) -> Option<(&str, &str)> {
    let rest = text.strip_prefix(FENCE)?;
    let end = rest.find("\n---\n")?;
    Some((&rest[..end + 1], &rest[end + 5..]))
}

pub fn parse_fpm(text: &str) -> Result<(EnvironmentModelMeta, &str), CaptureError> {
    let bad = |m: String| CaptureError::IncompleteEnvironmentMetadata(m);
    let (yaml, body) = split_front_matter(text).ok_or_else(|| bad("missing metadata block".into()))?;
    let fm: FrontMatter<EnvironmentModelMeta> = serde_yaml::from_str(yaml).map_err(|e| bad(e.to_string()))?;
    let m = fm.metadata;
    for (field, value) in [("license", &m.license), ("description", &m.description), ("map_location", &m.map_location)] {
        if value.trim().is_empty() {
            return Err(bad(format!("empty {field}")));
        }
    }
    if m.authors.is_empty() {
        return Err(bad("no authors".into()));
    }
    if m.modified < m.created {
        return Err(bad("modified precedes created".into()));
    }
    Ok((m, body))
}

pub fn write_fpm(meta: &EnvironmentModelMeta, body: &str) -> String {
    let yaml = serde_yaml::to_string(&FrontMatter { metadata: meta }).expect("plain data serializes");
    format!("{FENCE}{yaml}{FENCE}{body}")
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentFiles {
    #[serde(default)]
    pub launch: Vec<String>,
    #[serde(default)]
    pub parameters: Vec<String>,
    #[serde(default)]
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationMetadata {
    pub authors: Vec<PersonRef>,
    pub created: DateTime<Utc>,
    pub modified: DateTime<Utc>,
    #[serde(default)]
    pub version: Option<String>,
    /// Agent name to the files that configure it.
    #[serde(default)]
    pub agents: BTreeMap<String, AgentFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationBody {
    pub abstract_scenario: String,
    pub maps: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_yaml::Value>,
}

/// Scenario variation file (`.vast`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationFile {
    pub metadata: VariationMetadata,
    pub variation: VariationBody,
}

impl VariationFile {
    pub fn parse(bytes: &[u8]) -> Result<Self, CaptureError> {
        serde_yaml::from_slice(bytes).map_err(|e| CaptureError::MalformedVariation(e.to_string()))
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("plain data serializes")
    }

    /// Every input file the variation refers to, sorted and deduplicated.
    pub fn referenced_files(&self) -> Vec<String> {
        let mut out: Vec<String> = std::iter::once(self.variation.abstract_scenario.clone())
            .chain(self.variation.maps.iter().cloned())
            .chain(
                self.metadata
                    .agents
                    .values()
                    .flat_map(|a| a.launch.iter().chain(&a.parameters).chain(&a.models).cloned()),
            )
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Version block carried by robot configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfigMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
    pub version: String,
    pub modified: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfigInfo {
    pub meta: RobotConfigMeta,
    pub robot_radius: Option<f64>,
}

fn find_key<'a>(v: &'a serde_yaml::Value, key: &str) -> Option<&'a serde_yaml::Value> {
    match v {
        serde_yaml::Value::Mapping(m) => m
            .iter()
            .find_map(|(k, v)| if k.as_str() == Some(key) { Some(v) } else { None })
            .or_else(|| m.values().find_map(|v| find_key(v, key))),
        _ => None,
    }
}

/// Reads the `metadata` block and the first `robot_radius` anywhere in a
/// navigation parameter file.
pub fn parse_robot_config(bytes: &[u8]) -> Result<RobotConfigInfo, CaptureError> {
    let bad = |m: String| CaptureError::MalformedRobotConfig(m);
    let doc: serde_yaml::Value = serde_yaml::from_slice(bytes).map_err(|e| bad(e.to_string()))?;
    let meta = doc.get("metadata").ok_or_else(|| bad("missing metadata block".into()))?;
    let meta: RobotConfigMeta = serde_yaml::from_value(meta.clone()).map_err(|e| bad(e.to_string()))?;
    Ok(RobotConfigInfo { meta, robot_radius: find_key(&doc, "robot_radius").and_then(serde_yaml::Value::as_f64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScenarioConfig {
        ScenarioConfig {
            config_id: "c_0007".into(),
            scenario: "s_0003".into(),
            map: "map_00".into(),
            robot_config: Some("configs/c_0007/nav2_params.yaml".into()),
            start_pose: Pose { x: 1.5, y: 2.0, yaw: 0.25 },
            goal_pose: Pose { x: 11.5, y: 2.0, yaw: 0.25 },
            path_length_m: 10.0,
            obstacle_density_per_m: 0.2,
            n_obstacles: 2,
            obstacle_poses: vec![Pose { x: 4.0, y: 2.1, yaw: 0.0 }, Pose { x: 8.0, y: 1.9, yaw: 0.0 }],
            robot_radius_m: 0.175,
            seed: Some(99),
        }
    }

    #[test]
    fn scenario_config_round_trip() {
        let c = sample();
        assert_eq!(ScenarioConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn materializes_defaults() {
        let text = "config_id = c\nscenario = s\nmap = m\nstart_pose = 0 0\ngoal_pose = 3 4 # two values only\nobstacle_poses = 1 1\nrobot_radius_m = 0.22\n";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.start_pose.yaw, 0.0);
        assert_eq!(c.path_length_m, 5.0);
        assert_eq!(c.n_obstacles, 1);
        assert_eq!(c.obstacle_density_per_m, 0.2);
        assert!(ScenarioConfig::parse("config_id = c\n").is_err());
        assert!(ScenarioConfig::parse("nonsense\n").is_err());
    }

    #[test]
    fn fpm_round_trip_and_completeness() {
        let meta = EnvironmentModelMeta {
            attribution: PersonRef { name: "Josiah Carberry".into(), orcid: Some("0000-0002-1825-0097".into()) },
            created: "2024-11-04T09:00:00Z".parse().unwrap(),
            modified: "2025-02-10T14:30:00Z".parse().unwrap(),
            size: 12,
            authors: vec![PersonRef { name: "Josiah Carberry".into(), orcid: None }],
            license: "CC-BY-4.0".into(),
            description: "office floor".into(),
            map_location: "Building C".into(),
        };
        let text = write_fpm(&meta, "Space a {}\n");
        let (back, body) = parse_fpm(&text).unwrap();
        assert_eq!(back, meta);
        assert_eq!(body, "Space a {}\n");
        let stripped = text.replace("license: CC-BY-4.0\n", "");
        assert!(matches!(parse_fpm(&stripped), Err(CaptureError::IncompleteEnvironmentMetadata(_))));
        assert!(parse_fpm("Space a {}").is_err());
    }

    #[test]
    fn robot_config_reads_nested_radius() {
        let text = "metadata:\n  derived_from: inputs/robot/nav2_params.yaml\n  version: 1.2.0+c_0001\n  modified: 2025-05-01T00:00:00Z\nlocal_costmap:\n  local_costmap:\n    ros__parameters:\n      robot_radius: 0.22\n";
        let info = parse_robot_config(text.as_bytes()).unwrap();
        assert_eq!(info.robot_radius, Some(0.22));
        assert_eq!(info.meta.version, "1.2.0+c_0001");
        assert!(parse_robot_config(b"a: 1\n").is_err());
    }
}
