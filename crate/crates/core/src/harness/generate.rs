//! Writes a synthetic campaign as a standardized results tree.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rust_decimal::Decimal;
use serde::Serialize;

use super::{rng_for, ConfigKey, FailureKind, HarnessConfig, HarnessError, Stream};
use crate::capture::layout::{
    write_fpm, AgentFiles, BagSummary, EnvironmentModelMeta, MessageSummary, PersonRef, Pose, RunMetadata, ScenarioConfig,
    SystemInfo, VariationBody, VariationFile, VariationMetadata, RUN_METADATA, SCENARIO_CONFIG, SCENARIO_FILE, SUMMARY_FILE,
};
use crate::capture::manifest::MANIFEST_FILE;
use crate::capture::report::{serialize_report, TestReport, REPORT_FILE};

const ROBOT: &str = "turtlebot4";
const ROBOT_LAUNCH: &str = "inputs/robot/turtlebot4.launch.py";
const ROBOT_PARAMS: &str = "inputs/robot/nav2_params.yaml";
const ROBOT_MODEL: &str = "inputs/robot/turtlebot4.urdf";
const ABSTRACT_SCENARIO: &str = "inputs/scenario.osc";
const VARIATION: &str = "inputs/variation.vast";
pub(crate) const DOI: &str = "10.5281/zenodo.18702398";
const SPEED_M_S: f64 = 0.5;
const TIMEOUT_S: f64 = 60.0;
/// Runs start on fixed slots, longer than any run, so timestamps never overlap.
const SLOT_S: i64 = 90;
const POSE_RATE_HZ: u32 = 10;
const MAP_SIZE_M: f64 = 30.0;

/// Counts of what was written; also stored as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub seed: u64,
    pub n_maps: u32,
    pub n_scenarios: u32,
    pub n_configs: u32,
    pub n_runs: u64,
    pub n_failed: u64,
    /// Distance driven by successful runs.
    pub total_distance_m: f64,
}

fn campaign_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 6, 2, 8, 0, 0).unwrap()
}

fn inputs_date() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 5, 12, 9, 30, 0).unwrap()
}

fn put(root: &Path, rel: &str, bytes: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn map_id(map: u32) -> String {
    format!("map_{map:02}")
}

fn scenario_id(index: u32) -> String {
    format!("s_{index:04}")
}

fn config_id(index: u32) -> String {
    format!("c_{index:04}")
}

fn run_width(runs: u32) -> usize {
    (runs.saturating_sub(1).max(1).ilog10() as usize + 1).max(2)
}

fn carberry() -> PersonRef {
    PersonRef { name: "Josiah Carberry".into(), orcid: Some("0000-0002-1825-0097".into()) }
}

fn second_author() -> PersonRef {
    PersonRef { name: "Ada Dataworth".into(), orcid: Some("0000-0002-1694-233X".into()) }
}

/// Start and goal of one path: a straight segment of the configured length
/// inside the map, seeded by (map, path).
fn path_geometry(cfg: &HarnessConfig, map: u32, path: u32) -> (Pose, Pose) {
    let mut rng = rng_for(cfg.seed, Stream::Geometry, map, path);
    let l = cfg.path_length_m;
    let heading = rng.random_range(-PI..PI);
    let (dx, dy) = (l * heading.cos(), l * heading.sin());
    let margin = 1.0;
    let span = |d: f64| {
        let lo = margin + (-d).max(0.0);
        let hi = (MAP_SIZE_M - margin - d.max(0.0)).max(lo + 1e-9);
        (lo, hi)
    };
    let (xl, xh) = span(dx);
    let (yl, yh) = span(dy);
    let x = rng.random_range(xl..xh);
    let y = rng.random_range(yl..yh);
    let yaw = round3(heading);
    (
        Pose { x: round3(x), y: round3(y), yaw },
        Pose { x: round3(x + dx), y: round3(y + dy), yaw },
    )
}

fn obstacle_count(cfg: &HarnessConfig, density: f64) -> u32 {
    (density * cfg.path_length_m).round() as u32
}

/// Obstacles spread along the path with a small lateral offset.
fn obstacles(cfg: &HarnessConfig, scenario: u32, start: &Pose, goal: &Pose, n: u32) -> Vec<Pose> {
    let mut rng = rng_for(cfg.seed, Stream::Obstacles, scenario, 0);
    (0..n)
        .map(|i| {
            let t = (f64::from(i) + rng.random_range(0.3..0.7)) / f64::from(n);
            let off = rng.random_range(-0.3..0.3);
            let (nx, ny) = (-(start.yaw.sin()), start.yaw.cos());
            Pose {
                x: round3(start.x + t * (goal.x - start.x) + off * nx),
                y: round3(start.y + t * (goal.y - start.y) + off * ny),
                yaw: 0.0,
            }
        })
        .collect()
}

fn scenario_config(cfg: &HarnessConfig, key: &ConfigKey) -> ScenarioConfig {
    let (start, goal) = path_geometry(cfg, key.map, key.path);
    let s = key.scenario_index(cfg);
    let n = obstacle_count(cfg, key.density);
    let id = config_id(key.index);
    ScenarioConfig {
        robot_config: Some(format!("configs/{id}/nav2_params.yaml")),
        config_id: id,
        scenario: scenario_id(s),
        map: map_id(key.map),
        start_pose: start,
        goal_pose: goal,
        path_length_m: cfg.path_length_m,
        obstacle_density_per_m: key.density,
        n_obstacles: n,
        obstacle_poses: obstacles(cfg, s, &start, &goal, n),
        robot_radius_m: key.radius,
        seed: Some(cfg.seed ^ u64::from(key.index)),
    }
}

fn manifest_yaml(cfg: &HarnessConfig) -> String {
    let densities: Vec<String> = cfg.densities.iter().map(f64::to_string).collect();
    let radii: Vec<String> = cfg.radii_m.iter().map(f64::to_string).collect();
    format!(
        r#"metadata:
  title: Navigation Validation Campaign (synthetic)
  description: >-
    Simulated point-to-point navigation of a differential-drive robot across
    {maps} floor plans, {paths} paths per map, varying obstacle density and
    robot footprint radius.
  creators:
    - name: Josiah Carberry
      orcid: 0000-0002-1825-0097
      affiliation: Brown University
    - name: Ada Dataworth
      orcid: 0000-0002-1694-233X
  keywords: ["robotics", "navigation", "ROS2", "simulation", "provenance"]
  license: "CC-BY-4.0"
  dataset_iri: {iri}
  doi: "{DOI}"
  issued: "2025-06-20T12:00:00Z"
  version: "1.0.0"
publication:
  - zip:
      filename: "{{timestamp:%Y%m%d}}_metadata.zip"
      include_filter: ["*.jsonld", "*.json"]
  - zip:
      filename: "{{timestamp:%Y%m%d}}_data.zip"
      include_filter:
        - "{MANIFEST_FILE}"
        - "inputs/**"
        - "environments/**"
        - "scenarios/**"
        - "configs/**"
execution:
  n_runs: {runs}
  variation:
    path_length_m: {length}
    obstacle_densities_per_m: [{densities}]
    robot_radii_m: [{radii}]
  robot:
    name: {ROBOT}
    launch: ["{ROBOT_LAUNCH}"]
    parameters: ["{ROBOT_PARAMS}"]
    models: ["{ROBOT_MODEL}"]
  abstract_scenario: {ABSTRACT_SCENARIO}
  variation_file: {VARIATION}
  software_agents:
    robovast: https://purl.org/robovast/software/robovast
    floorplan-dsl: https://purl.org/robovast/software/floorplan-dsl
    rosbag_to_csv: https://purl.org/robovast/software/rosbag_to_csv
    nav_metrics: https://purl.org/robovast/software/nav_metrics
  postprocessing:
    - plugin: rosbag_to_csv
      parameters: {{rate_hz: {POSE_RATE_HZ}, topics: "/odom,/amcl_pose"}}
      outputs: [postprocess/poses.csv]
    - plugin: nav_metrics
      parameters: {{goal_tolerance_m: 0.25}}
      outputs: [postprocess/metrics.json]
"#,
        maps = cfg.n_maps,
        paths = cfg.paths_per_map,
        iri = cfg.dataset_iri,
        runs = cfg.runs_per_config,
        length = cfg.path_length_m,
        densities = densities.join(", "),
        radii = radii.join(", "),
    )
}

fn write_inputs(cfg: &HarnessConfig, root: &Path) -> Result<(), HarnessError> {
    put(root, MANIFEST_FILE, manifest_yaml(cfg))?;
    put(
        root,
        ABSTRACT_SCENARIO,
        "import osc.standard\nimport osc.robotics\n\nscenario nav_point_to_point:\n    robot: differential_robot\n    start_pose: pose_3d\n    goal_pose: pose_3d\n    obstacles: list of static_object\n    do serial:\n        robot.move_to(goal_pose) with:\n            until robot.at(goal_pose, tolerance: 0.25m)\n",
    )?;
    let mut maps = Vec::new();
    for m in 0..cfg.n_maps {
        let id = map_id(m);
        let body = format!(
            "FloorPlan {id} {{\n  Space hall {{ shape: Polygon [(0,0), ({s},0), ({s},{s}), (0,{s})] }}\n  Wall thickness 0.2 height 2.5\n  Door d{m} width {w}\n}}\n",
            s = MAP_SIZE_M,
            w = 0.9 + 0.1 * f64::from(m % 3),
        );
        let meta = EnvironmentModelMeta {
            attribution: carberry(),
            created: Utc.with_ymd_and_hms(2024, 11, 4 + m % 20, 9, 0, 0).unwrap(),
            modified: Utc.with_ymd_and_hms(2025, 2, 10, 14, 30, 0).unwrap(),
            size: body.len() as u64,
            authors: vec![carberry(), second_author()],
            license: "CC-BY-4.0".into(),
            description: format!("Office floor plan {m} with a {MAP_SIZE_M} m square hall"),
            map_location: format!("Building C, level {m}"),
        };
        let path = format!("inputs/maps/{id}.fpm");
        put(root, &path, write_fpm(&meta, &body))?;
        maps.push(path);
        write_environment(root, &id, m)?;
    }
    let variation = VariationFile {
        metadata: VariationMetadata {
            authors: vec![carberry()],
            created: Utc.with_ymd_and_hms(2025, 3, 3, 10, 0, 0).unwrap(),
            modified: inputs_date(),
            version: Some("2.1.0".into()),
            agents: [(
                ROBOT.to_string(),
                AgentFiles {
                    launch: vec![ROBOT_LAUNCH.into()],
                    parameters: vec![ROBOT_PARAMS.into()],
                    models: vec![ROBOT_MODEL.into()],
                },
            )]
            .into(),
        },
        variation: VariationBody {
            abstract_scenario: ABSTRACT_SCENARIO.into(),
            maps,
            parameters: [
                ("path_length_m".to_string(), serde_yaml::Value::from(cfg.path_length_m)),
                ("paths_per_map".to_string(), serde_yaml::Value::from(cfg.paths_per_map)),
                ("obstacle_densities_per_m".to_string(), serde_yaml::to_value(&cfg.densities).expect("floats")),
                ("robot_radii_m".to_string(), serde_yaml::to_value(&cfg.radii_m).expect("floats")),
                ("seed".to_string(), serde_yaml::Value::from(cfg.seed)),
            ]
            .into(),
        },
    };
    put(root, VARIATION, variation.to_yaml())?;
    put(
        root,
        ROBOT_LAUNCH,
        "from launch import LaunchDescription\nfrom launch_ros.actions import Node\n\n\ndef generate_launch_description():\n    return LaunchDescription([\n        Node(package=\"nav2_bringup\", executable=\"bringup\", parameters=[\"nav2_params.yaml\"]),\n    ])\n",
    )?;
    put(root, ROBOT_PARAMS, robot_params(None, "1.0.0", cfg.radii_m[0]))?;
    put(
        root,
        ROBOT_MODEL,
        "<?xml version=\"1.0\"?>\n<robot name=\"turtlebot4\">\n  <link name=\"base_link\">\n    <collision><geometry><cylinder radius=\"0.1705\" length=\"0.35\"/></geometry></collision>\n  </link>\n</robot>\n",
    )
}

fn robot_params(derived_from: Option<&str>, version: &str, radius: f64) -> String {
    let derived = derived_from.map(|d| format!("  derived_from: {d}\n")).unwrap_or_default();
    format!(
        "metadata:\n{derived}  version: \"{version}\"\n  modified: \"{modified}\"\ncontroller_server:\n  ros__parameters:\n    controller_frequency: 20.0\n    FollowPath:\n      max_vel_x: {SPEED_M_S}\nlocal_costmap:\n  local_costmap:\n    ros__parameters:\n      robot_radius: {radius}\n      inflation_layer:\n        inflation_radius: 0.55\nglobal_costmap:\n  global_costmap:\n    ros__parameters:\n      robot_radius: {radius}\n",
        modified = inputs_date().format("%Y-%m-%dT%H:%M:%SZ"),
    )
}

fn write_environment(root: &Path, id: &str, m: u32) -> Result<(), HarnessError> {
    let dir = format!("environments/{id}");
    let s = MAP_SIZE_M;
    put(
        root,
        &format!("{dir}/{id}.stl"),
        format!("solid {id}\n  facet normal 0 0 1\n    outer loop\n      vertex 0 0 0\n      vertex {s} 0 0\n      vertex {s} {s} 0\n    endloop\n  endfacet\nendsolid {id}\n"),
    )?;
    // 16x16 occupancy grid with a wall border and one interior wall per map
    let mut pgm = String::from("P2\n16 16\n255\n");
    for y in 0..16u32 {
        let row: Vec<&str> = (0..16u32)
            .map(|x| if x == 0 || y == 0 || x == 15 || y == 15 || (x == 4 + m % 8 && y < 10) { "0" } else { "254" })
            .collect();
        pgm.push_str(&row.join(" "));
        pgm.push('\n');
    }
    put(root, &format!("{dir}/{id}.pgm"), pgm)?;
    put(
        root,
        &format!("{dir}/{id}.sdf"),
        format!("<?xml version=\"1.0\"?>\n<sdf version=\"1.9\">\n  <world name=\"{id}\">\n    <model name=\"{id}\"><static>true</static><link name=\"walls\"><visual name=\"v\"><geometry><mesh><uri>{id}.stl</uri></mesh></geometry></visual></link></model>\n  </world>\n</sdf>\n"),
    )
}

fn write_scenario(root: &Path, sc: &ScenarioConfig) -> Result<(), HarnessError> {
    let mut x = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OpenSCENARIO>\n");
    let _ = writeln!(x, "  <FileHeader description=\"{}\" revMajor=\"1\" revMinor=\"2\"/>", sc.scenario);
    let _ = writeln!(x, "  <RoadNetwork><SceneGraphFile filepath=\"../../environments/{0}/{0}.sdf\"/></RoadNetwork>", sc.map);
    let _ = writeln!(x, "  <ParameterDeclarations>");
    for (name, p) in [("start", sc.start_pose), ("goal", sc.goal_pose)] {
        let _ = writeln!(x, "    <ParameterDeclaration name=\"{name}_pose\" parameterType=\"string\" value=\"{p}\"/>");
    }
    let _ = writeln!(x, "  </ParameterDeclarations>\n  <Entities>");
    for (i, o) in sc.obstacle_poses.iter().enumerate() {
        let _ = writeln!(x, "    <MiscObject name=\"obstacle_{i}\" x=\"{}\" y=\"{}\"/>", o.x, o.y);
    }
    x.push_str("  </Entities>\n</OpenSCENARIO>\n");
    put(root, &format!("scenarios/{}/{SCENARIO_FILE}", sc.scenario), x)
}

#[derive(Serialize)]
struct Metrics {
    success: bool,
    duration_s: f64,
    distance_travelled_m: f64,
    path_length_m: f64,
    mean_position_error_m: f64,
    max_position_error_m: f64,
}

struct RunOutcome {
    success: bool,
    distance_m: f64,
}

fn write_run(
    cfg: &HarnessConfig,
    root: &Path,
    sc: &ScenarioConfig,
    key: &ConfigKey,
    run: u32,
    failure: Option<FailureKind>,
) -> Result<RunOutcome, HarnessError> {
    let mut rng = rng_for(cfg.seed, Stream::Run, key.index, run);
    let l = cfg.path_length_m;
    let nominal = l / SPEED_M_S;
    let (progress, seconds) = match failure {
        None => (1.0, nominal * rng.random_range(1.0..1.1)),
        Some(FailureKind::Spawn) => (0.0, rng.random_range(2.0..3.0)),
        Some(FailureKind::Collision) => {
            let p = rng.random_range(0.3..0.8);
            (p, nominal * p * rng.random_range(1.0..1.1))
        }
        Some(FailureKind::Timeout) => (rng.random_range(0.6..0.95), TIMEOUT_S),
    };
    let ms = (seconds * 1000.0).round() as i64;
    let slot = i64::from(key.index) * i64::from(cfg.runs_per_config) + i64::from(run);
    let started = campaign_start() + Duration::seconds(slot * SLOT_S);
    let report = TestReport::new(failure.is_none(), Decimal::new(ms, 3), started, failure.map(|k| k.message().to_string()));
    let dir = format!("configs/{}/runs/{run:0w$}", sc.config_id, w = run_width(cfg.runs_per_config));
    put(root, &format!("{dir}/{REPORT_FILE}"), serialize_report(&report, &format!("{}/{run}", sc.config_id)))?;

    let secs = ms as f64 / 1000.0;
    let count = |hz: f64| (secs * hz).round() as u64;
    let meta = RunMetadata {
        system: SystemInfo {
            hardware: "x86_64, 16 cores, 64 GiB RAM".into(),
            middleware_distribution: "ROS 2 Jazzy".into(),
            runtime_environment: "Gazebo Harmonic in container robovast/sim:2025.06".into(),
        },
        bag: BagSummary {
            middleware_version: "rclcpp 28.1.6".into(),
            messages: vec![
                MessageSummary { topic: "/amcl_pose".into(), message_type: "geometry_msgs/msg/PoseWithCovarianceStamped".into(), count: count(2.0) },
                MessageSummary { topic: "/cmd_vel".into(), message_type: "geometry_msgs/msg/Twist".into(), count: count(20.0 * progress.max(0.05)) },
                MessageSummary { topic: "/odom".into(), message_type: "nav_msgs/msg/Odometry".into(), count: count(20.0) },
                MessageSummary { topic: "/scan".into(), message_type: "sensor_msgs/msg/LaserScan".into(), count: count(10.0) },
            ],
        },
        seed: Some(rng.random()),
    };
    put(root, &format!("{dir}/{RUN_METADATA}"), meta.to_yaml())?;

    let mut bag = b"\x89MCAP0\r\n".to_vec();
    bag.extend_from_slice(format!("{}:{}:{}", sc.config_id, run, meta.bag.messages.iter().map(|m| m.count).sum::<u64>()).as_bytes());
    put(root, &format!("{dir}/rosbag/rosbag_0.mcap"), bag)?;

    let mut log = format!("[{}] [INFO] [launch]: robot {ROBOT} in {}\n", started.format("%H:%M:%S%.3f"), sc.map);
    match failure {
        None => { let _ = writeln!(log, "[INFO] [bt_navigator]: goal succeeded after {secs:.3} s"); }
        Some(k) => { let _ = writeln!(log, "[ERROR] [bt_navigator]: {}", k.message()); }
    }
    put(root, &format!("{dir}/logs/launch.log"), log)?;

    // ground truth along the segment, estimate with Gaussian noise
    let noise = Normal::new(0.0, cfg.pose_noise_m.max(1e-12)).expect("finite sigma");
    let mut csv = String::from("t,gt_x,gt_y,est_x,est_y\n");
    let samples = ((secs * f64::from(POSE_RATE_HZ)).floor() as u32).max(1);
    let (mut err_sum, mut err_max) = (0.0f64, 0.0f64);
    for i in 0..=samples {
        let t = f64::from(i) / f64::from(POSE_RATE_HZ);
        let f = if secs > 0.0 { (t / secs).min(1.0) * progress } else { 0.0 };
        let gx = sc.start_pose.x + f * (sc.goal_pose.x - sc.start_pose.x);
        let gy = sc.start_pose.y + f * (sc.goal_pose.y - sc.start_pose.y);
        let (ex, ey) = if cfg.pose_noise_m > 0.0 { (gx + noise.sample(&mut rng), gy + noise.sample(&mut rng)) } else { (gx, gy) };
        let e = (ex - gx).hypot(ey - gy);
        err_sum += e;
        err_max = err_max.max(e);
        let _ = writeln!(csv, "{t:.1},{gx:.3},{gy:.3},{ex:.3},{ey:.3}");
    }
    put(root, &format!("{dir}/postprocess/poses.csv"), csv)?;
    let metrics = Metrics {
        success: failure.is_none(),
        duration_s: secs,
        distance_travelled_m: round3(l * progress),
        path_length_m: l,
        mean_position_error_m: round3(err_sum / f64::from(samples + 1)),
        max_position_error_m: round3(err_max),
    };
    let mut json = serde_json::to_string_pretty(&metrics).expect("plain data serializes");
    json.push('\n');
    put(root, &format!("{dir}/postprocess/metrics.json"), json)?;
    Ok(RunOutcome { success: failure.is_none(), distance_m: l * progress })
}

fn write_config(cfg: &HarnessConfig, root: &Path, key: &ConfigKey) -> Result<Vec<RunOutcome>, HarnessError> {
    let sc = scenario_config(cfg, key);
    let dir = format!("configs/{}", sc.config_id);
    put(root, &format!("{dir}/{SCENARIO_CONFIG}"), sc.to_text())?;
    put(
        root,
        &format!("{dir}/nav2_params.yaml"),
        robot_params(Some(ROBOT_PARAMS), &format!("1.0.0+{}", sc.config_id), key.radius),
    )?;
    // the first configuration of a scenario writes the shared scenario file
    if key.radius == cfg.radii_m[0] {
        write_scenario(root, &sc)?;
    }
    let (failed, kind) = cfg.failures_of(key);
    (0..cfg.runs_per_config)
        .map(|r| write_run(cfg, root, &sc, key, r, if failed.contains(&r) { kind } else { None }))
        .collect()
}

/// Writes the whole campaign below `out_dir`, which must be empty or absent.
/// Equal configurations produce byte-identical trees.
pub fn generate(cfg: &HarnessConfig, out_dir: &Path) -> Result<CampaignSummary, HarnessError> {
    cfg.validate()?;
    if out_dir.exists() {
        let mut entries = fs::read_dir(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
        if entries.next().is_some() {
            return Err(HarnessError::OutputNotEmpty(out_dir.to_path_buf()));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    write_inputs(cfg, out_dir)?;
    let outcomes: Vec<Vec<RunOutcome>> =
        cfg.configs().par_iter().map(|k| write_config(cfg, out_dir, k)).collect::<Result<_, _>>()?;
    let runs = outcomes.iter().flatten();
    let summary = CampaignSummary {
        seed: cfg.seed,
        n_maps: cfg.n_maps,
        n_scenarios: cfg.n_scenarios(),
        n_configs: cfg.n_configs(),
        n_runs: cfg.n_runs(),
        n_failed: runs.clone().filter(|r| !r.success).count() as u64,
        total_distance_m: round3(runs.filter(|r| r.success).map(|r| r.distance_m).sum()),
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("plain data serializes");
    json.push('\n');
    put(out_dir, SUMMARY_FILE, json)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::collectors::builtin_registry;
    use crate::capture::{parse_manifest, run_collectors, scan_campaign, CollectContext};

    fn small() -> HarnessConfig {
        let mut c = HarnessConfig { n_maps: 2, paths_per_map: 2, runs_per_config: 3, ..HarnessConfig::default() };
        c.failure_profile = vec![super::super::FailureRule::new(
            super::super::Selector { maps: [1].into(), ..Default::default() },
            super::super::FailureMode::FailKOfN(1),
            FailureKind::Collision,
        )];
        c
    }

    #[test]
    fn run_dir_width() {
        assert_eq!(run_width(1), 2);
        assert_eq!(run_width(10), 2);
        assert_eq!(run_width(100), 2);
        assert_eq!(run_width(101), 3);
    }

    #[test]
    fn geometry_stays_inside_the_map() {
        let c = HarnessConfig::default();
        for m in 0..5 {
            for p in 0..10 {
                let (s, g) = path_geometry(&c, m, p);
                assert!((s.distance(&g) - c.path_length_m).abs() < 0.01);
                for q in [s, g] {
                    assert!((0.0..=MAP_SIZE_M).contains(&q.x) && (0.0..=MAP_SIZE_M).contains(&q.y));
                }
            }
        }
    }

    #[test]
    fn tree_scans_cleanly_and_collects() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("campaign");
        let cfg = small();
        let summary = generate(&cfg, &root).unwrap();
        assert_eq!(summary.n_configs, 16);
        assert_eq!(summary.n_runs, 48);
        assert_eq!(summary.n_failed, 8);
        let manifest = parse_manifest(&fs::read(root.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert!(manifest.warnings.is_empty(), "{:?}", manifest.warnings);
        let scan = scan_campaign(&root, &manifest).unwrap();
        assert!(scan.violations.is_empty(), "{:?}", scan.violations);
        assert_eq!(scan.runs.len(), 48);
        assert_eq!(scan.scenarios.len(), 8);
        assert_eq!(scan.runs.iter().filter(|r| !r.success()).count(), 8);
        let collected = run_collectors(&builtin_registry(), &CollectContext::new(&manifest, &scan)).unwrap();
        assert!(collected.failures.is_empty(), "{:?}", collected.failures);
        assert!(matches!(generate(&cfg, &root), Err(HarnessError::OutputNotEmpty(_))));
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        generate(&cfg, &dir.path().join("a")).unwrap();
        generate(&cfg, &dir.path().join("b")).unwrap();
        let files = |p: &Path| -> Vec<(String, Vec<u8>)> {
            walkdir::WalkDir::new(p)
                .sort_by_file_name()
                .into_iter()
                .flatten()
                .filter(|e| e.file_type().is_file())
                .map(|e| (e.path().strip_prefix(p).unwrap().display().to_string(), fs::read(e.path()).unwrap()))
                .collect()
        };
        assert_eq!(files(&dir.path().join("a")), files(&dir.path().join("b")));
    }
}
