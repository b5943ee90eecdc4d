//! Walks a results tree and reads every configuration and run directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use super::layout::{
    self, EnvironmentModelMeta, RobotConfigInfo, RunMetadata, ScenarioConfig, VariationFile, CONFIGS_DIR,
    ENVIRONMENTS_DIR, INPUTS_DIR, MAPS_DIR, RUNS_DIR, RUN_METADATA, SCENARIOS_DIR, SCENARIO_CONFIG, SCENARIO_FILE,
};
use super::manifest::{CampaignManifest, MANIFEST_FILE};
use super::report::{parse_test_report, TestReport, REPORT_FILE};
use super::CaptureError;
use crate::identity::RelPath;

/// A file below the results root with its size and SHA-256.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileInfo {
    pub path: RelPath,
    pub size: u64,
    pub sha256: String,
}

impl FileInfo {
    pub fn read(root: &Path, path: RelPath) -> Result<Self, CaptureError> {
        let abs = abs_path(root, &path);
        let bytes = fs::read(&abs).map_err(|e| CaptureError::io(&abs, e))?;
        Ok(FileInfo { size: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)), path })
    }
}

pub fn abs_path(root: &Path, rel: &RelPath) -> PathBuf {
    let mut p = root.to_path_buf();
    p.extend(rel.segments());
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArtifactKind {
    Bag,
    Log,
    TestReport,
    Config,
    Csv,
    Video,
    Other,
}

impl ArtifactKind {
    /// Classifies a path relative to its run directory.
    pub fn classify(rel: &str) -> Self {
        let lower = rel.to_ascii_lowercase();
        let ext = lower.rsplit_once('.').map(|(_, e)| e).unwrap_or("");
        if lower == REPORT_FILE {
            ArtifactKind::TestReport
        } else if lower == RUN_METADATA {
            ArtifactKind::Config
        } else if lower.starts_with("rosbag/") || matches!(ext, "mcap" | "db3" | "bag") {
            ArtifactKind::Bag
        } else if lower.starts_with("logs/") || ext == "log" {
            ArtifactKind::Log
        } else if ext == "csv" {
            ArtifactKind::Csv
        } else if matches!(ext, "mp4" | "webm" | "mkv" | "avi") {
            ArtifactKind::Video
        } else {
            ArtifactKind::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file: FileInfo,
    pub kind: ArtifactKind,
    /// Path relative to the run directory.
    pub local: String,
}

/// Outcome, timing, system information and artifact catalog of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_dir: RelPath,
    pub config_id: String,
    pub report: TestReport,
    pub metadata: RunMetadata,
    pub artifacts: Vec<Artifact>,
}

impl RunRecord {
    pub fn success(&self) -> bool {
        self.report.success
    }

    pub fn artifacts_of(&self, kind: ArtifactKind) -> impl Iterator<Item = &Artifact> {
        self.artifacts.iter().filter(move |a| a.kind == kind)
    }

    pub fn artifact(&self, local: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.local == local)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfigRecord {
    pub file: FileInfo,
    pub info: RobotConfigInfo,
}

/// One configuration directory and its scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRecord {
    pub id: String,
    pub dir: RelPath,
    pub scenario_config: FileInfo,
    pub params: ScenarioConfig,
    pub robot_config: Option<RobotConfigRecord>,
    pub run_dirs: Vec<RelPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub id: String,
    pub dir: RelPath,
    pub file: FileInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapRecord {
    pub id: String,
    pub file: FileInfo,
    pub meta: EnvironmentModelMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentRecord {
    pub map_id: String,
    pub mesh: FileInfo,
    pub grid: FileInfo,
    pub world: FileInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum InputRole {
    Manifest,
    AbstractScenario,
    Variation,
    Map,
    RobotLaunch,
    RobotParameters,
    RobotModel,
    Simulation,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputFile {
    pub file: FileInfo,
    pub role: InputRole,
    pub robot_meta: Option<RobotConfigInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutViolation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for LayoutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Everything read from a results tree. Collections are sorted by path.
#[derive(Debug, Clone, Default)]
pub struct ScanResult {
    pub root: PathBuf,
    pub inputs: Vec<InputFile>,
    pub maps: Vec<MapRecord>,
    pub variation: Option<VariationFile>,
    pub environments: Vec<EnvironmentRecord>,
    pub scenarios: Vec<ScenarioRecord>,
    pub configs: Vec<ConfigRecord>,
    pub runs: Vec<RunRecord>,
    pub violations: Vec<LayoutViolation>,
}

impl ScanResult {
    pub fn input(&self, path: &str) -> Option<&InputFile> {
        self.inputs.iter().find(|i| i.file.path.to_string() == path)
    }

    pub fn inputs_with(&self, role: InputRole) -> impl Iterator<Item = &InputFile> {
        self.inputs.iter().filter(move |i| i.role == role)
    }

    pub fn config(&self, id: &str) -> Option<&ConfigRecord> {
        self.configs.iter().find(|c| c.id == id)
    }

    /// Fails with the accumulated violations, if any.
    pub fn ensure_clean(&self) -> Result<(), CaptureError> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(CaptureError::LayoutViolation(self.violations.clone()))
        }
    }
}

fn violation(path: impl fmt::Display, message: impl Into<String>) -> LayoutViolation {
    LayoutViolation { path: path.to_string(), message: message.into() }
}

fn rel(s: &str) -> RelPath {
    s.parse().expect("static layout path")
}

/// Sorted names of the direct subdirectories of `dir`.
fn subdirs(dir: &Path) -> Result<Vec<String>, CaptureError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CaptureError::io(dir, e))? {
        let entry = entry.map_err(|e| CaptureError::io(dir, e))?;
        if entry.file_type().map_err(|e| CaptureError::io(entry.path(), e))?.is_dir() {
            if let Some(name) = entry.file_name().to_str() {
                out.push(name.to_string());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Sorted relative paths of all files below `dir`.
fn files_below(root: &Path, dir: &Path) -> Result<Vec<RelPath>, CaptureError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| CaptureError::io(dir, e.into()))?;
        if entry.file_type().is_file() {
            out.push(RelPath::from_fs(root, entry.path())?);
        }
    }
    Ok(out)
}

fn role_of(path: &str, manifest: &CampaignManifest) -> InputRole {
    let exec = &manifest.execution;
    let robot = &exec.robot;
    if path == MANIFEST_FILE {
        InputRole::Manifest
    } else if exec.abstract_scenario.as_deref() == Some(path) || (exec.abstract_scenario.is_none() && path.ends_with(".osc")) {
        InputRole::AbstractScenario
    } else if exec.variation_file.as_deref() == Some(path) || (exec.variation_file.is_none() && path.ends_with(".vast")) {
        InputRole::Variation
    } else if path.starts_with(&format!("{MAPS_DIR}/")) && path.ends_with(".fpm") {
        InputRole::Map
    } else if robot.launch.iter().any(|p| p == path) {
        InputRole::RobotLaunch
    } else if robot.parameters.iter().any(|p| p == path) {
        InputRole::RobotParameters
    } else if robot.models.iter().any(|p| p == path) {
        InputRole::RobotModel
    } else if exec.simulation.iter().any(|p| p == path) {
        InputRole::Simulation
    } else {
        InputRole::Other
    }
}

fn scan_inputs(root: &Path, manifest: &CampaignManifest, out: &mut ScanResult) -> Result<(), CaptureError> {
    let mut paths = Vec::new();
    if root.join(MANIFEST_FILE).is_file() {
        paths.push(rel(MANIFEST_FILE));
    }
    paths.extend(files_below(root, &root.join(INPUTS_DIR))?);
    let read: Vec<Result<FileInfo, CaptureError>> = paths.into_par_iter().map(|p| FileInfo::read(root, p)).collect();
    for file in read {
        let file = file?;
        let path = file.path.to_string();
        let role = role_of(&path, manifest);
        let mut robot_meta = None;
        match role {
            InputRole::Map => {
                let text = fs::read_to_string(abs_path(root, &file.path)).map_err(|e| CaptureError::io(&path, e))?;
                match layout::parse_fpm(&text) {
                    Ok((meta, _)) => {
                        let id = file.path.file_name().trim_end_matches(".fpm").to_string();
                        out.maps.push(MapRecord { id, file: file.clone(), meta });
                    }
                    Err(e) => out.violations.push(violation(&path, e.to_string())),
                }
            }
            InputRole::Variation => match VariationFile::parse(&fs::read(abs_path(root, &file.path)).map_err(|e| CaptureError::io(&path, e))?) {
                Ok(v) => out.variation = Some(v),
                Err(e) => out.violations.push(violation(&path, e.to_string())),
            },
            InputRole::RobotParameters => {
                let bytes = fs::read(abs_path(root, &file.path)).map_err(|e| CaptureError::io(&path, e))?;
                robot_meta = layout::parse_robot_config(&bytes).ok();
            }
            _ => {}
        }
        out.inputs.push(InputFile { file, role, robot_meta });
    }
    for declared in manifest
        .execution
        .robot
        .files()
        .chain(&manifest.execution.abstract_scenario)
        .chain(&manifest.execution.variation_file)
        .chain(&manifest.execution.simulation)
    {
        if out.input(declared).is_none() {
            out.violations.push(violation(declared, "declared input file is missing"));
        }
    }
    Ok(())
}

fn classify_env(name: &str) -> Option<usize> {
    let ext = name.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase())?;
    match ext.as_str() {
        "stl" | "obj" | "dae" => Some(0),
        "pgm" | "png" => Some(1),
        "sdf" | "world" => Some(2),
        _ => None,
    }
}

fn scan_environments(root: &Path, out: &mut ScanResult) -> Result<(), CaptureError> {
    for map_id in subdirs(&root.join(ENVIRONMENTS_DIR))? {
        let dir = rel(ENVIRONMENTS_DIR).join(&map_id)?;
        let mut slots: [Option<FileInfo>; 3] = [None, None, None];
        for path in files_below(root, &abs_path(root, &dir))? {
            if let Some(i) = classify_env(path.file_name()) {
                if slots[i].is_some() {
                    out.violations.push(violation(&path, "more than one artifact of this kind"));
                    continue;
                }
                slots[i] = Some(FileInfo::read(root, path)?);
            }
        }
        match slots {
            [Some(mesh), Some(grid), Some(world)] => out.environments.push(EnvironmentRecord { map_id, mesh, grid, world }),
            _ => out.violations.push(violation(&dir, "expected a mesh, an occupancy grid and a world file")),
        }
    }
    Ok(())
}

fn scan_scenarios(root: &Path, out: &mut ScanResult) -> Result<(), CaptureError> {
    for id in subdirs(&root.join(SCENARIOS_DIR))? {
        let dir = rel(SCENARIOS_DIR).join(&id)?;
        let file = dir.join(SCENARIO_FILE)?;
        if abs_path(root, &file).is_file() {
            out.scenarios.push(ScenarioRecord { id, dir, file: FileInfo::read(root, file)? });
        } else {
            out.violations.push(violation(&dir, format!("missing {SCENARIO_FILE}")));
        }
    }
    Ok(())
}

fn read_config(root: &Path, id: &str) -> Result<Result<ConfigRecord, LayoutViolation>, CaptureError> {
    let dir = rel(CONFIGS_DIR).join(id)?;
    let cfg_path = dir.join(SCENARIO_CONFIG)?;
    let abs = abs_path(root, &cfg_path);
    if !abs.is_file() {
        return Ok(Err(violation(&dir, format!("missing {SCENARIO_CONFIG}"))));
    }
    let text = fs::read_to_string(&abs).map_err(|e| CaptureError::io(&abs, e))?;
    let params = match ScenarioConfig::parse(&text) {
        Ok(p) => p,
        Err(e) => return Ok(Err(violation(&cfg_path, e.to_string()))),
    };
    if params.config_id != id {
        return Ok(Err(violation(&cfg_path, format!("config_id {} does not match directory", params.config_id))));
    }
    let robot_config = match &params.robot_config {
        Some(p) => {
            let path: RelPath = match p.parse() {
                Ok(p) => p,
                Err(e) => return Ok(Err(violation(&cfg_path, e.to_string()))),
            };
            let abs = abs_path(root, &path);
            if !abs.is_file() {
                return Ok(Err(violation(&cfg_path, format!("robot_config {p} does not exist"))));
            }
            let bytes = fs::read(&abs).map_err(|e| CaptureError::io(&abs, e))?;
            match layout::parse_robot_config(&bytes) {
                Ok(info) => Some(RobotConfigRecord { file: FileInfo::read(root, path)?, info }),
                Err(e) => return Ok(Err(violation(p, e.to_string()))),
            }
        }
        None => None,
    };
    let runs_dir = dir.join(RUNS_DIR)?;
    let run_dirs = subdirs(&abs_path(root, &runs_dir))?
        .into_iter()
        .map(|r| runs_dir.join(&r))
        .collect::<Result<_, _>>()?;
    Ok(Ok(ConfigRecord { id: id.to_string(), dir, scenario_config: FileInfo::read(root, cfg_path)?, params, robot_config, run_dirs }))
}

fn read_run(root: &Path, config_id: &str, run_dir: &RelPath) -> Result<Result<RunRecord, LayoutViolation>, CaptureError> {
    let abs = abs_path(root, run_dir);
    let report_path = abs.join(REPORT_FILE);
    if !report_path.is_file() {
        return Ok(Err(violation(run_dir, format!("missing {REPORT_FILE}"))));
    }
    let report = match parse_test_report(&fs::read(&report_path).map_err(|e| CaptureError::io(&report_path, e))?) {
        Ok(r) => r,
        Err(e) => return Ok(Err(violation(run_dir, e.to_string()))),
    };
    let meta_path = abs.join(RUN_METADATA);
    if !meta_path.is_file() {
        return Ok(Err(violation(run_dir, format!("missing {RUN_METADATA}"))));
    }
    let metadata = match RunMetadata::parse(&fs::read(&meta_path).map_err(|e| CaptureError::io(&meta_path, e))?) {
        Ok(m) => m,
        Err(e) => return Ok(Err(violation(run_dir, e.to_string()))),
    };
    let prefix_len = run_dir.segments().len();
    let mut artifacts = Vec::new();
    for path in files_below(root, &abs)? {
        let local = path.segments()[prefix_len..].join("/");
        let kind = ArtifactKind::classify(&local);
        artifacts.push(Artifact { file: FileInfo::read(root, path)?, kind, local });
    }
    Ok(Ok(RunRecord { run_dir: run_dir.clone(), config_id: config_id.to_string(), report, metadata, artifacts }))
}

/// Reads the whole tree. Layout problems are accumulated per directory in
/// `violations`; only I/O failures abort.
pub fn scan_campaign(root: &Path, manifest: &CampaignManifest) -> Result<ScanResult, CaptureError> {
    if !root.is_dir() {
        return Err(CaptureError::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "results root not found")));
    }
    let mut out = ScanResult { root: root.to_path_buf(), ..Default::default() };
    scan_inputs(root, manifest, &mut out)?;
    scan_environments(root, &mut out)?;
    scan_scenarios(root, &mut out)?;

    let config_ids = subdirs(&root.join(CONFIGS_DIR))?;
    let configs: Vec<_> = config_ids.par_iter().map(|id| read_config(root, id)).collect::<Result<_, _>>()?;
    for c in configs {
        match c {
            Ok(c) => out.configs.push(c),
            Err(v) => out.violations.push(v),
        }
    }

    let jobs: Vec<(&str, &RelPath)> =
        out.configs.iter().flat_map(|c| c.run_dirs.iter().map(move |r| (c.id.as_str(), r))).collect();
    let runs: Vec<_> = jobs.par_iter().map(|(cid, dir)| read_run(root, cid, dir)).collect::<Result<_, _>>()?;
    let mut run_violations = Vec::new();
    for r in runs {
        match r {
            Ok(r) => out.runs.push(r),
            Err(v) => run_violations.push(v),
        }
    }
    out.violations.extend(run_violations);

    // reports anywhere but configs/<id>/runs/<run>/ are runs outside a configuration
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CaptureError::io(root, e.into()))?;
        if entry.file_type().is_file() && entry.file_name() == REPORT_FILE {
            let rel = RelPath::from_fs(root, entry.path())?;
            let s = rel.segments();
            let placed = s.len() == 5 && s[0] == CONFIGS_DIR && s[2] == RUNS_DIR && out.config(&s[1]).is_some();
            if !placed {
                let dir = entry.path().parent().unwrap_or(root);
                out.violations.push(violation(
                    RelPath::from_fs(root, dir).map(|r| r.to_string()).unwrap_or_default(),
                    "run outside a configuration",
                ));
            }
        }
    }

    let scenario_ids: BTreeMap<&str, ()> = out.scenarios.iter().map(|s| (s.id.as_str(), ())).collect();
    let map_ids: BTreeMap<&str, ()> = out.maps.iter().map(|m| (m.id.as_str(), ())).collect();
    let mut dangling = Vec::new();
    for c in &out.configs {
        if !scenario_ids.contains_key(c.params.scenario.as_str()) {
            dangling.push(violation(&c.scenario_config.path, format!("unknown scenario {}", c.params.scenario)));
        }
        if !map_ids.contains_key(c.params.map.as_str()) {
            dangling.push(violation(&c.scenario_config.path, format!("unknown map {}", c.params.map)));
        }
    }
    out.violations.extend(dangling);
    out.violations.sort_by(|a, b| a.path.cmp(&b.path).then(a.message.cmp(&b.message)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_artifacts() {
        assert_eq!(ArtifactKind::classify("test.xml"), ArtifactKind::TestReport);
        assert_eq!(ArtifactKind::classify("rosbag/rosbag_0.mcap"), ArtifactKind::Bag);
        assert_eq!(ArtifactKind::classify("logs/launch.log"), ArtifactKind::Log);
        assert_eq!(ArtifactKind::classify("postprocess/poses.csv"), ArtifactKind::Csv);
        assert_eq!(ArtifactKind::classify("camera.mp4"), ArtifactKind::Video);
        assert_eq!(ArtifactKind::classify("metadata.yaml"), ArtifactKind::Config);
        assert_eq!(ArtifactKind::classify("postprocess/metrics.json"), ArtifactKind::Other);
    }
}
