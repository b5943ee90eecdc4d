//! `campaign.vast.yaml`: dataset metadata, publication distributions and
//! execution parameters.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_yaml::{Mapping, Value as Yaml};

use super::CaptureError;
use crate::identity::{self, BaseIri};
use crate::ldgraph::parse_datetime;
use crate::publish::DistributionSpec;

pub const MANIFEST_FILE: &str = "campaign.vast.yaml";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Creator {
    pub name: String,
    pub orcid: Option<String>,
    pub affiliation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetMetadata {
    pub title: String,
    pub description: Option<String>,
    pub creators: Vec<Creator>,
    pub keywords: Vec<String>,
    pub license: String,
    #[serde(serialize_with = "ser_display")]
    pub dataset_iri: BaseIri,
    /// Pre-reserved DOI, if the repository handed one out before upload.
    pub doi: Option<String>,
    pub issued: Option<DateTime<Utc>>,
    pub version: Option<String>,
}

fn ser_display<S: serde::Serializer>(v: &BaseIri, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationParams {
    pub path_length_m: f64,
    pub obstacle_densities_per_m: Vec<f64>,
    pub robot_radii_m: Vec<f64>,
}

impl Default for VariationParams {
    fn default() -> Self {
        VariationParams { path_length_m: 10.0, obstacle_densities_per_m: vec![0.0], robot_radii_m: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RobotSpec {
    pub name: String,
    pub launch: Vec<String>,
    pub parameters: Vec<String>,
    pub models: Vec<String>,
}

impl RobotSpec {
    pub fn files(&self) -> impl Iterator<Item = &String> {
        self.launch.iter().chain(&self.parameters).chain(&self.models)
    }
}

/// One postprocessing step applied to every run's bag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostprocessSpec {
    pub plugin: String,
    pub parameters: BTreeMap<String, String>,
    /// Output paths relative to the run directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionSpec {
    pub n_runs: u32,
    pub variation: VariationParams,
    pub robot: RobotSpec,
    pub abstract_scenario: Option<String>,
    pub variation_file: Option<String>,
    pub simulation: Vec<String>,
    /// Tool name to PURL.
    pub software_agents: BTreeMap<String, String>,
    pub postprocessing: Vec<PostprocessSpec>,
}

impl Default for ExecutionSpec {
    fn default() -> Self {
        ExecutionSpec {
            n_runs: 1,
            variation: VariationParams::default(),
            robot: RobotSpec::default(),
            abstract_scenario: None,
            variation_file: None,
            simulation: Vec::new(),
            software_agents: BTreeMap::new(),
            postprocessing: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignManifest {
    pub metadata: DatasetMetadata,
    pub publication: Vec<DistributionSpec>,
    pub execution: ExecutionSpec,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl CampaignManifest {
    pub fn base(&self) -> &BaseIri {
        &self.metadata.dataset_iri
    }
}

struct Reader<'a> {
    warnings: &'a mut Vec<String>,
}

fn malformed(msg: impl Into<String>) -> CaptureError {
    CaptureError::MalformedManifest(msg.into())
}

impl Reader<'_> {
    fn check_keys(&mut self, map: &Mapping, section: &str, known: &[&str]) {
        for key in map.keys() {
            let k = key.as_str().map(str::to_string).unwrap_or_else(|| format!("{key:?}"));
            if !known.contains(&k.as_str()) {
                let path = if section.is_empty() { k } else { format!("{section}.{k}") };
                self.warnings.push(format!("unknown key {path}"));
            }
        }
    }
}

fn scalar_string(v: &Yaml, field: &str) -> Result<String, CaptureError> {
    match v {
        Yaml::String(s) => Ok(s.clone()),
        Yaml::Number(n) => Ok(n.to_string()),
        Yaml::Bool(b) => Ok(b.to_string()),
        _ => Err(malformed(format!("{field} must be a scalar"))),
    }
}

fn opt_string(map: &Mapping, key: &str, field: &str) -> Result<Option<String>, CaptureError> {
    match map.get(key) {
        None | Some(Yaml::Null) => Ok(None),
        Some(v) => scalar_string(v, field).map(Some),
    }
}

fn string_list(map: &Mapping, key: &str, field: &str) -> Result<Vec<String>, CaptureError> {
    match map.get(key) {
        None | Some(Yaml::Null) => Ok(Vec::new()),
        Some(Yaml::Sequence(items)) => items.iter().map(|v| scalar_string(v, field)).collect(),
        Some(v) => Ok(vec![scalar_string(v, field)?]),
    }
}

fn number(v: &Yaml, field: &str) -> Result<f64, CaptureError> {
    v.as_f64().ok_or_else(|| malformed(format!("{field} must be a number")))
}

fn number_list(map: &Mapping, key: &str, field: &str) -> Result<Option<Vec<f64>>, CaptureError> {
    match map.get(key) {
        None => Ok(None),
        Some(Yaml::Sequence(items)) => items.iter().map(|v| number(v, field)).collect::<Result<_, _>>().map(Some),
        Some(v) => Ok(Some(vec![number(v, field)?])),
    }
}

fn section<'a>(map: &'a Mapping, key: &str) -> Result<Option<&'a Mapping>, CaptureError> {
    match map.get(key) {
        None | Some(Yaml::Null) => Ok(None),
        Some(Yaml::Mapping(m)) => Ok(Some(m)),
        Some(_) => Err(malformed(format!("{key} must be a mapping"))),
    }
}

fn required(map: &Mapping, key: &'static str) -> Result<String, CaptureError> {
    match map.get(key) {
        None | Some(Yaml::Null) => Err(CaptureError::MissingRequiredField(key)),
        Some(v) => {
            let s = scalar_string(v, key)?;
            if s.trim().is_empty() {
                Err(CaptureError::MissingRequiredField(key))
            } else {
                Ok(s)
            }
        }
    }
}

fn parse_creator(v: &Yaml) -> Result<Creator, CaptureError> {
    match v {
        Yaml::Mapping(m) => {
            let name = opt_string(m, "name", "creator name")?
                .ok_or_else(|| malformed("creator entries need a name"))?;
            let orcid = opt_string(m, "orcid", "creator orcid")?;
            if let Some(o) = &orcid {
                identity::validate_orcid(o).map_err(|e| malformed(e.to_string()))?;
            }
            Ok(Creator { name, orcid, affiliation: opt_string(m, "affiliation", "creator affiliation")? })
        }
        other => Ok(Creator { name: scalar_string(other, "creator")?, orcid: None, affiliation: None }),
    }
}

fn parse_metadata(m: &Mapping, r: &mut Reader) -> Result<DatasetMetadata, CaptureError> {
    r.check_keys(
        m,
        "metadata",
        &["title", "description", "creators", "keywords", "license", "dataset_iri", "doi", "issued", "version"],
    );
    let title = required(m, "title")?;
    let license = required(m, "license")?;
    let iri_text = required(m, "dataset_iri")?;
    let dataset_iri = BaseIri::new(&iri_text).map_err(|e| malformed(e.to_string()))?;
    let creators = match m.get("creators") {
        Some(Yaml::Sequence(items)) if !items.is_empty() => items.iter().map(parse_creator).collect::<Result<_, _>>()?,
        Some(Yaml::Sequence(_)) | None | Some(Yaml::Null) => return Err(CaptureError::MissingRequiredField("creators")),
        Some(_) => return Err(malformed("creators must be a list")),
    };
    let doi = opt_string(m, "doi", "doi")?;
    if let Some(d) = &doi {
        identity::validate_doi(d).map_err(|e| malformed(e.to_string()))?;
    }
    let issued = match opt_string(m, "issued", "issued")? {
        Some(s) => Some(parse_datetime(&s).ok_or_else(|| malformed(format!("issued {s:?} is not a date-time")))?),
        None => None,
    };
    Ok(DatasetMetadata {
        title,
        description: opt_string(m, "description", "description")?,
        creators,
        keywords: string_list(m, "keywords", "keywords")?,
        license,
        dataset_iri,
        doi,
        issued,
        version: opt_string(m, "version", "version")?,
    })
}

fn parse_publication(v: Option<&Yaml>, r: &mut Reader) -> Result<Vec<DistributionSpec>, CaptureError> {
    let items = match v {
        None | Some(Yaml::Null) => return Ok(Vec::new()),
        Some(Yaml::Sequence(items)) => items,
        Some(_) => return Err(malformed("publication must be a list")),
    };
    let mut out = Vec::new();
    for item in items {
        let entry = item.as_mapping().ok_or_else(|| malformed("publication entries must be mappings"))?;
        for (kind, body) in entry {
            match kind.as_str() {
                Some("zip") => {}
                Some(other) => return Err(malformed(format!("unsupported distribution kind {other:?}"))),
                None => return Err(malformed("distribution kind must be a string")),
            }
            let body = body.as_mapping().ok_or_else(|| malformed("zip entry must be a mapping"))?;
            r.check_keys(body, "publication.zip", &["filename", "include_filter"]);
            let filename = opt_string(body, "filename", "filename")?
                .ok_or_else(|| malformed("zip entry needs a filename"))?;
            let filter = string_list(body, "include_filter", "include_filter")?;
            out.push(DistributionSpec::new(filename, filter).map_err(|e| malformed(e.to_string()))?);
        }
    }
    Ok(out)
}

fn parse_execution(m: Option<&Mapping>, r: &mut Reader) -> Result<ExecutionSpec, CaptureError> {
    let mut spec = ExecutionSpec::default();
    let Some(m) = m else { return Ok(spec) };
    r.check_keys(
        m,
        "execution",
        &[
            "n_runs",
            "variation",
            "robot",
            "abstract_scenario",
            "variation_file",
            "simulation",
            "software_agents",
            "postprocessing",
        ],
    );
    if let Some(v) = m.get("n_runs") {
        let n = v.as_u64().ok_or_else(|| malformed("n_runs must be a positive integer"))?;
        if n == 0 || n > u64::from(u32::MAX) {
            return Err(malformed("n_runs must be at least 1"));
        }
        spec.n_runs = n as u32;
    }
    if let Some(v) = section(m, "variation")? {
        r.check_keys(v, "execution.variation", &["path_length_m", "obstacle_densities_per_m", "robot_radii_m"]);
        if let Some(l) = v.get("path_length_m") {
            spec.variation.path_length_m = number(l, "path_length_m")?;
        }
        if let Some(d) = number_list(v, "obstacle_densities_per_m", "obstacle_densities_per_m")? {
            spec.variation.obstacle_densities_per_m = d;
        }
        if let Some(rad) = number_list(v, "robot_radii_m", "robot_radii_m")? {
            spec.variation.robot_radii_m = rad;
        }
    }
    if let Some(robot) = section(m, "robot")? {
        r.check_keys(robot, "execution.robot", &["name", "launch", "parameters", "models"]);
        spec.robot = RobotSpec {
            name: opt_string(robot, "name", "robot name")?.unwrap_or_else(|| "robot".into()),
            launch: string_list(robot, "launch", "launch")?,
            parameters: string_list(robot, "parameters", "parameters")?,
            models: string_list(robot, "models", "models")?,
        };
    }
    spec.abstract_scenario = opt_string(m, "abstract_scenario", "abstract_scenario")?;
    spec.variation_file = opt_string(m, "variation_file", "variation_file")?;
    spec.simulation = string_list(m, "simulation", "simulation")?;
    if let Some(agents) = section(m, "software_agents")? {
        for (k, v) in agents {
            let name = scalar_string(k, "software agent name")?;
            let iri = scalar_string(v, "software agent IRI")?;
            crate::vocab::Iri::new(iri.as_str()).map_err(|e| malformed(e.to_string()))?;
            spec.software_agents.insert(name, iri);
        }
    }
    match m.get("postprocessing") {
        None | Some(Yaml::Null) => {}
        Some(Yaml::Sequence(items)) => {
            for item in items {
                let p = item.as_mapping().ok_or_else(|| malformed("postprocessing entries must be mappings"))?;
                r.check_keys(p, "execution.postprocessing", &["plugin", "parameters", "outputs"]);
                let plugin = opt_string(p, "plugin", "plugin")?.ok_or_else(|| malformed("postprocessing entry needs a plugin"))?;
                let mut parameters = BTreeMap::new();
                if let Some(ps) = section(p, "parameters")? {
                    for (k, v) in ps {
                        parameters.insert(scalar_string(k, "parameter name")?, scalar_string(v, "parameter value")?);
                    }
                }
                spec.postprocessing.push(PostprocessSpec { plugin, parameters, outputs: string_list(p, "outputs", "outputs")? });
            }
        }
        Some(_) => return Err(malformed("postprocessing must be a list")),
    }
    Ok(spec)
}

/// Parses and validates a manifest. Unknown keys become warnings.
pub fn parse_manifest(bytes: &[u8]) -> Result<CampaignManifest, CaptureError> {
    let doc: Yaml = serde_yaml::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    let top = doc.as_mapping().ok_or_else(|| malformed("manifest must be a mapping"))?;
    let mut warnings = Vec::new();
    let mut r = Reader { warnings: &mut warnings };
    r.check_keys(top, "", &["metadata", "publication", "execution"]);
    let metadata = section(top, "metadata")?.ok_or(CaptureError::MissingRequiredField("metadata"))?;
    let metadata = parse_metadata(metadata, &mut r)?;
    let publication = parse_publication(top.get("publication"), &mut r)?;
    let execution = parse_execution(section(top, "execution")?, &mut r)?;
    Ok(CampaignManifest { metadata, publication, execution, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MANIFEST: &str = r#"
  metadata:
    title: Navigation Dataset
    description: A navigation dataset that...
    creators:
      - ...
    keywords: ["robotics", "navigation", "ROS2"]
    license: "CC-BY-4.0"
    dataset_iri: https://purl.org/...
"#;

    #[test]
    fn parses_dataset_metadata_block() {
        let m = parse_manifest(MANIFEST.as_bytes()).unwrap();
        assert_eq!(m.metadata.title, "Navigation Dataset");
        assert_eq!(m.metadata.keywords, ["robotics", "navigation", "ROS2"]);
        assert_eq!(m.metadata.license, "CC-BY-4.0");
        assert_eq!(m.metadata.creators[0].name, "...");
        assert_eq!(m.execution.n_runs, 1);
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn missing_license() {
        let text = MANIFEST.replace("    license: \"CC-BY-4.0\"\n", "");
        assert!(matches!(parse_manifest(text.as_bytes()), Err(CaptureError::MissingRequiredField("license"))));
        let text = MANIFEST.replace("    title: Navigation Dataset\n", "");
        assert!(matches!(parse_manifest(text.as_bytes()), Err(CaptureError::MissingRequiredField("title"))));
    }

    #[test]
    fn publication_filter() {
        let text = format!(
            "{MANIFEST}  publication:\n  - zip:\n      filename: \"{{timestamp:%Y%m%d}}_meta.zip\"\n      include_filter:\n      - \"*.json\"\n"
        );
        let m = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(m.publication.len(), 1);
        assert_eq!(m.publication[0].include_filter(), ["*.json"]);
    }

    #[test]
    fn unknown_keys_warn_and_execution_parses() {
        let text = format!(
            "{MANIFEST}  colour: blue\n  execution:\n    n_runs: 10\n    variation:\n      path_length_m: 10\n      obstacle_densities_per_m: [0.0, 0.2]\n      robot_radii_m: [0.175, 0.22]\n    postprocessing:\n      - plugin: rosbag_to_csv\n        parameters: {{rate_hz: 10}}\n        outputs: [postprocess/poses.csv]\n"
        );
        let m = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(m.warnings, ["unknown key colour"]);
        assert_eq!(m.execution.n_runs, 10);
        assert_eq!(m.execution.variation.robot_radii_m, [0.175, 0.22]);
        assert_eq!(m.execution.postprocessing[0].parameters["rate_hz"], "10");
    }

    #[test]
    fn rejects_bad_values() {
        let text = MANIFEST.replace("https://purl.org/...", "ftp://x");
        assert!(matches!(parse_manifest(text.as_bytes()), Err(CaptureError::MalformedManifest(_))));
        let text = format!("{MANIFEST}  execution:\n    n_runs: 0\n");
        assert!(matches!(parse_manifest(text.as_bytes()), Err(CaptureError::MalformedManifest(_))));
        assert!(matches!(parse_manifest(b"- a\n- b\n"), Err(CaptureError::MalformedManifest(_))));
    }
}
