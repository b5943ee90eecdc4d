//! Built-in collectors. Each one emits a small, self-contained fragment; the
//! consolidated graph is their union.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;

use super::manifest::CampaignManifest;
use super::plugins::{CollectContext, CollectorPlugin, Level, PluginError, Registry, Scope};
use super::scan::{ArtifactKind, ConfigRecord, FileInfo, InputRole, RunRecord};
use crate::identity::BaseIri;
use crate::ldgraph::{LinkedDocument, LiteralValue, NodeObject};
use crate::vocab::{iri as t, Iri};

/// Identifier conventions for every node kind in a campaign graph.
pub mod ids {
    use crate::identity::{self, BaseIri, RelPath};
    use crate::vocab::Iri;

    use super::CampaignManifest;

    /// The dataset node is the base IRI itself.
    pub fn dataset(base: &BaseIri) -> Iri {
        base.iri().clone()
    }

    pub fn campaign(base: &BaseIri) -> Iri {
        base.mint_str("campaign")
    }

    pub fn collection(base: &BaseIri, dir: &str) -> Iri {
        base.mint_str(dir)
    }

    pub fn file(base: &BaseIri, path: &RelPath) -> Iri {
        base.mint(path)
    }

    /// The `prov:Location` node of an artifact.
    pub fn location(artifact: &Iri) -> Iri {
        identity::with_fragment(artifact, "file")
    }

    pub fn scenario_generation(base: &BaseIri) -> Iri {
        identity::with_fragment(&base.mint_str("scenarios"), "generation")
    }

    pub fn environment_generation(base: &BaseIri, map_id: &str, kind: &str) -> Iri {
        let dir = base.mint(&RelPath::new(["environments", map_id]).expect("map ids are plain segments"));
        identity::with_fragment(&dir, &format!("{kind}_generation"))
    }

    pub fn concrete_scenario(base: &BaseIri, id: &str) -> Iri {
        base.mint(&RelPath::new(["scenarios", id]).expect("scenario ids are plain segments"))
    }

    pub fn configuration(base: &BaseIri, id: &str) -> Iri {
        base.mint(&RelPath::new(["configs", id]).expect("config ids are plain segments"))
    }

    pub fn load_config(base: &BaseIri, config_id: &str) -> Iri {
        identity::with_fragment(&configuration(base, config_id), "load_config")
    }

    pub fn run(base: &BaseIri, run_dir: &RelPath) -> Iri {
        identity::run_identifier(base, run_dir)
    }

    pub fn postprocess(base: &BaseIri, run_dir: &RelPath, plugin: &str) -> Iri {
        identity::with_fragment(&run(base, run_dir), &format!("postprocess-{plugin}"))
    }

    /// ORCID IRI when a valid ORCID is known, else a slug under the base.
    pub fn person(base: &BaseIri, name: &str, orcid: Option<&str>) -> Iri {
        match orcid.map(identity::mint_person) {
            Some(Ok(iri)) => iri,
            _ => base.mint(&RelPath::new(["people", &identity::person_slug(name)]).expect("slugs are plain segments")),
        }
    }

    /// Configured PURL for a tool, or the default under the base.
    pub fn agent(base: &BaseIri, manifest: &CampaignManifest, tool: &str) -> Iri {
        manifest
            .execution
            .software_agents
            .get(tool)
            .and_then(|s| Iri::new(s.as_str()).ok())
            .unwrap_or_else(|| identity::default_agent(base, tool))
    }

    pub fn robot(base: &BaseIri, name: &str) -> Iri {
        identity::default_agent(base, name)
    }
}

/// Tool names under which the built-in activities are attributed.
pub const FRAMEWORK_AGENT: &str = "robovast";
pub const ENVIRONMENT_AGENT: &str = "floorplan-dsl";

/// The three environment generation steps and the artifact each produces.
pub const ENVIRONMENT_STEPS: [&str; 3] = ["mesh", "occupancy_grid", "world"];

pub fn artifact_class(kind: ArtifactKind) -> &'static str {
    match kind {
        ArtifactKind::Bag => "robovast:BagFile",
        ArtifactKind::Log => "robovast:LogFile",
        ArtifactKind::TestReport => "robovast:TestReport",
        ArtifactKind::Config => "robovast:RunMetadata",
        ArtifactKind::Csv => "robovast:CsvFile",
        ArtifactKind::Video => "robovast:VideoFile",
        ArtifactKind::Other => "robovast:OtherFile",
    }
}

fn input_class(role: InputRole) -> Option<&'static str> {
    match role {
        InputRole::Manifest => Some("robovast:Manifest"),
        InputRole::AbstractScenario => Some("smm:AbstractScenario"),
        InputRole::Variation => Some("smm:ScenarioVariation"),
        InputRole::Map => Some("smm:EnvironmentModel"),
        InputRole::RobotParameters => Some("robovast:RobotConfiguration"),
        _ => None,
    }
}

/// Run-relative paths produced by postprocessing rather than by the run.
pub fn postprocess_outputs(manifest: &CampaignManifest) -> BTreeSet<&str> {
    manifest.execution.postprocessing.iter().flat_map(|s| s.outputs.iter().map(String::as_str)).collect()
}

/// Accumulates one fragment.
pub struct FragmentBuilder<'a> {
    base: &'a BaseIri,
    doc: LinkedDocument,
}

impl<'a> FragmentBuilder<'a> {
    pub fn new(base: &'a BaseIri) -> Self {
        FragmentBuilder { base, doc: LinkedDocument::with_base(base.iri()) }
    }

    pub fn base(&self) -> &'a BaseIri {
        self.base
    }

    pub fn node(&mut self, id: Iri) -> &mut NodeObject {
        self.doc.entry(id)
    }

    /// The `prov:Location` node of a file: path, size and checksum.
    pub fn location(&mut self, file: &FileInfo) -> Iri {
        let loc = ids::location(&ids::file(self.base, &file.path));
        self.doc
            .entry(loc.clone())
            .add_type(t("prov:Location"))
            .add(t("robovast:relativePath"), LiteralValue::string(file.path.to_string()))
            .add(t("dcat:byteSize"), LiteralValue::integer(file.size as i64))
            .add(t("robovast:sha256"), LiteralValue::string(file.sha256.clone()));
        loc
    }

    /// Entity for a file plus its location node.
    pub fn file_entity(&mut self, file: &FileInfo, classes: &[&str]) -> Iri {
        let id = ids::file(self.base, &file.path);
        let loc = self.location(file);
        let node = self.doc.entry(id.clone());
        node.add_type(t("prov:Entity")).add(t("prov:atLocation"), loc);
        for c in classes {
            node.add_type(t(c));
        }
        id
    }

    pub fn person(&mut self, name: &str, orcid: Option<&str>) -> Iri {
        let id = ids::person(self.base, name, orcid);
        self.doc
            .entry(id.clone())
            .add_type(t("prov:Person"))
            .add_type(t("prov:Agent"))
            .add(t("robovast:name"), LiteralValue::string(name));
        id
    }

    pub fn software_agent(&mut self, manifest: &CampaignManifest, tool: &str) -> Iri {
        let id = ids::agent(self.base, manifest, tool);
        self.doc
            .entry(id.clone())
            .add_type(t("prov:SoftwareAgent"))
            .add_type(t("prov:Agent"))
            .add(t("robovast:name"), LiteralValue::string(tool));
        id
    }

    pub fn robot(&mut self, name: &str) -> Iri {
        let id = ids::robot(self.base, name);
        self.doc
            .entry(id.clone())
            .add_type(t("robovast:Robot"))
            .add_type(t("prov:Agent"))
            .add(t("robovast:name"), LiteralValue::string(name));
        id
    }

    pub fn finish(self) -> LinkedDocument {
        self.doc
    }
}

fn robot_name(m: &CampaignManifest) -> &str {
    if m.execution.robot.name.is_empty() {
        "robot"
    } else {
        &m.execution.robot.name
    }
}

fn config_for<'a>(ctx: &CollectContext<'a>, run: &RunRecord) -> Result<&'a ConfigRecord, PluginError> {
    ctx.scan
        .config(&run.config_id)
        .ok_or_else(|| format!("run {} belongs to unknown configuration {}", run.run_dir, run.config_id).into())
}

fn wrong_scope(name: &str) -> PluginError {
    format!("{name} invoked at the wrong level").into()
}

/// Dataset node, creators and the top-level collections.
pub struct DatasetCollector;

impl CollectorPlugin for DatasetCollector {
    fn name(&self) -> &str {
        "dataset"
    }

    fn level(&self) -> Level {
        Level::Campaign
    }

    fn collect(&self, ctx: &CollectContext<'_>, _: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let base = ctx.base();
        let md = &ctx.manifest.metadata;
        let scan = ctx.scan;
        let mut b = FragmentBuilder::new(base);
        let creators: Vec<Iri> = md.creators.iter().map(|c| b.person(&c.name, c.orcid.as_deref())).collect();

        let collections = [
            ("inputs", scan.inputs.iter().map(|i| ids::file(base, &i.file.path)).collect::<Vec<_>>()),
            (
                "environments",
                scan.environments
                    .iter()
                    .flat_map(|e| [&e.mesh, &e.grid, &e.world])
                    .map(|f| ids::file(base, &f.path))
                    .collect(),
            ),
            ("scenarios", scan.scenarios.iter().map(|s| ids::concrete_scenario(base, &s.id)).collect()),
            ("configs", scan.configs.iter().map(|c| ids::configuration(base, &c.id)).collect()),
        ];
        let mut members = Vec::new();
        for (dir, items) in collections {
            let id = ids::collection(base, dir);
            let node = b.node(id.clone());
            node.add_type(t("prov:Collection")).add_type(t("prov:Entity"));
            for item in items {
                node.add(t("prov:hadMember"), item);
            }
            members.push(id);
        }

        let ds = b.node(ids::dataset(base));
        ds.add_type(t("dcat:Dataset"))
            .add_type(t("prov:Entity"))
            .add_type(t("prov:Collection"))
            .add(t("dcterms:title"), LiteralValue::string(md.title.clone()))
            .add(t("dcterms:license"), LiteralValue::string(md.license.clone()))
            .add(t("prov:wasGeneratedBy"), ids::campaign(base));
        if let Some(d) = &md.description {
            ds.add(t("dcterms:description"), LiteralValue::string(d.clone()));
        }
        for k in &md.keywords {
            ds.add(t("dcat:keyword"), LiteralValue::string(k.clone()));
        }
        for c in creators {
            ds.add(t("dcterms:creator"), c);
        }
        for m in members {
            ds.add(t("prov:hadMember"), m);
        }
        if let Some(doi) = &md.doi {
            ds.add(t("dcterms:identifier"), crate::identity::doi_identifier(doi)?);
        }
        if let Some(issued) = md.issued {
            ds.add(t("dcterms:issued"), LiteralValue::date_time(issued));
        }
        if let Some(v) = &md.version {
            ds.add(t("dcterms:hasVersion"), LiteralValue::string(v.clone()));
        }
        Ok(b.finish())
    }
}

/// The campaign activity: planned runs, execution window, campaign-wide parameters.
pub struct CampaignCollector;

impl CollectorPlugin for CampaignCollector {
    fn name(&self) -> &str {
        "campaign"
    }

    fn level(&self) -> Level {
        Level::Campaign
    }

    fn collect(&self, ctx: &CollectContext<'_>, _: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let base = ctx.base();
        let exec = &ctx.manifest.execution;
        let mut b = FragmentBuilder::new(base);
        let framework = b.software_agent(ctx.manifest, FRAMEWORK_AGENT);
        let planned = ctx.scan.configs.len() as i64 * i64::from(exec.n_runs);
        let started = ctx.scan.runs.iter().map(|r| r.report.started).min();
        let ended = ctx.scan.runs.iter().map(|r| r.report.ended).max();
        let node = b.node(ids::campaign(base));
        node.add_type(t("robovast:Campaign"))
            .add_type(t("prov:Activity"))
            .add(t("robovast:n_runs"), LiteralValue::integer(planned))
            .add(t("prov:wasAssociatedWith"), framework)
            .add(t("robovast:pathLength"), LiteralValue::decimal_f64(exec.variation.path_length_m));
        if let Some(s) = started {
            node.add(t("prov:startedAtTime"), LiteralValue::date_time(s));
        }
        if let Some(e) = ended {
            node.add(t("prov:endedAtTime"), LiteralValue::date_time(e));
        }
        for d in &exec.variation.obstacle_densities_per_m {
            node.add(t("robovast:obstacleDensity"), LiteralValue::decimal_f64(*d));
        }
        for r in &exec.variation.robot_radii_m {
            node.add(t("robovast:robotRadius"), LiteralValue::decimal_f64(*r));
        }
        if let Some(m) = ctx.scan.inputs_with(InputRole::Manifest).next() {
            let id = ids::file(base, &m.file.path);
            b.node(ids::campaign(base)).add(t("prov:used"), id);
        }
        Ok(b.finish())
    }
}

/// Root input files: models, scenario definitions, robot configuration.
pub struct InputsCollector;

impl CollectorPlugin for InputsCollector {
    fn name(&self) -> &str {
        "inputs"
    }

    fn level(&self) -> Level {
        Level::Campaign
    }

    fn collect(&self, ctx: &CollectContext<'_>, _: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let base = ctx.base();
        let scan = ctx.scan;
        let mut b = FragmentBuilder::new(base);
        for input in &scan.inputs {
            let mut classes = vec!["robovast:InputArtifact"];
            classes.extend(input_class(input.role));
            let id = b.file_entity(&input.file, &classes);
            if let Some(meta) = &input.robot_meta {
                b.node(id)
                    .add(t("dcterms:hasVersion"), LiteralValue::string(meta.meta.version.clone()))
                    .add(t("dcterms:modified"), LiteralValue::date_time(meta.meta.modified));
            }
        }
        for map in &scan.maps {
            let m = &map.meta;
            let attribution = b.person(&m.attribution.name, m.attribution.orcid.as_deref());
            let authors: Vec<Iri> = m.authors.iter().map(|a| b.person(&a.name, a.orcid.as_deref())).collect();
            let node = b.node(ids::file(base, &map.file.path));
            node.add(t("prov:wasAttributedTo"), attribution)
                .add(t("dcterms:created"), LiteralValue::date_time(m.created))
                .add(t("dcterms:modified"), LiteralValue::date_time(m.modified))
                .add(t("dcterms:license"), LiteralValue::string(m.license.clone()))
                .add(t("dcterms:description"), LiteralValue::string(m.description.clone()))
                .add(t("robovast:mapLocation"), LiteralValue::string(m.map_location.clone()))
                .add(t("robovast:name"), LiteralValue::string(map.id.clone()));
            for a in authors {
                node.add(t("dcterms:creator"), a);
            }
        }
        if let (Some(v), Some(file)) = (&scan.variation, scan.inputs_with(InputRole::Variation).next()) {
            let authors: Vec<Iri> = v.metadata.authors.iter().map(|a| b.person(&a.name, a.orcid.as_deref())).collect();
            let refs: Vec<Iri> = v
                .referenced_files()
                .iter()
                .filter_map(|p| scan.input(p))
                .map(|i| ids::file(base, &i.file.path))
                .collect();
            let node = b.node(ids::file(base, &file.file.path));
            node.add(t("dcterms:created"), LiteralValue::date_time(v.metadata.created))
                .add(t("dcterms:modified"), LiteralValue::date_time(v.metadata.modified));
            if let Some(ver) = &v.metadata.version {
                node.add(t("dcterms:hasVersion"), LiteralValue::string(ver.clone()));
            }
            for a in authors {
                node.add(t("prov:wasAttributedTo"), a);
            }
            for r in refs {
                node.add(t("dcterms:references"), r);
            }
        }
        Ok(b.finish())
    }
}

/// Scenario and environment generation: activities, concrete scenarios and
/// environment artifacts.
pub struct GenerationCollector;

impl CollectorPlugin for GenerationCollector {
    fn name(&self) -> &str {
        "generation"
    }

    fn level(&self) -> Level {
        Level::Campaign
    }

    fn collect(&self, ctx: &CollectContext<'_>, _: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let base = ctx.base();
        let scan = ctx.scan;
        let mut b = FragmentBuilder::new(base);
        let framework = b.software_agent(ctx.manifest, FRAMEWORK_AGENT);
        let env_agent = b.software_agent(ctx.manifest, ENVIRONMENT_AGENT);

        let generation = ids::scenario_generation(base);
        let used: Vec<Iri> = scan
            .inputs
            .iter()
            .filter(|i| matches!(i.role, InputRole::AbstractScenario | InputRole::Variation))
            .map(|i| ids::file(base, &i.file.path))
            .collect();
        let node = b.node(generation.clone());
        node.add_type(t("robovast:ScenarioGeneration"))
            .add_type(t("prov:Activity"))
            .add(t("prov:wasAssociatedWith"), framework);
        for u in used {
            node.add(t("prov:used"), u);
        }

        let maps: BTreeMap<&str, Iri> = scan.maps.iter().map(|m| (m.id.as_str(), ids::file(base, &m.file.path))).collect();
        let mut env_artifacts: BTreeMap<&str, Vec<Iri>> = BTreeMap::new();
        for env in &scan.environments {
            let model = maps.get(env.map_id.as_str()).cloned();
            for (step, file) in ENVIRONMENT_STEPS.iter().zip([&env.mesh, &env.grid, &env.world]) {
                let act = ids::environment_generation(base, &env.map_id, step);
                let artifact = b.file_entity(file, &["robovast:EnvironmentArtifact"]);
                let a = b.node(artifact.clone());
                a.add(t("prov:wasGeneratedBy"), act.clone());
                if let Some(m) = &model {
                    a.add(t("prov:wasDerivedFrom"), m.clone());
                }
                let node = b.node(act);
                node.add_type(t("robovast:EnvironmentGeneration"))
                    .add_type(t("prov:Activity"))
                    .add(t("robovast:name"), LiteralValue::string(*step))
                    .add(t("prov:wasInformedBy"), generation.clone())
                    .add(t("prov:wasAssociatedWith"), env_agent.clone());
                if let Some(m) = &model {
                    node.add(t("prov:used"), m.clone());
                }
                env_artifacts.entry(env.map_id.as_str()).or_default().push(artifact);
            }
        }

        let mut by_scenario: BTreeMap<&str, Vec<&ConfigRecord>> = BTreeMap::new();
        for c in &scan.configs {
            by_scenario.entry(c.params.scenario.as_str()).or_default().push(c);
        }
        for s in &scan.scenarios {
            // the scenario is the entity; its file is only a location
            let loc = b.location(&s.file);
            let configs = by_scenario.get(s.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let node = b.node(ids::concrete_scenario(base, &s.id));
            node.add_type(t("smm:ConcreteScenario"))
                .add_type(t("prov:Entity"))
                .add_type(t("prov:Collection"))
                .add(t("prov:wasGeneratedBy"), generation.clone())
                .add(t("prov:atLocation"), loc)
                .add(t("robovast:name"), LiteralValue::string(s.id.clone()));
            if let Some(first) = configs.first() {
                let p = &first.params;
                node.add(t("robovast:n_obstacles"), LiteralValue::integer(i64::from(p.n_obstacles)))
                    .add(t("robovast:pathLength"), LiteralValue::decimal_f64(p.path_length_m))
                    .add(t("robovast:obstacleDensity"), LiteralValue::decimal_f64(p.obstacle_density_per_m))
                    .add(t("robovast:startPose"), LiteralValue::string(p.start_pose.to_string()))
                    .add(t("robovast:goalPose"), LiteralValue::string(p.goal_pose.to_string()));
                if let Some(m) = maps.get(p.map.as_str()) {
                    node.add(t("dcterms:references"), m.clone());
                }
                for a in env_artifacts.get(p.map.as_str()).into_iter().flatten() {
                    node.add(t("dcterms:references"), a.clone());
                }
            }
            let runs: usize = configs.iter().map(|c| c.run_dirs.len()).sum();
            node.add(t("robovast:n_runs"), LiteralValue::integer(runs as i64));
            for c in configs {
                node.add(t("prov:hadMember"), ids::configuration(base, &c.id));
            }
        }
        Ok(b.finish())
    }
}

/// Configuration level: scenario parameters, the derived robot
/// configuration and its `load_config` activity.
pub struct ConfigurationCollector;

impl CollectorPlugin for ConfigurationCollector {
    fn name(&self) -> &str {
        "configuration"
    }

    fn level(&self) -> Level {
        Level::Configuration
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Configuration(cfg) = scope else { return Err(wrong_scope(self.name())) };
        let base = ctx.base();
        let p = &cfg.params;
        let mut b = FragmentBuilder::new(base);
        let robot = b.robot(robot_name(ctx.manifest));

        let sc = b.file_entity(&cfg.scenario_config, &["robovast:ScenarioConfig"]);
        let node = b.node(sc.clone());
        node.add(t("prov:wasGeneratedBy"), ids::scenario_generation(base))
            .add(t("robovast:startPose"), LiteralValue::string(p.start_pose.to_string()))
            .add(t("robovast:goalPose"), LiteralValue::string(p.goal_pose.to_string()))
            .add(t("robovast:n_obstacles"), LiteralValue::integer(i64::from(p.n_obstacles)))
            .add(t("robovast:robotRadius"), LiteralValue::decimal_f64(p.robot_radius_m));
        if let Some(seed) = p.seed {
            node.add(t("robovast:seed"), LiteralValue::integer(seed as i64));
        }

        let mut members = vec![sc];
        if let Some(rc) = &cfg.robot_config {
            let id = b.file_entity(&rc.file, &["robovast:RobotConfiguration"]);
            let meta = &rc.info.meta;
            let original = meta
                .derived_from
                .as_deref()
                .and_then(|p| ctx.scan.input(p))
                .map(|i| ids::file(base, &i.file.path));
            let node = b.node(id.clone());
            node.add(t("dcterms:hasVersion"), LiteralValue::string(meta.version.clone()))
                .add(t("dcterms:modified"), LiteralValue::date_time(meta.modified));
            if let Some(r) = rc.info.robot_radius {
                node.add(t("robovast:robotRadius"), LiteralValue::decimal_f64(r));
            }
            if let Some(o) = original {
                node.add(t("prov:wasDerivedFrom"), o);
            }
            for f in ctx.manifest.execution.robot.launch.iter().chain(&ctx.manifest.execution.robot.models) {
                if let Some(i) = ctx.scan.input(f) {
                    node.add(t("dcterms:references"), ids::file(base, &i.file.path));
                }
            }
            b.node(ids::load_config(base, &cfg.id))
                .add_type(t("robovast:LoadConfig"))
                .add_type(t("prov:Activity"))
                .add(t("prov:used"), id.clone())
                .add(t("prov:wasAssociatedWith"), robot);
            members.push(id);
        }
        let node = b.node(ids::configuration(base, &cfg.id));
        node.add_type(t("robovast:Configuration"))
            .add_type(t("prov:Collection"))
            .add_type(t("prov:Entity"))
            .add(t("robovast:name"), LiteralValue::string(cfg.id.clone()))
            .add(t("robovast:robotRadius"), LiteralValue::decimal_f64(p.robot_radius_m));
        for m in members {
            node.add(t("prov:hadMember"), m);
        }
        Ok(b.finish())
    }
}

/// Run outcome from `test.xml` and the links to what the run used.
pub struct OutcomeCollector;

impl CollectorPlugin for OutcomeCollector {
    fn name(&self) -> &str {
        "outcome"
    }

    fn level(&self) -> Level {
        Level::Run
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Run(run) = scope else { return Err(wrong_scope(self.name())) };
        let base = ctx.base();
        let cfg = config_for(ctx, run)?;
        let mut b = FragmentBuilder::new(base);
        let robot = b.robot(robot_name(ctx.manifest));
        let r = &run.report;
        let node = b.node(ids::run(base, &run.run_dir));
        node.add_type(t("robovast:TestExecution"))
            .add_type(t("prov:Activity"))
            .add(t("robovast:success"), LiteralValue::boolean(r.success))
            .add(t("robovast:duration"), LiteralValue::decimal(r.duration))
            .add(t("prov:startedAtTime"), LiteralValue::date_time(r.started))
            .add(t("prov:endedAtTime"), LiteralValue::date_time(r.ended))
            .add(t("prov:used"), ids::concrete_scenario(base, &cfg.params.scenario))
            .add(t("prov:wasAssociatedWith"), robot);
        if let Some(rc) = &cfg.robot_config {
            node.add(t("prov:used"), ids::file(base, &rc.file.path))
                .add(t("prov:wasInformedBy"), ids::load_config(base, &cfg.id));
        }
        if let Some(m) = &r.failure_message {
            node.add(t("robovast:failureMessage"), LiteralValue::string(m.clone()));
        }
        if let Some(seed) = run.metadata.seed {
            node.add(t("robovast:seed"), LiteralValue::integer(seed as i64));
        }
        Ok(b.finish())
    }
}

/// Hardware, middleware distribution and runtime environment of a run.
pub struct SystemCollector;

impl CollectorPlugin for SystemCollector {
    fn name(&self) -> &str {
        "system"
    }

    fn level(&self) -> Level {
        Level::Run
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Run(run) = scope else { return Err(wrong_scope(self.name())) };
        let sys = &run.metadata.system;
        let mut b = FragmentBuilder::new(ctx.base());
        b.node(ids::run(ctx.base(), &run.run_dir))
            .add(t("robovast:hardware"), LiteralValue::string(sys.hardware.clone()))
            .add(t("robovast:middlewareDistribution"), LiteralValue::string(sys.middleware_distribution.clone()))
            .add(t("robovast:runtimeEnvironment"), LiteralValue::string(sys.runtime_environment.clone()));
        Ok(b.finish())
    }
}

/// Catalog of the files a run produced directly.
pub struct ArtifactCollector;

impl CollectorPlugin for ArtifactCollector {
    fn name(&self) -> &str {
        "artifacts"
    }

    fn level(&self) -> Level {
        Level::Run
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Run(run) = scope else { return Err(wrong_scope(self.name())) };
        let derived = postprocess_outputs(ctx.manifest);
        let run_id = ids::run(ctx.base(), &run.run_dir);
        let mut b = FragmentBuilder::new(ctx.base());
        for a in run.artifacts.iter().filter(|a| !derived.contains(a.local.as_str())) {
            let id = b.file_entity(&a.file, &[artifact_class(a.kind)]);
            b.node(id).add(t("prov:wasGeneratedBy"), run_id.clone());
        }
        Ok(b.finish())
    }
}

/// Bag summary: middleware version, message types and total message count.
pub struct BagCollector;

impl CollectorPlugin for BagCollector {
    fn name(&self) -> &str {
        "bag"
    }

    fn level(&self) -> Level {
        Level::Run
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Run(run) = scope else { return Err(wrong_scope(self.name())) };
        let bag = &run.metadata.bag;
        let total: u64 = bag.messages.iter().map(|m| m.count).sum();
        let mut b = FragmentBuilder::new(ctx.base());
        for a in run.artifacts_of(ArtifactKind::Bag) {
            let node = b.node(ids::file(ctx.base(), &a.file.path));
            node.add(t("robovast:middlewareVersion"), LiteralValue::string(bag.middleware_version.clone()))
                .add(t("robovast:messageCount"), LiteralValue::integer(total as i64));
            for m in &bag.messages {
                node.add(t("robovast:messageType"), LiteralValue::string(m.message_type.clone()));
            }
        }
        Ok(b.finish())
    }
}

/// One activity per postprocessing step and run, with its outputs.
pub struct PostprocessCollector;

impl CollectorPlugin for PostprocessCollector {
    fn name(&self) -> &str {
        "postprocess"
    }

    fn level(&self) -> Level {
        Level::Postprocess
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Postprocess { run, step } = scope else { return Err(wrong_scope(self.name())) };
        let base = ctx.base();
        let mut b = FragmentBuilder::new(base);
        let agent = b.software_agent(ctx.manifest, &step.plugin);
        let bags: Vec<Iri> = run.artifacts_of(ArtifactKind::Bag).map(|a| ids::file(base, &a.file.path)).collect();
        if bags.is_empty() {
            return Err(format!("{} has no bag to postprocess", run.run_dir).into());
        }
        let act = ids::postprocess(base, &run.run_dir, &step.plugin);
        for out in &step.outputs {
            let a = run
                .artifact(out)
                .ok_or_else(|| format!("{}: {} did not produce {out}", run.run_dir, step.plugin))?;
            let id = b.file_entity(&a.file, &[artifact_class(a.kind)]);
            let node = b.node(id);
            node.add(t("prov:wasGeneratedBy"), act.clone());
            for bag in &bags {
                node.add(t("prov:wasDerivedFrom"), bag.clone());
            }
        }
        let node = b.node(act);
        node.add_type(t("robovast:Postprocessing"))
            .add_type(t("prov:Activity"))
            .add(t("robovast:plugin"), LiteralValue::string(step.plugin.clone()))
            .add(t("prov:wasAssociatedWith"), agent)
            .add(t("prov:wasInformedBy"), ids::run(base, &run.run_dir));
        for (k, v) in &step.parameters {
            node.add(t("robovast:parameter"), LiteralValue::string(format!("{k}={v}")));
        }
        for bag in bags {
            node.add(t("prov:used"), bag);
        }
        Ok(b.finish())
    }
}

/// The built-in collectors covering campaign, configuration, run and
/// postprocess levels.
pub fn builtin_registry() -> Registry {
    let mut r = Registry::new();
    r.register(DatasetCollector).expect("unique");
    r.register(CampaignCollector).expect("unique");
    r.register(InputsCollector).expect("unique");
    r.register(GenerationCollector).expect("unique");
    r.register(ConfigurationCollector).expect("unique");
    r.register(OutcomeCollector).expect("unique");
    r.register(SystemCollector).expect("unique");
    r.register(ArtifactCollector).expect("unique");
    r.register(BagCollector).expect("unique");
    r.register(PostprocessCollector).expect("unique");
    r
}

/// Seconds as a decimal literal value (used by custom collectors).
pub fn seconds(value: Decimal) -> LiteralValue {
    LiteralValue::decimal(value)
}
