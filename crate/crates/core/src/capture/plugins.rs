//! Collector plugin interface and the runner that applies a registry to a
//! scanned campaign.

use std::collections::BTreeSet;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use super::manifest::{CampaignManifest, PostprocessSpec};
use super::scan::{ConfigRecord, RunRecord, ScanResult};
use super::CaptureError;
use crate::identity::BaseIri;
use crate::ldgraph::LinkedDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Campaign,
    Configuration,
    Run,
    Postprocess,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Campaign => "campaign",
            Level::Configuration => "configuration",
            Level::Run => "run",
            Level::Postprocess => "postprocess",
        })
    }
}

/// Read-only inputs shared by every plugin invocation.
#[derive(Clone, Copy)]
pub struct CollectContext<'a> {
    pub manifest: &'a CampaignManifest,
    pub scan: &'a ScanResult,
}

impl<'a> CollectContext<'a> {
    pub fn new(manifest: &'a CampaignManifest, scan: &'a ScanResult) -> Self {
        CollectContext { manifest, scan }
    }

    pub fn base(&self) -> &'a BaseIri {
        self.manifest.base()
    }
}

/// What a single plugin invocation is about.
#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    Campaign,
    Configuration(&'a ConfigRecord),
    Run(&'a RunRecord),
    Postprocess { run: &'a RunRecord, step: &'a PostprocessSpec },
}

impl Scope<'_> {
    pub fn key(&self) -> String {
        match self {
            Scope::Campaign => "campaign".into(),
            Scope::Configuration(c) => c.dir.to_string(),
            Scope::Run(r) => r.run_dir.to_string(),
            Scope::Postprocess { run, step } => format!("{}#{}", run.run_dir, step.plugin),
        }
    }
}

pub type PluginError = Box<dyn std::error::Error + Send + Sync>;

pub trait CollectorPlugin: Send + Sync {
    fn name(&self) -> &str;
    fn level(&self) -> Level;
    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError>;
}

/// Plugins with unique names, applied in registration order.
#[derive(Default)]
pub struct Registry {
    plugins: Vec<Box<dyn CollectorPlugin>>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn register(&mut self, plugin: impl CollectorPlugin + 'static) -> Result<&mut Self, CaptureError> {
        if self.plugins.iter().any(|p| p.name() == plugin.name()) {
            return Err(CaptureError::DuplicatePlugin(plugin.name().to_string()));
        }
        self.plugins.push(Box::new(plugin));
        Ok(self)
    }

    pub fn with(mut self, plugin: impl CollectorPlugin + 'static) -> Result<Self, CaptureError> {
        self.register(plugin)?;
        Ok(self)
    }

    pub fn names(&self) -> Vec<&str> {
        self.plugins.iter().map(|p| p.name()).collect()
    }

    pub fn len(&self) -> usize {
        self.plugins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plugins.is_empty()
    }

    pub fn levels(&self) -> BTreeSet<Level> {
        self.plugins.iter().map(|p| p.level()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Fragment {
    pub plugin: String,
    pub level: Level,
    pub scope: String,
    pub doc: LinkedDocument,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluginFailure {
    pub plugin: String,
    pub scope: String,
    pub cause: String,
}

impl fmt::Display for PluginFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "plugin {} failed on {}: {}", self.plugin, self.scope, self.cause)
    }
}

#[derive(Debug, Default)]
pub struct Collected {
    pub fragments: Vec<Fragment>,
    pub failures: Vec<PluginFailure>,
}

impl Collected {
    pub fn at_level(&self, level: Level) -> impl Iterator<Item = &Fragment> {
        self.fragments.iter().filter(move |f| f.level == level)
    }

    pub fn docs(self) -> Vec<LinkedDocument> {
        self.fragments.into_iter().map(|f| f.doc).collect()
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".into()
    }
}

/// Runs every plugin at each scope of its level. A failing or panicking
/// plugin is recorded and the others continue. Output order is fixed by
/// registry order and scope path, independent of scheduling.
pub fn run_collectors(registry: &Registry, ctx: &CollectContext<'_>) -> Result<Collected, CaptureError> {
    if registry.is_empty() {
        return Err(CaptureError::EmptyRegistry);
    }
    let mut jobs: Vec<(&dyn CollectorPlugin, Scope<'_>)> = Vec::new();
    for plugin in &registry.plugins {
        let p = plugin.as_ref();
        match p.level() {
            Level::Campaign => jobs.push((p, Scope::Campaign)),
            Level::Configuration => jobs.extend(ctx.scan.configs.iter().map(|c| (p, Scope::Configuration(c)))),
            Level::Run => jobs.extend(ctx.scan.runs.iter().map(|r| (p, Scope::Run(r)))),
            Level::Postprocess => {
                for run in &ctx.scan.runs {
                    for step in &ctx.manifest.execution.postprocessing {
                        jobs.push((p, Scope::Postprocess { run, step }));
                    }
                }
            }
        }
    }
    let results: Vec<Result<Fragment, PluginFailure>> = jobs
        .par_iter()
        .map(|(plugin, scope)| {
            let outcome = catch_unwind(AssertUnwindSafe(|| plugin.collect(ctx, scope)));
            let fail = |cause: String| PluginFailure { plugin: plugin.name().to_string(), scope: scope.key(), cause };
            match outcome {
                Ok(Ok(doc)) => Ok(Fragment { plugin: plugin.name().to_string(), level: plugin.level(), scope: scope.key(), doc }),
                Ok(Err(e)) => Err(fail(e.to_string())),
                Err(payload) => Err(fail(format!("panicked: {}", panic_message(payload.as_ref())))),
            }
        })
        .collect();
    let mut out = Collected::default();
    for r in results {
        match r {
            Ok(f) => out.fragments.push(f),
            Err(e) => out.failures.push(e),
        }
    }
    Ok(out)
}
