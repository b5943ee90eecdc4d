//! Reading a campaign: the manifest, the standardized results tree, and the
//! collector plugins that turn both into graph fragments.

use std::path::PathBuf;

use thiserror::Error;

use crate::identity::IdentityError;

pub mod collectors;
pub mod layout;
pub mod manifest;
pub mod plugins;
pub mod report;
pub mod scan;

pub use manifest::{parse_manifest, CampaignManifest, PostprocessSpec};
pub use plugins::{run_collectors, CollectContext, CollectorPlugin, Collected, Fragment, Level, PluginError, PluginFailure, Registry, Scope};
pub use report::{parse_test_report, serialize_report, TestReport};
pub use scan::{scan_campaign, ArtifactKind, ConfigRecord, FileInfo, LayoutViolation, RunRecord, ScanResult};

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("manifest is missing required field {0:?}")]
    MissingRequiredField(&'static str),
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("malformed test report: {0}")]
    MalformedReport(String),
    #[error("test report has no timestamp")]
    MissingTimestamp,
    #[error("malformed scenario.config: {0}")]
    MalformedScenarioConfig(String),
    #[error("malformed run metadata: {0}")]
    MalformedRunMetadata(String),
    #[error("incomplete environment model metadata: {0}")]
    IncompleteEnvironmentMetadata(String),
    #[error("malformed variation file: {0}")]
    MalformedVariation(String),
    #[error("malformed robot configuration: {0}")]
    MalformedRobotConfig(String),
    #[error("{} layout violation(s), first: {}", .0.len(), .0.first().map(ToString::to_string).unwrap_or_default())]
    LayoutViolation(Vec<LayoutViolation>),
    #[error("collector registry is empty")]
    EmptyRegistry,
    #[error("duplicate collector name {0:?}")]
    DuplicatePlugin(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

impl CaptureError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CaptureError::Io { path: path.into(), source }
    }
}
