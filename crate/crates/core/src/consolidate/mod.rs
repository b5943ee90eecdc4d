//! One provenance graph per campaign: merging collector fragments, unit
//! annotations, structural validation and counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::capture::collectors::builtin_registry;
use crate::capture::layout::PROVENANCE_FILE;
use crate::capture::manifest::MANIFEST_FILE;
use crate::capture::{
    parse_manifest, run_collectors, scan_campaign, CampaignManifest, CaptureError, CollectContext, PluginFailure, Registry,
    ScanResult,
};
use crate::ldgraph::{self, LdError, LinkedDocument};
use crate::vocab::{iri as t, Compacted, Iri};

pub mod mutations;
mod validate;

pub use validate::{edge_rules, validate_graph, Category, EdgeRule, Multiplicity, Violation};

#[derive(Debug, Error)]
pub enum ConsolidateError {
    #[error("fragments conflict: {0}")]
    ConsolidationConflict(#[from] LdError),
    #[error("{node} lacks mandatory {predicate} ({rule})")]
    MissingMandatoryEdge { node: Iri, predicate: Iri, rule: String },
    #[error("{} collector failure(s), first: {}", .0.len(), .0[0])]
    CollectorFailures(Vec<PluginFailure>),
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Node counts per type, triple count and (for validation) violations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub triples: usize,
    /// Compact type name to number of nodes carrying it.
    pub types: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
}

impl GraphReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, ty: &str) -> usize {
        self.types.get(ty).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("nodes\t{}\ntriples\t{}\n", self.nodes, self.triples);
        for (ty, n) in &self.types {
            out.push_str(&format!("{ty}\t{n}\n"));
        }
        for v in &self.violations {
            out.push_str(&format!("violation\t{v}\n"));
        }
        out
    }
}

/// Counts only; violations stay empty.
pub fn stats(doc: &LinkedDocument) -> GraphReport {
    let mut types = BTreeMap::new();
    for node in doc.nodes() {
        for ty in node.types() {
            let name = match doc.context().compact(ty) {
                Compacted::Term(term) => term.to_string(),
                Compacted::Iri(iri) => iri.to_string(),
            };
            *types.entry(name).or_insert(0) += 1;
        }
    }
    GraphReport { nodes: doc.len(), triples: doc.triple_count(), types, violations: Vec::new() }
}

/// Properties whose values carry a unit; described once in the graph.
pub const UNIT_ANNOTATIONS: [(&str, &str); 3] = [
    ("robovast:robotRadius", "unit:M"),
    ("robovast:pathLength", "unit:M"),
    ("robovast:duration", "unit:SEC"),
];

fn annotate_units(doc: &mut LinkedDocument) {
    for (property, unit) in UNIT_ANNOTATIONS {
        let p = t(property);
        let used = doc.nodes().any(|n| n.values(&p).next().is_some());
        if used {
            doc.entry(p).add(t("qudt:unit"), t(unit));
        }
    }
}

/// Merges collector fragments into the campaign graph, adds unit
/// descriptions and enforces the mandatory edges.
pub fn build_graph(
    manifest: &CampaignManifest,
    _scan: &ScanResult,
    fragments: Vec<LinkedDocument>,
) -> Result<LinkedDocument, ConsolidateError> {
    let mut docs = vec![LinkedDocument::with_base(manifest.base().iri())];
    docs.extend(fragments);
    let mut doc = ldgraph::merge(docs)?;
    annotate_units(&mut doc);
    if let Some(v) = validate::mandatory_edges(&doc).into_iter().next() {
        return Err(ConsolidateError::MissingMandatoryEdge {
            node: v.node,
            predicate: v.predicate.expect("edge violations name their predicate"),
            rule: v.rule,
        });
    }
    Ok(doc)
}

/// Everything produced by consolidating one results tree.
pub struct Consolidated {
    pub manifest: CampaignManifest,
    pub scan: ScanResult,
    pub doc: LinkedDocument,
}

pub fn read_manifest(root: &Path) -> Result<CampaignManifest, ConsolidateError> {
    let path = root.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(|source| ConsolidateError::Io { path, source })?;
    Ok(parse_manifest(&bytes)?)
}

/// Manifest, scan, collectors and graph construction for a results root.
/// Layout violations and collector failures abort.
pub fn consolidate_with(root: &Path, registry: &Registry) -> Result<Consolidated, ConsolidateError> {
    let manifest = read_manifest(root)?;
    let scan = scan_campaign(root, &manifest)?;
    scan.ensure_clean()?;
    let collected = run_collectors(registry, &CollectContext::new(&manifest, &scan))?;
    if !collected.failures.is_empty() {
        return Err(ConsolidateError::CollectorFailures(collected.failures));
    }
    let doc = build_graph(&manifest, &scan, collected.docs())?;
    Ok(Consolidated { manifest, scan, doc })
}

pub fn consolidate(root: &Path) -> Result<Consolidated, ConsolidateError> {
    consolidate_with(root, &builtin_registry())
}

/// Writes `provenance.jsonld` at the results root.
pub fn write_provenance(root: &Path, doc: &LinkedDocument) -> Result<PathBuf, ConsolidateError> {
    let path = root.join(PROVENANCE_FILE);
    fs::write(&path, ldgraph::serialize(doc)).map_err(|source| ConsolidateError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub fn read_provenance(path: &Path) -> Result<LinkedDocument, ConsolidateError> {
    let bytes = fs::read(path).map_err(|source| ConsolidateError::Io { path: path.to_path_buf(), source })?;
    Ok(ldgraph::parse(&bytes)?)
}
