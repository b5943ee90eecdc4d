//! Distributions: deterministic packaging, the repository deposit protocol
//! and writing the results back into the graph.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::identity::{self, BaseIri, IdentityError, RelPath};
use crate::ldgraph::{LdError, LinkedDocument, LiteralValue, Value};
use crate::vocab::{iri as t, Iri};

pub mod deposit;
pub mod mock;
pub mod package;

pub use deposit::{deposit, DepositClient, DepositMetadata, DepositSession, DepositState};
pub use mock::{MockBehavior, MockServer, RecordedCall};
pub use package::{package, Package, PackageEntry, PackageManifest};

#[derive(Debug, Error)]
pub enum PublishError {
    #[error("no file matched {0:?}")]
    EmptySelection(Vec<String>),
    #[error("filename template {template:?}: {message}")]
    TemplateError { template: String, message: String },
    #[error("invalid include filter {pattern:?}: {message}")]
    InvalidFilter { pattern: String, message: String },
    #[error("authentication rejected: {0}")]
    AuthError(String),
    #[error("unexpected response: {0}")]
    ProtocolError(String),
    #[error("{file}: server checksum {remote} differs from local {local}")]
    DigestMismatch { file: String, local: String, remote: String },
    #[error("session is {0}, expected a fresh or created session")]
    InvalidState(DepositState),
    #[error("refusing plain-HTTP endpoint {0}; only loopback hosts may skip TLS")]
    InsecureEndpoint(String),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("zip: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error("graph has no dataset node {0}")]
    MissingDataset(Iri),
    #[error(transparent)]
    Graph(#[from] LdError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

impl PublishError {
    pub(crate) fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        PublishError::Io { path: path.into(), source }
    }
}

/// One `zip` entry of the manifest's `publication` section.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct DistributionSpec {
    filename_template: String,
    include_filter: Vec<String>,
}

impl DistributionSpec {
    pub fn new(filename_template: impl Into<String>, include_filter: Vec<String>) -> Result<Self, PublishError> {
        let filename_template = filename_template.into();
        if include_filter.is_empty() {
            return Err(PublishError::InvalidFilter { pattern: String::new(), message: "at least one glob is required".into() });
        }
        for p in &include_filter {
            let bad = |message: &str| PublishError::InvalidFilter { pattern: p.clone(), message: message.into() };
            if p.is_empty() {
                return Err(bad("empty pattern"));
            }
            if p.starts_with('/') || p.starts_with('\\') {
                return Err(bad("must be relative"));
            }
            if p.split(['/', '\\']).any(|s| s == "..") {
                return Err(bad("must not traverse upwards"));
            }
            globset::Glob::new(p).map_err(|e| bad(&e.to_string()))?;
        }
        // fail early on a bad template
        render_template(&filename_template, DateTime::<Utc>::UNIX_EPOCH)?;
        Ok(DistributionSpec { filename_template, include_filter })
    }

    /// The distribution holding graph and summary files when the manifest
    /// declares none.
    pub fn default_metadata() -> Self {
        DistributionSpec::new("{timestamp:%Y%m%d}_metadata.zip", vec!["*.jsonld".into(), "*.json".into()])
            .expect("static spec")
    }

    pub fn filename_template(&self) -> &str {
        &self.filename_template
    }

    pub fn include_filter(&self) -> &[String] {
        &self.include_filter
    }

    pub fn filename(&self, clock: DateTime<Utc>) -> Result<String, PublishError> {
        render_template(&self.filename_template, clock)
    }
}

/// Expands `{timestamp:<format>}` placeholders. Only `%Y %m %d %H %M %S`
/// and `%%` are accepted so names stay portable.
pub fn render_template(template: &str, clock: DateTime<Utc>) -> Result<String, PublishError> {
    let err = |message: String| PublishError::TemplateError { template: template.to_string(), message };
    let mut out = String::new();
    let mut rest = template;
    while let Some(open) = rest.find(['{', '}']) {
        if rest.as_bytes()[open] == b'}' {
            return Err(err("unmatched '}'".into()));
        }
        out.push_str(&rest[..open]);
        let close = rest[open..].find('}').ok_or_else(|| err("unclosed '{'".into()))? + open;
        let inner = &rest[open + 1..close];
        let format = inner
            .strip_prefix("timestamp:")
            .ok_or_else(|| err(format!("unknown placeholder {{{inner}}}")))?;
        let mut chars = format.chars();
        while let Some(c) = chars.next() {
            if c == '%' {
                match chars.next() {
                    Some('%') => out.push('%'),
                    Some(d @ ('Y' | 'm' | 'd' | 'H' | 'M' | 'S')) => out.push_str(&clock.format(&format!("%{d}")).to_string()),
                    Some(d) => return Err(err(format!("unsupported directive %{d}"))),
                    None => return Err(err("dangling '%'".into())),
                }
            } else {
                out.push(c);
            }
        }
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    if out.is_empty() || out.contains(['/', '\\']) || out == "." || out == ".." {
        return Err(err(format!("{out:?} is not a plain file name")));
    }
    Ok(out)
}

/// Sets the dataset's `dcterms:identifier` to the DOI. Idempotent; a
/// different identifier already present is a conflict.
pub fn attach_doi(mut doc: LinkedDocument, dataset: &Iri, doi: &str) -> Result<LinkedDocument, PublishError> {
    let literal = identity::doi_identifier(doi)?;
    let predicate = t("dcterms:identifier");
    let node = doc.node_mut(dataset).ok_or_else(|| PublishError::MissingDataset(dataset.clone()))?;
    let value = Value::Literal(literal);
    let existing = node.values(&predicate).next().cloned();
    match existing {
        Some(existing) if existing == value => {}
        Some(_) => {
            return Err(LdError::ConflictingFunctionalValue {
                node: dataset.clone(),
                property: predicate,
            }
            .into())
        }
        None => {
            node.add(predicate, value);
        }
    }
    Ok(doc)
}

pub fn distribution_id(base: &BaseIri, archive: &str) -> Result<Iri, PublishError> {
    Ok(base.mint(&RelPath::new(["dist", archive])?))
}

/// Adds a `dcat:Distribution` node for one produced archive and links it
/// from the dataset.
pub fn record_distribution(
    doc: &mut LinkedDocument,
    base: &BaseIri,
    manifest: &PackageManifest,
) -> Result<Iri, PublishError> {
    let dataset = base.iri().clone();
    if doc.node(&dataset).is_none() {
        return Err(PublishError::MissingDataset(dataset));
    }
    let id = distribution_id(base, &manifest.archive)?;
    doc.entry(id.clone())
        .add_type(t("dcat:Distribution"))
        .add(t("dcterms:title"), LiteralValue::string(manifest.archive.clone()))
        .add(t("dcat:byteSize"), LiteralValue::integer(manifest.archive_size as i64))
        .add(t("robovast:sha256"), LiteralValue::string(manifest.archive_sha256.clone()))
        .add(t("dcat:mediaType"), LiteralValue::string("application/zip"));
    doc.entry(dataset).add(t("dcat:distribution"), id.clone());
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn clock() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 1, 1, 13, 4, 5).unwrap()
    }

    #[test]
    fn renders_dated_template() {
        assert_eq!(render_template("{timestamp:%Y%m%d}_meta.zip", clock()).unwrap(), "20250101_meta.zip");
        assert_eq!(render_template("{timestamp:%H%M%S}-100%.zip", clock()).unwrap(), "130405-100%.zip");
        assert_eq!(render_template("plain.zip", clock()).unwrap(), "plain.zip");
    }

    #[test]
    fn rejects_bad_templates() {
        for bad in ["{timestamp:%j}.zip", "{time:%Y}.zip", "{timestamp:%Y.zip", "a}.zip", "{timestamp:%Y}/x.zip", "{timestamp:%}"] {
            assert!(matches!(render_template(bad, clock()), Err(PublishError::TemplateError { .. })), "{bad}");
        }
    }

    #[test]
    fn spec_validation() {
        assert!(DistributionSpec::new("a.zip", vec![]).is_err());
        assert!(DistributionSpec::new("a.zip", vec!["/etc/*".into()]).is_err());
        assert!(DistributionSpec::new("a.zip", vec!["../*.json".into()]).is_err());
        assert!(DistributionSpec::new("a.zip", vec!["configs/[".into()]).is_err());
        assert!(DistributionSpec::new("{timestamp:%q}.zip", vec!["*.json".into()]).is_err());
        let s = DistributionSpec::new("{timestamp:%Y%m%d}_meta.zip", vec!["*.json".into()]).unwrap();
        assert_eq!(s.filename(clock()).unwrap(), "20250101_meta.zip");
    }

    fn graph() -> (BaseIri, LinkedDocument) {
        let base = BaseIri::new("https://example.org/ds").unwrap();
        let mut doc = LinkedDocument::with_base(base.iri());
        doc.entry(base.iri().clone()).add_type(t("dcat:Dataset"));
        (base, doc)
    }

    #[test]
    fn doi_attachment_is_idempotent_and_functional() {
        let (base, doc) = graph();
        let doc = attach_doi(doc, base.iri(), "10.5281/zenodo.18702398").unwrap();
        let id = doc.node(base.iri()).unwrap().first_literal(&t("dcterms:identifier")).unwrap().lexical().to_string();
        assert_eq!(id, "https://doi.org/10.5281/zenodo.18702398");
        let again = attach_doi(doc.clone(), base.iri(), "10.5281/zenodo.18702398").unwrap();
        assert_eq!(again, doc);
        let err = attach_doi(doc, base.iri(), "10.5281/zenodo.1").unwrap_err();
        assert!(matches!(err, PublishError::Graph(LdError::ConflictingFunctionalValue { .. })));
    }

    #[test]
    fn doi_needs_dataset_and_valid_doi() {
        let (base, doc) = graph();
        assert!(matches!(attach_doi(doc.clone(), base.iri(), "zenodo"), Err(PublishError::Identity(_))));
        let other = Iri::new("https://example.org/other").unwrap();
        assert!(matches!(attach_doi(doc, &other, "10.1/x"), Err(PublishError::MissingDataset(_))));
    }
}
