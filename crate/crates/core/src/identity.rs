//! Deterministic identifiers: path-based IRIs under the dataset base,
//! ORCID person IRIs, software-agent PURLs and DOI literals.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::ldgraph::LiteralValue;
use crate::vocab::Iri;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("invalid path {0:?}: {1}")]
    InvalidPath(String, &'static str),
    #[error("invalid ORCID {0:?}")]
    InvalidOrcid(String),
    #[error("invalid DOI {0:?}")]
    InvalidDoi(String),
    #[error("invalid base IRI {0:?}: {1}")]
    InvalidBase(String, &'static str),
}

/// Everything except RFC 3986 unreserved characters is encoded.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

/// The dataset PURL; stored without a trailing slash.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BaseIri(Iri);

impl BaseIri {
    pub fn new(value: &str) -> Result<Self, IdentityError> {
        let trimmed = value.trim().trim_end_matches('/');
        let iri = Iri::new(trimmed).map_err(|_| IdentityError::InvalidBase(value.into(), "not an IRI"))?;
        if iri.scheme() != "https" {
            return Err(IdentityError::InvalidBase(value.into(), "scheme must be https"));
        }
        if iri.host().is_none_or(str::is_empty) {
            return Err(IdentityError::InvalidBase(value.into(), "missing host"));
        }
        Ok(BaseIri(iri))
    }

    pub fn iri(&self) -> &Iri {
        &self.0
    }

    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }

    /// Whether `iri` is the base itself or lies below it.
    pub fn contains(&self, iri: &Iri) -> bool {
        let s = iri.as_str();
        s == self.as_str() || s.strip_prefix(self.as_str()).is_some_and(|rest| rest.starts_with('/'))
    }

    pub fn mint(&self, path: &RelPath) -> Iri {
        mint_from_path(self, path)
    }

    /// Mints from a path given as text; panics on invalid paths, so callers
    /// pass only layout paths built by this crate.
    pub fn mint_str(&self, path: &str) -> Iri {
        let p: RelPath = path.parse().unwrap_or_else(|e| panic!("{e}"));
        self.mint(&p)
    }
}

impl fmt::Display for BaseIri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for BaseIri {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaseIri::new(s)
    }
}

/// A normalized path relative to the campaign results folder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelPath(Vec<String>);

impl RelPath {
    pub fn new<I, S>(segments: I) -> Result<Self, IdentityError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        let joined = segments.join("/");
        if segments.is_empty() {
            return Err(IdentityError::InvalidPath(joined, "empty path"));
        }
        for s in &segments {
            match s.as_str() {
                "" => return Err(IdentityError::InvalidPath(joined, "empty segment")),
                "." | ".." => return Err(IdentityError::InvalidPath(joined, "traversal segment")),
                _ if s.contains(['/', '\\']) => return Err(IdentityError::InvalidPath(joined, "separator inside segment")),
                _ => {}
            }
        }
        Ok(RelPath(segments))
    }

    /// Relative path of `path` below `root`, with forward slashes.
    pub fn from_fs(root: &Path, path: &Path) -> Result<Self, IdentityError> {
        let rel = path
            .strip_prefix(root)
            .map_err(|_| IdentityError::InvalidPath(path.display().to_string(), "outside results root"))?;
        let segments: Option<Vec<String>> = rel.components().map(|c| c.as_os_str().to_str().map(str::to_string)).collect();
        RelPath::new(segments.ok_or_else(|| IdentityError::InvalidPath(rel.display().to_string(), "not UTF-8"))?)
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn join(&self, segment: &str) -> Result<RelPath, IdentityError> {
        let mut segs = self.0.clone();
        segs.extend(segment.split('/').map(str::to_string));
        RelPath::new(segs)
    }

    pub fn file_name(&self) -> &str {
        self.0.last().expect("non-empty")
    }
}

impl FromStr for RelPath {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with('/') || s.starts_with('\\') || s.get(1..2) == Some(":") {
            return Err(IdentityError::InvalidPath(s.into(), "absolute path"));
        }
        RelPath::new(s.split(['/', '\\']))
    }
}

impl fmt::Display for RelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

/// `base + "/" + encoded segments`.
pub fn mint_from_path(base: &BaseIri, path: &RelPath) -> Iri {
    let mut out = String::with_capacity(base.as_str().len() + 32);
    out.push_str(base.as_str());
    for seg in path.segments() {
        out.push('/');
        out.extend(utf8_percent_encode(seg, SEGMENT));
    }
    Iri::new(out).expect("encoded path is a valid IRI")
}

/// Percent-encodes one path segment with the minting rules.
pub fn encode_segment(segment: &str) -> String {
    utf8_percent_encode(segment, SEGMENT).to_string()
}

/// `iri#fragment`, for nodes that live beside a minted path (activities,
/// file locations). Minted paths never contain a raw `#`, so these cannot
/// collide with path ids.
pub fn with_fragment(iri: &Iri, fragment: &str) -> Iri {
    Iri::new(format!("{iri}#{}", encode_segment(fragment))).expect("encoded fragment is valid")
}

/// Run ids are minted from the run directory like any other path.
pub fn run_identifier(base: &BaseIri, run_dir: &RelPath) -> Iri {
    mint_from_path(base, run_dir)
}

/// Checks the 16-character ORCID form and its ISO 7064 MOD 11-2 check digit.
pub fn validate_orcid(orcid: &str) -> Result<(), IdentityError> {
    let err = || IdentityError::InvalidOrcid(orcid.to_string());
    let bytes = orcid.as_bytes();
    if bytes.len() != 19 {
        return Err(err());
    }
    let mut digits = Vec::with_capacity(16);
    for (i, &b) in bytes.iter().enumerate() {
        if i % 5 == 4 {
            if b != b'-' {
                return Err(err());
            }
        } else {
            digits.push(b);
        }
    }
    let (body, check) = digits.split_at(15);
    if !body.iter().all(u8::is_ascii_digit) {
        return Err(err());
    }
    let total = body.iter().fold(0u32, |acc, d| (acc + u32::from(d - b'0')) * 2);
    let result = (12 - total % 11) % 11;
    let expected = if result == 10 { b'X' } else { b'0' + result as u8 };
    if check[0] != expected {
        return Err(err());
    }
    Ok(())
}

pub fn mint_person(orcid: &str) -> Result<Iri, IdentityError> {
    validate_orcid(orcid)?;
    Ok(Iri::new(format!("https://orcid.org/{orcid}")).expect("valid"))
}

pub fn validate_doi(doi: &str) -> Result<(), IdentityError> {
    let err = || IdentityError::InvalidDoi(doi.to_string());
    let (prefix, suffix) = doi.split_once('/').ok_or_else(err)?;
    let registrant = prefix.strip_prefix("10.").ok_or_else(err)?;
    if registrant.is_empty() || !registrant.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return Err(err());
    }
    if suffix.is_empty() || suffix.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(err());
    }
    Ok(())
}

/// DOI as the resolvable string literal used for `dcterms:identifier`.
pub fn doi_identifier(doi: &str) -> Result<LiteralValue, IdentityError> {
    validate_doi(doi)?;
    let encoded: String = doi
        .chars()
        .flat_map(|c| match c {
            '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`' => format!("%{:02X}", c as u32).chars().collect::<Vec<_>>(),
            c => vec![c],
        })
        .collect();
    Ok(LiteralValue::string(format!("https://doi.org/{encoded}")))
}

/// Default IRI for a software agent not configured in the manifest.
pub fn default_agent(base: &BaseIri, tool: &str) -> Iri {
    mint_from_path(base, &RelPath::new(["agents", tool]).expect("tool names are plain segments"))
}

/// Slug used for persons without an ORCID.
pub fn person_slug(name: &str) -> String {
    let mut slug = String::new();
    for c in name.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            slug.push(c);
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    let slug = slug.trim_end_matches('-').to_string();
    if slug.is_empty() {
        "anonymous".into()
    } else {
        slug
    }
}
