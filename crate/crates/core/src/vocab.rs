//! Namespaces, compact terms and the closed term catalog.
//!
//! Every other module refers to vocabulary terms through [`Term`] values or the
//! constants in [`ns`], and expands them through a [`PrefixTable`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use thiserror::Error;

/// Namespace IRIs of the vocabularies the toolkit knows about.
pub mod ns {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const PROV: &str = "http://www.w3.org/ns/prov#";
    pub const DCAT: &str = "http://www.w3.org/ns/dcat#";
    pub const DCTERMS: &str = "http://purl.org/dc/terms/";
    pub const QUDT: &str = "http://qudt.org/schema/qudt/";
    pub const UNIT: &str = "http://qudt.org/vocab/unit/";
    pub const ROBOVAST: &str = "https://purl.org/robovast/metamodels#";
    pub const SMM: &str = "https://purl.org/robovast/metamodels/smm#";
}

/// Prefixes that every table constructed by the toolkit carries.
pub const BUILTIN_PREFIXES: [(&str, &str); 8] = [
    ("rdf", ns::RDF),
    ("xsd", ns::XSD),
    ("prov", ns::PROV),
    ("dcat", ns::DCAT),
    ("dcterms", ns::DCTERMS),
    ("qudt", ns::QUDT),
    ("robovast", ns::ROBOVAST),
    ("smm", ns::SMM),
];

/// Prefixes whose namespaces are project-specific rather than community standards.
pub const CUSTOM_PREFIXES: [&str; 2] = ["robovast", "smm"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("invalid IRI {0:?}: {1}")]
    InvalidIri(String, &'static str),
    #[error("invalid compact term {0:?}")]
    InvalidTerm(String),
    #[error("unknown prefix {0:?}")]
    UnknownPrefix(String),
    #[error("unknown property {0}")]
    UnknownProperty(String),
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, VocabError> {
        let value = value.into();
        if let Err(reason) = check_iri(&value) {
            return Err(VocabError::InvalidIri(value, reason));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// The scheme, lowercased.
    pub fn scheme(&self) -> String {
        self.0[..self.0.find(':').expect("validated")].to_ascii_lowercase()
    }

    /// Host part for hierarchical IRIs (`scheme://host/...`).
    pub fn host(&self) -> Option<&str> {
        let rest = &self.0[self.0.find(':')? + 1..];
        let rest = rest.strip_prefix("//")?;
        let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
        Some(&rest[..end])
    }
}

fn check_iri(value: &str) -> Result<(), &'static str> {
    let colon = value.find(':').ok_or("missing scheme")?;
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err("scheme must start with a letter"),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return Err("invalid scheme character");
    }
    if value.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err("contains whitespace");
    }
    if value
        .chars()
        .any(|c| matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`'))
    {
        return Err("contains a character that must be percent-encoded");
    }
    Ok(())
}

impl serde::Serialize for Iri {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl FromStr for Iri {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Iri::new(s)
    }
}

/// A compact `prefix:local` name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub prefix: String,
    pub local: String,
}

impl Term {
    pub fn new(prefix: impl Into<String>, local: impl Into<String>) -> Self {
        Term { prefix: prefix.into(), local: local.into() }
    }

    pub fn is_custom(&self) -> bool {
        CUSTOM_PREFIXES.contains(&self.prefix.as_str())
    }
}

impl FromStr for Term {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((prefix, local))
                if !prefix.is_empty()
                    && prefix.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                    && !local.starts_with("//") =>
            {
                Ok(Term::new(prefix, local))
            }
            _ => Err(VocabError::InvalidTerm(s.to_string())),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.prefix, self.local)
    }
}

/// Result of compacting an IRI against a prefix table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Compacted {
    Term(Term),
    Iri(Iri),
}

impl fmt::Display for Compacted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compacted::Term(t) => t.fmt(f),
            Compacted::Iri(i) => i.fmt(f),
        }
    }
}

/// Prefix → namespace table plus an optional base IRI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTable {
    entries: BTreeMap<String, Iri>,
    base: Option<Iri>,
}

impl Default for PrefixTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl PrefixTable {
    /// The eight built-in prefixes only.
    pub fn builtin() -> Self {
        let entries = BUILTIN_PREFIXES
            .iter()
            .map(|(p, iri)| (p.to_string(), Iri::new(*iri).expect("static namespace")))
            .collect();
        PrefixTable { entries, base: None }
    }

    /// Built-ins plus the QUDT unit namespace; what the toolkit emits.
    pub fn standard() -> Self {
        let mut table = Self::builtin();
        table
            .entries
            .insert("unit".into(), Iri::new(ns::UNIT).expect("static namespace"));
        table
    }

    pub fn with_base(mut self, base: Option<Iri>) -> Self {
        self.base = base;
        self
    }

    pub fn base(&self) -> Option<&Iri> {
        self.base.as_ref()
    }

    pub fn set_base(&mut self, base: Option<Iri>) {
        self.base = base;
    }

    /// Registers or replaces a prefix. `Iri` is never empty, so no prefix can
    /// map to an empty namespace.
    pub fn insert(&mut self, prefix: impl Into<String>, namespace: Iri) {
        self.entries.insert(prefix.into(), namespace);
    }

    pub fn get(&self, prefix: &str) -> Option<&Iri> {
        self.entries.get(prefix)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Iri)> {
        self.entries.iter().map(|(p, i)| (p.as_str(), i))
    }

    pub fn expand(&self, term: &Term) -> Result<Iri, VocabError> {
        let namespace = self
            .entries
            .get(&term.prefix)
            .ok_or_else(|| VocabError::UnknownPrefix(term.prefix.clone()))?;
        Iri::new(format!("{}{}", namespace, term.local))
    }

    /// Expands `prefix:local` text; fails if the prefix is not registered.
    pub fn expand_curie(&self, curie: &str) -> Result<Iri, VocabError> {
        self.expand(&curie.parse()?)
    }

    /// Compacts against the longest matching namespace.
    pub fn compact(&self, iri: &Iri) -> Compacted {
        let best = self
            .entries
            .iter()
            .filter(|(_, ns)| iri.as_str().len() > ns.as_str().len() && iri.as_str().starts_with(ns.as_str()))
            .max_by_key(|(_, ns)| ns.as_str().len());
        match best {
            Some((prefix, ns)) => {
                let local = &iri.as_str()[ns.as_str().len()..];
                if local.starts_with("//") {
                    Compacted::Iri(iri.clone())
                } else {
                    Compacted::Term(Term::new(prefix.clone(), local))
                }
            }
            None => Compacted::Iri(iri.clone()),
        }
    }

    /// Prefix whose namespace contains `iri`, if any.
    pub fn prefix_of(&self, iri: &Iri) -> Option<&str> {
        match self.compact(iri) {
            Compacted::Term(t) => self.entries.get_key_value(&t.prefix).map(|(k, _)| k.as_str()),
            Compacted::Iri(_) => None,
        }
    }

    /// Union of two tables. Returns the conflicting prefix if both define it differently.
    pub fn union(&mut self, other: &PrefixTable) -> Result<(), String> {
        for (prefix, namespace) in &other.entries {
            match self.entries.get(prefix) {
                Some(existing) if existing != namespace => return Err(prefix.clone()),
                Some(_) => {}
                None => {
                    self.entries.insert(prefix.clone(), namespace.clone());
                }
            }
        }
        Ok(())
    }
}

/// XML Schema datatypes used for literal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    Boolean,
    DateTime,
}

impl Datatype {
    pub fn iri(self) -> Iri {
        Iri::new(format!("{}{}", ns::XSD, self.local_name())).expect("static")
    }

    pub fn local_name(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::Boolean => "boolean",
            Datatype::DateTime => "dateTime",
        }
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        let local = iri.strip_prefix(ns::XSD)?;
        Some(match local {
            "string" => Datatype::String,
            "integer" => Datatype::Integer,
            "decimal" => Datatype::Decimal,
            "boolean" => Datatype::Boolean,
            "dateTime" => Datatype::DateTime,
            _ => return None,
        })
    }
}

/// What a property's objects are expected to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    NodeRef,
    Literal(Datatype),
}

#[derive(Debug, Clone)]
pub struct PropertyDef {
    pub kind: ObjectKind,
    /// At most one value per subject.
    pub functional: bool,
}

/// Closed catalog of classes, properties and named individuals.
#[derive(Debug, Clone)]
pub struct TermCatalog {
    classes: BTreeSet<Term>,
    properties: BTreeMap<Term, PropertyDef>,
    individuals: BTreeSet<Term>,
}

const CLASSES: &[&str] = &[
    "prov:Entity",
    "prov:Activity",
    "prov:Agent",
    "prov:Person",
    "prov:SoftwareAgent",
    "prov:Collection",
    "prov:Location",
    "dcat:Dataset",
    "dcat:Distribution",
    "qudt:Unit",
    "smm:AbstractScenario",
    "smm:ConcreteScenario",
    "smm:EnvironmentModel",
    "smm:ScenarioVariation",
    "robovast:Campaign",
    "robovast:TestExecution",
    "robovast:Configuration",
    "robovast:RobotConfiguration",
    "robovast:Robot",
    "robovast:LoadConfig",
    "robovast:ScenarioGeneration",
    "robovast:EnvironmentGeneration",
    "robovast:Postprocessing",
    "robovast:InputArtifact",
    "robovast:Manifest",
    "robovast:EnvironmentArtifact",
    "robovast:ScenarioConfig",
    "robovast:BagFile",
    "robovast:LogFile",
    "robovast:TestReport",
    "robovast:RunMetadata",
    "robovast:CsvFile",
    "robovast:VideoFile",
    "robovast:OtherFile",
];

const INDIVIDUALS: &[&str] = &["unit:M", "unit:SEC", "unit:M-PER-SEC"];

const FUNCTIONAL: &[&str] = &[
    "dcterms:identifier",
    "robovast:success",
    "prov:startedAtTime",
    "prov:endedAtTime",
];

fn property_table() -> Vec<(&'static str, ObjectKind)> {
    use Datatype::*;
    use ObjectKind::*;
    vec![
        ("rdf:type", NodeRef),
        ("prov:used", NodeRef),
        ("prov:wasGeneratedBy", NodeRef),
        ("prov:wasDerivedFrom", NodeRef),
        ("prov:wasAttributedTo", NodeRef),
        ("prov:wasAssociatedWith", NodeRef),
        ("prov:wasInformedBy", NodeRef),
        ("prov:hadMember", NodeRef),
        ("prov:atLocation", NodeRef),
        ("prov:startedAtTime", Literal(DateTime)),
        ("prov:endedAtTime", Literal(DateTime)),
        ("dcat:distribution", NodeRef),
        ("dcat:keyword", Literal(String)),
        ("dcat:byteSize", Literal(Integer)),
        ("dcat:mediaType", Literal(String)),
        ("dcterms:title", Literal(String)),
        ("dcterms:description", Literal(String)),
        ("dcterms:creator", NodeRef),
        ("dcterms:license", Literal(String)),
        ("dcterms:identifier", Literal(String)),
        ("dcterms:issued", Literal(DateTime)),
        ("dcterms:created", Literal(DateTime)),
        ("dcterms:modified", Literal(DateTime)),
        ("dcterms:hasVersion", Literal(String)),
        ("dcterms:references", NodeRef),
        ("qudt:unit", NodeRef),
        ("robovast:success", Literal(Boolean)),
        ("robovast:n_obstacles", Literal(Integer)),
        ("robovast:n_runs", Literal(Integer)),
        ("robovast:robotRadius", Literal(Decimal)),
        ("robovast:pathLength", Literal(Decimal)),
        ("robovast:obstacleDensity", Literal(Decimal)),
        ("robovast:duration", Literal(Decimal)),
        ("robovast:startPose", Literal(String)),
        ("robovast:goalPose", Literal(String)),
        ("robovast:seed", Literal(Integer)),
        ("robovast:relativePath", Literal(String)),
        ("robovast:sha256", Literal(String)),
        ("robovast:plugin", Literal(String)),
        ("robovast:parameter", Literal(String)),
        ("robovast:name", Literal(String)),
        ("robovast:mapLocation", Literal(String)),
        ("robovast:hardware", Literal(String)),
        ("robovast:middlewareDistribution", Literal(String)),
        ("robovast:runtimeEnvironment", Literal(String)),
        ("robovast:middlewareVersion", Literal(String)),
        ("robovast:messageType", Literal(String)),
        ("robovast:messageCount", Literal(Integer)),
        ("robovast:failureMessage", Literal(String)),
        ("robovast:role", Literal(String)),
    ]
}

static STANDARD_CATALOG: LazyLock<TermCatalog> = LazyLock::new(|| {
    let parse = |s: &str| s.parse::<Term>().expect("static term");
    TermCatalog {
        classes: CLASSES.iter().map(|s| parse(s)).collect(),
        properties: property_table()
            .into_iter()
            .map(|(s, kind)| (parse(s), PropertyDef { kind, functional: FUNCTIONAL.contains(&s) }))
            .collect(),
        individuals: INDIVIDUALS.iter().map(|s| parse(s)).collect(),
    }
});

static STANDARD_TABLE: LazyLock<PrefixTable> = LazyLock::new(PrefixTable::standard);

impl TermCatalog {
    pub fn standard() -> &'static TermCatalog {
        &STANDARD_CATALOG
    }

    pub fn classes(&self) -> impl Iterator<Item = &Term> {
        self.classes.iter()
    }

    pub fn properties(&self) -> impl Iterator<Item = (&Term, &PropertyDef)> {
        self.properties.iter()
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Term> {
        self.individuals.iter()
    }

    /// Every term in the catalog.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.classes.iter().chain(self.properties.keys()).chain(self.individuals.iter())
    }

    pub fn has_class(&self, term: &Term) -> bool {
        self.classes.contains(term)
    }

    pub fn property(&self, term: &Term) -> Option<&PropertyDef> {
        self.properties.get(term)
    }

    /// Declared object kind. Unknown terms in the custom namespaces pass
    /// through as `Ok(None)`; anything else unknown is an error.
    pub fn object_kind(&self, property: &Term) -> Result<Option<ObjectKind>, VocabError> {
        match self.properties.get(property) {
            Some(def) => Ok(Some(def.kind)),
            None if property.is_custom() => Ok(None),
            None => Err(VocabError::UnknownProperty(property.to_string())),
        }
    }

    pub fn is_functional(&self, property: &Iri) -> bool {
        match STANDARD_TABLE.compact(property) {
            Compacted::Term(t) => self.properties.get(&t).is_some_and(|d| d.functional),
            Compacted::Iri(_) => false,
        }
    }
}

/// Expands a static `prefix:local` against the standard table. Panics on
/// unknown prefixes, so only use it with literals from this crate.
pub fn iri(curie: &str) -> Iri {
    STANDARD_TABLE
        .expand_curie(curie)
        .unwrap_or_else(|e| panic!("bad static term {curie}: {e}"))
}

/// Expands a term with the standard table.
pub fn expand(term: &Term, table: &PrefixTable) -> Result<Iri, VocabError> {
    table.expand(term)
}

pub fn compact(iri: &Iri, table: &PrefixTable) -> Compacted {
    table.compact(iri)
}

/// Object kind of a catalog property.
pub fn object_kind(property: &Term) -> Result<Option<ObjectKind>, VocabError> {
    TermCatalog::standard().object_kind(property)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        s.parse().unwrap()
    }

    #[test]
    fn expands_builtin_terms() {
        let table = PrefixTable::builtin();
        assert_eq!(
            table.expand(&t("prov:used")).unwrap().as_str(),
            "http://www.w3.org/ns/prov#used"
        );
        assert_eq!(
            table.expand(&t("dcterms:title")).unwrap().as_str(),
            "http://purl.org/dc/terms/title"
        );
        assert_eq!(
            table.expand(&t("xyz:foo")),
            Err(VocabError::UnknownPrefix("xyz".into()))
        );
    }

    #[test]
    fn compacts_to_longest_namespace() {
        let table = PrefixTable::builtin();
        let c = |s: &str| table.compact(&Iri::new(s).unwrap()).to_string();
        assert_eq!(c("http://www.w3.org/ns/prov#Entity"), "prov:Entity");
        assert_eq!(c("https://example.org/unknown#x"), "https://example.org/unknown#x");
        assert_eq!(c("http://purl.org/dc/terms/modified"), "dcterms:modified");
        assert_eq!(c("https://purl.org/robovast/metamodels/smm#ConcreteScenario"), "smm:ConcreteScenario");
        assert_eq!(c("https://purl.org/robovast/metamodels#success"), "robovast:success");
    }

    #[test]
    fn object_kinds() {
        assert_eq!(
            object_kind(&t("robovast:success")).unwrap(),
            Some(ObjectKind::Literal(Datatype::Boolean))
        );
        assert_eq!(object_kind(&t("prov:used")).unwrap(), Some(ObjectKind::NodeRef));
        assert_eq!(
            object_kind(&t("dcterms:modified")).unwrap(),
            Some(ObjectKind::Literal(Datatype::DateTime))
        );
        assert_eq!(object_kind(&t("robovast:somethingNew")).unwrap(), None);
        assert!(matches!(object_kind(&t("prov:nonsense")), Err(VocabError::UnknownProperty(_))));
    }

    #[test]
    fn catalog_round_trips_and_is_total() {
        let table = PrefixTable::standard();
        for term in TermCatalog::standard().terms() {
            let expanded = table.expand(term).expect("catalog term expands");
            assert_eq!(table.compact(&expanded), Compacted::Term(term.clone()), "{term}");
        }
    }

    #[test]
    fn required_terms_present() {
        let cat = TermCatalog::standard();
        for c in [
            "prov:Entity", "prov:Activity", "prov:Agent", "prov:Person", "prov:SoftwareAgent",
            "dcat:Dataset", "dcat:Distribution", "smm:AbstractScenario", "smm:ConcreteScenario",
            "smm:EnvironmentModel", "smm:ScenarioVariation", "robovast:TestExecution", "robovast:Campaign",
        ] {
            assert!(cat.has_class(&t(c)), "{c}");
        }
        for p in [
            "prov:used", "prov:wasGeneratedBy", "prov:wasDerivedFrom", "prov:wasAttributedTo",
            "prov:wasAssociatedWith", "prov:wasInformedBy", "prov:hadMember", "prov:atLocation",
            "prov:startedAtTime", "prov:endedAtTime", "dcat:distribution", "dcat:keyword",
            "dcterms:title", "dcterms:description", "dcterms:creator", "dcterms:license",
            "dcterms:identifier", "dcterms:issued", "dcterms:modified", "dcterms:hasVersion",
            "dcterms:references", "robovast:success", "robovast:n_obstacles", "robovast:n_runs",
            "robovast:robotRadius", "robovast:relativePath", "robovast:plugin", "robovast:parameter",
            "qudt:unit",
        ] {
            assert!(cat.property(&t(p)).is_some(), "{p}");
        }
        assert!(cat.individuals().any(|i| i == &t("unit:M")));
        assert!(cat.individuals().any(|i| i == &t("unit:SEC")));
    }

    #[test]
    fn builtins_always_present() {
        for table in [PrefixTable::builtin(), PrefixTable::standard()] {
            for (prefix, namespace) in BUILTIN_PREFIXES {
                assert_eq!(table.get(prefix).unwrap().as_str(), namespace);
            }
        }
    }

    #[test]
    fn iri_validation() {
        assert!(Iri::new("urn:x").is_ok());
        assert!(Iri::new("https://a/b c").is_err());
        assert!(Iri::new("no-scheme").is_err());
        assert!(Iri::new("_:b0").is_err());
        assert!(Iri::new("1http://x").is_err());
        assert_eq!(Iri::new("https://purl.org/x/y").unwrap().host(), Some("purl.org"));
    }
}
