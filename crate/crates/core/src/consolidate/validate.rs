//! Structural and provenance checks over a consolidated graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{stats, GraphReport};
use crate::ldgraph::{LinkedDocument, NodeObject, Value};
use crate::vocab::{iri as t, Compacted, Datatype, Iri, ObjectKind, PrefixTable, TermCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    /// Missing or broken provenance edges, ungrounded entities.
    Provenance,
    /// Missing descriptive fields on the dataset (title, license, creators).
    Metadata,
    /// References to nodes that do not exist.
    Reference,
    /// Wrong node types, value kinds, repeated functional values.
    Type,
    /// Identifiers outside the allowed namespaces.
    Residency,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Provenance => "provenance",
            Category::Metadata => "metadata",
            Category::Reference => "reference",
            Category::Type => "type",
            Category::Residency => "residency",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub category: Category,
    pub rule: String,
    pub node: Iri,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicate: Option<Iri>,
    /// The other end of the offending edge, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub related: Option<Iri>,
    pub message: String,
}

impl Violation {
    /// Whether the violation names `iri` as its node or the other end.
    pub fn mentions(&self, iri: &Iri) -> bool {
        &self.node == iri || self.related.as_ref() == Some(iri)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} {}: {}", self.category, self.rule, self.node, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Multiplicity {
    ExactlyOne,
    AtLeastOne,
    Any,
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplicity::ExactlyOne => "1",
            Multiplicity::AtLeastOne => "1..*",
            Multiplicity::Any => "0..*",
        })
    }
}

/// Nodes of class `source` (and not of class `unless`) need `multiplicity`
/// values of `predicate`; with a `target` class only values of that class
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRule {
    pub source: &'static str,
    pub unless: Option<&'static str>,
    pub predicate: &'static str,
    pub target: Option<&'static str>,
    pub multiplicity: Multiplicity,
}

impl EdgeRule {
    pub fn name(&self) -> String {
        format!("{} {} {}", self.source, self.predicate, self.target.unwrap_or("value"))
    }

    /// Descriptive dataset fields are metadata; every other edge is provenance.
    pub fn category(&self) -> Category {
        if self.source == "dcat:Dataset" && self.predicate.starts_with("dcterms:") {
            Category::Metadata
        } else {
            Category::Provenance
        }
    }
}

const fn rule(source: &'static str, predicate: &'static str, target: Option<&'static str>, multiplicity: Multiplicity) -> EdgeRule {
    EdgeRule { source, unless: None, predicate, target, multiplicity }
}

const FILE_CLASSES: [&str; 10] = [
    "robovast:InputArtifact",
    "robovast:EnvironmentArtifact",
    "robovast:ScenarioConfig",
    "robovast:RobotConfiguration",
    "robovast:BagFile",
    "robovast:LogFile",
    "robovast:TestReport",
    "robovast:RunMetadata",
    "robovast:CsvFile",
    "robovast:VideoFile",
];

/// The mandatory edges of the campaign metamodel.
pub fn edge_rules() -> Vec<EdgeRule> {
    use Multiplicity::*;
    let mut rules = vec![
        rule("dcat:Dataset", "dcterms:title", None, ExactlyOne),
        rule("dcat:Dataset", "dcterms:license", None, ExactlyOne),
        rule("dcat:Dataset", "dcterms:creator", Some("prov:Agent"), AtLeastOne),
        rule("dcat:Dataset", "prov:hadMember", Some("prov:Collection"), AtLeastOne),
        rule("smm:EnvironmentModel", "prov:wasAttributedTo", Some("prov:Agent"), AtLeastOne),
        rule("smm:ScenarioVariation", "dcterms:references", Some("prov:Entity"), AtLeastOne),
        rule("robovast:ScenarioGeneration", "prov:used", Some("robovast:InputArtifact"), AtLeastOne),
        rule("robovast:ScenarioGeneration", "prov:wasAssociatedWith", Some("prov:Agent"), AtLeastOne),
        rule("robovast:EnvironmentGeneration", "prov:wasInformedBy", Some("robovast:ScenarioGeneration"), ExactlyOne),
        rule("robovast:EnvironmentGeneration", "prov:wasAssociatedWith", Some("prov:Agent"), AtLeastOne),
        rule("robovast:EnvironmentArtifact", "prov:wasGeneratedBy", Some("robovast:EnvironmentGeneration"), ExactlyOne),
        rule("robovast:EnvironmentArtifact", "prov:wasDerivedFrom", Some("smm:EnvironmentModel"), AtLeastOne),
        rule("smm:ConcreteScenario", "prov:wasGeneratedBy", Some("robovast:ScenarioGeneration"), ExactlyOne),
        rule("smm:ConcreteScenario", "prov:atLocation", Some("prov:Location"), AtLeastOne),
        rule("robovast:ScenarioConfig", "prov:wasGeneratedBy", Some("robovast:ScenarioGeneration"), ExactlyOne),
        rule("robovast:Configuration", "prov:hadMember", Some("prov:Entity"), AtLeastOne),
        EdgeRule {
            source: "robovast:RobotConfiguration",
            unless: Some("robovast:InputArtifact"),
            predicate: "prov:wasDerivedFrom",
            target: Some("robovast:RobotConfiguration"),
            multiplicity: AtLeastOne,
        },
        EdgeRule {
            source: "robovast:RobotConfiguration",
            unless: Some("robovast:InputArtifact"),
            predicate: "dcterms:hasVersion",
            target: None,
            multiplicity: ExactlyOne,
        },
        EdgeRule {
            source: "robovast:RobotConfiguration",
            unless: Some("robovast:InputArtifact"),
            predicate: "dcterms:modified",
            target: None,
            multiplicity: ExactlyOne,
        },
        rule("robovast:Postprocessing", "robovast:parameter", None, Any),
        rule("robovast:LoadConfig", "prov:used", Some("robovast:RobotConfiguration"), AtLeastOne),
        rule("robovast:LoadConfig", "prov:wasAssociatedWith", Some("prov:Agent"), AtLeastOne),
        rule("robovast:TestExecution", "prov:used", Some("smm:ConcreteScenario"), ExactlyOne),
        rule("robovast:TestExecution", "prov:wasAssociatedWith", Some("prov:Agent"), AtLeastOne),
        rule("robovast:TestExecution", "prov:startedAtTime", None, ExactlyOne),
        rule("robovast:TestExecution", "prov:endedAtTime", None, ExactlyOne),
        rule("robovast:TestExecution", "robovast:success", None, ExactlyOne),
        rule("robovast:Postprocessing", "prov:used", Some("robovast:BagFile"), AtLeastOne),
        rule("robovast:Postprocessing", "prov:wasInformedBy", Some("robovast:TestExecution"), ExactlyOne),
        rule("robovast:Postprocessing", "prov:wasAssociatedWith", Some("prov:Agent"), AtLeastOne),
        rule("robovast:Postprocessing", "robovast:plugin", None, ExactlyOne),
        rule("robovast:CsvFile", "prov:wasGeneratedBy", Some("prov:Activity"), ExactlyOne),
        rule("robovast:CsvFile", "prov:wasDerivedFrom", Some("prov:Entity"), AtLeastOne),
        rule("robovast:VideoFile", "prov:wasGeneratedBy", Some("prov:Activity"), ExactlyOne),
        rule("robovast:VideoFile", "prov:wasDerivedFrom", Some("prov:Entity"), AtLeastOne),
        rule("robovast:OtherFile", "prov:wasGeneratedBy", Some("prov:Activity"), ExactlyOne),
    ];
    for class in ["robovast:BagFile", "robovast:LogFile", "robovast:TestReport", "robovast:RunMetadata"] {
        rules.push(rule(class, "prov:wasGeneratedBy", Some("robovast:TestExecution"), ExactlyOne));
    }
    for class in FILE_CLASSES.iter().chain(&["robovast:OtherFile"]) {
        rules.push(rule(class, "prov:atLocation", Some("prov:Location"), ExactlyOne));
    }
    rules
}

/// Pre-expanded rule with the IRIs resolved once.
struct Compiled {
    name: String,
    category: Category,
    source: Iri,
    unless: Option<Iri>,
    predicate: Iri,
    target: Option<Iri>,
    multiplicity: Multiplicity,
}

fn compile(rules: &[EdgeRule]) -> Vec<Compiled> {
    rules
        .iter()
        .map(|r| Compiled {
            name: r.name(),
            category: r.category(),
            source: t(r.source),
            unless: r.unless.map(t),
            predicate: t(r.predicate),
            target: r.target.map(t),
            multiplicity: r.multiplicity,
        })
        .collect()
}

fn check_rules(doc: &LinkedDocument, rules: &[Compiled], out: &mut Vec<Violation>) {
    let has = |id: &Iri, ty: &Iri| doc.node(id).is_some_and(|n| n.has_type(ty));
    for node in doc.nodes() {
        for r in rules {
            if !node.has_type(&r.source) || r.unless.as_ref().is_some_and(|u| node.has_type(u)) {
                continue;
            }
            let n = node
                .values(&r.predicate)
                .filter(|v| match (&r.target, v) {
                    (None, _) => true,
                    (Some(ty), Value::Node(target)) => has(target, ty),
                    (Some(_), Value::Literal(_)) => false,
                })
                .count();
            let ok = match r.multiplicity {
                Multiplicity::ExactlyOne => n == 1,
                Multiplicity::AtLeastOne => n >= 1,
                Multiplicity::Any => true,
            };
            if !ok {
                let what = r.target.as_ref().map(|ty| format!(" to a {ty}")).unwrap_or_default();
                out.push(Violation {
                    category: r.category,
                    rule: r.name.clone(),
                    node: node.id().clone(),
                    predicate: Some(r.predicate.clone()),
                    related: None,
                    message: format!("has {n} {}{what} edge(s), expected {}", r.predicate, r.multiplicity),
                });
            }
        }
    }
}

/// Edge-rule violations only; used while building a graph.
pub(super) fn mandatory_edges(doc: &LinkedDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    check_rules(doc, &compile(&edge_rules()), &mut out);
    out.sort();
    out
}

fn node_refs<'a>(node: &'a NodeObject, p: &Iri) -> impl Iterator<Item = &'a Iri> + 'a {
    node.node_refs(p)
}

/// Every run that used a derived robot configuration must be informed by a
/// load_config activity using that same configuration, and each such
/// configuration has exactly one load_config.
fn check_load_config(doc: &LinkedDocument, out: &mut Vec<Violation>) {
    let (used, informed, robot_cfg, load_ty, exec_ty, input_ty) = (
        t("prov:used"),
        t("prov:wasInformedBy"),
        t("robovast:RobotConfiguration"),
        t("robovast:LoadConfig"),
        t("robovast:TestExecution"),
        t("robovast:InputArtifact"),
    );
    let mut loads_of: HashMap<&Iri, Vec<&Iri>> = HashMap::new();
    for l in doc.nodes_of_type(&load_ty) {
        for c in node_refs(l, &used) {
            loads_of.entry(c).or_default().push(l.id());
        }
    }
    let derived = |id: &Iri| doc.node(id).is_some_and(|n| n.has_type(&robot_cfg) && !n.has_type(&input_ty));
    for cfg in doc.nodes_of_type(&robot_cfg).filter(|n| !n.has_type(&input_ty)) {
        let n = loads_of.get(cfg.id()).map_or(0, Vec::len);
        if n != 1 {
            out.push(Violation {
                category: Category::Provenance,
                rule: "load_config pairing".into(),
                node: cfg.id().clone(),
                predicate: None,
                related: None,
                message: format!("used by {n} load_config activities, expected 1"),
            });
        }
    }
    for run in doc.nodes_of_type(&exec_ty) {
        for cfg in node_refs(run, &used).filter(|c| derived(c)) {
            let loads = loads_of.get(cfg).map(Vec::as_slice).unwrap_or(&[]);
            if !node_refs(run, &informed).any(|a| loads.contains(&a)) {
                out.push(Violation {
                    category: Category::Provenance,
                    rule: "run informed by load_config".into(),
                    node: run.id().clone(),
                    predicate: Some(informed.clone()),
                    related: Some(cfg.clone()),
                    message: format!("uses {cfg} but is not informed by a load_config that used it"),
                });
            }
        }
    }
}

/// Least fixpoint: roots are grounded; an entity is grounded when derived
/// from a grounded entity or generated by a grounded activity; an activity
/// is grounded when it used a grounded entity or was informed by a grounded
/// activity; a collection is grounded when all of its (≥1) members are.
fn check_grounding(doc: &LinkedDocument, out: &mut Vec<Violation>) {
    let (entity, activity, collection, root) =
        (t("prov:Entity"), t("prov:Activity"), t("prov:Collection"), t("robovast:InputArtifact"));
    let (derived, generated, used, informed, member) = (
        t("prov:wasDerivedFrom"),
        t("prov:wasGeneratedBy"),
        t("prov:used"),
        t("prov:wasInformedBy"),
        t("prov:hadMember"),
    );
    let mut grounded: HashSet<&Iri> = doc.nodes().filter(|n| n.has_type(&root)).map(|n| n.id()).collect();
    let entities: Vec<&NodeObject> = doc.nodes().filter(|n| n.has_type(&entity) && !n.has_type(&root)).collect();
    let activities: Vec<&NodeObject> = doc.nodes().filter(|n| n.has_type(&activity)).collect();
    loop {
        let before = grounded.len();
        for a in &activities {
            if !grounded.contains(a.id())
                && (node_refs(a, &used).any(|e| grounded.contains(e)) || node_refs(a, &informed).any(|x| grounded.contains(x)))
            {
                grounded.insert(a.id());
            }
        }
        for e in &entities {
            if grounded.contains(e.id()) {
                continue;
            }
            let via_chain = node_refs(e, &derived).chain(node_refs(e, &generated)).any(|x| grounded.contains(x));
            let via_members = e.has_type(&collection) && {
                let mut members = node_refs(e, &member).peekable();
                members.peek().is_some() && members.all(|m| grounded.contains(m))
            };
            if via_chain || via_members {
                grounded.insert(e.id());
            }
        }
        if grounded.len() == before {
            break;
        }
    }
    for e in entities.iter().filter(|e| !grounded.contains(e.id())) {
        out.push(Violation {
            category: Category::Provenance,
            rule: "grounding".into(),
            node: e.id().clone(),
            predicate: None,
            related: None,
            message: "no wasGeneratedBy/wasDerivedFrom chain reaches a root input".into(),
        });
    }
}

/// Hosts accepted as persistent identifiers for software agents.
pub const PURL_HOSTS: [&str; 2] = ["purl.org", "w3id.org"];

fn vocabulary_namespaces(doc: &LinkedDocument) -> Vec<String> {
    let mut v: Vec<String> = PrefixTable::standard().iter().map(|(_, ns)| ns.to_string()).collect();
    v.extend(doc.context().iter().map(|(_, ns)| ns.to_string()));
    v.sort();
    v.dedup();
    v
}

fn check_residency(doc: &LinkedDocument, out: &mut Vec<Violation>) {
    let vocab = vocabulary_namespaces(doc);
    let software = t("prov:SoftwareAgent");
    let allowed = |iri: &Iri| {
        doc.is_internal(iri)
            || iri.as_str().starts_with("https://orcid.org/")
            || vocab.iter().any(|ns| iri.as_str().starts_with(ns.as_str()) && iri.as_str().len() > ns.len())
            || (doc.node(iri).is_some_and(|n| n.has_type(&software))
                && iri.scheme() == "https"
                && iri.host().is_some_and(|h| PURL_HOSTS.contains(&h)))
    };
    let mut seen = BTreeSet::new();
    for node in doc.nodes() {
        if !allowed(node.id()) {
            seen.insert((node.id().clone(), None));
        }
        for vals in node.properties().values() {
            for v in vals {
                if let Value::Node(o) = v {
                    if !allowed(o) && doc.node(o).is_none() {
                        seen.insert((o.clone(), Some(node.id().clone())));
                    }
                }
            }
        }
    }
    for (node, related) in seen {
        out.push(Violation {
            category: Category::Residency,
            rule: "residency".into(),
            message: "identifier is outside the dataset base, ORCID, vocabularies and agent PURLs".into(),
            node,
            predicate: None,
            related,
        });
    }
}

fn check_references(doc: &LinkedDocument, out: &mut Vec<Violation>) {
    for (subject, predicate, target) in doc.dangling_references() {
        out.push(Violation {
            category: Category::Reference,
            rule: "dangling reference".into(),
            message: format!("referenced by {subject} via {predicate} but not described"),
            node: target,
            predicate: Some(predicate),
            related: Some(subject),
        });
    }
}

fn kind_matches(kind: ObjectKind, v: &Value) -> bool {
    match (kind, v) {
        (ObjectKind::NodeRef, Value::Node(_)) => true,
        (ObjectKind::Literal(Datatype::Decimal), Value::Literal(l)) => {
            matches!(l.datatype(), Datatype::Decimal | Datatype::Integer)
        }
        (ObjectKind::Literal(d), Value::Literal(l)) => l.datatype() == d,
        _ => false,
    }
}

/// Predicate and class vocabulary, value kinds, functional properties and
/// PROV domain/range discipline.
fn check_types(doc: &LinkedDocument, out: &mut Vec<Violation>) {
    let catalog = TermCatalog::standard();
    let table = PrefixTable::standard();
    let mut kinds: BTreeMap<&Iri, Result<Option<ObjectKind>, String>> = BTreeMap::new();
    let activity = t("prov:Activity");
    let entity = t("prov:Entity");
    let agent = t("prov:Agent");
    let domain: [(Iri, &Iri, Option<&Iri>); 6] = [
        (t("prov:used"), &activity, Some(&entity)),
        (t("prov:wasGeneratedBy"), &entity, Some(&activity)),
        (t("prov:wasAssociatedWith"), &activity, Some(&agent)),
        (t("prov:wasInformedBy"), &activity, Some(&activity)),
        (t("prov:wasDerivedFrom"), &entity, Some(&entity)),
        (t("prov:startedAtTime"), &activity, None),
    ];
    let has = |id: &Iri, ty: &Iri| doc.node(id).is_some_and(|n| n.has_type(ty));
    let mut push = |node: &Iri, predicate: Option<&Iri>, related: Option<&Iri>, rule: &str, message: String| {
        out.push(Violation {
            category: Category::Type,
            rule: rule.into(),
            node: node.clone(),
            predicate: predicate.cloned(),
            related: related.cloned(),
            message,
        })
    };
    for node in doc.nodes() {
        for ty in node.types() {
            if let Compacted::Term(term) = table.compact(ty) {
                if !catalog.has_class(&term) && !term.is_custom() {
                    push(node.id(), None, None, "known class", format!("class {term} is not in the vocabulary"));
                }
            }
        }
        for (p, vals) in node.properties() {
            let kind = kinds.entry(p).or_insert_with(|| match table.compact(p) {
                Compacted::Term(term) => catalog.object_kind(&term).map_err(|e| e.to_string()),
                Compacted::Iri(iri) => Err(format!("predicate {iri} is in no known vocabulary")),
            });
            match kind {
                Err(msg) => push(node.id(), Some(p), None, "known predicate", msg.clone()),
                Ok(Some(k)) => {
                    if let Some(bad) = vals.iter().find(|v| !kind_matches(*k, v)) {
                        push(node.id(), Some(p), None, "value kind", format!("{p} value {bad} has the wrong kind"));
                    }
                }
                Ok(None) => {}
            }
            if vals.len() > 1 && catalog.is_functional(p) {
                push(node.id(), Some(p), None, "functional", format!("{} values for functional {p}", vals.len()));
            }
        }
        for (p, subject_ty, object_ty) in &domain {
            let mut values = node.values(p).peekable();
            if values.peek().is_none() {
                continue;
            }
            if !node.has_type(subject_ty) {
                push(node.id(), Some(p), None, "domain", format!("subject of {p} is not a {subject_ty}"));
            }
            if let Some(ot) = object_ty {
                for v in values {
                    if let Value::Node(o) = v {
                        if doc.node(o).is_some() && !has(o, ot) {
                            push(node.id(), Some(p), Some(o), "range", format!("object {o} of {p} is not a {ot}"));
                        }
                    }
                }
            }
        }
    }
}

/// Edge rules, load_config pairing, grounding, residency, dangling
/// references and type discipline. Violations are sorted.
pub fn validate_graph(doc: &LinkedDocument) -> GraphReport {
    let mut report = stats(doc);
    let mut v = Vec::new();
    check_rules(doc, &compile(&edge_rules()), &mut v);
    check_load_config(doc, &mut v);
    check_grounding(doc, &mut v);
    check_residency(doc, &mut v);
    check_references(doc, &mut v);
    check_types(doc, &mut v);
    v.sort();
    v.dedup();
    report.violations = v;
    report
}
