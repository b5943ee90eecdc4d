//! Seeded faults for exercising the validator. Each mutation edits a graph
//! in place and returns the id of the node it broke.

use crate::ldgraph::{LinkedDocument, LiteralValue, NodeObject, Value};
use crate::vocab::{iri as t, Iri};

/// Namespace used for the foreign-id mutation.
pub const FOREIGN_BASE: &str = "https://example.org/elsewhere/";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    DropWasGeneratedBy,
    DropWasAssociatedWith,
    ForeignBaseId,
    DuplicateIdentifier,
    MissingLoadConfig,
    OrphanCsv,
}

impl Mutation {
    pub const ALL: [Mutation; 6] = [
        Mutation::DropWasGeneratedBy,
        Mutation::DropWasAssociatedWith,
        Mutation::ForeignBaseId,
        Mutation::DuplicateIdentifier,
        Mutation::MissingLoadConfig,
        Mutation::OrphanCsv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropWasGeneratedBy => "drop wasGeneratedBy",
            Mutation::DropWasAssociatedWith => "drop wasAssociatedWith",
            Mutation::ForeignBaseId => "foreign-base id",
            Mutation::DuplicateIdentifier => "duplicate identifier",
            Mutation::MissingLoadConfig => "missing load_config",
            Mutation::OrphanCsv => "orphan CSV",
        }
    }

    /// Applies the mutation. `None` if the graph has nothing to mutate.
    pub fn apply(self, doc: &mut LinkedDocument) -> Option<Iri> {
        match self {
            Mutation::DropWasGeneratedBy => drop_edge(doc, "robovast:BagFile", "prov:wasGeneratedBy"),
            Mutation::DropWasAssociatedWith => drop_edge(doc, "robovast:TestExecution", "prov:wasAssociatedWith"),
            Mutation::ForeignBaseId => {
                let from = first_of(doc, "robovast:LogFile")?;
                let local = from.as_str().rsplit('/').next().unwrap_or("node").replace('#', "-");
                let to = Iri::new(format!("{FOREIGN_BASE}{local}")).ok()?;
                rename_node(doc, &from, &to);
                Some(to)
            }
            Mutation::DuplicateIdentifier => {
                let p = t("dcterms:identifier");
                let id = doc.nodes().find(|n| n.values(&p).next().is_some())?.id().clone();
                doc.node_mut(&id)?.add(p, LiteralValue::string("duplicate-identifier"));
                Some(id)
            }
            Mutation::MissingLoadConfig => {
                // references from the runs are left in place
                let id = first_of(doc, "robovast:LoadConfig")?;
                doc.remove_node(&id);
                Some(id)
            }
            Mutation::OrphanCsv => {
                let base = doc.base()?.as_str().trim_end_matches('/').to_string();
                let id = Iri::new(format!("{base}/stray/orphan.csv")).ok()?;
                let loc = Iri::new(format!("{base}/stray/orphan.csv#file")).ok()?;
                doc.entry(loc.clone()).add_type(t("prov:Location"));
                doc.entry(id.clone())
                    .add_type(t("prov:Entity"))
                    .add_type(t("robovast:CsvFile"))
                    .add(t("prov:atLocation"), loc);
                Some(id)
            }
        }
    }
}

fn first_of(doc: &LinkedDocument, class: &str) -> Option<Iri> {
    let ty = t(class);
    let id = doc.nodes_of_type(&ty).next().map(|n| n.id().clone());
    id
}

fn drop_edge(doc: &mut LinkedDocument, class: &str, predicate: &str) -> Option<Iri> {
    let p = t(predicate);
    let ty = t(class);
    let id = doc.nodes_of_type(&ty).find(|n| n.values(&p).next().is_some())?.id().clone();
    doc.node_mut(&id)?.remove_property(&p);
    Some(id)
}

/// Moves a node to a new id and rewrites every reference to it.
pub fn rename_node(doc: &mut LinkedDocument, from: &Iri, to: &Iri) {
    let Some(old) = doc.remove_node(from) else { return };
    let mut renamed = NodeObject::new(to.clone());
    for ty in old.types() {
        renamed.add_type(ty.clone());
    }
    for (p, vals) in old.properties() {
        for v in vals {
            renamed.add(p.clone(), v.clone());
        }
    }
    doc.insert(renamed);
    let ids: Vec<Iri> = doc.nodes().map(|n| n.id().clone()).collect();
    let old_ref = Value::Node(from.clone());
    for id in ids {
        let node = doc.node_mut(&id).expect("listed above");
        let preds: Vec<Iri> =
            node.properties().iter().filter(|(_, vals)| vals.contains(&old_ref)).map(|(p, _)| p.clone()).collect();
        for p in preds {
            node.remove_value(&p, &old_ref);
            node.add(p, to.clone());
        }
    }
}
