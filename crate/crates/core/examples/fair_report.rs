//! FAIR compliance of a demo dataset, and how single edits move it.

use std::path::Path;

use fairprov::faircheck::{check, render_report, Principle, ReportFormat};
use fairprov::harness::{self, HarnessConfig};
use fairprov::vocab::iri;
use fairprov::{consolidate, ldgraph::LinkedDocument};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path().join("campaign");
    harness::generate(&HarnessConfig { n_maps: 1, ..HarnessConfig::default() }, &root)?;
    let doc = consolidate::consolidate(&root)?.doc;
    consolidate::write_provenance(&root, &doc)?;

    let report = check(&doc, &root);
    print!("{}", String::from_utf8(render_report(&report, ReportFormat::Text))?);

    let edits: [(&str, fn(&mut LinkedDocument)); 2] = [
        ("drop the license", |d| drop_dataset_field(d, "dcterms:license")),
        ("drop the description", |d| drop_dataset_field(d, "dcterms:description")),
    ];
    for (what, edit) in edits {
        let mut changed = doc.clone();
        edit(&mut changed);
        let after = check(&changed, Path::new(&root));
        let moved: Vec<String> = Principle::ALL
            .iter()
            .filter(|p| after.status(**p) != report.status(**p))
            .map(|p| format!("{p}: {} -> {}", report.status(*p).as_str(), after.status(*p).as_str()))
            .collect();
        println!("\n{what}: {}", moved.join(", "));
    }
    Ok(())
}

fn drop_dataset_field(doc: &mut LinkedDocument, field: &str) {
    let id = doc.base().expect("dataset base").clone();
    doc.node_mut(&id).expect("dataset node").remove_property(&iri(field));
}
