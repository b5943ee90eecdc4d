//! Consolidates a generated campaign into one provenance graph, validates it
//! and shows what a broken graph looks like.

use fairprov::consolidate::{self, mutations::Mutation, validate_graph};
use fairprov::harness::{self, HarnessConfig};
use fairprov::ldgraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path().join("campaign");
    let cfg = HarnessConfig { n_maps: 1, paths_per_map: 3, ..HarnessConfig::default() };
    harness::generate(&cfg, &root)?;

    let c = consolidate::consolidate(&root)?;
    let path = consolidate::write_provenance(&root, &c.doc)?;
    let report = validate_graph(&c.doc);
    print!("{}", report.to_text());
    println!("clean: {}  ({} bytes at {})", report.is_clean(), std::fs::metadata(&path)?.len(), path.display());

    let back = consolidate::read_provenance(&path)?;
    println!("round trip keeps every triple: {}", ldgraph::to_triples(&back) == ldgraph::to_triples(&c.doc));

    for m in Mutation::ALL {
        let mut doc = c.doc.clone();
        let Some(target) = m.apply(&mut doc) else { continue };
        let found: Vec<_> = validate_graph(&doc).violations.into_iter().filter(|v| v.mentions(&target)).collect();
        println!("\n{} on {target}: {} violation(s)", m.name(), found.len());
        for v in found.iter().take(3) {
            println!("  {v}");
        }
    }
    Ok(())
}
