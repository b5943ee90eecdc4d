//! Runs the bundled queries: failure rate per concrete scenario, and the
//! input files needed to replay every obstacle-free scenario.

use fairprov::consolidate;
use fairprov::harness::{self, HarnessConfig};
use fairprov::queryengine::{cookbook, run_query, OutputFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path().join("campaign");
    harness::generate(&HarnessConfig::default(), &root)?;
    let doc = consolidate::consolidate(&root)?.doc;

    let rates = run_query(&doc, cookbook("failure_rate").expect("bundled"))?;
    let rate = rates.column("rate").expect("projected");
    let mut worst: Vec<_> = rates.rows.iter().filter(|r| r[rate].as_ref().is_some_and(|v| v.to_string() != "0.0")).collect();
    worst.sort_by(|a, b| {
        let f = |r: &&Vec<Option<fairprov::ldgraph::Value>>| r[rate].as_ref().unwrap().to_string().parse::<f64>().unwrap();
        f(b).total_cmp(&f(a))
    });
    println!("{} scenarios, {} with failures; worst five:", rates.len(), worst.len());
    for r in worst.iter().take(5) {
        println!("  {}  {}%  of {}", r[0].as_ref().unwrap(), r[1].as_ref().unwrap(), r[2].as_ref().unwrap());
    }

    let closure = run_query(&doc, cookbook("input_closure_joined").expect("bundled"))?;
    println!("\ninput files of the first obstacle-free scenario:");
    if let Some(files) = closure.get(0, "fs") {
        for f in files.to_string().split(',') {
            println!("  {f}");
        }
    }

    let ad_hoc = "SELECT ?kind (COUNT(?e) AS ?n) WHERE { ?e rdf:type prov:Entity . ?e rdf:type ?kind . } GROUP BY ?kind";
    println!("\n{}", run_query(&doc, ad_hoc)?.render(OutputFormat::Table));
    Ok(())
}
