//! Registers an extra collector next to the built-in ones. Here it gives
//! every run a human-readable description.

use fairprov::capture::collectors::builtin_registry;
use fairprov::capture::{CollectContext, CollectorPlugin, Level, PluginError, Scope};
use fairprov::consolidate::{consolidate_with, validate_graph};
use fairprov::harness::{self, HarnessConfig};
use fairprov::identity;
use fairprov::ldgraph::{LinkedDocument, LiteralValue};
use fairprov::queryengine::{run_query, OutputFormat};
use fairprov::vocab::iri;

struct RunSummary;

impl CollectorPlugin for RunSummary {
    fn name(&self) -> &str {
        "run-summary"
    }

    fn level(&self) -> Level {
        Level::Run
    }

    fn collect(&self, ctx: &CollectContext<'_>, scope: &Scope<'_>) -> Result<LinkedDocument, PluginError> {
        let Scope::Run(run) = scope else { return Ok(LinkedDocument::default()) };
        let verdict = if run.success() { "reached its goal" } else { "failed" };
        let text = format!("run {} {verdict} after {} s", run.run_dir, run.report.duration);
        let mut doc = LinkedDocument::with_base(ctx.base().iri());
        doc.entry(identity::run_identifier(ctx.base(), &run.run_dir)).add(iri("dcterms:description"), LiteralValue::string(text));
        Ok(doc)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path().join("campaign");
    harness::generate(&HarnessConfig { n_maps: 1, paths_per_map: 1, ..HarnessConfig::default() }, &root)?;

    let registry = builtin_registry().with(RunSummary)?;
    println!("collectors: {}", registry.names().join(", "));
    let c = consolidate_with(&root, &registry)?;
    println!("violations: {}", validate_graph(&c.doc).violations.len());

    let q = "SELECT ?run ?d WHERE { ?run rdf:type robovast:TestExecution . ?run dcterms:description ?d . }";
    print!("{}", run_query(&c.doc, q)?.render(OutputFormat::Table));
    Ok(())
}
