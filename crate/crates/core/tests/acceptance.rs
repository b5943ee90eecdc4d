//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use common::{configs_on_disk, generate, random_document, run_inputs, scenario_iri, scenario_tallies, tree_bytes, ConfigOnDisk, Tree};
use fairprov::consolidate::{self, mutations::{self, Mutation}, validate_graph};
use fairprov::faircheck::{self, Principle, Status};
use fairprov::harness::{self, HarnessConfig, DEFAULT_DATASET_IRI};
use fairprov::ldgraph::{self, to_triples, LinkedDocument, LiteralValue, Value};
use fairprov::publish::package::package;
use fairprov::publish::{self, DepositClient, DepositMetadata, DepositSession, DepositState, DistributionSpec, MockBehavior, MockServer, PublishError};
use fairprov::queryengine::{self, cookbook, eval_path, parse_query, run_query, Graph, PathExpr, QueryError, SolutionTable};
use fairprov::vocab::{iri as t, Iri};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TIME_BUDGET: Duration = Duration::from_secs(120);

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// A generated, consolidated campaign and both bundled query results.
struct Campaign {
    tree: Tree,
    doc: LinkedDocument,
    configs: Vec<ConfigOnDisk>,
    rates: SolutionTable,
    closure: SolutionTable,
    elapsed: Duration,
}

fn build(cfg: &HarnessConfig) -> Campaign {
    let start = Instant::now();
    let tree = generate(cfg);
    let c = consolidate::consolidate(&tree.root()).unwrap();
    consolidate::write_provenance(&tree.root(), &c.doc).unwrap();
    let rates = run_query(&c.doc, cookbook("failure_rate").unwrap()).unwrap();
    let closure = run_query(&c.doc, cookbook("input_closure").unwrap()).unwrap();
    let elapsed = start.elapsed();
    let configs = configs_on_disk(&tree.root());
    Campaign { tree, doc: c.doc, configs, rates, closure, elapsed }
}

fn c1_campaign_shape(full: &Campaign) -> Outcome {
    let s = &full.tree.summary;
    ensure!(s.n_configs == 400 && s.n_runs == 4000, "{} configurations, {} runs", s.n_configs, s.n_runs);
    ensure!(full.configs.len() == 400, "{} configuration directories", full.configs.len());
    let runs: usize = full.configs.iter().map(|c| c.failed.len()).sum();
    let failed: usize = full.configs.iter().map(|c| c.failed.iter().filter(|f| **f).count()).sum();
    ensure!(runs == 4000 && failed == 290 && s.n_failed == 290, "{runs} runs with {failed} failures on disk, summary {}", s.n_failed);
    // The spawn block is told apart by its failure message: one config of
    // each 19/20 collision pair also fails all of its runs.
    let always: Vec<&ConfigOnDisk> =
        full.configs.iter().filter(|c| c.spawn_failures > 0 && c.failed.iter().all(|f| *f)).collect();
    let stray = full.configs.iter().filter(|c| c.spawn_failures > 0 && !c.failed.iter().all(|f| *f)).count();
    ensure!(stray == 0, "{stray} configurations with partial spawn failures");
    let block: usize = always.iter().map(|c| c.failed.len()).sum();
    ensure!(always.len() == 8 && block == 80, "{} always-failing configurations with {block} failures", always.len());
    let nineteen: Vec<String> =
        scenario_tallies(&full.configs).into_iter().filter(|(_, tally)| *tally == (19, 20)).map(|(s, _)| s).collect();
    ensure!(nineteen.len() == 2, "{} scenarios fail 19 of 20", nineteen.len());
    ensure!(full.elapsed < TIME_BUDGET, "pipeline took {:.1?}", full.elapsed);
    Ok(format!("400 configs, 4000 runs, 290 failures (80 always-fail, 2x 19/20); pipeline {:.1?}", full.elapsed))
}

fn check_rates(c: &Campaign) -> Result<usize, String> {
    let base = DEFAULT_DATASET_IRI;
    let expected: BTreeMap<String, (u64, u64)> =
        scenario_tallies(&c.configs).into_iter().map(|(s, tally)| (scenario_iri(base, &s), tally)).collect();
    let mut seen = BTreeSet::new();
    for i in 0..c.rates.len() {
        let conf = c.rates.get(i, "conf").ok_or("unbound ?conf")?.to_string();
        let rate = c.rates.get(i, "rate").ok_or("unbound ?rate")?;
        let total = c.rates.get(i, "total").ok_or("unbound ?total")?;
        let &(fails, runs) = expected.get(&conf).ok_or_else(|| format!("unexpected scenario {conf}"))?;
        let Value::Literal(rate) = rate else { return Err(format!("{conf}: rate is a node")) };
        let got: f64 = rate.lexical().parse().map_err(|_| format!("{conf}: rate {rate}"))?;
        let exact = fails as f64 * 100.0 / runs as f64;
        ensure!((got - exact).abs() <= 1e-9, "{conf}: rate {got} vs {fails}*100/{runs}");
        ensure!(total.to_string() == runs.to_string(), "{conf}: total {total} vs {runs}");
        seen.insert(conf);
    }
    ensure!(seen.len() == expected.len(), "{} of {} scenarios reported", seen.len(), expected.len());
    for (conf, (fails, runs)) in &expected {
        if (*fails, *runs) == (19, 20) {
            let row = (0..c.rates.len()).find(|i| c.rates.get(*i, "conf").map(|v| v.to_string()).as_deref() == Some(conf.as_str()));
            let rate = row.and_then(|i| c.rates.get(i, "rate")).map(|v| v.to_string());
            ensure!(rate.as_deref() == Some("95.0"), "{conf} reports {rate:?}");
        }
    }
    Ok(expected.len())
}

fn c2_failure_rates(default: &Campaign, full: &Campaign) -> Outcome {
    let a = check_rates(default)?;
    let b = check_rates(full)?;
    Ok(format!("{a} + {b} scenarios match test.xml tallies exactly"))
}

fn closure_sets(table: &SolutionTable) -> BTreeMap<String, BTreeSet<String>> {
    (0..table.len())
        .map(|i| {
            let fs = table.get(i, "fs").map(|v| v.to_string()).unwrap_or_default();
            (table.get(i, "conf").unwrap().to_string(), fs.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect())
        })
        .collect()
}

fn c3_input_closure(full: &Campaign) -> Outcome {
    let doc = &full.doc;
    let free: BTreeSet<String> = full
        .configs
        .iter()
        .filter(|c| c.n_obstacles == 0)
        .map(|c| scenario_iri(DEFAULT_DATASET_IRI, &c.scenario))
        .collect();
    let exec = t("robovast:TestExecution");
    let used = t("prov:used");
    let runs: Vec<&ldgraph::NodeObject> = doc.nodes_of_type(&exec).collect();
    let as_strings = |s: BTreeSet<Iri>| s.into_iter().map(|i| i.to_string()).collect::<BTreeSet<String>>();

    // As written, the query does not join runs to the scenario, so each
    // scenario lists the inputs of every run.
    let all_runs: Vec<Iri> = runs.iter().map(|r| r.id().clone()).collect();
    let every_input = as_strings(run_inputs(doc, &all_runs));
    let verbatim = closure_sets(&full.closure);
    ensure!(verbatim.keys().cloned().collect::<BTreeSet<_>>() == free, "verbatim: {} scenarios vs {} obstacle-free", verbatim.len(), free.len());
    let bad = verbatim.values().filter(|fs| **fs != every_input).count();
    ensure!(bad == 0, "verbatim: {bad} scenario closures differ from BFS");

    let joined = closure_sets(&run_query(doc, cookbook("input_closure_joined").unwrap()).map_err(|e| e.to_string())?);
    ensure!(joined.keys().cloned().collect::<BTreeSet<_>>() == free, "joined: {} scenarios vs {} obstacle-free", joined.len(), free.len());
    let mut mismatches = 0;
    for s in &free {
        let scen = Iri::new(s.as_str()).unwrap();
        let mine: Vec<Iri> = runs.iter().filter(|r| r.node_refs(&used).any(|u| *u == scen)).map(|r| r.id().clone()).collect();
        if joined[s] != as_strings(run_inputs(doc, &mine)) {
            mismatches += 1;
        }
    }
    ensure!(mismatches == 0, "joined: {mismatches} scenario closures differ from BFS");
    Ok(format!("{} obstacle-free scenarios, verbatim and joined forms both equal BFS", free.len()))
}

fn c4_determinism() -> Outcome {
    let run = || {
        let tree = generate(&HarnessConfig::default());
        let c = consolidate::consolidate(&tree.root()).unwrap();
        consolidate::write_provenance(&tree.root(), &c.doc).unwrap();
        (tree_bytes(&tree.root()), tree)
    };
    let (a, _ta) = run();
    let (b, _tb) = run();
    ensure!(a.keys().eq(b.keys()), "file lists differ");
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k).collect();
    ensure!(differing.is_empty(), "{} files differ, first {}", differing.len(), differing[0]);
    ensure!(a.contains_key("provenance.jsonld"), "no provenance.jsonld");
    Ok(format!("{} files byte-identical including provenance.jsonld", a.len()))
}

fn c5_round_trip(default: &Campaign) -> Outcome {
    let back = ldgraph::parse(&ldgraph::serialize(&default.doc)).map_err(|e| e.to_string())?;
    ensure!(to_triples(&back) == to_triples(&default.doc), "demo graph changed in round trip");
    for seed in 0..100 {
        let doc = random_document(seed);
        let back = ldgraph::parse(&ldgraph::serialize(&doc)).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(to_triples(&back) == to_triples(&doc), "seed {seed}: triples differ");
    }
    Ok(format!("demo graph ({} triples) and 100 random documents", default.doc.triple_count()))
}

fn c6_graph_structure(default: &Campaign) -> Outcome {
    let clean = validate_graph(&default.doc);
    ensure!(clean.is_clean(), "demo graph: {}", clean.violations[0]);
    let mut detail = Vec::new();
    for m in Mutation::ALL {
        let mut doc = default.doc.clone();
        let target = m.apply(&mut doc).ok_or_else(|| format!("{} found nothing to mutate", m.name()))?;
        let n = validate_graph(&doc).violations.iter().filter(|v| v.mentions(&target)).count();
        ensure!(n >= 1, "{} on {target}: no violation names it", m.name());
        detail.push(format!("{}:{n}", m.name()));
    }
    Ok(format!("demo clean; {}", detail.join(", ")))
}

fn flips(doc: &LinkedDocument, dir: &Path, edit: impl FnOnce(&mut LinkedDocument)) -> Vec<Principle> {
    let before = faircheck::check(doc, dir);
    let mut d = doc.clone();
    edit(&mut d);
    let after = faircheck::check(&d, dir);
    Principle::ALL.into_iter().filter(|p| before.status(*p) != after.status(*p)).collect()
}

fn c7_fair_report(default: &Campaign) -> Outcome {
    let dir = default.tree.root();
    let doc = &default.doc;
    let r = faircheck::check(doc, &dir);
    for p in [Principle::F1, Principle::F2, Principle::F3, Principle::I1, Principle::R1_1, Principle::R1_2] {
        ensure!(r.status(p) == Status::Pass, "{p} is {}", r.status(p).as_str());
    }
    ensure!(r.status(Principle::I2) == Status::Partial, "I2 is {}", r.status(Principle::I2).as_str());
    let manual: Vec<Principle> = Principle::ALL.into_iter().filter(|p| r.status(*p) == Status::Manual).collect();
    let want = [Principle::F4, Principle::A1_1, Principle::A1_2, Principle::A2, Principle::R1_3];
    ensure!(manual == want, "manual: {manual:?}");

    let dataset = doc.base().unwrap().clone();
    let drop = |field: &'static str| {
        let id = dataset.clone();
        move |d: &mut LinkedDocument| {
            d.node_mut(&id).unwrap().remove_property(&t(field));
        }
    };
    let log = doc.nodes_of_type(&t("robovast:LogFile")).next().unwrap().id().clone();
    let bag = doc.nodes_of_type(&t("robovast:BagFile")).next().unwrap().id().clone();
    let same_id = dataset.clone();
    let edits: Vec<(Principle, Box<dyn FnOnce(&mut LinkedDocument)>)> = vec![
        (Principle::F1, Box::new(move |d| mutations::rename_node(d, &log, &Iri::new("file:///tmp/x").unwrap()))),
        (Principle::F2, Box::new(drop("dcterms:description"))),
        (
            Principle::F3,
            Box::new(move |d| {
                let n = d.node_mut(&same_id).unwrap();
                n.remove_property(&t("dcterms:identifier"));
                n.add(t("dcterms:identifier"), LiteralValue::string(same_id.to_string()));
            }),
        ),
        (
            Principle::I1,
            Box::new({
                let id = dataset.clone();
                move |d| {
                    d.node_mut(&id).unwrap().add(Iri::new("urn:x-local:note").unwrap(), LiteralValue::string("n"));
                }
            }),
        ),
        (Principle::R1_1, Box::new(drop("dcterms:license"))),
        (
            Principle::R1_2,
            Box::new(move |d| {
                d.node_mut(&bag).unwrap().remove_property(&t("prov:wasGeneratedBy"));
            }),
        ),
    ];
    for (target, edit) in edits {
        let changed = flips(doc, &dir, edit);
        ensure!(changed == [target], "edit aimed at {target} changed {changed:?}");
    }
    Ok("F1 F2 F3 A1 I1 R1.1 R1.2 pass, I2 I3 R1 partial, 5 manual; 6 single edits isolated".into())
}

fn c8_packaging(default: &Campaign) -> Outcome {
    let root = default.tree.root();
    let clock = Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap();
    let spec = DistributionSpec::new("{timestamp:%Y%m%d}_meta.zip", vec!["*.json".into()]).map_err(|e| e.to_string())?;
    let a = package(&root, &spec, clock).map_err(|e| e.to_string())?;
    let json_files: Vec<String> = tree_bytes(&root).into_keys().filter(|k| k.ends_with(".json") && !k.starts_with("dist/")).collect();
    let entries: Vec<String> = a.manifest.entries.iter().map(|e| e.path.clone()).collect();
    ensure!(entries == json_files, "{} entries vs {} JSON files", entries.len(), json_files.len());
    let mut zip = zip::ZipArchive::new(Cursor::new(&a.archive)).map_err(|e| e.to_string())?;
    let names: Vec<String> = (0..zip.len()).map(|i| zip.by_index(i).unwrap().name().unwrap().to_string()).collect();
    ensure!(names == json_files, "archive listing differs from the manifest");
    let b = package(&root, &spec, clock).map_err(|e| e.to_string())?;
    ensure!(a.manifest.archive_sha256 == b.manifest.archive_sha256 && a.archive == b.archive, "repeated packaging differs");
    let stale = a.manifest.verify(&root);
    ensure!(stale.is_empty(), "digests do not verify: {stale:?}");
    ensure!(a.manifest.archive == "20250101_meta.zip", "archive named {}", a.manifest.archive);
    Ok(format!("{} JSON files, digest {} stable and verified", entries.len(), &a.manifest.archive_sha256[..12]))
}

fn c9_deposit(default: &Campaign) -> Outcome {
    let root = default.tree.root();
    let manifest = consolidate::read_manifest(&root).map_err(|e| e.to_string())?;
    let clock = Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap();
    let packages = publish::package::package_all(&root, &manifest.publication, clock).map_err(|e| e.to_string())?;
    ensure!(packages.len() >= 2, "{} distributions", packages.len());
    let metadata = DepositMetadata::from_manifest(&manifest.metadata);
    let behavior = MockBehavior::default();

    let server = MockServer::start(behavior.clone()).map_err(|e| e.to_string())?;
    let mut session = DepositSession::new(server.endpoint(), "DEPOSIT_TOKEN").map_err(|e| e.to_string())?;
    DepositClient::new(behavior.token.clone()).deposit(&mut session, &metadata, &packages).map_err(|e| e.to_string())?;
    let mut expected = vec!["POST create".to_string()];
    expected.extend(packages.iter().map(|_| "PUT upload".to_string()));
    expected.push("POST publish".into());
    ensure!(server.call_kinds() == expected, "calls {:?}", server.call_kinds());
    ensure!(session.state() == DepositState::Published, "state {}", session.state());
    let doi = session.doi().ok_or("no DOI")?.to_string();
    ensure!(doi == behavior.doi, "DOI {doi}");
    let id = session.deposition_id().ok_or("no deposition id")?;
    let stored = server.files(id);
    for p in &packages {
        ensure!(stored.get(&p.manifest.archive) == Some(&p.archive), "{} not stored intact", p.manifest.archive);
    }

    let dataset = manifest.base().iri().clone();
    let mut fresh = default.doc.clone();
    fresh.node_mut(&dataset).unwrap().remove_property(&t("dcterms:identifier"));
    let doc = publish::attach_doi(fresh, &dataset, &doi).map_err(|e| e.to_string())?;
    let written = doc.node(&dataset).unwrap().first_literal(&t("dcterms:identifier")).map(|l| l.lexical().to_string());
    ensure!(written.as_deref() == Some("https://doi.org/10.5281/zenodo.18702398"), "identifier {written:?}");

    let refusing = MockServer::start(MockBehavior { fail_create: Some(403), ..behavior.clone() }).map_err(|e| e.to_string())?;
    let mut s = DepositSession::new(refusing.endpoint(), "DEPOSIT_TOKEN").map_err(|e| e.to_string())?;
    let before = s.clone();
    match DepositClient::new(behavior.token).deposit(&mut s, &metadata, &packages) {
        Err(PublishError::AuthError(_)) => {}
        other => return Err(format!("403 gave {other:?}")),
    }
    ensure!(s == before, "session advanced to {}", s.state());
    ensure!(refusing.call_kinds() == ["POST create"], "calls after 403: {:?}", refusing.call_kinds());
    Ok(format!("{} calls in order, DOI {doi} written back, 403 leaves session fresh", expected.len()))
}

fn probe_name(q: &str) -> Result<String, String> {
    match parse_query(q) {
        Err(QueryError::UnsupportedFeature(name)) => Ok(name),
        other => Err(format!("{q}: {other:?}")),
    }
}

fn c10_query_conformance() -> Outcome {
    for name in ["input_closure", "failure_rate"] {
        parse_query(cookbook(name).unwrap()).map_err(|e| format!("{name}: {e}"))?;
    }
    let probes = [
        ("SELECT ?x WHERE { ?x ?p ?o OPTIONAL { ?x ?q ?r } }", "OPTIONAL"),
        ("SELECT ?x WHERE { { ?x ?p ?o } UNION { ?x ?q ?o } }", "UNION"),
        ("SELECT ?x WHERE { ?x ?p ?o } ORDER BY ?x", "ORDER BY"),
        ("SELECT ?x WHERE { { SELECT ?x WHERE { ?x ?p ?o } } }", "subquery"),
        ("SELECT ?x WHERE { ?x ?p ?o } LIMIT 10", "LIMIT"),
        ("SELECT ?x WHERE { ?x ?p ?o MINUS { ?x ?p 1 } }", "MINUS"),
        ("SELECT ?x WHERE { VALUES ?x { 1 2 } }", "VALUES"),
        ("SELECT ?x WHERE { ?x prov:used+ ?o }", "one-or-more path"),
        ("ASK { ?x ?p ?o }", "ASK"),
        ("SELECT (AVG(?o) AS ?m) WHERE { ?x ?p ?o }", "aggregate AVG"),
    ];
    for (q, want) in probes {
        let got = probe_name(q)?;
        ensure!(got.contains(want), "{q}: named {got:?}, expected {want:?}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let preds: Vec<Iri> = (0..3).map(|i| Iri::new(format!("https://purl.org/example/p{i}")).unwrap()).collect();
    for case in 0..200 {
        let n = rng.random_range(1..=50u32);
        let node = |i: u32| Iri::new(format!("https://purl.org/example/n{i}")).unwrap();
        let mut doc = LinkedDocument::default();
        for _ in 0..rng.random_range(0..(2 * n as usize + 1)) {
            let (s, o, p) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..preds.len()));
            doc.entry(node(s)).add(preds[p].clone(), node(o));
        }
        let graph = Graph::new(&doc);
        let alt = PathExpr::star(PathExpr::Alternative(vec![PathExpr::Predicate(preds[0].clone()), PathExpr::Predicate(preds[1].clone())]));
        let seq = PathExpr::sequence(vec![PathExpr::Predicate(preds[2].clone()), alt.clone()]);
        let adj_alt = common::adjacency(&doc, &preds[..2]);
        let adj_p2 = common::adjacency(&doc, &preds[2..]);
        for start in 0..n {
            let s = node(start);
            let as_values = |set: BTreeSet<Iri>| set.into_iter().map(Value::Node).collect::<BTreeSet<Value>>();
            let star = as_values(common::bfs(&adj_alt, std::slice::from_ref(&s)));
            ensure!(eval_path(&graph, &s, &alt) == star, "case {case}, start n{start}: star closure differs");
            let firsts: Vec<Iri> = adj_p2.get(&s).cloned().unwrap_or_default();
            let then = as_values(common::bfs(&adj_alt, &firsts));
            ensure!(eval_path(&graph, &s, &seq) == then, "case {case}, start n{start}: sequence closure differs");
        }
    }
    ensure!(queryengine::nullable(&PathExpr::star(PathExpr::Predicate(preds[0].clone()))), "star is not nullable");
    Ok("both bundled queries parse, 10 probes named, 200 random graphs match BFS".into())
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let guarded = |f: &dyn Fn() -> Outcome| -> Outcome {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        })
    };

    let full = catch_unwind(|| build(&harness::paper_profile()));
    let default = catch_unwind(|| build(&HarnessConfig::default()));
    let need = |c: &Result<Campaign, _>| -> Result<(), String> { c.as_ref().map(|_| ()).map_err(|_| "campaign build panicked".to_string()) };

    results.push((1, "campaign shape", need(&full).and_then(|_| guarded(&|| c1_campaign_shape(full.as_ref().unwrap())))));
    results.push((
        2,
        "failure-rate query oracle",
        need(&full).and(need(&default)).and_then(|_| guarded(&|| c2_failure_rates(default.as_ref().unwrap(), full.as_ref().unwrap()))),
    ));
    results.push((3, "input-closure query oracle", need(&full).and_then(|_| guarded(&|| c3_input_closure(full.as_ref().unwrap())))));
    results.push((4, "determinism", guarded(&c4_determinism)));
    results.push((5, "round trip", need(&default).and_then(|_| guarded(&|| c5_round_trip(default.as_ref().unwrap())))));
    results.push((6, "graph structure", need(&default).and_then(|_| guarded(&|| c6_graph_structure(default.as_ref().unwrap())))));
    results.push((7, "FAIR report", need(&default).and_then(|_| guarded(&|| c7_fair_report(default.as_ref().unwrap())))));
    results.push((8, "packaging", need(&default).and_then(|_| guarded(&|| c8_packaging(default.as_ref().unwrap())))));
    results.push((9, "deposit", need(&default).and_then(|_| guarded(&|| c9_deposit(default.as_ref().unwrap())))));
    results.push((10, "query engine conformance", guarded(&c10_query_conformance)));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
