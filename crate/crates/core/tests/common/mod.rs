//! Oracles shared by the integration suites. Everything here reads the
//! generated files or raw triples directly and never goes through the query
//! engine, so the engine can be checked against it.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use fairprov::harness::{self, CampaignSummary, HarnessConfig};
use fairprov::ldgraph::{to_triples, LinkedDocument, LiteralValue, Value};
use fairprov::vocab::{iri as t, Iri};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use walkdir::WalkDir;

pub struct Tree {
    pub dir: tempfile::TempDir,
    pub summary: CampaignSummary,
}

impl Tree {
    pub fn root(&self) -> PathBuf {
        self.dir.path().join("campaign")
    }
}

pub fn generate(cfg: &HarnessConfig) -> Tree {
    let dir = tempfile::tempdir().unwrap();
    let summary = harness::generate(cfg, &dir.path().join("campaign")).unwrap();
    Tree { dir, summary }
}

/// One configuration directory as written on disk.
#[derive(Debug, Clone)]
pub struct ConfigOnDisk {
    pub id: String,
    pub scenario: String,
    pub n_obstacles: u32,
    /// One entry per run, `true` when it failed.
    pub failed: Vec<bool>,
    /// Runs whose failure message reports a spawn (startup) failure.
    pub spawn_failures: usize,
}

fn config_field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.split_once('=').filter(|(k, _)| k.trim() == key).map(|(_, v)| v.split('#').next().unwrap().trim()))
        .unwrap_or_else(|| panic!("scenario.config lacks {key}"))
}

/// Reads scenario.config and every run's test.xml under `configs/`.
pub fn configs_on_disk(root: &Path) -> Vec<ConfigOnDisk> {
    let mut out = Vec::new();
    let mut dirs: Vec<PathBuf> = fs::read_dir(root.join("configs")).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    for dir in dirs {
        let text = fs::read_to_string(dir.join("scenario.config")).unwrap();
        let mut runs: Vec<PathBuf> = fs::read_dir(dir.join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
        runs.sort();
        let xmls: Vec<String> = runs.iter().map(|r| fs::read_to_string(r.join("test.xml")).unwrap()).collect();
        let failed = xmls.iter().map(|x| x.contains("<failure") || x.contains("<error")).collect();
        let spawn_failures = xmls.iter().filter(|x| x.contains("startup failed")).count();
        out.push(ConfigOnDisk {
            id: config_field(&text, "config_id").to_string(),
            scenario: config_field(&text, "scenario").to_string(),
            n_obstacles: config_field(&text, "n_obstacles").parse().unwrap(),
            failed,
            spawn_failures,
        });
    }
    out
}

/// (failed, total) per concrete scenario name.
pub fn scenario_tallies(configs: &[ConfigOnDisk]) -> BTreeMap<String, (u64, u64)> {
    let mut m: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for c in configs {
        let e = m.entry(c.scenario.clone()).or_default();
        e.0 += c.failed.iter().filter(|f| **f).count() as u64;
        e.1 += c.failed.len() as u64;
    }
    m
}

pub fn scenario_iri(base: &str, name: &str) -> String {
    format!("{}/scenarios/{name}", base.trim_end_matches('/'))
}

/// Adjacency over raw triples for the given predicates.
pub fn adjacency(doc: &LinkedDocument, predicates: &[Iri]) -> BTreeMap<Iri, Vec<Iri>> {
    let mut adj: BTreeMap<Iri, Vec<Iri>> = BTreeMap::new();
    for tr in to_triples(doc) {
        if let (true, Value::Node(o)) = (predicates.contains(&tr.predicate), &tr.object) {
            adj.entry(tr.subject.clone()).or_default().push(o.clone());
        }
    }
    adj
}

/// Everything reachable from `start` in zero or more steps.
pub fn bfs(adj: &BTreeMap<Iri, Vec<Iri>>, start: &[Iri]) -> BTreeSet<Iri> {
    let mut seen: BTreeSet<Iri> = start.iter().cloned().collect();
    let mut queue: VecDeque<Iri> = start.iter().cloned().collect();
    while let Some(x) = queue.pop_front() {
        for o in adj.get(&x).into_iter().flatten() {
            if seen.insert(o.clone()) {
                queue.push_back(o.clone());
            }
        }
    }
    seen
}

/// Input files of a set of runs: what they used, closed under
/// references, membership and location.
pub fn run_inputs(doc: &LinkedDocument, runs: &[Iri]) -> BTreeSet<Iri> {
    let used = adjacency(doc, &[t("prov:used")]);
    let starts: Vec<Iri> = runs.iter().flat_map(|r| used.get(r).cloned().unwrap_or_default()).collect();
    let adj = adjacency(doc, &[t("dcterms:references"), t("prov:hadMember"), t("prov:atLocation")]);
    bfs(&adj, &starts)
}

/// Relative path to contents for every file under `root`.
pub fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

/// A small random document: up to 12 nodes, mixed types, links and
/// literals of every datatype.
pub fn random_document(seed: u64) -> LinkedDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = ["prov:Entity", "prov:Activity", "prov:Agent", "dcat:Dataset", "robovast:BagFile"];
    let links = ["prov:used", "prov:wasGeneratedBy", "prov:hadMember", "dcterms:references"];
    let n = rng.random_range(1..=12);
    let node = |i: u32| Iri::new(format!("https://purl.org/example/ds/n{i}")).unwrap();
    let mut doc = LinkedDocument::default();
    for i in 0..n {
        let entry = doc.entry(node(i));
        for _ in 0..rng.random_range(0..3) {
            entry.add_type(t(types[rng.random_range(0..types.len())]));
        }
        for _ in 0..rng.random_range(0..6) {
            match rng.random_range(0..7) {
                0 => {
                    entry.add(t(links[rng.random_range(0..links.len())]), node(rng.random_range(0..n)));
                }
                1 => {
                    let len = rng.random_range(0..8);
                    let s: String = (0..len).map(|_| ['a', 'Z', ' ', '"', '\\', 'é', '\n', '7'][rng.random_range(0..8)]).collect();
                    entry.add(t("dcterms:title"), LiteralValue::string(s));
                }
                2 => {
                    entry.add(t("robovast:n_runs"), LiteralValue::integer(rng.random_range(-1_000_000..1_000_000)));
                }
                3 => {
                    let d = Decimal::new(rng.random_range(-1_000_000i64..1_000_000), rng.random_range(0..5));
                    entry.add(t("robovast:duration"), LiteralValue::decimal(d));
                }
                4 => {
                    entry.add(t("robovast:success"), LiteralValue::boolean(rng.random_bool(0.5)));
                }
                5 => {
                    let ts = DateTime::from_timestamp(rng.random_range(0..2_000_000_000), 0).unwrap();
                    entry.add(t("dcterms:modified"), LiteralValue::date_time(ts));
                }
                _ => {
                    entry.add(t("dcat:keyword"), LiteralValue::string(format!("k{}", rng.random_range(0..4))));
                }
            }
        }
    }
    doc
}
