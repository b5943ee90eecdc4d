use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use rust_decimal::Decimal;

use super::*;
use crate::ldgraph::{to_triples, LiteralValue};
use crate::vocab::{iri as t, Iri};

const INPUT_CLOSURE: &str = include_str!("../../queries/input_closure.rq");
const INPUT_CLOSURE_JOINED: &str = include_str!("../../queries/input_closure_joined.rq");
const FAILURE_RATE: &str = include_str!("../../queries/failure_rate.rq");

fn ex(local: &str) -> Iri {
    Iri::new(format!("https://example.org/{local}")).unwrap()
}

/// Scenarios with (failed, total) run counts.
fn runs_fixture(scenarios: &[(&str, u32, u32)]) -> LinkedDocument {
    let mut doc = LinkedDocument::default();
    for (name, failed, total) in scenarios {
        let conf = ex(name);
        doc.entry(conf.clone()).add_type(t("smm:ConcreteScenario")).add_type(t("prov:Entity"));
        for r in 0..*total {
            doc.entry(ex(&format!("{name}/run{r}")))
                .add_type(t("robovast:TestExecution"))
                .add(t("prov:used"), conf.clone())
                .add(t("robovast:success"), LiteralValue::boolean(r >= *failed));
        }
    }
    doc
}

fn dec(s: &str) -> Value {
    Value::Literal(LiteralValue::new(s, crate::vocab::Datatype::Decimal).unwrap())
}

fn int(i: i64) -> Value {
    Value::Literal(LiteralValue::integer(i))
}

#[test]
fn failure_rate_nineteen_of_twenty() {
    let doc = runs_fixture(&[("A", 19, 20), ("B", 0, 10)]);
    let table = run_query(&doc, FAILURE_RATE).unwrap();
    assert_eq!(table.columns, ["conf", "rate", "total"]);
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.rows[0], [Some(Value::Node(ex("A"))), Some(dec("95.0")), Some(int(20))]);
    assert_eq!(table.rows[1], [Some(Value::Node(ex("B"))), Some(dec("0.0")), Some(int(10))]);
    assert_eq!(table.get(0, "rate").unwrap().to_string(), "95.0");
}

#[test]
fn csv_header_and_rows() {
    let doc = runs_fixture(&[("A", 1, 3)]);
    let csv = run_query(&doc, FAILURE_RATE).unwrap().to_csv();
    assert_eq!(csv, "conf,rate,total\nhttps://example.org/A,33.3333333333,3\n");
}

#[test]
fn division_keeps_twelve_significant_digits() {
    let doc = runs_fixture(&[("A", 2, 3)]);
    let table = run_query(&doc, FAILURE_RATE).unwrap();
    // 2/3 rounds to 0.666666666667 before scaling
    assert_eq!(table.get(0, "rate"), Some(&dec("66.6666666667")));
}

#[test]
fn evaluation_is_repeatable() {
    let doc = runs_fixture(&[("C", 3, 7), ("A", 1, 2), ("B", 0, 4)]);
    let a = run_query(&doc, FAILURE_RATE).unwrap();
    let b = run_query(&doc, FAILURE_RATE).unwrap();
    assert_eq!(a, b);
    let confs: Vec<String> = a.rows.iter().map(|r| r[0].as_ref().unwrap().to_string()).collect();
    let mut sorted = confs.clone();
    sorted.sort();
    assert_eq!(confs, sorted);
}

#[test]
fn group_concat_is_sorted_and_distinct() {
    let mut doc = LinkedDocument::default();
    for (s, o) in [("g", "c"), ("g", "a"), ("g", "b"), ("h", "z")] {
        doc.entry(ex(s)).add(t("dcterms:references"), LiteralValue::string(o));
    }
    doc.entry(ex("g2")).add(t("dcterms:references"), LiteralValue::string("a"));
    let q = "SELECT (GROUP_CONCAT(DISTINCT ?o; SEPARATOR=\"|\") AS ?all) (COUNT(?o) AS ?n) (COUNT(DISTINCT ?o) AS ?d) \
             WHERE { ?s dcterms:references ?o }";
    let table = run_query(&doc, q).unwrap();
    assert_eq!(table.rows, [[Some(Value::Literal(LiteralValue::string("a|b|c|z"))), Some(int(5)), Some(int(4))]]);
}

#[test]
fn implicit_group_over_nothing_counts_zero() {
    let doc = LinkedDocument::default();
    let table = run_query(&doc, "SELECT (COUNT(*) AS ?n) (SUM(?x) AS ?s) WHERE { ?a prov:used ?x }").unwrap();
    assert_eq!(table.rows, [[Some(int(0)), Some(int(0))]]);
    let grouped = run_query(&doc, "SELECT ?a (COUNT(?x) AS ?n) WHERE { ?a prov:used ?x } GROUP BY ?a").unwrap();
    assert!(grouped.is_empty());
}

#[test]
fn arithmetic_on_strings_is_a_type_error() {
    let mut doc = LinkedDocument::default();
    doc.entry(ex("a")).add(t("dcterms:title"), LiteralValue::string("x"));
    let err = run_query(&doc, "SELECT ?s (?t + 1 AS ?u) WHERE { ?s dcterms:title ?t }").unwrap_err();
    assert!(matches!(err, QueryError::TypeError(_)), "{err}");
    let err = run_query(&doc, "SELECT ?s WHERE { ?s dcterms:title ?t FILTER(?t) }").unwrap_err();
    assert!(matches!(err, QueryError::TypeError(_)), "{err}");
}

#[test]
fn division_by_zero_names_the_row() {
    let mut doc = LinkedDocument::default();
    doc.entry(ex("a")).add(t("robovast:n_obstacles"), LiteralValue::integer(0));
    let err = run_query(&doc, "SELECT (1 / ?n AS ?r) WHERE { ?s robovast:n_obstacles ?n }").unwrap_err();
    match err {
        QueryError::EvaluationError { row, .. } => assert!(row.contains("?n=0"), "{row}"),
        e => panic!("{e}"),
    }
}

#[test]
fn true_matches_boolean_literals_only() {
    let mut doc = LinkedDocument::default();
    doc.entry(ex("a")).add(t("robovast:success"), LiteralValue::boolean(true));
    doc.entry(ex("b")).add(t("robovast:success"), LiteralValue::string("true"));
    let table = run_query(&doc, "SELECT ?s WHERE { ?s robovast:success ?v FILTER(?v = true) }").unwrap();
    assert_eq!(table.rows, [[Some(Value::Node(ex("a")))]]);
}

#[test]
fn bag_semantics_and_variable_predicates() {
    let mut doc = LinkedDocument::default();
    doc.entry(ex("a")).add(t("prov:used"), ex("x")).add(t("prov:used"), ex("y"));
    doc.entry(ex("b")).add(t("prov:used"), ex("x"));
    // ?s is projected once per matching ?o
    let table = run_query(&doc, "SELECT ?s WHERE { ?s prov:used ?o }").unwrap();
    assert_eq!(table.len(), 3);
    let table = run_query(&doc, "SELECT ?p ?o WHERE { <https://example.org/b> ?p ?o }").unwrap();
    assert_eq!(table.rows, [[Some(Value::Node(t("prov:used"))), Some(Value::Node(ex("x")))]]);
}

#[test]
fn output_formats() {
    let doc = runs_fixture(&[("A", 1, 2)]);
    let table = run_query(&doc, FAILURE_RATE).unwrap();
    let text = table.to_table();
    assert!(text.starts_with("conf"));
    assert_eq!(text.lines().count(), 3);
    let json: serde_json::Value = serde_json::from_str(&table.to_json()).unwrap();
    assert_eq!(json["head"]["vars"][1], "rate");
    assert_eq!(json["results"]["bindings"][0]["total"]["value"], "2");
    assert!("xml".parse::<OutputFormat>().is_err());
}

/// Closure fixture: two runs on one obstacle-free scenario, one run on a
/// scenario with obstacles. Files hang off both scenarios.
fn closure_fixture() -> LinkedDocument {
    let mut doc = LinkedDocument::default();
    let (s0, s1) = (ex("s0"), ex("s1"));
    doc.entry(s0.clone())
        .add_type(t("smm:ConcreteScenario"))
        .add(t("robovast:n_obstacles"), LiteralValue::integer(0))
        .add(t("dcterms:references"), ex("map"))
        .add(t("prov:atLocation"), ex("s0#file"));
    doc.entry(s1.clone())
        .add_type(t("smm:ConcreteScenario"))
        .add(t("robovast:n_obstacles"), LiteralValue::integer(3))
        .add(t("prov:hadMember"), ex("cfg1"));
    doc.entry(ex("map")).add(t("prov:atLocation"), ex("map#file"));
    for (run, scen) in [("r0", &s0), ("r1", &s0), ("r2", &s1)] {
        doc.entry(ex(run)).add_type(t("robovast:TestExecution")).add(t("prov:used"), scen.clone());
    }
    doc
}

fn files(table: &SolutionTable) -> BTreeMap<String, BTreeSet<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            let fs = r[1].as_ref().unwrap().to_string();
            (r[0].as_ref().unwrap().to_string(), fs.split(',').map(str::to_string).collect())
        })
        .collect()
}

#[test]
fn verbatim_closure_query_is_a_cross_product() {
    let doc = closure_fixture();
    let table = run_query(&doc, INPUT_CLOSURE).unwrap();
    let got = files(&table);
    // every obstacle-free scenario lists every run's closure
    let all: BTreeSet<String> = ["s0", "s0#file", "map", "map#file", "s1", "cfg1"]
        .iter()
        .map(|s| ex(s).to_string())
        .collect();
    assert_eq!(got, BTreeMap::from([(ex("s0").to_string(), all)]));
}

#[test]
fn joined_closure_query_is_per_scenario() {
    let doc = closure_fixture();
    let got = files(&run_query(&doc, INPUT_CLOSURE_JOINED).unwrap());
    let s0: BTreeSet<String> = ["s0", "s0#file", "map", "map#file"].iter().map(|s| ex(s).to_string()).collect();
    assert_eq!(got, BTreeMap::from([(ex("s0").to_string(), s0)]));
}

fn bfs(doc: &LinkedDocument, start: &Iri) -> BTreeSet<String> {
    let steps = [t("dcterms:references"), t("prov:hadMember"), t("prov:atLocation")];
    let mut seen: BTreeSet<Iri> = doc.node(start).map(|n| n.node_refs(&t("prov:used")).cloned().collect()).unwrap_or_default();
    let mut queue: VecDeque<Iri> = seen.iter().cloned().collect();
    while let Some(x) = queue.pop_front() {
        if let Some(n) = doc.node(&x) {
            for p in &steps {
                for o in n.node_refs(p) {
                    if seen.insert(o.clone()) {
                        queue.push_back(o.clone());
                    }
                }
            }
        }
    }
    seen.into_iter().map(|i| i.to_string()).collect()
}

#[test]
fn closure_queries_match_bfs_on_campaign_graph() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    let cfg = crate::harness::HarnessConfig {
        n_maps: 1,
        paths_per_map: 2,
        runs_per_config: 2,
        failure_profile: Vec::new(),
        ..Default::default()
    };
    crate::harness::generate(&cfg, &root).unwrap();
    let doc = crate::consolidate::consolidate(&root).unwrap().doc;
    let exec = t("robovast:TestExecution");
    let scen = t("smm:ConcreteScenario");
    let free: Vec<&Iri> = doc
        .nodes_of_type(&scen)
        .filter(|n| n.first_literal(&t("robovast:n_obstacles")).and_then(LiteralValue::as_integer) == Some(0))
        .map(|n| n.id())
        .collect();
    assert_eq!(free.len(), 2);
    let runs_of = |s: &Iri| -> Vec<Iri> {
        doc.nodes_of_type(&exec).filter(|r| r.node_refs(&t("prov:used")).any(|u| u == s)).map(|r| r.id().clone()).collect()
    };
    let all_runs: Vec<Iri> = doc.nodes_of_type(&exec).map(|r| r.id().clone()).collect();
    let union = |runs: &[Iri]| runs.iter().flat_map(|r| bfs(&doc, r)).collect::<BTreeSet<String>>();

    let joined = files(&run_query(&doc, INPUT_CLOSURE_JOINED).unwrap());
    let verbatim = files(&run_query(&doc, INPUT_CLOSURE).unwrap());
    assert_eq!(joined.len(), free.len());
    assert_eq!(verbatim.len(), free.len());
    for s in &free {
        assert_eq!(joined[s.as_str()], union(&runs_of(s)), "{s}");
        assert_eq!(verbatim[s.as_str()], union(&all_runs), "{s}");
    }
}

#[test]
fn triple_graph_agrees_with_document_graph() {
    let doc = closure_fixture();
    let a = Graph::new(&doc);
    let b = Graph::from_triples(&to_triples(&doc));
    assert_eq!(a.len(), b.len());
    let q = parse_query(INPUT_CLOSURE).unwrap();
    assert_eq!(evaluate(&a, &q).unwrap(), evaluate(&b, &q).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    /// SUM and COUNT per group equal a direct tally over the runs.
    #[test]
    fn grouped_aggregates_match_tallies(
        runs in prop::collection::vec((0usize..6, any::<bool>(), 0i64..50), 0..60),
    ) {
        let mut doc = LinkedDocument::default();
        for (i, (scen, ok, dist)) in runs.iter().enumerate() {
            doc.entry(ex(&format!("s{scen}"))).add_type(t("smm:ConcreteScenario"));
            doc.entry(ex(&format!("run{i}")))
                .add_type(t("robovast:TestExecution"))
                .add(t("prov:used"), ex(&format!("s{scen}")))
                .add(t("robovast:success"), LiteralValue::boolean(*ok))
                .add(t("robovast:pathLength"), LiteralValue::integer(*dist));
        }
        let q = "SELECT ?conf (COUNT(?run) AS ?n) (SUM(?fail) AS ?f) (SUM(?d) AS ?dist) WHERE { \
                   ?conf a smm:ConcreteScenario . ?run prov:used ?conf ; robovast:success ?ok ; robovast:pathLength ?d . \
                   BIND(IF(?ok = false, 1, 0) AS ?fail) } GROUP BY ?conf";
        let table = run_query(&doc, q).unwrap();
        let mut tally: BTreeMap<String, (i64, i64, i64)> = BTreeMap::new();
        for (scen, ok, dist) in &runs {
            let e = tally.entry(ex(&format!("s{scen}")).to_string()).or_default();
            e.0 += 1;
            e.1 += i64::from(!ok);
            e.2 += dist;
        }
        let got: BTreeMap<String, (i64, i64, i64)> = table.rows.iter().map(|r| {
            let n = |i: usize| r[i].as_ref().unwrap().as_literal().unwrap().as_integer().unwrap();
            (r[0].as_ref().unwrap().to_string(), (n(1), n(2), n(3)))
        }).collect();
        prop_assert_eq!(got, tally);
    }

    /// The rate column equals failed/total * 100 rounded as the engine documents.
    #[test]
    fn rate_is_exact_rational(failed in 0u32..40, extra in 1u32..40) {
        let total = failed + extra;
        let doc = runs_fixture(&[("A", failed, total)]);
        let table = run_query(&doc, FAILURE_RATE).unwrap();
        let rate = table.get(0, "rate").unwrap().as_literal().unwrap().as_decimal().unwrap();
        let exact = Decimal::from(failed) * Decimal::from(100) / Decimal::from(total);
        prop_assert!((rate - exact).abs() < Decimal::new(1, 9), "{} vs {}", rate, exact);
    }
}
