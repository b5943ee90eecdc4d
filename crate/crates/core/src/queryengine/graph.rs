//! Frozen, term-interned triple tables with forward and backward indexes.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::PathExpr;
use crate::ldgraph::{rdf_type, LinkedDocument, Triple, Value};
use crate::vocab::Iri;

pub type TermId = u32;

#[derive(Debug, Default)]
struct PredTable {
    pairs: Vec<(TermId, TermId)>,
    fwd: HashMap<TermId, Vec<TermId>>,
    bwd: HashMap<TermId, Vec<TermId>>,
}

/// Read-only after construction; safe to share across threads.
#[derive(Debug, Default)]
pub struct Graph {
    terms: Vec<Value>,
    ids: HashMap<Value, TermId>,
    preds: HashMap<TermId, PredTable>,
    /// Predicate ids in first-seen order.
    pred_order: Vec<TermId>,
    /// Every subject and object, sorted by id.
    nodes: Vec<TermId>,
    triples: usize,
}

impl Graph {
    pub fn new(doc: &LinkedDocument) -> Self {
        let ty = rdf_type();
        let mut g = Graph::default();
        for node in doc.nodes() {
            for t in node.types() {
                g.add(node.id(), &ty, &Value::Node(t.clone()));
            }
            for (p, vals) in node.properties() {
                for v in vals {
                    g.add(node.id(), p, v);
                }
            }
        }
        g.finish()
    }

    pub fn from_triples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut g = Graph::default();
        let mut seen = HashSet::new();
        for t in triples {
            if seen.insert(t) {
                g.add(&t.subject, &t.predicate, &t.object);
            }
        }
        g.finish()
    }

    fn intern_mut(&mut self, v: &Value) -> TermId {
        if let Some(&id) = self.ids.get(v) {
            return id;
        }
        let id = TermId::try_from(self.terms.len()).expect("fewer than 2^32 terms");
        self.terms.push(v.clone());
        self.ids.insert(v.clone(), id);
        id
    }

    fn add(&mut self, s: &Iri, p: &Iri, o: &Value) {
        let s = self.intern_mut(&Value::Node(s.clone()));
        let p = self.intern_mut(&Value::Node(p.clone()));
        let o = self.intern_mut(o);
        if !self.preds.contains_key(&p) {
            self.pred_order.push(p);
        }
        let table = self.preds.entry(p).or_default();
        table.pairs.push((s, o));
        table.fwd.entry(s).or_default().push(o);
        table.bwd.entry(o).or_default().push(s);
        self.triples += 1;
    }

    fn finish(mut self) -> Self {
        let mut nodes = BTreeSet::new();
        for table in self.preds.values() {
            for &(s, o) in &table.pairs {
                nodes.insert(s);
                nodes.insert(o);
            }
        }
        self.nodes = nodes.into_iter().collect();
        self
    }

    pub fn len(&self) -> usize {
        self.triples
    }

    pub fn is_empty(&self) -> bool {
        self.triples == 0
    }

    pub fn id(&self, v: &Value) -> Option<TermId> {
        self.ids.get(v).copied()
    }

    pub fn iri_id(&self, iri: &Iri) -> Option<TermId> {
        self.id(&Value::Node(iri.clone()))
    }

    pub fn term(&self, id: TermId) -> &Value {
        &self.terms[id as usize]
    }

    pub(crate) fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn nodes(&self) -> &[TermId] {
        &self.nodes
    }

    pub(crate) fn predicates(&self) -> &[TermId] {
        &self.pred_order
    }

    pub(crate) fn pairs(&self, p: TermId) -> &[(TermId, TermId)] {
        self.preds.get(&p).map_or(&[], |t| t.pairs.as_slice())
    }

    pub(crate) fn objects(&self, s: TermId, p: TermId) -> &[TermId] {
        self.preds.get(&p).and_then(|t| t.fwd.get(&s)).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn subjects(&self, p: TermId, o: TermId) -> &[TermId] {
        self.preds.get(&p).and_then(|t| t.bwd.get(&o)).map_or(&[], Vec::as_slice)
    }

    /// Number of distinct subjects for `p` (zero when unused).
    pub(crate) fn subject_count(&self, p: TermId) -> usize {
        self.preds.get(&p).map_or(0, |t| t.fwd.len())
    }

    pub(crate) fn object_count(&self, p: TermId) -> usize {
        self.preds.get(&p).map_or(0, |t| t.bwd.len())
    }
}

/// A path with predicates resolved to ids. `None` predicates do not occur
/// in the graph and match nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum IdPath {
    Pred(Option<TermId>),
    Seq(Vec<IdPath>),
    Alt(Vec<IdPath>),
    Star(Box<IdPath>),
}

impl IdPath {
    pub(crate) fn resolve(graph: &Graph, path: &PathExpr) -> IdPath {
        match path {
            PathExpr::Predicate(p) => IdPath::Pred(graph.iri_id(p)),
            PathExpr::Sequence(v) => IdPath::Seq(v.iter().map(|p| IdPath::resolve(graph, p)).collect()),
            PathExpr::Alternative(v) => IdPath::Alt(v.iter().map(|p| IdPath::resolve(graph, p)).collect()),
            PathExpr::ZeroOrMore(inner) => IdPath::Star(Box::new(IdPath::resolve(graph, inner))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Backward,
}

fn dedup(v: &mut Vec<TermId>) {
    let mut seen = HashSet::with_capacity(v.len());
    v.retain(|x| seen.insert(*x));
}

/// Nodes reachable from any of `frontier` along `path` (set semantics).
pub(crate) fn step(graph: &Graph, frontier: &[TermId], path: &IdPath, dir: Direction) -> Vec<TermId> {
    let mut out = match path {
        IdPath::Pred(None) => Vec::new(),
        IdPath::Pred(Some(p)) => {
            let mut out = Vec::new();
            for &n in frontier {
                out.extend_from_slice(match dir {
                    Direction::Forward => graph.objects(n, *p),
                    Direction::Backward => graph.subjects(*p, n),
                });
            }
            out
        }
        IdPath::Seq(parts) => {
            let mut cur = frontier.to_vec();
            let mut apply = |part: &IdPath| cur = step(graph, &cur, part, dir);
            match dir {
                Direction::Forward => parts.iter().for_each(&mut apply),
                Direction::Backward => parts.iter().rev().for_each(&mut apply),
            }
            cur
        }
        IdPath::Alt(parts) => parts.iter().flat_map(|part| step(graph, frontier, part, dir)).collect(),
        IdPath::Star(inner) => {
            let mut visited: HashSet<TermId> = frontier.iter().copied().collect();
            let mut out: Vec<TermId> = frontier.to_vec();
            let mut queue = out.clone();
            while !queue.is_empty() {
                let next = step(graph, &queue, inner, dir);
                queue = next.into_iter().filter(|n| visited.insert(*n)).collect();
                out.extend_from_slice(&queue);
            }
            out
        }
    };
    dedup(&mut out);
    out
}

/// Every node reachable from `start` along `path`; `start` itself when the
/// path admits the empty walk. Unknown start nodes reach only themselves
/// through `*`.
pub fn eval_path(graph: &Graph, start: &Iri, path: &PathExpr) -> BTreeSet<Value> {
    let id_path = IdPath::resolve(graph, path);
    match graph.iri_id(start) {
        Some(id) => step(graph, &[id], &id_path, Direction::Forward).into_iter().map(|n| graph.term(n).clone()).collect(),
        None if nullable(path) => BTreeSet::from([Value::Node(start.clone())]),
        None => BTreeSet::new(),
    }
}

/// Whether the path matches the empty walk.
pub fn nullable(path: &PathExpr) -> bool {
    match path {
        PathExpr::Predicate(_) => false,
        PathExpr::Sequence(v) => v.iter().all(nullable),
        PathExpr::Alternative(v) => v.iter().any(nullable),
        PathExpr::ZeroOrMore(_) => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::iri as t;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn n(i: usize) -> Iri {
        Iri::new(format!("https://example.org/n{i}")).unwrap()
    }

    fn graph(edges: &[(usize, &str, usize)]) -> Graph {
        let triples: Vec<Triple> = edges
            .iter()
            .map(|(s, p, o)| Triple { subject: n(*s), predicate: t(p), object: Value::Node(n(*o)) })
            .collect();
        Graph::from_triples(&triples)
    }

    fn closure_path() -> PathExpr {
        PathExpr::Sequence(vec![
            PathExpr::Predicate(t("prov:used")),
            PathExpr::star(PathExpr::Alternative(vec![
                PathExpr::Predicate(t("dcterms:references")),
                PathExpr::Predicate(t("prov:hadMember")),
                PathExpr::Predicate(t("prov:atLocation")),
            ])),
        ])
    }

    fn nodes(ids: &[usize]) -> BTreeSet<Value> {
        ids.iter().map(|i| Value::Node(n(*i))).collect()
    }

    #[test]
    fn star_includes_start() {
        let g = graph(&[(0, "prov:hadMember", 1)]);
        let p = PathExpr::star(PathExpr::Predicate(t("prov:used")));
        assert_eq!(eval_path(&g, &n(0), &p), nodes(&[0]));
        assert_eq!(eval_path(&g, &n(7), &p), nodes(&[7]));
    }

    #[test]
    fn run_to_scenario_variation_floorplan() {
        // run 0, scenario 1, variation 2, floorplan 3
        let g = graph(&[(0, "prov:used", 1), (1, "dcterms:references", 2), (2, "dcterms:references", 3)]);
        assert_eq!(eval_path(&g, &n(0), &closure_path()), nodes(&[1, 2, 3]));
    }

    #[test]
    fn cycles_terminate() {
        let g = graph(&[(0, "prov:hadMember", 1), (1, "prov:hadMember", 0)]);
        let p = PathExpr::star(PathExpr::Predicate(t("prov:hadMember")));
        assert_eq!(eval_path(&g, &n(0), &p), nodes(&[0, 1]));
    }

    #[test]
    fn backward_matches_forward() {
        let g = graph(&[(0, "prov:used", 1), (1, "prov:hadMember", 2), (2, "prov:atLocation", 3), (4, "prov:used", 2)]);
        let p = IdPath::resolve(&g, &closure_path());
        let target = g.iri_id(&n(3)).unwrap();
        let mut back = step(&g, &[target], &p, Direction::Backward);
        back.sort();
        let mut expect: Vec<TermId> = [0, 4].iter().map(|i| g.iri_id(&n(*i)).unwrap()).collect();
        expect.sort();
        assert_eq!(back, expect);
    }

    const PREDS: [&str; 4] = ["prov:used", "dcterms:references", "prov:hadMember", "prov:atLocation"];

    /// Plain BFS over (node, automaton state) for `used/(references|hadMember|atLocation)*`.
    fn bfs_oracle(edges: &[(usize, usize, usize)], start: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        for &(s, p, o) in edges {
            if s == start && p == 0 && seen.insert(o) {
                queue.push_back(o);
            }
        }
        while let Some(x) = queue.pop_front() {
            out.insert(x);
            for &(s, p, o) in edges {
                if s == x && p != 0 && seen.insert(o) {
                    queue.push_back(o);
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn closure_matches_bfs(
            size in 1usize..=50,
            raw in prop::collection::vec((0usize..50, 0usize..4, 0usize..50), 0..150),
        ) {
            let edges: Vec<(usize, usize, usize)> = raw.into_iter().map(|(s, p, o)| (s % size, p, o % size)).collect();
            let named: Vec<(usize, &str, usize)> = edges.iter().map(|&(s, p, o)| (s, PREDS[p], o)).collect();
            let g = graph(&named);
            for start in 0..size {
                let expect: BTreeSet<Value> = bfs_oracle(&edges, start).into_iter().map(|i| Value::Node(n(i))).collect();
                prop_assert_eq!(eval_path(&g, &n(start), &closure_path()), expect);
            }
        }
    }
}
