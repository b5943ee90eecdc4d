//! Query evaluation over a frozen [`Graph`].
//!
//! Triple patterns are split into connected components (by shared
//! variables); each component is joined on its own with its filters pushed
//! down, and the cartesian product of the components is streamed straight
//! into projection or grouping, so disconnected patterns never materialize
//! their product.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use rust_decimal::{Decimal, RoundingStrategy};

use super::ast::*;
use super::graph::{step, Direction, Graph, IdPath, TermId};
use super::{QueryError, SolutionTable};
use crate::ldgraph::{LiteralValue, Value};
use crate::vocab::Datatype;

/// Significant digits kept by division.
pub const DIVISION_DIGITS: u32 = 12;

type Row = Vec<Option<TermId>>;

#[derive(Debug, Clone)]
enum Slot {
    Var(usize),
    /// A constant term; `None` when it does not occur in the graph.
    Const(Option<TermId>),
}

#[derive(Debug, Clone)]
enum CVerb {
    Var(usize),
    Path(IdPath),
}

#[derive(Debug, Clone)]
struct CPattern {
    s: Slot,
    v: CVerb,
    o: Slot,
    vars: Vec<usize>,
}

#[derive(Debug, Clone)]
enum CExpr {
    Const(Value),
    Var(usize),
    Compare(CompareOp, Box<CExpr>, Box<CExpr>),
    Arith(ArithOp, Box<CExpr>, Box<CExpr>),
    Negate(Box<CExpr>),
    Not(Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    If(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Agg(usize),
}

#[derive(Debug, Clone)]
enum AggArg {
    Star,
    Var(usize),
    Expr(CExpr),
}

#[derive(Debug, Clone)]
struct AggSpec {
    kind: AggregateKind,
    distinct: bool,
    arg: AggArg,
}

struct Component {
    patterns: Vec<usize>,
    vars: Vec<usize>,
    filters: Vec<usize>,
}

struct Plan {
    var_names: Vec<String>,
    patterns: Vec<CPattern>,
    components: Vec<Component>,
    filters: Vec<CExpr>,
    late_filters: Vec<usize>,
    binds: Vec<(CExpr, usize)>,
    grouped: bool,
    group_vars: Vec<usize>,
    aggs: Vec<AggSpec>,
    projection: Vec<(String, CExpr)>,
}

struct Vars {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl Vars {
    fn slot(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }
}

fn compile_expr(graph: &Graph, e: &Expression, vars: &mut Vars, aggs: &mut Vec<AggSpec>) -> CExpr {
    let mut c = |x: &Expression| Box::new(compile_expr(graph, x, vars, aggs));
    match e {
        Expression::Literal(l) => CExpr::Const(Value::Literal(l.clone())),
        Expression::Iri(i) => CExpr::Const(Value::Node(i.clone())),
        Expression::Var(v) => CExpr::Var(vars.slot(v)),
        Expression::Compare(op, a, b) => CExpr::Compare(*op, c(a), c(b)),
        Expression::Arith(op, a, b) => CExpr::Arith(*op, c(a), c(b)),
        Expression::Negate(a) => CExpr::Negate(c(a)),
        Expression::Not(a) => CExpr::Not(c(a)),
        Expression::And(a, b) => CExpr::And(c(a), c(b)),
        Expression::Or(a, b) => CExpr::Or(c(a), c(b)),
        Expression::If(x, a, b) => CExpr::If(c(x), c(a), c(b)),
        Expression::Aggregate(agg) => {
            let arg = match agg.arg.as_deref() {
                None => AggArg::Star,
                Some(Expression::Var(v)) => AggArg::Var(vars.slot(v)),
                Some(other) => AggArg::Expr(compile_expr(graph, other, vars, aggs)),
            };
            aggs.push(AggSpec { kind: agg.kind.clone(), distinct: agg.distinct, arg });
            CExpr::Agg(aggs.len() - 1)
        }
    }
}

fn expr_vars(e: &CExpr, out: &mut Vec<usize>) {
    match e {
        CExpr::Const(_) | CExpr::Agg(_) => {}
        CExpr::Var(v) => out.push(*v),
        CExpr::Negate(a) | CExpr::Not(a) => expr_vars(a, out),
        CExpr::Compare(_, a, b) | CExpr::Arith(_, a, b) | CExpr::And(a, b) | CExpr::Or(a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        CExpr::If(x, a, b) => {
            expr_vars(x, out);
            expr_vars(a, out);
            expr_vars(b, out);
        }
    }
}

fn compile(graph: &Graph, ast: &QueryAst) -> Plan {
    let mut vars = Vars { index: HashMap::new(), names: Vec::new() };
    let slot = |t: &TermPattern, vars: &mut Vars| match t {
        TermPattern::Var(v) => Slot::Var(vars.slot(v)),
        TermPattern::Iri(i) => Slot::Const(graph.iri_id(i)),
        TermPattern::Literal(l) => Slot::Const(graph.id(&Value::Literal(l.clone()))),
    };
    let patterns: Vec<CPattern> = ast
        .patterns
        .iter()
        .map(|p| {
            let s = slot(&p.subject, &mut vars);
            let v = match &p.verb {
                Verb::Var(name) => CVerb::Var(vars.slot(name)),
                Verb::Path(path) => CVerb::Path(IdPath::resolve(graph, path)),
            };
            let o = slot(&p.object, &mut vars);
            let mut pv: Vec<usize> = [&s, &o]
                .into_iter()
                .filter_map(|x| match x {
                    Slot::Var(i) => Some(*i),
                    Slot::Const(_) => None,
                })
                .collect();
            if let CVerb::Var(i) = v {
                pv.push(i);
            }
            pv.sort_unstable();
            pv.dedup();
            CPattern { s, v, o, vars: pv }
        })
        .collect();
    let pattern_vars = vars.names.len();

    // union-find over patterns sharing a variable
    let mut parent: Vec<usize> = (0..patterns.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (i, p) in patterns.iter().enumerate() {
        for &v in &p.vars {
            match owner.get(&v) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => {
                    owner.insert(v, i);
                }
            }
        }
    }
    let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
    let mut components: Vec<Component> = Vec::new();
    for i in 0..patterns.len() {
        let root = find(&mut parent, i);
        let c = *comp_of_root.entry(root).or_insert_with(|| {
            components.push(Component { patterns: Vec::new(), vars: Vec::new(), filters: Vec::new() });
            components.len() - 1
        });
        components[c].patterns.push(i);
        components[c].vars.extend(patterns[i].vars.iter().copied());
    }
    for c in &mut components {
        c.vars.sort_unstable();
        c.vars.dedup();
    }

    let mut aggs = Vec::new();
    let binds: Vec<(CExpr, usize)> =
        ast.binds.iter().map(|b| (compile_expr(graph, &b.expr, &mut vars, &mut aggs), vars.slot(&b.var))).collect();
    let filters: Vec<CExpr> = ast.filters.iter().map(|f| compile_expr(graph, f, &mut vars, &mut aggs)).collect();
    let mut late_filters = Vec::new();
    for (i, f) in filters.iter().enumerate() {
        let mut fv = Vec::new();
        expr_vars(f, &mut fv);
        let home = if fv.is_empty() || fv.iter().any(|v| *v >= pattern_vars) {
            None
        } else {
            components.iter().position(|c| fv.iter().all(|v| c.vars.contains(v)))
        };
        match home {
            Some(c) => components[c].filters.push(i),
            None => late_filters.push(i),
        }
    }

    let grouped = ast.is_grouped();
    let group_vars: Vec<usize> = ast.group_by.iter().map(|g| vars.slot(g)).collect();
    let projection: Vec<(String, CExpr)> = if ast.projection.is_empty() {
        let all: Vec<(String, CExpr)> = vars.names.iter().enumerate().map(|(i, n)| (n.clone(), CExpr::Var(i))).collect();
        all
    } else {
        ast.projection
            .iter()
            .map(|p| match p {
                Projection::Var(v) => (v.clone(), CExpr::Var(vars.slot(v))),
                Projection::Expr { expr, alias } => (alias.clone(), compile_expr(graph, expr, &mut vars, &mut aggs)),
            })
            .collect()
    };
    Plan {
        var_names: vars.names,
        patterns,
        components,
        filters,
        late_filters,
        binds,
        grouped,
        group_vars,
        aggs,
        projection,
    }
}

#[derive(Debug, Clone, Copy)]
enum Num {
    Int(i64),
    Dec(Decimal),
}

impl Num {
    fn of(v: &Value) -> Option<Num> {
        let l = v.as_literal()?;
        match l.datatype() {
            Datatype::Integer => l.as_integer().map(Num::Int),
            Datatype::Decimal => l.as_decimal().map(Num::Dec),
            _ => None,
        }
    }

    fn dec(self) -> Decimal {
        match self {
            Num::Int(i) => Decimal::from(i),
            Num::Dec(d) => d,
        }
    }

    fn value(self) -> Value {
        Value::Literal(match self {
            Num::Int(i) => LiteralValue::integer(i),
            Num::Dec(d) => LiteralValue::decimal(d),
        })
    }

    fn arith(op: ArithOp, a: Num, b: Num) -> Result<Num, String> {
        let overflow = || "numeric overflow".to_string();
        if let (Num::Int(x), Num::Int(y), false) = (a, b, op == ArithOp::Div) {
            let r = match op {
                ArithOp::Add => x.checked_add(y),
                ArithOp::Sub => x.checked_sub(y),
                ArithOp::Mul => x.checked_mul(y),
                ArithOp::Div => unreachable!(),
            };
            if let Some(r) = r {
                return Ok(Num::Int(r));
            }
        }
        let (x, y) = (a.dec(), b.dec());
        let r = match op {
            ArithOp::Add => x.checked_add(y).ok_or_else(overflow)?,
            ArithOp::Sub => x.checked_sub(y).ok_or_else(overflow)?,
            ArithOp::Mul => x.checked_mul(y).ok_or_else(overflow)?,
            ArithOp::Div => {
                if y.is_zero() {
                    return Err("division by zero".into());
                }
                let q = x.checked_div(y).ok_or_else(overflow)?;
                q.round_sf_with_strategy(DIVISION_DIGITS, RoundingStrategy::MidpointNearestEven).unwrap_or(q)
            }
        };
        Ok(Num::Dec(r.normalize()))
    }
}

fn type_error(msg: impl Into<String>) -> QueryError {
    QueryError::TypeError(msg.into())
}

fn boolean(v: &Value) -> Result<bool, QueryError> {
    v.as_literal().and_then(LiteralValue::as_bool).ok_or_else(|| type_error(format!("{v} is not a boolean")))
}

fn compare(op: CompareOp, a: &Value, b: &Value) -> Result<bool, QueryError> {
    let ord = match (Num::of(a), Num::of(b)) {
        (Some(x), Some(y)) => Some(x.dec().cmp(&y.dec())),
        _ => match (a.as_literal(), b.as_literal()) {
            (Some(x), Some(y)) if x.datatype() == y.datatype() => match x.datatype() {
                Datatype::DateTime => x.as_date_time().zip(y.as_date_time()).map(|(p, q)| p.cmp(&q)),
                _ => Some(x.lexical().cmp(y.lexical())),
            },
            _ => None,
        },
    };
    match (op, ord) {
        (CompareOp::Eq, None) => Ok(a == b),
        (CompareOp::Ne, None) => Ok(a != b),
        (_, None) => Err(type_error(format!("cannot order {a} and {b}"))),
        (op, Some(o)) => Ok(match op {
            CompareOp::Eq => o == Ordering::Equal,
            CompareOp::Ne => o != Ordering::Equal,
            CompareOp::Lt => o == Ordering::Less,
            CompareOp::Gt => o == Ordering::Greater,
            CompareOp::Le => o != Ordering::Greater,
            CompareOp::Ge => o != Ordering::Less,
        }),
    }
}

enum AggState {
    Count(u64),
    Sum(Num),
    Concat(Vec<TermId>),
}

struct Group {
    states: Vec<AggState>,
    seen: Vec<Option<HashSet<TermId>>>,
}

struct Evaluator<'g> {
    graph: &'g Graph,
    plan: Plan,
    /// Values computed during evaluation, with ids after the graph's.
    extra: Vec<Value>,
    extra_ids: HashMap<Value, TermId>,
}

impl<'g> Evaluator<'g> {
    fn value(&self, id: TermId) -> &Value {
        let n = self.graph.term_count();
        if (id as usize) < n {
            self.graph.term(id)
        } else {
            &self.extra[id as usize - n]
        }
    }

    fn intern(&mut self, v: Value) -> TermId {
        if let Some(id) = self.graph.id(&v) {
            return id;
        }
        if let Some(&id) = self.extra_ids.get(&v) {
            return id;
        }
        let id = TermId::try_from(self.graph.term_count() + self.extra.len()).expect("fewer than 2^32 terms");
        self.extra.push(v.clone());
        self.extra_ids.insert(v, id);
        id
    }

    fn describe_row(&self, row: &[Option<TermId>]) -> String {
        let parts: Vec<String> = row
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|id| format!("?{}={}", self.plan.var_names[i], self.value(id))))
            .collect();
        parts.join(" ")
    }

    fn eval(&self, e: &CExpr, row: &[Option<TermId>], aggs: &[Value]) -> Result<Value, QueryError> {
        Ok(match e {
            CExpr::Const(v) => v.clone(),
            CExpr::Var(i) => match row.get(*i).copied().flatten() {
                Some(id) => self.value(id).clone(),
                None => {
                    return Err(QueryError::EvaluationError {
                        message: format!("?{} is unbound", self.plan.var_names[*i]),
                        row: self.describe_row(row),
                    })
                }
            },
            CExpr::Agg(i) => aggs[*i].clone(),
            CExpr::Compare(op, a, b) => {
                let (a, b) = (self.eval(a, row, aggs)?, self.eval(b, row, aggs)?);
                Value::Literal(LiteralValue::boolean(compare(*op, &a, &b)?))
            }
            CExpr::Arith(op, a, b) => {
                let (a, b) = (self.eval(a, row, aggs)?, self.eval(b, row, aggs)?);
                let (x, y) = match (Num::of(&a), Num::of(&b)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return Err(type_error(format!("arithmetic on non-numeric {a} and {b}"))),
                };
                Num::arith(*op, x, y)
                    .map_err(|message| QueryError::EvaluationError { message, row: self.describe_row(row) })?
                    .value()
            }
            CExpr::Negate(a) => {
                let a = self.eval(a, row, aggs)?;
                match Num::of(&a) {
                    Some(Num::Int(i)) => Num::Int(-i).value(),
                    Some(Num::Dec(d)) => Num::Dec(-d).value(),
                    None => return Err(type_error(format!("cannot negate {a}"))),
                }
            }
            CExpr::Not(a) => Value::Literal(LiteralValue::boolean(!boolean(&self.eval(a, row, aggs)?)?)),
            CExpr::And(a, b) => {
                let r = boolean(&self.eval(a, row, aggs)?)? && boolean(&self.eval(b, row, aggs)?)?;
                Value::Literal(LiteralValue::boolean(r))
            }
            CExpr::Or(a, b) => {
                let r = boolean(&self.eval(a, row, aggs)?)? || boolean(&self.eval(b, row, aggs)?)?;
                Value::Literal(LiteralValue::boolean(r))
            }
            CExpr::If(c, a, b) => {
                if boolean(&self.eval(c, row, aggs)?)? {
                    self.eval(a, row, aggs)?
                } else {
                    self.eval(b, row, aggs)?
                }
            }
        })
    }

    fn passes(&self, filter: usize, row: &[Option<TermId>]) -> Result<bool, QueryError> {
        boolean(&self.eval(&self.plan.filters[filter], row, &[])?)
    }

    fn bound(&self, slot: &Slot, row: &[Option<TermId>]) -> Result<Option<TermId>, ()> {
        match slot {
            Slot::Const(Some(id)) => Ok(Some(*id)),
            Slot::Const(None) => Err(()),
            Slot::Var(v) => Ok(row[*v]),
        }
    }

    /// Rough result size of `p` given the bound variables; lower joins first.
    fn cost(&self, p: &CPattern, bound: &[bool]) -> usize {
        let is_bound = |s: &Slot| match s {
            Slot::Const(_) => true,
            Slot::Var(v) => bound[*v],
        };
        let (sb, ob) = (is_bound(&p.s), is_bound(&p.o));
        let unknown = self.graph.len().max(1);
        let per = |total: usize, keys: usize| total.div_ceil(keys.max(1));
        if matches!(p.s, Slot::Const(None)) || matches!(p.o, Slot::Const(None)) {
            return 0;
        }
        match &p.v {
            CVerb::Path(IdPath::Pred(None)) => 0,
            CVerb::Path(IdPath::Pred(Some(pid))) => {
                let total = self.graph.pairs(*pid).len();
                match (sb, ob, &p.s, &p.o) {
                    (true, true, ..) => 1,
                    (true, false, Slot::Const(Some(s)), _) => self.graph.objects(*s, *pid).len(),
                    (true, false, ..) => per(total, self.graph.subject_count(*pid)),
                    (false, true, _, Slot::Const(Some(o))) => self.graph.subjects(*pid, *o).len(),
                    (false, true, ..) => per(total, self.graph.object_count(*pid)),
                    (false, false, ..) => total,
                }
            }
            // complex paths and variable predicates: cheap only once anchored
            _ => match (sb, ob) {
                (true, true) => 2,
                (true, false) | (false, true) => 64,
                (false, false) => unknown.saturating_mul(64),
            },
        }
    }

    /// Joins one component, applying its filters as soon as their variables
    /// are bound.
    fn eval_component(&self, comp: &Component, nvars: usize) -> Result<Vec<Row>, QueryError> {
        let mut rows: Vec<Row> = vec![vec![None; nvars]];
        let mut bound = vec![false; nvars];
        let mut remaining: Vec<usize> = comp.patterns.clone();
        let mut pending_filters: Vec<usize> = comp.filters.clone();
        while !remaining.is_empty() && !rows.is_empty() {
            let (k, _) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(k, &p)| (self.cost(&self.plan.patterns[p], &bound), *k))
                .expect("non-empty");
            let p = remaining.remove(k);
            let pattern = &self.plan.patterns[p];
            rows = self.extend(pattern, rows);
            for &v in &pattern.vars {
                bound[v] = true;
            }
            let mut keep = Vec::new();
            for f in pending_filters.drain(..) {
                let mut fv = Vec::new();
                expr_vars(&self.plan.filters[f], &mut fv);
                if fv.iter().all(|v| bound[*v]) {
                    let mut out = Vec::with_capacity(rows.len());
                    for r in rows {
                        if self.passes(f, &r)? {
                            out.push(r);
                        }
                    }
                    rows = out;
                } else {
                    keep.push(f);
                }
            }
            pending_filters = keep;
        }
        Ok(rows)
    }

    fn extend(&self, p: &CPattern, rows: Vec<Row>) -> Vec<Row> {
        let mut out = Vec::new();
        let mut memo: HashMap<(TermId, bool), Rc<Vec<TermId>>> = HashMap::new();
        let mut reach = |start: TermId, path: &IdPath, forward: bool| -> Rc<Vec<TermId>> {
            memo.entry((start, forward))
                .or_insert_with(|| {
                    let dir = if forward { Direction::Forward } else { Direction::Backward };
                    Rc::new(step(self.graph, &[start], path, dir))
                })
                .clone()
        };
        for row in rows {
            let (Ok(s), Ok(o)) = (self.bound(&p.s, &row), self.bound(&p.o, &row)) else { continue };
            let preds: Vec<(Option<usize>, IdPath)> = match &p.v {
                CVerb::Path(path) => vec![(None, path.clone())],
                CVerb::Var(v) => match row[*v] {
                    Some(pid) => vec![(None, IdPath::Pred(Some(pid)))],
                    None => self.graph.predicates().iter().map(|pid| (Some(*v), IdPath::Pred(Some(*pid)))).collect(),
                },
            };
            for (pvar, path) in preds {
                let emit = |sid: TermId, oid: TermId, out: &mut Vec<Row>| {
                    let mut r = row.clone();
                    for (slot, id) in [(&p.s, sid), (&p.o, oid)] {
                        if let Slot::Var(v) = slot {
                            match r[*v] {
                                Some(existing) if existing != id => return,
                                _ => r[*v] = Some(id),
                            }
                        }
                    }
                    if let (Some(v), IdPath::Pred(Some(pid))) = (pvar, &path) {
                        match r[v] {
                            Some(existing) if existing != *pid => return,
                            _ => r[v] = Some(*pid),
                        }
                    }
                    out.push(r);
                };
                match (&path, s, o) {
                    (IdPath::Pred(Some(pid)), Some(s), Some(o)) => {
                        if self.graph.objects(s, *pid).contains(&o) {
                            emit(s, o, &mut out);
                        }
                    }
                    (IdPath::Pred(Some(pid)), Some(s), None) => {
                        for &o in self.graph.objects(s, *pid) {
                            emit(s, o, &mut out);
                        }
                    }
                    (IdPath::Pred(Some(pid)), None, Some(o)) => {
                        for &s in self.graph.subjects(*pid, o) {
                            emit(s, o, &mut out);
                        }
                    }
                    (IdPath::Pred(Some(pid)), None, None) => {
                        for &(s, o) in self.graph.pairs(*pid) {
                            emit(s, o, &mut out);
                        }
                    }
                    (IdPath::Pred(None), ..) => {}
                    (path, Some(s), Some(o)) => {
                        if reach(s, path, true).contains(&o) {
                            emit(s, o, &mut out);
                        }
                    }
                    (path, Some(s), None) => {
                        for &o in reach(s, path, true).iter() {
                            emit(s, o, &mut out);
                        }
                    }
                    (path, None, Some(o)) => {
                        for &s in reach(o, path, false).iter() {
                            emit(s, o, &mut out);
                        }
                    }
                    (path, None, None) => {
                        for &s in self.graph.nodes() {
                            for &o in reach(s, path, true).iter() {
                                emit(s, o, &mut out);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn agg_input(&mut self, spec: usize, row: &[Option<TermId>]) -> Result<Option<TermId>, QueryError> {
        match &self.plan.aggs[spec].arg {
            AggArg::Star => Ok(None),
            AggArg::Var(v) => Ok(row[*v]),
            AggArg::Expr(e) => {
                let v = self.eval(e, row, &[])?;
                Ok(Some(self.intern(v)))
            }
        }
    }

    fn new_group(&self) -> Group {
        let states = self
            .plan
            .aggs
            .iter()
            .map(|a| match a.kind {
                AggregateKind::Count => AggState::Count(0),
                AggregateKind::Sum => AggState::Sum(Num::Int(0)),
                AggregateKind::GroupConcat { .. } => AggState::Concat(Vec::new()),
            })
            .collect();
        let seen = self.plan.aggs.iter().map(|a| a.distinct.then(HashSet::new)).collect();
        Group { states, seen }
    }

    fn accumulate(&mut self, group: &mut Group, row: &[Option<TermId>]) -> Result<(), QueryError> {
        for i in 0..self.plan.aggs.len() {
            let star = matches!(self.plan.aggs[i].arg, AggArg::Star);
            let input = self.agg_input(i, row)?;
            if input.is_none() && !star {
                continue;
            }
            if let (Some(seen), Some(id)) = (group.seen[i].as_mut(), input) {
                if !seen.insert(id) {
                    continue;
                }
            }
            match &mut group.states[i] {
                AggState::Count(n) => *n += 1,
                AggState::Sum(acc) => {
                    let v = self.value(input.expect("non-star"));
                    let x = Num::of(v).ok_or_else(|| type_error(format!("SUM over non-numeric {v}")))?;
                    *acc = Num::arith(ArithOp::Add, *acc, x)
                        .map_err(|message| QueryError::EvaluationError { message, row: self.describe_row(row) })?;
                }
                AggState::Concat(items) => items.push(input.expect("non-star")),
            }
        }
        Ok(())
    }

    fn finish_group(&self, group: &Group) -> Vec<Value> {
        group
            .states
            .iter()
            .zip(&self.plan.aggs)
            .map(|(state, spec)| match (state, &spec.kind) {
                (AggState::Count(n), _) => Value::Literal(LiteralValue::integer(*n as i64)),
                (AggState::Sum(acc), _) => acc.value(),
                (AggState::Concat(items), AggregateKind::GroupConcat { separator }) => {
                    let mut parts: Vec<String> = items.iter().map(|id| self.value(*id).to_string()).collect();
                    parts.sort();
                    Value::Literal(LiteralValue::string(parts.join(separator)))
                }
                (AggState::Concat(_), _) => unreachable!("concat state only for GROUP_CONCAT"),
            })
            .collect()
    }

    fn run(mut self) -> Result<SolutionTable, QueryError> {
        let nvars = self.plan.var_names.len();
        let mut parts: Vec<(Vec<usize>, Vec<Row>)> = Vec::new();
        for comp in &self.plan.components {
            let rows = self.eval_component(comp, nvars)?;
            parts.push((comp.vars.clone(), rows));
        }
        let empty = parts.iter().any(|(_, rows)| rows.is_empty());

        let mut groups: HashMap<Vec<Option<TermId>>, usize> = HashMap::new();
        let mut group_list: Vec<(Vec<Option<TermId>>, Group)> = Vec::new();
        let mut plain_rows: Vec<Vec<Option<Value>>> = Vec::new();
        if self.plan.grouped && self.plan.group_vars.is_empty() {
            group_list.push((Vec::new(), self.new_group()));
            groups.insert(Vec::new(), 0);
        }

        if !empty {
            let mut idx = vec![0usize; parts.len()];
            let mut row: Row = vec![None; nvars];
            let mut key: Vec<Option<TermId>> = Vec::with_capacity(self.plan.group_vars.len());
            let late: Vec<usize> = self.plan.late_filters.clone();
            let binds = std::mem::take(&mut self.plan.binds);
            loop {
                for (c, (vars, rows)) in parts.iter().enumerate() {
                    let src = &rows[idx[c]];
                    for &v in vars {
                        row[v] = src[v];
                    }
                }
                for (_, target) in &binds {
                    row[*target] = None;
                }
                for (expr, target) in &binds {
                    let v = self.eval(expr, &row, &[])?;
                    row[*target] = Some(self.intern(v));
                }
                let mut keep = true;
                for &f in &late {
                    if !self.passes(f, &row)? {
                        keep = false;
                        break;
                    }
                }
                if keep {
                    if self.plan.grouped {
                        key.clear();
                        key.extend(self.plan.group_vars.iter().map(|v| row[*v]));
                        let gi = match groups.get(key.as_slice()) {
                            Some(&gi) => gi,
                            None => {
                                group_list.push((key.clone(), self.new_group()));
                                groups.insert(key.clone(), group_list.len() - 1);
                                group_list.len() - 1
                            }
                        };
                        self.accumulate(&mut group_list[gi].1, &row)?;
                    } else {
                        let mut out = Vec::with_capacity(self.plan.projection.len());
                        for (_, e) in &self.plan.projection {
                            out.push(match e {
                                CExpr::Var(v) => row[*v].map(|id| self.value(id).clone()),
                                e => Some(self.eval(e, &row, &[])?),
                            });
                        }
                        plain_rows.push(out);
                    }
                }
                // odometer over the components' rows
                let mut c = parts.len();
                let done = loop {
                    if c == 0 {
                        break true;
                    }
                    c -= 1;
                    idx[c] += 1;
                    if idx[c] < parts[c].1.len() {
                        break false;
                    }
                    idx[c] = 0;
                };
                if done {
                    break;
                }
            }
        }

        let columns: Vec<String> = self.plan.projection.iter().map(|(n, _)| n.clone()).collect();
        let canon = |v: &Option<Value>| v.as_ref().map(|v| v.to_string()).unwrap_or_default();
        let rows = if self.plan.grouped {
            let mut keyed: Vec<(Vec<String>, Vec<Option<Value>>)> = Vec::with_capacity(group_list.len());
            for (key, group) in &group_list {
                let aggs = self.finish_group(group);
                let mut row: Row = vec![None; nvars];
                for (v, id) in self.plan.group_vars.iter().zip(key) {
                    row[*v] = *id;
                }
                let mut out = Vec::with_capacity(columns.len());
                for (_, e) in &self.plan.projection {
                    out.push(match e {
                        CExpr::Var(v) => row[*v].map(|id| self.value(id).clone()),
                        e => Some(self.eval(e, &row, &aggs)?),
                    });
                }
                let sort_key = key.iter().map(|id| id.map(|i| self.value(i).to_string()).unwrap_or_default()).collect();
                keyed.push((sort_key, out));
            }
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            keyed.into_iter().map(|(_, r)| r).collect()
        } else {
            let mut rows = plain_rows;
            rows.sort_by_cached_key(|r| r.iter().map(canon).collect::<Vec<_>>());
            rows
        };
        Ok(SolutionTable { columns, rows })
    }
}

/// Evaluates a parsed query. Pure: equal inputs give equal tables.
pub fn evaluate(graph: &Graph, ast: &QueryAst) -> Result<SolutionTable, QueryError> {
    let plan = compile(graph, ast);
    Evaluator { graph, plan, extra: Vec::new(), extra_ids: HashMap::new() }.run()
}
