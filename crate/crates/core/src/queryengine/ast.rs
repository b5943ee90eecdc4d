use std::collections::BTreeSet;
use std::fmt;

use crate::ldgraph::LiteralValue;
use crate::vocab::{Iri, PrefixTable};

/// Property path. Sequences and alternations always hold two or more
/// members; the parser flattens singletons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathExpr {
    Predicate(Iri),
    Sequence(Vec<PathExpr>),
    Alternative(Vec<PathExpr>),
    ZeroOrMore(Box<PathExpr>),
}

impl PathExpr {
    pub fn sequence(mut parts: Vec<PathExpr>) -> PathExpr {
        if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            PathExpr::Sequence(parts)
        }
    }

    pub fn alternative(mut parts: Vec<PathExpr>) -> PathExpr {
        if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            PathExpr::Alternative(parts)
        }
    }

    pub fn star(inner: PathExpr) -> PathExpr {
        PathExpr::ZeroOrMore(Box::new(inner))
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, parts: &[PathExpr], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")
        };
        match self {
            PathExpr::Predicate(p) => write!(f, "<{p}>"),
            PathExpr::Sequence(parts) => join(f, parts, "/"),
            PathExpr::Alternative(parts) => join(f, parts, "|"),
            PathExpr::ZeroOrMore(inner) => write!(f, "{inner}*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermPattern {
    Var(String),
    Iri(Iri),
    Literal(LiteralValue),
}

impl TermPattern {
    pub fn var(&self) -> Option<&str> {
        match self {
            TermPattern::Var(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verb {
    Var(String),
    Path(PathExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: TermPattern,
    pub verb: Verb,
    pub object: TermPattern,
}

impl TriplePattern {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        let verb = match &self.verb {
            Verb::Var(v) => Some(v.as_str()),
            Verb::Path(_) => None,
        };
        self.subject.var().into_iter().chain(verb).chain(self.object.var())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregateKind {
    /// `None` argument is `COUNT(*)`.
    Count,
    Sum,
    GroupConcat { separator: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub kind: AggregateKind,
    pub distinct: bool,
    pub arg: Option<Box<Expression>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expression {
    Literal(LiteralValue),
    Iri(Iri),
    Var(String),
    Compare(CompareOp, Box<Expression>, Box<Expression>),
    Arith(ArithOp, Box<Expression>, Box<Expression>),
    Negate(Box<Expression>),
    Not(Box<Expression>),
    And(Box<Expression>, Box<Expression>),
    Or(Box<Expression>, Box<Expression>),
    If(Box<Expression>, Box<Expression>, Box<Expression>),
    Aggregate(Aggregate),
}

impl Expression {
    /// Pre-order walk over this expression and its children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expression)) {
        f(self);
        match self {
            Expression::Literal(_) | Expression::Iri(_) | Expression::Var(_) => {}
            Expression::Negate(a) | Expression::Not(a) => a.walk(f),
            Expression::Compare(_, a, b) | Expression::Arith(_, a, b) | Expression::And(a, b) | Expression::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expression::If(c, a, b) => {
                c.walk(f);
                a.walk(f);
                b.walk(f);
            }
            Expression::Aggregate(agg) => {
                if let Some(arg) = &agg.arg {
                    arg.walk(f);
                }
            }
        }
    }

    pub fn has_aggregate(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expression::Aggregate(_)));
        found
    }

    /// Variables referenced outside of aggregates.
    pub fn free_vars(&self) -> BTreeSet<&str> {
        fn go<'a>(e: &'a Expression, out: &mut BTreeSet<&'a str>) {
            match e {
                Expression::Var(v) => {
                    out.insert(v);
                }
                Expression::Aggregate(_) | Expression::Literal(_) | Expression::Iri(_) => {}
                Expression::Negate(a) | Expression::Not(a) => go(a, out),
                Expression::Compare(_, a, b)
                | Expression::Arith(_, a, b)
                | Expression::And(a, b)
                | Expression::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Expression::If(c, a, b) => {
                    go(c, out);
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn aggregates(&self) -> Vec<&Aggregate> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expression::Aggregate(a) = e {
                out.push(a);
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Var(String),
    Expr { expr: Expression, alias: String },
}

impl Projection {
    pub fn name(&self) -> &str {
        match self {
            Projection::Var(v) => v,
            Projection::Expr { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bind {
    pub expr: Expression,
    pub var: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    /// Built-in prefixes plus the query's own declarations.
    pub prefixes: PrefixTable,
    pub projection: Vec<Projection>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Expression>,
    pub binds: Vec<Bind>,
    pub group_by: Vec<String>,
}

impl QueryAst {
    pub fn columns(&self) -> Vec<&str> {
        self.projection.iter().map(Projection::name).collect()
    }

    /// Grouped when there is a GROUP BY or any projected aggregate.
    pub fn is_grouped(&self) -> bool {
        !self.group_by.is_empty()
            || self.projection.iter().any(|p| matches!(p, Projection::Expr { expr, .. } if expr.has_aggregate()))
    }
}
