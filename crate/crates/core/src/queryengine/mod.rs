//! A small SPARQL SELECT engine: basic graph patterns with property paths,
//! FILTER, BIND, GROUP BY and COUNT/SUM/GROUP_CONCAT.

use std::fmt::Write as _;

use serde_json::{json, Map};
use thiserror::Error;

use crate::ldgraph::{LinkedDocument, Value};

pub mod ast;
mod eval;
mod graph;
mod parser;

pub use ast::{PathExpr, QueryAst};
pub use eval::{evaluate, DIVISION_DIGITS};
pub use graph::{eval_path, nullable, Graph, TermId};
pub use parser::parse_query;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    SyntaxError { line: usize, col: usize, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("evaluation error: {message} [{row}]")]
    EvaluationError { message: String, row: String },
}

/// Query results in deterministic row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionTable {
    pub columns: Vec<String>,
    /// `None` is an unbound cell.
    pub rows: Vec<Vec<Option<Value>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Table,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv, table or json)")),
        }
    }
}

fn cell(v: &Option<Value>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl SolutionTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell by row index and column name.
    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        self.rows.get(row)?.get(self.column(column)?)?.as_ref()
    }

    /// Header row plus canonical value strings, RFC 4180 quoting.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn to_table(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| cells.iter().map(|r| r[i].chars().count()).chain([self.columns[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, vals: &[String]| {
            let parts: Vec<String> = vals.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.columns);
        line(&mut out, &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
        for r in &cells {
            line(&mut out, r);
        }
        out
    }

    /// The standard JSON results layout (`head.vars`, `results.bindings`).
    pub fn to_json(&self) -> String {
        let bindings: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (name, v) in self.columns.iter().zip(row) {
                    let b = match v {
                        None => continue,
                        Some(Value::Node(i)) => json!({"type": "uri", "value": i.as_str()}),
                        Some(Value::Literal(l)) => {
                            json!({"type": "literal", "value": l.lexical(), "datatype": l.datatype().iri().as_str()})
                        }
                    };
                    m.insert(name.clone(), b);
                }
                serde_json::Value::Object(m)
            })
            .collect();
        let doc = json!({"head": {"vars": self.columns}, "results": {"bindings": bindings}});
        let mut s = serde_json::to_string_pretty(&doc).expect("json");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => self.to_table(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Bundled queries by name: input files per obstacle-free scenario (as
/// written and with the explicit run join) and failure rate per scenario.
pub const COOKBOOK: [(&str, &str); 3] = [
    ("input_closure", include_str!("../../queries/input_closure.rq")),
    ("input_closure_joined", include_str!("../../queries/input_closure_joined.rq")),
    ("failure_rate", include_str!("../../queries/failure_rate.rq")),
];

pub fn cookbook(name: &str) -> Option<&'static str> {
    COOKBOOK.iter().find(|(n, _)| *n == name).map(|(_, q)| *q)
}

/// Parses and evaluates `text` against a document.
pub fn run_query(doc: &LinkedDocument, text: &str) -> Result<SolutionTable, QueryError> {
    let ast = parse_query(text)?;
    evaluate(&Graph::new(doc), &ast)
}

#[cfg(test)]
mod tests;
