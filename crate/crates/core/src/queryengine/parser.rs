//! Tokenizer and recursive-descent parser for the supported SELECT subset.

use std::collections::HashSet;

use super::ast::*;
use super::QueryError;
use crate::ldgraph::{rdf_type, LiteralValue};
use crate::vocab::{Datatype, Iri, PrefixTable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    IriRef(String),
    /// `prefix:local`; the prefix may be empty.
    PName(String, String),
    Word(String),
    Str(String),
    Integer(String),
    Decimal(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: [&str; 22] = [
    "&&", "||", "!=", "<=", ">=", "^^", "{", "}", "(", ")", ".", ";", ",", "=", "<", ">", "+", "-", "*", "/", "|", "!",
];

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| QueryError::SyntaxError { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let start = i;
        let advance_to = |j: usize, line: &mut usize, col: &mut usize| {
            for &ch in &chars[start..j] {
                if ch == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            }
        };
        if c.is_whitespace() {
            advance_to(i + 1, &mut line, &mut col);
            i += 1;
            continue;
        }
        if c == '#' {
            let mut j = i;
            while j < chars.len() && chars[j] != '\n' {
                j += 1;
            }
            advance_to(j, &mut line, &mut col);
            i = j;
            continue;
        }
        let (tok, j) = if c == '?' || c == '$' {
            let mut j = i + 1;
            while j < chars.len() && is_name_char(chars[j]) {
                j += 1;
            }
            if j == i + 1 {
                (Tok::Punct("?"), j)
            } else {
                (Tok::Var(chars[i + 1..j].iter().collect()), j)
            }
        } else if c == '<' && iri_end(&chars, i).is_some() {
            let j = iri_end(&chars, i).expect("checked");
            (Tok::IriRef(chars[i + 1..j].iter().collect()), j + 1)
        } else if c == '"' || c == '\'' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None | Some('\n') => return Err(err(tline, tcol, "unterminated string".into())),
                    Some(&q) if q == c => break,
                    Some('\\') => {
                        let e = chars.get(j + 1).copied();
                        s.push(match e {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some(e @ ('"' | '\'' | '\\')) => e,
                            _ => return Err(err(tline, tcol, "invalid escape in string".into())),
                        });
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            (Tok::Str(s), j + 1)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let mut tok = None;
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                tok = Some(Tok::Decimal(chars[i..j].iter().collect()));
            }
            if matches!(chars.get(j), Some('e' | 'E')) {
                return Err(QueryError::UnsupportedFeature("double literal".into()));
            }
            (tok.unwrap_or_else(|| Tok::Integer(chars[i..j].iter().collect())), j)
        } else if is_name_char(c) || c == ':' {
            let mut j = i;
            while j < chars.len() && (is_name_char(chars[j]) || chars[j] == '-') {
                j += 1;
            }
            if chars.get(j) == Some(&':') {
                let prefix: String = chars[i..j].iter().collect();
                let mut k = j + 1;
                while k < chars.len() && (is_name_char(chars[k]) || matches!(chars[k], '-' | '.')) {
                    k += 1;
                }
                while k > j + 1 && chars[k - 1] == '.' {
                    k -= 1;
                }
                (Tok::PName(prefix, chars[j + 1..k].iter().collect()), k)
            } else {
                (Tok::Word(chars[i..j].iter().collect()), j)
            }
        } else {
            let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => (Tok::Punct(p), i + p.len()),
                None if c == '^' => (Tok::Punct("^"), i + 1),
                None => return Err(err(tline, tcol, format!("unexpected character {c:?}"))),
            }
        };
        advance_to(j, &mut line, &mut col);
        i = j;
        out.push(Token { tok, line: tline, col: tcol });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// `<...>` is an IRI when it closes before any whitespace.
fn iri_end(chars: &[char], start: usize) -> Option<usize> {
    let mut j = start + 1;
    if matches!(chars.get(j), Some('=') | None) || chars[j].is_whitespace() {
        return None;
    }
    while let Some(&c) = chars.get(j) {
        if c == '>' {
            return Some(j);
        }
        if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}') {
            return None;
        }
        j += 1;
    }
    None
}

/// Query forms and clauses outside the subset, by leading keyword.
const UNSUPPORTED_WORDS: [(&str, &str); 19] = [
    ("OPTIONAL", "OPTIONAL"),
    ("UNION", "UNION"),
    ("MINUS", "MINUS"),
    ("SERVICE", "SERVICE"),
    ("GRAPH", "GRAPH"),
    ("VALUES", "VALUES"),
    ("ORDER", "ORDER BY"),
    ("LIMIT", "LIMIT"),
    ("OFFSET", "OFFSET"),
    ("HAVING", "HAVING"),
    ("CONSTRUCT", "CONSTRUCT"),
    ("ASK", "ASK"),
    ("DESCRIBE", "DESCRIBE"),
    ("INSERT", "INSERT"),
    ("DELETE", "DELETE"),
    ("LOAD", "LOAD"),
    ("FROM", "FROM"),
    ("EXISTS", "EXISTS"),
    ("NOT", "NOT EXISTS"),
];

const UNSUPPORTED_AGGREGATES: [&str; 4] = ["AVG", "MIN", "MAX", "SAMPLE"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prefixes: PrefixTable,
}

type PResult<T> = Result<T, QueryError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> QueryError {
        let t = &self.toks[self.pos];
        QueryError::SyntaxError { line: t.line, col: t.col, message: message.into() }
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(word))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_word(&mut self, word: &str) -> bool {
        let hit = self.is_word(word);
        if hit {
            self.next();
        }
        hit
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.next();
        }
        hit
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        if self.eat_word(word) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected {word}, found {}", describe(self.peek()))))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{p}', found {}", describe(self.peek()))))
        }
    }

    fn expect_var(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(v)
            }
            other => Err(self.error_here(format!("expected a variable, found {}", describe(&other)))),
        }
    }

    /// Rejects a keyword outside the subset with its construct name.
    fn check_unsupported(&self) -> PResult<()> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if let Some((_, name)) = UNSUPPORTED_WORDS.iter().find(|(k, _)| *k == upper) {
                return Err(QueryError::UnsupportedFeature((*name).into()));
            }
        }
        Ok(())
    }

    fn resolve_iri(&self, raw: &str) -> PResult<Iri> {
        let full = match self.prefixes.base() {
            Some(base) if !raw.contains(':') => format!("{base}{raw}"),
            _ => raw.to_string(),
        };
        Iri::new(full).map_err(|e| self.error_here(e.to_string()))
    }

    fn resolve_pname(&self, prefix: &str, local: &str) -> PResult<Iri> {
        let ns = self.prefixes.get(prefix).ok_or_else(|| self.error_here(format!("undeclared prefix {prefix:?}")))?;
        Iri::new(format!("{ns}{local}")).map_err(|e| self.error_here(e.to_string()))
    }

    fn query(&mut self) -> PResult<QueryAst> {
        self.prologue()?;
        self.check_unsupported()?;
        self.expect_word("SELECT")?;
        if self.is_word("DISTINCT") || self.is_word("REDUCED") {
            let w = match self.peek() {
                Tok::Word(w) => w.to_ascii_uppercase(),
                _ => unreachable!(),
            };
            return Err(QueryError::UnsupportedFeature(format!("SELECT {w}")));
        }
        let projection = self.projection()?;
        self.check_unsupported()?;
        self.eat_word("WHERE");
        let mut ast = QueryAst {
            prefixes: PrefixTable::standard(),
            projection,
            patterns: Vec::new(),
            filters: Vec::new(),
            binds: Vec::new(),
            group_by: Vec::new(),
        };
        self.group(&mut ast)?;
        if self.eat_word("GROUP") {
            self.expect_word("BY")?;
            loop {
                match self.peek() {
                    Tok::Var(_) => ast.group_by.push(self.expect_var()?),
                    Tok::Punct("(") => return Err(QueryError::UnsupportedFeature("GROUP BY expression".into())),
                    _ => break,
                }
            }
            if ast.group_by.is_empty() {
                return Err(self.error_here("GROUP BY needs at least one variable"));
            }
        }
        self.check_unsupported()?;
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.error_here(format!("unexpected {} after query", describe(self.peek()))));
        }
        ast.prefixes = self.prefixes.clone();
        Ok(ast)
    }

    fn prologue(&mut self) -> PResult<()> {
        loop {
            if self.eat_word("PREFIX") {
                let (prefix, local) = match self.next().tok {
                    Tok::PName(p, l) => (p, l),
                    other => return Err(self.error_here(format!("expected prefix name, found {}", describe(&other)))),
                };
                if !local.is_empty() {
                    return Err(self.error_here("prefix declaration must end with ':'"));
                }
                let iri = match self.next().tok {
                    Tok::IriRef(i) => self.resolve_iri(&i)?,
                    other => return Err(self.error_here(format!("expected <namespace>, found {}", describe(&other)))),
                };
                self.prefixes.insert(prefix, iri);
            } else if self.eat_word("BASE") {
                let iri = match self.next().tok {
                    Tok::IriRef(i) => Iri::new(i).map_err(|e| self.error_here(e.to_string()))?,
                    other => return Err(self.error_here(format!("expected <base>, found {}", describe(&other)))),
                };
                self.prefixes.set_base(Some(iri));
            } else {
                return Ok(());
            }
        }
    }

    fn projection(&mut self) -> PResult<Vec<Projection>> {
        let mut out = Vec::new();
        if self.eat_punct("*") {
            return Ok(out);
        }
        loop {
            match self.peek().clone() {
                Tok::Var(v) => {
                    self.next();
                    out.push(Projection::Var(v));
                }
                Tok::Punct("(") => {
                    self.next();
                    let expr = self.expression()?;
                    self.expect_word("AS")?;
                    let alias = self.expect_var()?;
                    self.expect_punct(")")?;
                    out.push(Projection::Expr { expr, alias });
                }
                // bare `AGG(...) AS ?v`, as some published queries write it
                Tok::Word(w) if self.is_aggregate_name(&w) => {
                    let expr = self.primary()?;
                    self.expect_word("AS")?;
                    let alias = self.expect_var()?;
                    out.push(Projection::Expr { expr, alias });
                }
                _ => break,
            }
        }
        if out.is_empty() {
            return Err(self.error_here("SELECT needs '*' or at least one variable"));
        }
        Ok(out)
    }

    fn is_aggregate_name(&self, w: &str) -> bool {
        let u = w.to_ascii_uppercase();
        matches!(u.as_str(), "COUNT" | "SUM" | "GROUP_CONCAT") || UNSUPPORTED_AGGREGATES.contains(&u.as_str())
    }

    fn group(&mut self, ast: &mut QueryAst) -> PResult<()> {
        self.expect_punct("{")?;
        loop {
            self.check_unsupported()?;
            match self.peek().clone() {
                Tok::Punct("}") => {
                    self.next();
                    return Ok(());
                }
                Tok::Punct(".") => {
                    self.next();
                }
                Tok::Punct("{") => return Err(self.nested_group()),
                Tok::Word(w) if w.eq_ignore_ascii_case("FILTER") => {
                    self.next();
                    if !self.is_punct("(") {
                        return Err(match self.peek() {
                            Tok::Word(w) => QueryError::UnsupportedFeature(format!("function {}", w.to_ascii_uppercase())),
                            _ => self.error_here("expected '(' after FILTER"),
                        });
                    }
                    let expr = self.primary()?;
                    ast.filters.push(expr);
                }
                Tok::Word(w) if w.eq_ignore_ascii_case("BIND") => {
                    self.next();
                    self.expect_punct("(")?;
                    let expr = self.expression()?;
                    self.expect_word("AS")?;
                    let var = self.expect_var()?;
                    self.expect_punct(")")?;
                    ast.binds.push(Bind { expr, var });
                }
                Tok::Word(w) if w.eq_ignore_ascii_case("SELECT") => {
                    return Err(QueryError::UnsupportedFeature("subquery".into()))
                }
                Tok::Eof => return Err(self.error_here("unterminated group, expected '}'")),
                _ => self.triples_block(ast)?,
            }
        }
    }

    /// Classifies a nested `{ ... }`: subquery, UNION or plain nesting.
    fn nested_group(&mut self) -> QueryError {
        if matches!(self.peek_at(1), Tok::Word(w) if w.eq_ignore_ascii_case("SELECT")) {
            return QueryError::UnsupportedFeature("subquery".into());
        }
        let mut depth = 0usize;
        let mut i = self.pos;
        while i < self.toks.len() {
            match self.toks[i].tok {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                Tok::Eof => break,
                _ => {}
            }
            i += 1;
        }
        if matches!(self.toks.get(i + 1).map(|t| &t.tok), Some(Tok::Word(w)) if w.eq_ignore_ascii_case("UNION")) {
            QueryError::UnsupportedFeature("UNION".into())
        } else {
            QueryError::UnsupportedFeature("nested group pattern".into())
        }
    }

    fn triples_block(&mut self, ast: &mut QueryAst) -> PResult<()> {
        let subject = self.term(false)?;
        loop {
            let verb = self.verb()?;
            loop {
                let object = self.term(true)?;
                ast.patterns.push(TriplePattern { subject: subject.clone(), verb: verb.clone(), object });
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                break;
            }
            while self.eat_punct(";") {}
            if self.is_punct(".") || self.is_punct("}") {
                break;
            }
        }
        // a '.' is only needed between two triples blocks
        if matches!(self.peek(), Tok::Var(_) | Tok::IriRef(_) | Tok::PName(..)) {
            self.expect_punct(".")?;
        }
        Ok(())
    }

    fn term(&mut self, allow_literal: bool) -> PResult<TermPattern> {
        let t = self.next();
        let term = match t.tok {
            Tok::Var(v) => TermPattern::Var(v),
            Tok::IriRef(i) => TermPattern::Iri(self.resolve_iri(&i)?),
            Tok::PName(p, l) => TermPattern::Iri(self.resolve_pname(&p, &l)?),
            Tok::Str(_) | Tok::Integer(_) | Tok::Decimal(_) | Tok::Word(_) if allow_literal => {
                self.pos -= 1;
                match self.literal()? {
                    Some(l) => TermPattern::Literal(l),
                    None => return Err(self.error_here(format!("expected an RDF term, found {}", describe(self.peek())))),
                }
            }
            Tok::Punct("[") | Tok::Punct("(") => return Err(QueryError::UnsupportedFeature("blank node syntax".into())),
            other => {
                self.pos -= 1;
                return Err(self.error_here(format!("expected an RDF term, found {}", describe(&other))));
            }
        };
        Ok(term)
    }

    /// String, numeric or boolean literal at the cursor.
    fn literal(&mut self) -> PResult<Option<LiteralValue>> {
        let lit = match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                if self.is_punct("^^") || matches!(self.peek(), Tok::Punct("^")) {
                    return Err(QueryError::UnsupportedFeature("datatyped literal".into()));
                }
                LiteralValue::string(s)
            }
            Tok::Integer(n) => {
                self.next();
                LiteralValue::new(&n, Datatype::Integer).map_err(|e| self.error_here(e.to_string()))?
            }
            Tok::Decimal(n) => {
                self.next();
                LiteralValue::new(&n, Datatype::Decimal).map_err(|e| self.error_here(e.to_string()))?
            }
            Tok::Word(w) if w == "true" || w == "false" => {
                self.next();
                LiteralValue::boolean(w == "true")
            }
            _ => return Ok(None),
        };
        Ok(Some(lit))
    }

    fn verb(&mut self) -> PResult<Verb> {
        if let Tok::Var(v) = self.peek().clone() {
            self.next();
            return Ok(Verb::Var(v));
        }
        Ok(Verb::Path(self.path()?))
    }

    fn path(&mut self) -> PResult<PathExpr> {
        let mut alts = vec![self.path_sequence()?];
        while self.eat_punct("|") {
            alts.push(self.path_sequence()?);
        }
        Ok(PathExpr::alternative(alts))
    }

    fn path_sequence(&mut self) -> PResult<PathExpr> {
        let mut parts = vec![self.path_elt()?];
        while self.eat_punct("/") {
            parts.push(self.path_elt()?);
        }
        Ok(PathExpr::sequence(parts))
    }

    fn path_elt(&mut self) -> PResult<PathExpr> {
        let primary = match self.peek().clone() {
            Tok::PName(p, l) => {
                self.next();
                PathExpr::Predicate(self.resolve_pname(&p, &l)?)
            }
            Tok::IriRef(i) => {
                self.next();
                PathExpr::Predicate(self.resolve_iri(&i)?)
            }
            Tok::Word(w) if w == "a" => {
                self.next();
                PathExpr::Predicate(rdf_type())
            }
            Tok::Punct("(") => {
                self.next();
                let inner = self.path()?;
                self.expect_punct(")")?;
                inner
            }
            Tok::Punct("^") => return Err(QueryError::UnsupportedFeature("inverse path".into())),
            Tok::Punct("!") => return Err(QueryError::UnsupportedFeature("negated property set".into())),
            other => return Err(self.error_here(format!("expected a predicate or path, found {}", describe(&other)))),
        };
        if self.eat_punct("*") {
            return Ok(PathExpr::star(primary));
        }
        if self.is_punct("+") {
            return Err(QueryError::UnsupportedFeature("one-or-more path".into()));
        }
        if self.is_punct("?") {
            return Err(QueryError::UnsupportedFeature("zero-or-one path".into()));
        }
        Ok(primary)
    }

    fn expression(&mut self) -> PResult<Expression> {
        let mut lhs = self.and_expr()?;
        while self.eat_punct("||") {
            lhs = Expression::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expression> {
        let mut lhs = self.relational()?;
        while self.eat_punct("&&") {
            lhs = Expression::And(Box::new(lhs), Box::new(self.relational()?));
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> PResult<Expression> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("=") => CompareOp::Eq,
            Tok::Punct("!=") => CompareOp::Ne,
            Tok::Punct("<") => CompareOp::Lt,
            Tok::Punct(">") => CompareOp::Gt,
            Tok::Punct("<=") => CompareOp::Le,
            Tok::Punct(">=") => CompareOp::Ge,
            Tok::Word(w) if w.eq_ignore_ascii_case("IN") => return Err(QueryError::UnsupportedFeature("IN".into())),
            _ => return Ok(lhs),
        };
        self.next();
        Ok(Expression::Compare(op, Box::new(lhs), Box::new(self.additive()?)))
    }

    fn additive(&mut self) -> PResult<Expression> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => ArithOp::Add,
                Tok::Punct("-") => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            lhs = Expression::Arith(op, Box::new(lhs), Box::new(self.multiplicative()?));
        }
    }

    fn multiplicative(&mut self) -> PResult<Expression> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => ArithOp::Mul,
                Tok::Punct("/") => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            lhs = Expression::Arith(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> PResult<Expression> {
        if self.eat_punct("!") {
            return Ok(Expression::Not(Box::new(self.unary()?)));
        }
        if self.eat_punct("-") {
            return Ok(Expression::Negate(Box::new(self.unary()?)));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expression> {
        if let Some(lit) = self.literal()? {
            return Ok(Expression::Literal(lit));
        }
        match self.peek().clone() {
            Tok::Punct("(") => {
                self.next();
                let e = self.expression()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Var(v) => {
                self.next();
                Ok(Expression::Var(v))
            }
            Tok::IriRef(i) => {
                self.next();
                Ok(Expression::Iri(self.resolve_iri(&i)?))
            }
            Tok::PName(p, l) => {
                self.next();
                if self.is_punct("(") {
                    return Err(QueryError::UnsupportedFeature("function call".into()));
                }
                Ok(Expression::Iri(self.resolve_pname(&p, &l)?))
            }
            Tok::Word(w) => {
                let upper = w.to_ascii_uppercase();
                match upper.as_str() {
                    "IF" => {
                        self.next();
                        self.expect_punct("(")?;
                        let c = self.expression()?;
                        self.expect_punct(",")?;
                        let a = self.expression()?;
                        self.expect_punct(",")?;
                        let b = self.expression()?;
                        self.expect_punct(")")?;
                        Ok(Expression::If(Box::new(c), Box::new(a), Box::new(b)))
                    }
                    "COUNT" | "SUM" | "GROUP_CONCAT" => {
                        self.next();
                        self.aggregate(&upper)
                    }
                    _ if UNSUPPORTED_AGGREGATES.contains(&upper.as_str()) => {
                        Err(QueryError::UnsupportedFeature(format!("aggregate {upper}")))
                    }
                    _ => {
                        self.check_unsupported()?;
                        if matches!(self.peek_at(1), Tok::Punct("(")) {
                            Err(QueryError::UnsupportedFeature(format!("function {upper}")))
                        } else {
                            Err(self.error_here(format!("unexpected word {w:?} in expression")))
                        }
                    }
                }
            }
            other => Err(self.error_here(format!("expected an expression, found {}", describe(&other)))),
        }
    }

    fn aggregate(&mut self, name: &str) -> PResult<Expression> {
        self.expect_punct("(")?;
        let distinct = self.eat_word("DISTINCT");
        let arg = if name == "COUNT" && self.eat_punct("*") { None } else { Some(Box::new(self.expression()?)) };
        let kind = match name {
            "COUNT" => AggregateKind::Count,
            "SUM" => AggregateKind::Sum,
            _ => {
                let mut separator = " ".to_string();
                if self.eat_punct(";") {
                    self.expect_word("SEPARATOR")?;
                    self.expect_punct("=")?;
                    separator = match self.next().tok {
                        Tok::Str(s) => s,
                        other => return Err(self.error_here(format!("expected separator string, found {}", describe(&other)))),
                    };
                }
                AggregateKind::GroupConcat { separator }
            }
        };
        self.expect_punct(")")?;
        Ok(Expression::Aggregate(Aggregate { kind, distinct, arg }))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Var(v) => format!("?{v}"),
        Tok::IriRef(i) => format!("<{i}>"),
        Tok::PName(p, l) => format!("{p}:{l}"),
        Tok::Word(w) => w.clone(),
        Tok::Str(s) => format!("{s:?}"),
        Tok::Integer(n) | Tok::Decimal(n) => n.clone(),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of query".into(),
    }
}

/// Parses a query. Built-in prefixes are pre-declared.
pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, prefixes: PrefixTable::standard() };
    let ast = p.query()?;
    check(&ast)?;
    Ok(ast)
}

fn invalid(message: String) -> QueryError {
    // semantic checks have no single token; report the query start
    QueryError::SyntaxError { line: 1, col: 1, message }
}

/// Scoping rules the grammar alone does not enforce.
fn check(ast: &QueryAst) -> Result<(), QueryError> {
    let mut bound: HashSet<&str> = ast.patterns.iter().flat_map(TriplePattern::vars).collect();
    for b in &ast.binds {
        if b.expr.has_aggregate() {
            return Err(invalid(format!("aggregate inside BIND to ?{}", b.var)));
        }
        if !bound.insert(&b.var) {
            return Err(invalid(format!("BIND target ?{} is already in scope", b.var)));
        }
    }
    for f in &ast.filters {
        if f.has_aggregate() {
            return Err(invalid("aggregate inside FILTER".into()));
        }
    }
    let mut names = HashSet::new();
    for p in &ast.projection {
        if !names.insert(p.name()) {
            return Err(invalid(format!("?{} is projected twice", p.name())));
        }
        if let Projection::Expr { expr, alias } = p {
            if bound.contains(alias.as_str()) {
                return Err(invalid(format!("projection alias ?{alias} is already in scope")));
            }
            for agg in expr.aggregates() {
                if agg.arg.as_ref().is_some_and(|a| a.has_aggregate()) {
                    return Err(invalid(format!("nested aggregate in ?{alias}")));
                }
            }
        }
    }
    if ast.is_grouped() {
        if ast.projection.is_empty() {
            return Err(invalid("SELECT * cannot be grouped".into()));
        }
        let grouped: HashSet<&str> = ast.group_by.iter().map(String::as_str).collect();
        for p in &ast.projection {
            let free: Vec<&str> = match p {
                Projection::Var(v) => vec![v.as_str()],
                Projection::Expr { expr, .. } => expr.free_vars().into_iter().collect(),
            };
            if let Some(v) = free.into_iter().find(|v| !grouped.contains(v)) {
                return Err(invalid(format!("?{v} is projected but neither grouped nor aggregated")));
            }
        }
    }
    Ok(())
}
