//! SPARQL front end: `SELECT` queries over a basic graph pattern.
//!
//! ```text
//! query   := SELECT [DISTINCT] var+ WHERE '{' triple ('.' triple)* '.'? '}'
//! triple  := (var | name) (name | 'a') (var | name | literal)
//! literal := 'single' | "double" | number
//! ```
//!
//! Names are bare (`Person`), prefixed with the built-in `rdf:`/`rdfs:`
//! prefixes, or written `<...>`. Anything else SPARQL offers is rejected with
//! [`QueryError::UnsupportedFeature`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::store::Value;

pub const RDF_TYPE: &str = "rdf:type";

const PREFIXES: [&str; 2] = ["rdf", "rdfs"];

const UNSUPPORTED: [&str; 23] = [
    "OPTIONAL", "FILTER", "UNION", "MINUS", "BIND", "VALUES", "GRAPH", "SERVICE", "ORDER", "GROUP", "HAVING",
    "LIMIT", "OFFSET", "PREFIX", "BASE", "ASK", "CONSTRUCT", "DESCRIBE", "FROM", "REDUCED", "EXISTS", "NOT", "AS",
];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        /// Byte offset of the offending token.
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported SPARQL feature: {0}")]
    UnsupportedFeature(String),
    #[error("selected variable ?{0} does not occur in the pattern")]
    UnboundSelectVar(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Iri(String),
    Literal(Value),
}

impl Term {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Iri(i) if is_plain_name(i) => write!(f, "{i}"),
            Term::Iri(i) => write!(f, "<{i}>"),
            Term::Literal(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl TriplePattern {
    pub fn is_type(&self) -> bool {
        self.predicate == RDF_TYPE
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.object].into_iter().filter_map(Term::as_var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlQuery {
    pub select_vars: Vec<String>,
    pub patterns: Vec<TriplePattern>,
}

impl SparqlQuery {
    pub fn vars(&self) -> BTreeSet<&str> {
        self.patterns.iter().flat_map(TriplePattern::vars).collect()
    }
}

impl fmt::Display for SparqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT")?;
        for v in &self.select_vars {
            write!(f, " ?{v}")?;
        }
        writeln!(f, " WHERE {{")?;
        for p in &self.patterns {
            let pred = Term::Iri(p.predicate.clone());
            writeln!(f, "  {} {} {} .", p.subject, pred, p.object)?;
        }
        writeln!(f, "}}")
    }
}

fn is_plain_name(s: &str) -> bool {
    let (prefix, local) = match s.split_once(':') {
        Some((p, l)) if PREFIXES.contains(&p) => (true, l),
        Some(_) => return false,
        None => (false, s),
    };
    let mut chars = local.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_');
    let keyword = !prefix && (s.eq_ignore_ascii_case("a") || is_keyword(s));
    first_ok && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '-') && !keyword
}

fn is_keyword(word: &str) -> bool {
    let upper = word.to_ascii_uppercase();
    ["SELECT", "WHERE", "DISTINCT"].contains(&upper.as_str()) || UNSUPPORTED.contains(&upper.as_str())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    Str(String),
    Num(f64),
    Sym(char),
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> QueryError {
        syntax(self.src, offset, message)
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, QueryError> {
        let mut out = Vec::new();
        loop {
            self.skip_space();
            let start = self.pos;
            let Some(c) = self.peek() else {
                out.push((start, Tok::Eof));
                return Ok(out);
            };
            let tok = match c {
                '?' | '$' => {
                    self.pos += 1;
                    let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                    if name.is_empty() {
                        return Err(self.error(start, "expected a variable name"));
                    }
                    Tok::Var(name)
                }
                '<' => {
                    self.pos += 1;
                    let inner = self.take_while(|c| c != '>' && !c.is_whitespace());
                    if self.peek() != Some('>') || inner.is_empty() {
                        return Err(self.error(start, "unterminated IRI"));
                    }
                    self.pos += 1;
                    Tok::Iri(inner)
                }
                '\'' | '"' => Tok::Str(self.string(c)?),
                '{' | '}' | '.' | ';' | ',' | '(' | ')' | '[' | ']' | '*' | '/' | '|' | '^' | '+' | '!' | '@'
                | '=' => {
                    if c == '.' && self.src[self.pos + 1..].starts_with(|d: char| d.is_ascii_digit()) {
                        self.number(start)?
                    } else {
                        self.pos += c.len_utf8();
                        Tok::Sym(c)
                    }
                }
                c if c.is_ascii_digit() || c == '-' => self.number(start)?,
                c if c.is_alphabetic() || c == '_' => {
                    let word = self.take_while(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == ':');
                    let word = word.trim_end_matches('-');
                    self.pos = start + word.len();
                    Tok::Word(word.to_owned())
                }
                other => return Err(self.error(start, format!("unexpected character `{other}`"))),
            };
            out.push((start, tok));
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_space(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                return;
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| !pred(c)).unwrap_or(rest.len());
        self.pos += len;
        rest[..len].to_owned()
    }

    fn string(&mut self, quote: char) -> Result<String, QueryError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error(start, "unterminated string literal"));
            };
            self.pos += c.len_utf8();
            match c {
                '\\' => {
                    let Some(e) = self.peek() else {
                        return Err(self.error(start, "unterminated string literal"));
                    };
                    self.pos += e.len_utf8();
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                }
                '\n' => return Err(self.error(start, "newline in string literal")),
                c if c == quote => return Ok(out),
                c => out.push(c),
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<Tok, QueryError> {
        let text = self.take_while(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == 'e' || c == 'E');
        let text = text.trim_end_matches('.');
        self.pos = start + text.len();
        text.parse::<f64>()
            .ok()
            .filter(|n| n.is_finite())
            .map(Tok::Num)
            .ok_or_else(|| self.error(start, format!("malformed number `{text}`")))
    }
}

fn syntax(src: &str, offset: usize, message: impl Into<String>) -> QueryError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    QueryError::Syntax {
        offset,
        line,
        column,
        message: message.into(),
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    i: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn offset(&self) -> usize {
        self.toks[self.i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].1.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> QueryError {
        syntax(self.src, self.offset(), message)
    }

    /// Rejects constructs outside the subset before reporting plain syntax errors.
    fn check_unsupported(&self) -> Result<(), QueryError> {
        match self.peek() {
            Tok::Word(w) if UNSUPPORTED.contains(&w.to_ascii_uppercase().as_str()) => {
                Err(QueryError::UnsupportedFeature(w.to_ascii_uppercase()))
            }
            Tok::Sym(';') => Err(QueryError::UnsupportedFeature("predicate-object lists (`;`)".into())),
            Tok::Sym(',') => Err(QueryError::UnsupportedFeature("object lists (`,`)".into())),
            Tok::Sym('[') => Err(QueryError::UnsupportedFeature("blank nodes".into())),
            Tok::Sym('(') => Err(QueryError::UnsupportedFeature("expressions".into())),
            Tok::Sym('*') => Err(QueryError::UnsupportedFeature("SELECT *".into())),
            Tok::Sym(c @ ('/' | '|' | '^' | '+' | '!')) => Err(QueryError::UnsupportedFeature(format!("property paths (`{c}`)"))),
            Tok::Sym('@') => Err(QueryError::UnsupportedFeature("language tags".into())),
            _ => Ok(()),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        self.check_unsupported()?;
        match self.peek() {
            Tok::Word(w) if w.eq_ignore_ascii_case(kw) => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(format!("expected {kw}"))),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), QueryError> {
        self.check_unsupported()?;
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn name(&mut self, word: &str) -> Result<String, QueryError> {
        if let Some((prefix, _)) = word.split_once(':') {
            if !PREFIXES.contains(&prefix) {
                return Err(self.error(format!("unknown prefix `{prefix}:`")));
            }
        }
        if is_keyword(word) {
            return Err(self.error(format!("unexpected keyword `{word}`")));
        }
        Ok(word.to_owned())
    }

    fn term(&mut self, what: &str, literal_ok: bool) -> Result<Term, QueryError> {
        self.check_unsupported()?;
        let term = match self.peek().clone() {
            Tok::Var(v) => Term::Var(v),
            Tok::Iri(i) => Term::Iri(i),
            Tok::Word(w) => Term::Iri(self.name(&w)?),
            Tok::Str(s) if literal_ok => Term::Literal(Value::Text(s)),
            Tok::Num(n) if literal_ok => Term::Literal(Value::Number(n)),
            _ => return Err(self.error(format!("expected {what}"))),
        };
        self.bump();
        if literal_ok && matches!(term, Term::Literal(_)) {
            if let Tok::Sym('^') = self.peek() {
                return Err(QueryError::UnsupportedFeature("typed literals".into()));
            }
        }
        Ok(term)
    }

    fn predicate(&mut self) -> Result<String, QueryError> {
        self.check_unsupported()?;
        let p = match self.peek().clone() {
            Tok::Word(w) if w == "a" => RDF_TYPE.to_owned(),
            Tok::Word(w) => self.name(&w)?,
            Tok::Iri(i) => i,
            Tok::Var(_) => return Err(QueryError::UnsupportedFeature("variable predicates".into())),
            _ => return Err(self.error("expected a predicate")),
        };
        self.bump();
        Ok(p)
    }

    fn query(&mut self) -> Result<SparqlQuery, QueryError> {
        self.keyword("SELECT")?;
        if matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case("DISTINCT")) {
            self.bump();
        }
        let mut select_vars = Vec::new();
        loop {
            self.check_unsupported()?;
            match self.peek().clone() {
                Tok::Var(v) => {
                    if !select_vars.contains(&v) {
                        select_vars.push(v);
                    }
                    self.bump();
                }
                _ if select_vars.is_empty() => return Err(self.error("expected a variable")),
                _ => break,
            }
        }
        self.keyword("WHERE")?;
        self.sym('{')?;
        let mut patterns = Vec::new();
        loop {
            self.check_unsupported()?;
            if self.peek() == &Tok::Sym('{') {
                let nested = self.toks[self.i..].iter().find_map(|(_, t)| match t {
                    Tok::Word(w) if UNSUPPORTED.contains(&w.to_ascii_uppercase().as_str()) => {
                        Some(w.to_ascii_uppercase())
                    }
                    _ => None,
                });
                return Err(QueryError::UnsupportedFeature(nested.unwrap_or_else(|| "nested group patterns".into())));
            }
            if self.peek() == &Tok::Sym('}') && !patterns.is_empty() {
                self.bump();
                break;
            }
            let subject = self.term("a subject", false)?;
            let predicate = self.predicate()?;
            let object = self.term("an object", true)?;
            let pattern = TriplePattern {
                subject,
                predicate,
                object,
            };
            if !patterns.contains(&pattern) {
                patterns.push(pattern);
            }
            self.check_unsupported()?;
            match self.peek() {
                Tok::Sym('.') => {
                    self.bump();
                }
                Tok::Sym('}') => {}
                _ => return Err(self.error("expected `.` or `}`")),
            }
        }
        self.check_unsupported()?;
        if self.peek() != &Tok::Eof {
            return Err(self.error("unexpected input after the query"));
        }
        let q = SparqlQuery { select_vars, patterns };
        let bound = q.vars();
        if let Some(v) = q.select_vars.iter().find(|v| !bound.contains(v.as_str())) {
            return Err(QueryError::UnboundSelectVar(v.clone()));
        }
        Ok(q)
    }
}

pub fn parse_sparql(text: &str) -> Result<SparqlQuery, QueryError> {
    let toks = Lexer { src: text, pos: 0 }.tokens()?;
    Parser { src: text, toks, i: 0 }.query()
}
