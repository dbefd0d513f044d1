//! Problem-file reader and printer.
//!
//! ```text
//! source R/2
//! global T/1
//! constraint: R(x, y) -> exists z . R(y, z)
//! mapping: T(x) := R(x, y)
//! policy: (x) R(x, y)
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{name, Atom, ConjunctiveQuery, Dependency, Mapping, MappingSet, ModelError, Name, Problem, Schema, IS_CRIT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Quoted,
    Slash,
    Colon,
    Define,
    Arrow,
    LParen,
    RParen,
    Comma,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Int(s) => write!(f, "`{s}`"),
            Tok::Quoted => f.write_str("a quoted constant"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Define => f.write_str("`:=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
struct Pos {
    line: usize,
    col: usize,
}

fn err(p: Pos, message: impl Into<String>) -> ParseError {
    ParseError { line: p.line, col: p.col, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: ln + 1, col: i + 1 };
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Int(chars[start..i].iter().collect()), pos));
                continue;
            }
            let (tok, width) = match c {
                '/' => (Tok::Slash, 1),
                ':' if chars.get(i + 1) == Some(&'=') => (Tok::Define, 2),
                ':' => (Tok::Colon, 1),
                '-' if chars.get(i + 1) == Some(&'>') => (Tok::Arrow, 2),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '"' | '\'' => (Tok::Quoted, 1),
                _ => return Err(err(pos, format!("unexpected character `{c}`"))),
            };
            out.push((tok, pos));
            i += width;
        }
    }
    Ok(out)
}

struct RawAtom {
    pred: String,
    args: Vec<(String, Pos)>,
    pos: Pos,
}

enum Stmt {
    Decl { global: bool, pred: String, arity: usize, pos: Pos },
    Constraint { body: Vec<RawAtom>, exists: Option<Vec<(String, Pos)>>, head: Vec<RawAtom>, pos: Pos },
    Mapping { head: RawAtom, body: Vec<RawAtom>, pos: Pos },
    Policy { free: Vec<(String, Pos)>, atoms: Vec<RawAtom>, pos: Pos },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.0)
    }

    fn next(&mut self, what: &str) -> Result<(Tok, Pos), ParseError> {
        match self.toks.get(self.i) {
            Some(t) => {
                self.i += 1;
                Ok(t.clone())
            }
            None => Err(err(self.end, format!("unexpected end of input, expected {what}"))),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        let (t, p) = self.next(&tok.to_string())?;
        if t == tok {
            Ok(p)
        } else {
            Err(err(p, format!("expected {tok}, found {t}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.next(what)? {
            (Tok::Ident(s), p) => Ok((s, p)),
            (Tok::Int(_) | Tok::Quoted, p) if what == "a variable" => {
                Err(err(p, "constants are not supported; use a variable"))
            }
            (t, p) => Err(err(p, format!("expected {what}, found {t}"))),
        }
    }

    fn var_list(&mut self, close: Tok) -> Result<Vec<(String, Pos)>, ParseError> {
        let mut out = Vec::new();
        if self.peek() == Some(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.ident("a variable")?);
            if self.peek() == Some(&Tok::Comma) {
                self.i += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let (pred, pos) = self.ident("a predicate name")?;
        self.expect(Tok::LParen)?;
        let args = self.var_list(Tok::RParen)?;
        self.expect(Tok::RParen)?;
        Ok(RawAtom { pred, args, pos })
    }

    fn atoms(&mut self) -> Result<Vec<RawAtom>, ParseError> {
        let mut out = vec![self.atom()?];
        while self.peek() == Some(&Tok::Comma) {
            self.i += 1;
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let (kw, pos) = self.ident("a statement keyword")?;
        match kw.as_str() {
            "source" | "global" => {
                let (pred, _) = self.ident("a predicate name")?;
                self.expect(Tok::Slash)?;
                let (t, p) = self.next("an arity")?;
                let Tok::Int(n) = t else { return Err(err(p, format!("expected an arity, found {t}"))) };
                let arity = n.parse().map_err(|_| err(p, "arity out of range"))?;
                Ok(Stmt::Decl { global: kw == "global", pred, arity, pos })
            }
            "constraint" => {
                self.expect(Tok::Colon)?;
                let body = self.atoms()?;
                self.expect(Tok::Arrow)?;
                let exists = if matches!(self.peek(), Some(Tok::Ident(s)) if s == "exists")
                    && self.peek_at(1) != Some(&Tok::LParen)
                {
                    self.i += 1;
                    let vs = self.var_list(Tok::Dot)?;
                    self.expect(Tok::Dot)?;
                    Some(vs)
                } else {
                    None
                };
                let head = self.atoms()?;
                Ok(Stmt::Constraint { body, exists, head, pos })
            }
            "mapping" => {
                self.expect(Tok::Colon)?;
                let head = self.atom()?;
                self.expect(Tok::Define)?;
                let body = self.atoms()?;
                Ok(Stmt::Mapping { head, body, pos })
            }
            "policy" => {
                self.expect(Tok::Colon)?;
                let free = if self.peek() == Some(&Tok::LParen) {
                    self.i += 1;
                    let vs = self.var_list(Tok::RParen)?;
                    self.expect(Tok::RParen)?;
                    vs
                } else {
                    Vec::new()
                };
                let atoms = self.atoms()?;
                Ok(Stmt::Policy { free, atoms, pos })
            }
            other => Err(err(pos, format!("unknown statement `{other}`"))),
        }
    }
}

fn check_ident(s: &str, p: Pos) -> Result<(), ParseError> {
    if s.starts_with("__") || s == IS_CRIT {
        return Err(err(p, format!("`{s}` is a reserved name")));
    }
    if !s.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return Err(err(p, format!("identifier `{s}` must start with a letter")));
    }
    Ok(())
}

struct Resolver<'a> {
    schema: &'a Schema,
}

impl Resolver<'_> {
    fn var(&self, v: &(String, Pos)) -> Result<Name, ParseError> {
        check_ident(&v.0, v.1)?;
        if self.schema.arity(&v.0).is_some() {
            return Err(err(v.1, format!("`{}` is a predicate and cannot be used as a variable", v.0)));
        }
        Ok(name(&v.0))
    }

    fn atom(&self, a: &RawAtom, global: bool) -> Result<Atom, ParseError> {
        check_ident(&a.pred, a.pos)?;
        let (table, other) = if global {
            (&self.schema.global, &self.schema.source)
        } else {
            (&self.schema.source, &self.schema.global)
        };
        let Some(&arity) = table.get(a.pred.as_str()) else {
            let kind = if global { "global" } else { "source" };
            if other.contains_key(a.pred.as_str()) {
                return Err(err(a.pos, format!("`{}` is not a {kind} predicate", a.pred)));
            }
            return Err(err(a.pos, format!("predicate `{}` is not declared", a.pred)));
        };
        if arity != a.args.len() {
            return Err(err(a.pos, format!("`{}` has arity {arity} but is used with {} arguments", a.pred, a.args.len())));
        }
        Ok(Atom { pred: name(&a.pred), args: a.args.iter().map(|v| self.var(v)).collect::<Result<_, _>>()? })
    }

    fn atoms(&self, atoms: &[RawAtom]) -> Result<Vec<Atom>, ParseError> {
        atoms.iter().map(|a| self.atom(a, false)).collect()
    }

    /// Policies may also test criticality with `IsCrit(v)`.
    fn policy_atoms(&self, atoms: &[RawAtom]) -> Result<Vec<Atom>, ParseError> {
        atoms
            .iter()
            .map(|a| match a.args.as_slice() {
                [v] if a.pred == IS_CRIT => Ok(Atom { pred: name(IS_CRIT), args: vec![self.var(v)?] }),
                _ => self.atom(a, false),
            })
            .collect()
    }
}

pub fn parse(text: &str) -> Result<Problem, ParseError> {
    let toks = lex(text)?;
    let end = Pos { line: text.lines().count().max(1), col: 1 };
    let mut p = Parser { toks, i: 0, end };
    let mut stmts = Vec::new();
    while p.peek().is_some() {
        stmts.push(p.stmt()?);
    }
    let mut schema = Schema::default();
    for s in &stmts {
        if let Stmt::Decl { global, pred, arity, pos } = s {
            check_ident(pred, *pos)?;
            if schema.arity(pred).is_some() {
                return Err(err(*pos, format!("predicate `{pred}` is declared twice")));
            }
            let table = if *global { &mut schema.global } else { &mut schema.source };
            table.insert(name(pred), *arity);
        }
    }
    let r = Resolver { schema: &schema };
    let mut constraints = Vec::new();
    let mut rules: Vec<Mapping> = Vec::new();
    let mut policy: Option<ConjunctiveQuery> = None;
    for s in &stmts {
        match s {
            Stmt::Decl { .. } => {}
            Stmt::Constraint { body, exists, head, pos } => {
                let d = Dependency::new(r.atoms(body)?, r.atoms(head)?);
                if let Some(ex) = exists {
                    let body_vars: HashSet<Name> = d.body_vars().into_iter().collect();
                    let mut seen = HashSet::new();
                    for v in ex {
                        let n = r.var(v)?;
                        if body_vars.contains(&n) {
                            return Err(err(v.1, format!("`{}` occurs in the body and cannot be existential", v.0)));
                        }
                        if !d.head.iter().any(|a| a.mentions(&n)) {
                            return Err(err(v.1, format!("existential `{}` does not occur in the head", v.0)));
                        }
                        if !seen.insert(n) {
                            return Err(err(v.1, format!("`{}` is listed twice", v.0)));
                        }
                    }
                    if seen.len() != d.existentials().len() {
                        return Err(err(*pos, "head variables missing from the body must be listed after `exists`"));
                    }
                }
                constraints.push(d);
            }
            Stmt::Mapping { head, body, pos } => {
                let h = r.atom(head, true)?;
                if h.has_repeats() {
                    return Err(err(head.pos, "mapping head variables must be distinct"));
                }
                if rules.iter().any(|m| m.head.pred == h.pred) {
                    return Err(err(*pos, format!("global predicate `{}` needs exactly one rule", h.pred)));
                }
                let m = Mapping::new(h, r.atoms(body)?);
                let body_vars: HashSet<Name> = crate::model::vars_of(&m.body).into_iter().collect();
                if let Some(v) = m.head.args.iter().find(|v| !body_vars.contains(*v)) {
                    return Err(err(head.pos, format!("head variable `{v}` does not occur in the body")));
                }
                rules.push(m);
            }
            Stmt::Policy { free, atoms, pos } => {
                if policy.is_some() {
                    return Err(err(*pos, "only one policy is allowed"));
                }
                let atoms = r.policy_atoms(atoms)?;
                let free: Vec<Name> = free.iter().map(|v| r.var(v)).collect::<Result<_, _>>()?;
                let q = ConjunctiveQuery { atoms, free };
                let vars: HashSet<Name> = q.vars().into_iter().collect();
                if let Some(v) = q.free.iter().find(|v| !vars.contains(*v)) {
                    return Err(err(*pos, format!("free variable `{v}` does not occur in the policy")));
                }
                if q.free.iter().collect::<HashSet<_>>().len() != q.free.len() {
                    return Err(err(*pos, "free variables must be distinct"));
                }
                policy = Some(q);
            }
        }
    }
    let Some(policy) = policy else { return Err(err(end, "missing `policy:` statement")) };
    let problem = Problem { schema, constraints, mappings: MappingSet::new(rules), policy };
    problem.validate().map_err(|e: ModelError| err(end, e.to_string()))?;
    Ok(problem)
}

/// Canonical text; `parse(&print(p)) == p` for every parseable problem.
pub fn print(p: &Problem) -> String {
    let mut out = String::new();
    for (n, a) in &p.schema.source {
        let _ = writeln!(out, "source {n}/{a}");
    }
    for (n, a) in &p.schema.global {
        let _ = writeln!(out, "global {n}/{a}");
    }
    for d in &p.constraints {
        let _ = writeln!(out, "constraint: {d}");
    }
    for m in &p.mappings.rules {
        let _ = writeln!(out, "mapping: {m}");
    }
    let _ = writeln!(out, "policy: {}", p.policy);
    out
}

/// Declares every predicate used by `constraints`, `mappings` and `policy`.
pub fn schema_from_use(constraints: &[Dependency], mappings: &MappingSet, policy: &ConjunctiveQuery) -> Schema {
    let mut source = BTreeMap::new();
    for a in constraints
        .iter()
        .flat_map(|d| d.body.iter().chain(&d.head))
        .chain(mappings.rules.iter().flat_map(|m| m.body.iter()))
        .chain(policy.atoms.iter().filter(|a| &*a.pred != IS_CRIT))
    {
        source.insert(a.pred.clone(), a.arity());
    }
    let global = mappings.rules.iter().map(|m| (m.head.pred.clone(), m.head.arity())).collect();
    Schema { source, global }
}
