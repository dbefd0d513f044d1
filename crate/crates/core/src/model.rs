//! Logical vocabulary: values, atoms, queries, dependencies, mappings and
//! their syntactic classes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Rendering of the critical constant. No parsed input may use it.
pub const CRIT: &str = "__crit";
/// Unary marker for values that must equal the critical constant.
pub const IS_CRIT: &str = "IsCrit";

/// A ground term. Variables only ever appear in [`Atom`]s.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Value {
    Crit,
    Const(Name),
    Null(u64),
}

impl Value {
    pub fn is_crit(&self) -> bool {
        matches!(self, Value::Crit)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Crit => f.write_str(CRIT),
            Value::Const(c) => f.write_str(c),
            Value::Null(k) => write!(f, "_:n{k}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub pred: Name,
    pub args: Vec<Name>,
}

impl Atom {
    pub fn new(pred: &str, args: &[&str]) -> Atom {
        Atom { pred: name(pred), args: args.iter().map(|a| name(a)).collect() }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn has_repeats(&self) -> bool {
        let mut seen = HashSet::new();
        !self.args.iter().all(|a| seen.insert(a))
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.args.iter().any(|a| &**a == v)
    }

    pub fn rename(&self, f: &dyn Fn(&Name) -> Name) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(f).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Fact {
    pub pred: Name,
    pub args: Vec<Value>,
}

impl Fact {
    pub fn new(pred: &str, args: Vec<Value>) -> Fact {
        Fact { pred: name(pred), args }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Variables of a conjunction in order of first occurrence.
pub fn vars_of(atoms: &[Atom]) -> Vec<Name> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in atoms {
        for v in &a.args {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
    }
    out
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct ConjunctiveQuery {
    pub atoms: Vec<Atom>,
    pub free: Vec<Name>,
}

impl ConjunctiveQuery {
    pub fn boolean(atoms: Vec<Atom>) -> ConjunctiveQuery {
        ConjunctiveQuery { atoms, free: Vec::new() }
    }

    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    pub fn vars(&self) -> Vec<Name> {
        vars_of(&self.atoms)
    }

    pub fn mentions_pred(&self, p: &str) -> bool {
        self.atoms.iter().any(|a| &*a.pred == p)
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.free.is_empty() {
            f.write_str("(")?;
            for (i, v) in self.free.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(v)?;
            }
            f.write_str(") ")?;
        }
        write_atoms(f, &self.atoms)
    }
}

/// `body -> exists existentials . head`
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Dependency {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl Dependency {
    pub fn new(body: Vec<Atom>, head: Vec<Atom>) -> Dependency {
        Dependency { body, head }
    }

    pub fn body_vars(&self) -> Vec<Name> {
        vars_of(&self.body)
    }

    /// Shared variables, in order of first occurrence in the body.
    pub fn frontier(&self) -> Vec<Name> {
        let head: HashSet<Name> = vars_of(&self.head).into_iter().collect();
        self.body_vars().into_iter().filter(|v| head.contains(v)).collect()
    }

    pub fn existentials(&self) -> Vec<Name> {
        let body: HashSet<Name> = self.body_vars().into_iter().collect();
        vars_of(&self.head).into_iter().filter(|v| !body.contains(v)).collect()
    }
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        f.write_str(" -> ")?;
        let ex = self.existentials();
        if !ex.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in ex.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(v)?;
            }
            f.write_str(" . ")?;
        }
        write_atoms(f, &self.head)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub enum TgdClass {
    #[serde(rename = "TGD")]
    Tgd,
    #[serde(rename = "FGTGD")]
    Fgtgd,
    #[serde(rename = "GTGD")]
    Gtgd,
    #[serde(rename = "LTGD")]
    Ltgd,
    #[serde(rename = "IncDep")]
    IncDep,
    #[serde(rename = "UID")]
    Uid,
}

impl TgdClass {
    pub const ALL: [TgdClass; 6] =
        [TgdClass::Tgd, TgdClass::Fgtgd, TgdClass::Gtgd, TgdClass::Ltgd, TgdClass::IncDep, TgdClass::Uid];

    pub fn label(self) -> &'static str {
        match self {
            TgdClass::Tgd => "TGD",
            TgdClass::Fgtgd => "FGTGD",
            TgdClass::Gtgd => "GTGD",
            TgdClass::Ltgd => "LTGD",
            TgdClass::IncDep => "IncDep",
            TgdClass::Uid => "UID",
        }
    }
}

impl fmt::Display for TgdClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn upward<T: Ord + Copy>(all: &[T], most_specific: T) -> BTreeSet<T> {
    all.iter().copied().filter(|c| *c <= most_specific).collect()
}

/// The full upward-closed set of classes `d` belongs to.
pub fn classify_dependency(d: &Dependency) -> BTreeSet<TgdClass> {
    upward(&TgdClass::ALL, most_specific_tgd_class(d))
}

pub fn most_specific_tgd_class(d: &Dependency) -> TgdClass {
    let frontier = d.frontier();
    let body_vars = d.body_vars();
    let covers = |vs: &[Name]| d.body.iter().any(|a| vs.iter().all(|v| a.mentions(v)));
    if !covers(&frontier) {
        return TgdClass::Tgd;
    }
    if !covers(&body_vars) {
        return TgdClass::Fgtgd;
    }
    if d.body.len() != 1 {
        return TgdClass::Gtgd;
    }
    if d.head.len() != 1 || d.body[0].has_repeats() || d.head[0].has_repeats() {
        return TgdClass::Ltgd;
    }
    if frontier.len() > 1 {
        return TgdClass::IncDep;
    }
    TgdClass::Uid
}

/// Classes shared by every dependency of the set.
pub fn classify_dependencies(deps: &[Dependency]) -> BTreeSet<TgdClass> {
    let best = deps.iter().map(most_specific_tgd_class).min().unwrap_or(TgdClass::Uid);
    upward(&TgdClass::ALL, best)
}

/// A GAV rule `head := body` defining one global predicate.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mapping {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Mapping {
    pub fn new(head: Atom, body: Vec<Atom>) -> Mapping {
        Mapping { head, body }
    }

    pub fn as_dependency(&self) -> Dependency {
        Dependency { body: self.body.clone(), head: vec![self.head.clone()] }
    }

    /// Body variables not exported to the head.
    pub fn existentials(&self) -> Vec<Name> {
        vars_of(&self.body).into_iter().filter(|v| !self.head.mentions(v)).collect()
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := ", self.head)?;
        write_atoms(f, &self.body)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct MappingSet {
    pub rules: Vec<Mapping>,
}

impl MappingSet {
    pub fn new(rules: Vec<Mapping>) -> MappingSet {
        MappingSet { rules }
    }

    pub fn get(&self, global: &str) -> Option<&Mapping> {
        self.rules.iter().find(|m| &*m.head.pred == global)
    }

    pub fn as_dependencies(&self) -> Vec<Dependency> {
        self.rules.iter().map(Mapping::as_dependency).collect()
    }

    pub fn globals(&self) -> Vec<(Name, usize)> {
        self.rules.iter().map(|m| (m.head.pred.clone(), m.head.arity())).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub enum MapClass {
    #[serde(rename = "CQMap")]
    CqMap,
    #[serde(rename = "GuardedMap")]
    GuardedMap,
    #[serde(rename = "AtomMap")]
    AtomMap,
    #[serde(rename = "ProjMap")]
    ProjMap,
}

impl MapClass {
    pub const ALL: [MapClass; 4] = [MapClass::CqMap, MapClass::GuardedMap, MapClass::AtomMap, MapClass::ProjMap];

    pub fn label(self) -> &'static str {
        match self {
            MapClass::CqMap => "CQMap",
            MapClass::GuardedMap => "GuardedMap",
            MapClass::AtomMap => "AtomMap",
            MapClass::ProjMap => "ProjMap",
        }
    }
}

impl fmt::Display for MapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn most_specific_map_class(m: &Mapping) -> MapClass {
    let vars = vars_of(&m.body);
    if !m.body.iter().any(|a| vars.iter().all(|v| a.mentions(v))) {
        return MapClass::CqMap;
    }
    if m.body.len() != 1 {
        return MapClass::GuardedMap;
    }
    if m.body[0].has_repeats() {
        return MapClass::AtomMap;
    }
    MapClass::ProjMap
}

/// Class of a mapping set: the intersection of its per-rule classes.
pub fn classify_mapping(m: &MappingSet) -> BTreeSet<MapClass> {
    let best = m.rules.iter().map(most_specific_map_class).min().unwrap_or(MapClass::ProjMap);
    upward(&MapClass::ALL, best)
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Schema {
    pub source: BTreeMap<Name, usize>,
    pub global: BTreeMap<Name, usize>,
}

impl Schema {
    pub fn arity(&self, p: &str) -> Option<usize> {
        self.source.get(p).or_else(|| self.global.get(p)).copied()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Problem {
    pub schema: Schema,
    pub constraints: Vec<Dependency>,
    pub mappings: MappingSet,
    pub policy: ConjunctiveQuery,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("predicate {0} is not declared")]
    Undeclared(String),
    #[error("predicate {pred} has arity {expected} but is used with {found} arguments")]
    Arity { pred: String, expected: usize, found: usize },
    #[error("{0} is declared both as a source and a global predicate")]
    SourceGlobalClash(String),
    #[error("global predicate {0} has more than one mapping")]
    DuplicateMapping(String),
    #[error("global predicate {0} has no mapping")]
    MissingMapping(String),
    #[error("mapping head {0} must be a global atom with distinct variables")]
    BadMappingHead(String),
    #[error("{0} must only mention source predicates")]
    NotSource(String),
    #[error("free variable {0} does not occur in the policy")]
    UnboundFree(String),
    #[error("mapping head variable {0} does not occur in the body")]
    UnsafeHead(String),
    #[error("constraint with an empty body or head")]
    EmptyRule,
}

impl Problem {
    /// Structural checks shared by the parser and the generators.
    pub fn validate(&self) -> Result<(), ModelError> {
        for p in self.schema.source.keys() {
            if self.schema.global.contains_key(p) {
                return Err(ModelError::SourceGlobalClash(p.to_string()));
            }
        }
        let source_atom = |a: &Atom, what: &dyn Fn() -> String| -> Result<(), ModelError> {
            match self.schema.source.get(&a.pred) {
                Some(&n) if n == a.arity() => Ok(()),
                Some(&n) => Err(ModelError::Arity { pred: a.pred.to_string(), expected: n, found: a.arity() }),
                None if self.schema.global.contains_key(&a.pred) => Err(ModelError::NotSource(what())),
                None => Err(ModelError::Undeclared(a.pred.to_string())),
            }
        };
        for d in &self.constraints {
            if d.body.is_empty() || d.head.is_empty() {
                return Err(ModelError::EmptyRule);
            }
            for a in d.body.iter().chain(&d.head) {
                source_atom(a, &|| format!("constraint {d}"))?;
            }
        }
        let mut seen = HashSet::new();
        for m in &self.mappings.rules {
            let g = &m.head.pred;
            match self.schema.global.get(g) {
                Some(&n) if n == m.head.arity() => {}
                Some(&n) => {
                    return Err(ModelError::Arity { pred: g.to_string(), expected: n, found: m.head.arity() })
                }
                None => return Err(ModelError::BadMappingHead(m.head.to_string())),
            }
            if m.head.has_repeats() {
                return Err(ModelError::BadMappingHead(m.head.to_string()));
            }
            if !seen.insert(g.clone()) {
                return Err(ModelError::DuplicateMapping(g.to_string()));
            }
            for a in &m.body {
                source_atom(a, &|| format!("mapping for {g}"))?;
            }
            let body: HashSet<Name> = vars_of(&m.body).into_iter().collect();
            if let Some(v) = m.head.args.iter().find(|v| !body.contains(*v)) {
                return Err(ModelError::UnsafeHead(v.to_string()));
            }
        }
        for g in self.schema.global.keys() {
            if !seen.contains(g) {
                return Err(ModelError::MissingMapping(g.to_string()));
            }
        }
        for a in &self.policy.atoms {
            if &*a.pred == IS_CRIT && a.arity() == 1 {
                continue;
            }
            source_atom(a, &|| "the policy".to_string())?;
        }
        let vars: HashSet<Name> = self.policy.vars().into_iter().collect();
        if let Some(v) = self.policy.free.iter().find(|v| !vars.contains(*v)) {
            return Err(ModelError::UnboundFree(v.to_string()));
        }
        Ok(())
    }

    pub fn constraint_classes(&self) -> BTreeSet<TgdClass> {
        classify_dependencies(&self.constraints)
    }

    pub fn mapping_classes(&self) -> BTreeSet<MapClass> {
        classify_mapping(&self.mappings)
    }

    /// Every predicate name used anywhere, including the schema.
    pub fn used_names(&self) -> HashSet<Name> {
        let mut out: HashSet<Name> = self.schema.source.keys().chain(self.schema.global.keys()).cloned().collect();
        for d in &self.constraints {
            out.extend(d.body.iter().chain(&d.head).map(|a| a.pred.clone()));
        }
        out
    }
}

/// Deterministic supply of auxiliary predicate names that avoid a set of
/// names already in use.
#[derive(Clone, Debug)]
pub struct FreshNames {
    used: HashSet<Name>,
    next_aux: usize,
}

impl Default for FreshNames {
    fn default() -> FreshNames {
        FreshNames::new([])
    }
}

impl FreshNames {
    pub fn new(used: impl IntoIterator<Item = Name>) -> FreshNames {
        FreshNames { used: used.into_iter().collect(), next_aux: 1 }
    }

    pub fn for_problem(p: &Problem) -> FreshNames {
        FreshNames::new(p.used_names())
    }

    pub fn reserve(&mut self, n: &Name) {
        self.used.insert(n.clone());
    }

    /// Next `__aux<N>`.
    pub fn aux(&mut self) -> Name {
        loop {
            let n = name(&format!("__aux{}", self.next_aux));
            self.next_aux += 1;
            if self.used.insert(n.clone()) {
                return n;
            }
        }
    }

    /// `base` itself if free, otherwise `base_2`, `base_3`, ...
    pub fn named(&mut self, base: &str) -> Name {
        let mut candidate = name(base);
        let mut k = 2;
        while !self.used.insert(candidate.clone()) {
            candidate = name(&format!("{base}_{k}"));
            k += 1;
        }
        candidate
    }
}

/// Fresh variable `base_j` not in `used`; records it.
pub fn fresh_var(base: &str, used: &mut HashSet<Name>) -> Name {
    let mut k = 2;
    loop {
        let v = name(&format!("{base}_{k}"));
        if used.insert(v.clone()) {
            return v;
        }
        k += 1;
    }
}

/// Splits every multi-atom head through one auxiliary predicate holding
/// the frontier followed by the existentials.
pub fn normalize_heads(deps: &[Dependency], fresh: &mut FreshNames) -> Vec<Dependency> {
    let mut out = Vec::new();
    for d in deps {
        if d.head.len() <= 1 {
            out.push(d.clone());
            continue;
        }
        let mut args = d.frontier();
        args.extend(d.existentials());
        let aux = Atom { pred: fresh.aux(), args };
        out.push(Dependency::new(d.body.clone(), vec![aux.clone()]));
        for h in &d.head {
            out.push(Dependency::new(vec![aux.clone()], vec![h.clone()]));
        }
    }
    out
}
