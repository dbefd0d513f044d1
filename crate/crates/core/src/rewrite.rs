//! Reductions from disclosure to plain entailment, and setting-level
//! transformations that preserve the disclosure verdict.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::engine::{entails_any, ChaseBudget, Entailment};
use crate::instance::Instance;
use crate::model::{
    fresh_var, most_specific_map_class, most_specific_tgd_class, name, normalize_heads, vars_of, Atom, ConjunctiveQuery,
    Dependency, FreshNames, MapClass, Mapping, MappingSet, Name, Problem, TgdClass, IS_CRIT,
};
use crate::verdict::{DiscloseError, Outcome, Verdict};
use crate::vischase::{check_policy, hide};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("dependency {0} is not linear with a single head atom")]
    NotLinear(String),
    #[error("mapping for {0} exports more than one variable")]
    FrontierTooLarge(String),
}

/// Subsets of `vars` by increasing size, then by position in `vars`.
pub fn annotations(vars: &[Name]) -> Vec<Vec<Name>> {
    let n = vars.len();
    let mut masks: Vec<u64> = (0..1u64 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
    masks
        .into_iter()
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| vars[i].clone()).collect())
        .collect()
}

/// Renames every occurrence of an annotated variable after its first to a
/// fresh variable, then marks all of them with `IsCrit`.
pub fn annotate(atoms: &[Atom], annotation: &[Name], used: &mut HashSet<Name>) -> Vec<Atom> {
    let mut seen: HashSet<&Name> = HashSet::new();
    let mut copies: BTreeMap<&Name, Vec<Name>> = BTreeMap::new();
    let mut out = Vec::with_capacity(atoms.len());
    for a in atoms {
        let mut args = Vec::with_capacity(a.args.len());
        for v in &a.args {
            if annotation.contains(v) && !seen.insert(v) {
                let c = fresh_var(v, used);
                copies.entry(v).or_default().push(c.clone());
                args.push(c);
            } else {
                args.push(v.clone());
            }
        }
        out.push(Atom { pred: a.pred.clone(), args });
    }
    for v in annotation {
        out.push(Atom { pred: name(IS_CRIT), args: vec![v.clone()] });
        for c in copies.get(v).into_iter().flatten() {
            out.push(Atom { pred: name(IS_CRIT), args: vec![c.clone()] });
        }
    }
    out
}

fn occurrences(atoms: &[Atom]) -> HashMap<Name, usize> {
    let mut n = HashMap::new();
    for a in atoms {
        for v in &a.args {
            *n.entry(v.clone()).or_insert(0) += 1;
        }
    }
    n
}

fn repeated_vars(atoms: &[Atom]) -> Vec<Name> {
    let n = occurrences(atoms);
    vars_of(atoms).into_iter().filter(|v| n[v] > 1).collect()
}

/// One rewriting per annotation of the query variables.
pub fn crit_rewrite_query(q: &ConjunctiveQuery) -> Vec<ConjunctiveQuery> {
    rewrite_over(q, &q.vars())
}

/// The rewritings over annotations of repeated variables only; each omitted
/// rewriting has a strictly weaker counterpart in this family.
pub fn crit_rewrite_query_reduced(q: &ConjunctiveQuery) -> Vec<ConjunctiveQuery> {
    rewrite_over(q, &repeated_vars(&q.atoms))
}

fn rewrite_over(q: &ConjunctiveQuery, vars: &[Name]) -> Vec<ConjunctiveQuery> {
    annotations(vars)
        .into_iter()
        .map(|ann| {
            let mut used: HashSet<Name> = q.vars().into_iter().collect();
            ConjunctiveQuery::boolean(annotate(&q.atoms, &ann, &mut used))
        })
        .collect()
}

/// Annotation family of one dependency: bodies rewritten, head untouched.
pub fn crit_rewrite_dep(d: &Dependency) -> Vec<Dependency> {
    annotations(&repeated_vars(&d.body))
        .into_iter()
        .map(|ann| {
            let mut used: HashSet<Name> = d.body_vars().into_iter().chain(vars_of(&d.head)).collect();
            Dependency::new(annotate(&d.body, &ann, &mut used), d.head.clone())
        })
        .collect()
}

pub fn crit_rewrite_deps(deps: &[Dependency]) -> Vec<Dependency> {
    deps.iter().flat_map(crit_rewrite_dep).collect()
}

/// `T(x1..xn) -> IsCrit(xi)` for every global `T` and position `i`.
pub fn iscrit_rules(m: &MappingSet) -> Vec<Dependency> {
    let mut out = Vec::new();
    for r in &m.rules {
        let n = r.head.arity();
        let vars: Vec<Name> = (1..=n).map(|i| name(&format!("x{i}"))).collect();
        let head = Atom { pred: r.head.pred.clone(), args: vars.clone() };
        for v in vars {
            out.push(Dependency::new(vec![head.clone()], vec![Atom { pred: name(IS_CRIT), args: vec![v] }]));
        }
    }
    out
}

pub fn b_pred(e: usize, f: usize, rule_id: usize) -> Name {
    name(&format!("__B_{e}_{f}_{rule_id}"))
}

/// Chain rewriting of a linear dependency: `2|P| + 1` rules for `P` the
/// pairs of positions sharing a body variable, or the dependency itself.
pub fn crit_rewrite_ptime(d: &Dependency, rule_id: usize) -> Result<Vec<Dependency>, RewriteError> {
    if d.body.len() != 1 || d.head.len() != 1 {
        return Err(RewriteError::NotLinear(d.to_string()));
    }
    let body = &d.body[0];
    let k = body.arity();
    let mut pairs = Vec::new();
    for e in 0..k {
        for f in e + 1..k {
            if body.args[e] == body.args[f] {
                pairs.push((e + 1, f + 1));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(vec![d.clone()]);
    }
    let w: Vec<Name> = (1..=k).map(|i| name(&format!("w{i}"))).collect();
    let merged = |e: usize, f: usize| -> Vec<Name> {
        let mut v = w.clone();
        v[f - 1] = w[e - 1].clone();
        v
    };
    let crit = |v: &Name| Atom { pred: name(IS_CRIT), args: vec![v.clone()] };
    let mut out = Vec::with_capacity(2 * pairs.len() + 1);
    let mut prev = body.pred.clone();
    for &(e, f) in &pairs {
        let b = b_pred(e, f, rule_id);
        let eq = merged(e, f);
        out.push(Dependency::new(vec![Atom { pred: prev.clone(), args: eq.clone() }], vec![Atom { pred: b.clone(), args: eq }]));
        out.push(Dependency::new(
            vec![Atom { pred: prev.clone(), args: w.clone() }, crit(&w[e - 1]), crit(&w[f - 1])],
            vec![Atom { pred: b.clone(), args: w.clone() }],
        ));
        prev = b;
    }
    let mut used: HashSet<Name> = d.body_vars().into_iter().chain(vars_of(&d.head)).collect();
    let mut seen = HashSet::new();
    let args: Vec<Name> =
        body.args.iter().map(|v| if seen.insert(v.clone()) { v.clone() } else { fresh_var(v, &mut used) }).collect();
    out.push(Dependency::new(vec![Atom { pred: prev, args }], d.head.clone()));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RewriteMode {
    Full,
    Ptime,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Constraint(usize),
    Mapping(Name),
    IsCrit(Name),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Constraint(i) => write!(f, "constraint {i}"),
            Origin::Mapping(t) => write!(f, "mapping {t}"),
            Origin::IsCrit(t) => write!(f, "iscrit {t}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RewriteBundle {
    pub queries: Vec<ConjunctiveQuery>,
    pub constraints: Vec<Dependency>,
    pub provenance: Vec<Origin>,
    pub base: Instance,
}

fn used_names(sigma: &[Dependency], m: &MappingSet, p: &ConjunctiveQuery) -> HashSet<Name> {
    let mut out: HashSet<Name> = sigma.iter().flat_map(|d| d.body.iter().chain(&d.head)).map(|a| a.pred.clone()).collect();
    for r in &m.rules {
        out.insert(r.head.pred.clone());
        out.extend(r.body.iter().map(|a| a.pred.clone()));
    }
    out.extend(p.atoms.iter().map(|a| a.pred.clone()));
    out
}

pub fn build_bundle(
    sigma: &[Dependency],
    m: &MappingSet,
    p: &ConjunctiveQuery,
    mode: RewriteMode,
) -> Result<RewriteBundle, DiscloseError> {
    check_policy(m, p)?;
    let mut fresh = FreshNames::new(used_names(sigma, m, p));
    let mut constraints = Vec::new();
    let mut provenance = Vec::new();
    let mut next_id = 0;
    match mode {
        RewriteMode::Full => {
            for (i, d) in normalize_heads(sigma, &mut fresh).iter().enumerate() {
                for r in crit_rewrite_dep(d) {
                    constraints.push(r);
                    provenance.push(Origin::Constraint(i));
                }
            }
            for r in &m.rules {
                for d in crit_rewrite_dep(&r.as_dependency()) {
                    constraints.push(d);
                    provenance.push(Origin::Mapping(r.head.pred.clone()));
                }
            }
        }
        RewriteMode::Ptime => {
            if let Some(d) = sigma.iter().find(|d| most_specific_tgd_class(d) < TgdClass::Ltgd) {
                return Err(DiscloseError::ClassMismatch(format!("constraint {d} is not linear")));
            }
            if let Some(r) = m.rules.iter().find(|r| most_specific_map_class(r) < MapClass::AtomMap) {
                return Err(DiscloseError::ClassMismatch(format!("mapping {r} is not atomic")));
            }
            for (i, d) in normalize_heads(sigma, &mut fresh).iter().enumerate() {
                let rules = crit_rewrite_ptime(d, next_id).map_err(|e| DiscloseError::ClassMismatch(e.to_string()))?;
                next_id += 1;
                provenance.extend(std::iter::repeat_n(Origin::Constraint(i), rules.len()));
                constraints.extend(rules);
            }
            for r in &m.rules {
                let rules = crit_rewrite_ptime(&r.as_dependency(), next_id)
                    .map_err(|e| DiscloseError::ClassMismatch(e.to_string()))?;
                next_id += 1;
                provenance.extend(std::iter::repeat_n(Origin::Mapping(r.head.pred.clone()), rules.len()));
                constraints.extend(rules);
            }
        }
    }
    for d in iscrit_rules(m) {
        provenance.push(Origin::IsCrit(d.body[0].pred.clone()));
        constraints.push(d);
    }
    Ok(RewriteBundle { queries: crit_rewrite_query_reduced(p), constraints, provenance, base: hide(m) })
}

pub fn disclose_via_entailment(
    sigma: &[Dependency],
    m: &MappingSet,
    p: &ConjunctiveQuery,
    budget: ChaseBudget,
    mode: RewriteMode,
) -> Result<Outcome, DiscloseError> {
    let b = build_bundle(sigma, m, p, mode)?;
    let rep = entails_any(&b.base, &b.constraints, &b.queries, budget)?;
    let verdict = match rep.answer {
        Entailment::Entailed { witness, .. } => Verdict::Disclosed { witness },
        Entailment::NotEntailed => Verdict::NotDisclosed,
        Entailment::Unknown(r) => Verdict::Unknown(r),
    };
    Ok(Outcome { verdict, rounds: rep.rounds, facts: rep.facts, state: Some(rep.instance), trace: rep.trace })
}

/// Adds `IsCrit(x)` for each free variable and drops the free list.
pub fn boolify_policy(p: &ConjunctiveQuery) -> ConjunctiveQuery {
    let mut atoms = p.atoms.clone();
    for v in &p.free {
        atoms.push(Atom { pred: name(IS_CRIT), args: vec![v.clone()] });
    }
    ConjunctiveQuery::boolean(atoms)
}

/// Gives every mapping body its own source relation `__R_<T>` over the
/// exported then the hidden variables, so every mapping becomes a projection.
pub fn reduce_to_projmap(sigma: &[Dependency], m: &MappingSet, fresh: &mut FreshNames) -> (Vec<Dependency>, MappingSet) {
    let mut out = sigma.to_vec();
    let mut rules = Vec::new();
    for r in &m.rules {
        let pred = fresh.named(&format!("__R_{}", r.head.pred));
        let mut args = r.head.args.clone();
        args.extend(r.existentials());
        let atom = Atom { pred, args };
        out.push(Dependency::new(r.body.clone(), vec![atom.clone()]));
        for a in &r.body {
            out.push(Dependency::new(vec![atom.clone()], vec![a.clone()]));
        }
        rules.push(Mapping::new(r.head.clone(), vec![atom]));
    }
    (out, MappingSet::new(rules))
}

pub fn reduce_problem_to_projmap(p: &Problem) -> Problem {
    let mut fresh = FreshNames::for_problem(p);
    let (constraints, mappings) = reduce_to_projmap(&p.constraints, &p.mappings, &mut fresh);
    let mut schema = p.schema.clone();
    for r in &mappings.rules {
        schema.source.insert(r.body[0].pred.clone(), r.body[0].arity());
    }
    Problem { schema, constraints, mappings, policy: p.policy.clone() }
}

/// Replaces every mapping by rules over one marker relation: the marker
/// recreates each mapping body around a marked value, and any body match
/// marks its exported value. The single remaining mapping publishes the
/// marker. Needs at most one exported variable per mapping.
pub fn sceq_to_fgtgd(p: &Problem) -> Result<Problem, RewriteError> {
    let mut fresh = FreshNames::for_problem(p);
    let marker = fresh.named("Crit");
    let view = fresh.named("CritView");
    let mut constraints = p.constraints.clone();
    for r in &p.mappings.rules {
        match r.head.args.as_slice() {
            [] => {
                let mut used: HashSet<Name> = vars_of(&r.body).into_iter().collect();
                let w = fresh_var("w", &mut used);
                constraints.push(Dependency::new(vec![Atom { pred: marker.clone(), args: vec![w] }], r.body.clone()));
            }
            [x] => {
                let mark = Atom { pred: marker.clone(), args: vec![x.clone()] };
                constraints.push(Dependency::new(vec![mark.clone()], r.body.clone()));
                constraints.push(Dependency::new(r.body.clone(), vec![mark]));
            }
            _ => return Err(RewriteError::FrontierTooLarge(r.head.pred.to_string())),
        }
    }
    let mut schema = p.schema.clone();
    schema.global.clear();
    schema.global.insert(view.clone(), 1);
    schema.source.insert(marker.clone(), 1);
    let x = name("x");
    let mappings = MappingSet::new(vec![Mapping::new(
        Atom { pred: view, args: vec![x.clone()] },
        vec![Atom { pred: marker, args: vec![x] }],
    )]);
    Ok(Problem { schema, constraints, mappings, policy: p.policy.clone() })
}
