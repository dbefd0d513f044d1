//! Seeded random settings and differential runs across algorithms.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::check::{run_check, Algo, Classes};
use crate::engine::ChaseBudget;
use crate::hardgen::{Circuit, ColoringProblem, Gate, IdImplication};
use crate::model::{name, Atom, ConjunctiveQuery, Dependency, Mapping, MappingSet, Name, Problem, IS_CRIT};
use crate::syntax::schema_from_use;
use crate::verdict::VerdictKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Arbitrary TGDs and CQ mappings.
    General,
    /// Linear TGDs and atomic mappings.
    Ltgd,
    /// Unary inclusion dependencies and projection mappings.
    Uid,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::General, Family::Ltgd, Family::Uid];

    pub fn label(self) -> &'static str {
        match self {
            Family::General => "general",
            Family::Ltgd => "ltgd",
            Family::Uid => "uid",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Family::General => 0x9e37_79b9,
            Family::Ltgd => 0x85eb_ca6b,
            Family::Uid => 0xc2b2_ae35,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Family, String> {
        Family::ALL.into_iter().find(|f| f.label() == s).ok_or_else(|| format!("unknown family `{s}`"))
    }
}

pub fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ salt)
}

struct Gen {
    rng: ChaCha8Rng,
    preds: Vec<(Name, usize)>,
    family: Family,
}

impl Gen {
    fn var(&mut self, pool: usize) -> Name {
        name(&format!("x{}", self.rng.gen_range(0..pool)))
    }

    /// An atom over `pred` with variables from a pool; repeats only where
    /// the family allows them.
    fn atom(&mut self, k: usize, pool: usize, repeats: bool) -> Atom {
        let (pred, n) = self.preds[k].clone();
        let mut args: Vec<Name> = Vec::new();
        while args.len() < n {
            let v = self.var(pool.max(n));
            if repeats || !args.contains(&v) {
                args.push(v);
            }
        }
        Atom { pred, args }
    }

    /// Head predicate index: above every body predicate except with small
    /// probability, so most chases stop after a few rounds.
    fn head_pred(&mut self, body_max: usize) -> usize {
        let n = self.preds.len();
        if body_max + 1 < n && self.rng.gen_bool(0.9) {
            self.rng.gen_range(body_max + 1..n)
        } else {
            self.rng.gen_range(0..n)
        }
    }

    fn head(&mut self, k: usize, body_vars: &[Name], max_frontier: usize, existential: f64) -> Atom {
        let (pred, n) = self.preds[k].clone();
        let mut args: Vec<Name> = Vec::new();
        let mut frontier = 0;
        let mut z = 0;
        for _ in 0..n {
            let candidates: Vec<&Name> = body_vars.iter().filter(|v| !args.contains(v)).collect();
            let use_body = frontier < max_frontier && !candidates.is_empty() && !self.rng.gen_bool(existential);
            if use_body {
                args.push((*candidates.choose(&mut self.rng).expect("nonempty")).clone());
                frontier += 1;
            } else {
                z += 1;
                args.push(name(&format!("z{z}")));
            }
        }
        Atom { pred, args }
    }

    fn constraint(&mut self) -> Dependency {
        let n = self.preds.len();
        let (nbody, repeats, max_frontier) = match self.family {
            Family::General => (self.rng.gen_range(1..=2), true, usize::MAX),
            Family::Ltgd => (1, self.rng.gen_bool(0.4), usize::MAX),
            Family::Uid => (1, false, usize::from(self.rng.gen_bool(0.85))),
        };
        let body_preds: Vec<usize> = (0..nbody).map(|_| self.rng.gen_range(0..n.saturating_sub(1).max(1))).collect();
        let body: Vec<Atom> = body_preds.iter().map(|&k| self.atom(k, 4, repeats)).collect();
        let body_vars = crate::model::vars_of(&body);
        let hk = self.head_pred(*body_preds.iter().max().expect("body"));
        let mut head = vec![self.head(hk, &body_vars, max_frontier, 0.35)];
        if self.family != Family::Uid && self.rng.gen_bool(0.15) {
            let hk2 = self.head_pred(*body_preds.iter().max().expect("body"));
            head.push(self.head(hk2, &body_vars, max_frontier, 0.35));
        }
        Dependency::new(body, head)
    }

    fn mapping(&mut self, i: usize) -> Mapping {
        let n = self.preds.len();
        let (nbody, repeats) = match self.family {
            Family::General => (self.rng.gen_range(1..=2), true),
            Family::Ltgd => (1, self.rng.gen_bool(0.4)),
            Family::Uid => (1, false),
        };
        let body: Vec<Atom> = (0..nbody).map(|_| self.rng.gen_range(0..n)).collect::<Vec<_>>().into_iter().map(|k| self.atom(k, 4, repeats)).collect();
        let mut vars = crate::model::vars_of(&body);
        vars.shuffle(&mut self.rng);
        let keep = self.rng.gen_range(0..=vars.len().min(2));
        let head = Atom { pred: name(&format!("T{i}")), args: vars[..keep].to_vec() };
        Mapping::new(head, body)
    }

    fn policy(&mut self) -> ConjunctiveQuery {
        let n = self.preds.len();
        let natoms = self.rng.gen_range(1..=3);
        let mut atoms: Vec<Atom> = (0..natoms).map(|_| self.rng.gen_range(0..n)).collect::<Vec<_>>().into_iter().map(|k| self.atom(k, 4, true)).collect();
        if self.rng.gen_bool(0.2) {
            let vars = crate::model::vars_of(&atoms);
            let v = vars.choose(&mut self.rng).expect("policy has variables").clone();
            atoms.push(Atom { pred: name(IS_CRIT), args: vec![v] });
        }
        ConjunctiveQuery::boolean(atoms)
    }
}

/// A random setting of the family; equal seeds give equal settings.
pub fn random_problem(family: Family, seed: u64) -> Problem {
    let mut rng = rng_for(seed, family.salt());
    let npreds = rng.gen_range(2..=4);
    let preds = (0..npreds).map(|k| (name(&format!("P{k}")), rng.gen_range(1..=3))).collect();
    let mut g = Gen { rng, preds, family };
    let nc = g.rng.gen_range(0..=4);
    let constraints: Vec<Dependency> = (0..nc).map(|_| g.constraint()).collect();
    let nm = g.rng.gen_range(1..=3);
    let mappings = MappingSet::new((0..nm).map(|i| g.mapping(i)).collect());
    let policy = g.policy();
    let schema = schema_from_use(&constraints, &mappings, &policy);
    Problem { schema, constraints, mappings, policy }
}

pub fn random_graph(seed: u64, max_vertices: usize) -> ColoringProblem {
    let mut rng = rng_for(seed, 0x27d4_eb2f);
    let n = rng.gen_range(1..=max_vertices);
    let density = rng.gen_range(0.2..0.8);
    let mut edges = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            if rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    ColoringProblem::new(n, edges).expect("valid graph")
}

/// Gates drive wires `1..=gates`, inputs are the wires after them; every
/// gate reads only higher-numbered wires. Some circuits open with
/// `NOT(OR(w4, NOT w4))` so that unsatisfiable ones occur.
pub fn random_circuit(seed: u64, max_gates: usize, max_inputs: usize) -> Circuit {
    let mut rng = rng_for(seed, 0x1656_67b1);
    let ngates = rng.gen_range(1..=max_gates);
    let ninputs = rng.gen_range(1..=max_inputs);
    let wires = ngates + ninputs;
    let contradiction = ngates >= 3 && rng.gen_bool(0.35);
    let gates = (1..=ngates)
        .map(|out| {
            if contradiction && out <= 3 {
                [Gate::Not { input: 2, output: 1 }, Gate::Or { left: 4, right: 3, output: 2 }, Gate::Not { input: 4, output: 3 }]
                    [out - 1]
            } else if rng.gen_bool(0.4) {
                Gate::Not { input: rng.gen_range(out + 1..=wires), output: out }
            } else {
                let (left, right) = (rng.gen_range(out + 1..=wires), rng.gen_range(out + 1..=wires));
                Gate::Or { left, right, output: out }
            }
        })
        .collect();
    Circuit::new(wires, gates).expect("acyclic by construction")
}

/// Inclusion dependencies between predicates `R0..` of one arity, each
/// pointing to a higher index, and a goal between two of them.
pub fn random_id_implication(seed: u64) -> IdImplication {
    let mut rng = rng_for(seed, 0xd3a2_646c);
    let arity = rng.gen_range(1..=3);
    let npreds = rng.gen_range(2..=5);
    let vars: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
    let pred = |k: usize| format!("R{k}");
    let id = |rng: &mut ChaCha8Rng, a: usize, b: usize| {
        let body: Vec<&str> = vars.iter().map(String::as_str).collect();
        let mut head: Vec<String> = vars.clone();
        head.shuffle(rng);
        let mut z = 0;
        for h in head.iter_mut() {
            if rng.gen_bool(0.2) {
                z += 1;
                *h = format!("z{z}");
            }
        }
        let head: Vec<&str> = head.iter().map(String::as_str).collect();
        Dependency::new(vec![Atom::new(&pred(a), &body)], vec![Atom::new(&pred(b), &head)])
    };
    let nids = rng.gen_range(0..=6);
    let mut ids = Vec::new();
    for _ in 0..nids {
        let a = rng.gen_range(0..npreds - 1);
        let b = rng.gen_range(a + 1..npreds);
        ids.push(id(&mut rng, a, b));
    }
    let b = rng.gen_range(1..npreds);
    let goal = id(&mut rng, 0, b);
    IdImplication::new(ids, goal).expect("well-formed")
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffRow {
    pub label: String,
    pub verdicts: BTreeMap<Algo, VerdictKind>,
    pub errors: BTreeMap<Algo, String>,
}

impl DiffRow {
    pub fn has_unknown(&self) -> bool {
        self.verdicts.values().any(|v| *v == VerdictKind::Unknown)
    }

    /// Two algorithms gave different definite answers, or one failed.
    pub fn disagrees(&self) -> bool {
        let definite: Vec<VerdictKind> = self.verdicts.values().copied().filter(|v| *v != VerdictKind::Unknown).collect();
        !self.errors.is_empty() || definite.windows(2).any(|w| w[0] != w[1])
    }

    pub fn resolved(&self) -> Option<VerdictKind> {
        self.verdicts.values().copied().find(|v| *v != VerdictKind::Unknown)
    }
}

impl fmt::Display for DiffRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.label)?;
        for (a, v) in &self.verdicts {
            write!(f, " {a}={v}")?;
        }
        for (a, e) in &self.errors {
            write!(f, " {a}!{e}")?;
        }
        Ok(())
    }
}

/// Runs the legal members of `algos` (default: every legal algorithm) on
/// one setting.
pub fn diff_problem(label: String, p: &Problem, algos: Option<&[Algo]>, budget: ChaseBudget) -> DiffRow {
    let legal = Classes::of(p).legal_algos();
    let chosen: Vec<Algo> = match algos {
        Some(a) => a.iter().copied().filter(|x| legal.contains(x)).collect(),
        None => legal,
    };
    let mut row = DiffRow { label, verdicts: BTreeMap::new(), errors: BTreeMap::new() };
    for a in chosen {
        match run_check(p, a, budget) {
            Ok(r) => {
                row.verdicts.insert(a, r.verdict);
            }
            Err(e) => {
                row.errors.insert(a, e.to_string());
            }
        }
    }
    row
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DiffSummary {
    pub rows: Vec<DiffRow>,
}

impl DiffSummary {
    pub fn total(&self) -> usize {
        self.rows.len()
    }

    pub fn disagreements(&self) -> Vec<&DiffRow> {
        self.rows.iter().filter(|r| r.disagrees()).collect()
    }

    pub fn unknown(&self) -> usize {
        self.rows.iter().filter(|r| r.has_unknown()).count()
    }

    /// Fraction of settings where some algorithm answered UNKNOWN.
    pub fn unknown_rate(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.unknown() as f64 / self.rows.len() as f64
        }
    }

    pub fn count(&self, v: VerdictKind) -> usize {
        self.rows.iter().filter(|r| !r.disagrees() && r.resolved() == Some(v)).count()
    }
}

impl fmt::Display for DiffSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} settings: {} disclosed, {} not disclosed, {} with an unknown side, {} disagreements",
            self.total(),
            self.count(VerdictKind::Disclosed),
            self.count(VerdictKind::NotDisclosed),
            self.unknown(),
            self.disagreements().len()
        )
    }
}

pub fn run_diff(family: Family, seeds: Range<u64>, algos: Option<&[Algo]>, budget: ChaseBudget) -> DiffSummary {
    let rows = seeds
        .into_par_iter()
        .map(|s| diff_problem(format!("{family}#{s}"), &random_problem(family, s), algos, budget))
        .collect();
    DiffSummary { rows }
}
