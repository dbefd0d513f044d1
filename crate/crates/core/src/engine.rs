//! Homomorphism search and the restricted chase shared by every algorithm.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::instance::Instance;
use crate::model::{vars_of, Atom, ConjunctiveQuery, Dependency, Fact, Name, Value};

pub type Binding = BTreeMap<Name, Value>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("query must be Boolean")]
    NonBoolean,
    #[error("predicate {0} has arity above 2")]
    NonBinary(String),
}

/// Atoms over variable slots `0..nvars`.
#[derive(Clone, Debug)]
struct Pattern {
    vars: Vec<Name>,
    atoms: Vec<(Name, Vec<usize>)>,
}

impl Pattern {
    /// Slots follow `first`, then the remaining variables of `atoms`.
    fn new(first: &[Name], atoms: &[Atom]) -> Pattern {
        let mut vars: Vec<Name> = first.to_vec();
        let mut slot: HashMap<Name, usize> = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        for v in vars_of(atoms) {
            if !slot.contains_key(&v) {
                slot.insert(v.clone(), vars.len());
                vars.push(v);
            }
        }
        let atoms = atoms.iter().map(|a| (a.pred.clone(), a.args.iter().map(|v| slot[v]).collect())).collect();
        Pattern { vars, atoms }
    }
}

/// Backtracking matcher. `emit` returns false to stop the search.
fn search(
    inst: &Instance,
    atoms: &[(Name, Vec<usize>)],
    done: &mut [bool],
    binding: &mut [Option<Value>],
    emit: &mut dyn FnMut(&[Option<Value>]) -> bool,
) -> bool {
    let mut best: Option<(usize, usize)> = None;
    for (i, (pred, args)) in atoms.iter().enumerate() {
        if done[i] {
            continue;
        }
        let Some(rel) = inst.relation(pred) else { return true };
        let mut cost = rel.len();
        for (pos, &s) in args.iter().enumerate() {
            if let Some(v) = &binding[s] {
                cost = cost.min(rel.lookup(pos, v).len());
            }
        }
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((i, cost));
        }
    }
    let Some((i, cost)) = best else { return emit(binding) };
    if cost == 0 {
        return true;
    }
    let (pred, args) = &atoms[i];
    let rel = inst.relation(pred).expect("checked above");
    let mut probe: Option<&[u32]> = None;
    for (pos, &s) in args.iter().enumerate() {
        if let Some(v) = &binding[s] {
            let ids = rel.lookup(pos, v);
            if probe.is_none_or(|p| ids.len() < p.len()) {
                probe = Some(ids);
            }
        }
    }
    done[i] = true;
    let mut newly = Vec::with_capacity(args.len());
    let mut visit = |row: &[Value], binding: &mut [Option<Value>]| -> bool {
        newly.clear();
        let mut ok = true;
        for (pos, &s) in args.iter().enumerate() {
            match &binding[s] {
                Some(v) if *v != row[pos] => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    binding[s] = Some(row[pos].clone());
                    newly.push(s);
                }
            }
        }
        let keep_going = !ok || search(inst, atoms, done, binding, emit);
        for &s in &newly {
            binding[s] = None;
        }
        keep_going
    };
    let mut cont = true;
    match probe {
        Some(ids) => {
            for &id in ids {
                if !visit(rel.row(id), binding) {
                    cont = false;
                    break;
                }
            }
        }
        None => {
            for row in rel.rows() {
                if !visit(row, binding) {
                    cont = false;
                    break;
                }
            }
        }
    }
    done[i] = false;
    cont
}

fn to_binding(vars: &[Name], slots: &[Option<Value>]) -> Binding {
    vars.iter().zip(slots).filter_map(|(v, s)| s.clone().map(|s| (v.clone(), s))).collect()
}

/// First homomorphism of `atoms` into `inst` extending `fixed`.
pub fn find_match(inst: &Instance, atoms: &[Atom], fixed: &Binding) -> Option<Binding> {
    let first: Vec<Name> = fixed.keys().cloned().collect();
    let pat = Pattern::new(&first, atoms);
    let mut slots: Vec<Option<Value>> = vec![None; pat.vars.len()];
    for (i, v) in first.iter().enumerate() {
        slots[i] = Some(fixed[v].clone());
    }
    let mut done = vec![false; pat.atoms.len()];
    let mut found = None;
    search(inst, &pat.atoms, &mut done, &mut slots, &mut |b| {
        found = Some(to_binding(&pat.vars, b));
        false
    });
    found
}

pub fn holds(inst: &Instance, atoms: &[Atom]) -> bool {
    find_match(inst, atoms, &Binding::new()).is_some()
}

/// Every homomorphism of `q` into `db`, ordered by the values bound to the
/// variables in order of first occurrence.
pub fn eval_cq(db: &Instance, q: &ConjunctiveQuery) -> Vec<Binding> {
    let pat = Pattern::new(&[], &q.atoms);
    let mut rows: BTreeSet<Vec<Value>> = BTreeSet::new();
    let mut slots: Vec<Option<Value>> = vec![None; pat.vars.len()];
    let mut done = vec![false; pat.atoms.len()];
    search(db, &pat.atoms, &mut done, &mut slots, &mut |b| {
        rows.insert(b.iter().map(|v| v.clone().expect("all slots bound")).collect());
        true
    });
    rows.into_iter().map(|row| pat.vars.iter().cloned().zip(row).collect()).collect()
}

/// Brute-force check that no dependency has an unsatisfied trigger.
pub fn satisfies(inst: &Instance, deps: &[Dependency]) -> bool {
    deps.iter().all(|d| {
        let q = ConjunctiveQuery::boolean(d.body.clone());
        let frontier = d.frontier();
        eval_cq(inst, &q).into_iter().all(|b| {
            let fixed: Binding = frontier.iter().map(|v| (v.clone(), b[v].clone())).collect();
            find_match(inst, &d.head, &fixed).is_some()
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChaseBudget {
    pub max_rounds: usize,
    pub max_facts: usize,
}

impl Default for ChaseBudget {
    fn default() -> ChaseBudget {
        ChaseBudget { max_rounds: 8, max_facts: 100_000 }
    }
}

impl ChaseBudget {
    pub fn new(max_rounds: usize, max_facts: usize) -> ChaseBudget {
        ChaseBudget { max_rounds, max_facts }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChaseStatus {
    #[serde(rename = "SATURATED")]
    Saturated,
    #[serde(rename = "BUDGET_EXHAUSTED")]
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: usize,
    pub binding: Vec<(Name, Value)>,
    pub added: Vec<Fact>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} [", self.rule)?;
        for (i, (v, x)) in self.binding.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={x}")?;
        }
        f.write_str("] +")?;
        for fact in &self.added {
            write!(f, " {fact}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ChaseResult {
    pub instance: Instance,
    pub status: ChaseStatus,
    pub rounds: usize,
    pub trace: Vec<TraceStep>,
}

#[derive(Clone, Debug)]
struct Rule {
    body: Pattern,
    head: Vec<(Name, Vec<usize>)>,
    /// Body slots that also occur in the head.
    frontier: Vec<usize>,
    /// Slots past the body variables, one per existential.
    existentials: Vec<usize>,
    nbody: usize,
}

impl Rule {
    fn new(d: &Dependency) -> Rule {
        let body = Pattern::new(&[], &d.body);
        let nbody = body.vars.len();
        let mut all = body.vars.clone();
        let ex = d.existentials();
        all.extend(ex.iter().cloned());
        let slot: HashMap<&Name, usize> = all.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let head = d.head.iter().map(|a| (a.pred.clone(), a.args.iter().map(|v| slot[v]).collect())).collect();
        let frontier = d.frontier().iter().map(|v| slot[v]).collect();
        let existentials = (nbody..nbody + ex.len()).collect();
        Rule { body, head, frontier, existentials, nbody }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundOutcome {
    /// Number of facts added.
    Fired(usize),
    Quiet,
    FactLimit,
}

/// Restricted chase state advanced one breadth-first round at a time.
///
/// Triggers are collected from the instance as it stands at the start of a
/// round, restricted to those touching a fact added since the previous
/// collection, and fired per rule in declaration order and binding order.
#[derive(Clone, Debug)]
pub struct Chaser {
    rules: Vec<Rule>,
    deps: Vec<Dependency>,
    inst: Instance,
    pending: Vec<Fact>,
    next_null: u64,
    trace: Vec<TraceStep>,
    rounds: usize,
}

impl Chaser {
    pub fn new(db: Instance, deps: &[Dependency]) -> Chaser {
        let pending = db.facts().collect();
        let next_null = db
            .values()
            .iter()
            .filter_map(|v| if let Value::Null(k) = v { Some(*k) } else { None })
            .max()
            .unwrap_or(0)
            + 1;
        Chaser {
            rules: deps.iter().map(Rule::new).collect(),
            deps: deps.to_vec(),
            inst: db,
            pending,
            next_null,
            trace: Vec::new(),
            rounds: 0,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    pub fn dependencies(&self) -> &[Dependency] {
        &self.deps
    }

    pub fn into_parts(self) -> (Instance, Vec<TraceStep>, usize) {
        (self.inst, self.trace, self.rounds)
    }

    /// Body bindings of `rule` that use at least one pending fact, sorted.
    fn triggers(&self, r: &Rule) -> BTreeSet<Vec<Value>> {
        let mut out = BTreeSet::new();
        let mut by_pred: HashMap<&Name, Vec<&Fact>> = HashMap::new();
        for f in &self.pending {
            by_pred.entry(&f.pred).or_default().push(f);
        }
        let atoms = &r.body.atoms;
        for (i, (pred, args)) in atoms.iter().enumerate() {
            let Some(facts) = by_pred.get(pred) else { continue };
            for f in facts {
                let mut slots: Vec<Option<Value>> = vec![None; r.nbody];
                let mut ok = true;
                for (pos, &s) in args.iter().enumerate() {
                    match &slots[s] {
                        Some(v) if *v != f.args[pos] => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => slots[s] = Some(f.args[pos].clone()),
                    }
                }
                if !ok {
                    continue;
                }
                let mut done = vec![false; atoms.len()];
                done[i] = true;
                search(&self.inst, atoms, &mut done, &mut slots, &mut |b| {
                    out.insert(b.iter().map(|v| v.clone().expect("bound")).collect());
                    true
                });
            }
        }
        out
    }

    fn active(&self, r: &Rule, body: &[Value]) -> bool {
        let mut slots: Vec<Option<Value>> = vec![None; r.nbody + r.existentials.len()];
        for &s in &r.frontier {
            slots[s] = Some(body[s].clone());
        }
        let mut done = vec![false; r.head.len()];
        let mut found = false;
        search(&self.inst, &r.head, &mut done, &mut slots, &mut |_| {
            found = true;
            false
        });
        !found
    }

    pub fn has_active_trigger(&self) -> bool {
        self.rules.iter().any(|r| self.triggers(r).iter().any(|t| self.active(r, t)))
    }

    pub fn round(&mut self, max_facts: usize) -> RoundOutcome {
        let collected: Vec<BTreeSet<Vec<Value>>> = self.rules.iter().map(|r| self.triggers(r)).collect();
        self.pending.clear();
        let mut added = 0;
        for (ri, trig) in collected.into_iter().enumerate() {
            for body in trig {
                let rule = &self.rules[ri];
                if !self.active(rule, &body) {
                    continue;
                }
                if self.inst.len() + rule.head.len() > max_facts {
                    if added > 0 {
                        self.rounds += 1;
                    }
                    return RoundOutcome::FactLimit;
                }
                let mut vals = body.clone();
                for _ in &rule.existentials {
                    vals.push(Value::Null(self.next_null));
                    self.next_null += 1;
                }
                let mut new_facts = Vec::new();
                for (pred, args) in &rule.head {
                    let f = Fact { pred: pred.clone(), args: args.iter().map(|&s| vals[s].clone()).collect() };
                    if self.inst.insert(&f) {
                        new_facts.push(f);
                    }
                }
                added += new_facts.len();
                self.pending.extend(new_facts.iter().cloned());
                let binding = rule.body.vars.iter().cloned().zip(body).collect();
                self.trace.push(TraceStep { rule: ri, binding, added: new_facts });
            }
        }
        if added == 0 {
            RoundOutcome::Quiet
        } else {
            self.rounds += 1;
            RoundOutcome::Fired(added)
        }
    }

    /// Applies a value substitution to the whole state.
    pub fn substitute(&mut self, map: &HashMap<Value, Value>) -> usize {
        if map.is_empty() {
            return 0;
        }
        let (inst, changed) = self.inst.substitute(map);
        let n = changed.len();
        let mut pending: Vec<Fact> = self
            .pending
            .drain(..)
            .map(|f| Fact { pred: f.pred, args: f.args.iter().map(|v| map.get(v).unwrap_or(v).clone()).collect() })
            .collect();
        pending.extend(changed);
        let mut seen = HashSet::new();
        pending.retain(|f| seen.insert(f.clone()));
        self.pending = pending;
        self.inst = inst;
        n
    }

    /// Extra facts inserted from outside a round; they become pending.
    pub fn add_fact(&mut self, f: Fact) -> bool {
        if self.inst.insert(&f) {
            self.pending.push(f);
            true
        } else {
            false
        }
    }
}

pub fn chase(db: &Instance, deps: &[Dependency], budget: ChaseBudget) -> ChaseResult {
    let mut c = Chaser::new(db.clone(), deps);
    let mut status = None;
    for _ in 0..budget.max_rounds {
        match c.round(budget.max_facts) {
            RoundOutcome::Fired(_) => {}
            RoundOutcome::Quiet => {
                status = Some(ChaseStatus::Saturated);
                break;
            }
            RoundOutcome::FactLimit => {
                status = Some(ChaseStatus::BudgetExhausted);
                break;
            }
        }
    }
    let status = status.unwrap_or_else(|| {
        if c.has_active_trigger() {
            ChaseStatus::BudgetExhausted
        } else {
            ChaseStatus::Saturated
        }
    });
    let (instance, trace, rounds) = c.into_parts();
    ChaseResult { instance, status, rounds, trace }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entailment {
    /// Index of the first entailed query and its witness.
    Entailed { query: usize, witness: Binding },
    NotEntailed,
    Unknown(String),
}

#[derive(Clone, Debug)]
pub struct EntailReport {
    pub answer: Entailment,
    pub rounds: usize,
    pub facts: usize,
    pub instance: Instance,
    pub trace: Vec<TraceStep>,
}

pub fn entails(db: &Instance, deps: &[Dependency], q: &ConjunctiveQuery, budget: ChaseBudget) -> Result<EntailReport, EngineError> {
    entails_any(db, deps, std::slice::from_ref(q), budget)
}

/// One shared chase; the queries are checked in order after every round.
pub fn entails_any(
    db: &Instance,
    deps: &[Dependency],
    qs: &[ConjunctiveQuery],
    budget: ChaseBudget,
) -> Result<EntailReport, EngineError> {
    if qs.iter().any(|q| !q.is_boolean()) {
        return Err(EngineError::NonBoolean);
    }
    let check = |inst: &Instance| {
        qs.iter()
            .enumerate()
            .find_map(|(i, q)| find_match(inst, &q.atoms, &Binding::new()).map(|w| Entailment::Entailed { query: i, witness: w }))
    };
    let mut c = Chaser::new(db.clone(), deps);
    let finish = |c: Chaser, answer: Entailment| {
        let (instance, trace, rounds) = c.into_parts();
        EntailReport { answer, rounds, facts: instance.len(), instance, trace }
    };
    if let Some(a) = check(c.instance()) {
        return Ok(finish(c, a));
    }
    for _ in 0..budget.max_rounds {
        match c.round(budget.max_facts) {
            RoundOutcome::Quiet => return Ok(finish(c, Entailment::NotEntailed)),
            RoundOutcome::FactLimit => {
                if let Some(a) = check(c.instance()) {
                    return Ok(finish(c, a));
                }
                let reason = format!("fact limit {} reached", budget.max_facts);
                return Ok(finish(c, Entailment::Unknown(reason)));
            }
            RoundOutcome::Fired(_) => {
                if let Some(a) = check(c.instance()) {
                    return Ok(finish(c, a));
                }
            }
        }
    }
    if c.has_active_trigger() {
        let reason = format!("round limit {} reached", budget.max_rounds);
        Ok(finish(c, Entailment::Unknown(reason)))
    } else {
        Ok(finish(c, Entailment::NotEntailed))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestEdge {
    pub parent: Value,
    pub child: Value,
    pub fact: Fact,
}

/// Chase of a single fact under binary UIDs, as a forest of generated values.
#[derive(Clone, Debug, Default)]
pub struct AnnotatedChaseForest {
    pub roots: Vec<Value>,
    pub labels: BTreeMap<Value, BTreeSet<Name>>,
    pub edges: Vec<ForestEdge>,
    pub status: Option<ChaseStatus>,
    pub instance: Instance,
}

impl AnnotatedChaseForest {
    pub fn nodes(&self) -> BTreeSet<Value> {
        self.instance.values()
    }

    pub fn children(&self, v: &Value) -> Vec<&ForestEdge> {
        self.edges.iter().filter(|e| e.parent == *v).collect()
    }

    /// No value has two distinct neighbours through facts of the same
    /// predicate holding the value at the same position.
    pub fn unique_adjoining_label(&self) -> bool {
        for p in self.instance.preds() {
            let rel = self.instance.relation(p).expect("listed");
            if rel.arity() != 2 {
                continue;
            }
            for pos in 0..2 {
                let mut seen: HashMap<&Value, &Value> = HashMap::new();
                for row in rel.rows() {
                    if let Some(other) = seen.insert(&row[pos], &row[1 - pos]) {
                        if other != &row[1 - pos] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

pub fn build_chase_forest(
    db: &Instance,
    uids: &[Dependency],
    budget: ChaseBudget,
) -> Result<AnnotatedChaseForest, EngineError> {
    for a in db.facts().map(|f| (f.pred.clone(), f.args.len())).chain(
        uids.iter().flat_map(|d| d.body.iter().chain(&d.head)).map(|a| (a.pred.clone(), a.arity())),
    ) {
        if a.1 > 2 {
            return Err(EngineError::NonBinary(a.0.to_string()));
        }
    }
    let result = chase(db, uids, budget);
    let mut forest = AnnotatedChaseForest { roots: db.values().into_iter().collect(), ..Default::default() };
    let mut known: HashSet<Value> = db.values().into_iter().collect();
    for step in &result.trace {
        let mut fresh: Vec<Value> = Vec::new();
        for f in &step.added {
            for v in &f.args {
                if !known.contains(v) && !fresh.contains(v) {
                    fresh.push(v.clone());
                }
            }
        }
        for f in &step.added {
            if f.args.len() != 2 {
                continue;
            }
            let (a, b) = (&f.args[0], &f.args[1]);
            let (parent, child) = match (fresh.contains(a), fresh.contains(b)) {
                (false, true) => (a, b),
                (true, false) => (b, a),
                (true, true) if a != b && fresh.first() == Some(a) => (a, b),
                (true, true) if a != b => (b, a),
                _ => continue,
            };
            forest.edges.push(ForestEdge { parent: parent.clone(), child: child.clone(), fact: f.clone() });
        }
        for v in &fresh {
            let has_parent = forest.edges.iter().any(|e| &e.child == v);
            if !has_parent {
                forest.roots.push(v.clone());
            }
        }
        known.extend(fresh);
    }
    for f in result.instance.facts() {
        if f.args.len() == 1 {
            forest.labels.entry(f.args[0].clone()).or_default().insert(f.pred.clone());
        }
    }
    forest.status = Some(result.status);
    forest.instance = result.instance;
    Ok(forest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::name;

    fn c(s: &str) -> Value {
        Value::Const(name(s))
    }

    fn db(facts: &[Fact]) -> Instance {
        Instance::from_facts(facts)
    }

    #[test]
    fn eval_examples() {
        let d = db(&[Fact::new("R", vec![c("a"), c("b")])]);
        let q = ConjunctiveQuery::boolean(vec![Atom::new("R", &["x", "y"])]);
        let m = eval_cq(&d, &q);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0]["x"], c("a"));
        let q = ConjunctiveQuery::boolean(vec![Atom::new("R", &["x", "x"])]);
        assert!(eval_cq(&d, &q).is_empty());
    }

    #[test]
    fn eval_join_and_missing_relation() {
        let d = db(&[
            Fact::new("R", vec![c("a"), c("b")]),
            Fact::new("R", vec![c("b"), c("c")]),
            Fact::new("R", vec![c("c"), c("a")]),
        ]);
        let q = ConjunctiveQuery::boolean(vec![
            Atom::new("R", &["x", "y"]),
            Atom::new("R", &["y", "z"]),
            Atom::new("R", &["z", "x"]),
        ]);
        assert_eq!(eval_cq(&d, &q).len(), 3);
        let q = ConjunctiveQuery::boolean(vec![Atom::new("S", &["x"])]);
        assert!(eval_cq(&d, &q).is_empty());
    }

    fn rule(body: &[Atom], head: &[Atom]) -> Dependency {
        Dependency::new(body.to_vec(), head.to_vec())
    }

    #[test]
    fn chase_examples() {
        let r = rule(&[Atom::new("A", &["x"])], &[Atom::new("R", &["x", "y"])]);
        let res = chase(&db(&[Fact::new("A", vec![c("c")])]), std::slice::from_ref(&r), ChaseBudget::new(2, 100));
        assert_eq!(res.status, ChaseStatus::Saturated);
        assert!(res.instance.contains(&Fact::new("R", vec![c("c"), Value::Null(1)])));
        assert_eq!(res.instance.len(), 2);

        let start = db(&[Fact::new("A", vec![c("c")]), Fact::new("R", vec![c("c"), c("d")])]);
        let res = chase(&start, &[r], ChaseBudget::new(2, 100));
        assert_eq!(res.status, ChaseStatus::Saturated);
        assert_eq!(res.instance.len(), 2);

        let cyc = [
            rule(&[Atom::new("R", &["x", "y"])], &[Atom::new("S", &["y", "z"])]),
            rule(&[Atom::new("S", &["x", "y"])], &[Atom::new("R", &["y", "z"])]),
        ];
        let res = chase(&db(&[Fact::new("R", vec![c("a"), c("b")])]), &cyc, ChaseBudget::new(3, 100));
        assert_eq!(res.status, ChaseStatus::BudgetExhausted);
        let nulls = res.instance.values().into_iter().filter(|v| matches!(v, Value::Null(_))).count();
        assert_eq!(nulls, 3);
        assert_eq!(res.rounds, 3);
    }

    #[test]
    fn zero_budget() {
        let r = rule(&[Atom::new("A", &["x"])], &[Atom::new("B", &["x"])]);
        let res = chase(&db(&[Fact::new("A", vec![c("c")])]), &[r], ChaseBudget::new(0, 100));
        assert_eq!(res.status, ChaseStatus::BudgetExhausted);
        let res = chase(&db(&[Fact::new("A", vec![c("c")])]), &[], ChaseBudget::new(0, 100));
        assert_eq!(res.status, ChaseStatus::Saturated);
    }

    #[test]
    fn fact_limit_stops() {
        let r = rule(&[Atom::new("R", &["x", "y"])], &[Atom::new("R", &["y", "z"])]);
        let res = chase(&db(&[Fact::new("R", vec![c("a"), c("b")])]), &[r], ChaseBudget::new(100, 5));
        assert_eq!(res.status, ChaseStatus::BudgetExhausted);
        assert!(res.instance.len() <= 5);
    }

    #[test]
    fn entailment_examples() {
        let r = rule(&[Atom::new("A", &["x"])], &[Atom::new("R", &["x", "y"])]);
        let d = db(&[Fact::new("A", vec![c("c")])]);
        let q = ConjunctiveQuery::boolean(vec![Atom::new("R", &["x", "y"])]);
        let rep = entails(&d, &[r], &q, ChaseBudget::default()).unwrap();
        assert!(matches!(rep.answer, Entailment::Entailed { query: 0, .. }));
        let q = ConjunctiveQuery::boolean(vec![Atom::new("B", &["x"])]);
        let rep = entails(&d, &[], &q, ChaseBudget::default()).unwrap();
        assert_eq!(rep.answer, Entailment::NotEntailed);
        let q = ConjunctiveQuery { atoms: vec![Atom::new("A", &["x"])], free: vec![name("x")] };
        assert_eq!(entails(&d, &[], &q, ChaseBudget::default()).unwrap_err(), EngineError::NonBoolean);
    }

    #[test]
    fn forest_examples() {
        let d = db(&[Fact::new("IsCrit", vec![Value::Crit])]);
        let r = rule(&[Atom::new("IsCrit", &["x"])], &[Atom::new("R1", &["y", "x"])]);
        let f = build_chase_forest(&d, std::slice::from_ref(&r), ChaseBudget::default()).unwrap();
        assert_eq!(f.roots, vec![Value::Crit]);
        assert_eq!(f.edges.len(), 1);
        assert_eq!(f.edges[0].fact, Fact::new("R1", vec![Value::Null(1), Value::Crit]));

        let r0 = rule(&[Atom::new("IsCrit", &["x"])], &[Atom::new("Re", &["t"])]);
        let f = build_chase_forest(&d, &[r, r0], ChaseBudget::default()).unwrap();
        assert_eq!(f.roots.len(), 2);
        assert!(f.unique_adjoining_label());

        let bad = rule(&[Atom::new("T", &["x", "y", "z"])], &[Atom::new("A", &["x"])]);
        assert!(build_chase_forest(&d, &[bad], ChaseBudget::default()).is_err());
    }

    #[test]
    fn saturated_results_are_models() {
        let deps = [
            rule(&[Atom::new("R", &["x", "y"])], &[Atom::new("S", &["y", "z"])]),
            rule(&[Atom::new("S", &["x", "y"]), Atom::new("R", &["y", "w"])], &[Atom::new("T", &["x"])]),
        ];
        let d = db(&[Fact::new("R", vec![c("a"), c("b")]), Fact::new("R", vec![c("b"), c("a")])]);
        let res = chase(&d, &deps, ChaseBudget::default());
        assert_eq!(res.status, ChaseStatus::Saturated);
        assert!(satisfies(&res.instance, &deps));
    }
}
