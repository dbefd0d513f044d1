//! Critical instance, mapping witnesses, and the chase-and-merge fixpoint
//! that defines disclosure.

use std::collections::{BTreeSet, HashMap};

use crate::engine::{eval_cq, find_match, Binding, ChaseBudget, ChaseStatus, Chaser, RoundOutcome, TraceStep};
use crate::instance::Instance;
use crate::model::{name, Atom, ConjunctiveQuery, Dependency, Fact, MappingSet, Name, Value, IS_CRIT};
use crate::verdict::{DiscloseError, Outcome, Verdict};

/// One fact per predicate, every position holding the critical constant.
pub fn critical_instance(preds: &[(Name, usize)]) -> Instance {
    let mut out = Instance::new();
    for (p, n) in preds {
        out.insert(&Fact { pred: p.clone(), args: vec![Value::Crit; *n] });
    }
    out
}

/// Name of the witness constant for existential `y` of mapping rule `k`.
pub fn witness_constant(k: usize, y: &str) -> Value {
    Value::Const(name(&format!("c{k}_{y}")))
}

/// Source witnesses for the critical fact of every global predicate: exported
/// positions hold the critical constant, each existential its own constant.
pub fn hide(m: &MappingSet) -> Instance {
    let mut out = Instance::new();
    for (k, rule) in m.rules.iter().enumerate() {
        let val = |v: &Name| {
            if rule.head.mentions(v) {
                Value::Crit
            } else {
                witness_constant(k + 1, v)
            }
        };
        for a in &rule.body {
            out.insert(&Fact { pred: a.pred.clone(), args: a.args.iter().map(val).collect() });
        }
    }
    out
}

/// `body -> t = crit` for every `t` in `targets`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceqRule {
    pub body: Vec<Atom>,
    pub targets: Vec<Name>,
}

pub fn sceq_rules(m: &MappingSet) -> Vec<SceqRule> {
    m.rules
        .iter()
        .filter(|r| !r.head.args.is_empty())
        .map(|r| SceqRule { body: r.body.clone(), targets: r.head.args.clone() })
        .collect()
}

/// Values some rule binds to a target that are not yet critical.
fn merge_candidates(inst: &Instance, rules: &[SceqRule]) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    for r in rules {
        for b in eval_cq(inst, &ConjunctiveQuery::boolean(r.body.clone())) {
            for t in &r.targets {
                if !b[t].is_crit() {
                    out.insert(b[t].clone());
                }
            }
        }
    }
    out
}

fn to_crit(vals: &BTreeSet<Value>) -> HashMap<Value, Value> {
    vals.iter().map(|v| (v.clone(), Value::Crit)).collect()
}

/// Exhaustive merge fixpoint on a standalone instance. Returns the merged
/// instance and every value sent to the critical constant.
pub fn merge_closure(inst: &Instance, rules: &[SceqRule]) -> (Instance, BTreeSet<Value>) {
    let mut cur = inst.clone();
    let mut merged = BTreeSet::new();
    loop {
        let found = merge_candidates(&cur, rules);
        if found.is_empty() {
            return (cur, merged);
        }
        cur = cur.substitute(&to_crit(&found)).0;
        merged.extend(found);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VisStep {
    pub added: usize,
    pub merged: usize,
    pub fact_limit: bool,
}

/// Visible chase state: chase rounds over the constraints, each followed by
/// the merge fixpoint.
#[derive(Clone, Debug)]
pub struct VisibleChase {
    chaser: Chaser,
    sceq: Vec<SceqRule>,
    merged: BTreeSet<Value>,
    rounds: usize,
}

impl VisibleChase {
    /// Starts from the mapping witnesses, plus `IsCrit(crit)` when asked, and
    /// applies the round-0 merges.
    pub fn new(sigma: &[Dependency], m: &MappingSet, with_iscrit: bool) -> VisibleChase {
        let mut start = hide(m);
        if with_iscrit {
            start.insert(&Fact::new(IS_CRIT, vec![Value::Crit]));
        }
        let mut vc = VisibleChase { chaser: Chaser::new(start, sigma), sceq: sceq_rules(m), merged: BTreeSet::new(), rounds: 0 };
        vc.merge_fixpoint();
        vc
    }

    pub fn instance(&self) -> &Instance {
        self.chaser.instance()
    }

    pub fn merged(&self) -> &BTreeSet<Value> {
        &self.merged
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn trace(&self) -> &[TraceStep] {
        self.chaser.trace()
    }

    pub fn sceq(&self) -> &[SceqRule] {
        &self.sceq
    }

    /// Number of values merged.
    pub fn merge_fixpoint(&mut self) -> usize {
        let mut n = 0;
        loop {
            let found = merge_candidates(self.chaser.instance(), &self.sceq);
            if found.is_empty() {
                return n;
            }
            n += found.len();
            self.chaser.substitute(&to_crit(&found));
            self.merged.extend(found);
        }
    }

    pub fn step(&mut self, max_facts: usize) -> VisStep {
        let outcome = self.chaser.round(max_facts);
        let added = match outcome {
            RoundOutcome::Fired(n) => n,
            _ => 0,
        };
        let merged = self.merge_fixpoint();
        if added > 0 || merged > 0 {
            self.rounds += 1;
        }
        VisStep { added, merged, fact_limit: outcome == RoundOutcome::FactLimit }
    }

    pub fn has_pending_work(&self) -> bool {
        self.chaser.has_active_trigger() || !merge_candidates(self.chaser.instance(), &self.sceq).is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct VisibleChaseResult {
    pub instance: Instance,
    pub merged: BTreeSet<Value>,
    pub status: ChaseStatus,
    pub rounds: usize,
    pub trace: Vec<TraceStep>,
}

pub fn visible_chase(sigma: &[Dependency], m: &MappingSet, budget: ChaseBudget) -> VisibleChaseResult {
    let mut vc = VisibleChase::new(sigma, m, false);
    let mut status = None;
    for _ in 0..budget.max_rounds {
        let s = vc.step(budget.max_facts);
        if s.fact_limit {
            status = Some(ChaseStatus::BudgetExhausted);
            break;
        }
        if s.added == 0 && s.merged == 0 {
            status = Some(ChaseStatus::Saturated);
            break;
        }
    }
    let status = status.unwrap_or(if vc.has_pending_work() { ChaseStatus::BudgetExhausted } else { ChaseStatus::Saturated });
    VisibleChaseResult {
        instance: vc.instance().clone(),
        merged: vc.merged.clone(),
        status,
        rounds: vc.rounds,
        trace: vc.trace().to_vec(),
    }
}

pub(crate) fn check_policy(m: &MappingSet, p: &ConjunctiveQuery) -> Result<(), DiscloseError> {
    if !p.is_boolean() {
        return Err(DiscloseError::NonBoolean);
    }
    if let Some(a) = p.atoms.iter().find(|a| m.get(&a.pred).is_some()) {
        return Err(DiscloseError::NonSourcePolicy(a.pred.to_string()));
    }
    Ok(())
}

pub fn disclose_via_vischase(
    sigma: &[Dependency],
    m: &MappingSet,
    p: &ConjunctiveQuery,
    budget: ChaseBudget,
) -> Result<Outcome, DiscloseError> {
    check_policy(m, p)?;
    let mut vc = VisibleChase::new(sigma, m, p.mentions_pred(IS_CRIT));
    let finish = |vc: VisibleChase, verdict: Verdict| Outcome {
        verdict,
        rounds: vc.rounds,
        facts: vc.instance().len(),
        trace: vc.trace().to_vec(),
        state: Some(vc.chaser.into_parts().0),
    };
    let matched = |vc: &VisibleChase| find_match(vc.instance(), &p.atoms, &Binding::new());
    if let Some(w) = matched(&vc) {
        return Ok(finish(vc, Verdict::Disclosed { witness: w }));
    }
    for _ in 0..budget.max_rounds {
        let s = vc.step(budget.max_facts);
        if let Some(w) = matched(&vc) {
            return Ok(finish(vc, Verdict::Disclosed { witness: w }));
        }
        if s.fact_limit {
            let reason = format!("fact limit {} reached", budget.max_facts);
            return Ok(finish(vc, Verdict::Unknown(reason)));
        }
        if s.added == 0 && s.merged == 0 {
            return Ok(finish(vc, Verdict::NotDisclosed));
        }
    }
    if vc.has_pending_work() {
        let reason = format!("round limit {} reached", budget.max_rounds);
        Ok(finish(vc, Verdict::Unknown(reason)))
    } else {
        Ok(finish(vc, Verdict::NotDisclosed))
    }
}
