//! Independent reference for disclosure: a naive semi-oblivious chase with
//! merging, sharing no code with the engine or the visible chase.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::engine::{Binding, ChaseBudget};
use crate::model::{name, Atom, ConjunctiveQuery, Dependency, MappingSet, Value, IS_CRIT};
use crate::verdict::{DiscloseError, Outcome, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Val {
    Crit,
    K(String),
    N(u64),
}

type Tuple = (String, Vec<Val>);

#[derive(Default)]
struct Db {
    facts: BTreeSet<Tuple>,
}

impl Db {
    /// All assignments of `atoms` variables extending `env`.
    fn matches(&self, atoms: &[Atom], env: &BTreeMap<String, Val>, out: &mut Vec<BTreeMap<String, Val>>) {
        let Some((first, rest)) = atoms.split_first() else {
            out.push(env.clone());
            return;
        };
        for (p, args) in &self.facts {
            if **p != *first.pred || args.len() != first.args.len() {
                continue;
            }
            let mut e = env.clone();
            let ok = first.args.iter().zip(args).all(|(v, x)| match e.get(&**v) {
                Some(y) => y == x,
                None => {
                    e.insert(v.to_string(), x.clone());
                    true
                }
            });
            if ok {
                self.matches(rest, &e, out);
            }
        }
    }

    fn first_match(&self, atoms: &[Atom]) -> Option<BTreeMap<String, Val>> {
        let mut out = Vec::new();
        self.matches(atoms, &BTreeMap::new(), &mut out);
        out.into_iter().next()
    }

    fn rename(&mut self, from: &BTreeSet<Val>) {
        let f = |x: &Val| if from.contains(x) { Val::Crit } else { x.clone() };
        self.facts = self.facts.iter().map(|(p, a)| (p.clone(), a.iter().map(f).collect())).collect();
    }
}

fn to_value(v: &Val) -> Value {
    match v {
        Val::Crit => Value::Crit,
        Val::K(s) => Value::Const(name(s)),
        Val::N(k) => Value::Null(*k),
    }
}

pub fn oracle_disclose(
    sigma: &[Dependency],
    m: &MappingSet,
    p: &ConjunctiveQuery,
    budget: ChaseBudget,
) -> Result<Outcome, DiscloseError> {
    if !p.free.is_empty() {
        return Err(DiscloseError::NonBoolean);
    }
    if let Some(a) = p.atoms.iter().find(|a| m.rules.iter().any(|r| r.head.pred == a.pred)) {
        return Err(DiscloseError::NonSourcePolicy(a.pred.to_string()));
    }
    let mut db = Db::default();
    for (k, r) in m.rules.iter().enumerate() {
        for a in &r.body {
            let args = a
                .args
                .iter()
                .map(|v| if r.head.args.contains(v) { Val::Crit } else { Val::K(format!("c{}_{}", k + 1, v)) })
                .collect();
            db.facts.insert((a.pred.to_string(), args));
        }
    }
    if p.atoms.iter().any(|a| &*a.pred == IS_CRIT) {
        db.facts.insert((IS_CRIT.to_string(), vec![Val::Crit]));
    }

    let merge = |db: &mut Db| -> BTreeSet<Val> {
        let mut all = BTreeSet::new();
        loop {
            let mut hit = BTreeSet::new();
            for r in &m.rules {
                let mut ms = Vec::new();
                db.matches(&r.body, &BTreeMap::new(), &mut ms);
                for e in ms {
                    for v in &r.head.args {
                        if e[&**v] != Val::Crit {
                            hit.insert(e[&**v].clone());
                        }
                    }
                }
            }
            if hit.is_empty() {
                return all;
            }
            db.rename(&hit);
            all.extend(hit);
        }
    };

    let mut fired: HashSet<(usize, Vec<Val>)> = HashSet::new();
    let mut next = 1u64;
    let mut rounds = 0;
    merge(&mut db);
    let done = |db: &Db, verdict: Verdict, rounds: usize| Outcome {
        verdict,
        rounds,
        facts: db.facts.len(),
        state: None,
        trace: Vec::new(),
    };
    let found = |db: &Db| {
        db.first_match(&p.atoms)
            .map(|e| Verdict::Disclosed { witness: e.iter().map(|(k, v)| (name(k), to_value(v))).collect::<Binding>() })
    };
    if let Some(v) = found(&db) {
        return Ok(done(&db, v, 0));
    }
    loop {
        if rounds == budget.max_rounds {
            let quiet = sigma.iter().enumerate().all(|(i, d)| {
                let frontier = d.frontier();
                let mut ms = Vec::new();
                db.matches(&d.body, &BTreeMap::new(), &mut ms);
                ms.iter().all(|e| fired.contains(&(i, frontier.iter().map(|v| e[&**v].clone()).collect())))
            });
            if quiet {
                return Ok(done(&db, Verdict::NotDisclosed, rounds));
            }
            return Ok(done(&db, Verdict::Unknown(format!("round limit {} reached", budget.max_rounds)), rounds));
        }
        let mut new_facts = Vec::new();
        for (i, d) in sigma.iter().enumerate() {
            let frontier = d.frontier();
            let exist = d.existentials();
            let mut ms = Vec::new();
            db.matches(&d.body, &BTreeMap::new(), &mut ms);
            for e in ms {
                let key: Vec<Val> = frontier.iter().map(|v| e[&**v].clone()).collect();
                if !fired.insert((i, key)) {
                    continue;
                }
                let mut e = e;
                for y in &exist {
                    e.insert(y.to_string(), Val::N(next));
                    next += 1;
                }
                for h in &d.head {
                    new_facts.push((h.pred.to_string(), h.args.iter().map(|v| e[&**v].clone()).collect::<Vec<_>>()));
                }
            }
        }
        let before = db.facts.len();
        db.facts.extend(new_facts);
        let grew = db.facts.len() > before;
        let merged = merge(&mut db);
        if !merged.is_empty() {
            fired = fired
                .into_iter()
                .map(|(i, k)| (i, k.into_iter().map(|v| if merged.contains(&v) { Val::Crit } else { v }).collect()))
                .collect();
        }
        rounds += 1;
        if db.facts.len() > budget.max_facts {
            return Ok(done(&db, Verdict::Unknown(format!("fact limit {} reached", budget.max_facts)), rounds));
        }
        if let Some(v) = found(&db) {
            return Ok(done(&db, v, rounds));
        }
        if !grew && merged.is_empty() {
            return Ok(done(&db, Verdict::NotDisclosed, rounds - 1));
        }
    }
}
