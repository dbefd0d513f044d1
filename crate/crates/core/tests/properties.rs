mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use disclose_core::corpus::{random_problem, Family};
use disclose_core::engine::{chase, find_match, Binding, ChaseBudget, ChaseStatus};
use disclose_core::instance::Instance;
use disclose_core::model::{name, normalize_heads, Atom, ConjunctiveQuery, Fact, FreshNames, Value, IS_CRIT};
use disclose_core::rewrite::{annotations, crit_rewrite_query, crit_rewrite_query_reduced};
use disclose_core::syntax::{parse, print};
use disclose_core::uid::{binarize, eliminate_forking, uid_atomic_entails, Premise};
use disclose_core::vischase::{hide, merge_closure, sceq_rules};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

/// Queries over `R/2`, `S/2`, `U/1` with variables from a small pool.
fn query(max_atoms: usize, pool: usize) -> impl Strategy<Value = ConjunctiveQuery> {
    let atom = (0..3usize, 0..pool, 0..pool).prop_map(|(p, a, b)| {
        let v = |i: usize| format!("v{i}");
        match p {
            0 => Atom::new("R", &[&v(a), &v(b)]),
            1 => Atom::new("S", &[&v(a), &v(b)]),
            _ => Atom::new("U", &[&v(a)]),
        }
    });
    prop::collection::vec(atom, 1..=max_atoms).prop_map(ConjunctiveQuery::boolean)
}

fn forking_pair(q: &ConjunctiveQuery) -> bool {
    q.atoms.iter().enumerate().any(|(i, a)| {
        q.atoms[i + 1..].iter().any(|b| {
            a.pred == b.pred && a.arity() == 2 && (0..2).any(|p| a.args[p] == b.args[p] && a.args[1 - p] != b.args[1 - p])
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse_is_identity(f in family(), seed in any::<u64>()) {
        let p = random_problem(f, seed);
        prop_assert_eq!(parse(&print(&p)).unwrap(), p);
    }

    #[test]
    fn rewriting_count_is_two_to_the_variables(q in query(4, 4)) {
        let n = q.vars().len();
        let all = crit_rewrite_query(&q);
        prop_assert_eq!(all.len(), 1 << n);
        prop_assert_eq!(annotations(&q.vars()).len(), 1 << n);
        let distinct: BTreeSet<String> = all.iter().map(|r| r.to_string()).collect();
        prop_assert_eq!(distinct.len(), all.len());
        prop_assert!(crit_rewrite_query_reduced(&q).len() <= all.len());
        for r in &all {
            let plain = r.atoms.iter().filter(|a| &*a.pred != IS_CRIT).count();
            prop_assert_eq!(plain, q.atoms.len());
        }
    }

    #[test]
    fn forking_elimination_is_complete(q in query(5, 4)) {
        let (nf, subst) = eliminate_forking(&q);
        prop_assert!(!forking_pair(&nf));
        prop_assert_eq!(eliminate_forking(&nf).0, nf.clone());
        let kept: BTreeSet<_> = nf.vars().into_iter().collect();
        for (gone, to) in &subst {
            prop_assert!(!kept.contains(gone));
            prop_assert!(kept.contains(to));
        }
    }

    #[test]
    fn binarized_base_has_one_tuple_per_fact(seed in 0u64..500) {
        let Some((base, deps, q, bin)) = common::binarized_setting(seed) else { return Ok(()) };
        let want: usize = base.facts().map(|f| f.args.len() + 1).sum();
        prop_assert_eq!(bin.base.len(), want);
        let again = binarize(&base, &deps, &q).unwrap();
        prop_assert_eq!(again.query, bin.query);
        prop_assert!(bin.constraints.iter().all(|d| d.body.len() == 1 && d.head.len() == 1));
    }

    #[test]
    fn normalized_heads_are_single_and_stable(seed in any::<u64>()) {
        let p = random_problem(Family::General, seed);
        let sigma = normalize_heads(&p.constraints, &mut FreshNames::for_problem(&p));
        prop_assert!(sigma.iter().all(|d| d.head.len() == 1));
        let again = normalize_heads(&sigma, &mut FreshNames::for_problem(&p));
        prop_assert_eq!(again, sigma.clone());
        let extra = sigma.len() - p.constraints.len();
        let split: usize = p.constraints.iter().filter(|d| d.head.len() > 1).map(|d| d.head.len()).sum();
        prop_assert_eq!(extra, split);
    }

    #[test]
    fn merge_closure_is_idempotent_and_order_free(seed in 0u64..400, rounds in 0usize..3) {
        let p = random_problem(Family::General, seed);
        let sigma = normalize_heads(&p.constraints, &mut FreshNames::for_problem(&p));
        let rules = sceq_rules(&p.mappings);
        let inst = chase(&hide(&p.mappings), &sigma, ChaseBudget::new(rounds, 20_000)).instance;
        let (once, merged) = merge_closure(&inst, &rules);
        let (twice, more) = merge_closure(&once, &rules);
        prop_assert!(once.same_facts(&twice));
        prop_assert!(more.is_empty());
        prop_assert!(merged.iter().all(|v| !v.is_crit()));
        let mut reversed = rules.clone();
        reversed.reverse();
        prop_assert!(merge_closure(&inst, &reversed).0.same_facts(&once));
        prop_assert!(common::merge_one_at_a_time(&inst, &rules, seed).same_facts(&once));
    }

    #[test]
    fn substitution_by_identity_is_a_no_op(seed in 0u64..400) {
        let p = random_problem(Family::General, seed);
        let inst = hide(&p.mappings);
        let id: HashMap<Value, Value> = inst.values().into_iter().map(|v| (v.clone(), v)).collect();
        let (same, changed) = inst.substitute(&id);
        prop_assert!(same.same_facts(&inst));
        prop_assert!(changed.is_empty());
    }
}

/// Premise facts with variables frozen to constants named after them.
fn frozen(a: &Atom) -> (Instance, Binding) {
    let args: Vec<Value> = a.args.iter().map(|v| Value::Const(v.clone())).collect();
    let fixed = a.args.iter().map(|v| (v.clone(), Value::Const(v.clone()))).collect();
    (Instance::from_facts(&[Fact { pred: a.pred.clone(), args }]), fixed)
}

#[test]
fn atomic_uid_entailment_matches_the_chase() {
    let (mut checked, mut entailed) = (0, 0);
    for seed in 0..300 {
        let (base, uids) = common::random_binary_uids(seed);
        let premise = Atom { pred: base[0].pred.clone(), args: (0..base[0].args.len()).map(|i| name(&format!("p{i}"))).collect() };
        let (db, fixed) = frozen(&premise);
        for (k, goal) in [
            vec![Atom::new("B0", &["p0", "y"])],
            vec![Atom::new("B1", &["y", "z"]), Atom::new("U0", &["z"])],
            vec![Atom::new("U1", &["p0"])],
            vec![Atom::new("B2", &["y", "p0"]), Atom::new("B0", &["y", "z"])],
        ]
        .into_iter()
        .enumerate()
        {
            let goal: Vec<Atom> = goal.into_iter().filter(|a| a.args.iter().all(|v| !v.starts_with('p') || premise.args.contains(v))).collect();
            if goal.is_empty() {
                continue;
            }
            let fixed: Binding = fixed.iter().filter(|(v, _)| goal.iter().any(|a| a.args.contains(v))).map(|(v, x)| (v.clone(), x.clone())).collect();
            let r = chase(&db, &uids, ChaseBudget::new(12, 50_000));
            let found = find_match(&r.instance, &goal, &fixed).is_some();
            let engine = match (found, r.status) {
                (true, _) => Some(true),
                (false, ChaseStatus::Saturated) => Some(false),
                _ => None,
            };
            let ours = uid_atomic_entails(&uids, Premise::Atom(&premise), &goal).unwrap();
            if let Some(e) = engine {
                assert_eq!(ours, e, "seed {seed}, goal {k}: {uids:?}");
                checked += 1;
                entailed += e as usize;
            }
        }
    }
    assert!(checked >= 200, "only {checked} comparisons resolved");
    assert!(entailed > 0 && entailed < checked, "{entailed}/{checked} entailed");
}

#[test]
fn base_premise_agrees_with_atom_premise() {
    for seed in 0..100 {
        let (base, uids) = common::random_binary_uids(seed);
        let goal = vec![Atom::new("B0", &["y", "z"]), Atom::new("U0", &["z"])];
        let premise = Atom { pred: base[0].pred.clone(), args: (0..base[0].args.len()).map(|i| name(&format!("k{i}"))).collect() };
        let a = uid_atomic_entails(&uids, Premise::Base(&base), &goal).unwrap();
        let b = uid_atomic_entails(&uids, Premise::Atom(&premise), &goal).unwrap();
        assert_eq!(a, b, "seed {seed}");
    }
}
