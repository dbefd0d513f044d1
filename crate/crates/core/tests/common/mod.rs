#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use disclose_core::check::{run_check, Algo};
use disclose_core::corpus::{random_circuit, random_graph, random_id_implication, random_problem, rng_for, run_diff, Family};
use disclose_core::engine::{build_chase_forest, chase, ChaseStatus, entails, eval_cq, ChaseBudget, Entailment};
use disclose_core::hardgen::{
    color3, gen_3coloring, gen_circuit_sat, gen_id_implication, implies, sat, Circuit, CircuitVariant, ColoringProblem,
    Gate, IdImplication,
};
use disclose_core::instance::Instance;
use disclose_core::model::{
    classify_dependencies, classify_mapping, name, normalize_heads, Atom, ConjunctiveQuery, Dependency, Fact,
    FreshNames, MapClass, Name, Problem, TgdClass, Value,
};
use disclose_core::oracle::oracle_disclose;
use disclose_core::rewrite::{boolify_policy, crit_rewrite_ptime, crit_rewrite_query, reduce_problem_to_projmap};
use disclose_core::syntax::parse;
use disclose_core::uid::{binarize, components, eliminate_forking, reduce_uid, Binarized, ShapeModel};
use disclose_core::verdict::VerdictKind;
use disclose_core::vischase::{disclose_via_vischase, hide, merge_closure, sceq_rules, SceqRule};

pub const HOSPITAL: &str = include_str!("../../../../problems/hospital.dis");

pub struct Criterion {
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    fn new(pass: bool, detail: String) -> Criterion {
        Criterion { pass, detail }
    }
}

pub fn budget() -> ChaseBudget {
    ChaseBudget::default()
}

fn verdict(p: &Problem, algo: Algo) -> Result<VerdictKind, String> {
    run_check(p, algo, budget()).map(|r| r.verdict).map_err(|e| e.to_string())
}

fn definite(v: VerdictKind) -> bool {
    v != VerdictKind::Unknown
}

fn entailment(db: &Instance, deps: &[Dependency], q: &ConjunctiveQuery) -> Option<bool> {
    match entails(db, deps, q, budget()).expect("boolean query").answer {
        Entailment::Entailed { .. } => Some(true),
        Entailment::NotEntailed => Some(false),
        Entailment::Unknown(_) => None,
    }
}

// ---------------------------------------------------------------- criterion 1

pub fn hospital_regression() -> Criterion {
    let start = Instant::now();
    let p = parse(HOSPITAL).expect("hospital parses");
    let mut bare = p.clone();
    bare.constraints.clear();
    let algos = [Algo::Vischase, Algo::Critrewrite, Algo::Oracle];
    let mut wrong = Vec::new();
    for (setting, want) in [(&p, VerdictKind::Disclosed), (&bare, VerdictKind::NotDisclosed)] {
        for a in algos {
            let got = verdict(setting, a);
            if got != Ok(want) {
                wrong.push(format!("{a}: {got:?}, expected {want}"));
            }
        }
    }
    let t = start.elapsed();
    let pass = wrong.is_empty() && t < Duration::from_secs(1);
    let detail = if wrong.is_empty() {
        format!("DISCLOSED with constraints, NOT_DISCLOSED without, under {} algorithms in {t:.2?}", algos.len())
    } else {
        wrong.join("; ")
    };
    Criterion::new(pass, detail)
}

// ---------------------------------------------------------------- criterion 2

fn within_general_bounds(p: &Problem) -> bool {
    let preds: Vec<usize> = p.schema.source.values().copied().collect();
    preds.len() <= 4 && preds.iter().all(|&n| n <= 3) && p.constraints.len() <= 4 && p.mappings.rules.len() <= 3
}

pub fn general_equivalence(seeds: u64) -> Criterion {
    let bounded = (0..seeds).all(|s| within_general_bounds(&random_problem(Family::General, s)));
    let s = run_diff(Family::General, 0..seeds, Some(&[Algo::Vischase, Algo::Critrewrite, Algo::Oracle]), budget());
    let bad = s.disagreements();
    let pass = bounded && s.total() >= 200 && bad.is_empty() && s.unknown_rate() < 0.2;
    let mut detail = format!("{s}; unknown rate {:.1}%", 100.0 * s.unknown_rate());
    if !bounded {
        detail.push_str("; corpus exceeds size bounds");
    }
    for r in bad.iter().take(3) {
        detail.push_str(&format!("; {r}"));
    }
    Criterion::new(pass, detail)
}

// ---------------------------------------------------------------- criterion 3

/// Pairs of body positions holding the same variable.
pub fn repeated_pairs(a: &Atom) -> usize {
    let mut count: HashMap<&Name, usize> = HashMap::new();
    for v in &a.args {
        *count.entry(v).or_default() += 1;
    }
    count.values().map(|&m| m * (m - 1) / 2).sum()
}

pub fn expected_ptime_size(d: &Dependency) -> usize {
    match repeated_pairs(&d.body[0]) {
        0 => 1,
        p => 2 * p + 1,
    }
}

pub fn ltgd_equivalence(seeds: u64) -> Criterion {
    let mut law_failures = Vec::new();
    let mut rules = 0;
    let mut off_class = 0;
    for seed in 0..seeds {
        let p = random_problem(Family::Ltgd, seed);
        let sigma = normalize_heads(&p.constraints, &mut FreshNames::for_problem(&p));
        if !classify_dependencies(&sigma).contains(&TgdClass::Ltgd) || !classify_mapping(&p.mappings).contains(&MapClass::AtomMap) {
            off_class += 1;
        }
        for (i, d) in sigma.iter().enumerate() {
            rules += 1;
            match crit_rewrite_ptime(d, i) {
                Ok(out) if out.len() == expected_ptime_size(d) => {}
                Ok(out) => law_failures.push(format!("ltgd#{seed} {d}: {} rules", out.len())),
                Err(e) => law_failures.push(format!("ltgd#{seed} {d}: {e}")),
            }
        }
    }
    let s = run_diff(Family::Ltgd, 0..seeds, Some(&[Algo::Critrewrite, Algo::CritrewritePtime]), budget());
    let bad = s.disagreements();
    let pass = s.total() >= 100 && bad.is_empty() && law_failures.is_empty() && off_class == 0;
    let mut detail = format!("{s}; size law held on {}/{rules} constraints", rules - law_failures.len());
    if off_class > 0 {
        detail.push_str(&format!("; {off_class} settings outside LTGD/AtomMap"));
    }
    for r in bad.iter().take(3) {
        detail.push_str(&format!("; {r}"));
    }
    for f in law_failures.iter().take(3) {
        detail.push_str(&format!("; {f}"));
    }
    Criterion::new(pass, detail)
}

// ---------------------------------------------------------------- criterion 4

pub fn uid_pipeline(seeds: u64) -> Criterion {
    let start = Instant::now();
    let s = run_diff(Family::Uid, 0..seeds, Some(&[Algo::UidPtime, Algo::Oracle]), budget());
    let t = start.elapsed();
    let ptime_unknown = s.rows.iter().filter(|r| r.verdicts.get(&Algo::UidPtime).is_none_or(|v| !definite(*v))).count();
    let resolved = s.rows.iter().filter(|r| r.verdicts.get(&Algo::Oracle).is_some_and(|v| definite(*v))).count();
    let bad = s.disagreements();
    let pass = s.total() >= 200 && bad.is_empty() && ptime_unknown == 0 && t < Duration::from_secs(60);
    let mut detail = format!("{s}; oracle resolved {resolved}; uid-ptime unresolved {ptime_unknown}; {t:.2?}");
    for r in bad.iter().take(3) {
        detail.push_str(&format!("; {r}"));
    }
    Criterion::new(pass, detail)
}

// ---------------------------------------------------------------- criterion 5

#[derive(Default)]
pub struct Tally {
    pub checked: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl Tally {
    fn compare(&mut self, label: String, a: Option<bool>, b: Option<bool>) {
        match (a, b) {
            (Some(x), Some(y)) if x == y => self.checked += 1,
            (Some(x), Some(y)) => {
                self.checked += 1;
                self.failures.push(format!("{label}: {x} vs {y}"));
            }
            _ => self.skipped += 1,
        }
    }

    fn summary(&self, what: &str) -> String {
        format!("{what} {}/{} agree ({} skipped as unknown)", self.checked - self.failures.len(), self.checked, self.skipped)
    }
}

fn disclosed(v: Result<VerdictKind, String>) -> Option<bool> {
    match v {
        Ok(VerdictKind::Disclosed) => Some(true),
        Ok(VerdictKind::NotDisclosed) => Some(false),
        _ => None,
    }
}

pub fn projmap_reduction(target: usize) -> Tally {
    let mut t = Tally::default();
    for seed in 0..target as u64 * 4 {
        if t.checked >= target {
            break;
        }
        let p = random_problem(Family::General, seed);
        let r = reduce_problem_to_projmap(&p);
        if classify_mapping(&r.mappings).iter().all(|c| *c != MapClass::ProjMap) {
            t.failures.push(format!("general#{seed}: reduced mapping is not a projection"));
        }
        t.compare(format!("general#{seed}"), disclosed(verdict(&p, Algo::Oracle)), disclosed(verdict(&r, Algo::Oracle)));
    }
    t
}

/// UID reduction of a seeded UID/ProjMap setting, binarized.
pub fn binarized_setting(seed: u64) -> Option<(Instance, Vec<Dependency>, ConjunctiveQuery, Binarized)> {
    let p = random_problem(Family::Uid, seed);
    let policy = boolify_policy(&p.policy);
    let red = reduce_uid(&p.constraints, &p.mappings, &policy).ok()?;
    let bin = binarize(&red.base, &red.constraints, &red.query).ok()?;
    Some((red.base, red.constraints, red.query, bin))
}

pub fn binarize_reduction(target: usize) -> Tally {
    let mut t = Tally::default();
    for seed in 0..target as u64 * 4 {
        if t.checked >= target {
            break;
        }
        let Some((base, deps, q, bin)) = binarized_setting(seed) else {
            t.failures.push(format!("uid#{seed}: reduction failed"));
            continue;
        };
        t.compare(format!("uid#{seed}"), entailment(&base, &deps, &q), entailment(&bin.base, &bin.constraints, &bin.query));
    }
    t
}

/// Random queries over the binary component predicates of `bin`, sharing
/// tuple variables often enough to create forking pairs.
pub fn random_binary_queries(bin: &Binarized, seed: u64, count: usize) -> Vec<ConjunctiveQuery> {
    let mut preds: BTreeSet<Name> = BTreeSet::new();
    for d in &bin.constraints {
        for a in d.body.iter().chain(&d.head) {
            if a.arity() == 2 {
                preds.insert(a.pred.clone());
            }
        }
    }
    let preds: Vec<Name> = preds.into_iter().collect();
    if preds.is_empty() {
        return Vec::new();
    }
    let mut rng = rng_for(seed, 0x51ed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=4);
            let atoms = (0..n)
                .map(|_| {
                    let t = format!("t{}", rng.gen_range(0..2));
                    let a = format!("a{}", rng.gen_range(0..3));
                    Atom { pred: preds.choose(&mut rng).expect("nonempty").clone(), args: vec![name(&t), name(&a)] }
                })
                .collect();
            ConjunctiveQuery::boolean(atoms)
        })
        .collect()
}

pub fn forking_reduction(target: usize) -> (Tally, usize) {
    let mut t = Tally::default();
    let mut changed = 0;
    for seed in 0..target as u64 * 4 {
        if t.checked >= target {
            break;
        }
        let Some((_, _, _, bin)) = binarized_setting(seed) else { continue };
        let mut qs = vec![bin.query.clone()];
        qs.extend(random_binary_queries(&bin, seed, 3));
        for (k, q) in qs.iter().enumerate() {
            let (nf, _) = eliminate_forking(q);
            if nf.atoms.len() != q.atoms.len() {
                changed += 1;
            }
            let before = entailment(&bin.base, &bin.constraints, q);
            let after = entailment(&bin.base, &bin.constraints, &nf);
            t.compare(format!("uid#{seed}/q{k}"), before, after);
        }
    }
    (t, changed)
}

pub fn normalize_reduction(target: usize) -> Tally {
    let mut t = Tally::default();
    for seed in 0..target as u64 * 20 {
        if t.checked >= target {
            break;
        }
        let p = random_problem(Family::General, seed);
        if p.constraints.iter().all(|d| d.head.len() == 1) {
            continue;
        }
        let sigma = normalize_heads(&p.constraints, &mut FreshNames::for_problem(&p));
        let policy = boolify_policy(&p.policy);
        let run = |deps: &[Dependency]| match oracle_disclose(deps, &p.mappings, &policy, budget()).map(|o| o.kind()) {
            Ok(VerdictKind::Disclosed) => Some(true),
            Ok(VerdictKind::NotDisclosed) => Some(false),
            _ => None,
        };
        t.compare(format!("general#{seed}"), run(&p.constraints), run(&sigma));
    }
    t
}

pub fn reductions(target: usize) -> Criterion {
    let proj = projmap_reduction(target);
    let bin = binarize_reduction(target);
    let (fork, changed) = forking_reduction(target);
    let norm = normalize_reduction(target);
    let all = [(&proj, "projection"), (&bin, "binarize"), (&fork, "forking"), (&norm, "heads")];
    let pass = all.iter().all(|(t, _)| t.checked >= target && t.failures.is_empty());
    let mut detail: Vec<String> = all.iter().map(|(t, w)| t.summary(w)).collect();
    detail.push(format!("{changed} forking queries simplified"));
    for (t, _) in all {
        detail.extend(t.failures.iter().take(2).cloned());
    }
    Criterion::new(pass, detail.join("; "))
}

// ---------------------------------------------------------------- criterion 6

/// Exhaustive search over all colourings.
pub fn brute_colorable(g: &ColoringProblem) -> bool {
    let n = g.vertices as u32;
    (0..3usize.pow(n)).any(|code| {
        let color = |v: usize| (code / 3usize.pow(v as u32 - 1)) % 3;
        g.edges.iter().all(|&(a, b)| color(a) != color(b))
    })
}

/// Exhaustive search over input assignments, evaluating gates until stable.
pub fn brute_sat(c: &Circuit) -> bool {
    let driven: BTreeSet<usize> = c.gates.iter().map(|g| g.output()).collect();
    let inputs: Vec<usize> = (1..=c.wires).filter(|w| !driven.contains(w)).collect();
    (0..1u64 << inputs.len()).any(|bits| {
        let mut val: BTreeMap<usize, bool> = inputs.iter().enumerate().map(|(i, &w)| (w, bits >> i & 1 == 1)).collect();
        while val.len() < c.wires {
            for g in &c.gates {
                match *g {
                    Gate::Not { input, output } => {
                        if let Some(&x) = val.get(&input) {
                            val.insert(output, !x);
                        }
                    }
                    Gate::Or { left, right, output } => {
                        if let (Some(&x), Some(&y)) = (val.get(&left), val.get(&right)) {
                            val.insert(output, x || y);
                        }
                    }
                }
            }
        }
        val[&1]
    })
}

/// Chases the frozen goal body and looks for the goal head over it.
pub fn chase_implies(p: &IdImplication) -> Option<bool> {
    let body = &p.goal.body[0];
    let freeze = |v: &Name| Value::Const(name(&format!("k_{v}")));
    let db = Instance::from_facts(&[Fact { pred: body.pred.clone(), args: body.args.iter().map(freeze).collect() }]);
    let r = chase(&db, &p.ids, budget());
    if r.status != ChaseStatus::Saturated {
        return None;
    }
    let head = &p.goal.head[0];
    let found = r.instance.facts().any(|f| {
        f.pred == head.pred && head.args.iter().zip(&f.args).all(|(v, val)| !body.args.contains(v) || *val == freeze(v))
    });
    Some(found)
}

pub fn hardness(graphs: u64, circuits: u64, idsets: u64) -> Criterion {
    let mut wrong = Vec::new();
    let mut colorable = 0;
    for seed in 0..graphs {
        let g = random_graph(seed, 8);
        let want = brute_colorable(&g);
        colorable += want as usize;
        if color3(&g) != Ok(want) {
            wrong.push(format!("graph#{seed}: reference solver disagrees"));
        }
        let p = gen_3coloring(&g);
        for a in [Algo::Auto, Algo::Vischase] {
            if disclosed(verdict(&p, a)) != Some(want) {
                wrong.push(format!("graph#{seed} {a}: expected colorable={want}"));
            }
        }
    }
    let mut satisfiable = 0;
    for seed in 0..circuits {
        let c = random_circuit(seed, 6, 4);
        let want = brute_sat(&c);
        satisfiable += want as usize;
        if sat(&c) != Ok(want) {
            wrong.push(format!("circuit#{seed} {c}: reference solver disagrees"));
        }
        let a = gen_circuit_sat(&c, CircuitVariant::AtomMap).expect("valid circuit");
        let atommap = !eval_cq(&a.instance, &a.problem.policy).is_empty();
        let f = gen_circuit_sat(&c, CircuitVariant::Fr1).expect("valid circuit");
        let fr1 = disclose_via_vischase(&f.problem.constraints, &f.problem.mappings, &f.problem.policy, budget())
            .map(|o| o.kind() == VerdictKind::Disclosed);
        if atommap != want || fr1 != Ok(want) {
            wrong.push(format!("circuit#{seed} {c}: sat={want} atommap={atommap} fr1={fr1:?}"));
        }
    }
    let mut implied = 0;
    for seed in 0..idsets {
        let p = random_id_implication(seed);
        let want = chase_implies(&p);
        implied += (want == Some(true)) as usize;
        let got = disclosed(verdict(&gen_id_implication(&p), Algo::Auto));
        if want.is_none() || implies(&p) != want.unwrap_or(!implies(&p)) || got != want {
            wrong.push(format!("idimp#{seed}: chase={want:?} implies={} verdict={got:?}", implies(&p)));
        }
    }
    let detail = format!(
        "{colorable}/{graphs} graphs colorable, {satisfiable}/{circuits} circuits satisfiable, {implied}/{idsets} goals implied; {} mismatches{}",
        wrong.len(),
        wrong.iter().take(3).map(|w| format!("; {w}")).collect::<String>()
    );
    Criterion::new(wrong.is_empty(), detail)
}

// ---------------------------------------------------------------- criterion 7

pub fn rewrite_counts(seeds: u64) -> Result<usize, String> {
    let mut n = 0;
    for f in Family::ALL {
        for seed in 0..seeds {
            let q = boolify_policy(&random_problem(f, seed).policy);
            let k = q.vars().len();
            let got = crit_rewrite_query(&q).len();
            if got != 1 << k {
                return Err(format!("{f}#{seed}: {got} rewritings for {k} variables"));
            }
            n += 1;
        }
    }
    Ok(n)
}

/// Binary UIDs over `B0..B2` and unary `U0..U1`, each frontier-one.
pub fn random_binary_uids(seed: u64) -> (Vec<Fact>, Vec<Dependency>) {
    let mut rng = rng_for(seed, 0xb1a5);
    let preds: Vec<(String, usize)> =
        vec![("B0".into(), 2), ("B1".into(), 2), ("B2".into(), 2), ("U0".into(), 1), ("U1".into(), 1)];
    let atom = |p: &(String, usize), rng: &mut rand_chacha::ChaCha8Rng, tag: &str| -> Atom {
        let mut args: Vec<Name> = (0..p.1).map(|i| name(&format!("{tag}{i}"))).collect();
        args[rng.gen_range(0..p.1)] = name("x");
        Atom { pred: name(&p.0), args }
    };
    let n = rng.gen_range(1..=5);
    let deps = (0..n)
        .map(|_| {
            let b = preds.choose(&mut rng).expect("nonempty").clone();
            let h = preds.choose(&mut rng).expect("nonempty").clone();
            Dependency::new(vec![atom(&b, &mut rng, "u")], vec![atom(&h, &mut rng, "z")])
        })
        .collect();
    let first = preds.choose(&mut rng).expect("nonempty").clone();
    let args = (0..first.1).map(|i| Value::Const(name(&format!("k{i}")))).collect();
    (vec![Fact { pred: name(&first.0), args }], deps)
}

pub fn adjoining_labels(seeds: u64) -> Result<usize, String> {
    let mut prefixes = 0;
    for seed in 0..seeds {
        let mut settings = vec![random_binary_uids(seed)];
        if let Some((_, _, _, bin)) = binarized_setting(seed) {
            settings.push((bin.base.sorted_facts(), bin.constraints));
        }
        for (base, deps) in settings {
            let db = Instance::from_facts(&base);
            for rounds in 1..=6 {
                let forest = build_chase_forest(&db, &deps, ChaseBudget::new(rounds, 20_000)).map_err(|e| e.to_string())?;
                if !forest.unique_adjoining_label() {
                    return Err(format!("seed {seed}, {rounds} rounds"));
                }
                prefixes += 1;
            }
        }
    }
    Ok(prefixes)
}

fn injective(b: &BTreeMap<Name, Value>) -> bool {
    let vals: HashSet<&Value> = b.values().collect();
    vals.len() == b.len()
}

/// Engine and forest witnesses of connected non-forking queries.
pub fn embedding_injectivity(seeds: u64) -> Result<usize, String> {
    let mut witnessed = 0;
    for seed in 0..seeds {
        let Some((_, _, _, bin)) = binarized_setting(seed) else { continue };
        let model = ShapeModel::new(&bin.base.sorted_facts(), &bin.constraints).map_err(|e| e.to_string())?;
        let mut qs = vec![bin.query.clone()];
        qs.extend(random_binary_queries(&bin, seed, 4));
        for q in qs {
            for c in components(&eliminate_forking(&q).0) {
                if let Entailment::Entailed { witness, .. } = entails(&bin.base, &bin.constraints, &c, budget()).expect("boolean").answer {
                    if !injective(&witness) {
                        return Err(format!("uid#{seed}: engine witness for {c} is not injective"));
                    }
                    witnessed += 1;
                }
                if let Some(b) = model.embed(&c.atoms) {
                    if !injective(&b) {
                        return Err(format!("uid#{seed}: forest embedding of {c} is not injective"));
                    }
                }
            }
        }
    }
    Ok(witnessed)
}

/// Merges one value at a time, picking rules and matches in a random order.
pub fn merge_one_at_a_time(inst: &Instance, rules: &[SceqRule], seed: u64) -> Instance {
    let mut rng = rng_for(seed, 0x3e76);
    let mut cur = inst.clone();
    loop {
        let mut order: Vec<&SceqRule> = rules.iter().collect();
        order.shuffle(&mut rng);
        let mut candidates: Vec<Value> = Vec::new();
        for r in order {
            for b in eval_cq(&cur, &ConjunctiveQuery::boolean(r.body.clone())) {
                candidates.extend(r.targets.iter().map(|t| b[t].clone()).filter(|v| !v.is_crit()));
            }
            if !candidates.is_empty() {
                break;
            }
        }
        let Some(v) = candidates.choose(&mut rng).cloned() else { return cur };
        cur = cur.substitute(&HashMap::from([(v, Value::Crit)])).0;
    }
}

pub fn merge_confluence(seeds: u64) -> Result<usize, String> {
    let mut checked = 0;
    for seed in 0..seeds {
        let p = random_problem(Family::General, seed);
        let sigma = normalize_heads(&p.constraints, &mut FreshNames::for_problem(&p));
        let rules = sceq_rules(&p.mappings);
        for rounds in 0..=3 {
            let inst = chase(&hide(&p.mappings), &sigma, ChaseBudget::new(rounds, 20_000)).instance;
            let (fixed, _) = merge_closure(&inst, &rules);
            for k in 0..3 {
                let other = merge_one_at_a_time(&inst, &rules, seed * 8 + k);
                if !fixed.same_facts(&other) {
                    return Err(format!("general#{seed} after {rounds} rounds, order {k}"));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

pub fn structural(seeds: u64) -> Criterion {
    let parts = [
        ("rewriting counts", rewrite_counts(seeds)),
        ("forest prefixes", adjoining_labels(seeds)),
        ("injective witnesses", embedding_injectivity(seeds)),
        ("merge orders", merge_confluence(seeds)),
    ];
    let pass = parts.iter().all(|(_, r)| matches!(r, Ok(n) if *n > 0));
    let detail = parts
        .iter()
        .map(|(w, r)| match r {
            Ok(n) => format!("{w}: {n} ok"),
            Err(e) => format!("{w}: FAILED at {e}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    Criterion::new(pass, detail)
}
