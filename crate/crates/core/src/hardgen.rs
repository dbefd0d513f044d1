//! Settings encoding 3-colorability, circuit satisfiability and inclusion
//! dependency implication, each with a brute-force reference solver.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::instance::Instance;
use crate::model::{name, Atom, ConjunctiveQuery, Dependency, Fact, Mapping, MappingSet, Name, Problem, Value};
use crate::syntax::schema_from_use;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HardgenError {
    #[error("graph needs at least one vertex")]
    NoVertices,
    #[error("edge {0}-{1} is not between vertices 1..{2}")]
    BadEdge(usize, usize, usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("{0} exceeds the reference solver cap of {1}")]
    TooLarge(String, usize),
    #[error("bad circuit: {0}")]
    BadCircuit(String),
    #[error("cannot parse circuit at byte {0}: {1}")]
    Parse(usize, String),
    #[error("goal {0} is not an inclusion dependency")]
    BadGoal(String),
    #[error("{0} is not an inclusion dependency")]
    NotIncDep(String),
}

/// Vertices are `1..=vertices`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringProblem {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl ColoringProblem {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<ColoringProblem, HardgenError> {
        if vertices == 0 {
            return Err(HardgenError::NoVertices);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (f, t) in edges {
            if f == 0 || t == 0 || f > vertices || t > vertices {
                return Err(HardgenError::BadEdge(f, t, vertices));
            }
            if f == t {
                return Err(HardgenError::SelfLoop(f));
            }
            if seen.insert((f.min(t), f.max(t))) {
                out.push((f, t));
            }
        }
        Ok(ColoringProblem { vertices, edges: out })
    }

    /// Parses `1-2,2-3`; the vertex count is the largest endpoint unless given.
    pub fn parse(edges: &str, vertices: Option<usize>) -> Result<ColoringProblem, HardgenError> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (k, part) in edges.split(',').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
            let bad = || HardgenError::Parse(k, format!("expected `a-b`, found `{part}`"));
            let (a, b) = part.split_once('-').ok_or_else(bad)?;
            out.push((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?));
        }
        let n = vertices.unwrap_or_else(|| out.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0));
        ColoringProblem::new(n, out)
    }
}

fn atom(pred: &str, args: &[String]) -> Atom {
    Atom { pred: name(pred), args: args.iter().map(|a| name(a)).collect() }
}

fn problem(constraints: Vec<Dependency>, rules: Vec<Mapping>, policy: Vec<Atom>) -> Problem {
    let mappings = MappingSet::new(rules);
    let policy = ConjunctiveQuery::boolean(policy);
    let schema = schema_from_use(&constraints, &mappings, &policy);
    Problem { schema, constraints, mappings, policy }
}

/// One hidden ternary relation closed under permutations; the policy asks
/// for a homomorphism of the graph into its three distinct values.
pub fn gen_3coloring(g: &ColoringProblem) -> Problem {
    let v = |i: usize| format!("v{i}");
    let (x, y, z) = ("x".to_string(), "y".to_string(), "z".to_string());
    let ok = |a: &String, b: &String, c: &String| atom("OK", &[a.clone(), b.clone(), c.clone()]);
    let constraints = vec![
        Dependency::new(vec![ok(&x, &y, &z)], vec![ok(&x, &z, &y)]),
        Dependency::new(vec![ok(&x, &y, &z)], vec![ok(&y, &x, &z)]),
    ];
    let rules = vec![Mapping::new(atom("M", &[]), vec![ok(&x, &y, &z)])];
    let mut policy = Vec::new();
    let mut touched = BTreeSet::new();
    for (k, &(f, t)) in g.edges.iter().enumerate() {
        policy.push(ok(&v(f), &v(t), &format!("c{}", k + 1)));
        touched.extend([f, t]);
    }
    for i in (1..=g.vertices).filter(|i| !touched.contains(i)) {
        policy.push(ok(&v(i), &format!("a{i}"), &format!("b{i}")));
    }
    problem(constraints, rules, policy)
}

pub fn color3(g: &ColoringProblem) -> Result<bool, HardgenError> {
    if g.vertices > 12 {
        return Err(HardgenError::TooLarge(format!("{} vertices", g.vertices), 12));
    }
    let mut colors = vec![0u8; g.vertices + 1];
    fn go(i: usize, g: &ColoringProblem, colors: &mut [u8]) -> bool {
        if i > g.vertices {
            return true;
        }
        for c in 1..=3 {
            colors[i] = c;
            let ok = g.edges.iter().all(|&(f, t)| colors[f] == 0 || colors[t] == 0 || colors[f] != colors[t]);
            if ok && go(i + 1, g, colors) {
                return true;
            }
        }
        colors[i] = 0;
        false
    }
    Ok(go(1, g, &mut colors))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Not { input: usize, output: usize },
    Or { left: usize, right: usize, output: usize },
}

impl Gate {
    pub fn output(&self) -> usize {
        match *self {
            Gate::Not { output, .. } | Gate::Or { output, .. } => output,
        }
    }

    pub fn inputs(&self) -> Vec<usize> {
        match *self {
            Gate::Not { input, .. } => vec![input],
            Gate::Or { left, right, .. } => vec![left, right],
        }
    }
}

/// Wires `1..=wires`; wire 1 is the output, wires driven by no gate are inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub wires: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(wires: usize, gates: Vec<Gate>) -> Result<Circuit, HardgenError> {
        let c = Circuit { wires, gates };
        c.order()?;
        Ok(c)
    }

    pub fn inputs(&self) -> Vec<usize> {
        let driven: HashSet<usize> = self.gates.iter().map(Gate::output).collect();
        (1..=self.wires).filter(|w| !driven.contains(w)).collect()
    }

    /// Gates in evaluation order.
    pub fn order(&self) -> Result<Vec<Gate>, HardgenError> {
        let bad = |m: String| Err(HardgenError::BadCircuit(m));
        if self.wires == 0 {
            return bad("no wires".into());
        }
        let mut driver: BTreeMap<usize, Gate> = BTreeMap::new();
        for g in &self.gates {
            for w in g.inputs().into_iter().chain([g.output()]) {
                if w == 0 || w > self.wires {
                    return bad(format!("wire {w} out of range"));
                }
            }
            if driver.insert(g.output(), *g).is_some() {
                return bad(format!("wire {} driven twice", g.output()));
            }
        }
        let mut state = vec![0u8; self.wires + 1];
        let mut out = Vec::new();
        fn visit(w: usize, driver: &BTreeMap<usize, Gate>, state: &mut [u8], out: &mut Vec<Gate>) -> bool {
            match state[w] {
                2 => return true,
                1 => return false,
                _ => {}
            }
            state[w] = 1;
            if let Some(g) = driver.get(&w) {
                for i in g.inputs() {
                    if !visit(i, driver, state, out) {
                        return false;
                    }
                }
                out.push(*g);
            }
            state[w] = 2;
            true
        }
        for w in 1..=self.wires {
            if !visit(w, &driver, &mut state, &mut out) {
                return bad(format!("cycle through wire {w}"));
            }
        }
        Ok(out)
    }

    pub fn eval(&self, assignment: &BTreeMap<usize, bool>) -> Result<bool, HardgenError> {
        let mut val = vec![false; self.wires + 1];
        for (&w, &b) in assignment {
            val[w] = b;
        }
        for g in self.order()? {
            match g {
                Gate::Not { input, output } => val[output] = !val[input],
                Gate::Or { left, right, output } => val[output] = val[left] || val[right],
            }
        }
        Ok(val[1])
    }

    /// Reads `[name =] expr` with `expr := NOT expr | OR(expr, expr) | (expr) | INT`.
    /// Integers name input wires and must be at least 2; the top gate drives
    /// wire 1 and inner gates get fresh wires.
    pub fn parse(spec: &str) -> Result<Circuit, HardgenError> {
        let body = match spec.split_once('=') {
            Some((_, rhs)) => rhs,
            None => spec,
        };
        let offset = spec.len() - body.len();
        let mut p = CircuitParser { s: body.as_bytes(), i: 0, offset, gates: Vec::new(), next: 0 };
        let e = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(p.err("trailing input"));
        }
        let max_input = e.max_input();
        if max_input == 0 {
            return Err(p.err("the output must be a gate"));
        }
        p.next = max_input + 1;
        let top = match &e {
            Expr::Wire(_) => return Err(p.err("the output must be a gate")),
            _ => p.lower(&e, Some(1)),
        };
        debug_assert_eq!(top, 1);
        Circuit::new(p.next - 1, p.gates)
    }
}

impl std::fmt::Display for Circuit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .gates
            .iter()
            .map(|g| match *g {
                Gate::Not { input, output } => format!("{output}=NOT {input}"),
                Gate::Or { left, right, output } => format!("{output}=OR({left},{right})"),
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

enum Expr {
    Wire(usize),
    Not(Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn max_input(&self) -> usize {
        match self {
            Expr::Wire(w) => *w,
            Expr::Not(e) => e.max_input(),
            Expr::Or(a, b) => a.max_input().max(b.max_input()),
        }
    }
}

struct CircuitParser<'a> {
    s: &'a [u8],
    i: usize,
    offset: usize,
    gates: Vec<Gate>,
    next: usize,
}

impl CircuitParser<'_> {
    fn err(&self, m: &str) -> HardgenError {
        HardgenError::Parse(self.offset + self.i, m.to_string())
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, t: &str) -> bool {
        self.ws();
        if self.s[self.i..].len() >= t.len() && self.s[self.i..self.i + t.len()].eq_ignore_ascii_case(t.as_bytes()) {
            self.i += t.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &str) -> Result<(), HardgenError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{t}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, HardgenError> {
        if self.eat("NOT") {
            return Ok(Expr::Not(Box::new(self.expr()?)));
        }
        if self.eat("OR") {
            self.expect("(")?;
            let a = self.expr()?;
            self.expect(",")?;
            let b = self.expr()?;
            self.expect(")")?;
            return Ok(Expr::Or(Box::new(a), Box::new(b)));
        }
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        self.ws();
        if self.i < self.s.len() && (self.s[self.i] == b'w' || self.s[self.i] == b'W') {
            self.i += 1;
        }
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return Err(self.err("expected NOT, OR, `(` or a wire number"));
        }
        let w: usize = std::str::from_utf8(&self.s[start..self.i]).expect("digits").parse().map_err(|_| self.err("wire number too large"))?;
        if w < 2 {
            self.i = start;
            return Err(self.err("input wires are numbered from 2"));
        }
        Ok(Expr::Wire(w))
    }

    fn lower(&mut self, e: &Expr, out: Option<usize>) -> usize {
        let wire = |p: &mut Self| {
            out.unwrap_or_else(|| {
                p.next += 1;
                p.next - 1
            })
        };
        match e {
            Expr::Wire(w) => *w,
            Expr::Not(a) => {
                let o = wire(self);
                let input = self.lower(a, None);
                self.gates.push(Gate::Not { input, output: o });
                o
            }
            Expr::Or(a, b) => {
                let o = wire(self);
                let left = self.lower(a, None);
                let right = self.lower(b, None);
                self.gates.push(Gate::Or { left, right, output: o });
                o
            }
        }
    }
}

pub fn sat(c: &Circuit) -> Result<bool, HardgenError> {
    let inputs = c.inputs();
    if inputs.len() > 16 {
        return Err(HardgenError::TooLarge(format!("{} inputs", inputs.len()), 16));
    }
    for bits in 0u32..1 << inputs.len() {
        let a = inputs.iter().enumerate().map(|(k, &w)| (w, bits >> k & 1 == 1)).collect();
        if c.eval(&a)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CircuitVariant {
    /// Six atomic mappings over `R`, no constraints.
    AtomMap,
    /// One projection mapping over `A` and six frontier-one linear rules.
    Fr1,
}

#[derive(Clone, Debug)]
pub struct CircuitSetting {
    pub problem: Problem,
    /// The six-row instance the policy is evaluated against.
    pub instance: Instance,
}

const D_ROWS: [[&str; 8]; 6] = [
    ["n1", "n1", "c", "c", "n1", "", "c", "n1"],
    ["c", "n2", "n2", "c", "c", "", "", ""],
    ["n3", "c", "c", "n3", "c", "", "", ""],
    ["c", "c", "n4", "n4", "c", "", "", ""],
    ["c", "", "n5", "n5", "", "c", "", ""],
    ["", "", "", "c", "", "n6", "n6", "c"],
];

const SHAPES: [[&str; 8]; 6] = [
    ["y", "y", "x", "x", "y", "v1", "x", "y"],
    ["x", "y", "y", "x", "x", "v1", "v2", "v3"],
    ["y", "x", "x", "y", "x", "v1", "v2", "v3"],
    ["x", "x", "y", "y", "x", "v1", "v2", "v3"],
    ["x", "u", "y", "y", "v1", "x", "v2", "v3"],
    ["v1", "v2", "v3", "x", "v4", "y", "y", "x"],
];

/// The instance with one shared value `c` (the critical constant) and nulls
/// `n1..n6` shared only inside their row; blank cells hold their own nulls.
pub fn circuit_instance() -> Instance {
    let mut out = Instance::new();
    let mut blank = 100;
    for row in D_ROWS {
        let args = row
            .iter()
            .map(|cell| match *cell {
                "c" => Value::Crit,
                "" => {
                    blank += 1;
                    Value::Null(blank)
                }
                n => Value::Null(n[1..].parse().expect("null index")),
            })
            .collect();
        out.insert(&Fact { pred: name("R"), args });
    }
    out
}

fn row(cells: &[(usize, &str)], fresh: &mut usize) -> Atom {
    let args: Vec<String> = (1..=8)
        .map(|col| match cells.iter().find(|(c, _)| *c == col) {
            Some((_, v)) => v.to_string(),
            None => {
                *fresh += 1;
                format!("e{fresh}")
            }
        })
        .collect();
    atom("R", &args)
}

/// Policy whose matches in [`circuit_instance`] are satisfying assignments:
/// wires take `c` for true and `n1` for false.
pub fn circuit_query(c: &Circuit) -> Result<ConjunctiveQuery, HardgenError> {
    c.order()?;
    let mut fresh = 0;
    let v = |i: usize| format!("v{i}");
    let mut atoms = Vec::new();
    for w in 1..=c.wires {
        atoms.push(row(&[(1, &v(w)), (2, &v(w))], &mut fresh));
    }
    atoms.push(row(&[(3, &v(1)), (4, &v(1))], &mut fresh));
    let (mut nots, mut ors) = (0, 0);
    for g in &c.gates {
        match *g {
            Gate::Not { input, output } => {
                nots += 1;
                let (r, p) = (format!("r{nots}"), format!("p{nots}"));
                atoms.push(row(&[(1, &v(input)), (3, &r)], &mut fresh));
                atoms.push(row(&[(4, &r), (6, &p)], &mut fresh));
                atoms.push(row(&[(7, &p), (8, &v(output))], &mut fresh));
            }
            Gate::Or { left, right, output } => {
                ors += 1;
                let (x, y) = (format!("x{ors}"), format!("y{ors}"));
                atoms.push(row(&[(1, &v(left)), (3, &x)], &mut fresh));
                atoms.push(row(&[(2, &v(right)), (4, &y)], &mut fresh));
                atoms.push(row(&[(3, &x), (4, &y), (5, &v(output))], &mut fresh));
            }
        }
    }
    Ok(ConjunctiveQuery::boolean(atoms))
}

pub fn gen_circuit_sat(c: &Circuit, variant: CircuitVariant) -> Result<CircuitSetting, HardgenError> {
    let policy = circuit_query(c)?.atoms;
    let shape = |k: usize| atom("R", &SHAPES[k].map(String::from));
    let x = "x".to_string();
    let problem = match variant {
        CircuitVariant::AtomMap => {
            let rules = (0..6).map(|k| Mapping::new(atom(&format!("T{}", k + 1), std::slice::from_ref(&x)), vec![shape(k)])).collect();
            problem(Vec::new(), rules, policy)
        }
        CircuitVariant::Fr1 => {
            let a = atom("A", std::slice::from_ref(&x));
            let constraints = (0..6).map(|k| Dependency::new(vec![a.clone()], vec![shape(k)])).collect();
            problem(constraints, vec![Mapping::new(atom("T", &[x]), vec![a])], policy)
        }
    };
    Ok(CircuitSetting { problem, instance: circuit_instance() })
}

/// Does `ids` imply `goal`? Both must be inclusion dependencies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdImplication {
    pub ids: Vec<Dependency>,
    pub goal: Dependency,
}

fn is_incdep(d: &Dependency) -> bool {
    d.body.len() == 1 && d.head.len() == 1 && !d.body[0].has_repeats() && !d.head[0].has_repeats()
}

impl IdImplication {
    pub fn new(ids: Vec<Dependency>, goal: Dependency) -> Result<IdImplication, HardgenError> {
        if let Some(d) = ids.iter().find(|d| !is_incdep(d)) {
            return Err(HardgenError::NotIncDep(d.to_string()));
        }
        if !is_incdep(&goal) {
            return Err(HardgenError::BadGoal(goal.to_string()));
        }
        let mut arity: BTreeMap<Name, usize> = BTreeMap::new();
        for a in ids.iter().chain([&goal]).flat_map(|d| d.body.iter().chain(&d.head)) {
            if *arity.entry(a.pred.clone()).or_insert(a.arity()) != a.arity() {
                return Err(HardgenError::BadGoal(format!("{} used with two arities", a.pred)));
            }
        }
        Ok(IdImplication { ids, goal })
    }
}

/// `R0 ⊆ R1 ⊆ .. ⊆ Rn` on binary relations, with goal `R0 ⊆ Rn`.
pub fn chain_implication(n: usize) -> IdImplication {
    let id = |a: usize, b: usize| {
        Dependency::new(vec![Atom::new(&format!("R{a}"), &["x", "y"])], vec![Atom::new(&format!("R{b}"), &["x", "y"])])
    };
    IdImplication::new((0..n).map(|i| id(i, i + 1)).collect(), id(0, n.max(1))).expect("chain of inclusions")
}

/// Copies the goal's body relation into a hidden shadow relation whose
/// existence alone is published; the policy asks for the goal's head over
/// the shadow tuple.
pub fn gen_id_implication(p: &IdImplication) -> Problem {
    let mut used: HashSet<Name> = p.ids.iter().chain([&p.goal]).flat_map(|d| d.body.iter().chain(&d.head)).map(|a| a.pred.clone()).collect();
    let body = &p.goal.body[0];
    let mut shadow = format!("shadow{}", body.pred);
    while used.contains(&*shadow) {
        shadow.push('_');
    }
    used.insert(name(&shadow));
    let s = Atom { pred: name(&shadow), args: body.args.clone() };
    let mut constraints = p.ids.clone();
    constraints.push(Dependency::new(vec![s.clone()], vec![body.clone()]));
    let mut global = "V".to_string();
    while used.contains(&*global) {
        global.push('_');
    }
    let rules = vec![Mapping::new(atom(&global, &[]), vec![s.clone()])];
    problem(constraints, rules, vec![s, p.goal.head[0].clone()])
}

/// Chase of one frozen tuple over positions: a fact is a predicate plus, per
/// position, the goal-body position its value came from (or a fresh null).
pub fn implies(p: &IdImplication) -> bool {
    type State = (Name, Vec<Option<usize>>);
    let body = &p.goal.body[0];
    let start: State = (body.pred.clone(), (0..body.arity()).map(Some).collect());
    let mut seen: HashSet<State> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let head = &p.goal.head[0];
    let want: Vec<Option<usize>> = head.args.iter().map(|v| body.args.iter().position(|b| b == v)).collect();
    while let Some((pred, vals)) = queue.pop_front() {
        if pred == head.pred && want.iter().zip(&vals).all(|(w, v)| w.is_none() || w == v) {
            return true;
        }
        for d in &p.ids {
            let (b, h) = (&d.body[0], &d.head[0]);
            if b.pred != pred {
                continue;
            }
            let next: Vec<Option<usize>> =
                h.args.iter().map(|v| b.args.iter().position(|x| x == v).and_then(|i| vals[i])).collect();
            let s = (h.pred.clone(), next);
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{eval_cq, ChaseBudget};
    use crate::model::{classify_mapping, MapClass, TgdClass};
    use crate::verdict::VerdictKind;
    use crate::vischase::disclose_via_vischase;

    fn verdict(p: &Problem) -> VerdictKind {
        disclose_via_vischase(&p.constraints, &p.mappings, &p.policy, ChaseBudget::default()).unwrap().kind()
    }

    #[test]
    fn coloring_examples() {
        let k3 = ColoringProblem::parse("1-2,2-3,1-3", None).unwrap();
        let k4 = ColoringProblem::parse("1-2,1-3,1-4,2-3,2-4,3-4", None).unwrap();
        let edge = ColoringProblem::parse("1-2", None).unwrap();
        for (g, want) in [(&k3, true), (&k4, false), (&edge, true)] {
            assert_eq!(color3(g).unwrap(), want);
            let p = gen_3coloring(g);
            p.validate().unwrap();
            assert!(p.constraint_classes().contains(&TgdClass::IncDep));
            assert_eq!(verdict(&p) == VerdictKind::Disclosed, want);
        }
        assert!(ColoringProblem::parse("1-1", None).is_err());
        assert!(ColoringProblem::parse("1-x", None).is_err());
        let iso = ColoringProblem::parse("1-2", Some(3)).unwrap();
        assert_eq!(gen_3coloring(&iso).policy.atoms.len(), 2);
    }

    #[test]
    fn circuit_parsing() {
        let c = Circuit::parse("o=OR(NOT 2,2)").unwrap();
        assert_eq!(c.wires, 3);
        assert_eq!(c.gates, vec![Gate::Not { input: 2, output: 3 }, Gate::Or { left: 3, right: 2, output: 1 }]);
        assert_eq!(c.inputs(), vec![2]);
        let n = Circuit::parse("NOT(OR(w2, NOT w2))").unwrap();
        assert_eq!(n.gates.len(), 3);
        assert!(Circuit::parse("o=2").is_err());
        assert!(Circuit::parse("OR(2,").is_err());
        assert!(Circuit::parse("NOT 1").is_err());
        assert!(Circuit::new(3, vec![Gate::Not { input: 2, output: 3 }, Gate::Not { input: 3, output: 2 }]).is_err());
        assert!(Circuit::new(2, vec![Gate::Not { input: 2, output: 1 }, Gate::Not { input: 2, output: 1 }]).is_err());
    }

    #[test]
    fn circuit_instance_matches_table() {
        let d = circuit_instance();
        assert_eq!(d.len(), 6);
        let mut owners: BTreeMap<Value, BTreeSet<usize>> = BTreeMap::new();
        for (k, f) in d.sorted_facts().iter().enumerate() {
            for v in &f.args {
                owners.entry(v.clone()).or_default().insert(k);
            }
        }
        let shared: Vec<&Value> = owners.iter().filter(|(_, rows)| rows.len() > 1).map(|(v, _)| v).collect();
        assert_eq!(shared, [&Value::Crit]);
    }

    #[test]
    fn circuit_examples() {
        for (spec, want) in [("o=OR(2, NOT 2)", true), ("o=NOT(OR(2, NOT 2))", false), ("o=NOT 2", true), ("o=NOT NOT 2", true)] {
            let c = Circuit::parse(spec).unwrap();
            assert_eq!(sat(&c).unwrap(), want, "{spec}");
            let a = gen_circuit_sat(&c, CircuitVariant::AtomMap).unwrap();
            a.problem.validate().unwrap();
            assert!(classify_mapping(&a.problem.mappings).contains(&MapClass::AtomMap));
            assert_eq!(!eval_cq(&a.instance, &a.problem.policy).is_empty(), want, "{spec}");
            let f = gen_circuit_sat(&c, CircuitVariant::Fr1).unwrap();
            f.problem.validate().unwrap();
            assert_eq!(verdict(&f.problem) == VerdictKind::Disclosed, want, "{spec}");
        }
    }

    #[test]
    fn fr1_chase_rebuilds_table() {
        let c = Circuit::parse("NOT 2").unwrap();
        let f = gen_circuit_sat(&c, CircuitVariant::Fr1).unwrap();
        let r = crate::vischase::visible_chase(&f.problem.constraints, &f.problem.mappings, ChaseBudget::default());
        let rows: Vec<Fact> = r.instance.sorted_facts().into_iter().filter(|f| &*f.pred == "R").collect();
        assert_eq!(rows.len(), 6);
        let table = Instance::from_facts(&rows);
        let d = circuit_instance();
        let as_query = |i: &Instance| {
            let atoms = i
                .sorted_facts()
                .iter()
                .map(|f| Atom { pred: f.pred.clone(), args: f.args.iter().map(|v| name(&v.to_string())).collect() })
                .collect();
            ConjunctiveQuery::boolean(atoms)
        };
        let pin = |q: ConjunctiveQuery| {
            let crit = name(&Value::Crit.to_string());
            let mut atoms = q.atoms;
            atoms.push(Atom { pred: name("Pin"), args: vec![crit] });
            ConjunctiveQuery::boolean(atoms)
        };
        let with_pin = |i: &Instance| {
            let mut j = i.clone();
            j.insert(&Fact::new("Pin", vec![Value::Crit]));
            j
        };
        assert!(!eval_cq(&with_pin(&table), &pin(as_query(&d))).is_empty());
        assert!(!eval_cq(&with_pin(&d), &pin(as_query(&table))).is_empty());
    }

    #[test]
    fn id_implication_examples() {
        let id = |a: &str, b: &str| Dependency::new(vec![Atom::new(a, &["x", "y"])], vec![Atom::new(b, &["x", "y"])]);
        let cases = [
            (vec![id("R1", "R2")], true),
            (vec![], false),
            (vec![id("R1", "S"), id("S", "R2")], true),
            (vec![id("R1", "S")], false),
        ];
        for (ids, want) in cases {
            let p = IdImplication::new(ids, id("R1", "R2")).unwrap();
            assert_eq!(implies(&p), want);
            let prob = gen_id_implication(&p);
            prob.validate().unwrap();
            assert_eq!(verdict(&prob) == VerdictKind::Disclosed, want);
        }
        let swap = Dependency::new(vec![Atom::new("R1", &["x", "y"])], vec![Atom::new("R2", &["y", "x"])]);
        let p = IdImplication::new(vec![id("R1", "R2")], swap).unwrap();
        assert!(!implies(&p));
        assert_eq!(verdict(&gen_id_implication(&p)), VerdictKind::NotDisclosed);
        assert!(implies(&chain_implication(2)));
        assert!(!implies(&chain_implication(0)));
        let bad = Dependency::new(vec![Atom::new("R1", &["x", "x"])], vec![Atom::new("R2", &["x"])]);
        assert!(IdImplication::new(vec![], bad).is_err());
    }
}
