//! Polynomial decision procedure for unary inclusion dependencies under
//! projection mappings.
//!
//! Values at visible positions always end up critical, so the problem is
//! truncated to the invisible positions, binarized, and decided on a finite
//! description of the chase forest: every node's subtree is determined by
//! the shapes it starts with.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::engine::{find_match, Binding};
use crate::instance::Instance;
use crate::model::{
    fresh_var, most_specific_map_class, most_specific_tgd_class, name, vars_of, Atom, ConjunctiveQuery, Dependency,
    Fact, MapClass, MappingSet, Name, TgdClass, Value, IS_CRIT,
};
use crate::verdict::{DiscloseError, Outcome, Verdict};
use crate::vischase::check_policy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UidError {
    #[error("predicate {0} has arity above 2")]
    NonBinary(String),
    #[error("{0} is not a unary inclusion dependency")]
    NotUid(String),
    #[error("frontier-free dependency {0} needs a unary head")]
    BadSpawn(String),
    #[error("base is not a star around one value: {0}")]
    BadBase(String),
}

/// `(predicate, position)`, positions counted from 1.
pub type Position = (Name, usize);

#[derive(Clone, Debug, Default)]
pub struct PositionGraph {
    pub nodes: BTreeSet<Position>,
    pub edges: BTreeSet<(Position, Position)>,
    pub global: BTreeSet<Position>,
    pub visible: BTreeSet<Position>,
}

impl PositionGraph {
    pub fn new(sigma: &[Dependency], m: &MappingSet) -> PositionGraph {
        let mut g = PositionGraph::default();
        let deps: Vec<Dependency> = sigma.iter().cloned().chain(m.as_dependencies()).collect();
        for d in &deps {
            for a in d.body.iter().chain(&d.head) {
                g.nodes.extend((1..=a.arity()).map(|i| (a.pred.clone(), i)));
            }
            for x in d.frontier() {
                for (b, i) in positions_of(&d.body, &x) {
                    for (h, j) in positions_of(&d.head, &x) {
                        g.edges.insert(((b.clone(), i), (h, j)));
                    }
                }
            }
        }
        for r in &m.rules {
            g.global.extend((1..=r.head.arity()).map(|i| (r.head.pred.clone(), i)));
        }
        g.visible = g.global.clone();
        loop {
            let before = g.visible.len();
            for (from, to) in &g.edges {
                if g.visible.contains(to) {
                    g.visible.insert(from.clone());
                }
            }
            if g.visible.len() == before {
                return g;
            }
        }
    }

    pub fn is_visible(&self, pred: &str, pos: usize) -> bool {
        self.visible.contains(&(name(pred), pos))
    }
}

fn positions_of(atoms: &[Atom], v: &Name) -> Vec<Position> {
    let mut out = Vec::new();
    for a in atoms {
        for (i, x) in a.args.iter().enumerate() {
            if x == v {
                out.push((a.pred.clone(), i + 1));
            }
        }
    }
    out
}

/// Source predicates holding at least one fact in the visible chase.
pub fn reachable_preds(sigma: &[Dependency], m: &MappingSet) -> BTreeSet<Name> {
    let mut out: BTreeSet<Name> = m.rules.iter().flat_map(|r| r.body.iter().map(|a| a.pred.clone())).collect();
    loop {
        let before = out.len();
        for d in sigma {
            if d.body.iter().all(|a| out.contains(&a.pred)) {
                out.extend(d.head.iter().map(|a| a.pred.clone()));
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

pub fn truncated_name(p: &str) -> Name {
    name(&format!("{p}~"))
}

#[derive(Clone, Debug)]
pub struct UidReduction {
    pub graph: PositionGraph,
    pub reachable: BTreeSet<Name>,
    pub base: Instance,
    pub constraints: Vec<Dependency>,
    pub query: ConjunctiveQuery,
    /// Policy variables occurring at a visible position.
    pub visible_vars: BTreeSet<Name>,
}

fn check_uid_setting(sigma: &[Dependency], m: &MappingSet, p: &ConjunctiveQuery) -> Result<(), DiscloseError> {
    check_policy(m, p)?;
    if let Some(d) = sigma.iter().find(|d| most_specific_tgd_class(d) != TgdClass::Uid) {
        return Err(DiscloseError::ClassMismatch(format!("constraint {d} is not a UID")));
    }
    if let Some(r) = m.rules.iter().find(|r| most_specific_map_class(r) != MapClass::ProjMap) {
        return Err(DiscloseError::ClassMismatch(format!("mapping {r} is not a projection")));
    }
    Ok(())
}

pub fn reduce_uid(sigma: &[Dependency], m: &MappingSet, p: &ConjunctiveQuery) -> Result<UidReduction, DiscloseError> {
    check_uid_setting(sigma, m, p)?;
    let graph = PositionGraph::new(sigma, m);
    let reachable = reachable_preds(sigma, m);
    let truncate = |a: &Atom| Atom {
        pred: truncated_name(&a.pred),
        args: a.args.iter().enumerate().filter(|(i, _)| !graph.is_visible(&a.pred, i + 1)).map(|(_, v)| v.clone()).collect(),
    };
    let crit = |v: &Name| Atom { pred: name(IS_CRIT), args: vec![v.clone()] };

    let mut arity: BTreeMap<Name, usize> = BTreeMap::new();
    for d in sigma {
        for a in d.body.iter().chain(&d.head) {
            arity.insert(a.pred.clone(), a.arity());
        }
    }
    for r in &m.rules {
        arity.insert(r.body[0].pred.clone(), r.body[0].arity());
    }
    let mut constraints = Vec::new();
    for pred in &reachable {
        let n = arity[pred];
        let vars: Vec<Name> = (1..=n).map(|i| name(&format!("y{i}"))).collect();
        let atom = truncate(&Atom { pred: pred.clone(), args: vars });
        constraints.push(Dependency::new(vec![crit(&name("w"))], vec![atom]));
    }
    for d in sigma {
        let (body, head) = (&d.body[0], &d.head[0]);
        let Some(x) = d.frontier().into_iter().next() else { continue };
        if !reachable.contains(&body.pred) {
            continue;
        }
        let i = body.args.iter().position(|v| *v == x).expect("frontier in body") + 1;
        let j = head.args.iter().position(|v| *v == x).expect("frontier in head") + 1;
        if graph.is_visible(&head.pred, j) {
            continue;
        }
        let rule = if graph.is_visible(&body.pred, i) {
            Dependency::new(vec![crit(&x)], vec![truncate(head)])
        } else {
            Dependency::new(vec![truncate(body)], vec![truncate(head)])
        };
        if !constraints.contains(&rule) {
            constraints.push(rule);
        }
    }

    let mut visible_vars = BTreeSet::new();
    let mut invisible_vars = BTreeSet::new();
    for a in p.atoms.iter().filter(|a| &*a.pred != IS_CRIT) {
        for (i, v) in a.args.iter().enumerate() {
            if graph.is_visible(&a.pred, i + 1) {
                visible_vars.insert(v.clone());
            } else {
                invisible_vars.insert(v.clone());
            }
        }
    }
    let mut atoms: Vec<Atom> = Vec::new();
    for a in &p.atoms {
        let t = if &*a.pred == IS_CRIT { a.clone() } else { truncate(a) };
        if !atoms.contains(&t) {
            atoms.push(t);
        }
    }
    for v in vars_of(&p.atoms) {
        if visible_vars.contains(&v) && invisible_vars.contains(&v) && !atoms.contains(&crit(&v)) {
            atoms.push(crit(&v));
        }
    }
    let base = Instance::from_facts(&[Fact { pred: name(IS_CRIT), args: vec![Value::Crit] }]);
    Ok(UidReduction { graph, reachable, base, constraints, query: ConjunctiveQuery::boolean(atoms), visible_vars })
}

pub fn component_name(p: &str, i: usize) -> Name {
    name(&format!("{p}#{i}"))
}

pub fn exists_name(p: &str) -> Name {
    name(&format!("{p}#e"))
}

#[derive(Clone, Debug)]
pub struct Binarized {
    pub base: Instance,
    pub constraints: Vec<Dependency>,
    pub query: ConjunctiveQuery,
}

fn check_uid(d: &Dependency) -> Result<(), UidError> {
    let ok = d.body.len() == 1
        && d.head.len() == 1
        && !d.body[0].has_repeats()
        && !d.head[0].has_repeats()
        && d.frontier().len() <= 1;
    if ok {
        Ok(())
    } else {
        Err(UidError::NotUid(d.to_string()))
    }
}

/// Encodes every `n`-ary fact as a tuple value `t` with `R#i(t, v_i)` for
/// each component and `R#e(t)` for its existence.
pub fn binarize(base: &Instance, deps: &[Dependency], q: &ConjunctiveQuery) -> Result<Binarized, UidError> {
    let mut arity: BTreeMap<Name, usize> = BTreeMap::new();
    for f in base.facts() {
        arity.insert(f.pred.clone(), f.args.len());
    }
    for d in deps {
        check_uid(d)?;
        for a in d.body.iter().chain(&d.head) {
            arity.insert(a.pred.clone(), a.arity());
        }
    }
    for a in &q.atoms {
        arity.insert(a.pred.clone(), a.arity());
    }

    let mut out_base = Instance::new();
    for (k, f) in base.sorted_facts().iter().enumerate() {
        let t = Value::Const(name(&format!("__t{k}")));
        for (i, v) in f.args.iter().enumerate() {
            out_base.insert(&Fact { pred: component_name(&f.pred, i + 1), args: vec![t.clone(), v.clone()] });
        }
        out_base.insert(&Fact { pred: exists_name(&f.pred), args: vec![t] });
    }

    let (t, t2, x) = (name("t"), name("t2"), name("x"));
    let mut rules = Vec::new();
    for d in deps {
        let (body, head) = (&d.body[0], &d.head[0]);
        let rule = match d.frontier().first() {
            Some(v) => {
                let i = body.args.iter().position(|a| a == v).expect("frontier in body") + 1;
                let j = head.args.iter().position(|a| a == v).expect("frontier in head") + 1;
                Dependency::new(
                    vec![Atom { pred: component_name(&body.pred, i), args: vec![t.clone(), x.clone()] }],
                    vec![Atom { pred: component_name(&head.pred, j), args: vec![t2.clone(), x.clone()] }],
                )
            }
            None => Dependency::new(
                vec![Atom { pred: exists_name(&body.pred), args: vec![t.clone()] }],
                vec![Atom { pred: exists_name(&head.pred), args: vec![t2.clone()] }],
            ),
        };
        if !rules.contains(&rule) {
            rules.push(rule);
        }
    }
    for (p, n) in &arity {
        let e = Atom { pred: exists_name(p), args: vec![t.clone()] };
        for i in 1..=*n {
            let c = Atom { pred: component_name(p, i), args: vec![t.clone(), x.clone()] };
            rules.push(Dependency::new(vec![c.clone()], vec![e.clone()]));
            rules.push(Dependency::new(vec![e.clone()], vec![c]));
        }
    }

    let mut used: HashSet<Name> = q.vars().into_iter().collect();
    let mut atoms = Vec::new();
    for a in &q.atoms {
        let tv = fresh_var("t", &mut used);
        for (i, v) in a.args.iter().enumerate() {
            atoms.push(Atom { pred: component_name(&a.pred, i + 1), args: vec![tv.clone(), v.clone()] });
        }
        atoms.push(Atom { pred: exists_name(&a.pred), args: vec![tv] });
    }
    Ok(Binarized { base: out_base, constraints: rules, query: ConjunctiveQuery::boolean(atoms) })
}

/// Repeatedly merges forking pairs, lowest atom indices first: two atoms of
/// one binary predicate sharing a variable at the same position. Returns the
/// simplified query and where each replaced variable went.
pub fn eliminate_forking(q: &ConjunctiveQuery) -> (ConjunctiveQuery, BTreeMap<Name, Name>) {
    let mut atoms = dedup(q.atoms.clone());
    let mut subst: BTreeMap<Name, Name> = BTreeMap::new();
    'outer: loop {
        for a in 0..atoms.len() {
            for b in a + 1..atoms.len() {
                let (x, y) = (&atoms[a], &atoms[b]);
                if x.pred != y.pred || x.arity() != 2 {
                    continue;
                }
                for p in 0..2 {
                    if x.args[p] == y.args[p] && x.args[1 - p] != y.args[1 - p] {
                        let (keep, gone) = (x.args[1 - p].clone(), y.args[1 - p].clone());
                        for v in subst.values_mut() {
                            if *v == gone {
                                *v = keep.clone();
                            }
                        }
                        subst.insert(gone.clone(), keep.clone());
                        let f = |v: &Name| if *v == gone { keep.clone() } else { v.clone() };
                        atoms = dedup(atoms.iter().map(|a| a.rename(&f)).collect());
                        continue 'outer;
                    }
                }
            }
        }
        return (ConjunctiveQuery::boolean(atoms), subst);
    }
}

fn dedup(atoms: Vec<Atom>) -> Vec<Atom> {
    let mut seen = HashSet::new();
    atoms.into_iter().filter(|a| seen.insert(a.clone())).collect()
}

/// Connected components by shared variables, in order of first atom.
pub fn components(q: &ConjunctiveQuery) -> Vec<ConjunctiveQuery> {
    let n = q.atoms.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        if c[i] != i {
            let r = find(c, c[i]);
            c[i] = r;
        }
        c[i]
    }
    let mut owner: HashMap<&Name, usize> = HashMap::new();
    for (i, a) in q.atoms.iter().enumerate() {
        for v in &a.args {
            if let Some(&j) = owner.get(v) {
                let (ri, rj) = (find(&mut comp, i), find(&mut comp, j));
                comp[ri.max(rj)] = ri.min(rj);
            } else {
                owner.insert(v, i);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Atom>> = BTreeMap::new();
    for (i, a) in q.atoms.iter().enumerate() {
        let r = find(&mut comp, i);
        groups.entry(r).or_default().push(a.clone());
    }
    groups.into_values().map(ConjunctiveQuery::boolean).collect()
}

/// Variables with their unary atoms, and one edge per binary atom.
#[derive(Clone, Debug, Default)]
pub struct CqGraph {
    pub labels: BTreeMap<Name, BTreeSet<Name>>,
    pub edges: Vec<Atom>,
}

impl CqGraph {
    pub fn new(atoms: &[Atom]) -> CqGraph {
        let mut g = CqGraph::default();
        for a in atoms {
            for v in &a.args {
                g.labels.entry(v.clone()).or_default();
            }
            match a.arity() {
                1 => {
                    g.labels.get_mut(&a.args[0]).expect("added").insert(a.pred.clone());
                }
                _ => g.edges.push(a.clone()),
            }
        }
        g
    }

    /// A tree: no self-loops, no two atoms over the same pair, no cycle.
    pub fn is_tree(&self) -> bool {
        let mut pairs = HashSet::new();
        for e in &self.edges {
            if e.arity() != 2 || e.args[0] == e.args[1] {
                return false;
            }
            let key = if e.args[0] < e.args[1] { (&e.args[0], &e.args[1]) } else { (&e.args[1], &e.args[0]) };
            if !pairs.insert(key) {
                return false;
            }
        }
        let comps = components(&ConjunctiveQuery::boolean(self.edges.clone())).len();
        let isolated = self.labels.keys().filter(|v| !self.edges.iter().any(|e| e.mentions(v))).count();
        self.edges.len() + comps + isolated == self.labels.len()
    }

    /// Rooted at `root`: each variable's parent.
    pub fn arrangement(&self, root: &Name) -> TreeArrangement {
        let mut parent = BTreeMap::new();
        let mut queue = VecDeque::from([root.clone()]);
        let mut seen = HashSet::from([root.clone()]);
        while let Some(x) = queue.pop_front() {
            for e in &self.edges {
                if let Some(p) = e.args.iter().position(|v| *v == x) {
                    let y = &e.args[1 - p];
                    if seen.insert(y.clone()) {
                        parent.insert(y.clone(), x.clone());
                        queue.push_back(y.clone());
                    }
                }
            }
        }
        TreeArrangement { root: root.clone(), parent }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeArrangement {
    pub root: Name,
    pub parent: BTreeMap<Name, Name>,
}

/// A value's participation in a fact: a unary predicate, or a binary
/// predicate at position 1 or 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Unary(Name),
    Bin(Name, usize),
}

fn shape_of(a: &Atom, v: &Name) -> Result<Shape, UidError> {
    let pos = a.args.iter().position(|x| x == v).expect("variable in atom");
    match a.arity() {
        1 => Ok(Shape::Unary(a.pred.clone())),
        2 => Ok(Shape::Bin(a.pred.clone(), pos + 1)),
        _ => Err(UidError::NonBinary(a.pred.to_string())),
    }
}

/// Node classes of the chase forest; a node's subtree depends only on its
/// class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Root,
    BaseChild(usize),
    /// Root of a tree created by a frontier-free rule with this head.
    Fresh(Name),
    /// Created through a binary fact, sitting at the given position.
    Edge(Name, usize),
}

#[derive(Clone, Debug)]
struct Node {
    closure: BTreeSet<Shape>,
    children: BTreeMap<Shape, Kind>,
    value: Value,
}

#[derive(Clone, Debug)]
pub struct ShapeModel {
    rules: Vec<(Shape, Shape)>,
    spawns: Vec<(Shape, Name)>,
    leaves: Vec<(Value, Shape)>,
    nodes: BTreeMap<Kind, Node>,
}

fn child_value(parent: &Value, g: &str, p: usize) -> Value {
    Value::Const(name(&format!("{parent}/{g}.{p}")))
}

impl ShapeModel {
    pub fn new(base: &[Fact], uids: &[Dependency]) -> Result<ShapeModel, UidError> {
        let mut rules = Vec::new();
        let mut spawns = Vec::new();
        for d in uids {
            check_uid(d)?;
            let (body, head) = (&d.body[0], &d.head[0]);
            for a in [body, head] {
                if a.arity() > 2 {
                    return Err(UidError::NonBinary(a.pred.to_string()));
                }
            }
            match d.frontier().first() {
                Some(x) => rules.push((shape_of(body, x)?, shape_of(head, x)?)),
                None => {
                    if head.arity() != 1 || body.arity() == 0 {
                        return Err(UidError::BadSpawn(d.to_string()));
                    }
                    spawns.push((shape_of(body, &body.args[0])?, head.pred.clone()));
                }
            }
        }

        let mut model = ShapeModel { rules, spawns, leaves: Vec::new(), nodes: BTreeMap::new() };
        let Some(first) = base.first() else { return Ok(model) };
        let root = first
            .args
            .iter()
            .find(|v| base.iter().all(|f| f.args.contains(v)))
            .cloned()
            .ok_or_else(|| UidError::BadBase(first.to_string()))?;
        let mut root_init = BTreeSet::new();
        for f in base {
            let bad = || UidError::BadBase(f.to_string());
            match f.args.as_slice() {
                [v] if *v == root => {
                    root_init.insert(Shape::Unary(f.pred.clone()));
                }
                [a, b] if a != b => {
                    let (rp, leaf) = if *a == root { (1, b) } else { (2, a) };
                    if !root_init.insert(Shape::Bin(f.pred.clone(), rp)) || model.leaves.iter().any(|(l, _)| l == leaf) {
                        return Err(bad());
                    }
                    model.leaves.push((leaf.clone(), Shape::Bin(f.pred.clone(), 3 - rp)));
                }
                [_, _, _, ..] => return Err(UidError::NonBinary(f.pred.to_string())),
                _ => return Err(bad()),
            }
        }

        let mut queue = VecDeque::new();
        model.discover(Kind::Root, root_init, root, &mut queue);
        while let Some(k) = queue.pop_front() {
            let node = &model.nodes[&k];
            let mut found: Vec<(Kind, BTreeSet<Shape>, Value)> = Vec::new();
            for (shape, child) in &node.children {
                let (init, value) = match child {
                    Kind::BaseChild(j) => (BTreeSet::from([model.leaves[*j].1.clone()]), model.leaves[*j].0.clone()),
                    Kind::Edge(g, p) => {
                        let Shape::Bin(_, _) = shape else { unreachable!() };
                        (BTreeSet::from([Shape::Bin(g.clone(), *p)]), child_value(&node.value, g, *p))
                    }
                    _ => unreachable!(),
                };
                found.push((child.clone(), init, value));
            }
            for (s, h) in &model.spawns {
                if node.closure.contains(s) {
                    let v = Value::Const(name(&format!("new.{h}")));
                    found.push((Kind::Fresh(h.clone()), BTreeSet::from([Shape::Unary(h.clone())]), v));
                }
            }
            for (kind, init, value) in found {
                model.discover(kind, init, value, &mut queue);
            }
        }
        Ok(model)
    }

    fn closure(&self, init: &BTreeSet<Shape>) -> BTreeSet<Shape> {
        let mut out = init.clone();
        loop {
            let before = out.len();
            for (b, h) in &self.rules {
                if out.contains(b) && !out.contains(h) {
                    out.insert(h.clone());
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    fn discover(&mut self, kind: Kind, init: BTreeSet<Shape>, value: Value, queue: &mut VecDeque<Kind>) {
        if self.nodes.contains_key(&kind) {
            return;
        }
        let closure = self.closure(&init);
        let mut children = BTreeMap::new();
        if kind == Kind::Root {
            for (j, (_, s)) in self.leaves.iter().enumerate() {
                let Shape::Bin(g, p) = s else { unreachable!() };
                children.insert(Shape::Bin(g.clone(), 3 - p), Kind::BaseChild(j));
            }
        }
        for s in closure.difference(&init) {
            if let Shape::Bin(g, q) = s {
                children.insert(s.clone(), Kind::Edge(g.clone(), 3 - q));
            }
        }
        self.nodes.insert(kind.clone(), Node { closure, children, value });
        queue.push_back(kind);
    }

    /// Node classes occurring in the forest.
    pub fn kinds(&self) -> impl Iterator<Item = &Kind> {
        self.nodes.keys()
    }

    pub fn closure_of(&self, k: &Kind) -> Option<&BTreeSet<Shape>> {
        self.nodes.get(k).map(|n| &n.closure)
    }

    /// Children of a node class, keyed by the parent's side of the edge.
    pub fn children_of(&self, k: &Kind) -> Option<&BTreeMap<Shape, Kind>> {
        self.nodes.get(k).map(|n| &n.children)
    }

    /// A homomorphism of a non-forking query into the forest. Each component
    /// must be a tree; it is placed with one variable on some node and every
    /// other variable below it.
    pub fn embed(&self, atoms: &[Atom]) -> Option<Binding> {
        let mut out = Binding::new();
        for c in components(&ConjunctiveQuery::boolean(atoms.to_vec())) {
            out.extend(self.embed_tree(&c.atoms)?);
        }
        Some(out)
    }

    fn embed_tree(&self, atoms: &[Atom]) -> Option<Binding> {
        if atoms.iter().any(|a| a.arity() == 0 || a.arity() > 2) {
            return None;
        }
        let g = CqGraph::new(atoms);
        if !g.is_tree() {
            return None;
        }
        for r in g.labels.keys() {
            let arr = g.arrangement(r);
            let mut memo = HashMap::new();
            for k in self.nodes.keys() {
                if self.fits(&g, &arr, r, k, &mut memo) {
                    let mut b = Binding::new();
                    self.place(&g, &arr, r, k, self.nodes[k].value.clone(), &mut b);
                    return Some(b);
                }
            }
        }
        None
    }

    fn below<'a>(&self, g: &'a CqGraph, arr: &TreeArrangement, x: &Name) -> Vec<(&'a Name, Shape)> {
        g.edges
            .iter()
            .filter_map(|e| {
                let p = e.args.iter().position(|v| v == x)?;
                let y = &e.args[1 - p];
                (arr.parent.get(y) == Some(x)).then(|| (y, Shape::Bin(e.pred.clone(), p + 1)))
            })
            .collect()
    }

    fn fits(
        &self,
        g: &CqGraph,
        arr: &TreeArrangement,
        x: &Name,
        k: &Kind,
        memo: &mut HashMap<(Name, Kind), bool>,
    ) -> bool {
        if let Some(&r) = memo.get(&(x.clone(), k.clone())) {
            return r;
        }
        let node = &self.nodes[k];
        let ok = g.labels[x].iter().all(|u| node.closure.contains(&Shape::Unary(u.clone())))
            && self.below(g, arr, x).into_iter().all(|(y, s)| match node.children.get(&s) {
                Some(c) => self.fits(g, arr, y, c, memo),
                None => false,
            });
        memo.insert((x.clone(), k.clone()), ok);
        ok
    }

    fn place(&self, g: &CqGraph, arr: &TreeArrangement, x: &Name, k: &Kind, v: Value, out: &mut Binding) {
        let node = &self.nodes[k];
        for (y, s) in self.below(g, arr, x) {
            let c = &node.children[&s];
            let cv = match c {
                Kind::BaseChild(j) => self.leaves[*j].0.clone(),
                Kind::Edge(gp, p) => child_value(&v, gp, *p),
                _ => unreachable!(),
            };
            self.place(g, arr, y, c, cv, out);
        }
        out.insert(x.clone(), v);
    }

    /// Finite part of the forest: the base tree and one copy of every node
    /// class, each expanded `depth` generations down.
    pub fn unfold(&self, depth: usize) -> Instance {
        let mut out = Instance::new();
        for (k, n) in &self.nodes {
            if !matches!(k, Kind::BaseChild(_)) {
                self.expand(k, &n.value, depth, &mut out);
            }
        }
        out
    }

    fn expand(&self, k: &Kind, v: &Value, depth: usize, out: &mut Instance) {
        let node = &self.nodes[k];
        for s in &node.closure {
            if let Shape::Unary(u) = s {
                out.insert(&Fact { pred: u.clone(), args: vec![v.clone()] });
            }
        }
        if let Kind::Root = k {
            for (leaf, s) in &self.leaves {
                let Shape::Bin(g, p) = s else { unreachable!() };
                let args = if *p == 2 { vec![v.clone(), leaf.clone()] } else { vec![leaf.clone(), v.clone()] };
                out.insert(&Fact { pred: g.clone(), args });
            }
        }
        if depth == 0 {
            return;
        }
        for (s, c) in &node.children {
            let cv = match c {
                Kind::BaseChild(j) => self.leaves[*j].0.clone(),
                Kind::Edge(g, p) => {
                    let cv = child_value(v, g, *p);
                    let Shape::Bin(_, q) = s else { unreachable!() };
                    let args = if *q == 1 { vec![v.clone(), cv.clone()] } else { vec![cv.clone(), v.clone()] };
                    out.insert(&Fact { pred: g.clone(), args });
                    cv
                }
                _ => unreachable!(),
            };
            self.expand(c, &cv, depth - 1, out);
        }
    }
}

/// Whether the binary UIDs entail `q` from a star-shaped base.
pub fn decide_uid_entailment(base: &[Fact], uids: &[Dependency], q: &ConjunctiveQuery) -> Result<bool, UidError> {
    let model = ShapeModel::new(base, uids)?;
    let (q, _) = eliminate_forking(q);
    Ok(model.embed(&q.atoms).is_some())
}

#[derive(Clone, Copy, Debug)]
pub enum Premise<'a> {
    Base(&'a [Fact]),
    Atom(&'a Atom),
}

/// Whether the premise and the UIDs entail the goal, with the premise's
/// variables shared with the goal.
pub fn uid_atomic_entails(uids: &[Dependency], premise: Premise<'_>, goal: &[Atom]) -> Result<bool, UidError> {
    let mut fixed = Binding::new();
    let base = match premise {
        Premise::Base(facts) => facts.to_vec(),
        Premise::Atom(a) => {
            let args: Vec<Value> = a.args.iter().map(|v| Value::Const(v.clone())).collect();
            for v in vars_of(goal) {
                if a.args.contains(&v) {
                    fixed.insert(v.clone(), Value::Const(v.clone()));
                }
            }
            vec![Fact { pred: a.pred.clone(), args }]
        }
    };
    let model = ShapeModel::new(&base, uids)?;
    let depth = vars_of(goal).len().max(1);
    Ok(find_match(&model.unfold(depth), goal, &fixed).is_some())
}

/// Decides disclosure for UID constraints and projection mappings. Every
/// stage terminates, so the answer is never unknown. Witness values are
/// paths in the chase forest.
pub fn disclose_uid_ptime(sigma: &[Dependency], m: &MappingSet, p: &ConjunctiveQuery) -> Result<Outcome, DiscloseError> {
    let red = reduce_uid(sigma, m, p)?;
    let bin = binarize(&red.base, &red.constraints, &red.query).map_err(|e| DiscloseError::ClassMismatch(e.to_string()))?;
    let model = ShapeModel::new(&bin.base.sorted_facts(), &bin.constraints)
        .map_err(|e| DiscloseError::ClassMismatch(e.to_string()))?;
    let (q, subst) = eliminate_forking(&bin.query);
    let verdict = match model.embed(&q.atoms) {
        Some(b) => {
            let mut witness = Binding::new();
            for v in p.vars() {
                let rep = subst.get(&v).unwrap_or(&v);
                let val = match b.get(rep) {
                    Some(x) if !red.visible_vars.contains(&v) => x.clone(),
                    _ => Value::Crit,
                };
                witness.insert(v, val);
            }
            Verdict::Disclosed { witness }
        }
        None => Verdict::NotDisclosed,
    };
    Ok(Outcome { verdict, rounds: 0, facts: model.kinds().count(), state: None, trace: Vec::new() })
}
