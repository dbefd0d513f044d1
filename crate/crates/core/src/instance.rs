//! Deduplicated fact sets with per-position value indexes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::model::{Fact, Name, Value};

#[derive(Clone, Debug, Default)]
pub struct Relation {
    arity: usize,
    rows: Vec<Box<[Value]>>,
    set: HashSet<Box<[Value]>>,
    index: Vec<HashMap<Value, Vec<u32>>>,
}

impl Relation {
    fn new(arity: usize) -> Relation {
        Relation { arity, rows: Vec::new(), set: HashSet::new(), index: vec![HashMap::new(); arity] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Box<[Value]>] {
        &self.rows
    }

    pub fn row(&self, i: u32) -> &[Value] {
        &self.rows[i as usize]
    }

    /// Row ids holding `v` at position `pos`.
    pub fn lookup(&self, pos: usize, v: &Value) -> &[u32] {
        self.index[pos].get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, args: &[Value]) -> bool {
        self.set.contains(args)
    }

    fn insert(&mut self, args: Box<[Value]>) -> bool {
        assert_eq!(args.len(), self.arity, "arity mismatch");
        if self.set.contains(&args) {
            return false;
        }
        let id = self.rows.len() as u32;
        for (pos, v) in args.iter().enumerate() {
            self.index[pos].entry(v.clone()).or_default().push(id);
        }
        self.set.insert(args.clone());
        self.rows.push(args);
        true
    }
}

#[derive(Clone, Debug, Default)]
pub struct Instance {
    rels: BTreeMap<Name, Relation>,
    len: usize,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> Instance {
        let mut out = Instance::new();
        for f in facts {
            out.insert(f);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, f: &Fact) -> bool {
        self.insert_row(&f.pred, f.args.clone().into_boxed_slice())
    }

    pub fn insert_row(&mut self, pred: &Name, args: Box<[Value]>) -> bool {
        let arity = args.len();
        let rel = self.rels.entry(pred.clone()).or_insert_with(|| Relation::new(arity));
        let added = rel.insert(args);
        if added {
            self.len += 1;
        }
        added
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.rels.get(&f.pred).is_some_and(|r| r.contains(&f.args))
    }

    pub fn relation(&self, pred: &str) -> Option<&Relation> {
        self.rels.get(pred)
    }

    pub fn preds(&self) -> impl Iterator<Item = &Name> {
        self.rels.keys()
    }

    /// Facts grouped by predicate, each group in insertion order.
    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.rels
            .iter()
            .flat_map(|(p, r)| r.rows.iter().map(move |row| Fact { pred: p.clone(), args: row.to_vec() }))
    }

    pub fn sorted_facts(&self) -> Vec<Fact> {
        let mut v: Vec<Fact> = self.facts().collect();
        v.sort();
        v
    }

    pub fn values(&self) -> BTreeSet<Value> {
        self.rels.values().flat_map(|r| r.rows.iter().flat_map(|row| row.iter().cloned())).collect()
    }

    /// Applies `map` to every value and deduplicates. Returns the new
    /// instance and the rewritten forms of every fact that changed.
    pub fn substitute(&self, map: &HashMap<Value, Value>) -> (Instance, Vec<Fact>) {
        let mut out = Instance::new();
        let mut changed = Vec::new();
        for (p, r) in &self.rels {
            for row in &r.rows {
                if row.iter().any(|v| map.get(v).is_some_and(|w| w != v)) {
                    let args: Vec<Value> = row.iter().map(|v| map.get(v).unwrap_or(v).clone()).collect();
                    changed.push(Fact { pred: p.clone(), args: args.clone() });
                    out.insert_row(p, args.into_boxed_slice());
                } else {
                    out.insert_row(p, row.clone());
                }
            }
        }
        (out, changed)
    }

    /// Same fact set, regardless of insertion order.
    pub fn same_facts(&self, other: &Instance) -> bool {
        self.len == other.len && self.facts().all(|f| other.contains(&f))
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.sorted_facts() {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::name;

    fn c(s: &str) -> Value {
        Value::Const(name(s))
    }

    #[test]
    fn dedup_and_index() {
        let mut i = Instance::new();
        assert!(i.insert(&Fact::new("R", vec![c("a"), c("b")])));
        assert!(!i.insert(&Fact::new("R", vec![c("a"), c("b")])));
        assert!(i.insert(&Fact::new("R", vec![c("a"), c("c")])));
        assert_eq!(i.len(), 2);
        let r = i.relation("R").unwrap();
        assert_eq!(r.lookup(0, &c("a")).len(), 2);
        assert_eq!(r.lookup(1, &c("c")), &[1]);
    }

    #[test]
    fn substitute_merges_duplicates() {
        let mut i = Instance::new();
        i.insert(&Fact::new("R", vec![Value::Null(1), Value::Crit]));
        i.insert(&Fact::new("R", vec![Value::Crit, Value::Crit]));
        i.insert(&Fact::new("S", vec![c("a")]));
        let map: HashMap<Value, Value> = [(Value::Null(1), Value::Crit)].into_iter().collect();
        let (j, changed) = i.substitute(&map);
        assert_eq!(j.len(), 2);
        assert_eq!(changed, vec![Fact::new("R", vec![Value::Crit, Value::Crit])]);
    }
}
