//! Ground data: atomic values, packed values, paths, relations and instances.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use parking_lot::RwLock;
use thiserror::Error;

struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        RwLock::new(Interner {
            ids: HashMap::new(),
            names: Vec::new(),
        })
    })
}

/// An interned atomic value.
///
/// Equality and hashing use the interned id; ordering compares the symbol text
/// so that sorted output does not depend on interning order.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom(u32);

impl Atom {
    /// Interns `symbol`. Symbol validity is checked by the parser, not here.
    pub fn new(symbol: &str) -> Atom {
        if let Some(&id) = interner().read().ids.get(symbol) {
            return Atom(id);
        }
        let mut table = interner().write();
        if let Some(&id) = table.ids.get(symbol) {
            return Atom(id);
        }
        let leaked: &'static str = Box::leak(symbol.to_owned().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(leaked);
        table.ids.insert(leaked, id);
        Atom(id)
    }

    pub fn as_str(self) -> &'static str {
        interner().read().names[self.0 as usize]
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            Ordering::Equal
        } else {
            self.as_str().cmp(other.as_str())
        }
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value is atomic or a packed path. Atomic values sort before packed ones.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Atom(Atom),
    Packed(Box<Path>),
}

impl Value {
    pub fn atom(symbol: &str) -> Value {
        Value::Atom(Atom::new(symbol))
    }

    pub fn packed(path: Path) -> Value {
        Value::Packed(Box::new(path))
    }

    pub fn as_atom(&self) -> Option<Atom> {
        match self {
            Value::Atom(a) => Some(*a),
            Value::Packed(_) => None,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Value::Atom(_))
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write!(f, "{a}"),
            Value::Packed(p) => write!(f, "<{p}>"),
        }
    }
}

/// A finite sequence of values. Concatenation always flattens, so a path is
/// never a sequence of sequences; packing is the only nesting.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(Vec<Value>);

impl Path {
    pub fn empty() -> Path {
        Path(Vec::new())
    }

    pub fn new(values: Vec<Value>) -> Path {
        Path(values)
    }

    /// Builds a flat path from atomic symbols, e.g. `Path::atoms(&["a", "b"])`.
    pub fn atoms(symbols: &[&str]) -> Path {
        Path(symbols.iter().map(|s| Value::atom(s)).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Value> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, v: Value) {
        self.0.push(v);
    }

    pub fn extend_from(&mut self, other: &Path) {
        self.0.extend_from_slice(&other.0);
    }

    /// True iff no packed value occurs at any depth.
    pub fn is_flat(&self) -> bool {
        self.0.iter().all(Value::is_flat)
    }

    /// The single value of a length-1 path.
    pub fn as_single(&self) -> Option<&Value> {
        match self.0.as_slice() {
            [v] => Some(v),
            _ => None,
        }
    }

    /// Number of values at all nesting depths, counting each packed value
    /// once plus its contents.
    pub fn size(&self) -> usize {
        self.0
            .iter()
            .map(|v| match v {
                Value::Atom(_) => 1,
                Value::Packed(p) => 1 + p.size(),
            })
            .sum()
    }

    /// Maximum bracket nesting depth (0 for flat paths).
    pub fn packing_depth(&self) -> usize {
        self.0
            .iter()
            .map(|v| match v {
                Value::Atom(_) => 0,
                Value::Packed(p) => 1 + p.packing_depth(),
            })
            .max()
            .unwrap_or(0)
    }

    pub fn slice(&self, from: usize, to: usize) -> Path {
        Path(self.0[from..to].to_vec())
    }
}

impl From<Value> for Path {
    fn from(v: Value) -> Path {
        Path(vec![v])
    }
}

impl FromIterator<Value> for Path {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Path {
        Path(iter.into_iter().collect())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints in the textual syntax: `a/b/<c>`, or `!` for the empty path.
impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("!");
        }
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Flattened concatenation of a sequence of paths.
pub fn concat<'a, I>(paths: I) -> Path
where
    I: IntoIterator<Item = &'a Path>,
{
    let mut out = Path::empty();
    for p in paths {
        out.extend_from(p);
    }
    out
}

pub type Tuple = Vec<Path>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("relation {relation} has arity {expected}, got a tuple of arity {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
}

/// A finite relation of fixed arity. An arity-0 relation is true iff it holds
/// the empty tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: HashSet<Tuple>,
}

impl Relation {
    pub fn new(arity: usize) -> Relation {
        Relation {
            arity,
            tuples: HashSet::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Path]) -> bool {
        self.tuples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn tuples(&self) -> &HashSet<Tuple> {
        &self.tuples
    }

    /// Inserts a tuple; returns whether it was new.
    ///
    /// Panics if the tuple has the wrong arity; use [`Instance::insert`] for a
    /// checked insertion.
    pub fn insert(&mut self, t: Tuple) -> bool {
        assert_eq!(t.len(), self.arity, "tuple arity does not match relation");
        self.tuples.insert(t)
    }

    pub fn sorted(&self) -> Vec<&Tuple> {
        let mut v: Vec<&Tuple> = self.tuples.iter().collect();
        v.sort();
        v
    }

    pub fn is_flat(&self) -> bool {
        self.tuples.iter().all(|t| t.iter().all(Path::is_flat))
    }
}

impl FromIterator<Tuple> for Relation {
    /// Collects tuples of a common arity; the arity of an empty iterator is 0.
    fn from_iter<I: IntoIterator<Item = Tuple>>(iter: I) -> Relation {
        let tuples: HashSet<Tuple> = iter.into_iter().collect();
        let arity = tuples.iter().next().map_or(0, Vec::len);
        assert!(tuples.iter().all(|t| t.len() == arity));
        Relation { arity, tuples }
    }
}

/// An instance maps relation names to relations; equivalently a set of facts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    relations: BTreeMap<String, Relation>,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&String, &Relation)> {
        self.relations.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.relations.keys()
    }

    /// Declares `name` with the given arity if absent and returns it.
    pub fn relation_mut(&mut self, name: &str, arity: usize) -> Result<&mut Relation, InstanceError> {
        let rel = self
            .relations
            .entry(name.to_owned())
            .or_insert_with(|| Relation::new(arity));
        if rel.arity != arity {
            return Err(InstanceError::ArityMismatch {
                relation: name.to_owned(),
                expected: rel.arity,
                found: arity,
            });
        }
        Ok(rel)
    }

    pub fn insert(&mut self, name: &str, tuple: Tuple) -> Result<bool, InstanceError> {
        let arity = tuple.len();
        Ok(self.relation_mut(name, arity)?.insert(tuple))
    }

    pub fn set_relation(&mut self, name: &str, rel: Relation) {
        self.relations.insert(name.to_owned(), rel);
    }

    pub fn remove(&mut self, name: &str) -> Option<Relation> {
        self.relations.remove(name)
    }

    pub fn contains_fact(&self, name: &str, tuple: &[Path]) -> bool {
        self.relations.get(name).is_some_and(|r| r.contains(tuple))
    }

    pub fn fact_count(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    /// Sorted `(relation, tuple)` pairs.
    pub fn facts(&self) -> Vec<(&str, &Tuple)> {
        self.relations
            .iter()
            .flat_map(|(n, r)| r.sorted().into_iter().map(move |t| (n.as_str(), t)))
            .collect()
    }

    /// Restricts the instance to the given relation names.
    pub fn project<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Instance {
        let mut out = Instance::new();
        for n in names {
            if let Some(r) = self.relations.get(n) {
                out.relations.insert(n.to_owned(), r.clone());
            }
        }
        out
    }
}

/// True iff no packed value occurs anywhere in the instance.
pub fn is_flat(instance: &Instance) -> bool {
    instance.relations.values().all(Relation::is_flat)
}
