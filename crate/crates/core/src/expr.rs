//! Path expressions, valuations and packing structures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::value::{Atom, Path, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// `@x`: ranges over atomic values.
    Atom,
    /// `$x`: ranges over paths.
    Path,
}

/// A variable. `@x` and `$x` are different variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub kind: VarKind,
    pub name: Arc<str>,
}

impl Var {
    pub fn new(kind: VarKind, name: &str) -> Var {
        Var {
            kind,
            name: Arc::from(name),
        }
    }

    pub fn path(name: &str) -> Var {
        Var::new(VarKind::Path, name)
    }

    pub fn atom(name: &str) -> Var {
        Var::new(VarKind::Atom, name)
    }

    pub fn is_path(&self) -> bool {
        self.kind == VarKind::Path
    }

    pub fn is_atom(&self) -> bool {
        self.kind == VarKind::Atom
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::Atom => write!(f, "@{}", self.name),
            VarKind::Path => write!(f, "${}", self.name),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Const(Atom),
    Var(Var),
    Packed(Expr),
}

impl Token {
    pub fn constant(symbol: &str) -> Token {
        Token::Const(Atom::new(symbol))
    }

    pub fn path_var(name: &str) -> Token {
        Token::Var(Var::path(name))
    }

    pub fn atom_var(name: &str) -> Token {
        Token::Var(Var::atom(name))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Token::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Const(a) => write!(f, "{a}"),
            Token::Var(v) => write!(f, "{v}"),
            Token::Packed(e) => write!(f, "<{e}>"),
        }
    }
}

/// A path expression: a flat token sequence in which packing is the only
/// nesting. The empty sequence denotes ε.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Vec<Token>);

impl Expr {
    pub fn empty() -> Expr {
        Expr(Vec::new())
    }

    pub fn new(tokens: Vec<Token>) -> Expr {
        Expr(tokens)
    }

    pub fn var(v: Var) -> Expr {
        Expr(vec![Token::Var(v)])
    }

    pub fn path_var(name: &str) -> Expr {
        Expr::var(Var::path(name))
    }

    pub fn atom_var(name: &str) -> Expr {
        Expr::var(Var::atom(name))
    }

    pub fn constant(symbol: &str) -> Expr {
        Expr(vec![Token::constant(symbol)])
    }

    pub fn packed(inner: Expr) -> Expr {
        Expr(vec![Token::Packed(inner)])
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, t: Token) {
        self.0.push(t);
    }

    pub fn extend(&mut self, other: &Expr) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &Expr) -> Expr {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn concat_all<'a, I: IntoIterator<Item = &'a Expr>>(parts: I) -> Expr {
        let mut out = Expr::empty();
        for p in parts {
            out.extend(p);
        }
        out
    }

    /// The single variable of a one-token variable expression.
    pub fn as_var(&self) -> Option<&Var> {
        match self.0.as_slice() {
            [Token::Var(v)] => Some(v),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.0.iter().all(|t| match t {
            Token::Const(_) => true,
            Token::Var(_) => false,
            Token::Packed(e) => e.is_ground(),
        })
    }

    pub fn is_packing_free(&self) -> bool {
        !self.0.iter().any(|t| matches!(t, Token::Packed(_)))
    }

    /// Maximum bracket nesting depth.
    pub fn packing_depth(&self) -> usize {
        self.0
            .iter()
            .map(|t| match t {
                Token::Packed(e) => 1 + e.packing_depth(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Adds every variable occurring in the expression, at any depth.
    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for t in &self.0 {
            match t {
                Token::Const(_) => {}
                Token::Var(v) => {
                    out.insert(v.clone());
                }
                Token::Packed(e) => e.collect_vars(out),
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Variables in order of first occurrence (depth-first, left to right).
    pub fn vars_in_order(&self, out: &mut Vec<Var>) {
        for t in &self.0 {
            match t {
                Token::Const(_) => {}
                Token::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Token::Packed(e) => e.vars_in_order(out),
            }
        }
    }

    /// Number of occurrences of `v`, at any depth.
    pub fn occurrences(&self, v: &Var) -> usize {
        self.0
            .iter()
            .map(|t| match t {
                Token::Var(w) => usize::from(w == v),
                Token::Packed(e) => e.occurrences(v),
                Token::Const(_) => 0,
            })
            .sum()
    }

    /// Converts a ground expression to the path it denotes.
    pub fn to_path(&self) -> Option<Path> {
        let mut out = Vec::with_capacity(self.0.len());
        for t in &self.0 {
            match t {
                Token::Const(a) => out.push(Value::Atom(*a)),
                Token::Var(_) => return None,
                Token::Packed(e) => out.push(Value::packed(e.to_path()?)),
            }
        }
        Some(Path::new(out))
    }

    pub fn from_path(p: &Path) -> Expr {
        Expr(p.values().iter().map(Token::from_value).collect())
    }

    /// Replaces variables by expressions; unmapped variables stay.
    pub fn substitute(&self, f: &impl Fn(&Var) -> Option<Expr>) -> Expr {
        let mut out = Vec::with_capacity(self.0.len());
        for t in &self.0 {
            match t {
                Token::Const(_) => out.push(t.clone()),
                Token::Var(v) => match f(v) {
                    Some(e) => out.extend(e.0),
                    None => out.push(t.clone()),
                },
                Token::Packed(e) => out.push(Token::Packed(e.substitute(f))),
            }
        }
        Expr(out)
    }

    /// Renames variables, keeping their kinds.
    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Expr {
        self.substitute(&|v| Some(Expr::var(f(v))))
    }
}

impl Token {
    pub fn from_value(v: &Value) -> Token {
        match v {
            Value::Atom(a) => Token::Const(*a),
            Value::Packed(p) => Token::Packed(Expr::from_path(p)),
        }
    }
}

impl From<Token> for Expr {
    fn from(t: Token) -> Expr {
        Expr(vec![t])
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::var(v)
    }
}

impl FromIterator<Token> for Expr {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Expr {
        Expr(iter.into_iter().collect())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints in the textual syntax; ε is `!`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("!");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// A (possibly partial) valuation. Atomic variables are bound to paths of
/// exactly one atomic value.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(BTreeMap<Var, Path>);

impl Valuation {
    pub fn new() -> Valuation {
        Valuation::default()
    }

    pub fn get(&self, v: &Var) -> Option<&Path> {
        self.0.get(v)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.0.contains_key(v)
    }

    /// Binds `v`; returns false (and binds nothing) if the binding violates the
    /// variable's kind.
    pub fn bind(&mut self, v: Var, p: Path) -> bool {
        if v.is_atom() && !matches!(p.as_single(), Some(Value::Atom(_))) {
            return false;
        }
        self.0.insert(v, p);
        true
    }

    pub fn bind_atom(&mut self, name: &str, a: &str) {
        self.0.insert(Var::atom(name), Path::atoms(&[a]));
    }

    pub fn bind_path(&mut self, name: &str, p: Path) {
        self.0.insert(Var::path(name), p);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Path)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn remove(&mut self, v: &Var) -> Option<Path> {
        self.0.remove(v)
    }

    /// Evaluates a ground-under-this-valuation expression to a path.
    pub fn eval(&self, e: &Expr) -> Option<Path> {
        let mut out = Path::empty();
        self.eval_into(e, &mut out)?;
        Some(out)
    }

    fn eval_into(&self, e: &Expr, out: &mut Path) -> Option<()> {
        for t in e.tokens() {
            match t {
                Token::Const(a) => out.push(Value::Atom(*a)),
                Token::Var(v) => out.extend_from(self.0.get(v)?),
                Token::Packed(inner) => {
                    let mut p = Path::empty();
                    self.eval_into(inner, &mut p)?;
                    out.push(Value::packed(p));
                }
            }
        }
        Some(())
    }
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {p}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<(Var, Path)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (Var, Path)>>(iter: I) -> Valuation {
        Valuation(iter.into_iter().collect())
    }
}

/// Substitutes bound variables by their images; unbound variables remain.
pub fn apply_valuation(e: &Expr, v: &Valuation) -> Expr {
    e.substitute(&|var| v.get(var).map(Expr::from_path))
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PsToken {
    Star,
    Packed(PackingStructure),
}

/// The shape of an expression with every maximal packing-free segment
/// collapsed to a star.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PackingStructure(pub Vec<PsToken>);

impl PackingStructure {
    pub fn star_count(&self) -> usize {
        self.0
            .iter()
            .map(|t| match t {
                PsToken::Star => 1,
                PsToken::Packed(p) => p.star_count(),
            })
            .sum()
    }

    /// Rebuilds an expression by putting `components` in place of the stars,
    /// left to right. Returns `None` if the count is wrong.
    pub fn fill(&self, components: &[Expr]) -> Option<Expr> {
        let mut it = components.iter();
        let e = self.fill_from(&mut it)?;
        it.next().is_none().then_some(e)
    }

    fn fill_from<'a>(&self, it: &mut impl Iterator<Item = &'a Expr>) -> Option<Expr> {
        let mut out = Expr::empty();
        for t in &self.0 {
            match t {
                PsToken::Star => out.extend(it.next()?),
                PsToken::Packed(p) => out.push(Token::Packed(p.fill_from(it)?)),
            }
        }
        Some(out)
    }
}

impl fmt::Debug for PackingStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PackingStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.0 {
            match t {
                PsToken::Star => f.write_str("*")?,
                PsToken::Packed(p) => write!(f, "<{p}>")?,
            }
        }
        Ok(())
    }
}

fn split_packing(e: &Expr, comps: &mut Vec<Expr>) -> PackingStructure {
    let mut ps = Vec::new();
    let mut buf = Expr::empty();
    for t in e.tokens() {
        match t {
            Token::Packed(inner) => {
                comps.push(std::mem::take(&mut buf));
                ps.push(PsToken::Star);
                ps.push(PsToken::Packed(split_packing(inner, comps)));
            }
            _ => buf.push(t.clone()),
        }
    }
    comps.push(buf);
    ps.push(PsToken::Star);
    PackingStructure(ps)
}

pub fn packing_structure(e: &Expr) -> PackingStructure {
    split_packing(e, &mut Vec::new())
}

/// The packing-free subexpressions standing at the stars of
/// [`packing_structure`], left to right.
pub fn components(e: &Expr) -> Vec<Expr> {
    let mut comps = Vec::new();
    split_packing(e, &mut comps);
    comps
}

/// Structure and components in one pass.
pub fn decompose(e: &Expr) -> (PackingStructure, Vec<Expr>) {
    let mut comps = Vec::new();
    let ps = split_packing(e, &mut comps);
    (ps, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(n: &str) -> Token {
        Token::path_var(n)
    }
    fn av(n: &str) -> Token {
        Token::atom_var(n)
    }
    fn c(s: &str) -> Token {
        Token::constant(s)
    }
    fn pk(ts: Vec<Token>) -> Token {
        Token::Packed(Expr::new(ts))
    }

    fn nested_example() -> Expr {
        // @a·⟨⟨$x·$y⟩·$z⟩·⟨ε⟩
        Expr::new(vec![
            av("a"),
            pk(vec![pk(vec![pv("x"), pv("y")]), pv("z")]),
            pk(vec![]),
        ])
    }

    #[test]
    fn packing_structure_of_nested_example() {
        let e = nested_example();
        assert_eq!(packing_structure(&e).to_string(), "*<*<*>*>*<*>*");
        let comps: Vec<String> = components(&e).iter().map(|e| e.to_string()).collect();
        assert_eq!(comps, ["@a", "!", "$x/$y", "$z", "!", "!", "!"]);
    }

    #[test]
    fn packing_structure_small_cases() {
        let flat = Expr::new(vec![pv("x"), c("a"), av("y")]);
        assert_eq!(packing_structure(&flat).to_string(), "*");
        assert_eq!(components(&flat), vec![flat.clone()]);
        assert_eq!(packing_structure(&Expr::empty()).to_string(), "*");
        let single = Expr::new(vec![pk(vec![c("a")])]);
        assert_eq!(packing_structure(&single).to_string(), "*<*>*");
        assert_eq!(
            components(&single),
            vec![Expr::empty(), Expr::constant("a"), Expr::empty()]
        );
    }

    #[test]
    fn fill_reconstructs() {
        let e = nested_example();
        let (ps, comps) = decompose(&e);
        assert_eq!(ps.star_count(), comps.len());
        assert_eq!(ps.fill(&comps), Some(e));
    }

    #[test]
    fn apply_valuation_cases() {
        let e = Expr::new(vec![pv("x"), c("a")]);
        let mut v = Valuation::new();
        v.bind_path("x", Path::atoms(&["a", "a"]));
        let r = apply_valuation(&e, &v);
        assert!(r.is_ground());
        assert_eq!(r.to_path(), Some(Path::atoms(&["a", "a", "a"])));

        let e = Expr::new(vec![pk(vec![av("y"), pv("z")])]);
        let mut v = Valuation::new();
        v.bind_atom("y", "b");
        assert_eq!(apply_valuation(&e, &v).to_string(), "<b/$z>");

        let e = Expr::path_var("x");
        assert_eq!(apply_valuation(&e, &Valuation::new()), e);
    }

    #[test]
    fn atom_vars_reject_non_atomic_bindings() {
        let mut v = Valuation::new();
        assert!(!v.bind(Var::atom("x"), Path::atoms(&["a", "b"])));
        assert!(!v.bind(Var::atom("x"), Path::empty()));
        assert!(!v.bind(
            Var::atom("x"),
            Path::from(Value::packed(Path::atoms(&["a"])))
        ));
        assert!(v.bind(Var::atom("x"), Path::atoms(&["a"])));
    }

    #[test]
    fn ground_round_trip() {
        let p = Path::new(vec![
            Value::atom("c"),
            Value::packed(Path::atoms(&["a", "b", "a"])),
        ]);
        assert_eq!(Expr::from_path(&p).to_path(), Some(p));
    }
}
