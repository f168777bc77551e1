//! Associative unification of path expressions.
//!
//! [`solve`] runs a pig-pug style search: each node is an equation, each
//! rule application substitutes one variable and cancels the now-equal head
//! tokens, and the leaves `ε = ε` yield symbolic solutions. Path variables
//! are assumed nonempty during the search; [`solve`] recovers the empty
//! cases by trying every subset of path variables set to ε.
//!
//! [`ground_match`] handles the special case where one side is ground by
//! enumerating decompositions of the path directly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::rc::Rc;

use thiserror::Error;

use crate::expr::{Expr, Token, Valuation, Var};
use crate::program::Equation;
use crate::value::{Path, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetKind {
    Nodes,
    Depth,
    Solutions,
    /// An equation reappeared below itself: the search space is infinite.
    Cycle,
    /// Too many path variables for the empty-word closure.
    Variables,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetKind::Nodes => "node count",
            BudgetKind::Depth => "search depth",
            BudgetKind::Solutions => "solution count",
            BudgetKind::Cycle => "cyclic search",
            BudgetKind::Variables => "variable count",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnifyError {
    #[error("unification budget exceeded ({0})")]
    BudgetExceeded(BudgetKind),
}

#[derive(Clone, Copy, Debug)]
pub struct UnifyBudget {
    pub max_nodes: usize,
    pub max_depth: usize,
    pub max_solutions: usize,
}

impl Default for UnifyBudget {
    fn default() -> UnifyBudget {
        UnifyBudget {
            max_nodes: 100_000,
            max_depth: 1_000,
            max_solutions: 100_000,
        }
    }
}

/// A symbolic solution: a substitution of expressions for variables.
/// Unmapped variables are left unchanged.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Var, Expr>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn single(v: Var, e: Expr) -> Substitution {
        Substitution([(v, e)].into())
    }

    pub fn insert(&mut self, v: Var, e: Expr) {
        self.0.insert(v, e);
    }

    pub fn get(&self, v: &Var) -> Option<&Expr> {
        self.0.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Expr)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Image of `v`, which is `v` itself when unmapped.
    pub fn image(&self, v: &Var) -> Expr {
        self.0.get(v).cloned().unwrap_or_else(|| Expr::var(v.clone()))
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        e.substitute(&|v| self.0.get(v).cloned())
    }

    pub fn apply_equation(&self, eq: &Equation) -> Equation {
        Equation::new(self.apply(&eq.lhs), self.apply(&eq.rhs))
    }

    /// `self ∘ rho` restricted to `domain`, with identity bindings dropped.
    pub fn after(&self, rho: &Substitution, domain: &BTreeSet<Var>) -> Substitution {
        let mut out = BTreeMap::new();
        for v in domain {
            let e = self.apply(&rho.image(v));
            if e.as_var() != Some(v) {
                out.insert(v.clone(), e);
            }
        }
        Substitution(out)
    }

    /// Drops bindings of the form `v -> v`.
    pub fn normalized(mut self) -> Substitution {
        self.0.retain(|v, e| e.as_var() != Some(v));
        self
    }

    /// Variables occurring in the images.
    pub fn range_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for e in self.0.values() {
            e.collect_vars(&mut out);
        }
        out
    }

    /// Grounds the substitution on `domain` with a valuation of its range
    /// (unmapped domain variables are read from `nu` directly).
    pub fn ground(&self, nu: &Valuation, domain: &BTreeSet<Var>) -> Option<Valuation> {
        let mut out = Valuation::new();
        for v in domain {
            let p = nu.eval(&self.image(v))?;
            if !out.bind(v.clone(), p) {
                return None;
            }
        }
        Some(out)
    }
}

impl FromIterator<(Var, Expr)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Expr)>>(iter: I) -> Substitution {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `$x -> a/$x ; $u -> @w`; the identity prints as `{}`.
impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{}");
        }
        for (i, (v, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{v} -> {e}")?;
        }
        Ok(())
    }
}

/// True iff the variables occurring more than once all occur on the same
/// side, and only there. The other side is then linear and shares no
/// variable with it.
pub fn is_one_sided_nonlinear(eq: &Equation) -> bool {
    let mut vars = eq.lhs.vars();
    vars.extend(eq.rhs.vars());
    let repeated: Vec<(usize, usize)> = vars
        .iter()
        .map(|v| (eq.lhs.occurrences(v), eq.rhs.occurrences(v)))
        .filter(|(l, r)| l + r > 1)
        .collect();
    repeated.iter().all(|&(_, r)| r == 0) || repeated.iter().all(|&(l, _)| l == 0)
}

/// Which search rule produced a child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleTag {
    Cancel,
    /// Pig-pug main rules on path variables and constants.
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    /// Two atomic variables.
    H,
    /// Atomic variable against a path variable.
    I,
    /// Path variable against an atomic variable.
    J,
    /// Two packed values, via a solution of the bracket contents.
    K,
    /// Packed value against a path variable.
    L,
    /// Path variable against a packed value.
    M,
    /// Atomic variable against a constant.
    AtomConst,
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleTag::Cancel => "cancel",
            RuleTag::A => "a",
            RuleTag::B => "b",
            RuleTag::C => "c",
            RuleTag::D => "d",
            RuleTag::E => "e",
            RuleTag::F => "f",
            RuleTag::G => "g",
            RuleTag::H => "h",
            RuleTag::I => "i",
            RuleTag::J => "j",
            RuleTag::K => "k",
            RuleTag::L => "l",
            RuleTag::M => "m",
            RuleTag::AtomConst => "atom-const",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Child {
    pub rule: RuleTag,
    pub subst: Substitution,
    pub equation: Equation,
}

#[derive(Clone, Debug)]
pub enum Step {
    Success,
    Failure,
    Children(Vec<Child>),
}

type Key = (Vec<Token>, Vec<Token>);

enum NodeState {
    InProgress,
    Done(Rc<Vec<Substitution>>),
}

#[derive(Clone, Debug)]
struct DagEdge {
    from: usize,
    to: usize,
    label: String,
}

/// Search state shared by all nodes of one [`solve`] call: memo table,
/// budget counters and the recorded search DAG.
pub struct Solver {
    budget: UnifyBudget,
    memo: HashMap<Key, NodeState>,
    nodes_expanded: usize,
    record: bool,
    node_ids: HashMap<Key, usize>,
    node_labels: Vec<(String, Option<bool>)>,
    edges: Vec<DagEdge>,
}

impl Solver {
    pub fn new(budget: UnifyBudget) -> Solver {
        Solver {
            budget,
            memo: HashMap::new(),
            nodes_expanded: 0,
            record: false,
            node_ids: HashMap::new(),
            node_labels: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Also records the search DAG for [`Solver::to_dot`].
    pub fn recording(budget: UnifyBudget) -> Solver {
        let mut s = Solver::new(budget);
        s.record = true;
        s
    }

    pub fn nodes_expanded(&self) -> usize {
        self.nodes_expanded
    }

    fn node_id(&mut self, key: &Key) -> usize {
        if let Some(&id) = self.node_ids.get(key) {
            return id;
        }
        let id = self.node_labels.len();
        let label = format!("{} = {}", Expr::new(key.0.clone()), Expr::new(key.1.clone()));
        self.node_labels.push((label, None));
        self.node_ids.insert(key.clone(), id);
        id
    }

    /// Graphviz rendering of the recorded search DAG.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph search {\n  node [shape=box];\n");
        for (i, (label, leaf)) in self.node_labels.iter().enumerate() {
            let style = match leaf {
                Some(true) => ", color=green",
                Some(false) => ", color=red",
                None => "",
            };
            let _ = writeln!(out, "  n{i} [label=\"{}\"{style}];", escape(label));
        }
        for e in &self.edges {
            let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, escape(&e.label));
        }
        out.push_str("}\n");
        out
    }

    /// One expansion of the equation `lhs = rhs` under the nonempty
    /// interpretation of path variables.
    pub fn step(&mut self, lhs: &[Token], rhs: &[Token], depth: usize) -> Result<Step, UnifyError> {
        let (t1, t2) = match (lhs.first(), rhs.first()) {
            (None, None) => return Ok(Step::Success),
            (None, Some(_)) | (Some(_), None) => return Ok(Step::Failure),
            (Some(a), Some(b)) => (a, b),
        };
        if t1 == t2 {
            return Ok(Step::Children(vec![Child {
                rule: RuleTag::Cancel,
                subst: Substitution::new(),
                equation: Equation::new(Expr::new(lhs[1..].to_vec()), Expr::new(rhs[1..].to_vec())),
            }]));
        }
        let mut options: Vec<(RuleTag, Substitution)> = Vec::new();
        let tok = |t: &Token| Expr::new(vec![t.clone()]);
        let grow = |head: &Token, v: &Var| Expr::new(vec![head.clone(), Token::Var(v.clone())]);
        match (t1, t2) {
            (Token::Const(_), Token::Const(_)) => return Ok(Step::Failure),
            (Token::Var(x), Token::Var(y)) if x.is_path() && y.is_path() => {
                options.push((RuleTag::A, Substitution::single(x.clone(), grow(t2, x))));
                options.push((RuleTag::B, Substitution::single(x.clone(), tok(t2))));
                options.push((RuleTag::C, Substitution::single(y.clone(), grow(t1, y))));
            }
            (Token::Var(x), Token::Const(_)) if x.is_path() => {
                options.push((RuleTag::D, Substitution::single(x.clone(), grow(t2, x))));
                options.push((RuleTag::E, Substitution::single(x.clone(), tok(t2))));
            }
            (Token::Const(_), Token::Var(y)) if y.is_path() => {
                options.push((RuleTag::F, Substitution::single(y.clone(), grow(t1, y))));
                options.push((RuleTag::G, Substitution::single(y.clone(), tok(t1))));
            }
            (Token::Var(x), Token::Var(_)) if x.is_atom() && t2.as_var().unwrap().is_atom() => {
                options.push((RuleTag::H, Substitution::single(x.clone(), tok(t2))));
            }
            (Token::Var(x), Token::Var(y)) if x.is_atom() => {
                options.push((RuleTag::I, Substitution::single(y.clone(), grow(t1, y))));
                options.push((RuleTag::I, Substitution::single(y.clone(), tok(t1))));
            }
            (Token::Var(x), Token::Var(y)) => {
                debug_assert!(x.is_path() && y.is_atom());
                options.push((RuleTag::J, Substitution::single(x.clone(), grow(t2, x))));
                options.push((RuleTag::J, Substitution::single(x.clone(), tok(t2))));
            }
            (Token::Var(x), Token::Const(_)) => {
                options.push((RuleTag::AtomConst, Substitution::single(x.clone(), tok(t2))));
            }
            (Token::Const(_), Token::Var(y)) => {
                debug_assert!(y.is_atom());
                options.push((RuleTag::AtomConst, Substitution::single(y.clone(), tok(t1))));
            }
            (Token::Packed(w1), Token::Packed(w3)) => {
                let inner = self.solve_node(w1.tokens(), w3.tokens(), depth + 1)?;
                for sigma in inner.iter() {
                    options.push((RuleTag::K, sigma.clone()));
                }
            }
            (Token::Packed(_), Token::Var(y)) if y.is_path() => {
                options.push((RuleTag::L, Substitution::single(y.clone(), grow(t1, y))));
                options.push((RuleTag::L, Substitution::single(y.clone(), tok(t1))));
            }
            (Token::Var(x), Token::Packed(_)) if x.is_path() => {
                options.push((RuleTag::M, Substitution::single(x.clone(), grow(t2, x))));
                options.push((RuleTag::M, Substitution::single(x.clone(), tok(t2))));
            }
            // Atomic variables and constants never equal a packed value.
            _ => return Ok(Step::Failure),
        }
        let lhs_e = Expr::new(lhs.to_vec());
        let rhs_e = Expr::new(rhs.to_vec());
        let children = options
            .into_iter()
            .map(|(rule, subst)| {
                let mut l = subst.apply(&lhs_e).into_tokens();
                let mut r = subst.apply(&rhs_e).into_tokens();
                if !l.is_empty() && !r.is_empty() && l[0] == r[0] {
                    l.remove(0);
                    r.remove(0);
                }
                Child {
                    rule,
                    subst,
                    equation: Equation::new(Expr::new(l), Expr::new(r)),
                }
            })
            .collect();
        Ok(Step::Children(children))
    }

    /// Complete set of nonempty-interpretation solutions of `lhs = rhs`,
    /// restricted to the variables of the equation.
    pub fn solve_node(
        &mut self,
        lhs: &[Token],
        rhs: &[Token],
        depth: usize,
    ) -> Result<Rc<Vec<Substitution>>, UnifyError> {
        let key: Key = (lhs.to_vec(), rhs.to_vec());
        match self.memo.get(&key) {
            Some(NodeState::Done(s)) => return Ok(s.clone()),
            Some(NodeState::InProgress) => return Err(UnifyError::BudgetExceeded(BudgetKind::Cycle)),
            None => {}
        }
        if depth > self.budget.max_depth {
            return Err(UnifyError::BudgetExceeded(BudgetKind::Depth));
        }
        self.nodes_expanded += 1;
        if self.nodes_expanded > self.budget.max_nodes {
            return Err(UnifyError::BudgetExceeded(BudgetKind::Nodes));
        }
        self.memo.insert(key.clone(), NodeState::InProgress);
        let id = if self.record { Some(self.node_id(&key)) } else { None };

        let step = self.step(lhs, rhs, depth)?;
        let mut solutions: BTreeSet<Substitution> = BTreeSet::new();
        match step {
            Step::Success => {
                solutions.insert(Substitution::new());
                if let Some(id) = id {
                    self.node_labels[id].1 = Some(true);
                }
            }
            Step::Failure => {
                if let Some(id) = id {
                    self.node_labels[id].1 = Some(false);
                }
            }
            Step::Children(children) => {
                let mut domain = Expr::new(lhs.to_vec()).vars();
                Expr::new(rhs.to_vec()).collect_vars(&mut domain);
                for c in children {
                    let sub = self.solve_node(c.equation.lhs.tokens(), c.equation.rhs.tokens(), depth + 1)?;
                    if let Some(id) = id {
                        let ckey = (c.equation.lhs.tokens().to_vec(), c.equation.rhs.tokens().to_vec());
                        let to = self.node_id(&ckey);
                        let label = if c.subst.is_empty() {
                            c.rule.to_string()
                        } else {
                            format!("{}: {}", c.rule, c.subst)
                        };
                        self.edges.push(DagEdge { from: id, to, label });
                    }
                    for tau in sub.iter() {
                        solutions.insert(tau.after(&c.subst, &domain));
                        if solutions.len() > self.budget.max_solutions {
                            return Err(UnifyError::BudgetExceeded(BudgetKind::Solutions));
                        }
                    }
                }
            }
        }
        let result = Rc::new(solutions.into_iter().collect::<Vec<_>>());
        self.memo.insert(key, NodeState::Done(result.clone()));
        Ok(result)
    }

    /// Complete set of solutions where every path variable denotes a
    /// nonempty path.
    pub fn solve_nonempty(&mut self, eq: &Equation) -> Result<Vec<Substitution>, UnifyError> {
        Ok(self.solve_node(eq.lhs.tokens(), eq.rhs.tokens(), 0)?.as_ref().clone())
    }

    /// Complete set of solutions over all valuations, obtained by solving
    /// every variant of `eq` with a subset of path variables set to ε.
    pub fn solve(&mut self, eq: &Equation) -> Result<Vec<Substitution>, UnifyError> {
        let path_vars: Vec<Var> = eq.vars().into_iter().filter(Var::is_path).collect();
        if path_vars.len() > 20 {
            return Err(UnifyError::BudgetExceeded(BudgetKind::Variables));
        }
        let mut all: BTreeSet<Substitution> = BTreeSet::new();
        for mask in 0u32..(1u32 << path_vars.len()) {
            let empties: BTreeSet<&Var> = path_vars
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| v)
                .collect();
            let erase = |v: &Var| empties.contains(v).then(Expr::empty);
            let reduced = Equation::new(eq.lhs.substitute(&erase), eq.rhs.substitute(&erase));
            for s in self.solve_nonempty(&reduced)? {
                let mut full = s;
                for v in &empties {
                    full.insert((*v).clone(), Expr::empty());
                }
                all.insert(full.normalized());
                if all.len() > self.budget.max_solutions {
                    return Err(UnifyError::BudgetExceeded(BudgetKind::Solutions));
                }
            }
        }
        Ok(all.into_iter().collect())
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Complete set of symbolic solutions of `eq` over all valuations, or
/// `BudgetExceeded` if the search did not finish within `budget`.
pub fn solve(eq: &Equation, budget: UnifyBudget) -> Result<Vec<Substitution>, UnifyError> {
    Solver::new(budget).solve(eq)
}

/// Like [`solve`], but path variables range over nonempty paths only.
pub fn solve_nonempty(eq: &Equation, budget: UnifyBudget) -> Result<Vec<Substitution>, UnifyError> {
    Solver::new(budget).solve_nonempty(eq)
}

/// Replaces every variable of `e` by a distinct marker atom, so that
/// syntactic matching against `e` can reuse the ground matcher.
fn freeze(e: &Expr) -> Path {
    let frozen = e.substitute(&|v: &Var| {
        let sigil = if v.is_atom() { '@' } else { '$' };
        Some(Expr::constant(&format!("\u{1}{sigil}{}", v.name)))
    });
    frozen.to_path().expect("frozen expressions are ground")
}

fn is_frozen_path_var(p: &Path) -> bool {
    matches!(p.as_single(), Some(Value::Atom(a)) if a.as_str().starts_with("\u{1}$"))
}

/// True iff `specific` is an instance of `general` on `domain`: some
/// substitution σ has σ(general(v)) = specific(v) for every `v`.
pub fn is_instance_of(specific: &Substitution, general: &Substitution, domain: &[Var]) -> bool {
    let targets: Vec<Path> = domain.iter().map(|v| freeze(&specific.image(v))).collect();
    let patterns: Vec<Expr> = domain.iter().map(|v| general.image(v)).collect();
    fn go(pats: &[Expr], tgts: &[Path], val: &mut Valuation, found: &mut bool) {
        if *found {
            return;
        }
        let Some((p, rest)) = pats.split_first() else {
            // Atom variables may not stand for a variable ranging over paths.
            *found = val.iter().all(|(v, q)| !v.is_atom() || !is_frozen_path_var(q));
            return;
        };
        match_extend(p, &tgts[0], val, &mut |val: &mut Valuation| go(rest, &tgts[1..], val, found));
    }
    let mut found = false;
    go(&patterns, &targets, &mut Valuation::new(), &mut found);
    found
}

/// Removes solutions that are instances of other solutions on `domain`;
/// of two mutual instances the first is kept. Every dropped solution
/// denotes a subset of the valuations some kept one denotes.
pub fn reduce_subsumed(sols: Vec<Substitution>, domain: &BTreeSet<Var>) -> Vec<Substitution> {
    let domain: Vec<Var> = domain.iter().cloned().collect();
    let mut kept: Vec<Substitution> = Vec::new();
    for s in sols {
        if kept.iter().any(|k| is_instance_of(&s, k, &domain)) {
            continue;
        }
        kept.retain(|k| !is_instance_of(k, &s, &domain));
        kept.push(s);
    }
    kept
}

/// Every valuation of the variables of `e` mapping `e` to `p`.
pub fn ground_match(e: &Expr, p: &Path) -> Vec<Valuation> {
    let mut out = BTreeSet::new();
    let mut v = Valuation::new();
    match_extend(e, p, &mut v, &mut |v| {
        out.insert(v.clone());
    });
    out.into_iter().collect()
}

/// Enumerates extensions of `val` under which `e` evaluates to `p`, calling
/// `k` for each. `val` is restored before returning.
pub fn match_extend(e: &Expr, p: &Path, val: &mut Valuation, k: &mut dyn FnMut(&mut Valuation)) {
    match_tokens(e.tokens(), p.values(), val, k);
}

/// Lower bound on the length of the path a token sequence can denote.
fn min_len(tokens: &[Token], val: &Valuation) -> usize {
    tokens
        .iter()
        .map(|t| match t {
            Token::Var(v) if v.is_path() => val.get(v).map_or(0, Path::len),
            _ => 1,
        })
        .sum()
}

fn match_tokens(tokens: &[Token], values: &[Value], val: &mut Valuation, k: &mut dyn FnMut(&mut Valuation)) {
    let Some((first, rest)) = tokens.split_first() else {
        if values.is_empty() {
            k(val);
        }
        return;
    };
    match first {
        Token::Const(a) => {
            if let Some(Value::Atom(b)) = values.first() {
                if a == b {
                    match_tokens(rest, &values[1..], val, k);
                }
            }
        }
        Token::Var(v) => {
            if let Some(bound) = val.get(v) {
                let n = bound.len();
                if values.len() >= n && bound.values() == &values[..n] {
                    match_tokens(rest, &values[n..], val, k);
                }
                return;
            }
            if v.is_atom() {
                if let Some(x @ Value::Atom(_)) = values.first() {
                    val.bind(v.clone(), Path::from(x.clone()));
                    match_tokens(rest, &values[1..], val, k);
                    val.remove(v);
                }
                return;
            }
            let need = min_len(rest, val);
            if need > values.len() {
                return;
            }
            if rest.is_empty() {
                val.bind(v.clone(), Path::new(values.to_vec()));
                k(val);
                val.remove(v);
                return;
            }
            for n in 0..=(values.len() - need) {
                val.bind(v.clone(), Path::new(values[..n].to_vec()));
                match_tokens(rest, &values[n..], val, k);
                val.remove(v);
            }
        }
        Token::Packed(inner) => {
            if let Some(Value::Packed(q)) = values.first() {
                let tail = &values[1..];
                match_tokens(inner.tokens(), q.values(), val, &mut |val: &mut Valuation| {
                    match_tokens(rest, tail, val, k)
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_equation, parse_expr, parse_path};

    fn eq(s: &str) -> Equation {
        parse_equation(s).unwrap()
    }

    fn strs(sols: &[Substitution]) -> Vec<String> {
        sols.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_sided_nonlinear() {
        assert!(!is_one_sided_nonlinear(&eq("$x/a = a/$x")));
        assert!(is_one_sided_nonlinear(&eq("$x/<@y/$z>/@w = $u/$v/$u")));
        assert!(is_one_sided_nonlinear(&eq("a = b")));
        assert!(!is_one_sided_nonlinear(&eq("b/$x/a/$x = $z/$z")));
        assert!(is_one_sided_nonlinear(&eq("$x/$y = $z")));
    }

    #[test]
    fn step_rules() {
        let mut s = Solver::new(UnifyBudget::default());
        let e = eq("a/$y = a/b");
        match s.step(e.lhs.tokens(), e.rhs.tokens(), 0).unwrap() {
            Step::Children(c) => {
                assert_eq!(c.len(), 1);
                assert_eq!(c[0].rule, RuleTag::Cancel);
                assert_eq!(c[0].equation.to_string(), "$y = b");
            }
            other => panic!("{other:?}"),
        }
        let e = eq("$x/$w = a/$v");
        match s.step(e.lhs.tokens(), e.rhs.tokens(), 0).unwrap() {
            Step::Children(c) => {
                let got: Vec<String> = c.iter().map(|c| c.subst.to_string()).collect();
                assert_eq!(got, ["$x -> a/$x", "$x -> a"]);
            }
            other => panic!("{other:?}"),
        }
        let e = eq("@x/$w = <$v>/$z");
        assert!(matches!(s.step(e.lhs.tokens(), e.rhs.tokens(), 0).unwrap(), Step::Failure));
    }

    #[test]
    fn worked_example_nonempty_solutions() {
        let sols = solve_nonempty(&eq("$x/<@y/$z>/@w = $u/$v/$u"), UnifyBudget::default()).unwrap();
        let mut got = strs(&sols);
        got.sort();
        let mut want = vec![
            "$u -> @w ; $v -> <@y/$z> ; $x -> @w",
            "$u -> @w ; $v -> $x/<@y/$z> ; $x -> @w/$x",
            "$u -> <@y/$z>/@w ; $x -> <@y/$z>/@w/$v",
            "$u -> $x/<@y/$z>/@w ; $x -> $x/<@y/$z>/@w/$v/$x",
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn nonterminating_equation_exceeds_budget() {
        let r = solve(&eq("$x/a = a/$x"), UnifyBudget { max_nodes: 50, ..Default::default() });
        assert!(matches!(r, Err(UnifyError::BudgetExceeded(_))));
    }

    #[test]
    fn trivial_equation() {
        let sols = solve(&eq("a = a"), UnifyBudget::default()).unwrap();
        assert_eq!(strs(&sols), ["{}"]);
        assert!(solve(&eq("a = b"), UnifyBudget::default()).unwrap().is_empty());
    }

    #[test]
    fn empty_closure_adds_epsilon_cases() {
        let sols = solve(&eq("$x/$y = a"), UnifyBudget::default()).unwrap();
        let mut got = strs(&sols);
        got.sort();
        assert_eq!(got, ["$x -> ! ; $y -> a", "$x -> a ; $y -> !"]);
    }

    #[test]
    fn ground_match_cases() {
        let m = ground_match(&parse_expr("$x/$y").unwrap(), &parse_path("a/b").unwrap());
        let got: Vec<String> = m.iter().map(|v| format!("{v:?}")).collect();
        assert_eq!(
            got,
            ["{$x -> !, $y -> a/b}", "{$x -> a, $y -> b}", "{$x -> a/b, $y -> !}"]
        );
        assert!(ground_match(&parse_expr("@x/$y").unwrap(), &parse_path("<a>/b").unwrap()).is_empty());
        let m = ground_match(&parse_expr("$x/a/$x").unwrap(), &parse_path("a/a/a").unwrap());
        assert_eq!(m.len(), 1);
        assert_eq!(format!("{:?}", m[0]), "{$x -> a}");
    }

    #[test]
    fn ground_match_packed() {
        let m = ground_match(&parse_expr("$u/<$s>/$v").unwrap(), &parse_path("a/<b/c>").unwrap());
        assert_eq!(m.len(), 1);
        assert_eq!(format!("{:?}", m[0]), "{$s -> b/c, $u -> a, $v -> !}");
    }

    #[test]
    fn dot_dump_mentions_nodes() {
        let mut s = Solver::recording(UnifyBudget::default());
        s.solve_nonempty(&eq("$x/a = a/$y")).unwrap();
        let dot = s.to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("$x/a = a/$y"));
    }

    #[test]
    fn subsumed_solutions_are_dropped() {
        let sols = solve(&eq("$x/<$y> = $u/<$v>"), UnifyBudget::default()).unwrap();
        let domain = eq("$x/<$y> = $u/<$v>").vars();
        let reduced = reduce_subsumed(sols.clone(), &domain);
        assert_eq!(reduced.len(), 1, "{sols:?}");
        let general: Substitution = [(Var::path("u"), parse_expr("$x").unwrap())].into_iter().collect();
        let specific: Substitution = [(Var::path("u"), parse_expr("a").unwrap()), (Var::path("x"), parse_expr("a").unwrap())]
            .into_iter()
            .collect();
        let dom = [Var::path("u"), Var::path("x")];
        assert!(is_instance_of(&specific, &general, &dom));
        assert!(!is_instance_of(&general, &specific, &dom));
        let atomic: Substitution = [(Var::atom("w"), parse_expr("@z").unwrap())].into_iter().collect();
        let pathy: Substitution = [(Var::atom("w"), parse_expr("$z").unwrap())].into_iter().collect();
        assert!(!is_instance_of(&pathy, &atomic, &[Var::atom("w")]));
    }
}
