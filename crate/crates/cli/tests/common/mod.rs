//! Shared fixtures for the CLI and acceptance tests: the corpus manifest and
//! independent oracles (grounding enumeration, least models by brute force,
//! graph search, automaton simulation).
//!
//! Nothing here calls into the engine's matcher or the unifier.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use seqlog::unify::Substitution;
use seqlog::{Equation, Expr, Instance, Literal, Path, Program, Token, Value, Var};

pub fn corpus(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(file)
}

pub fn read_corpus(file: &str) -> String {
    std::fs::read_to_string(corpus(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

pub fn load(file: &str) -> Program {
    let opts = seqlog::syntax::ParseOptions { allow_reserved_names: true };
    seqlog::syntax::parse_program_with(&read_corpus(file), opts).unwrap_or_else(|e| panic!("{file}: {e}"))
}

/// Transformations a corpus program is expected to accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elim {
    Arity,
    Equations,
    Packing,
    Intermediates,
    Normalize,
}

pub struct Entry {
    pub name: &'static str,
    pub data: &'static str,
    /// Relation the golden file and the equivalence checks look at; `None`
    /// means every derived relation is printed.
    pub golden_rel: Option<&'static str>,
    pub output: &'static str,
    pub elims: &'static [Elim],
    pub nonrecursive: bool,
}

use Elim::*;

pub const MANIFEST: &[Entry] = &[
    Entry { name: "onlyas", data: "onlyas.sdb", golden_rel: Some("S"), output: "S", elims: &[Arity, Equations, Packing, Intermediates], nonrecursive: true },
    Entry { name: "onlyas_air", data: "onlyas.sdb", golden_rel: Some("S"), output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "reversal", data: "reversal.sdb", golden_rel: Some("S"), output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "reversal_unary", data: "reversal.sdb", golden_rel: Some("S"), output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "neq", data: "neq.sdb", golden_rel: Some("S"), output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "neq_rewritten", data: "neq.sdb", golden_rel: Some("S"), output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "cool", data: "cool.sdb", golden_rel: None, output: "A", elims: &[Arity, Equations, Packing], nonrecursive: true },
    Entry { name: "squaring", data: "squaring.sdb", golden_rel: None, output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "reachability", data: "reachability.sdb", golden_rel: None, output: "S", elims: &[Arity, Equations], nonrecursive: false },
    Entry { name: "blacknodes", data: "blacknodes.sdb", golden_rel: None, output: "S", elims: &[Arity, Equations, Packing, Normalize], nonrecursive: true },
    Entry { name: "nfa", data: "nfa.sdb", golden_rel: None, output: "A", elims: &[Equations], nonrecursive: false },
    Entry { name: "half_pure", data: "half_pure.sdb", golden_rel: None, output: "S", elims: &[Arity, Equations, Packing, Intermediates], nonrecursive: true },
    Entry { name: "normal_form_example", data: "normal_form_example.sdb", golden_rel: None, output: "T", elims: &[Equations, Packing, Normalize], nonrecursive: true },
];

// ---------------------------------------------------------------------------
// Grounding

/// Finite set of paths: every value from `values`, length at most `max_len`.
#[derive(Clone, Debug)]
pub struct Domain {
    pub values: Vec<Value>,
    pub max_len: usize,
}

impl Domain {
    pub fn contains(&self, p: &Path) -> bool {
        p.len() <= self.max_len && p.values().iter().all(|v| self.values.contains(v))
    }

    pub fn paths(&self) -> Vec<Path> {
        let mut out = vec![Path::empty()];
        let mut layer = vec![Path::empty()];
        for _ in 0..self.max_len {
            let mut next = Vec::new();
            for p in &layer {
                for v in &self.values {
                    let mut q = p.clone();
                    q.push(v.clone());
                    next.push(q);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    pub fn atoms(&self) -> Vec<Path> {
        self.values.iter().filter(|v| matches!(v, Value::Atom(_))).map(|v| Path::new(vec![v.clone()])).collect()
    }

    fn candidates(&self, v: &Var) -> Vec<Path> {
        if v.is_atom() {
            self.atoms()
        } else {
            self.paths()
        }
    }
}

pub type Ground = BTreeMap<Var, Path>;

/// Value of `e` under `nu`; every variable of `e` must be bound.
pub fn eval_expr(e: &Expr, nu: &Ground) -> Path {
    let mut out = Vec::new();
    for t in e.tokens() {
        match t {
            Token::Const(a) => out.push(Value::Atom(*a)),
            Token::Var(v) => out.extend(nu[v].values().iter().cloned()),
            Token::Packed(inner) => out.push(Value::packed(eval_expr(inner, nu))),
        }
    }
    Path::new(out)
}

/// All extensions of `nu` under which `tokens` evaluates to exactly `target`.
/// Newly bound path variables are restricted by `fits`.
pub fn match_tokens(tokens: &[Token], target: &[Value], nu: &Ground, fits: &dyn Fn(&Path) -> bool, out: &mut Vec<Ground>) {
    let Some((first, rest)) = tokens.split_first() else {
        if target.is_empty() {
            out.push(nu.clone());
        }
        return;
    };
    match first {
        Token::Const(a) => {
            if target.first() == Some(&Value::Atom(*a)) {
                match_tokens(rest, &target[1..], nu, fits, out);
            }
        }
        Token::Var(v) => {
            if let Some(p) = nu.get(v) {
                let n = p.len();
                if target.len() >= n && p.values() == &target[..n] {
                    match_tokens(rest, &target[n..], nu, fits, out);
                }
            } else if v.is_atom() {
                if let Some(Value::Atom(_)) = target.first() {
                    let p = Path::new(vec![target[0].clone()]);
                    if fits(&p) {
                        let mut nu2 = nu.clone();
                        nu2.insert(v.clone(), p);
                        match_tokens(rest, &target[1..], &nu2, fits, out);
                    }
                }
            } else {
                for n in 0..=target.len() {
                    let p = Path::new(target[..n].to_vec());
                    if !fits(&p) {
                        continue;
                    }
                    let mut nu2 = nu.clone();
                    nu2.insert(v.clone(), p);
                    match_tokens(rest, &target[n..], &nu2, fits, out);
                }
            }
        }
        Token::Packed(inner) => {
            if let Some(Value::Packed(p)) = target.first() {
                let mut inside = Vec::new();
                match_tokens(inner.tokens(), p.values(), nu, fits, &mut inside);
                for nu2 in inside {
                    match_tokens(rest, &target[1..], &nu2, fits, out);
                }
            }
        }
    }
}

fn assignments(vars: &[Var], d: &Domain) -> Vec<Ground> {
    let mut out = vec![Ground::new()];
    for v in vars {
        let cands = d.candidates(v);
        let mut next = Vec::with_capacity(out.len() * cands.len());
        for nu in &out {
            for c in &cands {
                let mut nu2 = nu.clone();
                nu2.insert(v.clone(), c.clone());
                next.push(nu2);
            }
        }
        out = next;
    }
    out
}

/// Every valuation of the equation's variables over `d` that satisfies it.
/// The side with fewer variables is enumerated, the other side is matched.
pub fn equation_solutions(eq: &Equation, d: &Domain) -> BTreeSet<Ground> {
    let (lv, rv) = (eq.lhs.vars(), eq.rhs.vars());
    let (enum_side, match_side, enum_vars) =
        if lv.len() <= rv.len() { (&eq.lhs, &eq.rhs, lv) } else { (&eq.rhs, &eq.lhs, rv) };
    let vars: Vec<Var> = enum_vars.into_iter().collect();
    let fits = |p: &Path| d.contains(p);
    let mut out = BTreeSet::new();
    for nu in assignments(&vars, d) {
        let target = eval_expr(enum_side, &nu);
        let mut found = Vec::new();
        match_tokens(match_side.tokens(), target.values(), &nu, &fits, &mut found);
        out.extend(found);
    }
    out
}

/// Whether `sigma` maps both sides to the same expression, so that every
/// grounding satisfies the equation.
pub fn is_unifier(sigma: &Substitution, eq: &Equation) -> bool {
    sigma.apply(&eq.lhs) == sigma.apply(&eq.rhs)
}

/// Whether `nu` is a grounding of `sigma`: some valuation of the range
/// variables maps every image to the value `nu` gives its variable.
pub fn covers(sigma: &Substitution, nu: &Ground) -> bool {
    let vars: Vec<&Var> = nu.keys().collect();
    let mut tokens = Vec::new();
    let mut target = Vec::new();
    for v in &vars {
        tokens.push(Token::Packed(sigma.image(v)));
        target.push(Value::packed(nu[*v].clone()));
    }
    let mut found = Vec::new();
    match_tokens(&tokens, &target, &Ground::new(), &|_| true, &mut found);
    !found.is_empty()
}

// ---------------------------------------------------------------------------
// Least models

fn substrings(p: &Path, out: &mut BTreeSet<Path>) {
    let n = p.len();
    for i in 0..=n {
        for j in i..=n {
            out.insert(p.slice(i, j));
        }
    }
}

fn fact_set(i: &Instance) -> BTreeSet<(String, Vec<Path>)> {
    i.facts().into_iter().map(|(n, t)| (n.to_string(), t.clone())).collect()
}

/// Least model of a single-stratum program whose negations mention input
/// relations only, by iterating full groundings over the substrings of the
/// facts derived so far. `None` once a derived path exceeds `max_len`.
pub fn least_model(p: &Program, i: &Instance, max_len: usize) -> Option<BTreeSet<(String, Vec<Path>)>> {
    let input = fact_set(i);
    let mut model = input.clone();
    loop {
        let mut universe = BTreeSet::new();
        for (_, t) in &model {
            for path in t {
                substrings(path, &mut universe);
            }
        }
        let paths: Vec<Path> = universe.iter().cloned().collect();
        let atoms: Vec<Path> = universe.iter().filter(|p| matches!(p.as_single(), Some(Value::Atom(_)))).cloned().collect();
        let mut next = model.clone();
        for r in p.rules() {
            let vars: Vec<Var> = r.vars().into_iter().collect();
            let mut stack = vec![Ground::new()];
            for v in &vars {
                let cands = if v.is_atom() { &atoms } else { &paths };
                stack = stack
                    .into_iter()
                    .flat_map(|nu| {
                        cands.iter().map(move |c| {
                            let mut nu2 = nu.clone();
                            nu2.insert(v.clone(), c.clone());
                            nu2
                        })
                    })
                    .collect();
            }
            for nu in stack {
                let holds = r.body.iter().all(|l| match l {
                    Literal::Pos(q) => model.contains(&(q.relation.clone(), q.args.iter().map(|e| eval_expr(e, &nu)).collect())),
                    Literal::Neg(q) => !input.contains(&(q.relation.clone(), q.args.iter().map(|e| eval_expr(e, &nu)).collect())),
                    Literal::Eq(eq) => eval_expr(&eq.lhs, &nu) == eval_expr(&eq.rhs, &nu),
                    Literal::Neq(eq) => eval_expr(&eq.lhs, &nu) != eval_expr(&eq.rhs, &nu),
                });
                if holds {
                    let t: Vec<Path> = r.head.args.iter().map(|e| eval_expr(e, &nu)).collect();
                    if t.iter().any(|x| x.len() > max_len) {
                        return None;
                    }
                    next.insert((r.head.relation.clone(), t));
                }
            }
        }
        if next == model {
            return Some(model);
        }
        model = next;
    }
}

pub fn instance_facts(i: &Instance) -> BTreeSet<(String, Vec<Path>)> {
    fact_set(i)
}

// ---------------------------------------------------------------------------
// Graphs and automata

pub fn reachable(edges: &[(usize, usize)], from: usize, to: usize) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for &(a, b) in edges {
        if a == from {
            queue.push_back(b);
        }
    }
    while let Some(n) = queue.pop_front() {
        if n == to {
            return true;
        }
        if !seen.insert(n) {
            continue;
        }
        for &(a, b) in edges {
            if a == n {
                queue.push_back(b);
            }
        }
    }
    false
}

pub struct Nfa {
    pub initial: BTreeSet<usize>,
    pub delta: BTreeSet<(usize, char, usize)>,
    pub finals: BTreeSet<usize>,
}

impl Nfa {
    pub fn accepts(&self, word: &str) -> bool {
        let mut cur = self.initial.clone();
        for c in word.chars() {
            cur = self.delta.iter().filter(|(q, a, _)| cur.contains(q) && *a == c).map(|(_, _, r)| *r).collect();
        }
        cur.iter().any(|q| self.finals.contains(q))
    }
}
