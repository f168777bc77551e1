//! Program AST: predicates, equations, literals, rules and strata.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::expr::{Expr, Var};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub relation: String,
    pub args: Vec<Expr>,
}

impl Predicate {
    pub fn new(relation: impl Into<String>, args: Vec<Expr>) -> Predicate {
        Predicate {
            relation: relation.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn substitute(&self, f: &impl Fn(&Var) -> Option<Expr>) -> Predicate {
        Predicate {
            relation: self.relation.clone(),
            args: self.args.iter().map(|a| a.substitute(f)).collect(),
        }
    }

    pub fn has_packing(&self) -> bool {
        self.args.iter().any(|a| !a.is_packing_free())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Equation {
    pub fn new(lhs: Expr, rhs: Expr) -> Equation {
        Equation { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.lhs.vars();
        self.rhs.collect_vars(&mut out);
        out
    }

    pub fn substitute(&self, f: &impl Fn(&Var) -> Option<Expr>) -> Equation {
        Equation::new(self.lhs.substitute(f), self.rhs.substitute(f))
    }

    pub fn swapped(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Predicate),
    Neg(Predicate),
    Eq(Equation),
    Neq(Equation),
}

impl Literal {
    pub fn is_positive(&self) -> bool {
        matches!(self, Literal::Pos(_) | Literal::Eq(_))
    }

    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            Literal::Pos(p) | Literal::Neg(p) => Some(p),
            _ => None,
        }
    }

    pub fn equation(&self) -> Option<&Equation> {
        match self {
            Literal::Eq(e) | Literal::Neq(e) => Some(e),
            _ => None,
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Literal::Pos(p) | Literal::Neg(p) => p.args.iter().collect(),
            Literal::Eq(e) | Literal::Neq(e) => vec![&e.lhs, &e.rhs],
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for e in self.exprs() {
            e.collect_vars(out);
        }
    }

    pub fn substitute(&self, f: &impl Fn(&Var) -> Option<Expr>) -> Literal {
        match self {
            Literal::Pos(p) => Literal::Pos(p.substitute(f)),
            Literal::Neg(p) => Literal::Neg(p.substitute(f)),
            Literal::Eq(e) => Literal::Eq(e.substitute(f)),
            Literal::Neq(e) => Literal::Neq(e.substitute(f)),
        }
    }
}

/// A rule `head :- body`. The body keeps its written order (the evaluator
/// joins left to right) but equality treats it as a set.
#[derive(Clone)]
pub struct Rule {
    pub head: Predicate,
    pub body: Vec<Literal>,
}

impl Rule {
    /// Builds a rule, removing duplicate body literals.
    pub fn new(head: Predicate, body: Vec<Literal>) -> Rule {
        let mut seen = BTreeSet::new();
        let body = body.into_iter().filter(|l| seen.insert(l.clone())).collect();
        Rule { head, body }
    }

    pub fn fact(head: Predicate) -> Rule {
        Rule {
            head,
            body: Vec::new(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.head.vars();
        for l in &self.body {
            l.collect_vars(&mut out);
        }
        out
    }

    /// Variables in order of first occurrence, body first, then head.
    pub fn vars_in_order(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for l in &self.body {
            for e in l.exprs() {
                e.vars_in_order(&mut out);
            }
        }
        for a in &self.head.args {
            a.vars_in_order(&mut out);
        }
        out
    }

    pub fn substitute(&self, f: &impl Fn(&Var) -> Option<Expr>) -> Rule {
        Rule::new(
            self.head.substitute(f),
            self.body.iter().map(|l| l.substitute(f)).collect(),
        )
    }

    pub fn positive_predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.body.iter().filter_map(|l| match l {
            Literal::Pos(p) => Some(p),
            _ => None,
        })
    }

    pub fn negative_predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.body.iter().filter_map(|l| match l {
            Literal::Neg(p) => Some(p),
            _ => None,
        })
    }

    pub fn equations(&self) -> impl Iterator<Item = &Equation> {
        self.body.iter().filter_map(|l| match l {
            Literal::Eq(e) => Some(e),
            _ => None,
        })
    }

    pub fn nonequations(&self) -> impl Iterator<Item = &Equation> {
        self.body.iter().filter_map(|l| match l {
            Literal::Neq(e) => Some(e),
            _ => None,
        })
    }

    fn body_set(&self) -> BTreeSet<&Literal> {
        self.body.iter().collect()
    }
}

impl PartialEq for Rule {
    fn eq(&self, other: &Rule) -> bool {
        self.head == other.head && self.body_set() == other.body_set()
    }
}

impl Eq for Rule {}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A program: a nonempty sequence of strata, each a set of rules.
#[derive(Clone)]
pub struct Program {
    pub strata: Vec<Vec<Rule>>,
}

impl Default for Program {
    fn default() -> Program {
        Program {
            strata: vec![Vec::new()],
        }
    }
}

impl Program {
    pub fn new(strata: Vec<Vec<Rule>>) -> Program {
        if strata.is_empty() {
            return Program::default();
        }
        Program { strata }
    }

    pub fn single(rules: Vec<Rule>) -> Program {
        Program {
            strata: vec![rules],
        }
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.strata.iter().flatten()
    }

    pub fn rule_count(&self) -> usize {
        self.strata.iter().map(Vec::len).sum()
    }

    /// Relation names used in some head.
    pub fn idb_names(&self) -> BTreeSet<String> {
        self.rules().map(|r| r.head.relation.clone()).collect()
    }

    /// Relation names used in bodies but never in a head.
    pub fn edb_names(&self) -> BTreeSet<String> {
        let idb = self.idb_names();
        self.rules()
            .flat_map(|r| r.body.iter().filter_map(Literal::predicate))
            .map(|p| p.relation.clone())
            .filter(|n| !idb.contains(n))
            .collect()
    }

    pub fn relation_names(&self) -> BTreeSet<String> {
        let mut out = self.idb_names();
        out.extend(self.edb_names());
        out
    }

    /// Arity of every relation name, first use wins.
    pub fn arities(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in self.rules() {
            out.entry(r.head.relation.clone()).or_insert(r.head.arity());
            for p in r.body.iter().filter_map(Literal::predicate) {
                out.entry(p.relation.clone()).or_insert(p.arity());
            }
        }
        out
    }

    /// Index of the stratum defining each IDB relation (the first one, if
    /// a relation is defined in several strata).
    pub fn defining_stratum(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for (i, s) in self.strata.iter().enumerate() {
            for r in s {
                out.entry(r.head.relation.clone()).or_insert(i);
            }
        }
        out
    }

    pub fn rules_for<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a Rule> {
        self.rules().filter(move |r| r.head.relation == relation)
    }
}

fn rule_multiset(rules: &[Rule]) -> Vec<String> {
    let mut v: Vec<String> = rules.iter().map(canonical_rule).collect();
    v.sort();
    v.dedup();
    v
}

/// A rule printed with its body sorted, used as a set-equality key.
fn canonical_rule(r: &Rule) -> String {
    let mut body: Vec<&Literal> = r.body.iter().collect();
    body.sort();
    body.dedup();
    let sorted = Rule {
        head: r.head.clone(),
        body: body.into_iter().cloned().collect(),
    };
    sorted.to_string()
}

impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        self.strata.len() == other.strata.len()
            && self
                .strata
                .iter()
                .zip(&other.strata)
                .all(|(a, b)| rule_multiset(a) == rule_multiset(b))
    }
}

impl Eq for Program {}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_program(self))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.relation)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(p) => write!(f, "{p}"),
            Literal::Neg(p) => write!(f, "not {p}"),
            Literal::Eq(e) => write!(f, "{} = {}", e.lhs, e.rhs),
            Literal::Neq(e) => write!(f, "{} != {}", e.lhs, e.rhs),
        }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_str(".")
    }
}
