//! Static analysis: safety, stratification, dependency graph, features,
//! fragment subsumption and variable purity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use petgraph::algo::{is_cyclic_directed, tarjan_scc};
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::expr::Var;
use crate::program::{Equation, Literal, Program, Rule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("unsafe rule `{rule}`: variables {vars} are not limited")]
    Unsafe { rule: String, vars: String },
    #[error("not stratified: {relation} is negated in stratum {stratum} but defined in stratum {defined_in}")]
    NotStratified {
        relation: String,
        stratum: usize,
        defined_in: usize,
    },
}

/// The least set of variables closed under: variables of positive predicates
/// are limited; if every variable of one side of a positive equation is
/// limited, so is every variable of the other side.
pub fn limited_vars(r: &Rule) -> BTreeSet<Var> {
    let mut seed = BTreeSet::new();
    for p in r.positive_predicates() {
        p.collect_vars(&mut seed);
    }
    let eqs: Vec<&Equation> = r.equations().collect();
    equation_closure(seed, &eqs, |_| true)
}

/// Closes `set` under propagation through the given equations. A side may
/// propagate only if `side_ok` accepts it.
fn equation_closure(
    mut set: BTreeSet<Var>,
    eqs: &[&Equation],
    side_ok: impl Fn(&crate::expr::Expr) -> bool,
) -> BTreeSet<Var> {
    loop {
        let before = set.len();
        for eq in eqs {
            for (from, to) in [(&eq.lhs, &eq.rhs), (&eq.rhs, &eq.lhs)] {
                if side_ok(from) && from.vars().iter().all(|v| set.contains(v)) {
                    to.collect_vars(&mut set);
                }
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

pub fn unlimited_vars(r: &Rule) -> BTreeSet<Var> {
    let limited = limited_vars(r);
    r.vars().into_iter().filter(|v| !limited.contains(v)).collect()
}

pub fn is_safe_rule(r: &Rule) -> bool {
    unlimited_vars(r).is_empty()
}

/// Reports the first rule with an unlimited variable.
pub fn check_safety(p: &Program) -> Result<(), AnalysisError> {
    for r in p.rules() {
        let bad = unlimited_vars(r);
        if !bad.is_empty() {
            let vars: Vec<String> = bad.iter().map(|v| v.to_string()).collect();
            return Err(AnalysisError::Unsafe {
                rule: r.to_string(),
                vars: vars.join(", "),
            });
        }
    }
    Ok(())
}

/// A relation negated in stratum k may not occur in a head of stratum k or
/// any later stratum.
pub fn check_stratification(p: &Program) -> Result<(), AnalysisError> {
    let mut last_def: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, s) in p.strata.iter().enumerate() {
        for r in s {
            last_def.insert(&r.head.relation, i);
        }
    }
    for (k, s) in p.strata.iter().enumerate() {
        for r in s {
            for n in r.negative_predicates() {
                if let Some(&d) = last_def.get(n.relation.as_str()) {
                    if d >= k {
                        return Err(AnalysisError::NotStratified {
                            relation: n.relation.clone(),
                            stratum: k,
                            defined_in: d,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn check_program(p: &Program) -> Result<(), AnalysisError> {
    check_safety(p)?;
    check_stratification(p)
}

/// Graph over IDB names with an edge R1 → R2 when R2 occurs (positively or
/// negatively) in the body of a rule with head R1.
#[derive(Clone, Debug)]
pub struct DependencyGraph {
    pub graph: DiGraph<String, ()>,
    index: BTreeMap<String, NodeIndex>,
}

impl DependencyGraph {
    pub fn new(p: &Program) -> DependencyGraph {
        let mut graph = DiGraph::new();
        let mut index = BTreeMap::new();
        for n in p.idb_names() {
            let i = graph.add_node(n.clone());
            index.insert(n, i);
        }
        let mut edges = BTreeSet::new();
        for r in p.rules() {
            let h = index[&r.head.relation];
            for q in r.body.iter().filter_map(Literal::predicate) {
                if let Some(&b) = index.get(&q.relation) {
                    edges.insert((h, b));
                }
            }
        }
        for (a, b) in edges {
            graph.add_edge(a, b, ());
        }
        DependencyGraph { graph, index }
    }

    pub fn has_cycle(&self) -> bool {
        is_cyclic_directed(&self.graph)
    }

    pub fn depends_on(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.graph.contains_edge(a, b),
            _ => false,
        }
    }

    /// IDB names that lie on a cycle.
    pub fn recursive_relations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for scc in tarjan_scc(&self.graph) {
            let cyclic = scc.len() > 1 || self.graph.contains_edge(scc[0], scc[0]);
            if cyclic {
                out.extend(scc.iter().map(|&i| self.graph[i].clone()));
            }
        }
        out
    }

    /// IDB names ordered so that every relation comes after the relations
    /// it depends on. Only meaningful for acyclic graphs; cyclic components
    /// are kept together.
    pub fn dependency_order(&self) -> Vec<String> {
        // tarjan_scc returns components in reverse topological order of the
        // edge direction, i.e. dependencies first.
        tarjan_scc(&self.graph)
            .into_iter()
            .flat_map(|scc| {
                let mut names: Vec<String> = scc.iter().map(|&i| self.graph[i].clone()).collect();
                names.sort();
                names
            })
            .collect()
    }
}

pub fn is_recursive(p: &Program) -> bool {
    DependencyGraph::new(p).has_cycle()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    /// Arity: some predicate of arity above one.
    A,
    /// Equations, positive or negated.
    E,
    /// Intermediate predicates: at least two IDB relation names.
    I,
    /// Negation: some negated predicate or nonequality.
    N,
    /// Packing.
    P,
    /// Recursion: a cycle in the dependency graph.
    R,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::A,
        Feature::E,
        Feature::I,
        Feature::N,
        Feature::P,
        Feature::R,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn letter(self) -> char {
        match self {
            Feature::A => 'A',
            Feature::E => 'E',
            Feature::I => 'I',
            Feature::N => 'N',
            Feature::P => 'P',
            Feature::R => 'R',
        }
    }

    pub fn from_letter(c: char) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.letter() == c.to_ascii_uppercase())
    }
}

/// A fragment: a subset of the six features.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSet(u8);

impl FeatureSet {
    pub fn empty() -> FeatureSet {
        FeatureSet(0)
    }

    pub fn from_bits(bits: u8) -> FeatureSet {
        FeatureSet(bits & 0b11_1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// All 64 fragments.
    pub fn all() -> impl Iterator<Item = FeatureSet> {
        (0u8..64).map(FeatureSet)
    }

    pub fn contains(self, f: Feature) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn insert(&mut self, f: Feature) {
        self.0 |= f.bit();
    }

    pub fn with(mut self, f: Feature) -> FeatureSet {
        self.insert(f);
        self
    }

    pub fn without(self, f: Feature) -> FeatureSet {
        FeatureSet(self.0 & !f.bit())
    }

    pub fn is_subset(self, other: FeatureSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |f| self.contains(*f))
    }
}

impl FromIterator<Feature> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = Feature>>(iter: I) -> FeatureSet {
        let mut s = FeatureSet::empty();
        for f in iter {
            s.insert(f);
        }
        s
    }
}

/// Letters sorted and space separated, e.g. `A I R`; the empty set prints
/// as the empty string.
impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.iter().map(|x| x.letter().to_string()).collect();
        f.write_str(&letters.join(" "))
    }
}

impl fmt::Debug for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown feature letter `{0}`")]
pub struct UnknownFeature(pub char);

/// Accepts letters in any order, optionally separated by spaces, commas or
/// braces: `AIR`, `A I R`, `{A,I,R}`, `` (empty).
impl FromStr for FeatureSet {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<FeatureSet, UnknownFeature> {
        let mut out = FeatureSet::empty();
        for c in s.chars() {
            if c.is_whitespace() || matches!(c, ',' | '{' | '}') {
                continue;
            }
            out.insert(Feature::from_letter(c).ok_or(UnknownFeature(c))?);
        }
        Ok(out)
    }
}

pub fn detect_features(p: &Program) -> FeatureSet {
    let mut f = FeatureSet::empty();
    for r in p.rules() {
        let preds = std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::predicate));
        for q in preds {
            if q.arity() > 1 {
                f.insert(Feature::A);
            }
        }
        for l in &r.body {
            match l {
                Literal::Eq(_) => f.insert(Feature::E),
                Literal::Neq(_) => {
                    f.insert(Feature::E);
                    f.insert(Feature::N);
                }
                Literal::Neg(_) => f.insert(Feature::N),
                Literal::Pos(_) => {}
            }
        }
        let packed = r
            .head
            .args
            .iter()
            .chain(r.body.iter().flat_map(|l| l.exprs()))
            .any(|e| !e.is_packing_free());
        if packed {
            f.insert(Feature::P);
        }
    }
    if p.idb_names().len() >= 2 {
        f.insert(Feature::I);
    }
    if is_recursive(p) {
        f.insert(Feature::R);
    }
    f
}

/// Whether every query expressible in fragment `f1` is expressible in
/// fragment `f2`, by the five-condition characterization.
pub fn fragment_subsumes(f1: FeatureSet, f2: FeatureSet) -> bool {
    use Feature::*;
    let has1 = |x| f1.contains(x);
    let has2 = |x| f2.contains(x);
    let c1 = !has1(N) || has2(N);
    let c2 = !has1(R) || has2(R);
    let c3 = !has1(E) || has2(E) || has2(I);
    let c4 = !(has1(I) && !has1(R) && !has1(N)) || has2(I) || has2(E);
    let c5 = !(has1(I) && (has1(R) || has1(N))) || has2(I);
    c1 && c2 && c3 && c4 && c5
}

/// Variables that can only take packing-free values on flat instances:
/// variables of positive predicates over `sources`, closed under
/// propagation through positive equations whose other side is packing-free
/// and entirely pure.
pub fn pure_vars(r: &Rule, sources: &BTreeSet<String>) -> BTreeSet<Var> {
    let mut seed = BTreeSet::new();
    for p in r.positive_predicates() {
        if sources.contains(&p.relation) {
            p.collect_vars(&mut seed);
        }
    }
    let eqs: Vec<&Equation> = r.equations().collect();
    equation_closure(seed, &eqs, |side| side.is_packing_free())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquationClass {
    Pure,
    /// One side has only pure variables; the other side has an impure one.
    /// `pure_side_is_lhs` tells which side is the pure one.
    HalfPure { pure_side_is_lhs: bool },
    FullyImpure,
}

pub fn classify_equation(eq: &Equation, pure: &BTreeSet<Var>) -> EquationClass {
    let lhs_pure = eq.lhs.vars().iter().all(|v| pure.contains(v));
    let rhs_pure = eq.rhs.vars().iter().all(|v| pure.contains(v));
    match (lhs_pure, rhs_pure) {
        (true, true) => EquationClass::Pure,
        (true, false) => EquationClass::HalfPure {
            pure_side_is_lhs: true,
        },
        (false, true) => EquationClass::HalfPure {
            pure_side_is_lhs: false,
        },
        (false, false) => EquationClass::FullyImpure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn rule(text: &str) -> Rule {
        parse_program(text).unwrap().strata[0][0].clone()
    }

    fn names(vs: &BTreeSet<Var>) -> Vec<String> {
        vs.iter().map(|v| v.to_string()).collect()
    }

    fn fs(s: &str) -> FeatureSet {
        s.parse().unwrap()
    }

    #[test]
    fn limited_variable_cases() {
        assert_eq!(names(&limited_vars(&rule("S($x) :- R($x), a/$x = $x/a."))), ["$x"]);
        assert_eq!(
            names(&limited_vars(&rule("S($y) :- R($x), $y/$y = $x."))),
            ["$x", "$y"]
        );
        assert_eq!(names(&limited_vars(&rule("S($y) :- R($x), not T($y)."))), ["$x"]);
        assert!(is_safe_rule(&rule("S($x) :- $x = a.")));
    }

    #[test]
    fn safety_errors() {
        let p = parse_program("S($y) :- R($x), not T($y).").unwrap();
        assert!(matches!(check_safety(&p), Err(AnalysisError::Unsafe { vars, .. }) if vars == "$y"));
        let p = parse_program("S($x) :- R($x), a/$x = $x/a.").unwrap();
        assert!(check_safety(&p).is_ok());
    }

    #[test]
    fn stratification() {
        let ok = parse_program("W(@x) :- R(@x/@y), not B(@y).\n---\nS(@x) :- R(@x/@y), not W(@x).").unwrap();
        assert!(check_stratification(&ok).is_ok());
        let bad = parse_program("S(a) :- not S(b).").unwrap();
        assert!(check_stratification(&bad).is_err());
        let neq = parse_program("U($x, $y) :- U($x, @a/$y/@b), @a != @b.\nU($x, $x) :- R($x).").unwrap();
        assert!(check_stratification(&neq).is_ok());
    }

    #[test]
    fn feature_detection() {
        let p = parse_program("S($x) :- R($x), a/$x = $x/a.").unwrap();
        assert_eq!(detect_features(&p), fs("E"));
        let p = parse_program("T($x, $x) :- R($x).\nT($x, $y) :- T($x, $y/a).\nS($x) :- T($x, !).").unwrap();
        assert_eq!(detect_features(&p), fs("A I R"));
        let p = parse_program("S($x) :- R($x).").unwrap();
        assert_eq!(detect_features(&p), FeatureSet::empty());
        let p = parse_program("T($u/<$s>/$v) :- R($u/$s/$v), S($s).\nA :- T($x), T($y), $x != $y.").unwrap();
        assert_eq!(detect_features(&p).to_string(), "E I N P");
    }

    #[test]
    fn subsumption_examples() {
        assert!(fragment_subsumes(fs("E"), fs("I")));
        assert!(fragment_subsumes(fs("I"), fs("E")));
        assert!(!fragment_subsumes(fs("I N"), fs("E N R")));
        assert!(fragment_subsumes(FeatureSet::empty(), FeatureSet::empty()));
    }

    #[test]
    fn feature_set_parsing() {
        assert_eq!(fs("{A,I,R}"), fs("AIR"));
        assert_eq!(fs("air").to_string(), "A I R");
        assert!("X".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn purity_examples() {
        let src: BTreeSet<String> = ["R".to_string()].into();
        let r = rule("S($x) :- R($x, $y), <$x> = <$y>, a/$x = $z, $y = <$u>.");
        let pure = pure_vars(&r, &src);
        assert_eq!(names(&pure), ["$u", "$x", "$y", "$z"]);
        for eq in r.equations() {
            assert_eq!(classify_equation(eq, &pure), EquationClass::Pure);
        }

        let r = rule("S($x) :- R($x, $y), <$y> = $z, <$x> = <$z>.");
        let pure = pure_vars(&r, &src);
        assert_eq!(names(&pure), ["$x", "$y"]);
        for eq in r.equations() {
            assert!(matches!(classify_equation(eq, &pure), EquationClass::HalfPure { .. }));
        }

        let r = rule("S($x) :- R($x, $y), <$t> = <$z>, $z = <$y>, $t = <$x>.");
        let pure = pure_vars(&r, &src);
        let first = r.equations().next().unwrap();
        assert_eq!(classify_equation(first, &pure), EquationClass::FullyImpure);
    }
}
