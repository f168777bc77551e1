//! Stratified bottom-up evaluation with termination budgets.
//!
//! Each rule body is evaluated by joining its positive predicates left to
//! right, resolving a positive equation as soon as one of its sides is fully
//! bound, and finally filtering by negated predicates and nonequalities.
//! Strata are evaluated in order, each to its least fixpoint.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use log::warn;
use thiserror::Error;

use crate::analysis::{check_program, AnalysisError};
use crate::expr::{Expr, Valuation, Var};
use crate::program::{Equation, Literal, Predicate, Program, Rule};
use crate::unify::match_extend;
use crate::value::{Instance, Path, Relation, Tuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Total number of facts derived by the program.
    pub max_derived_facts: usize,
    /// Largest allowed [`Path::size`] of a derived path.
    pub max_path_len: usize,
    /// Fixpoint rounds per stratum.
    pub max_iterations: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            max_derived_facts: 1_000_000,
            max_path_len: 1_000,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetDimension {
    DerivedFacts,
    PathLength,
    Iterations,
}

impl fmt::Display for BudgetDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetDimension::DerivedFacts => "derived facts",
            BudgetDimension::PathLength => "path length",
            BudgetDimension::Iterations => "iterations",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("evaluation did not terminate within budget ({dimension}) in stratum {stratum}")]
    NonTermination {
        dimension: BudgetDimension,
        stratum: usize,
    },
    #[error(transparent)]
    Invalid(#[from] AnalysisError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Fixpoint strategy. Both produce the same result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Re-evaluate every rule on the whole instance each round.
    Naive,
    /// Re-evaluate only derivations using a fact new in the previous round.
    #[default]
    SemiNaive,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StratumStats {
    pub iterations: usize,
    pub derived_facts: usize,
}

#[derive(Clone, Debug)]
pub struct EvalResult {
    pub instance: Instance,
    pub stats: Vec<StratumStats>,
}

enum Step<'r> {
    /// Positive predicate with its ordinal among the positive predicates.
    Pred(&'r Predicate, usize),
    Eq(&'r Equation),
    Neg(&'r Predicate),
    Neq(&'r Equation),
}

/// Evaluation order for a rule body. Equations are placed right after the
/// literal that makes one of their sides fully bound.
struct Plan<'r> {
    rule: &'r Rule,
    steps: Vec<Step<'r>>,
}

impl<'r> Plan<'r> {
    fn new(rule: &'r Rule) -> Result<Plan<'r>, EvalError> {
        let mut steps = Vec::new();
        let mut bound: BTreeSet<Var> = BTreeSet::new();
        let mut pending: Vec<&Equation> = rule.equations().collect();
        let covered = |e: &Expr, bound: &BTreeSet<Var>| e.vars().iter().all(|v| bound.contains(v));
        let drain = |bound: &mut BTreeSet<Var>, steps: &mut Vec<Step<'r>>, pending: &mut Vec<&'r Equation>| loop {
            let Some(i) = pending
                .iter()
                .position(|eq| covered(&eq.lhs, bound) || covered(&eq.rhs, bound))
            else {
                break;
            };
            let eq = pending.remove(i);
            eq.lhs.collect_vars(bound);
            eq.rhs.collect_vars(bound);
            steps.push(Step::Eq(eq));
        };
        drain(&mut bound, &mut steps, &mut pending);
        for (k, p) in rule.positive_predicates().enumerate() {
            steps.push(Step::Pred(p, k));
            p.collect_vars(&mut bound);
            drain(&mut bound, &mut steps, &mut pending);
        }
        if !pending.is_empty() {
            return Err(EvalError::Internal(format!(
                "equation `{}` never becomes one-side bound in `{rule}`",
                pending[0]
            )));
        }
        let mut needed = BTreeSet::new();
        for l in &rule.body {
            match l {
                Literal::Neg(p) => {
                    p.collect_vars(&mut needed);
                    steps.push(Step::Neg(p));
                }
                Literal::Neq(e) => {
                    needed.extend(e.vars());
                    steps.push(Step::Neq(e));
                }
                _ => {}
            }
        }
        rule.head.collect_vars(&mut needed);
        if let Some(v) = needed.iter().find(|v| !bound.contains(v)) {
            return Err(EvalError::Internal(format!("variable {v} is not bound in `{rule}`")));
        }
        Ok(Plan { rule, steps })
    }

    fn positive_count(&self) -> usize {
        self.rule.positive_predicates().count()
    }
}

/// Where a positive predicate reads its tuples from during one evaluation.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Source {
    Full,
    Delta,
    /// Full minus delta.
    Old,
}

struct Db<'a> {
    inst: &'a Instance,
    delta: &'a HashMap<String, HashSet<Tuple>>,
}

impl<'a> Db<'a> {
    fn for_each(&self, rel: &str, src: Source, f: &mut dyn FnMut(&Tuple)) {
        let delta = self.delta.get(rel);
        match src {
            Source::Delta => {
                if let Some(d) = delta {
                    d.iter().for_each(f);
                }
            }
            Source::Full | Source::Old => {
                if let Some(r) = self.inst.relation(rel) {
                    for t in r.iter() {
                        if src == Source::Old && delta.is_some_and(|d| d.contains(t)) {
                            continue;
                        }
                        f(t);
                    }
                }
            }
        }
    }
}

fn match_args(args: &[Expr], tuple: &[Path], val: &mut Valuation, k: &mut dyn FnMut(&mut Valuation)) {
    match args.split_first() {
        None => k(val),
        Some((e, rest)) => match_extend(e, &tuple[0], val, &mut |val: &mut Valuation| {
            match_args(rest, &tuple[1..], val, k)
        }),
    }
}

fn run_steps(
    steps: &[Step],
    db: &Db,
    sources: &dyn Fn(usize) -> Source,
    val: &mut Valuation,
    emit: &mut dyn FnMut(&Valuation),
) {
    let Some((step, rest)) = steps.split_first() else {
        emit(val);
        return;
    };
    match step {
        Step::Pred(p, k) => {
            if db.inst.relation(&p.relation).is_some_and(|r| r.arity() != p.arity()) {
                return;
            }
            db.for_each(&p.relation, sources(*k), &mut |t: &Tuple| {
                match_args(&p.args, t, val, &mut |val: &mut Valuation| run_steps(rest, db, sources, val, emit));
            });
        }
        Step::Eq(eq) => {
            let l = val.eval(&eq.lhs);
            let r = val.eval(&eq.rhs);
            match (l, r) {
                (Some(l), Some(r)) => {
                    if l == r {
                        run_steps(rest, db, sources, val, emit);
                    }
                }
                (Some(l), None) => match_extend(&eq.rhs, &l, val, &mut |val: &mut Valuation| {
                    run_steps(rest, db, sources, val, emit)
                }),
                (None, Some(r)) => match_extend(&eq.lhs, &r, val, &mut |val: &mut Valuation| {
                    run_steps(rest, db, sources, val, emit)
                }),
                (None, None) => unreachable!("plan places equations after a side is bound"),
            }
        }
        Step::Neg(p) => {
            let t: Option<Tuple> = p.args.iter().map(|a| val.eval(a)).collect();
            let t = t.expect("negated predicate is bound");
            if !db.inst.contains_fact(&p.relation, &t) {
                run_steps(rest, db, sources, val, emit);
            }
        }
        Step::Neq(eq) => {
            let l = val.eval(&eq.lhs).expect("bound");
            let r = val.eval(&eq.rhs).expect("bound");
            if l != r {
                run_steps(rest, db, sources, val, emit);
            }
        }
    }
}

fn head_tuple(head: &Predicate, val: &Valuation) -> Tuple {
    head.args
        .iter()
        .map(|a| val.eval(a).expect("head variables are bound"))
        .collect()
}

fn eval_plan(
    plan: &Plan,
    db: &Db,
    sources: &dyn Fn(usize) -> Source,
    emit: &mut dyn FnMut(Tuple),
) {
    let mut val = Valuation::new();
    run_steps(&plan.steps, db, sources, &mut val, &mut |v: &Valuation| {
        emit(head_tuple(&plan.rule.head, v))
    });
}

/// All head facts `ν(head)` for valuations `ν` satisfying the body in `i`.
pub fn eval_rule(r: &Rule, i: &Instance) -> Result<BTreeSet<Tuple>, EvalError> {
    let plan = Plan::new(r)?;
    let delta = HashMap::new();
    let db = Db { inst: i, delta: &delta };
    let mut out = BTreeSet::new();
    eval_plan(&plan, &db, &|_| Source::Full, &mut |t| {
        out.insert(t);
    });
    Ok(out)
}

struct Counter<'b> {
    budget: &'b Budget,
    derived: usize,
    stratum: usize,
}

impl Counter<'_> {
    fn fail(&self, dimension: BudgetDimension) -> EvalError {
        EvalError::NonTermination {
            dimension,
            stratum: self.stratum,
        }
    }
}

/// Least fixpoint of one stratum over `i`, which is extended in place.
fn run_stratum(
    rules: &[Rule],
    i: &mut Instance,
    counter: &mut Counter,
    mode: Mode,
) -> Result<StratumStats, EvalError> {
    let plans: Vec<Plan> = rules.iter().map(Plan::new).collect::<Result<_, _>>()?;
    let heads: BTreeSet<&str> = rules.iter().map(|r| r.head.relation.as_str()).collect();
    for r in rules {
        i.relation_mut(&r.head.relation, r.head.arity())
            .map_err(|e| EvalError::Internal(e.to_string()))?;
    }
    let mut stats = StratumStats::default();
    let mut delta: HashMap<String, HashSet<Tuple>> = HashMap::new();
    let mut first = true;
    loop {
        if !first && delta.values().all(HashSet::is_empty) {
            break;
        }
        stats.iterations += 1;
        if stats.iterations > counter.budget.max_iterations {
            return Err(counter.fail(BudgetDimension::Iterations));
        }
        let mut fresh: HashMap<String, HashSet<Tuple>> = HashMap::new();
        let mut failure = None;
        {
            let db = Db { inst: i, delta: &delta };
            for plan in &plans {
                let head = &plan.rule.head.relation;
                let mut emit = |t: Tuple| {
                    if failure.is_some() || db.inst.contains_fact(head, &t) {
                        return;
                    }
                    if t.iter().any(|p| p.size() > counter.budget.max_path_len) {
                        failure = Some(BudgetDimension::PathLength);
                        return;
                    }
                    let set = fresh.entry(head.clone()).or_default();
                    if set.insert(t) {
                        counter.derived += 1;
                        if counter.derived > counter.budget.max_derived_facts {
                            failure = Some(BudgetDimension::DerivedFacts);
                        }
                    }
                };
                if first || mode == Mode::Naive {
                    eval_plan(plan, &db, &|_| Source::Full, &mut emit);
                    continue;
                }
                let positives: Vec<&Predicate> = plan.rule.positive_predicates().collect();
                for j in 0..plan.positive_count() {
                    if !heads.contains(positives[j].relation.as_str()) {
                        continue;
                    }
                    let sources = |k: usize| match k.cmp(&j) {
                        std::cmp::Ordering::Less => Source::Old,
                        std::cmp::Ordering::Equal => Source::Delta,
                        std::cmp::Ordering::Greater => Source::Full,
                    };
                    eval_plan(plan, &db, &sources, &mut emit);
                }
            }
        }
        if let Some(d) = failure {
            return Err(counter.fail(d));
        }
        for (rel, set) in &fresh {
            let target = i.relation_mut(rel, set.iter().next().map_or(0, Vec::len))
                .map_err(|e| EvalError::Internal(e.to_string()))?;
            for t in set {
                target.insert(t.clone());
            }
            stats.derived_facts += set.len();
        }
        delta = fresh;
        first = false;
    }
    Ok(stats)
}

/// Least fixpoint of a single stratum, treating every relation not defined
/// by `rules` as input.
pub fn eval_stratum(rules: &[Rule], i: &Instance, budget: &Budget) -> Result<Instance, EvalError> {
    let mut out = i.clone();
    let mut counter = Counter {
        budget,
        derived: 0,
        stratum: 0,
    };
    run_stratum(rules, &mut out, &mut counter, Mode::default())?;
    Ok(out)
}

/// Evaluates the strata in order after checking safety and stratification.
pub fn eval_program(p: &Program, i: &Instance, budget: &Budget) -> Result<EvalResult, EvalError> {
    eval_program_with(p, i, budget, Mode::default())
}

pub fn eval_program_with(p: &Program, i: &Instance, budget: &Budget, mode: Mode) -> Result<EvalResult, EvalError> {
    check_program(p)?;
    let mut inst = i.clone();
    let mut stats = Vec::with_capacity(p.strata.len());
    let mut counter = Counter {
        budget,
        derived: 0,
        stratum: 0,
    };
    for (k, stratum) in p.strata.iter().enumerate() {
        counter.stratum = k;
        stats.push(run_stratum(stratum, &mut inst, &mut counter, mode)?);
    }
    Ok(EvalResult { instance: inst, stats })
}

/// The relation `s` computed by `p` on `i`. Input conditions (flat input,
/// unary input relations) are checked and reported as warnings only.
pub fn query(p: &Program, i: &Instance, s: &str, budget: &Budget) -> Result<Relation, EvalError> {
    if !crate::value::is_flat(i) {
        warn!("query input is not flat");
    }
    let edb = p.edb_names();
    for (name, rel) in i.relations() {
        if edb.contains(name) && rel.arity() > 1 {
            warn!("input relation {name} has arity {}", rel.arity());
        }
    }
    if !p.idb_names().contains(s) {
        warn!("{s} is not defined by the program");
    }
    let result = eval_program(p, i, budget)?;
    let arity = p.arities().get(s).copied().unwrap_or(0);
    let rel = result
        .instance
        .relation(s)
        .cloned()
        .unwrap_or_else(|| Relation::new(arity));
    if !rel.is_flat() {
        warn!("output relation {s} is not flat");
    }
    Ok(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_instance, parse_program, print_instance};

    fn run(prog: &str, data: &str) -> Instance {
        let p = parse_program(prog).unwrap();
        let i = parse_instance(data).unwrap();
        let a = eval_program_with(&p, &i, &Budget::default(), Mode::Naive).unwrap();
        let b = eval_program_with(&p, &i, &Budget::default(), Mode::SemiNaive).unwrap();
        assert_eq!(a.instance, b.instance);
        a.instance
    }

    fn rel(i: &Instance, name: &str) -> String {
        print_instance(&i.project([name]))
    }

    #[test]
    fn only_as_rule() {
        let p = parse_program("S($x) :- R($x), a/$x = $x/a.").unwrap();
        let i = parse_instance("R(a/a/a). R(a/b).").unwrap();
        let out = eval_rule(&p.strata[0][0], &i).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out.contains(&vec![Path::atoms(&["a", "a", "a"])]));
    }

    #[test]
    fn packing_rule() {
        let i = run("T($u/<$s>/$v) :- R($u/$s/$v), S($s).", "R(a/b). S(b).");
        assert_eq!(rel(&i, "T"), "T(a/<b>).\n");
    }

    #[test]
    fn unsatisfiable_equation() {
        let i = run("S($x) :- R($x), a = b.", "R(a).");
        assert_eq!(rel(&i, "S"), "");
    }

    #[test]
    fn squaring() {
        let i = run(
            "T(!, $x, $x) :- R($x).\nT($y/$x, $x, $z) :- T($y, $x, a/$z).\nS($y) :- T($y, $x, !).",
            "R(a/a/a).",
        );
        assert_eq!(rel(&i, "S"), "S(a/a/a/a/a/a/a/a/a).\n");
    }

    #[test]
    fn two_strata() {
        let prog = "W(@x) :- R(@x/@y), not B(@y).\n---\nS(@x) :- R(@x/@y), not W(@x).";
        let i = run(prog, "R(x/y).");
        assert_eq!(rel(&i, "W"), "W(x).\n");
        assert_eq!(rel(&i, "S"), "");
        let i = run(prog, "R(x/y). B(y).");
        assert_eq!(rel(&i, "S"), "S(x).\n");
    }

    #[test]
    fn nonterminating() {
        let p = parse_program("T(a).\nT(a/$x) :- T($x).").unwrap();
        let budget = Budget {
            max_path_len: 200,
            ..Budget::default()
        };
        let r = eval_program(&p, &Instance::new(), &budget);
        assert!(matches!(r, Err(EvalError::NonTermination { .. })));
    }

    #[test]
    fn nullary_and_missing_relations() {
        let i = run("A :- T($x), T($y), $x != $y.", "T(a). T(b).");
        assert_eq!(rel(&i, "A"), "A.\n");
        let i = run("S($x) :- Missing($x).", "");
        assert_eq!(rel(&i, "S"), "");
    }

    #[test]
    fn reversal_query() {
        let p = parse_program("T($x, !) :- R($x).\nT($x, $y/@u) :- T($x/@u, $y).\nS($x) :- T(!, $x).").unwrap();
        let i = parse_instance("R(a/b/c).").unwrap();
        let s = query(&p, &i, "S", &Budget::default()).unwrap();
        assert!(s.contains(&[Path::atoms(&["c", "b", "a"])]));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn equation_before_predicates() {
        let i = run("S($x) :- $x = a/b, R($x).", "R(a/b). R(b).");
        assert_eq!(rel(&i, "S"), "S(a/b).\n");
    }
}
