//! Packing elimination for nonrecursive programs on flat instances.
//!
//! Each rule is first purified (every variable forced to denote a
//! packing-free path), then equations are split along their packing
//! structure. IDB relations are split into one variant per head packing
//! structure; the all-star variant keeps the original name.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::analysis::{classify_equation, is_recursive, pure_vars, DependencyGraph, EquationClass};
use crate::expr::{decompose, Expr, PackingStructure, PsToken, Token, Var, VarKind};
use crate::program::{Equation, Literal, Predicate, Program, Rule};
use crate::unify::{reduce_subsumed, solve, UnifyBudget};

use super::{FreshNames, FreshVars, TransformError, MAX_RULES};

fn freshen_occurrences(e: &Expr, vars: &mut FreshVars, pairs: &mut Vec<(Var, Var)>) -> Expr {
    e.tokens()
        .iter()
        .map(|t| match t {
            Token::Var(v) => {
                let f = vars.fresh(v.kind, &v.name);
                pairs.push((v.clone(), f.clone()));
                Token::Var(f)
            }
            Token::Packed(inner) => Token::Packed(freshen_occurrences(inner, vars, pairs)),
            c => c.clone(),
        })
        .collect()
}

/// Rewrites `r` into a set of rules, equivalent on flat instances, in which
/// every positive equation is pure. `sources` names the relations known to
/// hold flat tuples only.
pub fn purify_rule(
    r: &Rule,
    sources: &BTreeSet<String>,
    vars: &mut FreshVars,
) -> Result<Vec<Rule>, TransformError> {
    vars.reserve_rule(r);
    let mut out = Vec::new();
    let mut work = VecDeque::from([r.clone()]);
    let mut processed = 0usize;
    while let Some(r) = work.pop_front() {
        processed += 1;
        if processed > MAX_RULES {
            return Err(TransformError::TooManyRules(MAX_RULES));
        }
        let pure = pure_vars(&r, sources);
        // Half-pure equation with the fewest impure variables, first in
        // body order on ties.
        let pick = r
            .body
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l {
                Literal::Eq(eq) => match classify_equation(eq, &pure) {
                    EquationClass::HalfPure { pure_side_is_lhs } => {
                        let (p, q) = if pure_side_is_lhs {
                            (&eq.lhs, &eq.rhs)
                        } else {
                            (&eq.rhs, &eq.lhs)
                        };
                        let impure = q.vars().iter().filter(|v| !pure.contains(v)).count();
                        Some((impure, i, p.clone(), q.clone()))
                    }
                    _ => None,
                },
                _ => None,
            })
            .min_by_key(|(n, i, _, _)| (*n, *i));
        let Some((_, idx, e1, e2)) = pick else {
            out.push(r);
            continue;
        };
        let mut pairs = Vec::new();
        let e1f = freshen_occurrences(&e1, vars, &mut pairs);
        let mut body: Vec<Literal> = r
            .body
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, l)| l.clone())
            .collect();
        body.extend(
            pairs
                .iter()
                .map(|(u, v)| Literal::Eq(Equation::new(Expr::var(u.clone()), Expr::var(v.clone())))),
        );
        let r2 = Rule::new(r.head.clone(), body);
        let eq = Equation::new(e1f, e2);
        let pure2 = pure_vars(&r2, sources);
        let sols: Vec<_> = solve(&eq, UnifyBudget::default())?
            .into_iter()
            .filter(|rho| pure2.iter().all(|v| rho.image(v).is_packing_free()))
            .collect();
        for rho in reduce_subsumed(sols, &eq.vars()) {
            let next = r2.substitute(&|v: &Var| rho.get(v).cloned());
            vars.reserve_rule(&next);
            work.push_back(next);
        }
    }
    Ok(out)
}

fn is_flat_structure(ps: &PackingStructure) -> bool {
    ps.0 == [PsToken::Star]
}

/// Splits equations along packing structures. Assumes every variable of
/// `r` denotes a packing-free path, so two sides with different structures
/// never denote the same path.
pub fn depack_equations(r: &Rule) -> Vec<Rule> {
    let mut fixed = Vec::new();
    let mut disjunctions: Vec<Vec<Equation>> = Vec::new();
    for l in &r.body {
        match l {
            Literal::Eq(eq) if !(eq.lhs.is_packing_free() && eq.rhs.is_packing_free()) => {
                let (p1, c1) = decompose(&eq.lhs);
                let (p2, c2) = decompose(&eq.rhs);
                if p1 != p2 {
                    return Vec::new();
                }
                for (a, b) in c1.into_iter().zip(c2) {
                    if a != b {
                        fixed.push(Literal::Eq(Equation::new(a, b)));
                    }
                }
            }
            Literal::Neq(eq) if !(eq.lhs.is_packing_free() && eq.rhs.is_packing_free()) => {
                let (p1, c1) = decompose(&eq.lhs);
                let (p2, c2) = decompose(&eq.rhs);
                if p1 != p2 {
                    continue;
                }
                let options: Vec<Equation> =
                    c1.into_iter().zip(c2).filter(|(a, b)| a != b).map(|(a, b)| Equation::new(a, b)).collect();
                if options.is_empty() {
                    return Vec::new();
                }
                disjunctions.push(options);
            }
            other => fixed.push(other.clone()),
        }
    }
    let mut bodies = vec![fixed];
    for options in disjunctions {
        bodies = bodies
            .iter()
            .flat_map(|b| {
                options.iter().map(move |o| {
                    let mut b = b.clone();
                    b.push(Literal::Neq(o.clone()));
                    b
                })
            })
            .collect();
    }
    bodies.into_iter().map(|b| Rule::new(r.head.clone(), b)).collect()
}

type Variants = BTreeMap<String, Vec<(Vec<PackingStructure>, String)>>;

fn signature(args: &[Expr]) -> (Vec<PackingStructure>, Vec<Expr>) {
    let mut sig = Vec::new();
    let mut comps = Vec::new();
    for a in args {
        let (ps, cs) = decompose(a);
        sig.push(ps);
        comps.extend(cs);
    }
    (sig, comps)
}

/// Removes packing from a nonrecursive program. The result computes the
/// same flat relations on flat instances.
pub fn eliminate_packing_nonrecursive(p: &Program) -> Result<Program, TransformError> {
    if is_recursive(p) {
        return Err(TransformError::RecursionPresent);
    }
    let mut names = FreshNames::for_program(p);
    let mut vars = FreshVars::for_program(p);
    let order: BTreeMap<String, usize> =
        DependencyGraph::new(p).dependency_order().into_iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut variants: Variants = BTreeMap::new();
    let mut strata = Vec::new();
    for stratum in &p.strata {
        let mut heads: Vec<&str> = stratum.iter().map(|r| r.head.relation.as_str()).collect();
        heads.sort_by_key(|h| (order.get(*h).copied().unwrap_or(usize::MAX), *h));
        heads.dedup();
        for h in heads {
            let mut out = Vec::new();
            let mut mine: Vec<(Vec<PackingStructure>, String)> = Vec::new();
            for r in stratum.iter().filter(|r| r.head.relation == h) {
                for r in expand_calls(r, &variants, &mut vars)? {
                    if r.positive_predicates().any(Predicate::has_packing) {
                        continue;
                    }
                    let sources: BTreeSet<String> = r.positive_predicates().map(|q| q.relation.clone()).collect();
                    for r in purify_rule(&r, &sources, &mut vars)? {
                        for r in depack_equations(&r) {
                            if r.positive_predicates().any(Predicate::has_packing) {
                                continue;
                            }
                            let body = r
                                .body
                                .iter()
                                .filter_map(|l| match l {
                                    Literal::Neg(q) => rewrite_negated(q, &variants).map(Literal::Neg),
                                    other => Some(other.clone()),
                                })
                                .collect();
                            let (sig, comps) = signature(&r.head.args);
                            let name = match mine.iter().find(|(s, _)| *s == sig) {
                                Some((_, n)) => n.clone(),
                                None => {
                                    let n = if sig.iter().all(is_flat_structure) {
                                        h.to_owned()
                                    } else {
                                        names.fresh(h)
                                    };
                                    mine.push((sig, n.clone()));
                                    n
                                }
                            };
                            let rule = Rule::new(Predicate::new(name, comps), body);
                            if !out.contains(&rule) {
                                out.push(rule);
                            }
                        }
                    }
                }
            }
            variants.insert(h.to_owned(), mine);
            if !out.is_empty() {
                strata.push(out);
            }
        }
    }
    Ok(Program::new(strata))
}

/// Replaces each positive call to an already split relation by a call to
/// one of its variants, in every combination.
fn expand_calls(r: &Rule, variants: &Variants, vars: &mut FreshVars) -> Result<Vec<Rule>, TransformError> {
    let mut bodies: Vec<Vec<Literal>> = vec![Vec::new()];
    for l in &r.body {
        let options: Vec<Vec<Literal>> = match l {
            Literal::Pos(q) if variants.contains_key(&q.relation) => variants[&q.relation]
                .iter()
                .map(|(sig, name)| {
                    let mut args = Vec::new();
                    let mut eqs = Vec::new();
                    for (e, ps) in q.args.iter().zip(sig) {
                        if is_flat_structure(ps) {
                            args.push(e.clone());
                            continue;
                        }
                        let fs: Vec<Expr> =
                            (0..ps.star_count()).map(|_| Expr::var(vars.fresh(VarKind::Path, "f"))).collect();
                        eqs.push(Literal::Eq(Equation::new(e.clone(), ps.fill(&fs).expect("star count matches"))));
                        args.extend(fs);
                    }
                    let mut lits = vec![Literal::Pos(Predicate::new(name.clone(), args))];
                    lits.extend(eqs);
                    lits
                })
                .collect(),
            other => vec![vec![other.clone()]],
        };
        let mut next = Vec::new();
        for b in &bodies {
            for o in &options {
                let mut b = b.clone();
                b.extend(o.iter().cloned());
                next.push(b);
            }
        }
        if next.len() > MAX_RULES {
            return Err(TransformError::TooManyRules(MAX_RULES));
        }
        bodies = next;
    }
    Ok(bodies.into_iter().map(|b| Rule::new(r.head.clone(), b)).collect())
}

/// `None` means the negated literal is true on flat instances.
fn rewrite_negated(q: &Predicate, variants: &Variants) -> Option<Predicate> {
    match variants.get(&q.relation) {
        Some(vs) => {
            let (sig, comps) = signature(&q.args);
            vs.iter().find(|(s, _)| *s == sig).map(|(_, n)| Predicate::new(n.clone(), comps))
        }
        None if q.has_packing() => None,
        None => Some(q.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{check_program, detect_features, Feature};
    use crate::syntax::parse_program;

    fn rule(text: &str) -> Rule {
        parse_program(text).unwrap().strata[0][0].clone()
    }

    #[test]
    fn depack_splits_components() {
        let r = rule("S($x, $y) :- R($x, $y), <$x> = <$y>.");
        let out = depack_equations(&r);
        assert_eq!(out, vec![rule("S($x, $y) :- R($x, $y), $x = $y.")]);
        let r = rule("S($x, $y, $z) :- R($x, $y, $z), <$x> = $y/<a>/$z.");
        assert_eq!(
            depack_equations(&r),
            vec![rule("S($x, $y, $z) :- R($x, $y, $z), ! = $y, $x = a, ! = $z.")]
        );
        let r = rule("S($x, $y) :- R($x, $y), <$x> = $y.");
        assert!(depack_equations(&r).is_empty());
        let r = rule("S($x, $y) :- R($x, $y), $x/a = $y.");
        assert_eq!(depack_equations(&r), vec![r]);
    }

    #[test]
    fn depack_negated_disjunction() {
        let r = rule("S($x, $y) :- R($x, $y), <$x>/$y != <$y>/$x.");
        assert_eq!(depack_equations(&r).len(), 2);
        let r = rule("S($x, $y) :- R($x, $y), <$x> != $y.");
        assert_eq!(depack_equations(&r), vec![rule("S($x, $y) :- R($x, $y).")]);
    }

    #[test]
    fn purify_unsatisfiable_half_pure() {
        let r = rule("S(@u) :- R(@u), @u = <$x>.");
        let sources = ["R"].iter().map(|s| s.to_string()).collect();
        let mut vars = FreshVars::default();
        // Purity flows from @u into $x, so the equation counts as pure and
        // depacking finds the structures differ.
        let out: Vec<Rule> =
            purify_rule(&r, &sources, &mut vars).unwrap().iter().flat_map(depack_equations).collect();
        assert!(out.is_empty());
    }

    #[test]
    fn cool_program_rule_count() {
        let p = parse_program(
            "T($u/<$s>/$v) :- R($u/$s/$v), S($s).\nA :- T($x), T($y), T($z), $x != $y, $x != $z, $y != $z.",
        )
        .unwrap();
        let q = eliminate_packing_nonrecursive(&p).unwrap();
        check_program(&q).unwrap();
        assert!(!detect_features(&q).contains(Feature::P));
        assert_eq!(q.rule_count(), 28, "{q:?}");
    }

    #[test]
    fn purify_half_pure_example() {
        let r = rule("S($x) :- R($x, $y), <$y> = $z, <$x> = <$z>.");
        let sources = ["R"].iter().map(|s| s.to_string()).collect();
        let mut vars = FreshVars::default();
        let out = purify_rule(&r, &sources, &mut vars).unwrap();
        assert!(!out.is_empty());
        for r in &out {
            let pure = pure_vars(r, &sources);
            assert!(r.vars().iter().all(|v| pure.contains(v)), "{r}");
        }
    }

    #[test]
    fn packed_edb_call_is_false() {
        let p = parse_program("S($x) :- R(<$x>).").unwrap();
        assert_eq!(eliminate_packing_nonrecursive(&p).unwrap().rule_count(), 0);
    }
}
