//! Equation elimination: auxiliary strata for negated equations, then an
//! auxiliary predicate per positive equation.

use std::collections::{BTreeMap, BTreeSet};

use crate::expr::{Expr, Var};
use crate::program::{Equation, Literal, Predicate, Program, Rule};

use super::FreshNames;

/// Removes every equation and nonequation, preserving the query.
pub fn eliminate_equations(p: &Program) -> Program {
    let mut names = FreshNames::for_program(p);
    let p = insert_with(p, &mut names);
    positive_with(&p, &mut names)
}

/// Replaces negated equations by negated calls to auxiliary relations
/// computed in a stratum inserted right before each affected one. Positive
/// equations (including the ones the construction introduces) are left in
/// place.
pub fn insert_negated_equation_strata(p: &Program) -> Program {
    insert_with(p, &mut FreshNames::for_program(p))
}

/// Replaces every positive equation by a call to an auxiliary relation.
/// Nonequations are left in place.
pub fn eliminate_positive_equations(p: &Program) -> Program {
    positive_with(p, &mut FreshNames::for_program(p))
}

fn var_exprs(vs: &[Var]) -> Vec<Expr> {
    vs.iter().cloned().map(Expr::var).collect()
}

fn insert_with(p: &Program, names: &mut FreshNames) -> Program {
    let mut strata = Vec::new();
    for stratum in &p.strata {
        if !stratum.iter().any(|r| r.nonequations().next().is_some()) {
            strata.push(stratum.clone());
            continue;
        }
        let mut rho: BTreeMap<String, String> = BTreeMap::new();
        for r in stratum {
            if !rho.contains_key(&r.head.relation) {
                let fresh = names.fresh(&r.head.relation);
                rho.insert(r.head.relation.clone(), fresh);
            }
        }
        let rename = |q: &Predicate| -> Predicate {
            match rho.get(&q.relation) {
                Some(n) => Predicate::new(n.clone(), q.args.clone()),
                None => q.clone(),
            }
        };
        let rename_lit = |l: &Literal| -> Literal {
            match l {
                Literal::Pos(q) => Literal::Pos(rename(q)),
                Literal::Neg(q) => Literal::Neg(rename(q)),
                other => other.clone(),
            }
        };
        let mut inserted = Vec::new();
        let mut rewritten = Vec::new();
        for r in stratum {
            let neqs: Vec<&Equation> = r.nonequations().collect();
            let b: Vec<Literal> = r.body.iter().filter(|l| !matches!(l, Literal::Neq(_))).cloned().collect();
            let rb: Vec<Literal> = b.iter().map(rename_lit).collect();
            inserted.push(Rule::new(rename(&r.head), rb.clone()));
            if neqs.is_empty() {
                rewritten.push(r.clone());
                continue;
            }
            // Head variables first, then the rest of the body in order of
            // first appearance.
            let mut vs = Vec::new();
            for a in &r.head.args {
                a.vars_in_order(&mut vs);
            }
            for l in &b {
                for e in l.exprs() {
                    e.vars_in_order(&mut vs);
                }
            }
            let t = names.fresh("T");
            let tp = Predicate::new(t, var_exprs(&vs));
            for eq in neqs {
                let mut body = rb.clone();
                body.push(Literal::Eq(eq.clone()));
                inserted.push(Rule::new(tp.clone(), body));
            }
            let mut body = b;
            body.push(Literal::Neg(tp));
            rewritten.push(Rule::new(r.head.clone(), body));
        }
        strata.push(inserted);
        strata.push(rewritten);
    }
    Program::new(strata)
}

fn positive_with(p: &Program, names: &mut FreshNames) -> Program {
    let strata = p
        .strata
        .iter()
        .map(|s| {
            let mut out = Vec::new();
            for r in s {
                eliminate_in_rule(r, names, &mut out);
            }
            out
        })
        .collect();
    Program::new(strata)
}

/// Repeatedly folds the positive predicates together with one equation
/// into an auxiliary relation `T(s, V) :- P`, where `s` is an equation side
/// over the variables `V` of `P`, and calls it as `T(other side, V)`.
fn eliminate_in_rule(r: &Rule, names: &mut FreshNames, out: &mut Vec<Rule>) {
    let mut r = r.clone();
    loop {
        let pos: Vec<Literal> = r.body.iter().filter(|l| matches!(l, Literal::Pos(_))).cloned().collect();
        let mut pvars = Vec::new();
        for l in &pos {
            for e in l.exprs() {
                e.vars_in_order(&mut pvars);
            }
        }
        let limited: BTreeSet<Var> = pvars.iter().cloned().collect();
        let pick = r.body.iter().enumerate().find_map(|(i, l)| match l {
            Literal::Eq(eq) if eq.lhs.vars().is_subset(&limited) => Some((i, eq.lhs.clone(), eq.rhs.clone())),
            Literal::Eq(eq) if eq.rhs.vars().is_subset(&limited) => Some((i, eq.rhs.clone(), eq.lhs.clone())),
            _ => None,
        });
        let Some((idx, side, other)) = pick else {
            out.push(r);
            return;
        };
        let t = names.fresh("T");
        let mut targs = vec![side];
        targs.extend(var_exprs(&pvars));
        out.push(Rule::new(Predicate::new(t.clone(), targs), pos));
        let mut cargs = vec![other];
        cargs.extend(var_exprs(&pvars));
        let mut body = vec![Literal::Pos(Predicate::new(t, cargs))];
        body.extend(
            r.body
                .iter()
                .enumerate()
                .filter(|(i, l)| *i != idx && !matches!(l, Literal::Pos(_)))
                .map(|(_, l)| l.clone()),
        );
        r = Rule::new(r.head.clone(), body);
    }
}
