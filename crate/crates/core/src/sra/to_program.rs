//! Translation of algebra expressions back into nonrecursive programs.

use std::collections::BTreeMap;

use crate::expr::{Expr, Var};
use crate::program::{Equation, Literal, Predicate, Program, Rule};
use crate::transform::FreshNames;

use super::{AlgebraExpr, SraError};

/// A nonrecursive program whose `output` relation equals `eval(e, ·)`.
/// One auxiliary relation per operator node, each in its own stratum;
/// `arities` supplies relations whose arity the expression leaves open.
pub fn to_program(e: &AlgebraExpr, output: &str, arities: &BTreeMap<String, usize>) -> Result<Program, SraError> {
    let env = super::arity_env(arities);
    e.arity(&env)?;
    let mut names = FreshNames::default();
    names.reserve(output);
    collect_rel_names(e, &mut names);
    let mut strata = Vec::new();
    let (top, n) = emit(e, &env, &mut names, &mut strata)?;
    let vs = vars(n, "x");
    strata.push(vec![Rule::new(pred(output, &vs), vec![Literal::Pos(pred(&top, &vs))])]);
    Ok(Program::new(strata))
}

fn collect_rel_names(e: &AlgebraExpr, names: &mut FreshNames) {
    use AlgebraExpr::*;
    match e {
        Rel { name, .. } => names.reserve(name),
        Const { .. } => {}
        Select { child, .. } | Project { child, .. } | Unpack { child, .. } | Sub { child, .. } => {
            collect_rel_names(child, names)
        }
        Union(l, r) | Diff(l, r) | Product(l, r) => {
            collect_rel_names(l, names);
            collect_rel_names(r, names);
        }
    }
}

fn vars(n: usize, base: &str) -> Vec<Var> {
    (1..=n).map(|i| Var::path(&format!("{base}{i}"))).collect()
}

fn pred(rel: &str, vs: &[Var]) -> Predicate {
    Predicate::new(rel, vs.iter().cloned().map(Expr::var).collect())
}

/// Column variables `$1..$n` renamed to the rule variables `vs`.
fn rename_cols(e: &Expr, vs: &[Var]) -> Expr {
    e.substitute(&|v| {
        let i: usize = v.name.parse().ok()?;
        (v.is_path() && i >= 1 && i <= vs.len()).then(|| Expr::var(vs[i - 1].clone()))
    })
}

/// Emits rules for `e` and returns the relation holding its value.
fn emit(
    e: &AlgebraExpr,
    env: &dyn Fn(&str) -> Option<usize>,
    names: &mut FreshNames,
    strata: &mut Vec<Vec<Rule>>,
) -> Result<(String, usize), SraError> {
    use AlgebraExpr::*;
    let n = e.arity(env)?;
    let out = |names: &mut FreshNames| names.fresh("E");
    let rules = match e {
        Rel { name, .. } => return Ok((name.clone(), n)),
        Const { tuples, .. } => {
            let me = out(names);
            let rules: Vec<Rule> = tuples
                .iter()
                .map(|t| Rule::fact(Predicate::new(me.clone(), t.iter().map(Expr::from_path).collect())))
                .collect();
            strata.push(rules);
            return Ok((me, n));
        }
        Select { lhs, rhs, child } => {
            let (c, k) = emit(child, env, names, strata)?;
            let vs = vars(k, "x");
            let me = out(names);
            vec![Rule::new(
                pred(&me, &vs),
                vec![
                    Literal::Pos(pred(&c, &vs)),
                    Literal::Eq(Equation::new(rename_cols(lhs, &vs), rename_cols(rhs, &vs))),
                ],
            )]
            .into_iter()
            .map(|r| (me.clone(), r))
            .collect::<Vec<_>>()
        }
        Project { exprs, child } => {
            let (c, k) = emit(child, env, names, strata)?;
            let vs = vars(k, "x");
            let me = out(names);
            let head = Predicate::new(me.clone(), exprs.iter().map(|x| rename_cols(x, &vs)).collect());
            vec![(me, Rule::new(head, vec![Literal::Pos(pred(&c, &vs))]))]
        }
        Unpack { col: i, child } => {
            let (c, k) = emit(child, env, names, strata)?;
            let vs = vars(k, "x");
            let me = out(names);
            let mut body_args: Vec<Expr> = vs.iter().cloned().map(Expr::var).collect();
            body_args[i - 1] = Expr::packed(Expr::var(vs[i - 1].clone()));
            vec![(me.clone(), Rule::new(pred(&me, &vs), vec![Literal::Pos(Predicate::new(c, body_args))]))]
        }
        Sub { col: i, child } => {
            let (c, k) = emit(child, env, names, strata)?;
            let vs = vars(k, "x");
            let me = out(names);
            let (u, s, v) = (Var::path("u"), Var::path("s"), Var::path("v"));
            let mut head = vs.clone();
            head.push(s.clone());
            let split = Expr::concat_all([&Expr::var(u), &Expr::var(s), &Expr::var(v)]);
            vec![(
                me.clone(),
                Rule::new(
                    pred(&me, &head),
                    vec![
                        Literal::Pos(pred(&c, &vs)),
                        Literal::Eq(Equation::new(Expr::var(vs[i - 1].clone()), split)),
                    ],
                ),
            )]
        }
        Union(l, r) | Diff(l, r) | Product(l, r) => {
            let (a, ka) = emit(l, env, names, strata)?;
            let (b, kb) = emit(r, env, names, strata)?;
            let me = out(names);
            match e {
                Union(..) => {
                    let vs = vars(n, "x");
                    vec![
                        (me.clone(), Rule::new(pred(&me, &vs), vec![Literal::Pos(pred(&a, &vs))])),
                        (me.clone(), Rule::new(pred(&me, &vs), vec![Literal::Pos(pred(&b, &vs))])),
                    ]
                }
                Diff(..) => {
                    let vs = vars(n, "x");
                    vec![(
                        me.clone(),
                        Rule::new(pred(&me, &vs), vec![Literal::Pos(pred(&a, &vs)), Literal::Neg(pred(&b, &vs))]),
                    )]
                }
                _ => {
                    let xs = vars(ka, "x");
                    let ys = vars(kb, "y");
                    let mut all = xs.clone();
                    all.extend(ys.iter().cloned());
                    vec![(
                        me.clone(),
                        Rule::new(pred(&me, &all), vec![Literal::Pos(pred(&a, &xs)), Literal::Pos(pred(&b, &ys))]),
                    )]
                }
            }
        }
    };
    let me = rules[0].0.clone();
    strata.push(rules.into_iter().map(|(_, r)| r).collect());
    Ok((me, n))
}
