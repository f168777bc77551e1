//! Compilation of nonrecursive programs into algebra expressions, through
//! the six-form normal form.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::analysis::{is_recursive, DependencyGraph};
use crate::expr::{Expr, Token, Var};
use crate::program::{Predicate, Program, Rule};
use crate::transform::{eliminate_equations, normalize, TransformError};

use super::{col_expr, AlgebraExpr, SraError};

/// Restricts column `col` of `child` (of arity `arity`) to values that are a
/// single atom: nonempty, not splittable into two nonempty parts, and not a
/// single packed value.
pub fn atomic_filter_plan(col: usize, child: AlgebraExpr, arity: usize) -> AlgebraExpr {
    let keep: Vec<Expr> = (1..=arity).map(col_expr).collect();
    let child = Arc::new(child);
    let shared = |e: &Arc<AlgebraExpr>| AlgebraExpr::clone(e);
    let nonempty = shared(&child).diff(shared(&child).select(col_expr(col), Expr::empty()));
    // Two nonempty substrings whose concatenation is the column.
    let first = shared(&child).sub(col);
    let first = Arc::new(first);
    let first_ne = shared(&first).diff(shared(&first).select(col_expr(arity + 1), Expr::empty()));
    let second = Arc::new(first_ne.sub(col));
    let second_ne = shared(&second).diff(shared(&second).select(col_expr(arity + 2), Expr::empty()));
    let decomposable = second_ne
        .select(col_expr(col), col_expr(arity + 1).concat(&col_expr(arity + 2)))
        .project(keep.clone());
    let mut dup = keep.clone();
    dup.push(col_expr(col));
    let packed = shared(&child).project(dup).unpack(arity + 1).project(keep);
    nonempty.diff(decomposable).diff(packed)
}

/// Compiles the query of `p` at relation `t` into one algebra expression.
pub fn compile(p: &Program, t: &str) -> Result<AlgebraExpr, SraError> {
    if is_recursive(p) {
        return Err(TransformError::RecursionPresent.into());
    }
    if !p.idb_names().contains(t) {
        return Err(SraError::NotIdb(t.to_owned()));
    }
    let q = normalize(&eliminate_equations(p))?;
    let mut arities = q.arities();
    for (k, v) in p.arities() {
        arities.entry(k).or_insert(v);
    }
    let original = p.idb_names();
    let idb = q.idb_names();
    let mut env: BTreeMap<String, Arc<AlgebraExpr>> = BTreeMap::new();
    for name in DependencyGraph::new(&q).dependency_order() {
        if !idb.contains(&name) {
            continue;
        }
        let arity = arities[&name];
        let mut parts: Vec<AlgebraExpr> = Vec::new();
        if original.contains(&name) {
            // Facts given in the input for a derived relation are kept.
            parts.push(AlgebraExpr::rel_with_arity(&name, arity));
        }
        for r in q.rules_for(&name) {
            parts.push(translate(r, &env)?);
        }
        let e = parts.into_iter().reduce(AlgebraExpr::union).unwrap_or(AlgebraExpr::Const {
            arity,
            tuples: BTreeSet::new(),
        });
        env.insert(name, Arc::new(e));
    }
    Ok(env[t].as_ref().clone())
}

fn leaf(p: &Predicate, env: &BTreeMap<String, Arc<AlgebraExpr>>) -> AlgebraExpr {
    match env.get(&p.relation) {
        Some(e) => e.as_ref().clone(),
        None => AlgebraExpr::rel_with_arity(&p.relation, p.arity()),
    }
}

fn distinct_path_vars(p: &Predicate) -> Option<Vec<Var>> {
    let vs: Vec<Var> = p.args.iter().map(|a| a.as_var().filter(|v| v.is_path()).cloned()).collect::<Option<_>>()?;
    let set: BTreeSet<&Var> = vs.iter().collect();
    (set.len() == vs.len()).then_some(vs)
}

/// Replaces variables by the column expressions given in `cols`.
fn over_columns(e: &Expr, cols: &BTreeMap<Var, usize>) -> Expr {
    e.substitute(&|v| cols.get(v).map(|&i| col_expr(i)))
}

fn translate(r: &Rule, env: &BTreeMap<String, Arc<AlgebraExpr>>) -> Result<AlgebraExpr, SraError> {
    let pos: Vec<&Predicate> = r.positive_predicates().collect();
    let neg: Vec<&Predicate> = r.negative_predicates().collect();
    let head_over = |cols: &BTreeMap<Var, usize>| r.head.args.iter().map(|a| over_columns(a, cols)).collect();
    match (pos.as_slice(), neg.as_slice()) {
        ([], []) => {
            let row: Option<Vec<_>> = r.head.args.iter().map(Expr::to_path).collect();
            let row = row.ok_or_else(|| SraError::NotNormal(r.to_string()))?;
            Ok(AlgebraExpr::Const {
                arity: row.len(),
                tuples: [row].into(),
            })
        }
        ([p], []) => match distinct_path_vars(p) {
            Some(vs) => {
                let cols = vs.into_iter().enumerate().map(|(i, v)| (v, i + 1)).collect();
                Ok(leaf(p, env).project(head_over(&cols)))
            }
            None => extraction(r, p, env),
        },
        ([p, q], []) => {
            let mut e = leaf(p, env).product(leaf(q, env));
            let mut cols: BTreeMap<Var, usize> = BTreeMap::new();
            for (i, a) in p.args.iter().chain(&q.args).enumerate() {
                let v = a.as_var().filter(|v| v.is_path()).ok_or_else(|| SraError::NotNormal(r.to_string()))?;
                match cols.get(v) {
                    Some(&j) => e = e.select(col_expr(j), col_expr(i + 1)),
                    None => {
                        cols.insert(v.clone(), i + 1);
                    }
                }
            }
            Ok(e.project(head_over(&cols)))
        }
        ([p], [q]) => {
            let vs = distinct_path_vars(p).ok_or_else(|| SraError::NotNormal(r.to_string()))?;
            let n = vs.len();
            let cols: BTreeMap<Var, usize> = vs.iter().cloned().enumerate().map(|(i, v)| (v, i + 1)).collect();
            let pos_side = Arc::new(leaf(p, env));
            let mut blocked = AlgebraExpr::clone(&pos_side).product(leaf(q, env));
            for (j, a) in q.args.iter().enumerate() {
                blocked = blocked.select(over_columns(a, &cols), col_expr(n + j + 1));
            }
            let blocked = blocked.project((1..=n).map(col_expr).collect());
            Ok(AlgebraExpr::clone(&pos_side).diff(blocked).project(head_over(&cols)))
        }
        _ => Err(SraError::NotNormal(r.to_string())),
    }
}

/// First occurrence of `v` in `e` and the number of packings around it.
fn depth_of(e: &Expr, v: &Var) -> Option<usize> {
    for t in e.tokens() {
        match t {
            Token::Var(w) if w == v => return Some(0),
            Token::Packed(inner) => {
                if let Some(d) = depth_of(inner, v) {
                    return Some(d + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Form 1: every variable gets a candidate column generated from the
/// argument holding its first occurrence (substrings, opened packings, and
/// substrings again down to the occurrence's depth); the arguments are then
/// checked against the candidates.
fn extraction(r: &Rule, p: &Predicate, env: &BTreeMap<String, Arc<AlgebraExpr>>) -> Result<AlgebraExpr, SraError> {
    let mut e = leaf(p, env);
    let m = p.arity();
    let mut n = m;
    let mut cols: BTreeMap<Var, usize> = BTreeMap::new();
    let mut order = Vec::new();
    for a in &p.args {
        a.vars_in_order(&mut order);
    }
    for v in order {
        let (j, d) = p
            .args
            .iter()
            .enumerate()
            .find_map(|(j, a)| depth_of(a, &v).map(|d| (j + 1, d)))
            .expect("variable occurs in the predicate");
        let c = if p.args[j - 1].as_var() == Some(&v) {
            j
        } else {
            let mut src = j;
            for _ in 0..d {
                e = e.sub(src).unpack(n + 1);
                n += 1;
                src = n;
            }
            e = e.sub(src);
            n += 1;
            n
        };
        if v.is_atom() {
            e = atomic_filter_plan(c, e, n);
        }
        cols.insert(v, c);
    }
    for (j, a) in p.args.iter().enumerate() {
        if a.as_var().is_some_and(|v| cols.get(v) == Some(&(j + 1))) {
            continue;
        }
        e = e.select(over_columns(a, &cols), col_expr(j + 1));
    }
    let head: Vec<Expr> = r.head.args.iter().map(|a| over_columns(a, &cols)).collect();
    if head.iter().any(|h| !h.vars().iter().all(|v| super::column_index(v).is_some())) {
        return Err(SraError::NotNormal(r.to_string()));
    }
    Ok(e.project(head))
}
