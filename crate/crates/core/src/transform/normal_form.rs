//! Six-form normal form for nonrecursive, equation-free programs.
//!
//! The forms, with `v` distinct variables (path variables in forms 2 to 6):
//!
//! 1. `R1(v1..vn) :- R2(e1..em).`
//! 2. `R1(v1..vn, e) :- R2(v1..vn).`
//! 3. `R1(v) :- R2(x1..xk), R3(y1..yl).` with path variables `x`, `y`
//!    covering `v`
//! 4. `R1(v1..vn) :- R2(v1..vn), not R3(v'1..v'm).` with `v'` among `v`
//! 5. `R1(v'1..v'm) :- R2(v1..vn).` with `v'` among `v`
//! 6. `R(p).` for ground `p`

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{is_recursive, is_safe_rule};
use crate::expr::{Expr, Var, VarKind};
use crate::program::{Literal, Predicate, Program, Rule};

use super::{FreshNames, FreshVars, TransformError};

/// Distinct variables, one per argument, if every argument is a variable.
fn var_args(p: &Predicate) -> Option<Vec<Var>> {
    let vs: Vec<Var> = p.args.iter().map(|a| a.as_var().cloned()).collect::<Option<_>>()?;
    let set: BTreeSet<&Var> = vs.iter().collect();
    (set.len() == vs.len()).then_some(vs)
}

fn path_var_args(p: &Predicate) -> Option<Vec<Var>> {
    var_args(p).filter(|vs| vs.iter().all(Var::is_path))
}

/// The lowest-numbered form `r` matches, if any.
pub fn rule_form(r: &Rule) -> Option<u8> {
    if !is_safe_rule(r) {
        return None;
    }
    let pos: Vec<&Predicate> = r.positive_predicates().collect();
    let neg: Vec<&Predicate> = r.negative_predicates().collect();
    if pos.len() + neg.len() != r.body.len() {
        return None;
    }
    let head_vars = var_args(&r.head);
    let head_path_vars = path_var_args(&r.head);
    let subset = |a: &[Var], b: &[Var]| a.iter().all(|v| b.contains(v));
    match (pos.as_slice(), neg.as_slice()) {
        ([], []) => r.head.args.iter().all(Expr::is_ground).then_some(6),
        ([_], []) if head_vars.is_some() => Some(1),
        ([p], []) => {
            let v = path_var_args(p)?;
            let n = v.len();
            let head = &r.head.args;
            let prefix_ok = head.len() == n + 1 && head[..n].iter().zip(&v).all(|(e, x)| e.as_var() == Some(x));
            if prefix_ok {
                return Some(2);
            }
            head_path_vars.filter(|h| subset(h, &v)).map(|_| 5)
        }
        ([p, q], []) => {
            let mut xs = p.args.iter().chain(&q.args).map(|a| a.as_var().filter(|v| v.is_path()).cloned());
            let all: Vec<Var> = xs.by_ref().collect::<Option<_>>()?;
            head_path_vars.filter(|h| subset(h, &all)).map(|_| 3)
        }
        ([p], [n]) => {
            let v = path_var_args(p)?;
            let vn = path_var_args(n)?;
            (head_path_vars? == v && subset(&vn, &v)).then_some(4)
        }
        _ => None,
    }
}

/// Rewrites a nonrecursive, equation-free program so that every rule has
/// one of the six forms checked by [`rule_form`]. Strata are preserved;
/// auxiliary rules join the stratum of the rule they came from.
pub fn normalize(p: &Program) -> Result<Program, TransformError> {
    if p.rules().any(|r| r.body.iter().any(|l| matches!(l, Literal::Eq(_) | Literal::Neq(_)))) {
        return Err(TransformError::EquationsPresent);
    }
    if is_recursive(p) {
        return Err(TransformError::RecursionPresent);
    }
    let mut n = Normalizer {
        names: FreshNames::for_program(p),
        vars: FreshVars::for_program(p),
        out: Vec::new(),
    };
    let mut strata = Vec::new();
    for s in &p.strata {
        for r in s {
            n.rule(r);
        }
        strata.push(std::mem::take(&mut n.out));
    }
    Ok(Program::new(strata))
}

struct Normalizer {
    names: FreshNames,
    vars: FreshVars,
    out: Vec<Rule>,
}

fn vexprs(vs: &[Var]) -> Vec<Expr> {
    vs.iter().cloned().map(Expr::var).collect()
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut out = a.to_vec();
    out.extend(b.iter().filter(|v| !a.contains(v)).cloned());
    out
}

impl Normalizer {
    fn emit(&mut self, head: Predicate, body: Vec<Literal>) {
        self.out.push(Rule::new(head, body));
    }

    /// Joins atoms pairwise into one atom over the union of their variables.
    fn join(&mut self, mut atoms: Vec<(String, Vec<Var>)>) -> (String, Vec<Var>) {
        let mut acc = atoms.remove(0);
        for next in atoms {
            let vs = union(&acc.1, &next.1);
            let h = self.names.fresh("H");
            self.emit(
                Predicate::new(h.clone(), vexprs(&vs)),
                vec![
                    Literal::Pos(Predicate::new(acc.0, vexprs(&acc.1))),
                    Literal::Pos(Predicate::new(next.0, vexprs(&next.1))),
                ],
            );
            acc = (h, vs);
        }
        acc
    }

    /// Chain `C1(v, e1) :- base(v)`, `Ci(v, v'1..v'i-1, ei) :- Ci-1(v, v'1..v'i-1)`,
    /// returning the last relation and the fresh variables `v'`.
    fn chain(&mut self, base: &(String, Vec<Var>), exprs: &[Expr], rel: &str, var: &str) -> (String, Vec<Var>) {
        let mut cur = base.clone();
        let mut primes = Vec::new();
        for e in exprs {
            let c = self.names.fresh(rel);
            let fresh = self.vars.fresh(VarKind::Path, var);
            let mut head = vexprs(&cur.1);
            head.push(e.clone());
            self.emit(
                Predicate::new(c.clone(), head),
                vec![Literal::Pos(Predicate::new(cur.0.clone(), vexprs(&cur.1)))],
            );
            primes.push(fresh.clone());
            let mut vs = cur.1.clone();
            vs.push(fresh);
            cur = (c, vs);
        }
        (cur.0, primes)
    }

    fn rule(&mut self, r: &Rule) {
        if r.body.is_empty() && r.head.args.iter().all(Expr::is_ground) {
            self.out.push(r.clone());
            return;
        }
        self.vars.reserve_rule(r);
        // Atomic variables of the main rule become path variables.
        let taken: BTreeSet<String> = r.vars().iter().filter(|v| v.is_path()).map(|v| v.name.to_string()).collect();
        let mut to_path: BTreeMap<Var, Var> = BTreeMap::new();
        for v in r.vars().into_iter().filter(Var::is_atom) {
            let pv = if taken.contains(v.name.as_ref()) {
                self.vars.fresh(VarKind::Path, &v.name)
            } else {
                Var::path(&v.name)
            };
            to_path.insert(v, pv);
        }
        let as_path = |v: &Var| to_path.get(v).cloned().unwrap_or_else(|| v.clone());
        let rewrite = |e: &Expr| e.rename(&as_path);

        // Step 1: one atom per positive literal, then join them.
        let mut atoms = Vec::new();
        for p in r.positive_predicates() {
            let mut vs = Vec::new();
            for a in &p.args {
                a.vars_in_order(&mut vs);
            }
            if vs.is_empty() {
                let h1 = self.names.fresh("H");
                let h = self.names.fresh("H");
                self.emit(Predicate::new(h1.clone(), vec![]), vec![Literal::Pos(p.clone())]);
                self.emit(
                    Predicate::new(h.clone(), vec![Expr::constant("a")]),
                    vec![Literal::Pos(Predicate::new(h1, vec![]))],
                );
                atoms.push((h, vec![self.vars.fresh(VarKind::Path, "v")]));
                continue;
            }
            let h = self.names.fresh("H");
            self.emit(Predicate::new(h.clone(), vexprs(&vs)), vec![Literal::Pos(p.clone())]);
            atoms.push((h, vs.iter().map(as_path).collect()));
        }
        if atoms.is_empty() {
            let h = self.names.fresh("H");
            self.emit(Predicate::new(h.clone(), vec![Expr::constant("a")]), vec![]);
            atoms.push((h, vec![self.vars.fresh(VarKind::Path, "v")]));
        }
        let mut main = self.join(atoms);

        // Steps 2 and 3: isolate each negated literal behind generated
        // columns for its arguments.
        let negs: Vec<&Predicate> = r.negative_predicates().collect();
        if !negs.is_empty() {
            let mut parts = Vec::new();
            for q in negs {
                let args: Vec<Expr> = q.args.iter().map(rewrite).collect();
                let (nm, primes) = self.chain(&main, &args, "N", "n");
                let mut full = main.1.clone();
                full.extend(primes.iter().cloned());
                let fname = self.names.fresh("FN");
                self.emit(
                    Predicate::new(fname.clone(), vexprs(&full)),
                    vec![
                        Literal::Pos(Predicate::new(nm, vexprs(&full))),
                        Literal::Neg(Predicate::new(q.relation.clone(), vexprs(&primes))),
                    ],
                );
                let hn = self.names.fresh("HN");
                self.emit(
                    Predicate::new(hn.clone(), vexprs(&main.1)),
                    vec![Literal::Pos(Predicate::new(fname, vexprs(&full)))],
                );
                parts.push((hn, main.1.clone()));
            }
            main = self.join(parts);
        }

        // Step 4: build the head expressions one column at a time, unless
        // the head is already a list of distinct path variables.
        let head_args: Vec<Expr> = r.head.args.iter().map(rewrite).collect();
        let head = Predicate::new(r.head.relation.clone(), head_args.clone());
        if path_var_args(&head).is_some() {
            self.emit(head, vec![Literal::Pos(Predicate::new(main.0, vexprs(&main.1)))]);
            return;
        }
        let (tm, primes) = self.chain(&main, &head_args, &r.head.relation, "t");
        let mut full = main.1.clone();
        full.extend(primes.iter().cloned());
        self.emit(
            Predicate::new(r.head.relation.clone(), vexprs(&primes)),
            vec![Literal::Pos(Predicate::new(tm, vexprs(&full)))],
        );
    }
}
