//! Arity elimination by injective pair encoding.

use crate::expr::Expr;
use crate::program::{Literal, Predicate, Program, Rule};

use super::TransformError;

/// Separator constants of the pair encoding. The encoding is injective on
/// arbitrary paths, so these need not be fresh.
pub const PAIR_A: &str = "a0";
pub const PAIR_B: &str = "b0";

/// `e1·a0·e2·a0·e1·b0·e2`.
pub fn encode_pair(e1: &Expr, e2: &Expr) -> Expr {
    let a = Expr::constant(PAIR_A);
    let b = Expr::constant(PAIR_B);
    Expr::concat_all([e1, &a, e2, &a, e1, &b, e2])
}

/// Folds the argument list to a single expression by encoding the last two
/// arguments until one remains.
fn encode_args(mut args: Vec<Expr>) -> Vec<Expr> {
    while args.len() > 1 {
        let y = args.pop().unwrap();
        let x = args.pop().unwrap();
        args.push(encode_pair(&x, &y));
    }
    args
}

/// Rewrites every IDB relation of arity above one to a unary relation of the
/// same name. `output` must have arity at most one; input relations must be
/// unary (or nullary) since their tuples are not ours to re-encode.
pub fn eliminate_arity(p: &Program, output: &str) -> Result<Program, TransformError> {
    let arities = p.arities();
    if let Some(&n) = arities.get(output) {
        if n > 1 {
            return Err(TransformError::OutputArity {
                relation: output.to_owned(),
                arity: n,
            });
        }
    }
    for name in p.edb_names() {
        let n = arities[&name];
        if n > 1 {
            return Err(TransformError::InputArity { relation: name, arity: n });
        }
    }
    let idb = p.idb_names();
    let enc = |pr: &Predicate| -> Predicate {
        if idb.contains(&pr.relation) && pr.arity() > 1 {
            Predicate::new(pr.relation.clone(), encode_args(pr.args.clone()))
        } else {
            pr.clone()
        }
    };
    let strata = p
        .strata
        .iter()
        .map(|s| {
            s.iter()
                .map(|r| {
                    let body = r
                        .body
                        .iter()
                        .map(|l| match l {
                            Literal::Pos(q) => Literal::Pos(enc(q)),
                            Literal::Neg(q) => Literal::Neg(enc(q)),
                            other => other.clone(),
                        })
                        .collect();
                    Rule::new(enc(&r.head), body)
                })
                .collect()
        })
        .collect();
    Ok(Program::new(strata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_path, parse_program};

    #[test]
    fn pair_encoding_shapes() {
        let x = parse_expr("$x").unwrap();
        let e = Expr::empty();
        assert_eq!(encode_pair(&x, &e), parse_expr("$x/a0/a0/$x/b0").unwrap());
        assert_eq!(encode_pair(&e, &x), parse_expr("a0/$x/a0/b0/$x").unwrap());
        let b = Expr::constant(PAIR_B);
        assert_ne!(encode_pair(&b, &e).to_path(), encode_pair(&e, &b).to_path());
        assert_eq!(
            encode_pair(&b, &e).to_path().unwrap(),
            parse_path("b0/a0/a0/b0/b0").unwrap()
        );
    }

    #[test]
    fn reversal_becomes_unary() {
        let p = parse_program("T($x, !) :- R($x).\nT($x, $y/@u) :- T($x/@u, $y).\nS($x) :- T(!, $x).").unwrap();
        let expected = parse_program(
            "T($x/a0/a0/$x/b0) :- R($x).\n\
             T($x/a0/$y/@u/a0/$x/b0/$y/@u) :- T($x/@u/a0/$y/a0/$x/@u/b0/$y).\n\
             S($x) :- T(a0/$x/a0/b0/$x).",
        )
        .unwrap();
        assert_eq!(eliminate_arity(&p, "S").unwrap(), expected);
    }

    #[test]
    fn errors_on_wide_output_or_input() {
        let p = parse_program("S($x, $y) :- R($x), R($y).").unwrap();
        assert!(matches!(eliminate_arity(&p, "S"), Err(TransformError::OutputArity { .. })));
        let p = parse_program("S($x) :- R($x, $y).").unwrap();
        assert!(matches!(eliminate_arity(&p, "S"), Err(TransformError::InputArity { .. })));
    }
}
