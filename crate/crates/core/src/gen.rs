//! Random generators for instances, equations, programs and algebra plans,
//! used by property tests and the randomized harness.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::{check_program, is_safe_rule};
use crate::expr::{Expr, Token, Var};
use crate::program::{Equation, Literal, Predicate, Program, Rule};
use crate::sra::{col_expr, AlgebraExpr};
use crate::unify::is_one_sided_nonlinear;
use crate::value::{Instance, Path, Value};

/// Shape of random instances.
#[derive(Clone, Debug)]
pub struct InstanceShape {
    pub alphabet: Vec<String>,
    pub max_facts: usize,
    pub max_len: usize,
    /// Chance that a position holds a packed value; 0 gives flat instances.
    pub packed_prob: f64,
    pub max_depth: usize,
}

impl InstanceShape {
    /// Flat instances over `alphabet_size` symbols `a, b, c, ...`.
    pub fn flat(alphabet_size: usize, max_facts: usize, max_len: usize) -> InstanceShape {
        InstanceShape {
            alphabet: (0..alphabet_size).map(|i| ((b'a' + i as u8) as char).to_string()).collect(),
            max_facts,
            max_len,
            packed_prob: 0.0,
            max_depth: 0,
        }
    }

    pub fn with_packing(mut self, prob: f64, depth: usize) -> InstanceShape {
        self.packed_prob = prob;
        self.max_depth = depth;
        self
    }
}

pub fn random_path<R: Rng>(rng: &mut R, shape: &InstanceShape, depth: usize) -> Path {
    let len = rng.gen_range(0..=shape.max_len);
    (0..len)
        .map(|_| {
            if depth < shape.max_depth && rng.gen_bool(shape.packed_prob) {
                let mut inner = shape.clone();
                inner.max_len = shape.max_len.min(3);
                Value::packed(random_path(rng, &inner, depth + 1))
            } else {
                Value::atom(shape.alphabet.choose(rng).expect("nonempty alphabet"))
            }
        })
        .collect()
}

/// Up to `max_facts` facts spread over the relations of `schema`.
pub fn random_instance<R: Rng>(rng: &mut R, schema: &BTreeMap<String, usize>, shape: &InstanceShape) -> Instance {
    let mut i = Instance::new();
    if schema.is_empty() {
        return i;
    }
    let names: Vec<&String> = schema.keys().collect();
    for name in &names {
        i.relation_mut(name, schema[*name]).expect("fresh relation");
    }
    let n = rng.gen_range(0..=shape.max_facts);
    for _ in 0..n {
        let name = *names.choose(rng).unwrap();
        let t = (0..schema[name]).map(|_| random_path(rng, shape, 0)).collect();
        i.insert(name, t).expect("arity from schema");
    }
    i
}

/// Input schema of a program: its EDB relations with their arities.
pub fn edb_schema(p: &Program) -> BTreeMap<String, usize> {
    let arities = p.arities();
    p.edb_names().into_iter().map(|n| {
        let a = arities[&n];
        (n, a)
    }).collect()
}

/// Shape of random equations.
#[derive(Clone, Debug)]
pub struct EquationShape {
    pub alphabet: Vec<String>,
    pub max_vars: usize,
    pub max_tokens: usize,
    pub max_depth: usize,
}

impl Default for EquationShape {
    fn default() -> EquationShape {
        EquationShape {
            alphabet: vec!["a".into(), "b".into()],
            max_vars: 4,
            max_tokens: 6,
            max_depth: 1,
        }
    }
}

fn random_side<R: Rng>(rng: &mut R, shape: &EquationShape, vars: &[Var], depth: usize, len: usize) -> Expr {
    (0..len)
        .map(|_| {
            let roll = rng.gen_range(0..10);
            if roll < 2 || vars.is_empty() {
                Token::constant(shape.alphabet.choose(rng).unwrap())
            } else if roll < 3 && depth < shape.max_depth {
                let inner = rng.gen_range(0..=2);
                Token::Packed(random_side(rng, shape, vars, depth + 1, inner))
            } else {
                Token::Var(vars.choose(rng).unwrap().clone())
            }
        })
        .collect()
}

/// A side using each of `vars` exactly once, padded with constants up to
/// `len` tokens; a run of tokens may be packed.
fn linear_side<R: Rng>(rng: &mut R, shape: &EquationShape, vars: &[Var], len: usize) -> Expr {
    let mut items: Vec<Token> = vars.iter().cloned().map(Token::Var).collect();
    while items.len() < len {
        items.push(Token::constant(shape.alphabet.choose(rng).unwrap()));
    }
    items.shuffle(rng);
    if shape.max_depth > 0 && !items.is_empty() && rng.gen_bool(0.3) {
        let from = rng.gen_range(0..items.len());
        let to = rng.gen_range(from..=items.len().min(from + 2));
        let inner: Vec<Token> = items.drain(from..to).collect();
        items.insert(from, Token::Packed(Expr::new(inner)));
    }
    Expr::new(items)
}

/// A random one-sided nonlinear equation: one side may repeat its
/// variables, the other uses disjoint variables once each.
pub fn random_one_sided_equation<R: Rng>(rng: &mut R, shape: &EquationShape) -> Equation {
    let names = ["x", "y", "z", "u", "v", "w"];
    loop {
        let nv = rng.gen_range(1..=shape.max_vars);
        let vars: Vec<Var> = (0..nv)
            .map(|i| {
                let name = names[i % names.len()];
                if rng.gen_bool(0.3) {
                    Var::atom(name)
                } else {
                    Var::path(name)
                }
            })
            .collect();
        let split = rng.gen_range(0..=nv);
        let (linear, free) = vars.split_at(split);
        let linear_len = rng.gen_range(linear.len()..=shape.max_tokens.max(linear.len()));
        if linear_len > shape.max_tokens {
            continue;
        }
        let lin = linear_side(rng, shape, linear, linear_len);
        let free_len = rng.gen_range(1..=shape.max_tokens);
        let other = random_side(rng, shape, free, 0, free_len);
        let eq = if rng.gen_bool(0.5) { Equation::new(lin, other) } else { Equation::new(other, lin) };
        if is_one_sided_nonlinear(&eq) {
            return eq;
        }
    }
}

/// A small random single-stratum program over unary relations: inputs
/// `R`, `Q`, derived `S`, `T`. Negation only touches inputs, and every
/// variable occurs in a positive predicate.
pub fn random_semipositive_program<R: Rng>(rng: &mut R, max_rules: usize, max_vars: usize) -> Program {
    let consts = ["a", "b"];
    loop {
        let n = rng.gen_range(1..=max_rules);
        let mut rules = Vec::new();
        for _ in 0..n {
            let nv = rng.gen_range(1..=max_vars);
            let vars: Vec<Var> = (0..nv)
                .map(|i| {
                    let name = ["x", "y"][i % 2];
                    if rng.gen_bool(0.25) {
                        Var::atom(name)
                    } else {
                        Var::path(name)
                    }
                })
                .collect();
            let expr = |rng: &mut R, len: usize| -> Expr {
                (0..len)
                    .map(|_| {
                        if rng.gen_bool(0.25) {
                            Token::constant(consts.choose(rng).unwrap())
                        } else {
                            Token::Var(vars.choose(rng).unwrap().clone())
                        }
                    })
                    .collect()
            };
            let mut body = Vec::new();
            for k in 0..rng.gen_range(1..=2) {
                let rel = if k == 0 { ["R", "Q"].choose(rng) } else { ["R", "Q", "S", "T"].choose(rng) }.unwrap();
                let len = if k == 0 { rng.gen_range(1..=2) } else { rng.gen_range(1..=3) };
                body.push(Literal::Pos(Predicate::new(*rel, vec![expr(rng, len)])));
            }
            if rng.gen_bool(0.3) {
                let rel = ["R", "Q"].choose(rng).unwrap();
                let len = rng.gen_range(1..=2);
                body.push(Literal::Neg(Predicate::new(*rel, vec![expr(rng, len)])));
            }
            if rng.gen_bool(0.3) {
                let (l1, l2) = (rng.gen_range(0..=2), rng.gen_range(1..=2));
                let eq = Equation::new(expr(rng, l1), expr(rng, l2));
                body.push(if rng.gen_bool(0.5) { Literal::Eq(eq) } else { Literal::Neq(eq) });
            }
            let hl = rng.gen_range(0..=3);
            let head = Predicate::new(*["S", "T"].choose(rng).unwrap(), vec![expr(rng, hl)]);
            rules.push(Rule::new(head, body));
        }
        let every_var_positive = rules.iter().all(|r| {
            let mut pos = BTreeSet::new();
            for p in r.positive_predicates() {
                p.collect_vars(&mut pos);
            }
            r.vars().is_subset(&pos)
        });
        let p = Program::single(rules);
        if every_var_positive && p.rules().all(is_safe_rule) && check_program(&p).is_ok() {
            return p;
        }
    }
}

/// A random algebra plan over `schema` (relation name to arity), at most
/// `depth` operators deep, keeping arities at most 3.
pub fn random_algebra_expr<R: Rng>(rng: &mut R, schema: &BTreeMap<String, usize>, depth: usize) -> (AlgebraExpr, usize) {
    let leaf = |rng: &mut R| {
        let (name, a) = schema.iter().collect::<Vec<_>>().choose(rng).map(|(n, a)| ((*n).clone(), **a)).unwrap();
        (AlgebraExpr::rel_with_arity(&name, a), a)
    };
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    let (child, n) = random_algebra_expr(rng, schema, depth - 1);
    let colx = |rng: &mut R, n: usize| col_expr(rng.gen_range(1..=n));
    match rng.gen_range(0..8) {
        0 if n > 0 => {
            let lhs = colx(rng, n);
            let rhs = if rng.gen_bool(0.5) {
                colx(rng, n)
            } else {
                Expr::constant("a").concat(&colx(rng, n))
            };
            (child.select(lhs, rhs), n)
        }
        1 if n > 0 => {
            let k = rng.gen_range(1..=2);
            let exprs = (0..k)
                .map(|_| match rng.gen_range(0..3) {
                    0 => colx(rng, n),
                    1 => colx(rng, n).concat(&Expr::constant("b")),
                    _ => Expr::packed(colx(rng, n)),
                })
                .collect();
            (child.project(exprs), k)
        }
        2 if n > 0 => {
            let c = rng.gen_range(1..=n);
            (child.unpack(c), n)
        }
        3 if n > 0 && n < 3 => {
            let c = rng.gen_range(1..=n);
            (child.sub(c), n + 1)
        }
        4 | 5 => {
            let (other, m) = random_algebra_expr(rng, schema, depth - 1);
            if m == n {
                if rng.gen_bool(0.5) {
                    (child.union(other), n)
                } else {
                    (child.diff(other), n)
                }
            } else {
                (child, n)
            }
        }
        6 => {
            let (other, m) = random_algebra_expr(rng, schema, depth - 1);
            if n + m <= 3 {
                (child.product(other), n + m)
            } else {
                (child, n)
            }
        }
        _ => (child, n),
    }
}
