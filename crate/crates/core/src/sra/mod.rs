//! Sequence relational algebra: relations of path tuples under generalized
//! selection and projection (path expressions over columns `$1..$n`), set
//! operations, product, and two extraction operators: `unpack` opens a
//! column holding a single packed value and `sub` appends every contiguous
//! subsequence of a column.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, Valuation, Var};
use crate::transform::TransformError;
use crate::value::{Instance, Path, Relation, Tuple, Value};

mod compile;
mod text;
mod to_program;

pub use compile::{atomic_filter_plan, compile};
pub use text::{parse_plan, print_plan};
pub use to_program::to_program;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SraError {
    #[error("relation {0} is not in the instance and has no declared arity")]
    UnknownRelation(String),
    #[error("{op}: arity {found} where {expected} was expected")]
    Arity { op: &'static str, expected: usize, found: usize },
    #[error("{op}: column ${col} is out of range for arity {arity}")]
    Column { op: &'static str, col: usize, arity: usize },
    #[error("{op}: `{expr}` may only use column variables $1..$n")]
    ColumnExpr { op: &'static str, expr: String },
    #[error("plan syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("{0} is not an IDB relation of the program")]
    NotIdb(String),
    #[error("rule outside the normal form: {0}")]
    NotNormal(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// An algebra expression. Children are shared so that compiled plans can
/// reuse subexpressions without copying them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlgebraExpr {
    /// A relation of the input; `arity` is needed when the input may lack it.
    Rel { name: String, arity: Option<usize> },
    Const { arity: usize, tuples: BTreeSet<Tuple> },
    Select { lhs: Expr, rhs: Expr, child: Arc<AlgebraExpr> },
    Project { exprs: Vec<Expr>, child: Arc<AlgebraExpr> },
    /// Column indexes are 1-based, like the column variables.
    Unpack { col: usize, child: Arc<AlgebraExpr> },
    Sub { col: usize, child: Arc<AlgebraExpr> },
    Union(Arc<AlgebraExpr>, Arc<AlgebraExpr>),
    Diff(Arc<AlgebraExpr>, Arc<AlgebraExpr>),
    Product(Arc<AlgebraExpr>, Arc<AlgebraExpr>),
}

/// The column variable `$i`.
pub fn col(i: usize) -> Var {
    Var::path(&i.to_string())
}

pub fn col_expr(i: usize) -> Expr {
    Expr::var(col(i))
}

fn column_index(v: &Var) -> Option<usize> {
    if !v.is_path() {
        return None;
    }
    v.name.parse::<usize>().ok().filter(|&i| i > 0)
}

fn check_columns(op: &'static str, exprs: &[&Expr], arity: usize) -> Result<(), SraError> {
    for e in exprs {
        for v in e.vars() {
            match column_index(&v) {
                Some(i) if i <= arity => {}
                Some(i) => return Err(SraError::Column { op, col: i, arity }),
                None => {
                    return Err(SraError::ColumnExpr {
                        op,
                        expr: e.to_string(),
                    })
                }
            }
        }
    }
    Ok(())
}

impl AlgebraExpr {
    pub fn rel(name: &str) -> AlgebraExpr {
        AlgebraExpr::Rel {
            name: name.to_owned(),
            arity: None,
        }
    }

    pub fn rel_with_arity(name: &str, arity: usize) -> AlgebraExpr {
        AlgebraExpr::Rel {
            name: name.to_owned(),
            arity: Some(arity),
        }
    }

    pub fn select(self, lhs: Expr, rhs: Expr) -> AlgebraExpr {
        AlgebraExpr::Select {
            lhs,
            rhs,
            child: Arc::new(self),
        }
    }

    pub fn project(self, exprs: Vec<Expr>) -> AlgebraExpr {
        AlgebraExpr::Project {
            exprs,
            child: Arc::new(self),
        }
    }

    pub fn unpack(self, col: usize) -> AlgebraExpr {
        AlgebraExpr::Unpack {
            col,
            child: Arc::new(self),
        }
    }

    pub fn sub(self, col: usize) -> AlgebraExpr {
        AlgebraExpr::Sub {
            col,
            child: Arc::new(self),
        }
    }

    pub fn union(self, other: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::Union(Arc::new(self), Arc::new(other))
    }

    pub fn diff(self, other: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::Diff(Arc::new(self), Arc::new(other))
    }

    pub fn product(self, other: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::Product(Arc::new(self), Arc::new(other))
    }

    /// Static arity. `env` supplies arities of relations without a
    /// declared one.
    pub fn arity(&self, env: &dyn Fn(&str) -> Option<usize>) -> Result<usize, SraError> {
        use AlgebraExpr::*;
        Ok(match self {
            Rel { name, arity } => arity.or_else(|| env(name)).ok_or_else(|| SraError::UnknownRelation(name.clone()))?,
            Const { arity, .. } => *arity,
            Select { lhs, rhs, child } => {
                let n = child.arity(env)?;
                check_columns("select", &[lhs, rhs], n)?;
                n
            }
            Project { exprs, child } => {
                let n = child.arity(env)?;
                check_columns("project", &exprs.iter().collect::<Vec<_>>(), n)?;
                exprs.len()
            }
            Unpack { col, child } => {
                let n = child.arity(env)?;
                if *col == 0 || *col > n {
                    return Err(SraError::Column { op: "unpack", col: *col, arity: n });
                }
                n
            }
            Sub { col, child } => {
                let n = child.arity(env)?;
                if *col == 0 || *col > n {
                    return Err(SraError::Column { op: "sub", col: *col, arity: n });
                }
                n + 1
            }
            Union(l, r) | Diff(l, r) => {
                let (a, b) = (l.arity(env)?, r.arity(env)?);
                if a != b {
                    let op = if matches!(self, Union(..)) { "union" } else { "diff" };
                    return Err(SraError::Arity { op, expected: a, found: b });
                }
                a
            }
            Product(l, r) => l.arity(env)? + r.arity(env)?,
        })
    }

    /// Number of operator nodes, counting shared children once per use.
    pub fn size(&self) -> usize {
        use AlgebraExpr::*;
        match self {
            Rel { .. } | Const { .. } => 1,
            Select { child, .. } | Project { child, .. } | Unpack { child, .. } | Sub { child, .. } => 1 + child.size(),
            Union(l, r) | Diff(l, r) | Product(l, r) => 1 + l.size() + r.size(),
        }
    }
}

fn columns(t: &Tuple, vars: &[Var]) -> Valuation {
    vars.iter().cloned().zip(t.iter().cloned()).collect()
}

fn col_vars(n: usize) -> Vec<Var> {
    (1..=n).map(col).collect()
}

/// Evaluates `e` on `i` with set semantics.
pub fn eval(e: &AlgebraExpr, i: &Instance) -> Result<Relation, SraError> {
    let env = |name: &str| i.relation(name).map(Relation::arity);
    e.arity(&env)?;
    let mut memo = HashMap::new();
    Ok(eval_node(e, i, &mut memo)?.as_ref().clone())
}

type Memo = HashMap<*const AlgebraExpr, Arc<Relation>>;

fn eval_child(e: &Arc<AlgebraExpr>, i: &Instance, memo: &mut Memo) -> Result<Arc<Relation>, SraError> {
    let key = Arc::as_ptr(e);
    if let Some(r) = memo.get(&key) {
        return Ok(r.clone());
    }
    let r = eval_node(e, i, memo)?;
    memo.insert(key, r.clone());
    Ok(r)
}

fn eval_node(e: &AlgebraExpr, i: &Instance, memo: &mut Memo) -> Result<Arc<Relation>, SraError> {
    use AlgebraExpr::*;
    let out = match e {
        Rel { name, arity } => match (i.relation(name), arity) {
            (Some(r), Some(n)) if r.arity() != *n => {
                return Err(SraError::Arity { op: "rel", expected: *n, found: r.arity() })
            }
            (Some(r), _) => r.clone(),
            (None, Some(n)) => Relation::new(*n),
            (None, None) => return Err(SraError::UnknownRelation(name.clone())),
        },
        Const { arity, tuples } => {
            let mut r = Relation::new(*arity);
            for t in tuples {
                if t.len() != *arity {
                    return Err(SraError::Arity { op: "const", expected: *arity, found: t.len() });
                }
                r.insert(t.clone());
            }
            r
        }
        Select { lhs, rhs, child } => {
            let c = eval_child(child, i, memo)?;
            let vars = col_vars(c.arity());
            let mut r = Relation::new(c.arity());
            for t in c.iter() {
                let val = columns(t, &vars);
                if val.eval(lhs) == val.eval(rhs) {
                    r.insert(t.clone());
                }
            }
            r
        }
        Project { exprs, child } => {
            let c = eval_child(child, i, memo)?;
            let vars = col_vars(c.arity());
            let mut r = Relation::new(exprs.len());
            for t in c.iter() {
                let val = columns(t, &vars);
                let row: Option<Tuple> = exprs.iter().map(|x| val.eval(x)).collect();
                r.insert(row.expect("column expressions are checked"));
            }
            r
        }
        Unpack { col, child } => {
            let c = eval_child(child, i, memo)?;
            let mut r = Relation::new(c.arity());
            for t in c.iter() {
                if let Some(Value::Packed(inner)) = t[col - 1].as_single() {
                    let mut t = t.clone();
                    t[col - 1] = inner.as_ref().clone();
                    r.insert(t);
                }
            }
            r
        }
        Sub { col, child } => {
            let c = eval_child(child, i, memo)?;
            let mut r = Relation::new(c.arity() + 1);
            for t in c.iter() {
                let p = &t[col - 1];
                let mut t = t.clone();
                t.push(Path::empty());
                r.insert(t.clone());
                for from in 0..p.len() {
                    for to in from + 1..=p.len() {
                        *t.last_mut().unwrap() = p.slice(from, to);
                        r.insert(t.clone());
                    }
                }
            }
            r
        }
        Union(a, b) => {
            let (x, y) = (eval_child(a, i, memo)?, eval_child(b, i, memo)?);
            let mut r = x.as_ref().clone();
            for t in y.iter() {
                r.insert(t.clone());
            }
            r
        }
        Diff(a, b) => {
            let (x, y) = (eval_child(a, i, memo)?, eval_child(b, i, memo)?);
            x.iter().filter(|t| !y.contains(t)).cloned().fold(Relation::new(x.arity()), |mut r, t| {
                r.insert(t);
                r
            })
        }
        Product(a, b) => {
            let (x, y) = (eval_child(a, i, memo)?, eval_child(b, i, memo)?);
            let mut r = Relation::new(x.arity() + y.arity());
            for s in x.iter() {
                for t in y.iter() {
                    let mut row = s.clone();
                    row.extend(t.iter().cloned());
                    r.insert(row);
                }
            }
            r
        }
    };
    Ok(Arc::new(out))
}

/// Arity environment from a map.
pub fn arity_env(map: &BTreeMap<String, usize>) -> impl Fn(&str) -> Option<usize> + '_ {
    move |n| map.get(n).copied()
}
