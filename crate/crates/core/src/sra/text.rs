//! S-expression text format for plans, e.g.
//! `(project ($1/$2) (product (rel R) (sub 1 (rel S))))`.
//!
//! Forms: `(rel R)`, `(rel R 2)`, `(const 2 (a, b/c) (!, d))`,
//! `(select E = E child)`, `(project (E, ...) child)`, `(unpack i child)`,
//! `(sub i child)`, `(union l r)`, `(diff l r)`, `(product l r)`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::expr::Expr;
use crate::syntax::{parse_equation, parse_expr, parse_path};

use super::{AlgebraExpr, SraError};

pub fn print_plan(e: &AlgebraExpr) -> String {
    let mut out = String::new();
    write_plan(e, &mut out);
    out
}

fn join_exprs(es: &[Expr]) -> String {
    es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

fn write_plan(e: &AlgebraExpr, out: &mut String) {
    use AlgebraExpr::*;
    match e {
        Rel { name, arity: None } => write!(out, "(rel {name})").unwrap(),
        Rel { name, arity: Some(n) } => write!(out, "(rel {name} {n})").unwrap(),
        Const { arity, tuples } => {
            write!(out, "(const {arity}").unwrap();
            for t in tuples {
                let row: Vec<String> = t.iter().map(|p| p.to_string()).collect();
                write!(out, " ({})", row.join(", ")).unwrap();
            }
            out.push(')');
        }
        Select { lhs, rhs, child } => {
            write!(out, "(select {lhs} = {rhs} ").unwrap();
            write_plan(child, out);
            out.push(')');
        }
        Project { exprs, child } => {
            write!(out, "(project ({}) ", join_exprs(exprs)).unwrap();
            write_plan(child, out);
            out.push(')');
        }
        Unpack { col, child } | Sub { col, child } => {
            let op = if matches!(e, Unpack { .. }) { "unpack" } else { "sub" };
            write!(out, "({op} {col} ").unwrap();
            write_plan(child, out);
            out.push(')');
        }
        Union(l, r) | Diff(l, r) | Product(l, r) => {
            let op = match e {
                Union(..) => "union",
                Diff(..) => "diff",
                _ => "product",
            };
            write!(out, "({op} ").unwrap();
            write_plan(l, out);
            out.push(' ');
            write_plan(r, out);
            out.push(')');
        }
    }
}

pub fn parse_plan(text: &str) -> Result<AlgebraExpr, SraError> {
    let mut p = PlanParser { s: text.as_bytes(), text, pos: 0 };
    let e = p.node()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct PlanParser<'a> {
    s: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl PlanParser<'_> {
    fn err(&self, message: impl Into<String>) -> SraError {
        SraError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), SraError> {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn word(&mut self) -> Result<&str, SraError> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a word"));
        }
        Ok(&self.text[start..self.pos])
    }

    fn number(&mut self) -> Result<usize, SraError> {
        let w = self.word()?.to_owned();
        w.parse().map_err(|_| SraError::Parse {
            offset: self.pos,
            message: format!("expected a number, found `{w}`"),
        })
    }

    /// Raw text up to (not including) the next `stop` byte.
    fn until(&mut self, stop: u8) -> Result<&str, SraError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != stop {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err(self.err(format!("missing `{}`", stop as char)));
        }
        Ok(&self.text[start..self.pos])
    }

    fn list(&mut self) -> Result<Vec<String>, SraError> {
        self.expect(b'(')?;
        let raw = self.until(b')')?.trim().to_owned();
        self.pos += 1;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        Ok(raw.split(',').map(|x| x.trim().to_owned()).collect())
    }

    fn child(&mut self) -> Result<Arc<AlgebraExpr>, SraError> {
        Ok(Arc::new(self.node()?))
    }

    fn node(&mut self) -> Result<AlgebraExpr, SraError> {
        self.expect(b'(')?;
        let op = self.word()?.to_owned();
        let at = self.pos;
        let bad = |m: String| SraError::Parse { offset: at, message: m };
        let e = match op.as_str() {
            "rel" => {
                let name = self.word()?.to_owned();
                self.ws();
                let arity = if self.s.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    Some(self.number()?)
                } else {
                    None
                };
                AlgebraExpr::Rel { name, arity }
            }
            "const" => {
                let arity = self.number()?;
                let mut tuples = BTreeSet::new();
                loop {
                    self.ws();
                    if self.s.get(self.pos) != Some(&b'(') {
                        break;
                    }
                    let row = self.list()?;
                    let row = row.iter().map(|x| parse_path(x)).collect::<Result<Vec<_>, _>>();
                    tuples.insert(row.map_err(|e| bad(e.to_string()))?);
                }
                AlgebraExpr::Const { arity, tuples }
            }
            "select" => {
                let raw = self.until(b'(')?.to_owned();
                let eq = parse_equation(raw.trim()).map_err(|e| bad(e.to_string()))?;
                AlgebraExpr::Select {
                    lhs: eq.lhs,
                    rhs: eq.rhs,
                    child: self.child()?,
                }
            }
            "project" => {
                let items = self.list()?;
                let exprs = items.iter().map(|x| parse_expr(x)).collect::<Result<Vec<_>, _>>();
                AlgebraExpr::Project {
                    exprs: exprs.map_err(|e| bad(e.to_string()))?,
                    child: self.child()?,
                }
            }
            "unpack" => AlgebraExpr::Unpack {
                col: self.number()?,
                child: self.child()?,
            },
            "sub" => AlgebraExpr::Sub {
                col: self.number()?,
                child: self.child()?,
            },
            "union" => AlgebraExpr::Union(self.child()?, self.child()?),
            "diff" => AlgebraExpr::Diff(self.child()?, self.child()?),
            "product" => AlgebraExpr::Product(self.child()?, self.child()?),
            other => return Err(bad(format!("unknown operator `{other}`"))),
        };
        self.expect(b')')?;
        Ok(e)
    }
}
