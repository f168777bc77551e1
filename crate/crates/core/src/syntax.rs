//! Textual syntax for programs (`.sdl`) and instances (`.sdb`).
//!
//! ```text
//! % comment
//! S(@q/$x, !) :- R($x), N(@q).
//! T($u/<$s>/$v) :- R($u/$s/$v), S($s).
//! ---
//! A :- T($x), T($y), $x != $y, not B($x).
//! ```
//!
//! `$x` is a path variable, `@x` an atomic variable, `/` concatenation, `!`
//! the empty path and `<...>` packing. A line holding only `---` separates
//! strata.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{Expr, Token, Var, VarKind};
use crate::program::{Equation, Literal, Predicate, Program, Rule};
use crate::value::{Atom, Instance, Path};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("relation {relation} is used with arity {first} and arity {second}")]
    ArityMismatch {
        relation: String,
        first: usize,
        second: usize,
    },
    #[error("fact at line {line} is not ground")]
    NonGroundFact { line: usize },
}

/// Parser settings.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept names containing `__`, which are otherwise reserved for
    /// names generated by the transformations.
    pub allow_reserved_names: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Rel(String),
    Const(String),
    Var(VarKind, String),
    Not,
    Slash,
    Bang,
    Neq,
    Lt,
    Gt,
    Eq,
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Sep,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Rel(s) | Tok::Const(s) => format!("`{s}`"),
            Tok::Var(VarKind::Atom, s) => format!("`@{s}`"),
            Tok::Var(VarKind::Path, s) => format!("`${s}`"),
            Tok::Not => "`not`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`:-`".into(),
            Tok::Sep => "stratum separator".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str, opts: ParseOptions) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let content = match raw.find('%') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if content.trim() == "---" {
            let col = content.find('-').unwrap_or(0) + 1;
            out.push(Spanned {
                tok: Tok::Sep,
                line,
                col,
            });
            continue;
        }
        let chars: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, col });
            let take_name = |start: usize| -> (String, usize) {
                let mut j = start;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                (chars[start..j].iter().collect(), j)
            };
            match c {
                '$' | '@' => {
                    let (name, j) = take_name(i + 1);
                    if name.is_empty() {
                        return Err(syntax(line, col, format!("expected a variable name after `{c}`")));
                    }
                    if !opts.allow_reserved_names && name.contains("__") {
                        return Err(syntax(line, col, format!("name `{name}` is reserved (contains `__`)")));
                    }
                    let kind = if c == '$' { VarKind::Path } else { VarKind::Atom };
                    push(&mut out, Tok::Var(kind, name));
                    i = j;
                }
                'A'..='Z' => {
                    let (name, j) = take_name(i);
                    if !opts.allow_reserved_names && name.contains("__") {
                        return Err(syntax(line, col, format!("name `{name}` is reserved (contains `__`)")));
                    }
                    push(&mut out, Tok::Rel(name));
                    i = j;
                }
                'a'..='z' | '0'..='9' => {
                    let mut j = i;
                    while j < chars.len()
                        && (chars[j].is_ascii_lowercase() || chars[j].is_ascii_digit() || chars[j] == '_')
                    {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let mut k = j;
                    while k < chars.len() && chars[k].is_whitespace() {
                        k += 1;
                    }
                    if word == "not" && k < chars.len() && chars[k].is_ascii_uppercase() {
                        push(&mut out, Tok::Not);
                    } else {
                        push(&mut out, Tok::Const(word));
                    }
                    i = j;
                }
                '!' => {
                    if chars.get(i + 1) == Some(&'=') {
                        push(&mut out, Tok::Neq);
                        i += 2;
                    } else {
                        push(&mut out, Tok::Bang);
                        i += 1;
                    }
                }
                ':' => {
                    if chars.get(i + 1) == Some(&'-') {
                        push(&mut out, Tok::Arrow);
                        i += 2;
                    } else {
                        return Err(syntax(line, col, "expected `:-`"));
                    }
                }
                '/' | '<' | '>' | '=' | '(' | ')' | ',' | '.' => {
                    let tok = match c {
                        '/' => Tok::Slash,
                        '<' => Tok::Lt,
                        '>' => Tok::Gt,
                        '=' => Tok::Eq,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        _ => Tok::Dot,
                    };
                    push(&mut out, tok);
                    i += 1;
                }
                _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
            }
        }
    }
    let line = text.lines().count().max(1);
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col: 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    arities: BTreeMap<String, usize>,
}

impl Parser {
    fn new(text: &str, opts: ParseOptions) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text, opts)?,
            pos: 0,
            arities: BTreeMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, t: Tok, wanted: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut out = Expr::empty();
        self.item(&mut out)?;
        while *self.peek() == Tok::Slash {
            self.bump();
            self.item(&mut out)?;
        }
        Ok(out)
    }

    fn item(&mut self, out: &mut Expr) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Const(s) => {
                self.bump();
                out.push(Token::Const(Atom::new(&s)));
            }
            Tok::Var(k, n) => {
                self.bump();
                out.push(Token::Var(Var::new(k, &n)));
            }
            Tok::Bang => {
                self.bump();
            }
            Tok::Lt => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::Gt, "`>`")?;
                out.push(Token::Packed(inner));
            }
            _ => return Err(self.unexpected("a path expression")),
        }
        Ok(())
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let (line, col) = self.here();
        let name = match self.bump() {
            Tok::Rel(n) => n,
            _ => return Err(syntax(line, col, "expected a relation name")),
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                args.push(self.expr()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
        }
        self.record_arity(&name, args.len())?;
        Ok(Predicate::new(name, args))
    }

    fn record_arity(&mut self, name: &str, arity: usize) -> Result<(), ParseError> {
        match self.arities.get(name) {
            Some(&a) if a != arity => Err(ParseError::ArityMismatch {
                relation: name.to_owned(),
                first: a,
                second: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(name.to_owned(), arity);
                Ok(())
            }
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Literal::Neg(self.predicate()?))
            }
            Tok::Rel(_) => Ok(Literal::Pos(self.predicate()?)),
            _ => {
                let lhs = self.expr()?;
                let negated = match self.bump() {
                    Tok::Eq => false,
                    Tok::Neq => true,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("`=` or `!=`"));
                    }
                };
                let rhs = self.expr()?;
                let eq = Equation::new(lhs, rhs);
                Ok(if negated { Literal::Neq(eq) } else { Literal::Eq(eq) })
            }
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let head = self.predicate()?;
        let mut body = Vec::new();
        if *self.peek() == Tok::Arrow {
            self.bump();
            body.push(self.literal()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                body.push(self.literal()?);
            }
        }
        self.expect(Tok::Dot, "`,` or `.`")?;
        Ok(Rule::new(head, body))
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut strata = vec![Vec::new()];
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Sep => {
                    self.bump();
                    strata.push(Vec::new());
                }
                _ => {
                    let r = self.rule()?;
                    strata.last_mut().expect("nonempty").push(r);
                }
            }
        }
        Ok(Program::new(strata))
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_program_with(text, ParseOptions::default())
}

pub fn parse_program_with(text: &str, opts: ParseOptions) -> Result<Program, ParseError> {
    Parser::new(text, opts)?.program()
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    parse_instance_with(text, ParseOptions::default())
}

pub fn parse_instance_with(text: &str, opts: ParseOptions) -> Result<Instance, ParseError> {
    let mut p = Parser::new(text, opts)?;
    let mut inst = Instance::new();
    while *p.peek() != Tok::Eof {
        let line = p.here().0;
        let pred = p.predicate()?;
        p.expect(Tok::Dot, "`.`")?;
        let mut tuple = Vec::with_capacity(pred.args.len());
        for a in &pred.args {
            tuple.push(a.to_path().ok_or(ParseError::NonGroundFact { line })?);
        }
        inst.insert(&pred.relation, tuple)
            .map_err(|e| match e {
                crate::value::InstanceError::ArityMismatch {
                    relation,
                    expected,
                    found,
                } => ParseError::ArityMismatch {
                    relation,
                    first: expected,
                    second: found,
                },
            })?;
    }
    Ok(inst)
}

/// Parses a single path expression, e.g. `$x/<@y/$z>/@w`.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text, ParseOptions { allow_reserved_names: true })?;
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of expression")?;
    Ok(e)
}

/// Parses `e1 = e2`.
pub fn parse_equation(text: &str) -> Result<Equation, ParseError> {
    let mut p = Parser::new(text, ParseOptions { allow_reserved_names: true })?;
    let lhs = p.expr()?;
    p.expect(Tok::Eq, "`=`")?;
    let rhs = p.expr()?;
    p.expect(Tok::Eof, "end of equation")?;
    Ok(Equation::new(lhs, rhs))
}

/// Parses a single ground path, e.g. `c/<a/b/a>`.
pub fn parse_path(text: &str) -> Result<Path, ParseError> {
    parse_expr(text)?
        .to_path()
        .ok_or(ParseError::NonGroundFact { line: 1 })
}

/// Prints a program: strata in order separated by `---`, rules sorted
/// within each stratum, one rule per line.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, stratum) in p.strata.iter().enumerate() {
        if i > 0 {
            out.push_str("---\n");
        }
        let mut lines: Vec<String> = stratum.iter().map(|r| r.to_string()).collect();
        lines.sort();
        lines.dedup();
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}

pub fn print_fact(relation: &str, tuple: &[Path]) -> String {
    if tuple.is_empty() {
        return format!("{relation}.");
    }
    let args: Vec<String> = tuple.iter().map(|p| p.to_string()).collect();
    format!("{relation}({}).", args.join(", "))
}

/// Prints an instance, one fact per line, sorted by relation then tuple.
pub fn print_instance(i: &Instance) -> String {
    let mut out = String::new();
    for (rel, t) in i.facts() {
        out.push_str(&print_fact(rel, t));
        out.push('\n');
    }
    out
}
