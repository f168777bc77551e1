//! Sequence Datalog: a Datalog dialect over paths (finite sequences of atomic
//! and packed values).
//!
//! The crate provides the ground data model ([`value`]), path expressions
//! ([`expr`]), the program AST ([`program`]) with its textual syntax
//! ([`syntax`]), static analysis and feature detection ([`analysis`]),
//! associative unification ([`unify`]), a stratified bottom-up evaluator
//! ([`engine`]), feature-eliminating program transformations ([`transform`])
//! and a sequence relational algebra ([`sra`]).

pub mod analysis;
pub mod engine;
pub mod expr;
pub mod gen;
pub mod program;
pub mod sra;
pub mod syntax;
pub mod transform;
pub mod unify;
pub mod value;

pub use expr::{Expr, Token, Valuation, Var, VarKind};
pub use program::{Equation, Literal, Predicate, Program, Rule};
pub use value::{concat, is_flat, Atom, Instance, Path, Relation, Tuple, Value};
