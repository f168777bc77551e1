//! Feature-eliminating program transformations.
//!
//! Every transformation maps a program to one computing the same query on
//! flat instances while avoiding some feature: [`eliminate_arity`],
//! [`eliminate_equations`], [`eliminate_packing_nonrecursive`],
//! [`fold_intermediates`]. [`normalize`] rewrites a nonrecursive,
//! equation-free program into rules of six restricted shapes, the input of
//! the algebra compiler.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::analysis::{detect_features, AnalysisError, FeatureSet};
use crate::expr::{Var, VarKind};
use crate::program::Program;
use crate::unify::UnifyError;

mod arity;
mod doubling;
mod equations;
mod fold;
mod normal_form;
mod packing;

pub use arity::{encode_pair, eliminate_arity, PAIR_A, PAIR_B};
pub use doubling::{doubler_program, make_doubler, make_undoubler, undoubler_program};
pub use equations::{eliminate_equations, eliminate_positive_equations, insert_negated_equation_strata};
pub use fold::fold_intermediates;
pub use normal_form::{normalize, rule_form};
pub use packing::{depack_equations, eliminate_packing_nonrecursive, purify_rule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("output relation {relation} has arity {arity}; only arity 0 or 1 can be kept unencoded")]
    OutputArity { relation: String, arity: usize },
    #[error("input relation {relation} has arity {arity}; arity elimination needs unary input relations")]
    InputArity { relation: String, arity: usize },
    #[error("the program is recursive")]
    RecursionPresent,
    #[error("the program uses negation")]
    NegationPresent,
    #[error("the program uses equations")]
    EquationsPresent,
    #[error("{0} is not an IDB relation of the program")]
    NotIdb(String),
    #[error("rule expansion exceeded {0} rules")]
    TooManyRules(usize),
    #[error(transparent)]
    Unify(#[from] UnifyError),
    #[error(transparent)]
    Invalid(#[from] AnalysisError),
}

/// Summary of a transformation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformReport {
    pub input_features: FeatureSet,
    pub output_features: FeatureSet,
    /// Relation names present in the output but not in the input.
    pub fresh_names: Vec<String>,
    pub notes: Vec<String>,
}

impl TransformReport {
    pub fn new(before: &Program, after: &Program) -> TransformReport {
        let old = before.relation_names();
        TransformReport {
            input_features: detect_features(before),
            output_features: detect_features(after),
            fresh_names: after.relation_names().into_iter().filter(|n| !old.contains(n)).collect(),
            notes: Vec::new(),
        }
    }
}

/// Upper bound on the number of rules a single expansion step may produce.
pub const MAX_RULES: usize = 200_000;

fn strip_suffix(base: &str) -> &str {
    match base.rfind("__") {
        Some(i) if base[i + 2..].chars().all(|c| c.is_ascii_digit()) && i > 0 => &base[..i],
        _ => base,
    }
}

/// Generates names of the form `base__k` not used anywhere in a program.
/// Parsed user names never contain `__`, so generated names cannot clash
/// with them.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    used: BTreeSet<String>,
}

impl FreshNames {
    pub fn for_program(p: &Program) -> FreshNames {
        FreshNames {
            used: p.relation_names(),
        }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_owned());
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let base = strip_suffix(base);
        let mut k = 1;
        loop {
            let name = format!("{base}__{k}");
            if self.used.insert(name.clone()) {
                return name;
            }
            k += 1;
        }
    }
}

/// Fresh variable generator; both kinds share one name space.
#[derive(Clone, Debug, Default)]
pub struct FreshVars {
    used: BTreeSet<String>,
}

impl FreshVars {
    pub fn for_program(p: &Program) -> FreshVars {
        let mut used = BTreeSet::new();
        for r in p.rules() {
            for v in r.vars() {
                used.insert(v.name.to_string());
            }
        }
        FreshVars { used }
    }

    pub fn reserve_rule(&mut self, r: &crate::program::Rule) {
        for v in r.vars() {
            self.used.insert(v.name.to_string());
        }
    }

    pub fn fresh(&mut self, kind: VarKind, base: &str) -> Var {
        let base = strip_suffix(base);
        let mut k = 1;
        loop {
            let name = format!("{base}__{k}");
            if self.used.insert(name.clone()) {
                return Var::new(kind, &name);
            }
            k += 1;
        }
    }
}
