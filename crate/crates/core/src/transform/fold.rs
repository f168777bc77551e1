//! Intermediate-predicate folding for negation-free, nonrecursive programs.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::is_recursive;
use crate::expr::{Expr, Var};
use crate::program::{Equation, Literal, Program, Rule};

use super::{FreshVars, TransformError, MAX_RULES};

/// Unfolds every call to an intermediate relation into the bodies of its
/// rules, equating call arguments with the callee's head arguments. The
/// result is a single stratum defining only `output`.
pub fn fold_intermediates(p: &Program, output: &str) -> Result<Program, TransformError> {
    if p.rules().any(|r| r.negative_predicates().next().is_some()) {
        return Err(TransformError::NegationPresent);
    }
    if is_recursive(p) {
        return Err(TransformError::RecursionPresent);
    }
    let idb = p.idb_names();
    if !idb.contains(output) {
        return Err(TransformError::NotIdb(output.to_owned()));
    }
    let mut folder = Folder {
        p,
        idb,
        vars: FreshVars::for_program(p),
        done: BTreeMap::new(),
    };
    let rules = folder.unfold(output)?;
    Ok(Program::single(rules))
}

struct Folder<'a> {
    p: &'a Program,
    idb: BTreeSet<String>,
    vars: FreshVars,
    done: BTreeMap<String, Vec<Rule>>,
}

impl Folder<'_> {
    /// Rules for `rel` whose bodies mention input relations only.
    fn unfold(&mut self, rel: &str) -> Result<Vec<Rule>, TransformError> {
        if let Some(rs) = self.done.get(rel) {
            return Ok(rs.clone());
        }
        let mut out = Vec::new();
        let rules: Vec<Rule> = self.p.rules_for(rel).cloned().collect();
        for r in rules {
            let mut partial = vec![Vec::new()];
            for l in &r.body {
                let options: Vec<Vec<Literal>> = match l {
                    Literal::Pos(q) if self.idb.contains(&q.relation) => {
                        let callee = self.unfold(&q.relation)?;
                        callee
                            .iter()
                            .map(|c| {
                                let c = self.rename_apart(c);
                                let mut lits = c.body.clone();
                                lits.extend(
                                    q.args
                                        .iter()
                                        .zip(&c.head.args)
                                        .map(|(e, h)| Literal::Eq(Equation::new(e.clone(), h.clone()))),
                                );
                                lits
                            })
                            .collect()
                    }
                    other => vec![vec![other.clone()]],
                };
                let mut next = Vec::new();
                for base in &partial {
                    for opt in &options {
                        let mut b: Vec<Literal> = Vec::clone(base);
                        b.extend(opt.iter().cloned());
                        next.push(b);
                    }
                }
                if next.len() > MAX_RULES {
                    return Err(TransformError::TooManyRules(MAX_RULES));
                }
                partial = next;
            }
            out.extend(partial.into_iter().map(|b| Rule::new(r.head.clone(), b)));
        }
        self.done.insert(rel.to_owned(), out.clone());
        Ok(out)
    }

    fn rename_apart(&mut self, r: &Rule) -> Rule {
        let map: BTreeMap<Var, Var> = r
            .vars()
            .into_iter()
            .map(|v| {
                let f = self.vars.fresh(v.kind, &v.name);
                (v, f)
            })
            .collect();
        r.substitute(&|v: &Var| map.get(v).cloned().map(Expr::var))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{detect_features, Feature};
    use crate::syntax::{parse_program, parse_program_with, ParseOptions};

    #[test]
    fn inverts_positive_equation_trick() {
        let p = parse_program("T(a/$x, $x) :- R($x).\nS($x) :- T($x/a, $x).").unwrap();
        let q = fold_intermediates(&p, "S").unwrap();
        let expected = parse_program_with(
            "S($x) :- R($x__1), $x/a = a/$x__1, $x = $x__1.",
            ParseOptions { allow_reserved_names: true },
        )
        .unwrap();
        assert_eq!(q, expected);
        assert!(!detect_features(&q).contains(Feature::I));
    }

    #[test]
    fn product_over_call_sites() {
        let p = parse_program("T($x) :- A($x).\nT($x) :- B($x).\nS($x, $y) :- T($x), T($y).").unwrap();
        assert_eq!(fold_intermediates(&p, "S").unwrap().rule_count(), 4);
    }

    #[test]
    fn refuses_negation_and_recursion() {
        let p = parse_program("T($x) :- A($x).\nS($x) :- B($x), not T($x).").unwrap();
        assert_eq!(fold_intermediates(&p, "S"), Err(TransformError::NegationPresent));
        let p = parse_program("S($x) :- A($x).\nS($x) :- S(a/$x).").unwrap();
        assert_eq!(fold_intermediates(&p, "S"), Err(TransformError::RecursionPresent));
    }
}
