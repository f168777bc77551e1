//! Doubling and undoubling of unary relations: `a·b` ↔ `a·a·b·b`.

use crate::program::{Program, Rule};
use crate::syntax::{parse_program_with, ParseOptions};

use super::FreshNames;

fn instantiate(template: &str, t: &str, input: &str, output: &str) -> Vec<Rule> {
    let text = template.replace("IN", input).replace("OUT", output).replace("TMP", t);
    let p = parse_program_with(&text, ParseOptions { allow_reserved_names: true })
        .expect("doubling templates are well formed");
    p.strata.into_iter().flatten().collect()
}

/// Rules doubling every atom of the unary relation `input` into `output`,
/// through an auxiliary relation named by `names`.
pub fn make_doubler(input: &str, output: &str, names: &mut FreshNames) -> Vec<Rule> {
    let t = names.fresh("T");
    instantiate(
        "TMP(!, $x) :- IN($x).\nTMP($x/@y/@y, $z) :- TMP($x, @y/$z).\nOUT($x) :- TMP($x, !).",
        &t,
        input,
        output,
    )
}

/// Rules inverting [`make_doubler`]: paths of `input` that are not doubled
/// produce nothing.
pub fn make_undoubler(input: &str, output: &str, names: &mut FreshNames) -> Vec<Rule> {
    let t = names.fresh("T");
    instantiate(
        "TMP($x, !) :- IN($x).\nTMP($x, @y/$z) :- TMP($x/@y/@y, $z).\nOUT($x) :- TMP(!, $x).",
        &t,
        input,
        output,
    )
}

fn standalone(input: &str, output: &str, undo: bool) -> Program {
    let mut names = FreshNames::default();
    names.reserve(input);
    names.reserve(output);
    let rules = if undo {
        make_undoubler(input, output, &mut names)
    } else {
        make_doubler(input, output, &mut names)
    };
    Program::single(rules)
}

/// A one-stratum program doubling `input` into `output`.
pub fn doubler_program(input: &str, output: &str) -> Program {
    standalone(input, output, false)
}

/// A one-stratum program undoubling `input` into `output`.
pub fn undoubler_program(input: &str, output: &str) -> Program {
    standalone(input, output, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{query, Budget};
    use crate::syntax::parse_instance;
    use crate::value::Path;

    #[test]
    fn doubles_and_undoubles() {
        let i = parse_instance("R(a/b).\nR(!).").unwrap();
        let d = query(&doubler_program("R", "D"), &i, "D", &Budget::default()).unwrap();
        let got: Vec<Path> = d.sorted().into_iter().map(|t| t[0].clone()).collect();
        assert_eq!(got, vec![Path::empty(), Path::atoms(&["a", "a", "b", "b"])]);
        let mut j = crate::value::Instance::new();
        for t in d.iter() {
            j.insert("D", t.clone()).unwrap();
        }
        let back = query(&undoubler_program("D", "S"), &j, "S", &Budget::default()).unwrap();
        assert_eq!(back.sorted(), i.relation("R").unwrap().sorted());
    }

    #[test]
    fn fresh_names_avoid_io() {
        let p = doubler_program("T__1", "T__2");
        assert!(p.idb_names().contains("T__3"));
    }
}
