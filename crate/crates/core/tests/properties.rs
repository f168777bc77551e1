use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use seqlog::analysis::{check_program, is_recursive};
use seqlog::engine::{eval_program_with, query, Budget, EvalError, Mode};
use seqlog::expr::decompose;
use seqlog::gen::{edb_schema, random_algebra_expr, random_instance, random_one_sided_equation, random_semipositive_program, EquationShape, InstanceShape};
use seqlog::sra::{col_expr, compile, eval, parse_plan, print_plan, AlgebraExpr};
use seqlog::syntax::{parse_expr, parse_instance, parse_program_with, print_instance, print_program, ParseOptions};
use seqlog::transform::{eliminate_equations, eliminate_packing_nonrecursive, encode_pair, normalize, rule_form};
use seqlog::unify::{solve, UnifyBudget};
use seqlog::{Expr, Instance, Path, Program, Relation, Token};

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Token::constant),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Token::path_var),
        prop::sample::select(vec!["u", "w"]).prop_map(Token::atom_var),
    ];
    let token = leaf.prop_recursive(3, 16, 4, |inner| {
        prop::collection::vec(inner, 0..4).prop_map(|ts| Token::Packed(Expr::new(ts)))
    });
    prop::collection::vec(token, 0..6).prop_map(Expr::new)
}

fn facts(i: &Instance) -> BTreeSet<(String, Vec<Path>)> {
    i.facts().into_iter().map(|(n, t)| (n.to_string(), t.clone())).collect()
}

fn small_budget() -> Budget {
    Budget { max_path_len: 12, ..Budget::default() }
}

/// Query on both programs; `None` when both diverge.
fn both(p: &Program, q: &Program, i: &Instance, rel: &str) -> Option<(Relation, Relation)> {
    match (query(p, i, rel, &small_budget()), query(q, i, rel, &small_budget())) {
        (Ok(a), Ok(b)) => Some((a, b)),
        (Err(EvalError::NonTermination { .. }), Err(EvalError::NonTermination { .. })) => None,
        (a, b) => panic!("one side failed: {:?} / {:?}", a.err(), b.err()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expressions_print_and_parse(e in arb_expr()) {
        prop_assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn packing_structure_reconstructs(e in arb_expr()) {
        let (ps, comps) = decompose(&e);
        prop_assert_eq!(ps.star_count(), comps.len());
        prop_assert!(comps.iter().all(Expr::is_packing_free));
        prop_assert_eq!(ps.fill(&comps), Some(e));
    }

    #[test]
    fn programs_print_and_parse(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_semipositive_program(&mut rng, 3, 2);
        let text = print_program(&p);
        prop_assert_eq!(parse_program_with(&text, ParseOptions::default()).unwrap(), p);
    }

    #[test]
    fn instances_print_and_parse(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let schema: BTreeMap<String, usize> = [("R".to_string(), 1), ("Q".to_string(), 2)].into();
        let i = random_instance(&mut rng, &schema, &InstanceShape::flat(3, 6, 4).with_packing(0.3, 2));
        prop_assert_eq!(facts(&parse_instance(&print_instance(&i)).unwrap()), facts(&i));
    }

    #[test]
    fn plans_print_and_parse(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let schema: BTreeMap<String, usize> = [("R".to_string(), 1), ("Q".to_string(), 2)].into();
        let (e, _) = random_algebra_expr(&mut rng, &schema, 4);
        prop_assert_eq!(parse_plan(&print_plan(&e)).unwrap(), e);
    }

    #[test]
    fn naive_and_seminaive_agree(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_semipositive_program(&mut rng, 3, 2);
        let schema: BTreeMap<String, usize> = [("R".to_string(), 1), ("Q".to_string(), 1)].into();
        let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 6, 3));
        let a = eval_program_with(&p, &i, &small_budget(), Mode::Naive);
        let b = eval_program_with(&p, &i, &small_budget(), Mode::SemiNaive);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(facts(&a.instance), facts(&b.instance)),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "modes disagree on termination: {:?} {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn solutions_unify_both_sides(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let eq = random_one_sided_equation(&mut rng, &EquationShape::default());
        for s in solve(&eq, UnifyBudget::default()).unwrap() {
            prop_assert_eq!(s.apply(&eq.lhs), s.apply(&eq.rhs));
        }
    }

    #[test]
    fn equation_elimination_preserves_queries(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_semipositive_program(&mut rng, 3, 2);
        let q = eliminate_equations(&p);
        check_program(&q).unwrap();
        prop_assert!(q.rules().all(|r| r.equations().next().is_none() && r.nonequations().next().is_none()));
        let schema: BTreeMap<String, usize> = [("R".to_string(), 1), ("Q".to_string(), 1)].into();
        for _ in 0..5 {
            let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 6, 3));
            for rel in p.idb_names() {
                if let Some((a, b)) = both(&p, &q, &i, &rel) {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn normal_form_preserves_queries(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = eliminate_equations(&random_semipositive_program(&mut rng, 3, 2));
        prop_assume!(!is_recursive(&p));
        let q = normalize(&p).unwrap();
        prop_assert!(q.rules().all(|r| rule_form(r).is_some()));
        let schema = edb_schema(&p);
        for _ in 0..5 {
            let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 6, 3));
            for rel in p.idb_names() {
                if let Some((a, b)) = both(&p, &q, &i, &rel) {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn compiled_plans_match_engine(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_semipositive_program(&mut rng, 3, 2);
        prop_assume!(!is_recursive(&p));
        let schema = edb_schema(&p);
        for rel in p.idb_names() {
            let plan = compile(&p, &rel).unwrap();
            for _ in 0..3 {
                let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 5, 3).with_packing(0.2, 1));
                prop_assert_eq!(eval(&plan, &i).unwrap(), query(&p, &i, &rel, &Budget::default()).unwrap());
            }
        }
    }

    #[test]
    fn packing_elimination_is_packing_free(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_semipositive_program(&mut rng, 3, 2);
        prop_assume!(!is_recursive(&p));
        let q = eliminate_packing_nonrecursive(&p).unwrap();
        check_program(&q).unwrap();
        let schema = edb_schema(&p);
        for _ in 0..3 {
            let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 6, 3));
            for rel in p.idb_names() {
                if let Some((a, b)) = both(&p, &q, &i, &rel) {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn substring_counts_are_bounded(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let schema: BTreeMap<String, usize> = [("R".to_string(), 1)].into();
        let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 6, 5).with_packing(0.2, 1));
        let r = eval(&AlgebraExpr::rel("R"), &i).unwrap();
        let s = eval(&AlgebraExpr::rel("R").sub(1), &i).unwrap();
        let l = r.iter().map(|t| t[0].len()).max().unwrap_or(0);
        prop_assert!(s.len() <= r.len() * (l * l + 3 * l + 2) / 2);
        for t in s.iter() {
            let (whole, part) = (t[0].values(), t[1].values());
            prop_assert!(part.is_empty() || whole.windows(part.len()).any(|w| w == part));
        }
        let distinct: usize = r.iter().map(|t| {
            let v = t[0].values();
            (0..=v.len()).flat_map(|a| (a..=v.len()).map(move |b| v[a..b].to_vec())).collect::<BTreeSet<_>>().len()
        }).sum();
        prop_assert_eq!(s.len(), distinct);
    }

    #[test]
    fn selection_is_a_filter(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let schema: BTreeMap<String, usize> = [("Q".to_string(), 2)].into();
        let i = random_instance(&mut rng, &schema, &InstanceShape::flat(2, 8, 3));
        let lhs = col_expr(1).concat(&Expr::constant("a"));
        let rhs = Expr::constant("a").concat(&col_expr(2));
        let got = eval(&AlgebraExpr::rel("Q").select(lhs, rhs), &i).unwrap();
        let mut want = BTreeSet::new();
        for t in i.relation("Q").unwrap().iter() {
            let mut l = t[0].values().to_vec();
            l.push(seqlog::Value::atom("a"));
            let mut r = vec![seqlog::Value::atom("a")];
            r.extend(t[1].values().iter().cloned());
            if l == r {
                want.insert(t.clone());
            }
        }
        prop_assert_eq!(got.iter().cloned().collect::<BTreeSet<_>>(), want);
    }

    #[test]
    fn pair_encoding_is_injective(a in "[ab]{0,3}", b in "[ab]{0,3}", c in "[ab]{0,3}", d in "[ab]{0,3}") {
        let path = |s: &str| Expr::from_path(&Path::new(s.chars().map(|ch| seqlog::Value::atom(&ch.to_string())).collect()));
        let e1 = encode_pair(&path(&a), &path(&b)).to_path().unwrap();
        let e2 = encode_pair(&path(&c), &path(&d)).to_path().unwrap();
        prop_assert_eq!(e1 == e2, a == c && b == d);
    }
}
