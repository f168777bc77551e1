//! `seqlog`: evaluate, analyze and transform Sequence Datalog programs.
//!
//! Exit codes: 0 on success, 1 on usage, parse or static errors, 2 when a
//! budget runs out (nontermination of evaluation or unification).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use serde_json::json;

use seqlog::analysis::{check_program, detect_features, fragment_subsumes, AnalysisError, FeatureSet};
use seqlog::engine::{eval_program_with, query, Budget, EvalError, Mode};
use seqlog::gen::{edb_schema, random_instance, InstanceShape};
use seqlog::sra::{compile, eval as eval_plan, parse_plan, print_plan, SraError};
use seqlog::syntax::{parse_equation, parse_instance, parse_program_with, print_fact, print_program, ParseError, ParseOptions};
use seqlog::transform::{
    eliminate_arity, eliminate_equations, eliminate_packing_nonrecursive, fold_intermediates, normalize, TransformError,
    TransformReport,
};
use seqlog::unify::{Solver, UnifyBudget, UnifyError};
use seqlog::{Instance, Program};

#[derive(Parser)]
#[command(name = "seqlog", version, about = "Sequence Datalog toolkit")]
struct Cli {
    /// Print reports and errors as JSON lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Elim {
    Arity,
    Equations,
    Packing,
    Intermediates,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program on an instance.
    Run {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Relation to print; all derived relations when absent.
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        max_facts: Option<usize>,
        #[arg(long)]
        max_path_len: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Use naive instead of semi-naive iteration.
        #[arg(long)]
        naive: bool,
    },
    /// Eliminate a feature; the program goes to stdout, the report to stderr.
    Transform {
        #[arg(long, value_enum)]
        elim: Elim,
        #[arg(long)]
        out_rel: Option<String>,
        input: PathBuf,
        /// Compare input and output on this many random flat instances.
        #[arg(long)]
        check: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rewrite a nonrecursive program into the six-form normal form.
    Normalize { input: PathBuf },
    /// Print the features a program uses.
    Features { input: PathBuf },
    /// Decide whether fragment F1 is subsumed by fragment F2.
    Subsumes { f1: String, f2: String },
    /// Solve a path equation, printing one substitution per line.
    Unify {
        equation: String,
        /// Only solutions where path variables denote nonempty paths.
        #[arg(long)]
        nonempty: bool,
        /// Print the search tree in Graphviz format instead.
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Compile a nonrecursive program into an algebra plan.
    CompileRa {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        rel: String,
    },
    /// Evaluate an algebra plan on an instance.
    EvalRa {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Relation name used when printing the result.
        #[arg(long, default_value = "Q")]
        rel: String,
    },
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 1, kind: "usage", message: message.into() }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Failure {
        Failure { code: 1, kind: "parse", message: e.to_string() }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Failure {
        Failure { code: 1, kind: "static", message: e.to_string() }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Failure {
        match e {
            EvalError::NonTermination { .. } => Failure { code: 2, kind: "nontermination", message: e.to_string() },
            EvalError::Invalid(a) => a.into(),
            EvalError::Internal(m) => Failure { code: 1, kind: "internal", message: m },
        }
    }
}

impl From<UnifyError> for Failure {
    fn from(e: UnifyError) -> Failure {
        Failure { code: 2, kind: "budget", message: e.to_string() }
    }
}

impl From<TransformError> for Failure {
    fn from(e: TransformError) -> Failure {
        match e {
            TransformError::Unify(u) => u.into(),
            TransformError::Invalid(a) => a.into(),
            other => Failure { code: 1, kind: "transform", message: other.to_string() },
        }
    }
}

impl From<SraError> for Failure {
    fn from(e: SraError) -> Failure {
        match e {
            SraError::Transform(t) => t.into(),
            other => Failure { code: 1, kind: "algebra", message: other.to_string() },
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        kind: "io",
        message: format!("{}: {e}", path.display()),
    })
}

/// Programs are parsed leniently so that transformed output (which uses
/// generated `__` names) can be fed back in.
fn load_program(path: &Path) -> Result<Program, Failure> {
    let p = parse_program_with(&read(path)?, ParseOptions { allow_reserved_names: true })?;
    check_program(&p)?;
    Ok(p)
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Ok(parse_instance(&read(path)?)?)
}

fn print_relation(name: &str, rel: &seqlog::Relation, as_json: bool, out: &mut String) {
    for t in rel.sorted() {
        if as_json {
            let tuple: Vec<String> = t.iter().map(|p| p.to_string()).collect();
            out.push_str(&json!({ "relation": name, "tuple": tuple }).to_string());
        } else {
            out.push_str(&print_fact(name, t));
        }
        out.push('\n');
    }
}

fn report_line(r: &TransformReport, as_json: bool) -> String {
    if as_json {
        json!({
            "input_features": r.input_features.to_string(),
            "output_features": r.output_features.to_string(),
            "fresh_names": r.fresh_names,
            "notes": r.notes,
        })
        .to_string()
    } else {
        let mut s = format!("features: {{{}}} -> {{{}}}", r.input_features, r.output_features);
        if !r.fresh_names.is_empty() {
            s.push_str(&format!("\nfresh relations: {}", r.fresh_names.join(" ")));
        }
        for n in &r.notes {
            s.push_str(&format!("\n{n}"));
        }
        s
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let as_json = cli.json;
    match cli.command {
        Command::Run { program, data, out, max_facts, max_path_len, max_iter, naive } => {
            let p = load_program(&program)?;
            let i = load_instance(&data)?;
            let mut budget = Budget::default();
            if let Some(n) = max_facts {
                budget.max_derived_facts = n;
            }
            if let Some(n) = max_path_len {
                budget.max_path_len = n;
            }
            if let Some(n) = max_iter {
                budget.max_iterations = n;
            }
            let mode = if naive { Mode::Naive } else { Mode::SemiNaive };
            let result = eval_program_with(&p, &i, &budget, mode)?;
            let names: Vec<String> = match out {
                Some(n) => vec![n],
                None => p.idb_names().into_iter().collect(),
            };
            let mut text = String::new();
            let arities = p.arities();
            for n in names {
                let empty = seqlog::Relation::new(arities.get(&n).copied().unwrap_or(0));
                let rel = result.instance.relation(&n).unwrap_or(&empty);
                print_relation(&n, rel, as_json, &mut text);
            }
            Ok(text)
        }
        Command::Transform { elim, out_rel, input, check, seed } => {
            if matches!(elim, Elim::Arity | Elim::Intermediates) && out_rel.is_none() {
                return Err(Failure::usage("this elimination needs --out-rel"));
            }
            let p = load_program(&input)?;
            let q = match elim {
                Elim::Arity => eliminate_arity(&p, out_rel.as_deref().unwrap())?,
                Elim::Equations => eliminate_equations(&p),
                Elim::Packing => eliminate_packing_nonrecursive(&p)?,
                Elim::Intermediates => fold_intermediates(&p, out_rel.as_deref().unwrap())?,
            };
            check_program(&q)?;
            let mut report = TransformReport::new(&p, &q);
            if let Some(n) = check {
                let outputs: Vec<String> = match &out_rel {
                    Some(s) => vec![s.clone()],
                    None => p.idb_names().into_iter().filter(|r| q.idb_names().contains(r)).collect(),
                };
                let mismatches = equivalence_check(&p, &q, &outputs, n, seed)?;
                report.notes.push(format!("check: {n} random flat instances, {mismatches} mismatches (seed {seed})"));
                if mismatches > 0 {
                    eprintln!("{}", report_line(&report, as_json));
                    return Err(Failure {
                        code: 1,
                        kind: "check",
                        message: format!("{mismatches} of {n} instances disagree"),
                    });
                }
            }
            eprintln!("{}", report_line(&report, as_json));
            Ok(print_program(&q))
        }
        Command::Normalize { input } => {
            let p = load_program(&input)?;
            Ok(print_program(&normalize(&p)?))
        }
        Command::Features { input } => {
            let f = detect_features(&load_program(&input)?);
            Ok(if as_json {
                format!("{}\n", json!({ "features": f.iter().map(|x| x.letter().to_string()).collect::<Vec<_>>() }))
            } else {
                format!("{f}\n")
            })
        }
        Command::Subsumes { f1, f2 } => {
            let parse = |s: &str| s.parse::<FeatureSet>().map_err(|e| Failure::usage(e.to_string()));
            let b = fragment_subsumes(parse(&f1)?, parse(&f2)?);
            Ok(if as_json { format!("{}\n", json!({ "subsumes": b })) } else { format!("{b}\n") })
        }
        Command::Unify { equation, nonempty, dot, max_nodes } => {
            let eq = parse_equation(&equation)?;
            let mut budget = UnifyBudget::default();
            if let Some(n) = max_nodes {
                budget.max_nodes = n;
            }
            let mut solver = if dot { Solver::recording(budget) } else { Solver::new(budget) };
            let sols = if nonempty { solver.solve_nonempty(&eq)? } else { solver.solve(&eq)? };
            if dot {
                return Ok(solver.to_dot());
            }
            let mut out = String::new();
            for s in sols {
                if as_json {
                    let map: serde_json::Map<String, serde_json::Value> =
                        s.iter().map(|(v, e)| (v.to_string(), json!(e.to_string()))).collect();
                    out.push_str(&serde_json::Value::Object(map).to_string());
                } else {
                    out.push_str(&s.to_string());
                }
                out.push('\n');
            }
            Ok(out)
        }
        Command::CompileRa { program, rel } => {
            let p = load_program(&program)?;
            Ok(format!("{}\n", print_plan(&compile(&p, &rel)?)))
        }
        Command::EvalRa { plan, data, rel } => {
            let e = parse_plan(read(&plan)?.trim())?;
            let i = load_instance(&data)?;
            let mut out = String::new();
            print_relation(&rel, &eval_plan(&e, &i)?, as_json, &mut out);
            Ok(out)
        }
    }
}

/// Number of random flat instances on which `p` and `q` disagree on any of
/// `outputs`.
fn equivalence_check(p: &Program, q: &Program, outputs: &[String], n: usize, seed: u64) -> Result<usize, Failure> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let schema = edb_schema(p);
    let shape = InstanceShape::flat(3, 8, 5);
    let budget = Budget::default();
    let mut bad = 0;
    for _ in 0..n {
        let i = random_instance(&mut rng, &schema, &shape);
        for s in outputs {
            if query(p, &i, s, &budget)? != query(q, &i, s, &budget)? {
                bad += 1;
                break;
            }
        }
    }
    Ok(bad)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let as_json = cli.json;
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            if as_json {
                eprintln!("{}", json!({ "error": f.kind, "message": f.message, "exit": f.code }));
            } else {
                eprintln!("error[{}]: {}", f.kind, f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
