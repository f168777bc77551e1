mod common;

use std::process::{Command, Output};

use common::{corpus, read_corpus, MANIFEST};

fn seqlog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqlog")).args(args).output().expect("binary runs")
}

fn path(file: &str) -> String {
    corpus(file).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn golden_outputs_match() {
    for e in MANIFEST {
        let program = path(&format!("{}.sdl", e.name));
        let data = path(e.data);
        let mut args = vec!["run", "--program", &program, "--data", &data];
        if let Some(r) = e.golden_rel {
            args.extend(["--out", r]);
        }
        let o = seqlog(&args);
        assert!(o.status.success(), "{}: {}", e.name, String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o), read_corpus(&format!("{}.out", e.name)), "{}", e.name);
    }
}

#[test]
fn run_prints_selected_relation() {
    let o = seqlog(&["run", "--program", &path("onlyas.sdl"), "--data", &path("onlyas.sdb"), "--out", "S"]);
    assert_eq!(stdout(&o), "S(a/a/a).\n");
    let naive = seqlog(&["run", "--naive", "--program", &path("onlyas_air.sdl"), "--data", &path("onlyas.sdb"), "--out", "S"]);
    assert_eq!(stdout(&naive), "S(a/a/a).\n");
}

#[test]
fn output_is_deterministic() {
    let args = ["run", "--program", &path("nfa.sdl"), "--data", &path("nfa.sdb")];
    let first = stdout(&seqlog(&args));
    for _ in 0..3 {
        assert_eq!(stdout(&seqlog(&args)), first);
    }
}

#[test]
fn features_of_corpus_programs() {
    assert_eq!(stdout(&seqlog(&["features", &path("onlyas_air.sdl")])), "A I R\n");
    assert_eq!(stdout(&seqlog(&["features", &path("onlyas.sdl")])), "E\n");
    assert_eq!(stdout(&seqlog(&["features", &path("cool.sdl")])), "E I N P\n");
    let j = stdout(&seqlog(&["--json", "features", &path("onlyas_air.sdl")]));
    let v: serde_json::Value = serde_json::from_str(j.trim()).unwrap();
    assert_eq!(v["features"], serde_json::json!(["A", "I", "R"]));
}

#[test]
fn subsumes_answers() {
    assert_eq!(stdout(&seqlog(&["subsumes", "E", "I"])), "true\n");
    assert_eq!(stdout(&seqlog(&["subsumes", "I R", "E R"])), "false\n");
    assert_eq!(seqlog(&["subsumes", "X", "I"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let missing = seqlog(&["run", "--program", "/nonexistent.sdl", "--data", &path("onlyas.sdb")]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(seqlog(&["run"]).status.code(), Some(1));
    assert_eq!(seqlog(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(seqlog(&["--help"]).status.code(), Some(0));
    assert_eq!(seqlog(&["--version"]).status.code(), Some(0));
    let diverge = seqlog(&["run", "--program", &path("nonterminating.sdl"), "--data", &path("empty.sdb")]);
    assert_eq!(diverge.status.code(), Some(2));
    let unify = seqlog(&["unify", "$x/a = a/$x", "--max-nodes", "5"]);
    assert_eq!(unify.status.code(), Some(2));
}

#[test]
fn static_errors_exit_one() {
    let dir = std::env::temp_dir().join(format!("seqlog-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let unsafe_rule = dir.join("unsafe.sdl");
    std::fs::write(&unsafe_rule, "S($y) :- R($x).\n").unwrap();
    let bad_syntax = dir.join("bad.sdl");
    std::fs::write(&bad_syntax, "S($x :- R($x).\n").unwrap();
    for f in [&unsafe_rule, &bad_syntax] {
        let o = seqlog(&["--json", "features", &f.to_string_lossy()]);
        assert_eq!(o.status.code(), Some(1));
        let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
        assert_eq!(err["exit"], 1);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn transform_round_trips_through_run() {
    let o = seqlog(&["transform", "--elim", "equations", &path("neq.sdl"), "--check", "30", "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 mismatches"));
    let dir = std::env::temp_dir().join(format!("seqlog-tr-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("neq_noeq.sdl");
    std::fs::write(&out, &o.stdout).unwrap();
    let run = seqlog(&["run", "--program", &out.to_string_lossy(), "--data", &path("neq.sdb"), "--out", "S"]);
    assert_eq!(stdout(&run), read_corpus("neq.out"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn transform_flags_are_checked_before_reading() {
    let o = seqlog(&["transform", "--elim", "arity", "/nonexistent.sdl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("usage"));
}

#[test]
fn transform_reports_inapplicable_input() {
    let o = seqlog(&["transform", "--elim", "packing", &path("reversal.sdl")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn normalize_prints_normal_rules() {
    let o = seqlog(&["normalize", &path("normal_form_example.sdl")]);
    assert!(o.status.success());
    let text = stdout(&o);
    let opts = seqlog::syntax::ParseOptions { allow_reserved_names: true };
    let p = seqlog::syntax::parse_program_with(&text, opts).unwrap();
    assert!(p.rules().all(|r| seqlog::transform::rule_form(r).is_some()));
}

#[test]
fn unify_lists_solutions() {
    let eq = "$x/<@y/$z>/@w = $u/$v/$u";
    let nonempty = stdout(&seqlog(&["unify", "--nonempty", eq]));
    assert_eq!(nonempty.lines().count(), 4);
    assert!(nonempty.contains("$u -> @w ; $v -> <@y/$z> ; $x -> @w"));
    let all = stdout(&seqlog(&["unify", eq]));
    assert!(all.contains("$u -> ! ; $v -> $x/<@y/$z>/@w"));
    for line in nonempty.lines() {
        assert!(all.lines().any(|l| l == line));
    }
    let dot = stdout(&seqlog(&["unify", "--dot", "$x/a = a/$y"]));
    assert!(dot.starts_with("digraph"));
    let j = stdout(&seqlog(&["--json", "unify", "@x = a"]));
    let v: serde_json::Value = serde_json::from_str(j.trim()).unwrap();
    assert_eq!(v["@x"], "a");
}

#[test]
fn algebra_commands_agree_with_run() {
    let plan = seqlog(&["compile-ra", "--program", &path("half_pure.sdl"), "--rel", "S"]);
    assert!(plan.status.success(), "{}", String::from_utf8_lossy(&plan.stderr));
    let dir = std::env::temp_dir().join(format!("seqlog-ra-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("s.ra");
    std::fs::write(&file, &plan.stdout).unwrap();
    let got = seqlog(&["eval-ra", "--plan", &file.to_string_lossy(), "--data", &path("half_pure.sdb"), "--rel", "S"]);
    let want = seqlog(&["run", "--program", &path("half_pure.sdl"), "--data", &path("half_pure.sdb"), "--out", "S"]);
    assert_eq!(stdout(&got), stdout(&want));
    std::fs::remove_dir_all(&dir).unwrap();
}
