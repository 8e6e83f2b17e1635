use std::path::PathBuf;
use std::process::{Command, Output};

use hocirc::{parse_signature, parse_term, parse_typed_term};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hocirc"))
        .current_dir(fixtures())
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_prints_the_type() {
    let o = run(&["check", "swap.hoc"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "[q,q] -> [q,q]\n");
}

#[test]
fn eval_prints_rows() {
    let o = run(&["eval", "--model", "demo.bool", "pre_f.hoc"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "0 0 1 0\n0 0 0 1\n1 0 0 0\n0 1 0 0\n");
    let o = run(&["eval", "--model", "demo.f64", "pre_f.hoc"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next(), Some("0.5 0 2 0"));
}

#[test]
fn equal_term_with_itself() {
    let o = run(&["equal", "swap.hoc", "swap.hoc"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "equal_by_rewriting\n");
}

#[test]
fn distinct_terms_get_a_witness() {
    let o = run(&["--json", "equal", "swap.hoc", "pre_f.hoc"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["suite"], "equal");
    assert_eq!(v["verdict"], "FAIL");
    assert!(v["witness"].as_str().unwrap().contains("semiring bool"));
}

#[test]
fn normalize_reports_steps() {
    let o = run(&["normalize", "swap.hoc"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "(ident [q q])\nsteps 1\n");
}

#[test]
fn lat_check_fixtures() {
    for f in [
        "identity.fam",
        "comb1.fam",
        "comb2.fam",
        "slot_identity.fam",
        "slot_comb.fam",
    ] {
        let o = run(&["--sig", "demo.sig", "lat-check", f]);
        assert_eq!(code(&o), 0, "{f}: {}", stdout(&o));
        assert!(stdout(&o).ends_with("PASS\n"));
    }
    let o = run(&["lat-check", "complement.fam"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn slot_check_fixtures() {
    let o = run(&["slot-check", "slot_identity.fam", "slot_comb.fam"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "SLOT PASS\n");
    let o = run(&["slot-check", "identity.fam", "slot_comb.fam"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn behav_eq_of_a_term_with_itself() {
    let o = run(&["behav-eq", "swap.hoc", "swap.hoc"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("equal on "));
}

#[test]
fn embed_single_suite_json() {
    let o = run(&[
        "--json",
        "embed",
        "check",
        "--suite",
        "multifunctor",
        "--samples",
        "4",
    ]);
    assert_eq!(code(&o), 0);
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(lines
        .iter()
        .all(|v| v["suite"] == "multifunctor" && v["verdict"] == "PASS"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["--bogus", "check", "swap.hoc"])), 2);
    assert_eq!(code(&run(&["embed", "check", "--suite", "nope"])), 2);
    assert_eq!(code(&run(&["laws", "--law", "E99"])), 2);
    assert_eq!(code(&run(&[])), 2);
}

#[test]
fn parse_errors_exit_3_with_position() {
    let o = run(&["check", "bad/unbalanced.hoc"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("1:29"), "{}", stderr(&o));
    assert_eq!(code(&run(&["check", "bad/undeclared.hoc"])), 3);
    assert_eq!(
        code(&run(&["--sig", "bad/undeclared.sig", "check", "swap.hoc"])),
        3
    );
    assert_eq!(
        code(&run(&[
            "eval",
            "--model",
            "bad/partial.bool",
            "corpus/t07.hoc"
        ])),
        3
    );
    assert_eq!(code(&run(&["lat-check", "bad/truncated.fam"])), 3);
    assert_eq!(code(&run(&["check", "missing.hoc"])), 3);
}

#[test]
fn signature_fixture_matches_the_demo() {
    let text = std::fs::read_to_string(fixtures().join("demo.sig")).unwrap();
    assert_eq!(
        parse_signature(&text).unwrap().to_string(),
        hocirc::Signature::demo().to_string()
    );
}

#[test]
fn minimal_signature() {
    let s = parse_signature("object q\n").unwrap();
    assert_eq!(s.objects.len(), 1);
}

#[test]
fn corpus_round_trips() {
    let sig =
        parse_signature(&std::fs::read_to_string(fixtures().join("poly.sig")).unwrap()).unwrap();
    let mut n = 0;
    for e in std::fs::read_dir(fixtures().join("corpus")).unwrap() {
        let text = std::fs::read_to_string(e.unwrap().path()).unwrap();
        let t = parse_typed_term(&text, &sig).unwrap();
        let printed = t.term.to_string();
        assert_eq!(parse_term(&printed).unwrap(), t.term);
        assert_eq!(parse_typed_term(&printed, &sig).unwrap().ty, t.ty);
        n += 1;
    }
    assert!(n >= 30);
}
