use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value as Json;

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name).to_string_lossy().into_owned()
}

fn accrel(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_accrel"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn verdict(args: &[&str]) -> (Json, i32) {
    let out = accrel(args, None);
    let json = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (json, out.status.code().unwrap())
}

#[test]
fn worked_examples_give_the_expected_answers() {
    let cases: [(&[&str], &str); 6] = [
        (&["ltr", &example("f2a.alp")], "no"),
        (&["ltr", &example("f2b.alp")], "yes"),
        (&["ltr", &example("f3.alp")], "no"),
        (&["ir", &example("f4.alp")], "yes"),
        (&["contain", &example("f1.alp"), "--budget-facts", "4", "--budget-fresh", "2"], "yes"),
        (&["classic-contain", &example("f1.alp")], "no"),
    ];
    for (args, want) in cases {
        let (v, code) = verdict(args);
        assert_eq!(v["result"], want, "{args:?}");
        assert_eq!(code, 0, "{args:?}");
    }
}

#[test]
fn verdicts_carry_the_documented_fields() {
    let (v, _) = verdict(&["ir", &example("f4.alp")]);
    for key in ["command", "instance", "result", "certificate", "stats", "budgets"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["certificate"]["kind"], "response");
    assert_eq!(v["instance"].as_str().unwrap().len(), 64);
    assert!(v["stats"]["exhaustive"].is_boolean());
}

#[test]
fn deterministic_output_is_byte_identical() {
    let args = ["--deterministic", "ltr", &example("f2b.alp")];
    let a = accrel(&args, None);
    let b = accrel(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Json = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["stats"]["millis"], 0);
}

#[test]
fn generated_tiling_certificate_revalidates() {
    let gen = accrel(&["gen", "tiling-grid", "--n", "1", "--tiles", "2", "--h", "1-2,2-1", "--v", "1-2,2-1", "--initial", "1,2"], None);
    assert!(gen.status.success());
    let problem = String::from_utf8(gen.stdout).unwrap();
    let budget = ["--budget-facts", "4", "--budget-fresh", "4", "--budget-depth", "4", "--budget-first-response", "1"];
    let mut args = vec!["contain", "-"];
    args.extend(budget);
    let out = accrel(&args, Some(&problem));
    assert_eq!(out.status.code(), Some(0));
    let mut v: Json = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"], "no");
    assert_eq!(v["certificate"]["kind"], "path");

    let dir = std::env::temp_dir().join(format!("accrel-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("grid.alp");
    std::fs::write(&file, &problem).unwrap();
    let file = file.to_string_lossy().into_owned();
    let check = |verdict: &Json| -> Json {
        let out = accrel(&["check-certificate", &file, "--verdict", "-"], Some(&verdict.to_string()));
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(check(&v)["result"], "yes");
    v["certificate"]["steps"].as_array_mut().unwrap().truncate(1);
    assert_eq!(check(&v)["result"], "no");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn arity_errors_point_at_the_line() {
    let out = accrel(&["eval", "-"], Some("domain D\nrelation R(a:D, b:D)\nfact R(1, 2, 3)\nquery Q = R(x, y)\n"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("3:") && err.contains("arity"), "{err}");
}

#[test]
fn exit_codes_separate_decided_unknown_and_errors() {
    // Several queries and no --query is an input error.
    assert_eq!(accrel(&["eval", &example("f1.alp")], None).status.code(), Some(2));
    assert_eq!(accrel(&["eval", "/nonexistent/file.alp"], None).status.code(), Some(2));
    // A dependent relevance question cut off by a zero fact budget.
    let (v, code) = verdict(&["--budget-facts", "0", "--budget-fresh", "0", "ltr", &example("bank.alp")]);
    assert_eq!((v["result"].as_str().unwrap(), code), ("unknown_within_budget", 1));
}

#[test]
fn reductions_print_parseable_problems() {
    let out = accrel(&["reduce", "containment-to-ltr", &example("f1.alp"), "--lang", "pq"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let ltr = accrel(&["ltr", "-"], Some(&text));
    assert_eq!(ltr.status.code(), Some(0), "{}", String::from_utf8_lossy(&ltr.stderr));
}

#[test]
fn fuzz_reports_agreement() {
    let (v, code) = verdict(&["--seed", "5", "fuzz", "--target", "ir", "--count", "20"]);
    assert_eq!(v["result"], "yes");
    assert_eq!(v["agreed"], 20);
    assert_eq!(code, 0);
}
