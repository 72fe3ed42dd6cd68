use std::path::PathBuf;

use accrel_core::format::{parse_access, parse_problem, print_problem};
use accrel_core::model::{is_well_formed, truncate_path, validate_path, Access, Configuration, Path, Response, Value};
use accrel_core::oracle::{oracle_containment, oracle_ltr, OracleLimits};
use accrel_core::query::{classical_contains, eval};
use accrel_core::reductions::ProblemInstance;
use accrel_core::relevance::{decide_ir, decide_ltr_independent, decide_ltr_single_occurrence, ir_rewriting, Outcome};
use accrel_core::witness::{decide_containment_bounded, decide_ltr_dependent_bounded, producible_closure, Budget};

fn fixture(name: &str) -> ProblemInstance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/examples").join(name);
    parse_problem(&std::fs::read_to_string(path).unwrap(), false).unwrap()
}

fn v(t: &str) -> Value {
    Value::new(t, "D")
}

#[test]
fn fixtures_round_trip() {
    for f in ["bank.alp", "f1.alp", "f2a.alp", "f2b.alp", "f3.alp", "f4.alp"] {
        let inst = fixture(f);
        assert_eq!(parse_problem(&print_problem(&inst), false).unwrap(), inst, "{f}");
    }
}

#[test]
fn f1_paths_and_truncation() {
    let inst = fixture("f1.alp");
    let s = &inst.schema;
    let empty = Configuration::new();
    assert!(!is_well_formed(&Access::new("mR", vec![v("v")]), &empty, s).unwrap());
    assert!(is_well_formed(&Access::new("mS", vec![]), &empty, s).unwrap());
    let mut path = Path::new(empty.clone());
    path.push(Access::new("mS", vec![]), Response::of([vec![v("v")]]));
    path.push(Access::new("mR", vec![v("v")]), Response::of([vec![v("v")]]));
    assert!(validate_path(&path, s).is_ok());
    assert!(truncate_path(&path, s).unwrap().steps.is_empty());
    let mut bad = Path::new(empty);
    bad.push(Access::new("mR", vec![v("v")]), Response::of([vec![v("v")]]));
    assert!(validate_path(&bad, s).is_err());
}

#[test]
fn f1_containment() {
    let inst = fixture("f1.alp");
    let (q1, q2) = (&inst.query("Q1").unwrap().body, &inst.query("Q2").unwrap().body);
    assert!(!classical_contains(q1, q2));
    let budget = Budget::for_query(q1);
    let fwd = decide_containment_bounded(&inst.schema, &inst.conf, q1, q2, &budget).unwrap();
    assert_eq!(fwd.outcome, Outcome::Yes);
    assert!(fwd.stats.exhaustive);
    let rev = decide_containment_bounded(&inst.schema, &inst.conf, q2, q1, &budget).unwrap();
    assert_eq!(rev.outcome, Outcome::No);
    let limits = OracleLimits::default();
    assert!(oracle_containment(&inst.schema, &inst.conf, q1, q2, &limits).unwrap());
    assert!(!oracle_containment(&inst.schema, &inst.conf, q2, q1, &limits).unwrap());
}

#[test]
fn f1_closure() {
    let inst = fixture("f1.alp");
    let s = accrel_core::model::Fact::new("S", vec![v("v")]);
    let r = accrel_core::model::Fact::new("R", vec![v("v")]);
    let order = producible_closure(&inst.schema, &inst.conf, &[r.clone(), s.clone()]).unwrap().unwrap();
    assert_eq!(order.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>(), vec![s, r.clone()]);
    assert!(producible_closure(&inst.schema, &inst.conf, &[r]).unwrap().is_none());
    assert_eq!(producible_closure(&inst.schema, &inst.conf, &[]).unwrap(), Some(vec![]));
}

#[test]
fn f1_variant_dependent_ltr() {
    let inst = fixture("f1.alp");
    let q = &inst.query("Q").unwrap().body;
    let a = Access::new("mS", vec![]);
    let verdict = decide_ltr_dependent_bounded(&inst.schema, &inst.conf, q, &a, &Budget::for_query(q)).unwrap();
    assert_eq!(verdict.outcome, Outcome::Yes);
    assert!(oracle_ltr(&inst.schema, &inst.conf, q, &a, &OracleLimits::default()).unwrap());
}

#[test]
fn f2_and_f3_independent_ltr() {
    for (f, want) in [("f2a.alp", Outcome::No), ("f2b.alp", Outcome::Yes), ("f3.alp", Outcome::No)] {
        let inst = fixture(f);
        let q = &inst.query("Q").unwrap().body;
        let a = inst.target.clone().unwrap();
        let got = decide_ltr_independent(&inst.schema, &inst.conf, q, &a).unwrap();
        assert_eq!(got.outcome, want, "{f}");
        let limits = OracleLimits { max_path_len: 3, max_fresh: 2, max_response: 2, ..OracleLimits::default() };
        assert_eq!(oracle_ltr(&inst.schema, &inst.conf, q, &a, &limits).unwrap(), want == Outcome::Yes, "{f}");
    }
    let inst = fixture("f2a.alp");
    let q = &inst.query("Q").unwrap().body;
    let a = inst.target.clone().unwrap();
    let fast = decide_ltr_single_occurrence(&inst.schema, &inst.conf, q, &a).unwrap();
    assert_eq!(fast.outcome, Outcome::No);
}

#[test]
fn f4_immediate_relevance_and_rewriting() {
    let inst = fixture("f4.alp");
    let q = &inst.query("Q").unwrap().body;
    let a = inst.target.clone().unwrap();
    let verdict = decide_ir(&inst.schema, &inst.conf, q, &a).unwrap();
    assert_eq!(verdict.outcome, Outcome::Yes);
    let rw = ir_rewriting(&inst.schema, q, &a).unwrap();
    assert!(rw.eval(&inst.conf));
    let text = rw.to_string();
    assert_eq!(text, "not (R(x, y) & S(x) & S(y) & T(y)) & ((R(0, y) & S(y) & T(y)) | (R(x, 0) & S(x) & T(0)) | (R(0, 0) & T(0)))");
    assert!(eval(q, &inst.conf).is_none());
    let _ = parse_access("S(0)", &inst.schema).unwrap();
}
