use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn perfcx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfcx")).args(args).output().expect("runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cohomology_of_the_example_group() {
    let o = perfcx(&["cohomology", "--gamma", "Z2xZ2", "--max", "3"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["dims"], serde_json::json!([1, 2, 2, 2]));
    assert!(String::from_utf8_lossy(&o.stderr).contains("H^3: 2"));
}

#[test]
fn cup_table_has_nine_products() {
    let o = perfcx(&["cup-table"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["products"].as_array().unwrap().len(), 9);
}

#[test]
fn tangent_agrees_with_ext1() {
    let o = perfcx(&["tangent"]);
    assert!(o.status.success());
    let counts: Vec<u64> = json(&o).as_array().unwrap().iter().map(|r| r["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, vec![8, 8, 16]);
}

#[test]
fn trace_replays_and_tampering_is_caught() {
    let (out, trace) = (tmp("perfect.json"), tmp("trace.json"));
    let o = perfcx(&["perfect", "--seed", "1", "--out", path(&out), "--trace", path(&trace)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(perfcx(&["verify-trace", path(&trace)]).status.success());

    let mut t: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let legs = t["legs"].as_array_mut().unwrap();
    let k = legs.iter().position(|l| l["maps"].as_array().unwrap().iter().any(|m| !m["entries"].as_array().unwrap().is_empty())).unwrap();
    let m = legs[k]["maps"].as_array_mut().unwrap().iter_mut().find(|m| !m["entries"].as_array().unwrap().is_empty()).unwrap();
    let e = &mut m["entries"][0];
    *e = Value::from(1 - e.as_u64().unwrap() % 2);
    let bad = tmp("trace_bad.json");
    std::fs::write(&bad, t.to_string()).unwrap();

    let o = perfcx(&["verify-trace", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["failingLeg"], Value::from(k));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("leg {k}")));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = perfcx(&["perfect", "--seed", "4", "--shape", "surjective"]);
    let b = perfcx(&["perfect", "--seed", "4", "--shape", "surjective"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn resolved_input_reproduces_the_run() {
    let first = json(&perfcx(&["perfect", "--seed", "2"]));
    let f = tmp("resolved.json");
    std::fs::write(&f, first["resolved"].to_string()).unwrap();
    let (n1, ef) = (first["n1"].to_string(), first["exactFrom"].to_string());
    let o = perfcx(&["perfect", "--input", path(&f), "--n1", &n1, "--exact-from", &ef]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = json(&o);
    assert_eq!(again["ranks"], first["ranks"]);
    assert_eq!(again["trace"], first["trace"]);
    assert_eq!(perfcx(&["perfect", "--input", path(&f)]).status.code(), Some(2), "n1 is required");
}

#[test]
fn weierstrass_factors_and_divides() {
    let o = perfcx(&["weierstrass", "--ring", "Z/4", "--series", "2,2,1,1", "--divide", "1,0,0,0,1"]);
    assert!(o.status.success());
    let j = json(&o);
    assert_eq!(j["degree"], Value::from(2));
    assert_eq!(j["h"], serde_json::json!(["2", "0", "1"]));
    assert_eq!(j["division"]["verified"], Value::Bool(true));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(perfcx(&["weierstrass", "--ring", "Q", "--series", "1"]).status.code(), Some(2));
    let f = tmp("garbage.json");
    std::fs::write(&f, "{}").unwrap();
    assert_eq!(perfcx(&["verify-trace", path(&f)]).status.code(), Some(2));
}
