use std::path::PathBuf;
use std::process::{Command, Output};

use ecf_core::numerics::parse_rational;
use serde_json::Value;

fn ecf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecf")).args(args).env_remove("ECF_PRECISION_BITS").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = ecf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn data(args: &[&str]) -> Value {
    json(args)["data"].clone()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

fn is_exact(v: &Value) -> bool {
    v.as_str().is_some_and(|s| parse_rational(s).is_ok() && !s.contains('.'))
}

#[test]
fn expand_prints_digits() {
    let d = data(&["expand", "--x", "7/10"]);
    assert_eq!(d["digits"], serde_json::json!([1, 2, 6]));
    assert_eq!(d["truncated"], Value::Bool(false));
}

#[test]
fn reconstruct_inverts_expand() {
    assert_eq!(data(&["reconstruct", "--digits", "1,2,6"])["value"], "7/10");
}

#[test]
fn cylinder_measure_is_exact() {
    let d = data(&["cylinder", "--digits", "1,1,2"]);
    assert_eq!(d["measure"], "1/35");
    assert!(is_exact(&d["left"]) && is_exact(&d["right"]));
}

#[test]
fn rate_at_minus_one_is_two_log_phi() {
    let d = data(&["rate", "--which", "I", "--x", "-1"]);
    assert_eq!(d["expression"], "2*log(phi)");
    let dec = d["decimal"].as_str().unwrap();
    assert!(dec.starts_with("0.9624236501"), "{dec}");
    assert_eq!(dec.len(), "0.".len() + 40);
    let lo: f64 = d["value"]["lo"].as_str().unwrap().parse().unwrap();
    assert!((lo - 2.0 * (1.0f64 + 5f64.sqrt()).ln() + 2.0 * 2f64.ln()).abs() < 1e-15);
}

#[test]
fn count_matches_binomial() {
    assert_eq!(data(&["count", "--n", "3", "--m", "3", "--mode", "exact"])["count"], 6);
    let d = data(&["enumerate", "--n", "3", "--m", "3", "--mode", "at-most"]);
    assert_eq!(d["count"], 10);
    assert_eq!(d["words"].as_array().unwrap().len(), 10);
}

#[test]
fn huge_counts_stay_integers() {
    let d = data(&["count", "--n", "200", "--m", "200", "--mode", "exact"]);
    let text = d["count"].to_string();
    assert!(text.len() > 100 && text.chars().all(|c| c.is_ascii_digit()), "{text}");
}

#[test]
fn conditional_modes() {
    let d = data(&["conditional", "--prefix", "1,1,2", "--next", "2"]);
    assert_eq!(d["probability"], "5/19");
    assert_eq!(d["within_bounds"], true);
    let d = data(&["conditional", "--given-last", "2", "--n", "4", "--next", "2"]);
    assert_eq!(d["probability"], "972/3667");
}

#[test]
fn marginal_interval_encloses_exact() {
    let iv = data(&["marginal", "--n", "4", "--cap", "5"]);
    let ex = data(&["marginal", "--n", "4", "--cap", "5", "--exact"]);
    let rows = |v: &Value| v["rows"].as_array().unwrap().clone();
    for (a, b) in rows(&iv).iter().zip(rows(&ex)) {
        let q = |v: &Value| parse_rational(v.as_str().unwrap()).unwrap();
        assert_eq!(b["lo"], b["hi"]);
        assert!(q(&a["lo"]) <= q(&b["lo"]) && q(&b["lo"]) <= q(&a["hi"]), "{a} vs {b}");
    }
}

#[test]
fn exact_quantities_are_never_decimals() {
    let d = data(&["mc", "--task", "event", "--n", "1", "--trials", "2000", "--event", "b>=2"]);
    assert!(is_exact(&d["p_hat"]), "{}", d["p_hat"]);
    assert!(is_exact(&d["ci"]["lo"]) && is_exact(&d["ci"]["hi"]));
    let m = data(&["marginal", "--n", "2", "--cap", "3"]);
    for row in m["rows"].as_array().unwrap() {
        assert!(is_exact(&row["lo"]) && is_exact(&row["hi"]));
    }
}

#[test]
fn first_digit_event_is_near_one_half() {
    let d = data(&["mc", "--task", "event", "--n", "1", "--trials", "1000000", "--seed", "42", "--event", "b>=2"]);
    let p = parse_rational(d["p_hat"].as_str().unwrap()).unwrap().to_f64();
    assert!((p - 0.5).abs() < 0.003, "{p}");
    let lo = parse_rational(d["ci"]["lo"].as_str().unwrap()).unwrap();
    let hi = parse_rational(d["ci"]["hi"].as_str().unwrap()).unwrap();
    let half = parse_rational("1/2").unwrap();
    assert!(lo <= half && half <= hi);
}

#[test]
fn manifest_is_embedded() {
    let doc = json(&["mc", "--task", "lln", "--n", "5", "--trials", "200", "--seed", "7"]);
    let m = &doc["manifest"];
    assert_eq!(m["command"], "mc");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["params"]["trials"], "200");
    assert_eq!(m["precision"], 160);
    assert!(m["version"].is_string() && m["timestamp"].is_string() && m["rng"].is_string());
}

#[test]
fn json_output_round_trips() {
    let out = ecf(&["growth", "--theta", "1/2", "--n-list", "2,3", "--engine", "tree", "--max-cap", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);
}

#[test]
fn replay_reproduces_payload() {
    let first = scratch("first.json");
    let second = scratch("second.json");
    let run = |args: &[&str]| assert!(ecf(args).status.success());
    run(&[
        "mc",
        "--task",
        "ldp",
        "--n",
        "4,8",
        "--eps",
        "1/2",
        "--trials",
        "3000",
        "--output",
        first.to_str().unwrap(),
    ]);
    run(&["replay", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
    let read = |p: &PathBuf| serde_json::from_str::<Value>(&std::fs::read_to_string(p).unwrap()).unwrap();
    let (a, b) = (read(&first), read(&second));
    assert_eq!(serde_json::to_string(&a["data"]).unwrap(), serde_json::to_string(&b["data"]).unwrap());
    assert_eq!(a["manifest"]["argv"], b["manifest"]["argv"]);
}

#[test]
fn csv_has_manifest_and_header() {
    let out = ecf(&["marginal", "--n", "2", "--cap", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# manifest: {"));
    assert_eq!(lines[1], "k,lo,hi");
    assert_eq!(lines.len(), 2 + 4);
    assert!(lines[5].starts_with(">3,"));

    let path = scratch("table.csv");
    std::fs::write(&path, &text).unwrap();
    let replayed = ecf(&["replay", path.to_str().unwrap()]);
    let again = String::from_utf8(replayed.stdout).unwrap();
    assert_eq!(again.lines().skip(1).collect::<Vec<_>>(), lines[1..].to_vec());
}

#[test]
fn precision_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_ecf"))
        .args(["pressure", "--theta", "-2"])
        .env("ECF_PRECISION_BITS", "64")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["precision"], 64);
    let bad = Command::new(env!("CARGO_BIN_EXE_ecf"))
        .args(["pressure", "--theta", "-2"])
        .env("ECF_PRECISION_BITS", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(ecf(&["expand", "--bogus"]).status.code(), Some(2));
    assert_eq!(ecf(&["expand", "--x", "seven"]).status.code(), Some(2));
    assert_eq!(ecf(&["reconstruct", "--digits", "3,2"]).status.code(), Some(2));
    assert_eq!(ecf(&["expand", "--x", "3/2"]).status.code(), Some(2));
    let refused = ecf(&["enumerate", "--n", "10", "--m", "10", "--limit", "5"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("48620"));
    assert_eq!(ecf(&["--help"]).status.code(), Some(0));
}

#[test]
fn quick_verification_passes() {
    let out = ecf(&["verify", "--suite", "quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let criteria = v["data"]["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 7);
    assert!(criteria.iter().all(|c| c["passed"] == true));
    let lines = String::from_utf8_lossy(&out.stderr);
    assert_eq!(lines.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn legendre_agrees_with_closed_form() {
    let d = data(&["legendre", "--x", "1/2"]);
    assert_eq!(d["agree"], true);
}

#[test]
fn mdp_rows_are_reported() {
    let d = data(&["mdp", "--lambda", "1", "--p", "3/4", "--n-list", "2,3", "--engine", "tree", "--max-cap", "20"]);
    assert_eq!(d["target"], "1/2");
    assert_eq!(d["rows"].as_array().unwrap().len(), 2);
    assert_eq!(ecf(&["mdp", "--lambda", "1", "--p", "1/3", "--n-list", "2"]).status.code(), Some(2));
}
