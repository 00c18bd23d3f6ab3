use std::process::Command;

use pellrep_cli::{dispatch_to, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE};
use pellrep_core::Float;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    run_env(args, None)
}

fn run_env(args: &[&str], env: Option<&str>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pellrep").chain(args.iter().copied());
    let code = dispatch_to(argv, env, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_of(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, EXIT_OK, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn seq_prints_exact_terms() {
    assert_eq!(run(&["seq", "--k", "3", "--n", "7"]), (0, "662\n".into(), String::new()));
    let (_, out, _) = run(&["seq", "--k", "2", "--n", "1", "--count", "5"]);
    assert_eq!(out, "2\n6\n14\n34\n82\n");
    let v = json_of(&["seq", "--k", "5", "--n", "5", "--json"]);
    assert_eq!(v["result"]["values"][0]["value"], "110");
    assert_eq!(v["tool"], "pellrep");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, out, _) = run(&["verify", "--kmax", "10", "--nmax", "100", "--json", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("PASS"));
    let got = std::fs::read_to_string(&path).unwrap();
    let golden = include_str!("golden/verify_k10_n100.json");
    assert_eq!(got, golden);
}

#[test]
fn verify_strict_drops_single_digits() {
    let v = json_of(&["verify", "--kmax", "3", "--nmax", "300", "--strict-eq12", "--json"]);
    let r = &v["result"];
    let ns: Vec<&str> = r["solutions"].as_array().unwrap().iter().map(|s| s["n"].as_str().unwrap()).collect();
    assert_eq!(ns, ["3", "4", "5", "3", "4", "7"]);
    assert_eq!(r["missing"].as_array().unwrap().len(), 0);
    assert_eq!(r["extras"].as_array().unwrap().len(), 0);
}

#[test]
fn output_is_deterministic() {
    let a = run(&["verify", "--kmax", "6", "--nmax", "60", "--format", "json"]);
    let b = run(&["verify", "--kmax", "6", "--nmax", "60", "--format", "json"]);
    assert_eq!(a, b);
    let c = run(&["verify", "--kmax", "6", "--nmax", "61", "--format", "json"]);
    let ha: Value = serde_json::from_str(&a.1).unwrap();
    let hc: Value = serde_json::from_str(&c.1).unwrap();
    assert_ne!(ha["config_hash"], hc["config_hash"]);
}

#[test]
fn csv_output() {
    let (code, out, _) = run(&["verify", "--kmax", "2", "--nmax", "10", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,n,value,decompositions,degenerate");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[3], "2,3,14,\"(1^1, 4^1)\",false");
}

#[test]
fn digits_reports_runs() {
    let (code, out, _) = run(&["digits", "--check", "2288"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["two_run"], true);
    assert_eq!(v["decompositions"][0]["a"], 2);
    let (_, out, _) = run(&["digits", "--check", "286"]);
    assert!(out.contains("\"two_run\": false"));
    assert_eq!(run(&["digits", "--check", "abc"]).0, EXIT_USAGE);
}

#[test]
fn root_of_order_two() {
    let v = json_of(&["root", "--k", "2", "--digits", "40", "--json"]);
    let g = v["result"]["gamma"].as_str().unwrap();
    assert!(g.starts_with("2.41421356237309504880168872420969807857"), "{g}");
}

#[test]
fn bound_lemma31_at_550() {
    let v = json_of(&["bound", "--stage", "lemma31", "--k", "550", "--json"]);
    let s = v["result"]["value_rounded_up"].as_str().unwrap();
    let x = Float::with_val(128, Float::parse(s).unwrap());
    let cap = Float::with_val(128, Float::parse("1.13e56").unwrap());
    assert!(x < cap, "{s}");
    assert_eq!(run(&["bound", "--stage", "lambda1"]).0, EXIT_USAGE);
}

#[test]
fn reduce_single_instance() {
    let v = json_of(&["reduce", "--instance", "gamma3", "--a", "1", "--json"]);
    let r = &v["result"];
    assert_eq!(r["method"], "DujellaPetho");
    let t: f64 = r["t_bound"].as_str().unwrap().parse().unwrap();
    assert!(t > 500.0 && t < 750.0, "{t}");
    assert!(!r["epsilon"].as_str().unwrap().starts_with('-'));
    assert_eq!(run(&["reduce", "--instance", "gamma1", "--a", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["reduce", "--instance", "gamma2", "--k", "3", "--a", "1"]).0, EXIT_USAGE);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["seq", "--k", "3"]).0, EXIT_USAGE);
    assert_eq!(run(&["seq", "--k", "3", "--n", "7", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&["seq", "--k", "1", "--n", "7"]).0, EXIT_USAGE);
    assert_eq!(run(&["verify", "--kmax", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["--precision", "64", "seq", "--k", "3", "--n", "7"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
    assert_ne!(EXIT_MISMATCH, EXIT_USAGE);
}

#[test]
fn precision_from_env_and_config() {
    let v: Value = serde_json::from_str(&run_env(&["seq", "--k", "3", "--n", "7", "--json"], Some("1024")).1).unwrap();
    assert_eq!(v["precision_bits"], 1024);
    assert_eq!(run_env(&["seq", "--k", "3", "--n", "7"], Some("lots")).0, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "precision_bits = 2048\nformat = json\n").unwrap();
    let (code, out, _) = run_env(&["--config", cfg.to_str().unwrap(), "seq", "--k", "3", "--n", "7"], Some("1024"));
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["precision_bits"], 2048);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_pellrep");
    let ok = Command::new(bin).args(["seq", "--k", "3", "--n", "7"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "662\n");
    let bad = Command::new(bin).args(["seq", "--nope"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
}
