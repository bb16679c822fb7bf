use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn itheta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itheta")).args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let out = itheta(args);
    let code = out.status.code().expect("exit code");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (code, value)
}

fn config(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn check_examples_and_exit_codes() {
    let (code, v) = run_json(&["check", "--config", &config("good_pair.toml")]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["status"], "certified");
    assert_eq!(v["result"]["very_good_position"], true);

    let (code, v) = run_json(&["check", "--config", &config("point_cube.toml")]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["status"], "certified");
    assert_eq!(v["result"]["very_good_position"], false);

    let (code, v) = run_json(&["check", "--config", &config("bad_pair.toml")]);
    assert_eq!(code, 2);
    assert_eq!(v["result"]["status"], "refuted");
    assert_eq!(v["result"]["witness"], serde_json::json!(["1/2"]));
}

#[test]
fn check_round_trips_through_its_own_output() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["good_pair.toml", "point_cube.toml", "bad_pair.toml"] {
        let first = dir.path().join("first.json");
        let second = dir.path().join("second.json");
        let a = itheta(&["check", "--config", &config(name), "--out", first.to_str().unwrap()]);
        let b = itheta(&["check", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
        assert_eq!(a.status.code(), b.status.code());
        assert_eq!(std::fs::read_to_string(&first).unwrap(), std::fs::read_to_string(&second).unwrap());
    }
}

#[test]
fn uncertified_collections_are_blocked_unless_forced() {
    let out = itheta(&["theta", "--config", &config("bad_pair.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
}

#[test]
fn phi_examples() {
    let good = config("good_pair.toml");
    for (x, phi, s) in [("3,1", "1", Some("1/2")), ("1,1", "0", None), ("2,1", "1/2", Some("1"))] {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.toml");
        let text = std::fs::read_to_string(&good).unwrap().replace("x = [\"3\", \"1\"]", &{
            let (a, b) = x.split_once(',').unwrap();
            format!("x = [\"{a}\", \"{b}\"]")
        });
        std::fs::write(&path, text).unwrap();
        let (code, v) = run_json(&["phi", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["phi"], phi, "x = {x}");
        // q = 1: Φ(-x) = -Φ(x)
        let neg = if phi == "0" { "0".to_string() } else { format!("-{phi}") };
        assert_eq!(v["result"]["phi_neg_x"], neg.as_str());
        match s {
            Some(s) => {
                assert_eq!(v["result"]["intersection"]["s"][0], s);
                assert_eq!(v["result"]["intersection"]["intersection_number"], phi);
            }
            None => assert!(v["result"]["intersection"].is_null()),
        }
    }

    let (code, v) = run_json(&["phi", "--config", &config("simplicial_q1.toml")]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["phi"], "-1/2");
}

#[test]
fn erf_agrees_with_closed_form_and_oracle() {
    let (code, v) = run_json(&["erf", "--config", &config("good_pair.toml"), "--mc-samples", "200000"]);
    assert_eq!(code, 0);
    let r = &v["result"];
    let rec = r["recursive"].as_f64().unwrap();
    assert!((rec - r["closed_form"].as_f64().unwrap()).abs() <= 1e-12);
    assert!(r["abs_diff"].as_f64().unwrap() <= 4.0 * r["stderr"].as_f64().unwrap() + 1e-12);
}

#[test]
fn theta_expansion_csv_and_values() {
    let out = itheta(&["theta", "--config", &config("signature_1_1.toml"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("exponent,coefficient"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    // every exponent is Q(μ) = -1/8 modulo 1
    for row in rows {
        let (n, _) = row.split_once(',').unwrap();
        let n = indefinite_theta::rational::parse_rat(n).unwrap();
        let shifted = n + indefinite_theta::rational::rat(1, 8);
        assert!(shifted.is_integer(), "{row}");
    }

    let (code, v) = run_json(&["theta", "--config", &config("signature_1_1.toml"), "--tau", "0.1,50"]);
    assert_eq!(code, 0);
    let value = &v["result"]["values"][0];
    let c = &value["completed"];
    let h = &value["holomorphic"];
    let d = (c["re"].as_f64().unwrap() - h["re"].as_f64().unwrap()).hypot(c["im"].as_f64().unwrap() - h["im"].as_f64().unwrap());
    assert!(d <= 1e-6);
}

#[test]
fn theta_json_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let cfg = config("signature_1_1.toml");
    assert_eq!(itheta(&["theta", "--config", &cfg, "--out", first.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        itheta(&["theta", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]).status.code(),
        Some(0)
    );
    assert_eq!(std::fs::read_to_string(first).unwrap(), std::fs::read_to_string(second).unwrap());
}

#[test]
fn shadow_matches_lowering() {
    let (code, v) = run_json(&["shadow", "--config", &config("signature_1_1.toml")]);
    assert_eq!(code, 0);
    let row = &v["result"]["values"][0];
    let s = &row["shadow"];
    let size = s["re"].as_f64().unwrap().hypot(s["im"].as_f64().unwrap());
    let budget = 5.0 * (s["est_error"].as_f64().unwrap() + row["lowering_fd"]["est_error"].as_f64().unwrap());
    assert!(row["abs_diff"].as_f64().unwrap() <= (1e-4 * size).max(budget));
}

#[test]
fn shadow_vanishes_on_a_parity_zero_coset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("job.toml");
    let text = std::fs::read_to_string(fixture("signature_1_1.toml")).unwrap().replace("\"1/4\"", "\"1/2\"");
    std::fs::write(&path, text.replace("coset = [\"0\",", "coset = [\"1/2\",")).unwrap();
    let (code, v) = run_json(&["shadow", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let row = &v["result"]["values"][0];
    for key in ["shadow", "lowering_fd"] {
        let z = &row[key];
        assert!(z["re"].as_f64().unwrap().hypot(z["im"].as_f64().unwrap()) <= 1e-6, "{key}: {z}");
    }
}

#[test]
fn verify_suites() {
    let (code, v) = run_json(&["verify", "simplicial-phi"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["suites"][0]["cases"], 363);

    let (code, v) = run_json(&["verify", "sum-identity", "--tol", "1e-30"]);
    assert_eq!(code, 4);
    assert_eq!(v["result"]["suites"][0]["tolerance"], 1e-30);

    let (_, a) = run_json(&["verify", "boundary-limit", "--seed", "1"]);
    let (_, b) = run_json(&["verify", "boundary-limit", "--seed", "2"]);
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn input_errors_exit_with_one() {
    assert_eq!(itheta(&["check"]).status.code(), Some(1));
    assert_eq!(itheta(&["verify", "no-such-suite"]).status.code(), Some(1));
    assert_eq!(itheta(&["check", "--config", "/nonexistent.toml"]).status.code(), Some(1));
    assert_eq!(itheta(&["check", "--config", &config("good_pair.toml"), "--format", "csv"]).status.code(), Some(1));
    assert_eq!(itheta(&["theta", "--config", &config("signature_1_1.toml"), "--tau", "0,-1"]).status.code(), Some(1));
}
