use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kcost(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcost"))
        .current_dir(dir)
        .env_remove("KCOST_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, name: &str) -> Value {
    let text = fs::read_to_string(dir.join("kcost-out").join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn lower_1d_data(dir: &Path) {
    let out = kcost(dir, &["gen", "lower1d", "--epsilon", "0.03125", "--t", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn estimate_l_at_unit_epsilon_is_k() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("x.csv"), "0\n1\n2\n10\n11\n30\n").unwrap();
    let out = kcost(tmp.path(), &["estimate-l", "--data", "x.csv", "--k", "1", "--epsilon", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path(), "estimate-l");
    assert_eq!(r["results"]["l_hat"], 1);
    assert_eq!(r["results"]["exact"], true);
    assert_eq!(r["pass"], Value::Null);
}

#[test]
fn decay_curve_on_lower_bound_instance() {
    let tmp = TempDir::new().unwrap();
    lower_1d_data(tmp.path());
    let out = kcost(tmp.path(), &["decay-curve", "--data", "kcost-out/data.csv", "--mmax", "5", "--oracle", "dp1d"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("kcost-out/curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,cost,exact");
    // ±2 with multiplicity 4, ±4 once: Δ₂ puts one center per side
    assert_eq!(&lines[1..], ["1,64,true", "2,6.4,true", "3,3.2,true", "4,0,true", "5,0,true"]);
}

#[test]
fn seeding_curve_is_non_increasing() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"family":"gaussian-mixture","n":120,"d":2,"k":4,"sigma":1,"spread":10}"#;
    let out = kcost(tmp.path(), &["decay-curve", "--spec", spec, "--mmax", "15", "--mode", "seeding", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path(), "decay-curve");
    let costs: Vec<f64> = r["results"]["curve"].as_array().unwrap().iter().map(|p| p["cost"].as_f64().unwrap()).collect();
    assert_eq!(costs.len(), 15);
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));
    assert!(r["results"]["curve"][0]["exact"] == false);
}

#[test]
fn coreset_pipeline_passes() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"family":"uniform-box","n":150,"d":2,"lo":-3,"hi":3}"#;
    let out = kcost(tmp.path(), &["coreset", "--spec", spec, "--k", "2", "--epsilon", "0.5", "--trials", "300"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path(), "coreset");
    assert_eq!(r["pass"], true);
    assert_eq!(r["results"]["certificate"]["evaluated"], 300);
    let csv = fs::read_to_string(tmp.path().join("kcost-out/coreset.csv")).unwrap();
    let total: f64 = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert_eq!(total, 150.0);
}

#[test]
fn empty_trial_list_fails_certificate() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"family":"ball","n":40,"d":2,"radius":1}"#;
    let out = kcost(tmp.path(), &["coreset", "--spec", spec, "--k", "2", "--epsilon", "0.5", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(tmp.path(), "coreset");
    assert_eq!(r["pass"], false);
    assert_eq!(r["results"]["certificate"]["trials"], 0);
}

#[test]
fn reruns_are_identical_except_timestamp() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"family":"ball","n":60,"d":3,"radius":2}"#;
    let args = ["seed", "--spec", spec, "--k", "2", "--epsilon", "0.5", "--trials", "10", "--seed", "17"];
    let strip = |dir: &Path| {
        let mut r = report(dir, "seed");
        r["timestamp"] = Value::Null;
        serde_json::to_string_pretty(&r).unwrap()
    };
    assert_eq!(kcost(tmp.path(), &args).status.code(), Some(0));
    let first = strip(tmp.path());
    assert_eq!(kcost(tmp.path(), &args).status.code(), Some(0));
    assert_eq!(first, strip(tmp.path()));
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kcost"))
        .current_dir(tmp.path())
        .env("KCOST_SEED", "99")
        .args(["nets", "--d", "2", "--epsilon", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path(), "nets");
    assert_eq!(r["config"]["seed"], 99);
    assert_eq!(r["results"]["size"], 12);
    assert_eq!(r["pass"], true);
}

#[test]
fn trace_mode_writes_picks() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("x.csv"), "0\n1\n3\n").unwrap();
    let out = kcost(tmp.path(), &["seed", "--data", "x.csv", "--m", "2", "--first", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("kcost-out/trace.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,index,cost");
    assert_eq!(lines[1], "1,0,10");
    assert_eq!(lines.len(), 3);
}

#[test]
fn constructions_certify() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("x.csv"), "-4\n-1\n0.5\n2\n7\n7.5\n").unwrap();
    let out = kcost(tmp.path(), &["construct", "upper1d", "--data", "x.csv", "--epsilon", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(tmp.path(), "construct")["pass"], true);

    let spec = r#"{"family":"ball","n":80,"d":3,"radius":1}"#;
    let out = kcost(tmp.path(), &["construct", "fan", "--spec", spec, "--k", "2", "--epsilon", "0.5", "--pool", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(tmp.path(), "construct")["pass"], true);

    fs::write(tmp.path().join("m.csv"), "0,1,1,1\n1,0,1,1\n1,1,0,1\n1,1,1,0\n").unwrap();
    let out = kcost(tmp.path(), &["construct", "annuli", "--matrix", "m.csv", "--center", "0", "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(tmp.path(), "construct")["pass"], true);
}

#[test]
fn lower_bound_generators_certify() {
    let tmp = TempDir::new().unwrap();
    let out = kcost(tmp.path(), &["gen", "lower-ddim", "--epsilon", "0.03125", "--k", "2", "--d", "2", "--t", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path(), "gen");
    assert_eq!(r["pass"], true);
    assert_eq!(r["results"]["certificate"]["voronoi_ok"], true);
    assert!(tmp.path().join("kcost-out/sites.csv").exists());
}

#[test]
fn metric_estimates_from_points() {
    let tmp = TempDir::new().unwrap();
    let rows: String = (0..20).map(|i| format!("{i}\n")).collect();
    fs::write(tmp.path().join("line.csv"), rows).unwrap();
    let out = kcost(tmp.path(), &["metric", "--data", "line.csv", "--epsilon", "0.5", "--balls", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path(), "metric");
    assert_eq!(r["results"]["gamma"]["exhaustive"], true);
    assert!(r["results"]["doubling"]["d_hat"].as_f64().unwrap() <= 2.0);
}

#[test]
fn usage_and_input_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(kcost(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(kcost(tmp.path(), &["solve", "--k", "2"]).status.code(), Some(1));
    assert_eq!(kcost(tmp.path(), &["solve", "--data", "missing.csv", "--k", "2"]).status.code(), Some(1));
    assert_eq!(kcost(tmp.path(), &["seed", "--data", "x.csv", "--m", "2", "--k", "1"]).status.code(), Some(1));
    fs::write(tmp.path().join("x.csv"), "0\n1\n").unwrap();
    assert_eq!(kcost(tmp.path(), &["solve", "--data", "x.csv", "--k", "5"]).status.code(), Some(1));
    assert_eq!(kcost(tmp.path(), &["--help"]).status.code(), Some(0));
}
