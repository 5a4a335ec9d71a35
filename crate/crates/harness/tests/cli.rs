use std::process::{Command, Output};

use serde_json::Value;

fn cwglauber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwglauber"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn zeta_prints_the_root() {
    let out = cwglauber(&["zeta", "--beta", "1.2"]);
    assert!(out.status.success());
    let z = json(&out)["zeta"].as_f64().unwrap();
    assert!((z - 0.658_569_660_405_753_9).abs() < 1e-11);
}

#[test]
fn kernel_csv_has_one_row_per_state() {
    let out = cwglauber(&["kernel", "--n", "10", "--beta", "0.5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,s,up,hold,down,drift");
    assert_eq!(lines.count(), 11);
}

#[test]
fn censored_stationary_law_sums_to_one() {
    let out = cwglauber(&["stationary", "--n", "21", "--beta", "1.3", "--censored"]);
    assert!(out.status.success());
    let rows = json(&out);
    let total: f64 = rows.as_array().unwrap().iter().map(|r| r["pi"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(rows[0]["k"], 11.0);
}

#[test]
fn gap_matches_infinite_temperature() {
    let out = cwglauber(&["gap", "--n", "40", "--beta", "0"]);
    let v = json(&out);
    assert!((v["gap"].as_f64().unwrap() - 1.0 / 40.0).abs() < 1e-14);
    assert_eq!(v["method"], "tridiagonal-bisection");
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        vec!["gap", "--n", "1", "--beta", "0.5"],
        vec!["gap", "--n", "10"],
        vec!["zeta", "--beta", "0.9"],
        vec!["mix", "--n", "10", "--beta", "0.5", "--eps", "1.5"],
        vec!["scan", "warp"],
        vec!["verify", "no-such-check"],
        vec!["gap", "--n", "ten", "--beta", "0.5"],
        vec!["gap", "--n", "10,20", "--beta", "0.5"],
    ] {
        let out = cwglauber(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn resource_caps_exit_three() {
    let out = cwglauber(&["fullgap", "--n", "13", "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let out = cwglauber(&["mix", "--n", "200", "--beta", "1.5", "--cap-steps", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    let rows = json(&out);
    assert_eq!(rows[0]["exact"], 0.0);
    assert_eq!(rows[0]["t_mix"], 1000.0);
}

#[test]
fn fullgap_agrees_with_magnetization_chain() {
    let out = cwglauber(&["fullgap", "--n", "6", "--beta", "1.3"]);
    assert!(out.status.success());
    assert!(json(&out)["difference"].as_f64().unwrap() < 1e-8);
}

#[test]
fn simulate_is_reproducible_across_workers() {
    let run = |w: &str| {
        let out = cwglauber(&[
            "simulate", "--n", "30", "--beta", "0.8", "--reps", "12", "--seed", "5", "--workers", w,
        ]);
        assert!(out.status.success());
        json(&out)
    };
    let a = run("1");
    assert_eq!(a, run("3"));
    assert_eq!(a["provenance"], "monte-carlo");
    assert_eq!(a["master_seed"], 5);
}

#[test]
fn scan_from_spec_file_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("grid.spec");
    let csv = dir.path().join("out/cutoff.csv");
    std::fs::write(
        &spec,
        format!(
            "kind = cutoff-scan\nn = 100, 200\nbeta = 0.5\nformat = csv\nout = {}\n",
            csv.display()
        ),
    )
    .unwrap();
    let out = cwglauber(&["scan", "cutoff", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n,beta,delta,scaled_distance,t_mix_0.9"));
    assert_eq!(lines.count(), 2);

    let mismatch = cwglauber(&["scan", "critical", "--spec", spec.to_str().unwrap()]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn verify_writes_verdict_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("verdicts.json");
    let out = cwglauber(&["verify", "drift-identity", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS 4 drift-identity"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["verdicts"][0]["status"], "pass");
    assert_eq!(v["experiment"], "verify");
}
