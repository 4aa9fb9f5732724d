//! End-to-end tests of the `hmc` binary: exit codes, output files,
//! determinism, and config precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hmc"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hmc_cli_{name}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn summary(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

#[test]
fn sample_is_deterministic_and_row_complete() {
    let dir = tmp_dir("sample");
    let args = [
        "sample",
        "--potential",
        "quadratic",
        "--dim",
        "2",
        "--mu",
        "1",
        "--L",
        "100",
        "--eps",
        "0.1",
        "--seed",
        "7",
        "--steps",
        "50",
        "--chains",
        "2",
    ];
    let a = run_in(&dir, &[&args[..], &["--out", "a"]].concat());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run_in(&dir, &[&args[..], &["--out", "b"]].concat());
    assert!(b.status.success());

    let csv_a = std::fs::read(dir.join("a/trajectory.csv")).unwrap();
    let csv_b = std::fs::read(dir.join("b/trajectory.csv")).unwrap();
    assert_eq!(
        csv_a, csv_b,
        "same flags and seed must give identical bytes"
    );

    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("chain,step,x0,x1,grads"));
    // 2 chains x (50 steps + start row).
    assert_eq!(text.lines().count(), 1 + 2 * 51);

    let json = summary(&a);
    assert_eq!(json["ok"], true);
    assert!(json["git_describe"].is_string());
    assert!(json["duration_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(json["config"]["seed"], 7);
}

#[test]
fn oversized_epsilon_is_a_config_error() {
    let dir = tmp_dir("bad_eps");
    let out = run_in(&dir, &["sample", "--eps", "10", "--dim", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn contraction_grid_and_pairs_are_validated() {
    let dir = tmp_dir("contraction_bad");
    let beyond = run_in(
        &dir,
        &[
            "contraction",
            "--pairs",
            "10",
            "--t-max",
            "0.3",
            "--kappa",
            "100",
        ],
    );
    assert_eq!(beyond.status.code(), Some(1));
    let none = run_in(&dir, &["contraction", "--pairs", "0"]);
    assert_eq!(none.status.code(), Some(1));
}

#[test]
fn contraction_default_holds() {
    let dir = tmp_dir("contraction_ok");
    let out = run_in(&dir, &["contraction", "--pairs", "60", "--seed", "3"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = summary(&out);
    assert_eq!(json["results"]["contraction_bound_holds"], true);
    assert_eq!(json["results"]["crude_bound_holds"], true);
    let csv = std::fs::read_to_string(dir.join("out/contraction.csv")).unwrap();
    assert!(csv.starts_with("t,worst_ratio,bound\n"));
    assert_eq!(csv.lines().count(), 1 + 65);
}

#[test]
fn odecheck_meets_contract() {
    let dir = tmp_dir("odecheck");
    let out = run_in(
        &dir,
        &[
            "odecheck",
            "--potential",
            "quadratic",
            "--deltas",
            "1e-8",
            "--trials",
            "8",
        ],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("out/odecheck.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial,delta,error,grads"));
    for line in lines {
        let error: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(error <= 1e-7, "collocation error {error} above 10*delta");
    }
}

#[test]
fn w2_exact_gate_passes_and_writes_csv() {
    let dir = tmp_dir("w2");
    let out = run_in(
        &dir,
        &[
            "w2",
            "--dim",
            "3",
            "--kappa",
            "2",
            "--eps",
            "0.2",
            "--replicas",
            "3000",
            "--seed",
            "5",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = summary(&out);
    assert_eq!(json["results"]["passed_with_constant"], 2.0);
    let w2 = json["results"]["w2"].as_f64().unwrap();
    assert!(w2 <= 0.2);
    let csv = std::fs::read_to_string(dir.join("out/w2.csv")).unwrap();
    assert!(csv.starts_with("replicas,N,w2,bound\n"));
}

#[test]
fn w2_non_exact_solver_requires_step_cap() {
    let dir = tmp_dir("w2_steps");
    let out = run_in(&dir, &["w2", "--solver", "collocation"]);
    assert_eq!(out.status.code(), Some(1));
    let capped = run_in(
        &dir,
        &[
            "w2",
            "--solver",
            "collocation",
            "--dim",
            "3",
            "--kappa",
            "2",
            "--eps",
            "0.5",
            "--replicas",
            "200",
            "--steps",
            "30",
        ],
    );
    // With so few steps the chain cannot converge; the point is that the
    // honest path runs and reports rather than erroring.
    assert!(matches!(capped.status.code(), Some(0) | Some(3)));
}

#[test]
fn lowerbound_reports_gap_agreement() {
    let dir = tmp_dir("lowerbound");
    let out = run_in(&dir, &["lowerbound", "--steps", "60000", "--seed", "2"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = summary(&out);
    assert_eq!(json["results"]["lag1_within_3se_of_exact"], true);
    let tau = json["results"]["relaxation_estimate"].as_f64().unwrap();
    assert!(tau >= json["results"]["pass_threshold"].as_f64().unwrap());
    let csv = std::fs::read_to_string(dir.join("out/autocorr.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("coord,lag1,std_err,exact"));
    assert_eq!(csv.lines().count(), 3);
    // Both coordinates are AR(1) with the closed-form coefficient.
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|c| c.parse().unwrap())
            .collect();
        let (lag1, std_err, exact) = (cells[0], cells[1], cells[2]);
        assert!(
            (lag1 - exact).abs() <= 3.0 * std_err,
            "lag1 {lag1} vs exact {exact} (se {std_err})"
        );
    }
}

#[test]
fn gradscaling_trend_window() {
    let dir = tmp_dir("gradscaling");
    let out = run_in(
        &dir,
        &[
            "gradscaling",
            "--kappas",
            "16,64",
            "--eps",
            "0.001",
            "--steps",
            "40",
            "--seed",
            "1",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = summary(&out);
    let checks = json["results"]["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for check in checks {
        assert_eq!(check["ok"], true, "trend check failed: {check}");
        let ratio = check["ratio"].as_f64().unwrap();
        assert!((1.4..=2.9).contains(&ratio));
    }
    let csv = std::fs::read_to_string(dir.join("out/gradscaling.csv")).unwrap();
    assert!(csv.starts_with("kappa,eps,mean_grads_per_step\n"));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tmp_dir("config");
    std::fs::write(
        dir.join("cfg.json"),
        r#"{"seed": 42, "dim": 3, "kappa": 4.0, "steps": 20}"#,
    )
    .unwrap();
    let out = run_in(&dir, &["sample", "--config", "cfg.json", "--seed", "9"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = summary(&out);
    assert_eq!(json["config"]["seed"], 9, "flag beats file");
    assert_eq!(json["config"]["dim"], 3, "file beats default");
    assert_eq!(json["config"]["kappa"], 4.0);
    assert_eq!(json["config"]["steps"], 20);

    let missing = run_in(&dir, &["sample", "--config", "nope.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn help_and_usage_exit_codes() {
    let dir = tmp_dir("help");
    assert_eq!(run_in(&dir, &["--help"]).status.code(), Some(0));
    assert_eq!(run_in(&dir, &["not-a-command"]).status.code(), Some(1));
    assert_eq!(run_in(&dir, &["sample", "--bogus"]).status.code(), Some(1));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tmp_dir("config_typo");
    std::fs::write(dir.join("cfg.json"), r#"{"sede": 42}"#).unwrap();
    let out = run_in(&dir, &["sample", "--config", "cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}
