use std::path::Path;
use std::process::{Command, Output};

const PAIR: &str = r#"{
  "schema_version": 1,
  "atoms": [{"position": -1, "mass": 0.5, "velocity": 0}, {"position": 1, "mass": 0.5, "velocity": 0}],
  "tau": 1,
  "times": [0, 1],
  "t_end": 6,
  "grid": {"min": -3, "max": 3, "count": 101}
}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_stickyrelax"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("STICKYRELAX_OUT")
        .env_remove("STICKYRELAX_SEED")
        .output()
        .unwrap()
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let j = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

#[test]
fn solve_mass_steps_at_the_characteristics() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), PAIR, &["solve"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/solution_t1.csv")).unwrap();
    assert!(text.starts_with("x,m,q,u,E,branch\n"));
    let x: Vec<f64> = column(&text, "x").iter().map(|v| v.parse().unwrap()).collect();
    let m: Vec<f64> = column(&text, "m").iter().map(|v| v.parse().unwrap()).collect();
    // free paths at t = 1: -1 + e^{-1}/4 and its mirror image
    let path = 1.0 - (-1.0f64).exp() / 4.0;
    for (xi, mi) in x.iter().zip(&m) {
        let expected = if *xi <= -path { 0.0 } else if *xi <= path { 0.5 } else { 1.0 };
        assert_eq!(*mi, expected, "x = {xi}");
    }
    let initial = std::fs::read_to_string(dir.path().join("out/solution_t0.csv")).unwrap();
    let m0 = column(&initial, "m");
    assert_eq!(m0[20], "0.0000000000000000e0");
    assert_eq!(m0[40], "5.0000000000000000e-1");
    assert_eq!(m0[80], "1.0000000000000000e0");
}

#[test]
fn oracle_logs_the_symmetric_collision() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), PAIR, &["oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("out/oracle_events.csv")).unwrap();
    let t: Vec<f64> = column(&text, "time").iter().map(|v| v.parse().unwrap()).collect();
    let x: Vec<f64> = column(&text, "position").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(t.len(), 1);
    assert!((t[0] - 4.9932).abs() < 1e-4);
    assert_eq!(x[0], 0.0);
    assert!(dir.path().join("out/oracle_t1.csv").exists());
}

#[test]
fn compare_random_instances_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema_version": 1, "random": {"count": 20}, "times": [0.5, 1, 2, 4, 8]}"#;
    let out = run(dir.path(), cfg, &["compare", "--seed", "17"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
    assert_eq!(text.lines().count(), 101);
    for v in column(&text, "max_dm") {
        assert!(v.parse::<f64>().unwrap() <= 1e-9);
    }
    assert!(column(&text, "pass").iter().all(|p| p == "true"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    let empty = r#"{"schema_version": 1, "atoms": [], "tau": 1, "times": [1]}"#;
    let out = run(p, empty, &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measure must be nonempty"));

    let unknown = PAIR.replacen("\"tau\": 1,", "\"tau\": 1, \"colour\": 1,", 1);
    assert_eq!(run(p, &unknown, &["solve"]).status.code(), Some(2));

    let overflow = PAIR.replace("\"times\": [0, 1]", "\"times\": [1.7e308]").replace("\"tau\": 1,", "\"tau\": 0.1,");
    let out = run(p, &overflow, &["solve"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eval_grid"));

    let out = run(p, PAIR, &["compare", "--tol-tie", "0.9"]);
    assert_eq!(out.status.code(), Some(4));

    let missing = Command::new(env!("CARGO_BIN_EXE_stickyrelax"))
        .args(["plot", "--out"])
        .arg(p.join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    assert_eq!(run(p, PAIR, &["solve"]).status.code(), Some(0));
}

#[test]
fn plot_renders_solution_and_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PAIR.replace("\"tau\": 1,", "\"tau\": 1, \"tau_sequence\": [0.5, 0.25, 0.125],");
    for cmd in ["solve", "relax", "plot"] {
        let out = run(dir.path(), &cfg, &[cmd]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let svg = std::fs::read_to_string(dir.path().join("out/solution_t1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    let relax = std::fs::read_to_string(dir.path().join("out/relax_report.svg")).unwrap();
    assert!(relax.contains("err_m") && relax.contains("err_u"));
}

#[test]
fn env_overrides_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, PAIR).unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_stickyrelax"))
        .arg("solve")
        .env("STICKYRELAX_CONFIG", &path)
        .env("STICKYRELAX_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("solution_t1.csv").exists());
}

#[test]
fn validate_passes_on_symmetric_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), PAIR, &["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/validate_report.csv")).unwrap();
    let checks = column(&text, "check");
    for name in ["oleinik", "weak_mass_formula_t1", "weak_momentum_oracle_t1", "nu_x_t1", "continuity_m", "drift_closed_form"] {
        assert!(checks.iter().any(|c| c == name), "{name} missing");
    }
}
