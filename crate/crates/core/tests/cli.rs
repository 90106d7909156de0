use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cbf_synth::runner::{
    read_trace_csv, render_trace_csv, run_pipeline, Overrides, Scenario, ScenarioConfig,
    TRACE_COLUMNS,
};
use cbf_synth::sim::TraceMeta;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn synth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synth"))
        .args(args)
        .output()
        .expect("spawn synth")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, report) = (dir.path().join("t.csv"), dir.path().join("r.txt"));
    let cfg = fixture("short_cruise.toml");
    let out = synth(&["run", &cfg, "--trace", p(&trace), "--report", p(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("status=success"));
    let csv = fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRACE_COLUMNS.join(","));
    assert_eq!(lines.count(), 3001);
    let rep = fs::read_to_string(&report).unwrap();
    assert!(rep.lines().any(|l| l == "status=success"));
    assert!(rep.contains("scenario_hash="));
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("short_cruise.toml");
    let mut files = Vec::new();
    for k in 0..2 {
        let (t, r) = (dir.path().join(format!("t{k}.csv")), dir.path().join(format!("r{k}.txt")));
        let out = synth(&["run", &cfg, "--trace", p(&t), "--report", p(&r)]);
        assert_eq!(out.status.code(), Some(0));
        files.push((fs::read(&t).unwrap(), fs::read(&r).unwrap()));
    }
    assert!(files[0].0 == files[1].0, "traces differ");
    assert!(files[0].1 == files[1].1, "reports differ");
}

#[test]
fn dt_override_changes_row_count_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("short_cruise.toml");
    let (t1, r1) = (dir.path().join("a.csv"), dir.path().join("a.txt"));
    let (t2, r2) = (dir.path().join("b.csv"), dir.path().join("b.txt"));
    synth(&["run", &cfg, "--trace", p(&t1), "--report", p(&r1)]);
    let out = synth(&["run", &cfg, "--dt", "0.02", "--trace", p(&t2), "--report", p(&r2)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&t2).unwrap().lines().count(), 1502);
    let hash = |f: &Path| {
        fs::read_to_string(f)
            .unwrap()
            .lines()
            .find(|l| l.starts_with("scenario_hash="))
            .unwrap()
            .to_string()
    };
    assert_ne!(hash(&r1), hash(&r2));
}

#[test]
fn static_incompatibility_exits_2() {
    let out = synth(&["check", &fixture("disjoint_sets.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("compatible=false"));

    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.txt");
    let out = synth(&["run", &fixture("disjoint_sets.toml"), "--report", p(&r)]);
    assert_eq!(out.status.code(), Some(2));
    let rep = fs::read_to_string(&r).unwrap();
    assert!(rep.lines().any(|l| l == "status=failure"));
    assert!(rep.contains("empty intersection"));
}

#[test]
fn check_accepts_compatible_config() {
    let out = synth(&["check", &fixture("short_cruise.toml")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("compatible=true"));
}

#[test]
fn runtime_infeasibility_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.txt");
    let out = synth(&["run", &fixture("red_light_infeasible.toml"), "--report", p(&r)]);
    assert_eq!(out.status.code(), Some(3));
    let rep = fs::read_to_string(&r).unwrap();
    assert!(rep.lines().any(|l| l == "status=failure"));
    assert!(rep.lines().any(|l| l.starts_with("failure time=")));
}

#[test]
fn config_errors_exit_4_and_name_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "horizon = 10.0\n[vehicle]\nmass = -3.0\n").unwrap();
    let out = synth(&["run", p(&cfg)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("vehicle.mass"), "{}", stderr(&out));

    fs::write(&cfg, "horizon = 10.0\nbogus = 1\n").unwrap();
    assert_eq!(synth(&["check", p(&cfg)]).status.code(), Some(4));
    assert_eq!(synth(&["run", p(&dir.path().join("missing.toml"))]).status.code(), Some(4));
}

#[test]
fn monitor_reports_satisfaction_and_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("short_cruise.toml");
    let good = dir.path().join("good.csv");
    assert_eq!(synth(&["run", &cfg, "--trace", p(&good)]).status.code(), Some(0));
    let out = synth(&["monitor", p(&good), &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("all_satisfied=true"));

    let bad = dir.path().join("bad.csv");
    let mut csv = String::from("t,X_f,V_f,X_l\n");
    for k in 0..=30 {
        let t = k as f64;
        csv += &format!("{t},{},{},{}\n", 15.0 * t, 15.0, 15.0 * t + 2.0);
    }
    fs::write(&bad, csv).unwrap();
    let out = synth(&["monitor", p(&bad), &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("satisfied=false"));
}

#[test]
fn log_level_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_synth"))
        .args(["check", &fixture("short_cruise.toml")])
        .env("SYNTH_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("INFO"), "{}", stderr(&out));
}

#[test]
fn preset_has_expected_parameters() {
    let cfg = ScenarioConfig::load("paper_sec6").unwrap();
    let sc = Scenario::load("paper_sec6", &Overrides::default()).unwrap();
    assert_eq!(sc.params.mass, 1650.0);
    assert!((sc.params.a_max - 3.92).abs() < 1e-12);
    assert_eq!(sc.dt, 0.01);
    assert_eq!(cfg.dt, 0.01);
}

#[test]
fn dt_defaults_when_absent() {
    let cfg = ScenarioConfig::parse("horizon = 5.0\n").unwrap();
    assert_eq!(cfg.dt, 0.01);
}

#[test]
fn csv_has_one_line_per_row_plus_header() {
    let sc = Scenario::load(&fixture("short_cruise.toml"), &Overrides::default()).unwrap();
    let mut trace = run_pipeline(&sc).unwrap().trace.unwrap();
    trace.rows.truncate(3);
    trace.meta = TraceMeta::default();
    let text = render_trace_csv(&trace, &sc);
    assert_eq!(text.lines().count(), 4);
    let back = read_trace_csv(&text).unwrap();
    assert_eq!(back.rows.len(), 3);
    for (a, b) in back.rows.iter().zip(&trace.rows) {
        for (x, y) in a.x.iter().zip(&b.x) {
            assert!((x - y).abs() <= 5e-7 * (1.0 + y.abs()));
        }
    }
}
