use cbf_synth::runner::{run_pipeline, Outcome, Overrides, Scenario};

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn final_state(dt: f64) -> Vec<f64> {
    let o = Overrides {
        dt: Some(dt),
        ..Overrides::default()
    };
    let sc = Scenario::load("paper_sec6", &o).unwrap();
    let res = run_pipeline(&sc).unwrap();
    assert!(res.report.is_success(), "dt={dt}: {:?}", res.report.failure);
    res.trace.unwrap().rows.last().unwrap().x.clone()
}

#[test]
#[ignore = "fails: final X_f moves by about 0.1 m when dt is halved (sampled-data filter with switching constraints)"]
fn halving_dt_barely_moves_final_state() {
    let coarse = final_state(0.01);
    let fine = final_state(0.005);
    for (k, (a, b)) in coarse.iter().zip(&fine).enumerate() {
        assert!((a - b).abs() < 1e-4, "component {k}: {a} vs {b}");
    }
}

#[test]
fn trace_lies_on_uniform_grid() {
    let sc = Scenario::load(&fixture("short_cruise.toml"), &Overrides::default()).unwrap();
    let trace = run_pipeline(&sc).unwrap().trace.unwrap();
    let steps = (sc.horizon / sc.dt).round() as usize;
    assert_eq!(trace.rows.len(), steps + 1);
    for (k, r) in trace.rows.iter().enumerate() {
        assert!((r.t - k as f64 * sc.dt).abs() < 1e-9, "row {k} at t={}", r.t);
        assert!(r.x.iter().all(|v| v.is_finite()));
        assert_eq!(r.u_safe.len(), 1);
    }
}

#[test]
fn runs_are_deterministic() {
    let sc = Scenario::load(&fixture("short_cruise.toml"), &Overrides::default()).unwrap();
    let a = run_pipeline(&sc).unwrap();
    let b = run_pipeline(&sc).unwrap();
    assert_eq!(a.report.to_string(), b.report.to_string());
    assert_eq!(a.trace, b.trace);
}

#[test]
fn next_speed_limit_holds_at_each_switch() {
    let sc = Scenario::load("paper_sec6", &Overrides::default()).unwrap();
    let trace = run_pipeline(&sc).unwrap().trace.unwrap();
    let (_, limits) = sc.speed_limits.as_ref().unwrap();
    let col = trace.margin_index("hv").unwrap();
    let mut checked = 0;
    for r in &trace.rows {
        let near_switch = (r.t / 50.0 - (r.t / 50.0).round()).abs() * 50.0 < 1e-9 && r.t > 0.0;
        if near_switch && r.t < sc.horizon {
            assert!(r.margins[col] >= -1e-3, "t={}: V_f={} limit={}", r.t, r.x[1], limits.limit_at(r.t));
            checked += 1;
        }
    }
    assert!(checked >= 9);
}

#[test]
fn runtime_failure_keeps_partial_trace() {
    let sc = Scenario::load(&fixture("red_light_infeasible.toml"), &Overrides::default()).unwrap();
    let res = run_pipeline(&sc).unwrap();
    assert_eq!(res.report.outcome, Outcome::RuntimeInfeasibility);
    let tf = res.report.failure_time.unwrap();
    assert!(tf > 0.0 && tf < sc.horizon);
    let trace = res.trace.unwrap();
    assert!(trace.rows.last().unwrap().t <= tf + 1e-9);
}
