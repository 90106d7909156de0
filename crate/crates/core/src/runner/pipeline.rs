use std::sync::Arc;

use super::report::{CrossCheckSummary, MarginSummary, Outcome, QpCounts, RunReport};
use super::{RunError, Scenario};
use crate::barrier::{Barrier, FcbfParams};
use crate::contract::{compile_groups, ContractError, GroupContract};
use crate::qp::PidState;
use crate::sim::{run_simulation, QpStatus, SimError, SimSetup, Trace, TraceMeta};
use crate::stl::{group_tasks, monitor_trace, SatisfactionReport, StlError};
use crate::vehicle::{cross_check, BoundKind, LeadProfile, SpacingBarrier, VehicleParams};

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub report: RunReport,
    /// Whatever prefix of the trace exists; `None` when the run stopped
    /// before simulating.
    pub trace: Option<Trace<f64>>,
}

fn stl_err(e: StlError) -> RunError {
    RunError::Config(vec![format!("spec: {e}")])
}

/// Preprocesses, groups and compiles the mission into contracts, checking
/// every boundary statically.
pub fn check(sc: &Scenario) -> Result<Vec<GroupContract<f64>>, RunError> {
    let globally = sc.spec.eventually_to_globally().map_err(stl_err)?;
    let groups = group_tasks(&globally).map_err(stl_err)?;
    log::info!("{} predicates in {} groups", globally.predicate_count(), groups.len());
    compile_groups(&groups, &sc.registry, &sc.schedule).map_err(|e| match e {
        ContractError::Incompatible { ref report, .. } => RunError::Static {
            message: e.to_string(),
            report: report.clone(),
        },
        other => RunError::Config(vec![format!("contracts: {other}")]),
    })
}

pub fn monitor(sc: &Scenario, trace: &Trace<f64>) -> Result<SatisfactionReport<f64>, RunError> {
    monitor_trace(trace, &sc.spec, &sc.registry, sc.monitor_tol)
        .map_err(|e| RunError::Input(e.to_string()))
}

struct VehicleNominal {
    pid: PidState<f64>,
    params: VehicleParams<f64>,
    lead: Arc<LeadProfile<f64>>,
    spacing: Barrier<f64>,
}

impl crate::sim::NominalController<f64> for VehicleNominal {
    fn nominal(&mut self, t: f64, x: &[f64], dt: f64) -> Vec<f64> {
        let e = self.spacing.value(t, x);
        let v_rel = self.lead.speed(t) - x[1];
        let f = self.params.friction_force(x[1]);
        vec![self.pid.step(e, v_rel, dt, self.params.mass, f)]
    }
}

/// Runs check, simulation and monitoring. Configuration problems are
/// errors; static and runtime failures are reported through the outcome.
pub fn run_pipeline(sc: &Scenario) -> Result<PipelineResult, RunError> {
    let mut report = RunReport::new(sc);
    let contracts = match check(sc) {
        Ok(c) => c,
        Err(RunError::Static { message, report: rendered }) => {
            report.outcome = Outcome::StaticIncompatibility;
            report.failure = Some(message);
            report.compatibility.push(rendered);
            return Ok(PipelineResult {
                report,
                trace: None,
            });
        }
        Err(e) => return Err(e),
    };
    for c in &contracts {
        for r in c.reports() {
            report.compatibility.push(r.to_string());
        }
    }

    let (h1, hv, hpos) = sc.column_barriers();
    let monitored: Vec<Barrier<f64>> = [Some(h1), hv, hpos].into_iter().flatten().collect();
    let mut nominal = VehicleNominal {
        pid: sc.pid.clone(),
        params: sc.params,
        lead: sc.model.lead.clone(),
        spacing: Barrier::new("h1", SpacingBarrier::new(sc.params, sc.model.lead.clone())),
    };
    let outcome = run_simulation(SimSetup {
        sys: &sc.model,
        contracts: &contracts,
        nominal: &mut nominal,
        input_box: &sc.input_box,
        monitored: &monitored,
        x0: sc.x0.clone(),
        dt: sc.dt,
        horizon: sc.horizon,
        tol: sc.assumption_tol,
        meta: TraceMeta {
            scenario_hash: sc.hash.clone(),
            dt: sc.dt,
            horizon: sc.horizon,
            events: Vec::new(),
        },
    });
    let outcome = match outcome {
        Ok(o) => o,
        Err(e @ (SimError::InitialAssumption { .. } | SimError::Contract(_))) => {
            report.outcome = Outcome::RuntimeInfeasibility;
            report.failure = Some(format!("t=0.000000 {e}"));
            report.failure_time = Some(0.0);
            return Ok(PipelineResult {
                report,
                trace: None,
            });
        }
        Err(e) => return Err(RunError::Config(vec![format!("simulation: {e}")])),
    };
    summarize(sc, &outcome.trace, &mut report);
    if let Some(f) = &outcome.failure {
        report.outcome = Outcome::RuntimeInfeasibility;
        let active = if f.constraints.is_empty() {
            String::new()
        } else {
            format!(" active=[{}]", f.constraints.join(","))
        };
        report.failure = Some(format!("t={:.6} {}{}", f.time, f.reason, active));
        report.failure_time = Some(f.time);
    } else {
        let verdicts = monitor(sc, &outcome.trace)?;
        report.outcome = if verdicts.satisfied {
            Outcome::Success
        } else {
            Outcome::MonitorViolation
        };
        report.verdicts = Some(verdicts);
    }
    Ok(PipelineResult {
        report,
        trace: Some(outcome.trace),
    })
}

fn summarize(sc: &Scenario, trace: &Trace<f64>, report: &mut RunReport) {
    for (j, name) in trace.margin_names.iter().enumerate() {
        let worst = trace
            .rows
            .iter()
            .map(|r| (r.margins[j], r.t))
            .fold(None, |acc: Option<(f64, f64)>, (m, t)| match acc {
                Some((best, _)) if best <= m => acc,
                _ => Some((m, t)),
            });
        if let Some((margin, time)) = worst {
            report.min_margins.push(MarginSummary {
                name: name.clone(),
                margin,
                time,
            });
        }
    }
    let mut counts = QpCounts::default();
    for r in &trace.rows {
        match r.status {
            QpStatus::Unmodified => counts.unmodified += 1,
            QpStatus::Projected => counts.projected += 1,
            QpStatus::Infeasible => counts.infeasible += 1,
        }
    }
    report.qp = counts;
    report.events = trace.meta.events.len();
    report.cross_check = cross_check_along(sc, trace);
}

/// Closed-form bounds against the generic constraints at evenly spaced
/// rows of the trace.
fn cross_check_along(sc: &Scenario, trace: &Trace<f64>) -> Vec<CrossCheckSummary> {
    let mut out: Vec<CrossCheckSummary> = BoundKind::ALL
        .iter()
        .map(|&kind| CrossCheckSummary {
            kind,
            samples: 0,
            max_rel_error: 0.0,
            printed_mismatches: 0,
        })
        .collect();
    let stride = (trace.rows.len() / 200).max(1);
    let r_params = FcbfParams::new(sc.rho_r, 1.0).expect("validated rho");
    let v_params = FcbfParams::new(sc.rho_v, 1.0).expect("validated rho");
    for row in trace.rows.iter().step_by(stride) {
        let (t, x) = (row.t, row.x.as_slice());
        let stop = sc
            .signals
            .as_ref()
            .and_then(|s| {
                s.schedule()
                    .active_index(x[0])
                    .map(|k| s.schedule().signals()[k].position)
            })
            .unwrap_or(x[0] + 100.0);
        let v_max = sc
            .speed_limits
            .as_ref()
            .map_or(30.0, |(_, s)| s.limit_at(t));
        let r_rows = cross_check(&sc.model, t, x, stop, v_max, &r_params);
        let v_rows = cross_check(&sc.model, t, x, stop, v_max, &v_params);
        for (slot, kind) in out.iter_mut().zip(BoundKind::ALL) {
            let src = if kind == BoundKind::VFcbf { &v_rows } else { &r_rows };
            let row = src.iter().find(|r| r.kind == kind).expect("every kind is checked");
            slot.samples += 1;
            slot.max_rel_error = slot.max_rel_error.max(row.rel_error);
            if !row.printed_matches {
                slot.printed_mismatches += 1;
            }
        }
    }
    out
}
