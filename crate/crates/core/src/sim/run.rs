use std::fmt;

use super::integrate::rk4;
use super::{ControlSystem, QpStatus, SimError, Trace, TraceMeta, TraceRow};
use crate::barrier::Barrier;
use crate::contract::{conjoin_groups, GroupContract};
use crate::qp::{solve_qp, InputBox, QpError};
use crate::Scalar;

pub trait NominalController<T: Scalar> {
    fn nominal(&mut self, t: T, x: &[T], dt: T) -> Vec<T>;
}

impl<T: Scalar, F: FnMut(T, &[T], T) -> Vec<T>> NominalController<T> for F {
    fn nominal(&mut self, t: T, x: &[T], dt: T) -> Vec<T> {
        self(t, x, dt)
    }
}

pub struct SimSetup<'a, T: Scalar> {
    pub sys: &'a dyn ControlSystem<T>,
    pub contracts: &'a [GroupContract<T>],
    pub nominal: &'a mut dyn NominalController<T>,
    pub input_box: &'a InputBox<T>,
    /// Barriers whose margins are recorded at every row.
    pub monitored: &'a [Barrier<T>],
    pub x0: Vec<T>,
    pub dt: T,
    pub horizon: T,
    /// Tolerance on the initial assumption margins.
    pub tol: T,
    pub meta: TraceMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    Infeasible,
    DomainExit(Vec<f64>),
    NonFinite,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::Infeasible => write!(f, "safe input set is empty"),
            FailureReason::DomainExit(x) => write!(f, "state {x:?} left the domain"),
            FailureReason::NonFinite => write!(f, "non-finite state"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimFailure {
    pub time: f64,
    pub reason: FailureReason,
    /// Labels of the constraints active at the failing step.
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SimOutcome<T> {
    pub trace: Trace<T>,
    pub failure: Option<SimFailure>,
}

/// Closed-loop simulation: at each step the groups' active constraints are
/// intersected, the nominal input is projected onto them, and the system is
/// advanced by one RK4 step. Stops at the first infeasible projection or
/// unrecoverable domain exit; the trace prefix is kept.
pub fn run_simulation<T: Scalar>(setup: SimSetup<'_, T>) -> Result<SimOutcome<T>, SimError> {
    let SimSetup {
        sys,
        contracts,
        nominal,
        input_box,
        monitored,
        x0,
        dt,
        horizon,
        tol,
        meta,
    } = setup;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(SimError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= T::zero()) || !horizon.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    if x0.len() != sys.state_dim() || input_box.dim() != sys.input_dim() {
        return Err(SimError::Dimension(
            "initial state or input box does not match the system".into(),
        ));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite { t: 0.0 });
    }
    if !sys.domain().contains(&x0) {
        return Err(SimError::DomainExit {
            t: 0.0,
            state: x0.iter().map(|v| v.as_f64()).collect(),
        });
    }
    let t0 = T::zero();
    for c in contracts {
        if let Some((id, h)) = c.assumption_margin(t0, &x0) {
            if h < -tol {
                return Err(SimError::InitialAssumption {
                    group: c.label().to_string(),
                    barrier: id,
                    margin: h.as_f64(),
                });
            }
        }
    }

    let ratio = horizon / dt;
    let steps = (ratio - T::lit(1e-9) * (T::one() + ratio)).ceil().max(T::zero());
    let steps = steps.to_usize().ok_or_else(|| {
        SimError::InvalidParameter("horizon/dt is not a representable step count".into())
    })?;

    let mut trace = Trace::new(monitored.iter().map(|b| b.id().to_string()).collect(), meta);
    let mut states: Vec<_> = contracts.iter().map(|c| c.new_state()).collect();
    let mut x = x0;
    for k in 0..=steps {
        let t = T::from_usize(k).unwrap_or_else(T::zero) * dt;
        let active = conjoin_groups(contracts, &mut states, t, &x, sys)
            .map_err(|e| SimError::Contract(e.to_string()))?;
        for s in states.iter_mut() {
            for ev in s.events.drain(..) {
                log::debug!("t={:.4} {}: {}", ev.t.as_f64(), ev.kind, ev.message);
                trace.event(ev.t, ev.kind, ev.message);
            }
        }
        let u_nom = nominal.nominal(t, &x, dt);
        let halfspaces: Vec<_> = active.iter().map(|a| a.constraint.clone()).collect();
        let margins = monitored.iter().map(|b| b.value(t, &x)).collect();
        let (u_safe, status) = match solve_qp(&u_nom, &halfspaces, input_box) {
            Ok(u) => {
                let st = if u == u_nom {
                    QpStatus::Unmodified
                } else {
                    QpStatus::Projected
                };
                (u, st)
            }
            Err(QpError::Infeasible) => (u_nom.clone(), QpStatus::Infeasible),
            Err(e) => return Err(SimError::Dimension(e.to_string())),
        };
        trace.rows.push(TraceRow {
            t,
            x: x.clone(),
            u_nom,
            u_safe: u_safe.clone(),
            margins,
            active_constraints: active.len(),
            status,
        });
        if status == QpStatus::Infeasible {
            let labels: Vec<String> = active.iter().map(|a| a.to_string()).collect();
            log::warn!("t={:.4}: infeasible QP with {}", t.as_f64(), labels.join(", "));
            trace.event(t, "infeasible", labels.join(", "));
            return Ok(SimOutcome {
                trace,
                failure: Some(SimFailure {
                    time: t.as_f64(),
                    reason: FailureReason::Infeasible,
                    constraints: labels,
                }),
            });
        }
        if k == steps {
            break;
        }
        let mut next = rk4(sys, t, &x, &u_safe, dt);
        let t_next = t + dt;
        if next.iter().any(|v| !v.is_finite()) {
            return Ok(SimOutcome {
                trace,
                failure: Some(SimFailure {
                    time: t_next.as_f64(),
                    reason: FailureReason::NonFinite,
                    constraints: active.iter().map(|a| a.to_string()).collect(),
                }),
            });
        }
        if !sys.domain().contains(&next) {
            let raw: Vec<f64> = next.iter().map(|v| v.as_f64()).collect();
            match sys.recover(&mut next) {
                Some(msg) if sys.domain().contains(&next) => {
                    log::info!("t={:.4}: {msg}", t_next.as_f64());
                    trace.event(t_next, "recover", msg);
                }
                _ => {
                    return Ok(SimOutcome {
                        trace,
                        failure: Some(SimFailure {
                            time: t_next.as_f64(),
                            reason: FailureReason::DomainExit(raw),
                            constraints: active.iter().map(|a| a.to_string()).collect(),
                        }),
                    })
                }
            }
        }
        x = next;
    }
    Ok(SimOutcome {
        trace,
        failure: None,
    })
}
