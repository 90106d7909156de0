use super::{StlError, StlFormula, StlSpec};
use crate::barrier::BarrierRegistry;
use crate::sim::Trace;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskVerdict<T> {
    pub formula: String,
    pub satisfied: bool,
    /// Smallest margin over the window (largest, for eventually).
    pub worst_margin: Option<T>,
    pub worst_time: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionReport<T> {
    pub verdicts: Vec<TaskVerdict<T>>,
    pub satisfied: bool,
}

/// Boolean semantics of `spec` on the sampled trace, one verdict per leaf.
/// A margin counts as satisfied when it is at least `-tol`.
pub fn monitor_trace<T: Scalar>(
    trace: &Trace<T>,
    spec: &StlSpec<T>,
    registry: &BarrierRegistry<T>,
    tol: T,
) -> Result<SatisfactionReport<T>, StlError> {
    let (first, last) = match (trace.rows.first(), trace.rows.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => (T::nan(), T::nan()),
    };
    let slack = T::lit(1e-9) * (T::one() + spec.horizon.abs());
    if !(first <= slack && last >= spec.horizon - slack) {
        return Err(StlError::TraceTooShort {
            first: first.as_f64(),
            last: last.as_f64(),
            horizon: spec.horizon.as_f64(),
        });
    }
    let margin = |p, t, x: &[T]| {
        registry
            .margin(p, t, x)
            .map_err(|_| StlError::Unresolved(p.barrier_id.clone()))
    };

    let mut verdicts = Vec::new();
    for leaf in spec.leaves() {
        let v = match leaf {
            StlFormula::True => TaskVerdict {
                formula: leaf.to_string(),
                satisfied: true,
                worst_margin: None,
                worst_time: None,
            },
            StlFormula::Atom(p) => {
                let row = &trace.rows[0];
                let h = margin(p, row.t, &row.x)?;
                TaskVerdict {
                    formula: leaf.to_string(),
                    satisfied: h >= -tol,
                    worst_margin: Some(h),
                    worst_time: Some(row.t),
                }
            }
            StlFormula::Globally(iv, p) => {
                let mut worst: Option<(T, T)> = None;
                for row in trace.rows.iter().filter(|r| iv.contains(r.t)) {
                    let h = margin(p, row.t, &row.x)?;
                    if worst.is_none_or(|(w, _)| h < w) {
                        worst = Some((h, row.t));
                    }
                }
                TaskVerdict {
                    formula: leaf.to_string(),
                    satisfied: worst.is_none_or(|(w, _)| w >= -tol),
                    worst_margin: worst.map(|w| w.0),
                    worst_time: worst.map(|w| w.1),
                }
            }
            StlFormula::Eventually {
                interval, predicate, ..
            } => {
                let mut best: Option<(T, T)> = None;
                for row in trace.rows.iter().filter(|r| interval.contains(r.t)) {
                    let h = margin(predicate, row.t, &row.x)?;
                    if best.is_none_or(|(b, _)| h > b) {
                        best = Some((h, row.t));
                    }
                }
                TaskVerdict {
                    formula: leaf.to_string(),
                    satisfied: best.is_some_and(|(b, _)| b >= -tol),
                    worst_margin: best.map(|b| b.0),
                    worst_time: best.map(|b| b.1),
                }
            }
            StlFormula::And(_) => unreachable!("leaves are never conjunctions"),
        };
        verdicts.push(v);
    }
    let satisfied = verdicts.iter().all(|v| v.satisfied);
    Ok(SatisfactionReport {
        verdicts,
        satisfied,
    })
}
