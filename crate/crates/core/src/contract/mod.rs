//! Barrier-function contracts on adjacent intervals, their compatibility,
//! and the per-step safe input set.

mod schedule;
mod sets;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::barrier::{BarrierError, BarrierRegistry};
use crate::sim::{ControlSystem, StateBox};
use crate::stl::{StlError, TaskGroup, TimeInterval, TimedPredicate};
use crate::Scalar;

pub use schedule::{
    build_schedule, ActiveConstraint, BoundaryReport, CompatibilityReport, ConstraintKind,
    ContractSchedule, ContractSegment, DeadlineCheck, Engagements, GammaPolicy, ScheduleConfig,
    ScheduleEvent, SegmentKind, Verdict,
};
pub use sets::{
    check_intersection, check_subset, CheckMethod, IntersectionVerdict, SubsetVerdict,
    DEFAULT_GRID_POINTS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractError {
    #[error("group {group}: incompatible boundary at t={time} ({from} -> {to}): {reason}")]
    Incompatible {
        group: String,
        time: f64,
        from: String,
        to: String,
        reason: String,
        /// Rendered report up to and including the failing boundary.
        report: String,
    },
    #[error("barrier `{0}` is not registered")]
    Unresolved(String),
    #[error("negation of the stitched barrier `{0}` is not supported")]
    NegatedStitching(String),
    #[error("domain box has zero width or unbounded sides")]
    DegenerateDomain,
    #[error("query time {t} is outside the schedule span")]
    OutsideSpan { t: f64 },
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
}

impl ContractError {
    fn from_stl(e: StlError) -> Self {
        ContractError::InvalidGroup(e.to_string())
    }
}

/// Predicates and engagement times of one region of a stitched barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPlan<T> {
    pub predicates: Vec<TimedPredicate<T>>,
    /// `(boundary time, engagement time)` overrides.
    pub engage: Vec<(T, T)>,
}

/// A barrier assembled from per-region component barriers selected by a
/// state-dependent indicator.
pub trait RegionStitching<T: Scalar>: Send + Sync + fmt::Debug {
    fn region_count(&self) -> usize;

    /// Active region at `x`, or `None` where the barrier is vacuous.
    fn region_of(&self, x: &[T]) -> Option<usize>;

    fn region_domain(&self, k: usize, domain: &StateBox<T>) -> StateBox<T>;

    /// Component predicates over time for region `k`; ids must resolve in
    /// the registry.
    fn region_plan(&self, k: usize, horizon: T) -> RegionPlan<T>;
}

/// Compiled contract of one group.
#[derive(Debug, Clone)]
pub enum GroupContract<T: Scalar> {
    Single(ContractSchedule<T>),
    Stitched {
        label: String,
        barrier_id: String,
        selector: Arc<dyn RegionStitching<T>>,
        regions: Vec<ContractSchedule<T>>,
    },
}

#[derive(Debug, Clone)]
pub struct GroupState<T> {
    engagements: Option<Engagements<T>>,
    region: Option<Option<usize>>,
    pub events: Vec<ScheduleEvent<T>>,
}

impl<T: Scalar> GroupContract<T> {
    pub fn label(&self) -> &str {
        match self {
            GroupContract::Single(s) => s.label(),
            GroupContract::Stitched { label, .. } => label,
        }
    }

    pub fn reports(&self) -> Vec<&CompatibilityReport<T>> {
        match self {
            GroupContract::Single(s) => vec![s.report()],
            GroupContract::Stitched { regions, .. } => regions.iter().map(|r| r.report()).collect(),
        }
    }

    pub fn new_state(&self) -> GroupState<T> {
        GroupState {
            engagements: match self {
                GroupContract::Single(s) => Some(s.engagements()),
                GroupContract::Stitched { .. } => None,
            },
            region: None,
            events: Vec::new(),
        }
    }

    fn schedule_at(&self, x: &[T]) -> Option<&ContractSchedule<T>> {
        match self {
            GroupContract::Single(s) => Some(s),
            GroupContract::Stitched {
                selector, regions, ..
            } => selector.region_of(x).and_then(|k| regions.get(k)),
        }
    }

    /// Barrier id and margin of the contract assumed at `(t, x)`.
    pub fn assumption_margin(&self, t: T, x: &[T]) -> Option<(String, T)> {
        let p = self.schedule_at(x)?.current_barrier(t)?;
        Some((p.barrier.id().to_string(), p.barrier.value(t, x)))
    }

    pub fn active_constraints(
        &self,
        state: &mut GroupState<T>,
        t: T,
        x: &[T],
        sys: &dyn ControlSystem<T>,
    ) -> Result<Vec<ActiveConstraint<T>>, ContractError> {
        let (schedule, eng) = match self {
            GroupContract::Single(s) => (Some(s), state.engagements.get_or_insert_with(|| s.engagements())),
            GroupContract::Stitched {
                selector,
                regions,
                barrier_id,
                ..
            } => {
                let r = selector.region_of(x);
                if state.region != Some(r) {
                    if state.region.is_some() {
                        state.events.push(ScheduleEvent {
                            t,
                            kind: "region",
                            message: format!(
                                "{barrier_id}: region {}",
                                r.map_or_else(|| "none".to_string(), |k| (k + 1).to_string())
                            ),
                        });
                    }
                    state.region = Some(r);
                    state.engagements = r.and_then(|k| regions.get(k)).map(|s| s.engagements());
                }
                let s = r.and_then(|k| regions.get(k));
                match (s, state.engagements.as_mut()) {
                    (Some(s), Some(e)) => (Some(s), e),
                    _ => return Ok(Vec::new()),
                }
            }
        };
        let out = match schedule {
            Some(s) => s.active_constraints(eng, t, x, sys)?,
            None => Vec::new(),
        };
        state.events.append(&mut eng.events);
        Ok(out)
    }
}

/// Compiles every group. Stitched predicates are split into groups of their
/// own and compiled region by region over the region's domain.
pub fn compile_groups<T: Scalar>(
    groups: &[TaskGroup<T>],
    registry: &BarrierRegistry<T>,
    cfg: &ScheduleConfig<T>,
) -> Result<Vec<GroupContract<T>>, ContractError> {
    let mut out = Vec::new();
    for g in groups {
        let mut plain = TaskGroup {
            label: g.label.clone(),
            predicates: Vec::new(),
        };
        let mut stitched = Vec::new();
        for p in &g.predicates {
            let entry = registry
                .get(&p.predicate.barrier_id)
                .ok_or_else(|| ContractError::Unresolved(p.predicate.barrier_id.clone()))?;
            match &entry.stitching {
                Some(sel) => {
                    if p.predicate.negated {
                        return Err(ContractError::NegatedStitching(p.predicate.barrier_id.clone()));
                    }
                    stitched.push((p.clone(), sel.clone()));
                }
                None => plain.predicates.push(p.clone()),
            }
        }
        if !plain.predicates.is_empty() || stitched.is_empty() {
            out.push(GroupContract::Single(build_schedule(&plain, registry, cfg)?));
        }
        for (p, selector) in stitched {
            let label = if g.predicates.len() == 1 {
                g.label.clone()
            } else {
                format!("{}:{}", g.label, p.predicate.barrier_id)
            };
            let mut regions = Vec::new();
            for k in 0..selector.region_count() {
                let plan = selector.region_plan(k, cfg.span.end());
                let predicates = clip(&plan.predicates, &p.interval);
                let region_cfg = ScheduleConfig {
                    domain: selector.region_domain(k, &cfg.domain),
                    engage_overrides: plan.engage,
                    ..cfg.clone()
                };
                let group = TaskGroup {
                    label: format!("{label}#{}", k + 1),
                    predicates,
                };
                regions.push(build_schedule(&group, registry, &region_cfg)?);
            }
            out.push(GroupContract::Stitched {
                label,
                barrier_id: p.predicate.barrier_id.clone(),
                selector,
                regions,
            });
        }
    }
    Ok(out)
}

fn clip<T: Scalar>(preds: &[TimedPredicate<T>], to: &TimeInterval<T>) -> Vec<TimedPredicate<T>> {
    preds
        .iter()
        .filter_map(|p| {
            let s = p.interval.start().max(to.start());
            let e = p.interval.end().min(to.end());
            TimeInterval::new(s, e).ok().map(|interval| TimedPredicate {
                interval,
                predicate: p.predicate.clone(),
            })
        })
        .collect()
}

/// Active constraints of all groups at `(t, x)`; the safe input set is the
/// intersection of their halfspaces.
pub fn conjoin_groups<T: Scalar>(
    contracts: &[GroupContract<T>],
    states: &mut [GroupState<T>],
    t: T,
    x: &[T],
    sys: &dyn ControlSystem<T>,
) -> Result<Vec<ActiveConstraint<T>>, ContractError> {
    let mut out = Vec::new();
    for (c, s) in contracts.iter().zip(states.iter_mut()) {
        out.extend(c.active_constraints(s, t, x, sys)?);
    }
    Ok(out)
}
