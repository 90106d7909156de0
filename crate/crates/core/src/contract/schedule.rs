use std::fmt;

use super::sets::{intersection_with, subset_with, worst_margin, CheckMethod};
use super::ContractError;
use crate::barrier::{
    cbf_constraint, convergence_time, fcbf_constraint, gamma_for_deadline_with_min, AlphaFn,
    BarrierRegistry, FcbfParams, HalfspaceConstraint, ResolvedPredicate,
};
use crate::sim::{ControlSystem, StateBox};
use crate::stl::{TaskGroup, TimeInterval};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPolicy<T> {
    /// Rate chosen at engagement so the convergence time matches the
    /// remaining window minus the step margin.
    Adaptive,
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind<T> {
    Vacuous,
    Invariance(AlphaFn<T>),
    FiniteTime {
        rho: T,
        t_conv: T,
        gamma: GammaPolicy<T>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractSegment<T> {
    pub barrier_id: Option<String>,
    pub interval: TimeInterval<T>,
    pub kind: SegmentKind<T>,
    pub engage_time: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Subset,
    OverlapWithDeadline,
    Incompatible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Subset => "subset",
            Verdict::OverlapWithDeadline => "overlap_with_deadline",
            Verdict::Incompatible => "incompatible",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeadlineCheck<T> {
    pub engage: T,
    /// Length of the previous segment, `t_i - t_{i-1}`.
    pub window: T,
    /// Convergence time the contract must realize.
    pub t_conv: T,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport<T> {
    pub time: T,
    pub from: String,
    pub to: String,
    pub verdict: Verdict,
    pub witness: Option<Vec<T>>,
    pub deadline: Option<DeadlineCheck<T>>,
    pub method: CheckMethod,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport<T> {
    pub group: String,
    pub boundaries: Vec<BoundaryReport<T>>,
}

impl<T: Scalar> CompatibilityReport<T> {
    pub fn is_compatible(&self) -> bool {
        self.boundaries.iter().all(|b| b.verdict != Verdict::Incompatible)
    }

    pub fn first_failure(&self) -> Option<&BoundaryReport<T>> {
        self.boundaries.iter().find(|b| b.verdict == Verdict::Incompatible)
    }
}

fn fmt_vec<T: Scalar>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.6}", x.as_f64())).collect();
    format!("[{}]", parts.join(","))
}

impl<T: Scalar> fmt::Display for CompatibilityReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boundaries.is_empty() {
            return writeln!(f, "group={} boundaries=0", self.group);
        }
        for b in &self.boundaries {
            write!(
                f,
                "group={} boundary={:.6} from={} to={} verdict={} method={}",
                self.group,
                b.time.as_f64(),
                b.from,
                b.to,
                b.verdict,
                b.method
            )?;
            if let Some(w) = &b.witness {
                write!(f, " witness={}", fmt_vec(w))?;
            }
            if let Some(d) = &b.deadline {
                write!(
                    f,
                    " engage={:.6} window={:.6} t_conv={:.6} deadline_ok={}",
                    d.engage.as_f64(),
                    d.window.as_f64(),
                    d.t_conv.as_f64(),
                    d.satisfied
                )?;
            }
            if let Some(r) = &b.reason {
                write!(f, " reason=\"{r}\"")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleConfig<T> {
    pub span: TimeInterval<T>,
    pub domain: StateBox<T>,
    /// Safety margin subtracted from every convergence window.
    pub step_margin: T,
    pub grid_points: usize,
    /// `(boundary time, engagement time)` pairs overriding the default.
    pub engage_overrides: Vec<(T, T)>,
    pub gamma_min: T,
}

#[derive(Debug, Clone)]
struct Tile<T> {
    interval: TimeInterval<T>,
    pred: Option<ResolvedPredicate<T>>,
}

#[derive(Debug, Clone)]
struct FcbfPlan<T> {
    tau: T,
    rho: T,
    policy: GammaPolicy<T>,
}

#[derive(Debug, Clone)]
struct Transition<T> {
    /// Index of the upcoming tile.
    tile: usize,
    plan: Option<FcbfPlan<T>>,
}

/// Composed contract of one group: tiles over the span and the verdict at
/// every boundary.
#[derive(Debug, Clone)]
pub struct ContractSchedule<T> {
    label: String,
    tiles: Vec<Tile<T>>,
    transitions: Vec<Transition<T>>,
    report: CompatibilityReport<T>,
    step_margin: T,
    gamma_min: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Cbf,
    Fcbf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConstraint<T> {
    pub barrier_id: String,
    pub kind: ConstraintKind,
    pub constraint: HalfspaceConstraint<T>,
}

impl<T> fmt::Display for ActiveConstraint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::Cbf => write!(f, "cbf({})", self.barrier_id),
            ConstraintKind::Fcbf => write!(f, "fcbf({})", self.barrier_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEvent<T> {
    pub t: T,
    pub kind: &'static str,
    pub message: String,
}

/// Runtime state of a schedule: rates fixed at engagement and boundary
/// bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Engagements<T> {
    gammas: Vec<Option<T>>,
    crossed: Vec<bool>,
    pub events: Vec<ScheduleEvent<T>>,
}

impl<T: Scalar> Engagements<T> {
    pub fn gamma(&self, transition: usize) -> Option<T> {
        self.gammas.get(transition).copied().flatten()
    }
}

pub(crate) fn time_eps<T: Scalar>(t: T) -> T {
    T::epsilon() * T::lit(64.0) * (T::one() + t.abs())
}

fn pred_name<T: Scalar>(p: &Option<ResolvedPredicate<T>>) -> String {
    p.as_ref()
        .map_or_else(|| "true".to_string(), |p| p.barrier.id().to_string())
}

/// Tiles the group over `cfg.span` (gaps become vacuous segments) and checks
/// every boundary: subset, else intersection plus a feasible convergence
/// deadline, else the first incompatible boundary is returned as an error.
pub fn build_schedule<T: Scalar>(
    group: &TaskGroup<T>,
    registry: &BarrierRegistry<T>,
    cfg: &ScheduleConfig<T>,
) -> Result<ContractSchedule<T>, ContractError> {
    if !group.is_well_formed() {
        return Err(ContractError::InvalidGroup(format!(
            "group {} has overlapping or unsorted intervals",
            group.label
        )));
    }
    let (s0, s1) = (cfg.span.start(), cfg.span.end());
    let mut tiles: Vec<Tile<T>> = Vec::new();
    let mut cursor = s0;
    for p in &group.predicates {
        let iv = p.interval;
        if iv.start() < s0 || iv.end() > s1 {
            return Err(ContractError::InvalidGroup(format!(
                "interval {iv} of `{}` lies outside the span {}",
                p.predicate, cfg.span
            )));
        }
        if iv.start() > cursor {
            tiles.push(Tile {
                interval: TimeInterval::new(cursor, iv.start()).map_err(ContractError::from_stl)?,
                pred: None,
            });
        }
        let resolved = registry
            .resolve(&p.predicate)
            .map_err(|_| ContractError::Unresolved(p.predicate.barrier_id.clone()))?;
        tiles.push(Tile {
            interval: iv,
            pred: Some(resolved),
        });
        cursor = iv.end();
    }
    if cursor < s1 {
        tiles.push(Tile {
            interval: TimeInterval::new(cursor, s1).map_err(ContractError::from_stl)?,
            pred: None,
        });
    }

    let mut report = CompatibilityReport {
        group: group.label.clone(),
        boundaries: Vec::new(),
    };
    let mut transitions = Vec::new();
    for i in 1..tiles.len() {
        let (prev, next) = (&tiles[i - 1], &tiles[i]);
        let t = next.interval.start();
        let from = pred_name(&prev.pred);
        let to = pred_name(&next.pred);
        let prev_b = prev.pred.as_ref().map(|p| &p.barrier);
        let Some(next_p) = next.pred.as_ref() else {
            report.boundaries.push(BoundaryReport {
                time: t,
                from,
                to,
                verdict: Verdict::Subset,
                witness: None,
                deadline: None,
                method: CheckMethod::Exact,
                reason: None,
            });
            transitions.push(Transition { tile: i, plan: None });
            continue;
        };
        let sub = subset_with(prev_b, Some(&next_p.barrier), t, &cfg.domain, cfg.grid_points)?;
        if sub.holds {
            let inter =
                intersection_with(prev_b, Some(&next_p.barrier), t, &cfg.domain, cfg.grid_points)?;
            report.boundaries.push(BoundaryReport {
                time: t,
                from,
                to,
                verdict: Verdict::Subset,
                witness: inter.witness,
                deadline: None,
                method: sub.method,
                reason: None,
            });
            transitions.push(Transition { tile: i, plan: None });
            continue;
        }
        let inter = intersection_with(prev_b, Some(&next_p.barrier), t, &cfg.domain, cfg.grid_points)?;
        let mut entry = BoundaryReport {
            time: t,
            from: from.clone(),
            to: to.clone(),
            verdict: Verdict::Incompatible,
            witness: inter.witness.clone(),
            deadline: None,
            method: inter.method,
            reason: None,
        };
        let fail = |mut entry: BoundaryReport<T>, reason: String, mut report: CompatibilityReport<T>| {
            entry.reason = Some(reason.clone());
            report.boundaries.push(entry);
            ContractError::Incompatible {
                group: report.group.clone(),
                time: t.as_f64(),
                from: from.clone(),
                to: to.clone(),
                reason,
                report: report.to_string(),
            }
        };
        if inter.witness.is_none() {
            return Err(fail(entry, "empty intersection".into(), report));
        }

        let t_prev = prev.interval.start();
        let eps = time_eps(t);
        let tau = cfg
            .engage_overrides
            .iter()
            .find(|(b, _)| (*b - t).abs() <= eps)
            .map(|(_, tau)| *tau)
            .or_else(|| next_p.fcbf.t_conv.map(|tc| t - tc))
            .unwrap_or(t_prev);
        let window = t - t_prev;
        let rho = next_p.fcbf.rho;
        let policy = match next_p.fcbf.gamma {
            Some(g) => GammaPolicy::Fixed(g),
            None => GammaPolicy::Adaptive,
        };
        if tau < t_prev - eps || tau >= t {
            entry.deadline = Some(DeadlineCheck {
                engage: tau,
                window,
                t_conv: t - tau,
                satisfied: false,
            });
            return Err(fail(
                entry,
                format!(
                    "engagement at {} outside the previous segment [{}, {})",
                    tau.as_f64(),
                    t_prev.as_f64(),
                    t.as_f64()
                ),
                report,
            ));
        }
        let (t_conv, ok) = match policy {
            GammaPolicy::Adaptive => {
                let design = t - tau - cfg.step_margin;
                (design, design > T::zero())
            }
            GammaPolicy::Fixed(g) => {
                let params = FcbfParams::new(rho, g)?;
                let worst = worst_margin(prev_b, &next_p.barrier, tau, &cfg.domain, cfg.grid_points)?
                    .unwrap_or(T::zero());
                let tc = convergence_time(worst, &params);
                (tc, tau + tc < t - cfg.step_margin)
            }
        };
        entry.deadline = Some(DeadlineCheck {
            engage: tau,
            window,
            t_conv,
            satisfied: ok,
        });
        if !ok {
            return Err(fail(entry, "deadline violated".into(), report));
        }
        entry.verdict = Verdict::OverlapWithDeadline;
        report.boundaries.push(entry);
        transitions.push(Transition {
            tile: i,
            plan: Some(FcbfPlan { tau, rho, policy }),
        });
    }

    Ok(ContractSchedule {
        label: group.label.clone(),
        tiles,
        transitions,
        report,
        step_margin: cfg.step_margin,
        gamma_min: cfg.gamma_min,
    })
}

impl<T: Scalar> ContractSchedule<T> {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn report(&self) -> &CompatibilityReport<T> {
        &self.report
    }

    pub fn span(&self) -> (T, T) {
        (
            self.tiles[0].interval.start(),
            self.tiles[self.tiles.len() - 1].interval.end(),
        )
    }

    /// Invariance or vacuous segment per tile plus a finite-time segment on
    /// `[τ_i, t_i)` for every boundary that needs one, ordered by start.
    pub fn segments(&self) -> Vec<ContractSegment<T>> {
        let mut out: Vec<ContractSegment<T>> = self
            .tiles
            .iter()
            .map(|tile| ContractSegment {
                barrier_id: tile.pred.as_ref().map(|p| p.barrier.id().to_string()),
                interval: tile.interval,
                kind: tile
                    .pred
                    .as_ref()
                    .map_or(SegmentKind::Vacuous, |p| SegmentKind::Invariance(p.alpha)),
                engage_time: None,
            })
            .collect();
        for tr in &self.transitions {
            if let Some(plan) = &tr.plan {
                let next = &self.tiles[tr.tile];
                let t = next.interval.start();
                out.push(ContractSegment {
                    barrier_id: next.pred.as_ref().map(|p| p.barrier.id().to_string()),
                    interval: TimeInterval::new(plan.tau, t).expect("engagement precedes boundary"),
                    kind: SegmentKind::FiniteTime {
                        rho: plan.rho,
                        t_conv: t - plan.tau,
                        gamma: plan.policy,
                    },
                    engage_time: Some(plan.tau),
                });
            }
        }
        out.sort_by(|a, b| {
            a.interval
                .start()
                .partial_cmp(&b.interval.start())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        out
    }

    pub fn engagements(&self) -> Engagements<T> {
        Engagements {
            gammas: vec![None; self.transitions.len()],
            crossed: vec![false; self.transitions.len()],
            events: Vec::new(),
        }
    }

    fn tile_index(&self, t: T) -> Result<usize, ContractError> {
        let (s0, s1) = self.span();
        let eps = time_eps(t);
        if t < s0 - eps || t > s1 + eps {
            return Err(ContractError::OutsideSpan { t: t.as_f64() });
        }
        let k = self
            .tiles
            .partition_point(|tile| tile.interval.start() <= t + eps);
        Ok(k.saturating_sub(1))
    }

    /// Predicate whose invariance contract holds at `t`, if any.
    pub fn current_barrier(&self, t: T) -> Option<&ResolvedPredicate<T>> {
        self.tile_index(t).ok().and_then(|i| self.tiles[i].pred.as_ref())
    }

    /// Constraints in force at `(t, x)`: the invariance condition of the
    /// current tile, plus the finite-time condition of the next tile for
    /// `τ_i < t < t_i`. The rate is fixed on the first query at or after
    /// `τ_i`.
    pub fn active_constraints(
        &self,
        eng: &mut Engagements<T>,
        t: T,
        x: &[T],
        sys: &dyn ControlSystem<T>,
    ) -> Result<Vec<ActiveConstraint<T>>, ContractError> {
        let i = self.tile_index(t)?;
        let eps = time_eps(t);
        let mut out = Vec::new();

        for (k, tr) in self.transitions.iter().enumerate() {
            if tr.tile <= i && !eng.crossed[k] {
                eng.crossed[k] = true;
                if let (Some(_), Some(p)) = (&tr.plan, &self.tiles[tr.tile].pred) {
                    let h = p.barrier.value(t, x);
                    eng.events.push(ScheduleEvent {
                        t,
                        kind: "boundary",
                        message: format!(
                            "{}: {} margin {:.6} at switch {:.6}",
                            self.label,
                            p.barrier.id(),
                            h.as_f64(),
                            self.tiles[tr.tile].interval.start().as_f64()
                        ),
                    });
                }
            }
        }

        if let Some(p) = &self.tiles[i].pred {
            out.push(ActiveConstraint {
                barrier_id: p.barrier.id().to_string(),
                kind: ConstraintKind::Cbf,
                constraint: cbf_constraint(&p.barrier, sys, &p.alpha, t, x),
            });
        }

        if let Some((k, tr)) = self
            .transitions
            .iter()
            .enumerate()
            .find(|(_, tr)| tr.tile == i + 1)
        {
            let boundary = self.tiles[tr.tile].interval.start();
            if let (Some(plan), Some(next)) = (&tr.plan, &self.tiles[tr.tile].pred) {
                if t >= plan.tau - eps && t < boundary - eps {
                    let gamma = match eng.gammas[k] {
                        Some(g) => g,
                        None => {
                            let g = self.engage(next, plan, t, x, boundary, eng)?;
                            eng.gammas[k] = Some(g);
                            g
                        }
                    };
                    if t > plan.tau + eps {
                        let params = FcbfParams::new(plan.rho, gamma)?;
                        out.push(ActiveConstraint {
                            barrier_id: next.barrier.id().to_string(),
                            kind: ConstraintKind::Fcbf,
                            constraint: fcbf_constraint(&next.barrier, sys, &params, t, x),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    fn engage(
        &self,
        next: &ResolvedPredicate<T>,
        plan: &FcbfPlan<T>,
        t: T,
        x: &[T],
        boundary: T,
        eng: &mut Engagements<T>,
    ) -> Result<T, ContractError> {
        let h = next.barrier.value(t, x);
        let remaining = boundary - t;
        let gamma = match plan.policy {
            GammaPolicy::Adaptive => {
                let mut target = remaining - self.step_margin;
                if target <= T::zero() {
                    target = remaining / T::lit(2.0);
                }
                gamma_for_deadline_with_min(h, plan.rho, target, self.gamma_min)?
            }
            GammaPolicy::Fixed(g) => g,
        };
        let t_conv = convergence_time(h, &FcbfParams::new(plan.rho, gamma)?);
        let kind = if t + t_conv < boundary {
            "engage"
        } else {
            "deadline-risk"
        };
        eng.events.push(ScheduleEvent {
            t,
            kind,
            message: format!(
                "{}: {} engaged with h={:.6} gamma={:.6} t_conv={:.6} deadline={:.6}",
                self.label,
                next.barrier.id(),
                h.as_f64(),
                gamma.as_f64(),
                t_conv.as_f64(),
                boundary.as_f64()
            ),
        });
        Ok(gamma)
    }
}
