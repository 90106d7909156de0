//! The bounded-time STL fragment: globally/eventually over atomic
//! predicates, conjunction, and negation of atoms.

mod group;
mod monitor;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::Scalar;

pub use group::{group_tasks, max_overlap_depth};
pub use monitor::{monitor_trace, SatisfactionReport, TaskVerdict};
pub use parser::{parse_spec, DEFAULT_EPSILON};

/// Boolean tolerance on sampled margins used by the monitor.
pub const MONITOR_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown barrier `{id}`")]
    UnknownBarrier {
        id: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: nested temporal operators are not part of the fragment")]
    NestedTemporal { line: usize, column: usize },
    #[error("invalid interval [{start}, {end}): {reason}")]
    InvalidInterval { start: f64, end: f64, reason: &'static str },
    #[error("satisfaction window [{at}, {at}+{epsilon}) is not inside [{start}, {end})")]
    WindowOutsideInterval {
        at: f64,
        epsilon: f64,
        start: f64,
        end: f64,
    },
    #[error("eventually predicate `{0}` has no satisfaction time")]
    MissingSatisfactionTime(String),
    #[error("predicate `{0}` is not a globally predicate; convert eventually windows first")]
    NotGlobally(String),
    #[error("trace covers [{first}, {last}] but the horizon is {horizon}")]
    TraceTooShort { first: f64, last: f64, horizon: f64 },
    #[error("barrier `{0}` is not registered")]
    Unresolved(String),
}

/// Half-open interval `[start, end)` with finite, nonnegative bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval<T> {
    start: T,
    end: T,
}

impl<T: Scalar> TimeInterval<T> {
    pub fn new(start: T, end: T) -> Result<Self, StlError> {
        let err = |reason| StlError::InvalidInterval {
            start: start.as_f64(),
            end: end.as_f64(),
            reason,
        };
        if !start.is_finite() || !end.is_finite() {
            return Err(err("bounds must be finite"));
        }
        if start < T::zero() {
            return Err(err("start must be nonnegative"));
        }
        if start >= end {
            return Err(err("empty interval"));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn duration(&self) -> T {
        self.end - self.start
    }

    pub fn contains(&self, t: T) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl<T: fmt::Display> fmt::Display for TimeInterval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// Reference to a registered barrier. A negated predicate stands for the
/// barrier `-h`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateRef {
    pub barrier_id: String,
    pub negated: bool,
}

impl PredicateRef {
    pub fn new(barrier_id: impl Into<String>) -> Self {
        Self {
            barrier_id: barrier_id.into(),
            negated: false,
        }
    }

    pub fn negated(barrier_id: impl Into<String>) -> Self {
        Self {
            barrier_id: barrier_id.into(),
            negated: true,
        }
    }
}

impl fmt::Display for PredicateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!sat({})", self.barrier_id)
        } else {
            write!(f, "sat({})", self.barrier_id)
        }
    }
}

/// User-chosen window `[at, at + epsilon)` in which an eventually predicate
/// is to be satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatisfactionWindow<T> {
    pub at: T,
    pub epsilon: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula<T> {
    True,
    Atom(PredicateRef),
    Globally(TimeInterval<T>, PredicateRef),
    Eventually {
        interval: TimeInterval<T>,
        predicate: PredicateRef,
        satisfaction: Option<SatisfactionWindow<T>>,
    },
    And(Vec<StlFormula<T>>),
}

impl<T: Scalar> StlFormula<T> {
    /// Builds a conjunction; an empty list collapses to `True`.
    pub fn and(parts: Vec<StlFormula<T>>) -> Self {
        if parts.is_empty() {
            StlFormula::True
        } else {
            StlFormula::And(parts)
        }
    }

    /// Leaves of the formula in left-to-right order.
    pub fn leaves(&self) -> Vec<&StlFormula<T>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a StlFormula<T>>) {
        match self {
            StlFormula::And(parts) => parts.iter().for_each(|p| p.collect_leaves(out)),
            leaf => out.push(leaf),
        }
    }

    pub fn predicate(&self) -> Option<&PredicateRef> {
        match self {
            StlFormula::Atom(p) | StlFormula::Globally(_, p) => Some(p),
            StlFormula::Eventually { predicate, .. } => Some(predicate),
            _ => None,
        }
    }
}

impl<T: Scalar> fmt::Display for StlFormula<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StlFormula::True => write!(f, "true"),
            StlFormula::Atom(p) => write!(f, "{p}"),
            StlFormula::Globally(i, p) => write!(f, "G{i} {p}"),
            StlFormula::Eventually {
                interval,
                predicate,
                satisfaction,
            } => {
                write!(f, "F{interval} {predicate}")?;
                if let Some(w) = satisfaction {
                    write!(f, " @ts={} eps={}", w.at, w.epsilon)?;
                }
                Ok(())
            }
            StlFormula::And(parts) => {
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// A parsed mission: a conjunction of tasks over the horizon `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StlSpec<T> {
    pub tasks: Vec<StlFormula<T>>,
    pub horizon: T,
}

impl<T: Scalar> StlSpec<T> {
    pub fn leaves(&self) -> Vec<&StlFormula<T>> {
        self.tasks.iter().flat_map(|t| t.leaves()).collect()
    }

    /// Number of atomic predicates across all tasks.
    pub fn predicate_count(&self) -> usize {
        self.leaves().iter().filter(|l| l.predicate().is_some()).count()
    }

    /// Replaces every `F_Γ φ` by `G_[t_s, t_s+ε) φ`.
    pub fn eventually_to_globally(&self) -> Result<Self, StlError> {
        let tasks = self
            .tasks
            .iter()
            .map(convert_formula)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            tasks,
            horizon: self.horizon,
        })
    }

    /// Globally predicates in order of appearance. Atoms and `true` are
    /// skipped; any remaining eventually predicate is an error.
    pub fn globally_predicates(&self) -> Result<Vec<TimedPredicate<T>>, StlError> {
        let mut out = Vec::new();
        for leaf in self.leaves() {
            match leaf {
                StlFormula::Globally(interval, predicate) => out.push(TimedPredicate {
                    interval: *interval,
                    predicate: predicate.clone(),
                }),
                StlFormula::Eventually { .. } => {
                    return Err(StlError::NotGlobally(leaf.to_string()))
                }
                _ => {}
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`StlSpec::eventually_to_globally`].
pub fn eventually_to_globally<T: Scalar>(spec: &StlSpec<T>) -> Result<StlSpec<T>, StlError> {
    spec.eventually_to_globally()
}

fn convert_formula<T: Scalar>(f: &StlFormula<T>) -> Result<StlFormula<T>, StlError> {
    match f {
        StlFormula::Eventually {
            interval,
            predicate,
            satisfaction,
        } => {
            let w = satisfaction.ok_or_else(|| StlError::MissingSatisfactionTime(f.to_string()))?;
            let outside = || StlError::WindowOutsideInterval {
                at: w.at.as_f64(),
                epsilon: w.epsilon.as_f64(),
                start: interval.start().as_f64(),
                end: interval.end().as_f64(),
            };
            if w.epsilon <= T::zero() || w.at < interval.start() || w.at + w.epsilon > interval.end()
            {
                return Err(outside());
            }
            let window = TimeInterval::new(w.at, w.at + w.epsilon).map_err(|_| outside())?;
            Ok(StlFormula::Globally(window, predicate.clone()))
        }
        StlFormula::And(parts) => Ok(StlFormula::And(
            parts.iter().map(convert_formula).collect::<Result<_, _>>()?,
        )),
        other => Ok(other.clone()),
    }
}

/// A predicate bound to its interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPredicate<T> {
    pub interval: TimeInterval<T>,
    pub predicate: PredicateRef,
}

/// A formula whose predicates sit on pairwise disjoint intervals, sorted by
/// start time.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGroup<T> {
    pub label: String,
    pub predicates: Vec<TimedPredicate<T>>,
}

impl<T: Scalar> TaskGroup<T> {
    /// Checks the group invariant: ascending, pairwise disjoint intervals.
    pub fn is_well_formed(&self) -> bool {
        self.predicates
            .windows(2)
            .all(|w| w[0].interval.end() <= w[1].interval.start())
    }
}
