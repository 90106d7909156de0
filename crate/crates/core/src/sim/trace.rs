use std::fmt;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    /// The nominal input already satisfied every constraint.
    Unmodified,
    Projected,
    Infeasible,
}

impl fmt::Display for QpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpStatus::Unmodified => "unmodified",
            QpStatus::Projected => "projected",
            QpStatus::Infeasible => "infeasible",
        })
    }
}

impl std::str::FromStr for QpStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unmodified" => Ok(QpStatus::Unmodified),
            "projected" => Ok(QpStatus::Projected),
            "infeasible" => Ok(QpStatus::Infeasible),
            other => Err(format!("unknown qp status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub t: T,
    pub x: Vec<T>,
    pub u_nom: Vec<T>,
    pub u_safe: Vec<T>,
    /// One entry per `Trace::margin_names`.
    pub margins: Vec<T>,
    pub active_constraints: usize,
    pub status: QpStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub t: f64,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMeta {
    pub scenario_hash: String,
    pub dt: f64,
    pub horizon: f64,
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub margin_names: Vec<String>,
    pub rows: Vec<TraceRow<T>>,
    pub meta: TraceMeta,
}

impl<T: Scalar> Trace<T> {
    pub fn new(margin_names: Vec<String>, meta: TraceMeta) -> Self {
        Self {
            margin_names,
            rows: Vec::new(),
            meta,
        }
    }

    /// Trace of bare states, as read back from a file.
    pub fn from_states(samples: Vec<(T, Vec<T>)>) -> Self {
        Self {
            margin_names: Vec::new(),
            rows: samples
                .into_iter()
                .map(|(t, x)| TraceRow {
                    t,
                    x,
                    u_nom: Vec::new(),
                    u_safe: Vec::new(),
                    margins: Vec::new(),
                    active_constraints: 0,
                    status: QpStatus::Unmodified,
                })
                .collect(),
            meta: TraceMeta::default(),
        }
    }

    pub fn margin_index(&self, name: &str) -> Option<usize> {
        self.margin_names.iter().position(|n| n == name)
    }

    /// Smallest recorded margin of `name` with the time it occurred.
    pub fn min_margin(&self, name: &str) -> Option<(T, T)> {
        let k = self.margin_index(name)?;
        self.rows
            .iter()
            .map(|r| (r.margins[k], r.t))
            .fold(None, |best: Option<(T, T)>, (h, t)| match best {
                Some((b, _)) if b <= h => best,
                _ => Some((h, t)),
            })
    }

    pub fn event(&mut self, t: T, kind: &str, message: impl Into<String>) {
        self.meta.events.push(TraceEvent {
            t: t.as_f64(),
            kind: kind.into(),
            message: message.into(),
        });
    }
}
