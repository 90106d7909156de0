use std::fmt;

use super::{Scenario, EXIT_CONFIG, EXIT_MONITOR_VIOLATION, EXIT_RUNTIME, EXIT_STATIC, EXIT_SUCCESS};
use crate::stl::SatisfactionReport;
use crate::vehicle::BoundKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    MonitorViolation,
    StaticIncompatibility,
    RuntimeInfeasibility,
    ConfigError,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => EXIT_SUCCESS,
            Outcome::MonitorViolation => EXIT_MONITOR_VIOLATION,
            Outcome::StaticIncompatibility => EXIT_STATIC,
            Outcome::RuntimeInfeasibility => EXIT_RUNTIME,
            Outcome::ConfigError => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "satisfied",
            Outcome::MonitorViolation => "monitor_violation",
            Outcome::StaticIncompatibility => "static_incompatibility",
            Outcome::RuntimeInfeasibility => "runtime_infeasibility",
            Outcome::ConfigError => "config_error",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginSummary {
    pub name: String,
    pub margin: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QpCounts {
    pub unmodified: usize,
    pub projected: usize,
    pub infeasible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckSummary {
    pub kind: BoundKind,
    pub samples: usize,
    pub max_rel_error: f64,
    /// Samples where the typeset form disagrees with the generic bound.
    pub printed_mismatches: usize,
}

/// Plain `key=value` report, one record per line.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub scenario_hash: String,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Rendered compatibility reports, one per compiled schedule.
    pub compatibility: Vec<String>,
    pub verdicts: Option<SatisfactionReport<f64>>,
    pub failure: Option<String>,
    pub failure_time: Option<f64>,
    pub min_margins: Vec<MarginSummary>,
    pub qp: QpCounts,
    pub events: usize,
    pub cross_check: Vec<CrossCheckSummary>,
}

impl RunReport {
    pub fn new(sc: &Scenario) -> Self {
        Self {
            outcome: Outcome::Success,
            scenario_hash: sc.hash.clone(),
            dt: sc.dt,
            horizon: sc.horizon,
            seed: sc.seed,
            compatibility: Vec::new(),
            verdicts: None,
            failure: None,
            failure_time: None,
            min_margins: Vec::new(),
            qp: QpCounts::default(),
            events: 0,
            cross_check: Vec::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.is_success() { "success" } else { "failure" };
        writeln!(f, "status={status}")?;
        writeln!(f, "outcome={}", self.outcome)?;
        writeln!(f, "exit_code={}", self.exit_code())?;
        writeln!(f, "scenario_hash={}", self.scenario_hash)?;
        writeln!(f, "dt={} horizon={} seed={}", self.dt, self.horizon, self.seed)?;
        if let Some(msg) = &self.failure {
            match self.failure_time {
                Some(t) => writeln!(f, "failure time={t:.6} reason=\"{msg}\"")?,
                None => writeln!(f, "failure reason=\"{msg}\"")?,
            }
        }
        for c in &self.compatibility {
            f.write_str(c)?;
            if !c.ends_with('\n') {
                writeln!(f)?;
            }
        }
        if let Some(v) = &self.verdicts {
            for t in &v.verdicts {
                let fmt_opt = |o: Option<f64>| o.map_or("none".to_string(), |v| format!("{v:.6}"));
                writeln!(
                    f,
                    "monitor task=\"{}\" satisfied={} worst_margin={} worst_time={}",
                    t.formula,
                    t.satisfied,
                    fmt_opt(t.worst_margin),
                    fmt_opt(t.worst_time)
                )?;
            }
            writeln!(f, "monitor_all_satisfied={}", v.satisfied)?;
        }
        for m in &self.min_margins {
            writeln!(f, "min_margin barrier={} value={:.6} time={:.6}", m.name, m.margin, m.time)?;
        }
        if self.qp != QpCounts::default() {
            writeln!(
                f,
                "qp unmodified={} projected={} infeasible={}",
                self.qp.unmodified, self.qp.projected, self.qp.infeasible
            )?;
            writeln!(f, "events={}", self.events)?;
        }
        for c in &self.cross_check {
            writeln!(
                f,
                "cross_check kind={} samples={} max_rel_error={:.3e} printed_mismatches={}",
                c.kind, c.samples, c.max_rel_error, c.printed_mismatches
            )?;
        }
        Ok(())
    }
}
