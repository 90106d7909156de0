use std::fmt::Write as _;
use std::path::Path;

use super::{RunError, Scenario};
use crate::sim::Trace;

pub const TRACE_COLUMNS: [&str; 14] = [
    "t",
    "X_f",
    "V_f",
    "X_l",
    "V_l",
    "V_max",
    "u_nom",
    "u_safe",
    "h1",
    "h_v",
    "h_pos",
    "qp_status",
    "active_signal",
    "signal_phase",
];

fn num(out: &mut String, v: Option<f64>) {
    match v {
        Some(v) => {
            let _ = write!(out, "{v:.6}");
        }
        None => out.push_str("nan"),
    }
}

/// Fixed-precision CSV of a trace. Columns without a source in the
/// scenario are written as `nan` (numbers) or `none` (labels).
pub fn render_trace_csv(trace: &Trace<f64>, sc: &Scenario) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    let idx = |name: Option<&str>| name.and_then(|n| trace.margin_index(n));
    let (h1, hv, hpos) = sc.column_barriers();
    let h1 = idx(Some(h1.id()));
    let hv = idx(hv.as_ref().map(|b| b.id()));
    let hpos = idx(hpos.as_ref().map(|b| b.id()));
    for r in &trace.rows {
        let x = &r.x;
        let fields = [
            Some(r.t),
            Some(x[0]),
            Some(x[1]),
            Some(x[2]),
            Some(sc.model.lead.speed(r.t)),
            sc.speed_limits.as_ref().map(|(_, s)| s.limit_at(r.t)),
            r.u_nom.first().copied(),
            r.u_safe.first().copied(),
            h1.map(|j| r.margins[j]),
            hv.map(|j| r.margins[j]),
            hpos.map(|j| r.margins[j]),
        ];
        for v in fields {
            num(&mut out, v);
            out.push(',');
        }
        let _ = write!(out, "{}", r.status);
        match sc.signals.as_ref().and_then(|s| {
            let sched = s.schedule();
            sched
                .active_index(x[0])
                .map(|k| (k, sched.signals()[k].phase(r.t)))
        }) {
            Some((k, phase)) => {
                let _ = writeln!(out, ",{},{}", k + 1, phase);
            }
            None => out.push_str(",none,none\n"),
        }
    }
    out
}

pub fn write_trace_csv(trace: &Trace<f64>, sc: &Scenario, path: &Path) -> Result<(), RunError> {
    std::fs::write(path, render_trace_csv(trace, sc))
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// Reads the time and state columns of a trace written by
/// [`write_trace_csv`].
pub fn read_trace_csv(text: &str) -> Result<Trace<f64>, RunError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| RunError::Input("empty trace file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| RunError::Input(format!("trace header lacks column `{name}`")))
    };
    let cols = [col("t")?, col("X_f")?, col("V_f")?, col("X_l")?];
    let mut samples = Vec::new();
    for (k, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut vals = [0.0; 4];
        for (slot, &c) in vals.iter_mut().zip(&cols) {
            let raw = fields
                .get(c)
                .ok_or_else(|| RunError::Input(format!("line {}: too few fields", k + 1)))?;
            *slot = raw
                .parse()
                .map_err(|_| RunError::Input(format!("line {}: bad number `{raw}`", k + 1)))?;
        }
        samples.push((vals[0], vals[1..].to_vec()));
    }
    Ok(Trace::from_states(samples))
}
