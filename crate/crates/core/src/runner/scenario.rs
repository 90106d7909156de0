use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::config::{Overrides, ScenarioConfig};
use super::RunError;
use crate::barrier::{
    AffineBarrier, AlphaFn, Barrier, BarrierRegistry, FcbfSettings, PiecewiseConstant,
    RegistryEntry, GAMMA_MIN,
};
use crate::contract::{ScheduleConfig, DEFAULT_GRID_POINTS};
use crate::qp::{InputBox, PidState};
use crate::sim::StateBox;
use crate::stl::{parse_spec, StlSpec, TimeInterval, MONITOR_TOLERANCE};
use crate::vehicle::{
    LeadProfile, Signal, SignalBarrier, SignalCycle, SignalGenerator, SignalSchedule,
    SpacingBarrier, SpeedLimitSchedule, VehicleModel, VehicleParams,
};

pub const SPACING_ID: &str = "h1";

/// A validated scenario, ready for checking and simulation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub hash: String,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub params: VehicleParams<f64>,
    pub model: VehicleModel<f64>,
    pub input_box: InputBox<f64>,
    pub pid: PidState<f64>,
    pub x0: Vec<f64>,
    pub registry: BarrierRegistry<f64>,
    pub spec: StlSpec<f64>,
    pub spec_text: String,
    pub speed_limits: Option<(String, SpeedLimitSchedule<f64>)>,
    pub signals: Option<Arc<SignalBarrier<f64>>>,
    pub monitor_tol: f64,
    pub assumption_tol: f64,
    pub schedule: ScheduleConfig<f64>,
    pub rho_r: f64,
    pub rho_v: f64,
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive and finite, got {v}"));
    }
}

fn check_rho(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(0.0..1.0).contains(&v) {
        errs.push(format!("{name} must lie in [0, 1), got {v}"));
    }
}

impl Scenario {
    pub fn load(path: &str, o: &Overrides) -> Result<Self, RunError> {
        let mut cfg = ScenarioConfig::load(path)?;
        cfg.apply(o);
        Self::build(&cfg, o)
    }

    /// Applies defaults and validates; every violated invariant is reported.
    pub fn build(cfg: &ScenarioConfig, o: &Overrides) -> Result<Self, RunError> {
        let mut errs = Vec::new();
        let v = &cfg.vehicle;
        let d = VehicleParams::<f64>::default();
        let g_grav = v.g_grav.unwrap_or(d.g_grav);
        let a_max = match (v.a_max, v.a_max_g) {
            (Some(_), Some(_)) => {
                errs.push("vehicle: give either a_max or a_max_g, not both".into());
                d.a_max
            }
            (Some(a), None) => a,
            (None, Some(f)) => f * g_grav,
            (None, None) => d.a_max,
        };
        let params = VehicleParams {
            mass: v.mass.unwrap_or(d.mass),
            c0: v.c0.unwrap_or(d.c0),
            c1: v.c1.unwrap_or(d.c1),
            c2: v.c2.unwrap_or(d.c2),
            time_headway: v.time_headway.unwrap_or(d.time_headway),
            standstill_gap: v.standstill_gap.unwrap_or(d.standstill_gap),
            a_max,
            signal_headway: v.signal_headway.unwrap_or(d.signal_headway),
            g_grav,
        };
        errs.extend(params.violations());
        positive(&mut errs, "dt", cfg.dt);

        let rho_r = cfg.fcbf.rho_r.unwrap_or(0.9);
        let rho_v = cfg.fcbf.rho_v.unwrap_or(0.91);
        let t_conv_v = cfg.fcbf.t_conv_v.unwrap_or(5.0);
        let gamma_min = cfg.fcbf.gamma_min.unwrap_or(GAMMA_MIN);
        check_rho(&mut errs, "fcbf.rho_r", rho_r);
        check_rho(&mut errs, "fcbf.rho_v", rho_v);
        positive(&mut errs, "fcbf.t_conv_v", t_conv_v);
        positive(&mut errs, "fcbf.gamma_min", gamma_min);

        let tol = &cfg.tolerances;
        let monitor_tol = tol.monitor.unwrap_or(MONITOR_TOLERANCE);
        let assumption_tol = tol.assumption.unwrap_or(MONITOR_TOLERANCE);
        let step_margin = tol.step_margin.unwrap_or(cfg.dt);
        let grid_points = tol.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        if !(monitor_tol >= 0.0) {
            errs.push(format!("tolerances.monitor must be nonnegative, got {monitor_tol}"));
        }
        if !(assumption_tol >= 0.0) {
            errs.push(format!("tolerances.assumption must be nonnegative, got {assumption_tol}"));
        }
        if !(step_margin >= 0.0) {
            errs.push(format!("tolerances.step_margin must be nonnegative, got {step_margin}"));
        }
        if grid_points < 2 {
            errs.push(format!("tolerances.grid_points must be at least 2, got {grid_points}"));
        }

        let (lo_default, hi_default) = (-params.mass * params.a_max, params.mass * params.a_max);
        let (u_lo, u_hi) = match &cfg.input_box {
            Some(b) => (b.lower.unwrap_or(lo_default), b.upper.unwrap_or(hi_default)),
            None => (lo_default, hi_default),
        };
        let input_box = InputBox::new(vec![u_lo], vec![u_hi]).map_err(|e| format!("input_box: {e}"));
        let input_box = input_box.map_err(|e| errs.push(e)).ok();

        let p = &cfg.pid;
        let pd = PidState::<f64>::default();
        let pid = PidState::new(
            p.k1.unwrap_or(pd.k1),
            p.k2.unwrap_or(pd.k2),
            p.k3.unwrap_or(pd.k3),
            p.integral_clamp.unwrap_or(pd.clamp),
        );

        let lead = match LeadProfile::new(
            cfg.lead.v0.unwrap_or(20.0),
            cfg.lead.accel,
            cfg.lead.switches.clone(),
        ) {
            Ok(l) => Some(Arc::new(l)),
            Err(e) => {
                errs.push(format!("lead: {e}"));
                None
            }
        };

        let x0 = vec![
            cfg.initial.x_f.unwrap_or(0.0),
            cfg.initial.v_f.unwrap_or(0.0),
            cfg.initial.x_l.unwrap_or(params.standstill_gap + 50.0),
        ];
        if x0[1] < 0.0 {
            errs.push(format!("initial.v_f must be nonnegative, got {}", x0[1]));
        }

        let domain = match &cfg.domain {
            Some(dm) => StateBox::new(dm.lower.clone(), dm.upper.clone()),
            None => StateBox::new(vec![-1e3, 0.0, -1e3], vec![1e5, 100.0, 1e5]),
        };
        let domain = match domain {
            Ok(b) if b.dim() == 3 => Some(b),
            Ok(_) => {
                errs.push("domain: lower and upper need three entries (X_f, V_f, X_l)".into());
                None
            }
            Err(e) => {
                errs.push(format!("domain: {e}"));
                None
            }
        };
        if let Some(dm) = &domain {
            if !dm.contains(&x0) {
                errs.push(format!("initial state {x0:?} lies outside the domain"));
            }
        }

        let spec_text = match cfg.spec_text() {
            Ok(t) => t,
            Err(RunError::Config(mut e)) => {
                errs.append(&mut e);
                None
            }
            Err(e) => return Err(e),
        };

        let horizon_hint = cfg.horizon;
        if let Some(h) = horizon_hint {
            positive(&mut errs, "horizon", h);
        }

        let mut registry = BarrierRegistry::new();
        if let Some(lead) = &lead {
            let _ = registry.insert(RegistryEntry::new(Barrier::new(
                SPACING_ID,
                SpacingBarrier::new(params, lead.clone()),
            )));
        }

        let beta_alpha = AlphaFn::Scaled(1.0 / params.signal_headway.max(f64::MIN_POSITIVE));
        let mut speed_limits = None;
        if let Some(sl) = &cfg.speed_limits {
            let horizon = horizon_hint.unwrap_or(0.0);
            let sched = match (&sl.values, sl.period, &sl.pieces) {
                (Some(vals), Some(period), None) => {
                    if horizon_hint.is_none() {
                        errs.push("speed_limits.values needs a top-level horizon".into());
                    }
                    SpeedLimitSchedule::cyclic(vals, period, horizon).map_err(|e| e.to_string())
                }
                (None, None, Some(pieces)) => pieces
                    .iter()
                    .map(|&(s, e, v)| TimeInterval::new(s, e).map(|iv| (iv, v)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())
                    .and_then(|p| SpeedLimitSchedule::new(p).map_err(|e| e.to_string())),
                _ => Err("give either `values` and `period`, or `pieces`".into()),
            };
            match sched {
                Ok(s) => {
                    let settings = FcbfSettings {
                        rho: rho_v,
                        t_conv: Some(t_conv_v),
                        gamma: None,
                    };
                    for i in 0..s.pieces().len() {
                        let entry = RegistryEntry::new(Barrier::new(
                            SpeedLimitSchedule::<f64>::piece_id(&sl.id, i),
                            s.piece_barrier(i),
                        ))
                        .with_alpha(beta_alpha)
                        .with_fcbf(settings);
                        if let Err(e) = registry.insert(entry) {
                            errs.push(format!("speed_limits: {e}"));
                        }
                    }
                    let whole = RegistryEntry::new(Barrier::new(sl.id.clone(), s.barrier()))
                        .with_alpha(beta_alpha)
                        .with_fcbf(settings);
                    if let Err(e) = registry.insert(whole) {
                        errs.push(format!("speed_limits: {e}"));
                    }
                    speed_limits = Some((sl.id.clone(), s));
                }
                Err(e) => errs.push(format!("speed_limits: {e}")),
            }
        }

        let mut signals = None;
        if let Some(sg) = &cfg.signals {
            let sched = if sg.generate {
                if !sg.list.is_empty() {
                    errs.push("signals: `generate` and `list` are mutually exclusive".into());
                }
                let dflt = SignalGenerator::default();
                let gen = SignalGenerator {
                    count: sg.count.unwrap_or(dflt.count),
                    spacing: sg.spacing.unwrap_or(dflt.spacing),
                    green: sg.green.unwrap_or(dflt.green),
                    yellow: sg.yellow.unwrap_or(dflt.yellow),
                    red: sg.red.unwrap_or(dflt.red),
                };
                match horizon_hint {
                    Some(h) => gen.generate(sg.seed.or(o.seed).unwrap_or(cfg.seed), h),
                    None => {
                        errs.push("signals.generate needs a top-level horizon".into());
                        gen.generate(cfg.seed, 0.0)
                    }
                }
            } else {
                SignalSchedule::new(
                    sg.list
                        .iter()
                        .map(|s| {
                            let cycles: Vec<SignalCycle<f64>> = s
                                .cycles
                                .iter()
                                .map(|&(green, yellow, red)| SignalCycle { green, yellow, red })
                                .collect();
                            let final_green = s.final_green.unwrap_or(f64::INFINITY);
                            Signal {
                                position: s.position,
                                cycles,
                                final_green,
                            }
                        })
                        .collect(),
                )
            };
            match sched {
                Ok(s) => {
                    let bar = Arc::new(SignalBarrier::new(sg.id.clone(), Arc::new(s), &params));
                    let settings = FcbfSettings {
                        rho: rho_r,
                        t_conv: None,
                        gamma: None,
                    };
                    for (id, comp) in bar.components() {
                        let entry = RegistryEntry::new(Barrier::new(id, comp)).with_fcbf(settings);
                        if let Err(e) = registry.insert(entry) {
                            errs.push(format!("signals: {e}"));
                        }
                    }
                    let entry = RegistryEntry::new(Barrier::from_arc(sg.id.clone(), bar.clone()))
                        .with_fcbf(settings)
                        .with_stitching(bar.clone());
                    if let Err(e) = registry.insert(entry) {
                        errs.push(format!("signals: {e}"));
                    }
                    signals = Some(bar);
                }
                Err(e) => errs.push(format!("signals: {e}")),
            }
        }

        for b in &cfg.barriers {
            match custom_barrier(b, rho_r) {
                Ok(entry) => {
                    if let Err(e) = registry.insert(entry) {
                        errs.push(format!("barriers.{}: {e}", b.id));
                    }
                }
                Err(e) => errs.push(format!("barriers.{}: {e}", b.id)),
            }
        }

        let no_horizon = spec_text.is_none() && horizon_hint.is_none();
        if no_horizon {
            errs.push("horizon is required when no [spec] is given".into());
        }
        let spec_text = spec_text.unwrap_or_else(|| default_spec(horizon_hint, &speed_limits, &signals));
        let spec = match parse_spec::<f64>(&spec_text, |id| registry.contains(id)) {
            Ok(s) => Some(s),
            Err(_) if no_horizon => None,
            Err(e) => {
                errs.push(format!("spec: {e}"));
                None
            }
        };
        let horizon = match (horizon_hint, &spec) {
            (Some(h), Some(s)) if (h - s.horizon).abs() > 1e-9 => {
                errs.push(format!(
                    "horizon {h} disagrees with the mission horizon {}",
                    s.horizon
                ));
                h
            }
            (Some(h), _) => h,
            (None, Some(s)) => s.horizon,
            (None, None) => 0.0,
        };

        if !errs.is_empty() {
            return Err(RunError::Config(errs));
        }
        let (Some(lead), Some(domain), Some(input_box), Some(spec)) = (lead, domain, input_box, spec)
        else {
            return Err(RunError::Config(vec!["incomplete configuration".into()]));
        };
        let schedule = ScheduleConfig {
            span: TimeInterval::new(0.0, horizon)
                .map_err(|e| RunError::Config(vec![format!("horizon: {e}")]))?,
            domain: domain.clone(),
            step_margin,
            grid_points,
            engage_overrides: Vec::new(),
            gamma_min,
        };
        let mut hasher = Sha256::new();
        hasher.update(cfg.source.as_bytes());
        hasher.update(spec_text.as_bytes());
        hasher.update(format!("dt={:?};seed={:?}", o.dt, o.seed).as_bytes());
        Ok(Scenario {
            hash: hex::encode(hasher.finalize()),
            horizon,
            dt: cfg.dt,
            seed: cfg.seed,
            params,
            model: VehicleModel::new(params, lead, domain),
            input_box,
            pid,
            x0,
            registry,
            spec,
            spec_text,
            speed_limits,
            signals,
            monitor_tol,
            assumption_tol,
            schedule,
            rho_r,
            rho_v,
        })
    }

    /// Barriers whose values fill the `h1`, `h_v` and `h_pos` columns.
    pub fn column_barriers(&self) -> (Barrier<f64>, Option<Barrier<f64>>, Option<Barrier<f64>>) {
        let get = |id: &str| self.registry.get(id).map(|e| e.barrier.clone());
        (
            get(SPACING_ID).expect("spacing barrier is always registered"),
            self.speed_limits.as_ref().and_then(|(id, _)| get(id)),
            self.signals
                .as_ref()
                .and_then(|s| get(s.id())),
        )
    }
}

fn custom_barrier(b: &super::config::BarrierDecl, rho_default: f64) -> Result<RegistryEntry<f64>, String> {
    if b.template != "affine" {
        return Err(format!(
            "unknown template `{}` (only `affine` can be declared; h1, speed limits and signals are built in)",
            b.template
        ));
    }
    let weights = b.weights.clone().ok_or("affine barrier needs `weights`")?;
    if weights.len() != 3 {
        return Err(format!("weights need three entries, got {}", weights.len()));
    }
    let offset = PiecewiseConstant::new(b.offset.unwrap_or(0.0), b.offset_switches.clone())
        .map_err(|e| e.to_string())?;
    let mut entry = RegistryEntry::new(Barrier::new(b.id.clone(), AffineBarrier::new(weights, offset)));
    if let Some(k) = b.alpha {
        entry = entry.with_alpha(AlphaFn::scaled(k).map_err(|e| e.to_string())?);
    }
    let rho = b.rho.unwrap_or(rho_default);
    if !(0.0..1.0).contains(&rho) {
        return Err(format!("rho must lie in [0, 1), got {rho}"));
    }
    if let Some(t) = b.t_conv {
        if !(t > 0.0) {
            return Err(format!("t_conv must be positive, got {t}"));
        }
    }
    if let Some(g) = b.gamma {
        if !(g > 0.0) {
            return Err(format!("gamma must be positive, got {g}"));
        }
    }
    Ok(entry.with_fcbf(FcbfSettings {
        rho,
        t_conv: b.t_conv,
        gamma: b.gamma,
    }))
}

/// Mission used when the config gives none: keep the spacing, every speed
/// limit piece and the signal barrier over the whole horizon.
fn default_spec(
    horizon: Option<f64>,
    limits: &Option<(String, SpeedLimitSchedule<f64>)>,
    signals: &Option<Arc<SignalBarrier<f64>>>,
) -> String {
    let h = horizon.unwrap_or(0.0);
    let mut lines = vec![format!("horizon {h}"), format!("G[0,{h}) sat({SPACING_ID})")];
    if let Some((id, s)) = limits {
        for p in s.predicates(id) {
            lines.push(format!(
                "G[{},{}) sat({})",
                p.interval.start(),
                p.interval.end(),
                p.predicate.barrier_id
            ));
        }
    }
    if let Some(sig) = signals {
        lines.push(format!("G[0,{h}) sat({})", sig.id()));
    }
    lines.join("\n")
}
