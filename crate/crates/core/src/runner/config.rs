use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::RunError;

pub const DEFAULT_DT: f64 = 0.01;

const SHIPPED_PRESET: &str = include_str!("../../presets/paper_sec6.toml");

/// Names accepted in place of a config path.
pub fn preset(name: &str) -> Option<&'static str> {
    match name.strip_prefix("preset:").unwrap_or(name) {
        "paper_sec6" => Some(SHIPPED_PRESET),
        _ => None,
    }
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

/// Raw scenario document. Every section is optional except what the
/// mission references; defaults are filled in by [`super::Scenario::build`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub vehicle: VehicleSection,
    pub input_box: Option<InputBoxSection>,
    #[serde(default)]
    pub pid: PidSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub lead: LeadSection,
    pub speed_limits: Option<SpeedLimitSection>,
    pub signals: Option<SignalSection>,
    #[serde(default)]
    pub fcbf: FcbfSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    pub domain: Option<DomainSection>,
    #[serde(default)]
    pub barriers: Vec<BarrierDecl>,
    #[serde(default)]
    pub spec: SpecSection,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
    /// Canonical text the scenario hash is computed from.
    #[serde(skip)]
    pub source: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub mass: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub time_headway: Option<f64>,
    pub standstill_gap: Option<f64>,
    pub a_max: Option<f64>,
    /// Braking limit as a fraction of `g_grav`.
    pub a_max_g: Option<f64>,
    pub signal_headway: Option<f64>,
    pub g_grav: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBoxSection {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidSection {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub integral_clamp: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x_f: Option<f64>,
    pub v_f: Option<f64>,
    pub x_l: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadSection {
    pub v0: Option<f64>,
    #[serde(default)]
    pub accel: f64,
    /// `[time, acceleration]` pairs.
    #[serde(default)]
    pub switches: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedLimitSection {
    #[serde(default = "default_speed_id")]
    pub id: String,
    /// Cyclic schedule: `values` repeat every `period` seconds.
    pub values: Option<Vec<f64>>,
    pub period: Option<f64>,
    /// Explicit `[start, end, limit]` pieces.
    pub pieces: Option<Vec<(f64, f64, f64)>>,
}

fn default_speed_id() -> String {
    "hv".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    #[serde(default = "default_signal_id")]
    pub id: String,
    #[serde(default)]
    pub generate: bool,
    /// Seed for the generator; falls back to the top-level seed.
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub spacing: Option<(f64, f64)>,
    pub green: Option<(f64, f64)>,
    pub yellow: Option<(f64, f64)>,
    pub red: Option<(f64, f64)>,
    #[serde(default)]
    pub list: Vec<SignalDecl>,
}

fn default_signal_id() -> String {
    "hpos".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDecl {
    pub position: f64,
    /// `[green, yellow, red]` onsets.
    #[serde(default)]
    pub cycles: Vec<(f64, f64, f64)>,
    pub final_green: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcbfSection {
    pub rho_r: Option<f64>,
    pub rho_v: Option<f64>,
    pub t_conv_v: Option<f64>,
    pub gamma_min: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub monitor: Option<f64>,
    pub assumption: Option<f64>,
    /// Margin kept between a convergence deadline and the switch.
    pub step_margin: Option<f64>,
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierDecl {
    pub id: String,
    #[serde(default = "default_template")]
    pub template: String,
    /// Affine template: `h = weights · (X_f, V_f, X_l) + offset(t)`.
    pub weights: Option<Vec<f64>>,
    pub offset: Option<f64>,
    /// `[time, offset]` switches after the initial `offset`.
    #[serde(default)]
    pub offset_switches: Vec<(f64, f64)>,
    /// Gain of a linear `α`; identity when absent.
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub t_conv: Option<f64>,
    pub gamma: Option<f64>,
}

fn default_template() -> String {
    "affine".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    pub text: Option<String>,
    pub path: Option<String>,
}

/// Command-line overrides folded into the scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| RunError::Config(vec![format!("parse error: {e}")]))?;
        cfg.source = text.to_string();
        Ok(cfg)
    }

    /// Reads a config file, or a shipped preset by name.
    pub fn load(path: &str) -> Result<Self, RunError> {
        if let Some(text) = preset(path) {
            return Self::parse(text);
        }
        let p = Path::new(path);
        let text = std::fs::read_to_string(p)
            .map_err(|e| RunError::Config(vec![format!("cannot read {path}: {e}")]))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = p.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.dt = dt;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
    }

    pub(crate) fn spec_text(&self) -> Result<Option<String>, RunError> {
        match (&self.spec.text, &self.spec.path) {
            (Some(_), Some(_)) => Err(RunError::Config(vec![
                "spec: give either `text` or `path`, not both".into(),
            ])),
            (Some(t), None) => Ok(Some(t.clone())),
            (None, Some(p)) => {
                let full = match &self.base_dir {
                    Some(d) if Path::new(p).is_relative() => d.join(p),
                    _ => PathBuf::from(p),
                };
                std::fs::read_to_string(&full)
                    .map(Some)
                    .map_err(|e| RunError::Config(vec![format!("spec.path {}: {e}", full.display())]))
            }
            (None, None) => Ok(None),
        }
    }
}
