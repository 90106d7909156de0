//! Scenario loading, the end-to-end pipeline and its file formats.

mod config;
mod csv;
mod pipeline;
mod report;
mod scenario;

use thiserror::Error;

pub use config::{
    preset, BarrierDecl, DomainSection, FcbfSection, InitialSection, InputBoxSection,
    LeadSection, Overrides, PidSection, ScenarioConfig, SignalDecl, SignalSection,
    SpecSection, SpeedLimitSection, ToleranceSection, VehicleSection, DEFAULT_DT,
};
pub use csv::{read_trace_csv, render_trace_csv, write_trace_csv, TRACE_COLUMNS};
pub use pipeline::{check, monitor, run_pipeline, PipelineResult};
pub use report::{Outcome, RunReport};
pub use scenario::{Scenario, SPACING_ID};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_MONITOR_VIOLATION: i32 = 1;
pub const EXIT_STATIC: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("config error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("static incompatibility: {message}")]
    Static { message: String, report: String },
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("bad input: {0}")]
    Input(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Static { .. } => EXIT_STATIC,
            RunError::Runtime(_) => EXIT_RUNTIME,
            RunError::Config(_) | RunError::Io(_) | RunError::Input(_) => EXIT_CONFIG,
        }
    }
}
