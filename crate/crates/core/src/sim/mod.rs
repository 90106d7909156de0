//! Control-affine dynamics, fixed-step integration and the closed-loop
//! simulation loop.

mod integrate;
mod run;
mod system;
mod trace;

use thiserror::Error;

pub use integrate::integrate_step;
pub use run::{run_simulation, FailureReason, NominalController, SimFailure, SimOutcome, SimSetup};
pub use system::{ControlSystem, LinearSystem, StateBox};
pub use trace::{QpStatus, Trace, TraceEvent, TraceMeta, TraceRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state {state:?} left the domain at t={t}")]
    DomainExit { t: f64, state: Vec<f64> },
    #[error("non-finite state at t={t}")]
    NonFinite { t: f64 },
    #[error("initial state violates the assumption of group {group}: {barrier} = {margin} < 0")]
    InitialAssumption {
        group: String,
        barrier: String,
        margin: f64,
    },
    #[error("contract query failed: {0}")]
    Contract(String),
}
