//! Safe controller synthesis from bounded-time STL missions.
//!
//! A mission written in a small STL fragment is preprocessed (eventually
//! windows become globally windows), grouped into formulas over pairwise
//! disjoint intervals, and compiled into schedules of time-varying barrier
//! function contracts. At run time the active contracts yield halfspace
//! constraints on the input, and a nominal controller is projected onto
//! their intersection.
//!
//! The numeric core is generic over [`Scalar`] (`f32`/`f64`); the projection
//! solver additionally runs over exact rationals. Aliases for the common
//! `f64` instantiation live at the crate root.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::result_large_err,
    clippy::needless_range_loop
)]

pub mod barrier;
pub mod contract;
pub mod qp;
pub mod runner;
pub mod scalar;
pub mod sim;
pub mod stl;
pub mod vehicle;

pub use scalar::{Field, Scalar};

pub type Barrier64 = barrier::Barrier<f64>;
pub type BarrierRegistry64 = barrier::BarrierRegistry<f64>;
pub type Halfspace64 = barrier::HalfspaceConstraint<f64>;
pub type FcbfParams64 = barrier::FcbfParams<f64>;
pub type AlphaFn64 = barrier::AlphaFn<f64>;
pub type TimeInterval64 = stl::TimeInterval<f64>;
pub type StlSpec64 = stl::StlSpec<f64>;
pub type StlFormula64 = stl::StlFormula<f64>;
pub type TaskGroup64 = stl::TaskGroup<f64>;
pub type ContractSchedule64 = contract::ContractSchedule<f64>;
pub type GroupContract64 = contract::GroupContract<f64>;
pub type InputBox64 = qp::InputBox<f64>;
pub type PidState64 = qp::PidState<f64>;
pub type StateBox64 = sim::StateBox<f64>;
pub type Trace64 = sim::Trace<f64>;
pub type VehicleParams64 = vehicle::VehicleParams<f64>;
pub type SignalSchedule64 = vehicle::SignalSchedule<f64>;
