//! Longitudinal vehicle case study: dynamics, lead vehicle, spacing,
//! speed-limit and traffic-signal barriers, and closed-form safe input
//! bounds.

mod barriers;
mod closed_form;
mod lead;
mod model;
mod signals;

use thiserror::Error;

use crate::Scalar;

pub use barriers::{SpacingBarrier, SpeedLimitSchedule};
pub use closed_form::{
    closed_form_bound, cross_check, printed_bound, BoundKind, BoundQuery, CrossCheckRow,
};
pub use lead::LeadProfile;
pub use model::VehicleModel;
pub use signals::{
    Phase, Signal, SignalBarrier, SignalCycle, SignalGenerator, SignalSchedule,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("speed limit intervals {0} and {1} overlap")]
    OverlappingLimits(String, String),
    #[error("speed limit intervals leave a gap between {0} and {1}")]
    LimitGap(String, String),
    #[error("unknown bound kind `{0}` (expected h1, rbar, r_fcbf, v or v_fcbf)")]
    UnknownBoundKind(String),
    #[error("invalid signal schedule: {0}")]
    InvalidSignal(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T> {
    /// kg
    pub mass: T,
    /// N
    pub c0: T,
    /// N/(m/s)
    pub c1: T,
    /// N/(m/s)²
    pub c2: T,
    /// s
    pub time_headway: T,
    /// m
    pub standstill_gap: T,
    /// Maximum braking deceleration, m/s².
    pub a_max: T,
    /// Headway used by the signal barriers, s.
    pub signal_headway: T,
    pub g_grav: T,
}

impl<T: Scalar> Default for VehicleParams<T> {
    fn default() -> Self {
        Self {
            mass: T::lit(1650.0),
            c0: T::lit(0.1),
            c1: T::lit(5.0),
            c2: T::lit(0.25),
            time_headway: T::lit(1.0),
            standstill_gap: T::lit(5.0),
            a_max: T::lit(0.4 * 9.8),
            signal_headway: T::lit(2.0),
            g_grav: T::lit(9.8),
        }
    }
}

impl<T: Scalar> VehicleParams<T> {
    /// Every violated invariant, by field name.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("mass", self.mass),
            ("time_headway", self.time_headway),
            ("standstill_gap", self.standstill_gap),
            ("a_max", self.a_max),
            ("signal_headway", self.signal_headway),
            ("g_grav", self.g_grav),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                out.push(format!("vehicle.{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("c0", self.c0), ("c1", self.c1), ("c2", self.c2)] {
            if !(v >= T::zero()) || !v.is_finite() {
                out.push(format!("vehicle.{name} must be nonnegative, got {v}"));
            }
        }
        if self.a_max > self.g_grav {
            out.push(format!(
                "vehicle.a_max {} exceeds g_grav {}",
                self.a_max, self.g_grav
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(VehicleError::InvalidParameter(v.join("; ")))
        }
    }

    /// `F_r = c0 + c1 V + c2 V²`
    pub fn friction_force(&self, v: T) -> T {
        self.c0 + self.c1 * v + self.c2 * v * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friction_values() {
        let p = VehicleParams::<f64>::default();
        assert_eq!(p.friction_force(0.0), 0.1);
        assert!((p.friction_force(20.0) - 200.1).abs() < 1e-12);
        assert!((p.friction_force(10.0) - 75.1).abs() < 1e-12);
    }

    #[test]
    fn default_braking_is_point_four_g() {
        let p = VehicleParams::<f64>::default();
        assert!((p.a_max - 3.92).abs() < 1e-12);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn violations_name_fields() {
        let p = VehicleParams::<f64> {
            mass: -1.0,
            a_max: 20.0,
            ..Default::default()
        };
        let v = p.violations();
        assert!(v.iter().any(|m| m.contains("vehicle.mass")));
        assert!(v.iter().any(|m| m.contains("a_max")));
    }
}
