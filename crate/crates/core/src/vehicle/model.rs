use std::sync::Arc;

use super::{LeadProfile, VehicleParams};
use crate::sim::{ControlSystem, StateBox};
use crate::Scalar;

/// Ego vehicle with state `(X_f, V_f, X_l)` and traction force input.
/// The lead position is driven by the exogenous lead speed.
#[derive(Debug, Clone)]
pub struct VehicleModel<T> {
    pub params: VehicleParams<T>,
    pub lead: Arc<LeadProfile<T>>,
    domain: StateBox<T>,
}

impl<T: Scalar> VehicleModel<T> {
    pub fn new(params: VehicleParams<T>, lead: Arc<LeadProfile<T>>, domain: StateBox<T>) -> Self {
        Self {
            params,
            lead,
            domain,
        }
    }
}

impl<T: Scalar> ControlSystem<T> for VehicleModel<T> {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn drift(&self, t: T, x: &[T]) -> Vec<T> {
        vec![
            x[1],
            -self.params.friction_force(x[1]) / self.params.mass,
            self.lead.speed(t),
        ]
    }

    fn input_map(&self, _t: T, _x: &[T]) -> Vec<Vec<T>> {
        vec![vec![T::zero()], vec![T::one() / self.params.mass], vec![T::zero()]]
    }

    fn domain(&self) -> &StateBox<T> {
        &self.domain
    }

    fn recover(&self, x: &mut [T]) -> Option<String> {
        if x[1] < T::zero() {
            let v = x[1];
            x[1] = T::zero();
            Some(format!("V_f clamped from {:.6e} to 0", v.as_f64()))
        } else {
            None
        }
    }
}
