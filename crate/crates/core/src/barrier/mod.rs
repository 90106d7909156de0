//! Time-varying barrier functions and the halfspace constraints they induce.

mod constraint;
mod fd;
mod registry;
mod templates;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::Scalar;

pub use constraint::{
    cbf_constraint, convergence_time, fcbf_constraint, gamma_for_deadline,
    gamma_for_deadline_with_min, lie_derivatives, LieTerms, GAMMA_MIN,
};
pub use fd::{finite_diff_check, FiniteDiffOutcome};
pub use registry::{BarrierRegistry, FcbfSettings, RegistryEntry, ResolvedPredicate};
pub use templates::{AffineBarrier, PiecewiseConstant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("barrier `{0}` is already registered")]
    Duplicate(String),
    #[error("barrier `{0}` is not registered")]
    Unknown(String),
}

/// `h(t, x) = weights · x + offset` at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm<T> {
    pub weights: Vec<T>,
    pub offset: T,
}

impl<T: Scalar> AffineForm<T> {
    pub fn eval(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.weights, x) + self.offset
    }
}

/// Evaluator behind a [`Barrier`]: value, time derivative and state gradient.
pub trait BarrierFn<T: Scalar>: Send + Sync + fmt::Debug {
    fn value(&self, t: T, x: &[T]) -> T;

    /// Left limit `lim_{s→t⁻} h(s, x)`.
    fn value_left(&self, t: T, x: &[T]) -> T {
        self.value(t, x)
    }

    fn dh_dt(&self, t: T, x: &[T]) -> T;

    fn grad_x(&self, t: T, x: &[T]) -> Vec<T>;

    /// Affine representation at `t` (or `t⁻` when `left`), if the template
    /// is affine in the state.
    fn affine_at(&self, _t: T, _left: bool) -> Option<AffineForm<T>> {
        None
    }

    /// False when a time switch or state breakpoint lies within `radius`.
    fn is_smooth_at(&self, _t: T, _x: &[T], _radius: T) -> bool {
        true
    }
}

/// A named barrier function. Cheap to clone.
#[derive(Clone)]
pub struct Barrier<T> {
    id: String,
    inner: Arc<dyn BarrierFn<T>>,
}

impl<T: Scalar> Barrier<T> {
    pub fn new(id: impl Into<String>, f: impl BarrierFn<T> + 'static) -> Self {
        Self {
            id: id.into(),
            inner: Arc::new(f),
        }
    }

    pub fn from_arc(id: impl Into<String>, inner: Arc<dyn BarrierFn<T>>) -> Self {
        Self {
            id: id.into(),
            inner,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn value(&self, t: T, x: &[T]) -> T {
        self.inner.value(t, x)
    }

    pub fn value_left(&self, t: T, x: &[T]) -> T {
        self.inner.value_left(t, x)
    }

    pub fn dh_dt(&self, t: T, x: &[T]) -> T {
        self.inner.dh_dt(t, x)
    }

    pub fn grad_x(&self, t: T, x: &[T]) -> Vec<T> {
        self.inner.grad_x(t, x)
    }

    pub fn affine_at(&self, t: T, left: bool) -> Option<AffineForm<T>> {
        self.inner.affine_at(t, left)
    }

    pub fn is_smooth_at(&self, t: T, x: &[T], radius: T) -> bool {
        self.inner.is_smooth_at(t, x, radius)
    }

    /// The barrier `-h`, whose safe set is the closure of the complement.
    pub fn negated(&self) -> Self {
        Self {
            id: format!("!{}", self.id),
            inner: Arc::new(templates::Negated(self.inner.clone())),
        }
    }

    pub fn safe_set(&self, t: T) -> SafeSet<'_, T> {
        SafeSet {
            barrier: self,
            t,
            left: false,
        }
    }

    /// `C(t⁻)`, the safe set under the left-limit of `h`.
    pub fn safe_set_left(&self, t: T) -> SafeSet<'_, T> {
        SafeSet {
            barrier: self,
            t,
            left: true,
        }
    }
}

impl<T> fmt::Debug for Barrier<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Barrier").field("id", &self.id).finish_non_exhaustive()
    }
}

/// Superlevel set `{x : h(t, x) ≥ 0}` at a fixed query time.
#[derive(Debug, Clone, Copy)]
pub struct SafeSet<'a, T> {
    barrier: &'a Barrier<T>,
    t: T,
    left: bool,
}

impl<T: Scalar> SafeSet<'_, T> {
    pub fn margin(&self, x: &[T]) -> T {
        if self.left {
            self.barrier.value_left(self.t, x)
        } else {
            self.barrier.value(self.t, x)
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.margin(x) >= T::zero()
    }
}

/// Extended class-K∞ function `α` in the invariance condition.
#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub enum AlphaFn<T> {
    #[default]
    Identity,
    /// `α(h) = κ h` with `κ > 0` (per second).
    Scaled(T),
}

impl<T: Scalar> AlphaFn<T> {
    pub fn scaled(kappa: T) -> Result<Self, BarrierError> {
        if kappa > T::zero() && kappa.is_finite() {
            Ok(AlphaFn::Scaled(kappa))
        } else {
            Err(BarrierError::InvalidParameter(format!(
                "alpha gain must be positive and finite, got {kappa}"
            )))
        }
    }

    pub fn apply(&self, h: T) -> T {
        match self {
            AlphaFn::Identity => h,
            AlphaFn::Scaled(k) => *k * h,
        }
    }
}


/// Exponent and rate of the finite-time convergence term
/// `γ sign(h) |h|^ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcbfParams<T> {
    rho: T,
    gamma: T,
}

impl<T: Scalar> FcbfParams<T> {
    pub fn new(rho: T, gamma: T) -> Result<Self, BarrierError> {
        check_rho(rho)?;
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(BarrierError::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        Ok(Self { rho, gamma })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
}

pub(crate) fn check_rho<T: Scalar>(rho: T) -> Result<(), BarrierError> {
    if rho >= T::zero() && rho < T::one() {
        Ok(())
    } else {
        Err(BarrierError::InvalidParameter(format!(
            "rho must lie in [0, 1), got {rho}"
        )))
    }
}

/// `a · u ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceConstraint<T> {
    pub a: Vec<T>,
    pub b: T,
}

impl<T: Scalar> HalfspaceConstraint<T> {
    pub fn new(a: Vec<T>, b: T) -> Self {
        Self { a, b }
    }

    /// Zero input coefficients with a negative right-hand side: no input can
    /// satisfy the constraint.
    pub fn is_infeasible_marker(&self) -> bool {
        self.a.iter().all(|c| *c == T::zero()) && self.b < T::zero()
    }

    pub fn residual(&self, u: &[T]) -> T {
        crate::scalar::dot(&self.a, u) - self.b
    }

    /// Upper bound `b / a` on a scalar input, when `a > 0`.
    pub fn scalar_upper_bound(&self) -> Option<T> {
        match self.a.as_slice() {
            [a] if *a > T::zero() => Some(self.b / *a),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_must_be_below_one() {
        assert!(FcbfParams::new(1.0, 2.0).is_err());
        assert!(FcbfParams::new(-0.1, 2.0).is_err());
        assert!(FcbfParams::new(0.9, 0.0).is_err());
        assert!(FcbfParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn alpha_gain_positive() {
        assert!(AlphaFn::scaled(0.0).is_err());
        assert_eq!(AlphaFn::scaled(0.5).unwrap().apply(4.0), 2.0);
        assert_eq!(AlphaFn::<f64>::Identity.apply(-3.0), -3.0);
    }

    #[test]
    fn infeasible_marker() {
        assert!(HalfspaceConstraint::new(vec![0.0], -1.0).is_infeasible_marker());
        assert!(!HalfspaceConstraint::new(vec![0.0], 1.0).is_infeasible_marker());
        assert!(!HalfspaceConstraint::new(vec![1.0], -1.0).is_infeasible_marker());
    }

    #[test]
    fn safe_set_membership_and_left_limit() {
        let b = Barrier::new(
            "v",
            AffineBarrier::new(
                vec![-1.0],
                PiecewiseConstant::new(25.0, vec![(10.0, 5.0)]).unwrap(),
            ),
        );
        assert!(b.safe_set(9.0).contains(&[20.0]));
        assert!(!b.safe_set(10.0).contains(&[20.0]));
        assert!(b.safe_set_left(10.0).contains(&[20.0]));
        assert_eq!(b.safe_set(10.0).margin(&[20.0]), -15.0);
        assert_eq!(b.negated().value(0.0, &[20.0]), -5.0);
    }
}
