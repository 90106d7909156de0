use std::sync::Arc;

use super::{AffineForm, BarrierError, BarrierFn};
use crate::Scalar;

/// Right-continuous piecewise-constant function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant<T> {
    initial: T,
    switches: Vec<(T, T)>,
}

impl<T: Scalar> PiecewiseConstant<T> {
    /// `initial` holds before the first switch; each `(time, value)` takes
    /// effect at `time`. Switch times must be strictly increasing.
    pub fn new(initial: T, switches: Vec<(T, T)>) -> Result<Self, BarrierError> {
        if switches.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(BarrierError::InvalidParameter(
                "switch times must be strictly increasing".into(),
            ));
        }
        if !initial.is_finite() || switches.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(BarrierError::InvalidParameter("non-finite offset".into()));
        }
        Ok(Self { initial, switches })
    }

    pub fn constant(v: T) -> Self {
        Self {
            initial: v,
            switches: Vec::new(),
        }
    }

    pub fn at(&self, t: T) -> T {
        let k = self.switches.partition_point(|(s, _)| *s <= t);
        if k == 0 {
            self.initial
        } else {
            self.switches[k - 1].1
        }
    }

    pub fn left_limit(&self, t: T) -> T {
        let k = self.switches.partition_point(|(s, _)| *s < t);
        if k == 0 {
            self.initial
        } else {
            self.switches[k - 1].1
        }
    }

    pub fn switch_times(&self) -> impl Iterator<Item = T> + '_ {
        self.switches.iter().map(|(t, _)| *t)
    }

    pub fn near_switch(&self, t: T, radius: T) -> bool {
        self.switch_times().any(|s| (s - t).abs() <= radius)
    }
}

/// `h(t, x) = w · x + c(t)` with piecewise-constant `c`.
#[derive(Debug, Clone)]
pub struct AffineBarrier<T> {
    weights: Vec<T>,
    offset: PiecewiseConstant<T>,
}

impl<T: Scalar> AffineBarrier<T> {
    pub fn new(weights: Vec<T>, offset: PiecewiseConstant<T>) -> Self {
        Self { weights, offset }
    }

    pub fn constant(weights: Vec<T>, offset: T) -> Self {
        Self::new(weights, PiecewiseConstant::constant(offset))
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

impl<T: Scalar> BarrierFn<T> for AffineBarrier<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        crate::scalar::dot(&self.weights, x) + self.offset.at(t)
    }

    fn value_left(&self, t: T, x: &[T]) -> T {
        crate::scalar::dot(&self.weights, x) + self.offset.left_limit(t)
    }

    fn dh_dt(&self, _t: T, _x: &[T]) -> T {
        T::zero()
    }

    fn grad_x(&self, _t: T, _x: &[T]) -> Vec<T> {
        self.weights.clone()
    }

    fn affine_at(&self, t: T, left: bool) -> Option<AffineForm<T>> {
        Some(AffineForm {
            weights: self.weights.clone(),
            offset: if left {
                self.offset.left_limit(t)
            } else {
                self.offset.at(t)
            },
        })
    }

    fn is_smooth_at(&self, t: T, _x: &[T], radius: T) -> bool {
        !self.offset.near_switch(t, radius)
    }
}

#[derive(Debug)]
pub(super) struct Negated<T>(pub Arc<dyn BarrierFn<T>>);

impl<T: Scalar> BarrierFn<T> for Negated<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        -self.0.value(t, x)
    }

    fn value_left(&self, t: T, x: &[T]) -> T {
        -self.0.value_left(t, x)
    }

    fn dh_dt(&self, t: T, x: &[T]) -> T {
        -self.0.dh_dt(t, x)
    }

    fn grad_x(&self, t: T, x: &[T]) -> Vec<T> {
        self.0.grad_x(t, x).into_iter().map(|g| -g).collect()
    }

    fn affine_at(&self, t: T, left: bool) -> Option<AffineForm<T>> {
        self.0.affine_at(t, left).map(|a| AffineForm {
            weights: a.weights.into_iter().map(|w| -w).collect(),
            offset: -a.offset,
        })
    }

    fn is_smooth_at(&self, t: T, x: &[T], radius: T) -> bool {
        self.0.is_smooth_at(t, x, radius)
    }
}
