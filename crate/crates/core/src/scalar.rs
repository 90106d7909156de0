//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use std::ops::Neg;

use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + Field + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Ordered field used by the projection solver. Floats carry a rounding
/// slack; exact rationals compare with zero slack.
pub trait Field: Clone + PartialOrd + Num + Neg<Output = Self> + Debug {
    fn magnitude(&self) -> Self;

    fn is_finite_value(&self) -> bool;

    /// Admissible constraint violation for a right-hand side of magnitude `scale`.
    fn slack(scale: &Self) -> Self;

    /// Pivot magnitude below which a linear system is treated as singular.
    fn pivot_floor() -> Self;
}

macro_rules! float_field {
    ($t:ty, $eps:expr) => {
        impl Field for $t {
            fn magnitude(&self) -> Self {
                self.abs()
            }

            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }

            fn slack(scale: &Self) -> Self {
                $eps * (1.0 + scale.abs())
            }

            fn pivot_floor() -> Self {
                $eps
            }
        }
    };
}

float_field!(f64, 1e-12);
float_field!(f32, 1e-5);

impl Field for Rational64 {
    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn slack(_scale: &Self) -> Self {
        Rational64::from_integer(0)
    }

    fn pivot_floor() -> Self {
        Rational64::from_integer(0)
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// `sign(v)` with `sign(0) = 0`.
pub(crate) fn sign0<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
