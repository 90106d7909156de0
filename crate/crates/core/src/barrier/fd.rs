use super::{Barrier, BarrierError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiniteDiffOutcome<T> {
    /// Worst of `|analytic - central| / max(1, |analytic|)` over `∂h/∂t`
    /// and every gradient component.
    Checked { max_rel_error: T },
    /// A switch instant or breakpoint lies within the stencil.
    NonSmooth,
}

pub fn finite_diff_check<T: Scalar>(
    bar: &Barrier<T>,
    t: T,
    x: &[T],
    step: T,
) -> Result<FiniteDiffOutcome<T>, BarrierError> {
    if !(step > T::zero()) {
        return Err(BarrierError::InvalidParameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    if !bar.is_smooth_at(t, x, step) || !bar.value(t, x).is_finite() {
        return Ok(FiniteDiffOutcome::NonSmooth);
    }
    let two = T::lit(2.0);
    let rel = |analytic: T, numeric: T| (analytic - numeric).abs() / analytic.abs().max(T::one());

    let numeric_dt = (bar.value(t + step, x) - bar.value(t - step, x)) / (two * step);
    let mut worst = rel(bar.dh_dt(t, x), numeric_dt);

    let grad = bar.grad_x(t, x);
    let mut probe = x.to_vec();
    for (i, g) in grad.iter().enumerate() {
        probe[i] = x[i] + step;
        let up = bar.value(t, &probe);
        probe[i] = x[i] - step;
        let down = bar.value(t, &probe);
        probe[i] = x[i];
        worst = worst.max(rel(*g, (up - down) / (two * step)));
    }
    Ok(FiniteDiffOutcome::Checked {
        max_rel_error: worst,
    })
}
