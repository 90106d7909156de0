use super::{ControlSystem, SimError};
use crate::Scalar;

fn rate<T: Scalar>(sys: &dyn ControlSystem<T>, t: T, x: &[T], u: &[T]) -> Vec<T> {
    let f = sys.drift(t, x);
    let g = sys.input_map(t, x);
    f.iter()
        .zip(&g)
        .map(|(fi, row)| *fi + crate::scalar::dot(row, u))
        .collect()
}

fn axpy<T: Scalar>(x: &[T], k: &[T], s: T) -> Vec<T> {
    x.iter().zip(k).map(|(a, b)| *a + s * *b).collect()
}

/// One classical fourth-order Runge–Kutta step of `ẋ = f + g u` with `u`
/// held over `[t, t + dt]`.
pub fn integrate_step<T: Scalar>(
    sys: &dyn ControlSystem<T>,
    t: T,
    x: &[T],
    u: &[T],
    dt: T,
) -> Result<Vec<T>, SimError> {
    if !(dt > T::zero()) {
        return Err(SimError::InvalidParameter(format!("step must be positive, got {dt}")));
    }
    if x.len() != sys.state_dim() || u.len() != sys.input_dim() {
        return Err(SimError::Dimension(format!(
            "state/input lengths {}/{} do not match system {}/{}",
            x.len(),
            u.len(),
            sys.state_dim(),
            sys.input_dim()
        )));
    }
    let next = rk4(sys, t, x, u, dt);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite {
            t: (t + dt).as_f64(),
        });
    }
    if !sys.domain().contains(&next) {
        return Err(SimError::DomainExit {
            t: (t + dt).as_f64(),
            state: next.iter().map(|v| v.as_f64()).collect(),
        });
    }
    Ok(next)
}

pub(crate) fn rk4<T: Scalar>(sys: &dyn ControlSystem<T>, t: T, x: &[T], u: &[T], dt: T) -> Vec<T> {
    let half = dt / T::lit(2.0);
    let k1 = rate(sys, t, x, u);
    let k2 = rate(sys, t + half, &axpy(x, &k1, half), u);
    let k3 = rate(sys, t + half, &axpy(x, &k2, half), u);
    let k4 = rate(sys, t + dt, &axpy(x, &k3, dt), u);
    let six = T::lit(6.0);
    (0..x.len())
        .map(|i| x[i] + dt / six * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect()
}
