use super::{check_rho, AlphaFn, Barrier, BarrierError, FcbfParams, HalfspaceConstraint};
use crate::scalar::{dot, sign0};
use crate::sim::ControlSystem;
use crate::Scalar;

/// Rate used when the engagement state is already inside the target set.
pub const GAMMA_MIN: f64 = 1e-3;

/// Ingredients of the barrier inequality at one `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieTerms<T> {
    pub h: T,
    pub dh_dt: T,
    /// `L_f h`
    pub drift: T,
    /// `L_g h`, one entry per input.
    pub input: Vec<T>,
}

pub fn lie_derivatives<T: Scalar>(
    bar: &Barrier<T>,
    sys: &dyn ControlSystem<T>,
    t: T,
    x: &[T],
) -> LieTerms<T> {
    let grad = bar.grad_x(t, x);
    let f = sys.drift(t, x);
    let g = sys.input_map(t, x);
    let input = (0..sys.input_dim())
        .map(|j| {
            grad.iter()
                .zip(&g)
                .fold(T::zero(), |acc, (gi, row)| acc + *gi * row[j])
        })
        .collect();
    LieTerms {
        h: bar.value(t, x),
        dh_dt: bar.dh_dt(t, x),
        drift: dot(&grad, &f),
        input,
    }
}

fn halfspace<T: Scalar>(terms: LieTerms<T>, extra: T) -> HalfspaceConstraint<T> {
    HalfspaceConstraint {
        a: terms.input.into_iter().map(|v| -v).collect(),
        b: terms.dh_dt + terms.drift + extra,
    }
}

/// Invariance condition `∂h/∂t + L_f h + L_g h u + α(h) ≥ 0` as `a·u ≤ b`.
pub fn cbf_constraint<T: Scalar>(
    bar: &Barrier<T>,
    sys: &dyn ControlSystem<T>,
    alpha: &AlphaFn<T>,
    t: T,
    x: &[T],
) -> HalfspaceConstraint<T> {
    let terms = lie_derivatives(bar, sys, t, x);
    let a = alpha.apply(terms.h);
    halfspace(terms, a)
}

/// Finite-time convergence condition
/// `∂h/∂t + L_f h + L_g h u + γ sign(h)|h|^ρ ≥ 0` as `a·u ≤ b`.
pub fn fcbf_constraint<T: Scalar>(
    bar: &Barrier<T>,
    sys: &dyn ControlSystem<T>,
    p: &FcbfParams<T>,
    t: T,
    x: &[T],
) -> HalfspaceConstraint<T> {
    let terms = lie_derivatives(bar, sys, t, x);
    let h = terms.h;
    let pull = p.gamma() * sign0(h) * h.abs().powf(p.rho());
    halfspace(terms, pull)
}

/// Time within which the convergence condition brings `h` from `h0` up to
/// zero: `|h0|^(1-ρ) / (γ(1-ρ))`, or zero when `h0 ≥ 0`.
pub fn convergence_time<T: Scalar>(h0: T, p: &FcbfParams<T>) -> T {
    if h0 >= T::zero() {
        return T::zero();
    }
    let one_minus = T::one() - p.rho();
    h0.abs().powf(one_minus) / (p.gamma() * one_minus)
}

/// Rate `γ` for which [`convergence_time`] from `h_engage` equals `t_target`.
/// Engagements already inside the set get [`GAMMA_MIN`].
pub fn gamma_for_deadline<T: Scalar>(h_engage: T, rho: T, t_target: T) -> Result<T, BarrierError> {
    gamma_for_deadline_with_min(h_engage, rho, t_target, T::lit(GAMMA_MIN))
}

pub fn gamma_for_deadline_with_min<T: Scalar>(
    h_engage: T,
    rho: T,
    t_target: T,
    gamma_min: T,
) -> Result<T, BarrierError> {
    check_rho(rho)?;
    if !(t_target > T::zero()) {
        return Err(BarrierError::InvalidParameter(format!(
            "convergence deadline must be positive, got {t_target}"
        )));
    }
    if h_engage >= T::zero() {
        return Ok(gamma_min);
    }
    let one_minus = T::one() - rho;
    Ok(h_engage.abs().powf(one_minus) / (t_target * one_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{AffineBarrier, PiecewiseConstant};
    use crate::sim::{LinearSystem, StateBox};

    fn double_integrator() -> LinearSystem<f64> {
        LinearSystem::new(
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
            vec![vec![0.0], vec![1.0]],
            StateBox::new(vec![-1e3, -1e3], vec![1e3, 1e3]).unwrap(),
        )
        .unwrap()
    }

    fn single_integrator() -> LinearSystem<f64> {
        LinearSystem::new(
            vec![vec![0.0]],
            vec![vec![1.0]],
            StateBox::new(vec![-1e3], vec![1e3]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn speed_limit_on_double_integrator() {
        let h = Barrier::new("v", AffineBarrier::constant(vec![0.0, -1.0], 25.0));
        let c = cbf_constraint(&h, &double_integrator(), &AlphaFn::Identity, 0.0, &[0.0, 20.0]);
        assert_eq!(c, HalfspaceConstraint::new(vec![1.0], 5.0));
        assert_eq!(c.scalar_upper_bound(), Some(5.0));
    }

    #[test]
    fn constant_barrier_is_vacuous_or_infeasible() {
        let sys = double_integrator();
        let pos = Barrier::new("c", AffineBarrier::constant(vec![0.0, 0.0], 1.0));
        let c = cbf_constraint(&pos, &sys, &AlphaFn::Identity, 0.0, &[0.0, 0.0]);
        assert_eq!(c, HalfspaceConstraint::new(vec![0.0], 1.0));
        assert!(!c.is_infeasible_marker());
        let neg = Barrier::new("c", AffineBarrier::constant(vec![0.0, 0.0], -1.0));
        let c = cbf_constraint(&neg, &sys, &AlphaFn::Identity, 0.0, &[0.0, 0.0]);
        assert_eq!(c, HalfspaceConstraint::new(vec![0.0], -1.0));
        assert!(c.is_infeasible_marker());
    }

    #[test]
    fn fcbf_outside_set_demands_growth() {
        // h = x - 1 at x = 0: h = -1, L_g h = 1
        let h = Barrier::new("r", AffineBarrier::constant(vec![1.0], -1.0));
        let p = FcbfParams::new(0.9, 2.0).unwrap();
        let c = fcbf_constraint(&h, &single_integrator(), &p, 0.0, &[0.0]);
        assert_eq!(c.a, vec![-1.0]);
        assert!((c.b - -2.0).abs() < 1e-15);
    }

    #[test]
    fn fcbf_on_boundary_drops_pull() {
        let h = Barrier::new("r", AffineBarrier::constant(vec![1.0], 0.0));
        let p = FcbfParams::new(0.9, 2.0).unwrap();
        let c = fcbf_constraint(&h, &single_integrator(), &p, 0.0, &[0.0]);
        assert_eq!(c.b, 0.0);
    }

    #[test]
    fn fcbf_inside_set_adds_gamma_h_rho() {
        let sys = double_integrator();
        let h = Barrier::new(
            "v",
            AffineBarrier::new(vec![0.0, -1.0], PiecewiseConstant::constant(25.0)),
        );
        let p = FcbfParams::new(0.5, 3.0).unwrap();
        let x = [0.0, 16.0];
        let c = fcbf_constraint(&h, &sys, &p, 0.0, &x);
        let base = lie_derivatives(&h, &sys, 0.0, &x);
        assert!((c.b - (base.dh_dt + base.drift) - 3.0 * 9f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn convergence_time_examples() {
        let p = FcbfParams::new(0.9, 2.0).unwrap();
        assert!((convergence_time(-1.0f64, &p) - 5.0).abs() < 1e-12);
        assert_eq!(convergence_time(3.0, &p), 0.0);
        let q = FcbfParams::new(0.5, 1.0).unwrap();
        assert!((convergence_time(-4.0f64, &q) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn convergence_time_matches_comparison_dynamics() {
        // integrate dh/dt = γ |h|^ρ from h0 = -4 until zero
        let (rho, gamma) = (0.5, 1.0);
        let mut h: f64 = -4.0;
        let dt = 1e-5;
        let mut t = 0.0;
        while h < 0.0 {
            h += dt * gamma * h.abs().powf(rho);
            t += dt;
        }
        let q = FcbfParams::new(rho, gamma).unwrap();
        assert!((t - convergence_time(-4.0, &q)).abs() < 1e-3, "{t}");
    }

    #[test]
    fn gamma_for_deadline_examples() {
        assert!((gamma_for_deadline(-1.0f64, 0.9, 5.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(gamma_for_deadline(0.0, 0.9, 5.0).unwrap(), GAMMA_MIN);
        assert!((gamma_for_deadline(-4.0f64, 0.5, 4.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(gamma_for_deadline(-1.0, 0.9, 0.0).is_err());
        assert!(gamma_for_deadline(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gamma_round_trips_through_convergence_time() {
        for &(h, rho, t) in &[(-1.0f64, 0.9, 5.0), (-4.0, 0.5, 4.0), (-37.5, 0.91, 3.3), (-0.2, 0.0, 0.7)] {
            let g = gamma_for_deadline(h, rho, t).unwrap();
            let p = FcbfParams::new(rho, g).unwrap();
            assert!((convergence_time(h, &p) - t).abs() < 1e-9 * t.max(1.0));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let sys = LinearSystem::<f32>::new(
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
            vec![vec![0.0], vec![1.0]],
            StateBox::new(vec![-1e3, -1e3], vec![1e3, 1e3]).unwrap(),
        )
        .unwrap();
        let h = Barrier::new("v", AffineBarrier::constant(vec![0.0f32, -1.0], 25.0));
        let c = cbf_constraint(&h, &sys, &AlphaFn::Identity, 0.0, &[0.0, 20.0]);
        assert_eq!(c.b, 5.0f32);
    }
}
