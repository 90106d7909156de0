use std::fmt;
use std::str::FromStr;

use super::{SpacingBarrier, VehicleError, VehicleModel, VehicleParams};
use crate::barrier::{
    cbf_constraint, fcbf_constraint, AffineBarrier, AlphaFn, Barrier, FcbfParams,
};
use crate::scalar::sign0;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    H1,
    Rbar,
    RFcbf,
    V,
    VFcbf,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] = [
        BoundKind::H1,
        BoundKind::Rbar,
        BoundKind::RFcbf,
        BoundKind::V,
        BoundKind::VFcbf,
    ];
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::H1 => "h1",
            BoundKind::Rbar => "rbar",
            BoundKind::RFcbf => "r_fcbf",
            BoundKind::V => "v",
            BoundKind::VFcbf => "v_fcbf",
        })
    }
}

impl FromStr for BoundKind {
    type Err = VehicleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| VehicleError::UnknownBoundKind(s.to_string()))
    }
}

/// Inputs to a closed-form bound. `h` is the value of the barrier the
/// bound belongs to; `gamma`/`rho` are only read by the finite-time kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery<T> {
    pub v_f: T,
    pub v_l: T,
    pub a_l: T,
    pub h: T,
    pub gamma: T,
    pub rho: T,
}

fn pull<T: Scalar>(q: &BoundQuery<T>) -> T {
    q.gamma * sign0(q.h) * q.h.abs().powf(q.rho)
}

/// Upper bound on the traction force, derived by hand for each
/// constraint of the case study.
pub fn closed_form_bound<T: Scalar>(kind: BoundKind, p: &VehicleParams<T>, q: &BoundQuery<T>) -> T {
    let m = p.mass;
    let beta = p.signal_headway;
    let fr = p.friction_force(q.v_f);
    match kind {
        BoundKind::H1 => {
            let a = p.a_max;
            let v_r = q.v_l - q.v_f;
            m * a / (p.time_headway * a + q.v_f) * (q.h + v_r + q.v_l * q.a_l / a) + fr
        }
        BoundKind::Rbar => m / beta * (q.h - q.v_f) + fr,
        BoundKind::RFcbf => m / beta * (pull(q) - q.v_f) + fr,
        BoundKind::V => m / beta * q.h + fr,
        BoundKind::VFcbf => m * pull(q) + fr,
    }
}

/// The bound as typeset in the source derivation. Differs from
/// [`closed_form_bound`] for the two finite-time kinds.
pub fn printed_bound<T: Scalar>(kind: BoundKind, p: &VehicleParams<T>, q: &BoundQuery<T>) -> T {
    let fr = p.friction_force(q.v_f);
    match kind {
        BoundKind::RFcbf => p.mass / p.signal_headway * pull(q) + fr,
        BoundKind::VFcbf => p.mass / p.signal_headway * pull(q) + fr,
        _ => closed_form_bound(kind, p, q),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckRow<T> {
    pub kind: BoundKind,
    pub closed_form: T,
    pub generic: T,
    pub printed: T,
    pub rel_error: T,
    pub printed_matches: bool,
}

impl<T: Scalar> fmt::Display for CrossCheckRow<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kind={} closed_form={:.6} generic={:.6} printed={:.6} rel_error={:.3e} printed_matches={}",
            self.kind,
            self.closed_form.as_f64(),
            self.generic.as_f64(),
            self.printed.as_f64(),
            self.rel_error.as_f64(),
            self.printed_matches
        )
    }
}

pub(crate) fn rel_error<T: Scalar>(a: T, b: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(T::one())
}

/// Evaluates every closed form at `(t, x)` and compares it with the bound
/// produced by the generic constraint generator. `signal_pos` is the stop
/// line used for the red/clear barriers and `v_max` the current limit.
pub fn cross_check<T: Scalar>(
    model: &VehicleModel<T>,
    t: T,
    x: &[T],
    signal_pos: T,
    v_max: T,
    fcbf: &FcbfParams<T>,
) -> Vec<CrossCheckRow<T>> {
    let p = &model.params;
    let spacing = Barrier::new("h1", SpacingBarrier::new(*p, model.lead.clone()));
    let stop = Barrier::new(
        "h_r",
        AffineBarrier::constant(
            vec![-T::one(), -p.signal_headway, T::zero()],
            signal_pos - p.standstill_gap,
        ),
    );
    let speed = Barrier::new(
        "h_v",
        AffineBarrier::constant(vec![T::zero(), -T::one(), T::zero()], v_max),
    );
    let inv_beta = AlphaFn::Scaled(T::one() / p.signal_headway);
    let cases: [(BoundKind, &Barrier<T>); 5] = [
        (BoundKind::H1, &spacing),
        (BoundKind::Rbar, &stop),
        (BoundKind::RFcbf, &stop),
        (BoundKind::V, &speed),
        (BoundKind::VFcbf, &speed),
    ];
    cases
        .into_iter()
        .map(|(kind, bar)| {
            let c = match kind {
                BoundKind::H1 | BoundKind::Rbar => {
                    cbf_constraint(bar, model, &AlphaFn::Identity, t, x)
                }
                BoundKind::V => cbf_constraint(bar, model, &inv_beta, t, x),
                BoundKind::RFcbf | BoundKind::VFcbf => fcbf_constraint(bar, model, fcbf, t, x),
            };
            let generic = c.scalar_upper_bound().unwrap_or(T::infinity());
            let q = BoundQuery {
                v_f: x[1],
                v_l: model.lead.speed(t),
                a_l: model.lead.accel(t),
                h: bar.value(t, x),
                gamma: fcbf.gamma(),
                rho: fcbf.rho(),
            };
            let closed_form = closed_form_bound(kind, p, &q);
            let printed = printed_bound(kind, p, &q);
            CrossCheckRow {
                kind,
                closed_form,
                generic,
                printed,
                rel_error: rel_error(closed_form, generic),
                printed_matches: rel_error(printed, generic) <= T::lit(1e-9),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::sim::StateBox;
    use crate::vehicle::LeadProfile;

    #[test]
    fn h1_hand_value() {
        let p = VehicleParams::<f64>::default();
        let q = BoundQuery {
            v_f: 20.0,
            v_l: 20.0,
            a_l: 0.0,
            h: 25.0,
            gamma: 1.0,
            rho: 0.5,
        };
        let b = closed_form_bound(BoundKind::H1, &p, &q);
        let hand = 1650.0 * 3.92 / 23.92 * 25.0 + 200.1;
        assert!((b - hand).abs() < 1e-9);
        assert!((b - 6960.0).abs() < 1.0);
    }

    #[test]
    fn rbar_hand_value() {
        let p = VehicleParams::<f64>::default();
        let q = BoundQuery {
            v_f: 10.0,
            v_l: 0.0,
            a_l: 0.0,
            h: 275.0,
            gamma: 1.0,
            rho: 0.5,
        };
        let b = closed_form_bound(BoundKind::Rbar, &p, &q);
        assert!((b - (825.0 * 265.0 + 75.1)).abs() < 1e-9);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("r_fcbf".parse::<BoundKind>().unwrap(), BoundKind::RFcbf);
        assert!(matches!(
            "x".parse::<BoundKind>(),
            Err(VehicleError::UnknownBoundKind(_))
        ));
    }

    #[test]
    fn generic_agrees() {
        let model = VehicleModel::new(
            VehicleParams::default(),
            Arc::new(LeadProfile::new(18.0, 0.7, vec![(50.0, 0.0)]).unwrap()),
            StateBox::new(vec![-1e3, 0.0, -1e3], vec![1e5, 60.0, 1e5]).unwrap(),
        );
        let fc = FcbfParams::new(0.9, 0.8).unwrap();
        let rows = cross_check(&model, 12.0, &[40.0, 17.0, 95.0], 120.0, 25.0, &fc);
        for r in &rows {
            assert!(r.rel_error < 1e-9, "{r}");
        }
        let printed: Vec<bool> = rows.iter().map(|r| r.printed_matches).collect();
        assert_eq!(printed, [true, true, false, true, false]);
    }
}
