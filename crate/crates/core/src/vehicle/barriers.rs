use std::sync::Arc;

use super::{LeadProfile, VehicleError, VehicleParams};
use crate::barrier::{AffineBarrier, BarrierFn, PiecewiseConstant};
use crate::stl::{PredicateRef, TimeInterval, TimedPredicate};
use crate::Scalar;

/// `h1 = X_r - t_hw V_f - S0 - (V_f² - V_l²) / (2 a_max)` with `X_r = X_l - X_f`.
#[derive(Debug, Clone)]
pub struct SpacingBarrier<T> {
    params: VehicleParams<T>,
    lead: Arc<LeadProfile<T>>,
}

impl<T: Scalar> SpacingBarrier<T> {
    pub fn new(params: VehicleParams<T>, lead: Arc<LeadProfile<T>>) -> Self {
        Self { params, lead }
    }
}

impl<T: Scalar> BarrierFn<T> for SpacingBarrier<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        let p = &self.params;
        let vl = self.lead.speed(t);
        (x[2] - x[0]) - p.time_headway * x[1] - p.standstill_gap
            - (x[1] * x[1] - vl * vl) / (T::lit(2.0) * p.a_max)
    }

    fn dh_dt(&self, t: T, _x: &[T]) -> T {
        self.lead.speed(t) * self.lead.accel(t) / self.params.a_max
    }

    fn grad_x(&self, _t: T, x: &[T]) -> Vec<T> {
        vec![
            -T::one(),
            -self.params.time_headway - x[1] / self.params.a_max,
            T::one(),
        ]
    }

    fn is_smooth_at(&self, t: T, _x: &[T], radius: T) -> bool {
        !self.lead.near_kink(t, radius)
    }
}

/// Piecewise-constant speed limit over half-open intervals tiling
/// `[0, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedLimitSchedule<T> {
    pieces: Vec<(TimeInterval<T>, T)>,
}

impl<T: Scalar> SpeedLimitSchedule<T> {
    pub fn new(mut pieces: Vec<(TimeInterval<T>, T)>) -> Result<Self, VehicleError> {
        if pieces.is_empty() {
            return Err(VehicleError::InvalidParameter("speed limit schedule is empty".into()));
        }
        pieces.sort_by(|a, b| {
            a.0.start()
                .partial_cmp(&b.0.start())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in pieces.windows(2) {
            if w[0].0.overlaps(&w[1].0) {
                return Err(VehicleError::OverlappingLimits(
                    w[0].0.to_string(),
                    w[1].0.to_string(),
                ));
            }
            if w[0].0.end() < w[1].0.start() {
                return Err(VehicleError::LimitGap(w[0].0.to_string(), w[1].0.to_string()));
            }
        }
        if pieces[0].0.start() > T::zero() {
            return Err(VehicleError::LimitGap("0".into(), pieces[0].0.to_string()));
        }
        if let Some((_, v)) = pieces.iter().find(|(_, v)| !v.is_finite() || *v < T::zero()) {
            return Err(VehicleError::InvalidParameter(format!(
                "speed limit must be nonnegative and finite, got {v}"
            )));
        }
        Ok(Self { pieces })
    }

    /// `values` repeated in order, each held for `period`, until `horizon`.
    pub fn cyclic(values: &[T], period: T, horizon: T) -> Result<Self, VehicleError> {
        if values.is_empty() || !(period > T::zero()) || !(horizon > T::zero()) {
            return Err(VehicleError::InvalidParameter(
                "cyclic speed limits need values, a positive period and a positive horizon".into(),
            ));
        }
        let mut pieces = Vec::new();
        let mut k = 0usize;
        loop {
            let s = period * T::from_usize(k).unwrap_or_else(T::zero);
            if s >= horizon {
                break;
            }
            let e = (s + period).min(horizon);
            let iv = TimeInterval::new(s, e)
                .map_err(|e| VehicleError::InvalidParameter(e.to_string()))?;
            pieces.push((iv, values[k % values.len()]));
            k += 1;
        }
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[(TimeInterval<T>, T)] {
        &self.pieces
    }

    /// `V_max(t)`; the last value persists past the end.
    pub fn limit_at(&self, t: T) -> T {
        let k = self.pieces.partition_point(|(iv, _)| iv.start() <= t).max(1);
        self.pieces[k - 1].1
    }

    pub fn switch_times(&self) -> impl Iterator<Item = T> + '_ {
        self.pieces.iter().skip(1).map(|(iv, _)| iv.start())
    }

    /// `h_v = V_max(t) - V_f` over the whole schedule.
    pub fn barrier(&self) -> AffineBarrier<T> {
        let switches = self.pieces.iter().skip(1).map(|(iv, v)| (iv.start(), *v)).collect();
        AffineBarrier::new(
            vec![T::zero(), -T::one(), T::zero()],
            PiecewiseConstant::new(self.pieces[0].1, switches).expect("sorted switch times"),
        )
    }

    /// `h_{v,i} = V_max,i - V_f` for piece `i` (0-based).
    pub fn piece_barrier(&self, i: usize) -> AffineBarrier<T> {
        AffineBarrier::constant(vec![T::zero(), -T::one(), T::zero()], self.pieces[i].1)
    }

    /// Id of piece `i` under the family `id`: `<id>_<i+1>`.
    pub fn piece_id(id: &str, i: usize) -> String {
        format!("{id}_{}", i + 1)
    }

    pub fn predicates(&self, id: &str) -> Vec<TimedPredicate<T>> {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, (iv, _))| TimedPredicate {
                interval: *iv,
                predicate: PredicateRef::new(Self::piece_id(id, i)),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{finite_diff_check, Barrier, FiniteDiffOutcome};

    #[test]
    fn spacing_values() {
        let lead = Arc::new(LeadProfile::constant_speed(20.0));
        let h = SpacingBarrier::new(VehicleParams::default(), lead);
        assert_eq!(h.value(0.0, &[0.0, 20.0, 50.0]), 25.0);
        assert_eq!(h.value(0.0, &[0.0, 20.0, 25.0]), 0.0);
    }

    #[test]
    fn spacing_gradient_matches_differences() {
        let lead = Arc::new(LeadProfile::new(18.0, 0.7, vec![(20.0, -1.5)]).unwrap());
        let b = Barrier::new("h1", SpacingBarrier::new(VehicleParams::default(), lead));
        match finite_diff_check(&b, 7.3, &[12.0, 17.5, 80.0], 1e-6).unwrap() {
            FiniteDiffOutcome::Checked { max_rel_error } => assert!(max_rel_error < 1e-5),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            finite_diff_check(&b, 20.0, &[12.0, 17.5, 80.0], 1e-6).unwrap(),
            FiniteDiffOutcome::NonSmooth
        );
    }

    #[test]
    fn speed_limit_jumps() {
        let s = SpeedLimitSchedule::cyclic(&[30.0, 25.0, 10.0], 50.0, 150.0).unwrap();
        let b = Barrier::new("hv", s.barrier());
        assert_eq!(b.value(60.0, &[0.0, 20.0, 0.0]), 5.0);
        assert_eq!(b.value(100.0, &[0.0, 20.0, 0.0]) - b.value_left(100.0, &[0.0, 20.0, 0.0]), -15.0);
        assert_eq!(b.value_left(50.0, &[0.0, 20.0, 0.0]), 10.0);
        assert_eq!(b.value(50.0, &[0.0, 20.0, 0.0]), 5.0);
        assert_eq!(
            finite_diff_check(&b, 100.0, &[0.0, 20.0, 0.0], 1e-6).unwrap(),
            FiniteDiffOutcome::NonSmooth
        );
    }

    #[test]
    fn overlapping_limits_rejected() {
        let iv = |a, b| TimeInterval::new(a, b).unwrap();
        assert!(matches!(
            SpeedLimitSchedule::new(vec![(iv(0.0, 60.0), 30.0), (iv(50.0, 100.0), 25.0)]),
            Err(VehicleError::OverlappingLimits(..))
        ));
        assert!(matches!(
            SpeedLimitSchedule::new(vec![(iv(0.0, 40.0), 30.0), (iv(50.0, 100.0), 25.0)]),
            Err(VehicleError::LimitGap(..))
        ));
    }
}
