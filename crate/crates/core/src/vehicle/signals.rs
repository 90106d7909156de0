use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{VehicleError, VehicleParams};
use crate::barrier::{AffineBarrier, BarrierFn};
use crate::contract::{RegionPlan, RegionStitching};
use crate::sim::StateBox;
use crate::stl::{PredicateRef, TimeInterval, TimedPredicate};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Green,
    Yellow,
    Red,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Green => "green",
            Phase::Yellow => "yellow",
            Phase::Red => "red",
        })
    }
}

/// Instants at which a signal turns green, yellow and red in one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalCycle<T> {
    pub green: T,
    pub yellow: T,
    pub red: T,
}

/// A signal is red before its first green and green again for good from
/// `final_green`. Without cycles it is always green.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    pub position: T,
    pub cycles: Vec<SignalCycle<T>>,
    pub final_green: T,
}

impl<T: Scalar> Signal<T> {
    fn phase_with(&self, t: T, left: bool) -> Phase {
        let reached = |s: T| if left { s < t } else { s <= t };
        let Some(first) = self.cycles.first() else {
            return Phase::Green;
        };
        if !reached(first.green) {
            return Phase::Red;
        }
        let j = self.cycles.partition_point(|c| reached(c.green)) - 1;
        let c = &self.cycles[j];
        if !reached(c.yellow) {
            Phase::Green
        } else if !reached(c.red) {
            Phase::Yellow
        } else if j + 1 == self.cycles.len() && reached(self.final_green) {
            Phase::Green
        } else {
            Phase::Red
        }
    }

    pub fn phase(&self, t: T) -> Phase {
        self.phase_with(t, false)
    }

    pub fn phase_left(&self, t: T) -> Phase {
        self.phase_with(t, true)
    }

    pub fn switch_times(&self) -> Vec<T> {
        let mut out: Vec<T> = self
            .cycles
            .iter()
            .flat_map(|c| [c.green, c.yellow, c.red])
            .collect();
        if !self.cycles.is_empty() {
            out.push(self.final_green);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSchedule<T> {
    signals: Vec<Signal<T>>,
}

impl<T: Scalar> SignalSchedule<T> {
    pub fn new(signals: Vec<Signal<T>>) -> Result<Self, VehicleError> {
        let bad = |m: String| Err(VehicleError::InvalidSignal(m));
        for (i, s) in signals.iter().enumerate() {
            if !s.position.is_finite() {
                return bad(format!("signal {} has a non-finite position", i + 1));
            }
            if i > 0 && !(signals[i - 1].position < s.position) {
                return bad(format!("signal positions must increase (signal {})", i + 1));
            }
            for (j, c) in s.cycles.iter().enumerate() {
                if !(c.green < c.yellow && c.yellow < c.red) {
                    return bad(format!(
                        "signal {} cycle {}: need green < yellow < red",
                        i + 1,
                        j + 1
                    ));
                }
                let next = s.cycles.get(j + 1).map_or(s.final_green, |n| n.green);
                if !(c.red < next) {
                    return bad(format!(
                        "signal {} cycle {}: red must precede the next green",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        Ok(Self { signals })
    }

    pub fn signals(&self) -> &[Signal<T>] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Index of the signal ahead: `min {i : X_f ≤ P_i}`.
    pub fn active_index(&self, x_f: T) -> Option<usize> {
        let k = self.signals.partition_point(|s| s.position < x_f);
        (k < self.signals.len()).then_some(k)
    }
}

/// Seeded generator of unequally spaced signals with unequal cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGenerator {
    pub count: usize,
    pub spacing: (f64, f64),
    pub green: (f64, f64),
    pub yellow: (f64, f64),
    pub red: (f64, f64),
}

impl Default for SignalGenerator {
    fn default() -> Self {
        Self {
            count: 10,
            spacing: (300.0, 800.0),
            green: (25.0, 45.0),
            yellow: (4.0, 6.0),
            red: (20.0, 35.0),
        }
    }
}

impl SignalGenerator {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, (lo, hi)) in [
            ("spacing", self.spacing),
            ("green", self.green),
            ("yellow", self.yellow),
            ("red", self.red),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                out.push(format!("signals.{name} range must satisfy 0 < min <= max, got [{lo}, {hi}]"));
            }
        }
        out
    }

    pub fn generate<T: Scalar>(&self, seed: u64, horizon: T) -> Result<SignalSchedule<T>, VehicleError> {
        if let Some(v) = self.violations().into_iter().next() {
            return Err(VehicleError::InvalidSignal(v));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let horizon = horizon.as_f64();
        let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.gen_range(lo..hi) };
        let mut position = 0.0;
        let mut signals = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            position += draw(self.spacing);
            let (g, y, r) = (draw(self.green), draw(self.yellow), draw(self.red));
            let mut start = draw((0.0, g + y + r));
            let mut cycles = Vec::new();
            let mut final_green = start;
            while start <= horizon {
                let c = SignalCycle {
                    green: T::lit(start),
                    yellow: T::lit(start + g),
                    red: T::lit(start + g + y),
                };
                cycles.push(c);
                start += g + y + r;
                final_green = start;
            }
            signals.push(Signal {
                position: T::lit(position),
                cycles,
                final_green: T::lit(final_green),
            });
        }
        SignalSchedule::new(signals)
    }
}

/// `h_pos`: stitched from `h_r,k = P_k - X_f - β V_f - S0` while signal `k`
/// is red and `h_r̄,k = P_{k+1} - X_f - β V_f - S0` otherwise, where `k`
/// is the first signal with `X_f ≤ P_k`. Vacuous (`+∞`) past the last
/// signal and for the non-red phase of the last signal.
#[derive(Debug, Clone)]
pub struct SignalBarrier<T> {
    id: String,
    schedule: Arc<SignalSchedule<T>>,
    beta: T,
    s0: T,
}

impl<T: Scalar> SignalBarrier<T> {
    pub fn new(id: impl Into<String>, schedule: Arc<SignalSchedule<T>>, p: &VehicleParams<T>) -> Self {
        Self {
            id: id.into(),
            schedule,
            beta: p.signal_headway,
            s0: p.standstill_gap,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn schedule(&self) -> &SignalSchedule<T> {
        &self.schedule
    }

    pub fn red_id(&self, k: usize) -> String {
        format!("{}.r{}", self.id, k + 1)
    }

    pub fn clear_id(&self, k: usize) -> String {
        format!("{}.rbar{}", self.id, k + 1)
    }

    fn stop_line(&self, position: T) -> AffineBarrier<T> {
        AffineBarrier::constant(vec![-T::one(), -self.beta, T::zero()], position - self.s0)
    }

    /// Component barriers with their ids: `h_r,k` for every signal and
    /// `h_r̄,k` for all but the last.
    pub fn components(&self) -> Vec<(String, AffineBarrier<T>)> {
        let sig = self.schedule.signals();
        let mut out = Vec::new();
        for k in 0..sig.len() {
            out.push((self.red_id(k), self.stop_line(sig[k].position)));
            if k + 1 < sig.len() {
                out.push((self.clear_id(k), self.stop_line(sig[k + 1].position)));
            }
        }
        out
    }

    fn target(&self, t: T, x: &[T], left: bool) -> Option<T> {
        let sig = self.schedule.signals();
        let k = self.schedule.active_index(x[0])?;
        let phase = if left {
            sig[k].phase_left(t)
        } else {
            sig[k].phase(t)
        };
        if phase == Phase::Red {
            Some(sig[k].position)
        } else {
            sig.get(k + 1).map(|s| s.position)
        }
    }

    fn eval(&self, t: T, x: &[T], left: bool) -> T {
        match self.target(t, x, left) {
            Some(p) => p - x[0] - self.beta * x[1] - self.s0,
            None => T::infinity(),
        }
    }
}

impl<T: Scalar> BarrierFn<T> for SignalBarrier<T> {
    fn value(&self, t: T, x: &[T]) -> T {
        self.eval(t, x, false)
    }

    fn value_left(&self, t: T, x: &[T]) -> T {
        self.eval(t, x, true)
    }

    fn dh_dt(&self, _t: T, _x: &[T]) -> T {
        T::zero()
    }

    fn grad_x(&self, t: T, x: &[T]) -> Vec<T> {
        match self.target(t, x, false) {
            Some(_) => vec![-T::one(), -self.beta, T::zero()],
            None => vec![T::zero(); 3],
        }
    }

    fn is_smooth_at(&self, t: T, x: &[T], radius: T) -> bool {
        let sig = self.schedule.signals();
        if sig.iter().any(|s| (s.position - x[0]).abs() <= radius) {
            return false;
        }
        match self.schedule.active_index(x[0]) {
            Some(k) => !sig[k].switch_times().iter().any(|s| (*s - t).abs() <= radius),
            None => true,
        }
    }
}

impl<T: Scalar> RegionStitching<T> for SignalBarrier<T> {
    fn region_count(&self) -> usize {
        self.schedule.len()
    }

    fn region_of(&self, x: &[T]) -> Option<usize> {
        self.schedule.active_index(x[0])
    }

    fn region_domain(&self, k: usize, domain: &StateBox<T>) -> StateBox<T> {
        let sig = self.schedule.signals();
        let lo = if k == 0 {
            T::neg_infinity()
        } else {
            sig[k - 1].position
        };
        domain.restricted(0, lo, sig[k].position)
    }

    /// `h_r̄` on `[g, r)`, `h_r` on `[r, next g)`, with the finite-time
    /// condition for `h_r` engaged at the yellow onset.
    fn region_plan(&self, k: usize, horizon: T) -> RegionPlan<T> {
        let s = &self.schedule.signals()[k];
        let last = k + 1 == self.schedule.len();
        let mut predicates = Vec::new();
        let mut engage = Vec::new();
        let mut push = |a: T, b: T, id: String| {
            let (a, b) = (a.max(T::zero()), b.min(horizon));
            if let Ok(interval) = TimeInterval::new(a, b) {
                predicates.push(TimedPredicate {
                    interval,
                    predicate: PredicateRef::new(id),
                });
            }
        };
        match s.cycles.first() {
            None => {
                if !last {
                    push(T::zero(), horizon, self.clear_id(k));
                }
            }
            Some(first) => {
                push(T::zero(), first.green, self.red_id(k));
                for (j, c) in s.cycles.iter().enumerate() {
                    let next = s.cycles.get(j + 1).map_or(s.final_green, |n| n.green);
                    if !last {
                        push(c.green, c.red, self.clear_id(k));
                    }
                    push(c.red, next, self.red_id(k));
                    engage.push((c.red, c.yellow));
                }
                if !last {
                    push(s.final_green, horizon, self.clear_id(k));
                }
            }
        }
        RegionPlan { predicates, engage }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cycle(position: f64) -> Signal<f64> {
        Signal {
            position,
            cycles: vec![SignalCycle {
                green: 0.0,
                yellow: 30.0,
                red: 35.0,
            }],
            final_green: 60.0,
        }
    }

    fn barrier() -> SignalBarrier<f64> {
        let sched = SignalSchedule::new(vec![one_cycle(200.0), one_cycle(400.0)]).unwrap();
        SignalBarrier::new("hpos", Arc::new(sched), &VehicleParams::default())
    }

    #[test]
    fn phases() {
        let s = one_cycle(0.0);
        assert_eq!(s.phase(10.0), Phase::Green);
        assert_eq!(s.phase(30.0), Phase::Yellow);
        assert_eq!(s.phase_left(30.0), Phase::Green);
        assert_eq!(s.phase(35.0), Phase::Red);
        assert_eq!(s.phase(60.0), Phase::Green);
        assert_eq!(s.phase_left(60.0), Phase::Red);
    }

    #[test]
    fn red_and_clear_values() {
        let b = barrier();
        assert_eq!(b.value(40.0, &[100.0, 10.0, 0.0]), 75.0);
        assert_eq!(b.value(10.0, &[100.0, 10.0, 0.0]), 275.0);
        assert_eq!(b.value(32.0, &[100.0, 10.0, 0.0]), 275.0);
    }

    #[test]
    fn handoff_past_a_signal() {
        let b = barrier();
        // green: crossing P_1 keeps the clear barrier continuous up to the
        // change of target
        let before = b.value(10.0, &[200.0, 10.0, 0.0]);
        let after = b.value(10.0, &[200.0 + 1e-9, 10.0, 0.0]);
        assert_eq!(before, 400.0 - 200.0 - 20.0 - 5.0);
        assert!(after.is_infinite());
        // red on signal 2 matches the clear barrier of signal 1
        let x = [250.0, 5.0, 0.0];
        assert_eq!(b.value(40.0, &x), 400.0 - 250.0 - 10.0 - 5.0);
        assert!(b.value(0.0, &[500.0, 0.0, 0.0]).is_infinite());
    }

    #[test]
    fn region_plan_tiles_phases() {
        let b = barrier();
        let plan = b.region_plan(0, 100.0);
        let ids: Vec<String> = plan.predicates.iter().map(|p| p.predicate.barrier_id.clone()).collect();
        assert_eq!(ids, ["hpos.rbar1", "hpos.r1", "hpos.rbar1"]);
        assert_eq!(plan.engage, vec![(35.0, 30.0)]);
        let last = b.region_plan(1, 100.0);
        assert_eq!(last.predicates.len(), 1);
        assert_eq!(last.predicates[0].interval, TimeInterval::new(35.0, 60.0).unwrap());
    }

    #[test]
    fn generator_is_deterministic() {
        let g = SignalGenerator::default();
        let a: SignalSchedule<f64> = g.generate(7, 500.0).unwrap();
        let b: SignalSchedule<f64> = g.generate(7, 500.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        let gaps: Vec<f64> = a.signals().windows(2).map(|w| w[1].position - w[0].position).collect();
        assert!(gaps.iter().all(|d| (300.0..800.0).contains(d)));
        assert!(gaps.windows(2).any(|w| w[0] != w[1]));
    }
}
