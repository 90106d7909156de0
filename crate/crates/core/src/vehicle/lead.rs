use super::VehicleError;
use crate::barrier::PiecewiseConstant;
use crate::Scalar;

/// Lead vehicle driven by a piecewise-constant acceleration; its speed is
/// held at zero instead of going negative.
#[derive(Debug, Clone)]
pub struct LeadProfile<T> {
    v0: T,
    accel: PiecewiseConstant<T>,
    /// `(start, speed at start, acceleration)` per piece.
    pieces: Vec<(T, T, T)>,
    kinks: Vec<T>,
}

impl<T: Scalar> LeadProfile<T> {
    /// `initial_accel` applies from t = 0; `switches` are `(time, accel)`.
    pub fn new(v0: T, initial_accel: T, switches: Vec<(T, T)>) -> Result<Self, VehicleError> {
        if !(v0 >= T::zero()) || !v0.is_finite() {
            return Err(VehicleError::InvalidParameter(format!(
                "lead.v0 must be nonnegative, got {v0}"
            )));
        }
        if switches.iter().any(|(t, _)| !(*t > T::zero())) {
            return Err(VehicleError::InvalidParameter(
                "lead acceleration switch times must be positive".into(),
            ));
        }
        let accel = PiecewiseConstant::new(initial_accel, switches.clone())
            .map_err(|e| VehicleError::InvalidParameter(format!("lead.accel: {e}")))?;
        let mut pieces = vec![(T::zero(), v0, initial_accel)];
        let mut kinks = Vec::new();
        let mut ends: Vec<T> = switches.iter().map(|s| s.0).collect();
        ends.push(T::infinity());
        for (k, end) in ends.iter().enumerate() {
            let (s, v, a) = pieces[k];
            if a < T::zero() && v > T::zero() {
                let stop = s + v / -a;
                if stop < *end {
                    kinks.push(stop);
                }
            }
            if k < switches.len() {
                let v_end = (v + a * (*end - s)).max(T::zero());
                pieces.push((*end, v_end, switches[k].1));
                kinks.push(*end);
            }
        }
        Ok(Self {
            v0,
            accel,
            pieces,
            kinks,
        })
    }

    pub fn constant_speed(v0: T) -> Self {
        Self::new(v0, T::zero(), Vec::new()).expect("valid constant profile")
    }

    pub fn initial_speed(&self) -> T {
        self.v0
    }

    fn piece(&self, t: T) -> (T, T, T) {
        let k = self.pieces.partition_point(|p| p.0 <= t).max(1);
        self.pieces[k - 1]
    }

    pub fn speed(&self, t: T) -> T {
        let (s, v, a) = self.piece(t);
        (v + a * (t - s)).max(T::zero())
    }

    /// Acceleration actually realized: zero while stopped.
    pub fn accel(&self, t: T) -> T {
        let a = self.accel.at(t);
        if a < T::zero() && self.speed(t) <= T::zero() {
            T::zero()
        } else {
            a
        }
    }

    /// Acceleration switches and stopping instants.
    pub fn kinks(&self) -> &[T] {
        &self.kinks
    }

    pub fn near_kink(&self, t: T, radius: T) -> bool {
        self.kinks.iter().any(|k| (*k - t).abs() <= radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_integrates_and_clamps() {
        let p = LeadProfile::new(20.0, 0.0, vec![(10.0, -2.0), (30.0, 1.0)]).unwrap();
        assert_eq!(p.speed(5.0), 20.0);
        assert_eq!(p.speed(15.0), 10.0);
        assert_eq!(p.speed(25.0), 0.0);
        assert_eq!(p.accel(25.0), 0.0);
        assert_eq!(p.accel(15.0), -2.0);
        assert_eq!(p.speed(32.0), 2.0);
        assert_eq!(p.kinks(), &[10.0, 20.0, 30.0]);
    }

    #[test]
    fn rejects_negative_speed() {
        assert!(LeadProfile::new(-1.0, 0.0, vec![]).is_err());
    }
}
