use crate::Scalar;

/// PID on the spacing error with a clamped integral.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub integral: T,
    /// Anti-windup bound on `|integral|`.
    pub clamp: T,
}

impl<T: Scalar> Default for PidState<T> {
    fn default() -> Self {
        Self::new(T::lit(0.5), T::lit(0.1), T::lit(0.01), T::lit(100.0))
    }
}

impl<T: Scalar> PidState<T> {
    pub fn new(k1: T, k2: T, k3: T, clamp: T) -> Self {
        Self {
            k1,
            k2,
            k3,
            integral: T::zero(),
            clamp: clamp.abs(),
        }
    }

    /// `m (k1 V_r + k2 e + k3 I) + F_r` after accumulating `e dt` into `I`.
    pub fn step(&mut self, error: T, v_rel: T, dt: T, mass: T, friction: T) -> T {
        self.integral = (self.integral + error * dt).max(-self.clamp).min(self.clamp);
        mass * (self.k1 * v_rel + self.k2 * error + self.k3 * self.integral) + friction
    }

    pub fn reset(&mut self) {
        self.integral = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_pure_feedforward() {
        let mut p = PidState::<f64>::default();
        assert_eq!(p.step(0.0, 0.0, 0.01, 1650.0, 200.1), 200.1);
    }

    #[test]
    fn relative_velocity_term() {
        let mut p = PidState::<f64>::default();
        let u = p.step(0.0, 2.0, 0.01, 1650.0, 200.1);
        assert!((u - 1850.1).abs() < 1e-9);
    }

    #[test]
    fn integral_saturates() {
        let mut p = PidState::<f64>::default();
        for _ in 0..1000 {
            p.step(50.0, 0.0, 0.1, 1.0, 0.0);
        }
        assert_eq!(p.integral, 100.0);
        for _ in 0..1000 {
            p.step(-50.0, 0.0, 0.1, 1.0, 0.0);
        }
        assert_eq!(p.integral, -100.0);
    }
}
