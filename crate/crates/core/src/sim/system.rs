use super::SimError;
use crate::Scalar;

/// Axis-aligned box `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> StateBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self, SimError> {
        if lower.len() != upper.len() {
            return Err(SimError::Dimension(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || l.is_nan() || u.is_nan()) {
            return Err(SimError::InvalidParameter("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }

    /// True when some side has zero width.
    pub fn is_degenerate(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u))
    }

    /// Copy with dimension `axis` narrowed to `[lo, hi] ∩ [lower, upper]`.
    pub fn restricted(&self, axis: usize, lo: T, hi: T) -> Self {
        let mut out = self.clone();
        out.lower[axis] = out.lower[axis].max(lo);
        out.upper[axis] = out.upper[axis].min(hi);
        if out.upper[axis] < out.lower[axis] {
            out.upper[axis] = out.lower[axis];
        }
        out
    }
}

/// `ẋ = f(t, x) + g(t, x) u`. The drift may depend on time through
/// exogenous signals.
pub trait ControlSystem<T: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn drift(&self, t: T, x: &[T]) -> Vec<T>;

    /// `n × m` input map, row per state component.
    fn input_map(&self, t: T, x: &[T]) -> Vec<Vec<T>>;

    fn domain(&self) -> &StateBox<T>;

    /// Attempts to bring a state that left the domain back to a physically
    /// meaningful point. Returns a description of the correction.
    fn recover(&self, _x: &mut [T]) -> Option<String> {
        None
    }
}

/// `ẋ = A x + B u`.
#[derive(Debug, Clone)]
pub struct LinearSystem<T> {
    a: Vec<Vec<T>>,
    b: Vec<Vec<T>>,
    domain: StateBox<T>,
}

impl<T: Scalar> LinearSystem<T> {
    pub fn new(a: Vec<Vec<T>>, b: Vec<Vec<T>>, domain: StateBox<T>) -> Result<Self, SimError> {
        let n = a.len();
        let m = b.first().map_or(0, Vec::len);
        if a.iter().any(|r| r.len() != n) || b.len() != n || b.iter().any(|r| r.len() != m) {
            return Err(SimError::Dimension("A must be n×n and B n×m".into()));
        }
        if domain.dim() != n {
            return Err(SimError::Dimension(format!(
                "domain has dimension {}, state has {n}",
                domain.dim()
            )));
        }
        Ok(Self { a, b, domain })
    }
}

impl<T: Scalar> ControlSystem<T> for LinearSystem<T> {
    fn state_dim(&self) -> usize {
        self.a.len()
    }

    fn input_dim(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    fn drift(&self, _t: T, x: &[T]) -> Vec<T> {
        self.a.iter().map(|row| crate::scalar::dot(row, x)).collect()
    }

    fn input_map(&self, _t: T, _x: &[T]) -> Vec<Vec<T>> {
        self.b.clone()
    }

    fn domain(&self) -> &StateBox<T> {
        &self.domain
    }
}
