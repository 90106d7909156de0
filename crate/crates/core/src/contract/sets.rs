use std::fmt;

use super::ContractError;
use crate::barrier::{AffineForm, Barrier};
use crate::sim::StateBox;
use crate::Scalar;

pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    /// Vertex enumeration of box ∩ halfspaces.
    Exact,
    /// Uniform grid with this many points per dimension.
    Sampled(usize),
}

impl fmt::Display for CheckMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckMethod::Exact => write!(f, "exact"),
            CheckMethod::Sampled(n) => write!(f, "sampled({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetVerdict<T> {
    pub holds: bool,
    pub method: CheckMethod,
    /// Point of the first set where the second barrier is most negative.
    pub counterexample: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionVerdict<T> {
    pub witness: Option<Vec<T>>,
    pub method: CheckMethod,
}

/// `C_prev(t⁻) ⊆ C_next(t)` within `domain`.
pub fn check_subset<T: Scalar>(
    prev: &Barrier<T>,
    next: &Barrier<T>,
    t: T,
    domain: &StateBox<T>,
) -> Result<SubsetVerdict<T>, ContractError> {
    subset_with(Some(prev), Some(next), t, domain, DEFAULT_GRID_POINTS)
}

/// A point of `C_prev(t⁻) ∩ C_next(t) ∩ domain`, if any.
pub fn check_intersection<T: Scalar>(
    prev: &Barrier<T>,
    next: &Barrier<T>,
    t: T,
    domain: &StateBox<T>,
) -> Result<IntersectionVerdict<T>, ContractError> {
    intersection_with(Some(prev), Some(next), t, domain, DEFAULT_GRID_POINTS)
}

pub(crate) fn tol<T: Scalar>(scale: T) -> T {
    T::epsilon() * T::lit(1e4) * (T::one() + scale.abs())
}

fn box_scale<T: Scalar>(domain: &StateBox<T>) -> T {
    domain
        .lower()
        .iter()
        .chain(domain.upper())
        .fold(T::zero(), |m, v| m.max(v.abs()))
}

fn form_scale<T: Scalar>(f: &AffineForm<T>, xs: T) -> T {
    f.offset.abs() + f.weights.iter().fold(T::zero(), |a, w| a + w.abs()) * xs
}

fn check_domain<T: Scalar>(domain: &StateBox<T>) -> Result<(), ContractError> {
    if domain.dim() == 0
        || domain.is_degenerate()
        || domain.lower().iter().chain(domain.upper()).any(|v| !v.is_finite())
    {
        return Err(ContractError::DegenerateDomain);
    }
    Ok(())
}

fn solve_square<T: Scalar>(mut a: Vec<Vec<T>>, mut r: Vec<T>) -> Option<Vec<T>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() <= T::epsilon() * T::lit(64.0) {
            return None;
        }
        a.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[row][c] -= f * v;
            }
            let rc = r[col];
            r[row] -= f * rc;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail = (row + 1..n).fold(T::zero(), |s, c| s + a[row][c] * x[c]);
        x[row] = (r[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Vertices of `domain ∩ {f(x) ≥ 0 ∀ f}`. Empty when the set is empty.
pub(crate) fn vertices<T: Scalar>(domain: &StateBox<T>, forms: &[AffineForm<T>]) -> Vec<Vec<T>> {
    let n = domain.dim();
    let xs = box_scale(domain);
    let mut rows: Vec<AffineForm<T>> = Vec::new();
    for f in forms {
        if f.weights.iter().all(|w| *w == T::zero()) {
            if f.offset < -tol(f.offset) {
                return Vec::new();
            }
            continue;
        }
        rows.push(f.clone());
    }
    for i in 0..n {
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        rows.push(AffineForm {
            weights: e.clone(),
            offset: -domain.lower()[i],
        });
        e[i] = -T::one();
        rows.push(AffineForm {
            weights: e,
            offset: domain.upper()[i],
        });
    }
    let feasible = |x: &[T]| rows.iter().all(|r| r.eval(x) >= -tol(form_scale(r, xs)));

    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| rows[i].weights.clone()).collect();
        let r = idx.iter().map(|&i| -rows[i].offset).collect();
        if let Some(x) = solve_square(a, r) {
            if feasible(&x) {
                out.push(x);
            }
        }
        // next n-combination of rows
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < rows.len() - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub(crate) struct Grid<'a, T> {
    domain: &'a StateBox<T>,
    points: usize,
    idx: Vec<usize>,
    done: bool,
}

impl<'a, T: Scalar> Grid<'a, T> {
    pub(crate) fn new(domain: &'a StateBox<T>, points: usize) -> Self {
        Self {
            domain,
            points: points.max(2),
            idx: vec![0; domain.dim()],
            done: domain.dim() == 0,
        }
    }
}

impl<T: Scalar> Iterator for Grid<'_, T> {
    type Item = Vec<T>;

    fn next(&mut self) -> Option<Vec<T>> {
        if self.done {
            return None;
        }
        let last = T::from_usize(self.points - 1).unwrap_or_else(T::one);
        let x = self
            .idx
            .iter()
            .enumerate()
            .map(|(d, &i)| {
                let (l, u) = (self.domain.lower()[d], self.domain.upper()[d]);
                if i + 1 == self.points {
                    u
                } else {
                    l + (u - l) * T::from_usize(i).unwrap_or_else(T::zero) / last
                }
            })
            .collect();
        let mut d = 0;
        loop {
            if d == self.idx.len() {
                self.done = true;
                break;
            }
            self.idx[d] += 1;
            if self.idx[d] < self.points {
                break;
            }
            self.idx[d] = 0;
            d += 1;
        }
        Some(x)
    }
}

type AffinePair<T> = (Option<AffineForm<T>>, Option<AffineForm<T>>);

fn affine_pair<T: Scalar>(
    prev: Option<&Barrier<T>>,
    prev_left: bool,
    next: Option<&Barrier<T>>,
    t_prev: T,
    t_next: T,
) -> Option<AffinePair<T>> {
    let p = match prev {
        Some(b) => Some(b.affine_at(t_prev, prev_left)?),
        None => None,
    };
    let n = match next {
        Some(b) => Some(b.affine_at(t_next, false)?),
        None => None,
    };
    Some((p, n))
}

fn value_or_inf<T: Scalar>(b: Option<&Barrier<T>>, t: T, left: bool, x: &[T]) -> T {
    match b {
        Some(b) if left => b.value_left(t, x),
        Some(b) => b.value(t, x),
        None => T::infinity(),
    }
}

/// `None` barriers stand for the vacuous set (the whole domain).
pub(crate) fn subset_with<T: Scalar>(
    prev: Option<&Barrier<T>>,
    next: Option<&Barrier<T>>,
    t: T,
    domain: &StateBox<T>,
    grid_points: usize,
) -> Result<SubsetVerdict<T>, ContractError> {
    check_domain(domain)?;
    if let Some((pa, na)) = affine_pair(prev, true, next, t, t) {
        let Some(na) = na else {
            return Ok(SubsetVerdict {
                holds: true,
                method: CheckMethod::Exact,
                counterexample: None,
            });
        };
        let xs = box_scale(domain);
        let verts = vertices(domain, pa.as_slice());
        let worst = verts.into_iter().map(|v| (na.eval(&v), v)).min_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)
        });
        return Ok(match worst {
            Some((h, v)) if h < -tol(form_scale(&na, xs)) => SubsetVerdict {
                holds: false,
                method: CheckMethod::Exact,
                counterexample: Some(v),
            },
            _ => SubsetVerdict {
                holds: true,
                method: CheckMethod::Exact,
                counterexample: None,
            },
        });
    }
    let mut worst: Option<(T, Vec<T>)> = None;
    for x in Grid::new(domain, grid_points) {
        if value_or_inf(prev, t, true, &x) < T::zero() {
            continue;
        }
        let h = value_or_inf(next, t, false, &x);
        if h < T::zero() && worst.as_ref().is_none_or(|(w, _)| h < *w) {
            worst = Some((h, x));
        }
    }
    Ok(SubsetVerdict {
        holds: worst.is_none(),
        method: CheckMethod::Sampled(grid_points.max(2)),
        counterexample: worst.map(|(_, x)| x),
    })
}

pub(crate) fn intersection_with<T: Scalar>(
    prev: Option<&Barrier<T>>,
    next: Option<&Barrier<T>>,
    t: T,
    domain: &StateBox<T>,
    grid_points: usize,
) -> Result<IntersectionVerdict<T>, ContractError> {
    check_domain(domain)?;
    let score = |x: &[T]| value_or_inf(prev, t, true, x).min(value_or_inf(next, t, false, x));
    if let Some((pa, na)) = affine_pair(prev, true, next, t, t) {
        let forms: Vec<AffineForm<T>> = pa.into_iter().chain(na).collect();
        let witness = vertices(domain, &forms).into_iter().max_by(|a, b| {
            score(a).partial_cmp(&score(b)).unwrap_or(std::cmp::Ordering::Equal)
        });
        return Ok(IntersectionVerdict {
            witness,
            method: CheckMethod::Exact,
        });
    }
    let mut best: Option<(T, Vec<T>)> = None;
    for x in Grid::new(domain, grid_points) {
        let s = score(&x);
        if s >= T::zero() && best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, x));
        }
    }
    Ok(IntersectionVerdict {
        witness: best.map(|(_, x)| x),
        method: CheckMethod::Sampled(grid_points.max(2)),
    })
}

/// `min h_next(t, x)` over `C_prev(t) ∩ domain`; `None` when that set is empty.
pub(crate) fn worst_margin<T: Scalar>(
    prev: Option<&Barrier<T>>,
    next: &Barrier<T>,
    t: T,
    domain: &StateBox<T>,
    grid_points: usize,
) -> Result<Option<T>, ContractError> {
    check_domain(domain)?;
    if let Some((pa, Some(na))) = affine_pair(prev, false, Some(next), t, t) {
        return Ok(vertices(domain, pa.as_slice())
            .into_iter()
            .map(|v| na.eval(&v))
            .reduce(T::min));
    }
    Ok(Grid::new(domain, grid_points)
        .filter(|x| value_or_inf(prev, t, false, x) >= T::zero())
        .map(|x| next.value(t, &x))
        .reduce(T::min))
}
