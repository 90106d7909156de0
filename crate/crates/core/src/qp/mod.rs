//! Minimal-deviation projection of a nominal input onto the safe input set,
//! and the PID nominal controller.

mod pid;

use thiserror::Error;

use crate::barrier::HalfspaceConstraint;
use crate::Field;

pub use pid::PidState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QpError {
    #[error("safe input set is empty")]
    Infeasible,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input box: {0}")]
    InvalidBox(String),
}

/// Admissible inputs `lower ≤ u ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBox<F> {
    lower: Vec<F>,
    upper: Vec<F>,
}

impl<F: Field> InputBox<F> {
    pub fn new(lower: Vec<F>, upper: Vec<F>) -> Result<Self, QpError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(QpError::InvalidBox(format!(
                "bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite_value()) {
            return Err(QpError::InvalidBox("bounds must be finite".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(QpError::InvalidBox("lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[F] {
        &self.lower
    }

    pub fn upper(&self) -> &[F] {
        &self.upper
    }

    pub fn contains(&self, u: &[F]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, h))| l <= v && v <= h)
    }
}

#[derive(Clone)]
struct Row<F> {
    a: Vec<F>,
    b: F,
}

fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn satisfied<F: Field>(rows: &[Row<F>], u: &[F]) -> bool {
    rows.iter().all(|r| dot(&r.a, u) <= r.b.clone() + F::slack(&r.b))
}

fn min_f<F: Field>(a: F, b: F) -> F {
    if b < a {
        b
    } else {
        a
    }
}

fn max_f<F: Field>(a: F, b: F) -> F {
    if b > a {
        b
    } else {
        a
    }
}

/// Solves `G λ = r` by Gaussian elimination with partial pivoting.
fn solve_dense<F: Field>(mut g: Vec<Vec<F>>, mut r: Vec<F>) -> Option<Vec<F>> {
    let k = r.len();
    let scale = g
        .iter()
        .flatten()
        .fold(F::zero(), |acc, v| max_f(acc, v.magnitude()));
    let floor = F::pivot_floor() * (F::one() + scale);
    for col in 0..k {
        let piv = (col..k).fold(col, |best, row| {
            if g[row][col].magnitude() > g[best][col].magnitude() {
                row
            } else {
                best
            }
        });
        if !(g[piv][col].magnitude() > floor) {
            return None;
        }
        g.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..k {
            let f = g[row][col].clone() / g[col][col].clone();
            for c in col..k {
                let v = g[col][c].clone();
                g[row][c] = g[row][c].clone() - f.clone() * v;
            }
            let rc = r[col].clone();
            r[row] = r[row].clone() - f * rc;
        }
    }
    let mut x = vec![F::zero(); k];
    for row in (0..k).rev() {
        let tail = (row + 1..k).fold(F::zero(), |acc, c| acc + g[row][c].clone() * x[c].clone());
        x[row] = (r[row].clone() - tail) / g[row][row].clone();
    }
    Some(x)
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        combinations(n, k, i + 1, cur, f);
        cur.pop();
    }
}

/// Euclidean projection of `u_nom` onto `{u : a_k·u ≤ b_k} ∩ box`.
///
/// A feasible nominal input is returned unchanged. Scalar inputs use the
/// analytic clamp; larger inputs enumerate active sets of at most `m`
/// constraints (including box faces) and keep the closest feasible
/// candidate.
pub fn solve_qp<F: Field>(
    u_nom: &[F],
    constraints: &[HalfspaceConstraint<F>],
    bx: &InputBox<F>,
) -> Result<Vec<F>, QpError> {
    let m = bx.dim();
    if u_nom.len() != m {
        return Err(QpError::Dimension(format!(
            "nominal input has length {}, box has {m}",
            u_nom.len()
        )));
    }
    let mut rows: Vec<Row<F>> = Vec::new();
    for c in constraints {
        if c.a.len() != m {
            return Err(QpError::Dimension(format!(
                "constraint has {} coefficients, input has {m}",
                c.a.len()
            )));
        }
        if c.a.iter().all(|v| *v == F::zero()) {
            if c.b < F::zero() {
                return Err(QpError::Infeasible);
            }
            continue;
        }
        if !rows.iter().any(|r| r.a == c.a && r.b == c.b) {
            rows.push(Row {
                a: c.a.clone(),
                b: c.b.clone(),
            });
        }
    }

    if bx.contains(u_nom) && satisfied(&rows, u_nom) {
        return Ok(u_nom.to_vec());
    }

    if m == 1 {
        let mut lo = bx.lower[0].clone();
        let mut hi = bx.upper[0].clone();
        for r in &rows {
            let bound = r.b.clone() / r.a[0].clone();
            if r.a[0] > F::zero() {
                hi = min_f(hi, bound);
            } else {
                lo = max_f(lo, bound);
            }
        }
        if lo > hi.clone() + F::slack(&hi) {
            return Err(QpError::Infeasible);
        }
        let u = &u_nom[0];
        let v = if *u > hi {
            max_f(hi, bx.lower[0].clone())
        } else if *u < lo {
            min_f(lo, bx.upper[0].clone())
        } else {
            u.clone()
        };
        return Ok(vec![v]);
    }

    let mut all = rows.clone();
    for i in 0..m {
        let mut e = vec![F::zero(); m];
        e[i] = F::one();
        all.push(Row {
            a: e.clone(),
            b: bx.upper[i].clone(),
        });
        e[i] = -F::one();
        all.push(Row {
            a: e,
            b: -bx.lower[i].clone(),
        });
    }

    let mut best: Option<(F, Vec<F>)> = None;
    for k in 1..=m.min(all.len()) {
        combinations(all.len(), k, 0, &mut Vec::new(), &mut |idx| {
            let g: Vec<Vec<F>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| dot(&all[i].a, &all[j].a)).collect())
                .collect();
            let r: Vec<F> = idx
                .iter()
                .map(|&i| dot(&all[i].a, u_nom) - all[i].b.clone())
                .collect();
            let Some(lambda) = solve_dense(g, r) else {
                return;
            };
            let u: Vec<F> = (0..m)
                .map(|c| {
                    idx.iter().zip(&lambda).fold(u_nom[c].clone(), |acc, (&i, l)| {
                        acc - all[i].a[c].clone() * l.clone()
                    })
                })
                .collect();
            if !satisfied(&all, &u) {
                return;
            }
            let d = u
                .iter()
                .zip(u_nom)
                .fold(F::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()) * (a.clone() - b.clone()));
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, u));
            }
        });
    }
    let (_, mut u) = best.ok_or(QpError::Infeasible)?;
    for (v, (l, h)) in u.iter_mut().zip(bx.lower.iter().zip(&bx.upper)) {
        *v = min_f(max_f(v.clone(), l.clone()), h.clone());
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn bx(l: f64, u: f64) -> InputBox<f64> {
        InputBox::new(vec![l], vec![u]).unwrap()
    }

    fn hs(a: f64, b: f64) -> HalfspaceConstraint<f64> {
        HalfspaceConstraint::new(vec![a], b)
    }

    #[test]
    fn scalar_projection() {
        let b = bx(-6000.0, 6000.0);
        assert_eq!(solve_qp(&[500.0], &[hs(1.0, 300.0)], &b).unwrap(), vec![300.0]);
        assert_eq!(solve_qp(&[100.0], &[hs(1.0, 300.0)], &b).unwrap(), vec![100.0]);
        assert_eq!(solve_qp(&[0.0], &[hs(1.0, -7000.0)], &b), Err(QpError::Infeasible));
    }

    #[test]
    fn lower_bounds_from_negative_coefficients() {
        let b = bx(-10.0, 10.0);
        assert_eq!(solve_qp(&[0.0], &[hs(-1.0, -2.0)], &b).unwrap(), vec![2.0]);
        assert_eq!(solve_qp(&[20.0], &[], &b).unwrap(), vec![10.0]);
    }

    #[test]
    fn zero_row_marker_is_infeasible() {
        let b = bx(-1.0, 1.0);
        assert_eq!(solve_qp(&[0.0], &[hs(0.0, -1.0)], &b), Err(QpError::Infeasible));
        assert_eq!(solve_qp(&[0.5], &[hs(0.0, 1.0)], &b).unwrap(), vec![0.5]);
    }

    #[test]
    fn two_dimensional_corner() {
        let b = InputBox::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap();
        let c = [
            HalfspaceConstraint::new(vec![1.0, 0.0], 1.0),
            HalfspaceConstraint::new(vec![0.0, 1.0], 2.0),
        ];
        assert_eq!(solve_qp(&[5.0, 5.0], &c, &b).unwrap(), vec![1.0, 2.0]);
        let diag = [HalfspaceConstraint::new(vec![1.0, 1.0], 0.0)];
        let u: Vec<f64> = solve_qp(&[1.0, 1.0], &diag, &b).unwrap();
        assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12);
    }

    #[test]
    fn exact_rational_projection() {
        let r = |n: i64, d: i64| Rational64::new(n, d);
        let b = InputBox::new(vec![r(-10, 1), r(-10, 1)], vec![r(10, 1), r(10, 1)]).unwrap();
        let c = [HalfspaceConstraint {
            a: vec![r(1, 1), r(2, 1)],
            b: r(1, 1),
        }];
        let u = solve_qp(&[r(1, 1), r(1, 1)], &c, &b).unwrap();
        assert_eq!(u, vec![r(3, 5), r(1, 5)]);
    }

    #[test]
    fn duplicate_constraints_do_not_break_the_solver() {
        let b = InputBox::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
        let row = HalfspaceConstraint::new(vec![1.0, 0.0], 1.0);
        let u = solve_qp(&[3.0, 0.0], &[row.clone(), row], &b).unwrap();
        assert_eq!(u, vec![1.0, 0.0]);
    }

    #[test]
    fn box_validation() {
        assert!(InputBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(InputBox::new(vec![f64::NEG_INFINITY], vec![0.0]).is_err());
    }
}
