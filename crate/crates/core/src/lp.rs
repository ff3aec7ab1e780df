//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c·x  s.t.  A x ≤ b,  C x = e` with `x` free. Variables are
//! split into positive and negative parts and Bland's rule is used for
//! pivoting, so the method terminates on degenerate problems. Intended for
//! the comparator and feasibility programs that appear in tests and
//! experiments, where `n` is at most a few hundred.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vector,
    pub value: f64,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, last column is the right-hand side
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.data[pr * w + pc];
        for j in 0..w {
            self.data[pr * w + j] *= inv;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for j in 0..w {
                    self.data[r * w + j] -= f * self.data[pr * w + j];
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland's-rule simplex on `cost`, restricted to `allowed` columns.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            // reduced costs
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for r in 0..self.rows {
                    rc -= cost[self.basis[r]] * self.at(r, j);
                }
                if rc < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, best)) => {
                            if ratio < best - 1e-14
                                || (ratio <= best + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, _)) = leave else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(pr, pc);
        }
        Err(Error::DidNotConverge {
            what: "simplex",
            iterations: MAX_PIVOTS,
            residual: f64::NAN,
        })
    }
}

/// Minimises `objective · x` subject to `a x ≤ b` and `c x = e`.
pub fn minimize(
    objective: &Vector,
    a: &Matrix,
    b: &Vector,
    c: &Matrix,
    e: &Vector,
) -> Result<LpSolution> {
    let n = objective.len();
    let m = a.nrows();
    let q = c.nrows();
    if a.ncols() != n || c.ncols() != n || b.len() != m || e.len() != q {
        return Err(Error::DimensionMismatch("linear program shapes".into()));
    }
    let rows = m + q;
    // columns: x+ (n), x- (n), slack (m), artificial (one per row needing it)
    let needs_art: Vec<bool> = (0..rows)
        .map(|r| if r < m { b[r] < 0.0 } else { true })
        .collect();
    let n_art = needs_art.iter().filter(|&&v| v).count();
    let art_start = 2 * n + m;
    let cols = art_start + n_art;
    let w = cols + 1;
    let mut data = vec![0.0; rows * w];
    let mut basis = vec![0usize; rows];
    let mut art = art_start;
    for r in 0..rows {
        let (coeffs, rhs): (Vec<f64>, f64) = if r < m {
            (a.row(r).iter().copied().collect(), b[r])
        } else {
            (c.row(r - m).iter().copied().collect(), e[r - m])
        };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            data[r * w + j] = sign * coeffs[j];
            data[r * w + n + j] = -sign * coeffs[j];
        }
        if r < m {
            data[r * w + 2 * n + r] = sign;
        }
        data[r * w + cols] = sign * rhs;
        if needs_art[r] {
            data[r * w + art] = 1.0;
            basis[r] = art;
            art += 1;
        } else {
            basis[r] = 2 * n + r;
        }
    }
    let mut tab = Tableau {
        rows,
        cols,
        data,
        basis,
    };

    if n_art > 0 {
        let mut cost1 = vec![0.0; cols];
        for v in cost1.iter_mut().skip(art_start) {
            *v = 1.0;
        }
        tab.optimize(&cost1, &|_| true)?;
        let infeas: f64 = (0..rows)
            .filter(|&r| tab.basis[r] >= art_start)
            .map(|r| tab.rhs(r))
            .sum();
        if infeas > FEAS_TOL * (1.0 + b.amax().max(e.amax())) {
            return Err(Error::LpInfeasible);
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] >= art_start {
                let pc = (0..art_start).find(|&j| tab.at(r, j).abs() > 1e-9);
                match pc {
                    Some(pc) => {
                        tab.pivot(r, pc);
                        r += 1;
                    }
                    None => {
                        let w = tab.cols + 1;
                        tab.data.drain(r * w..(r + 1) * w);
                        tab.basis.remove(r);
                        tab.rows -= 1;
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut cost2 = vec![0.0; cols];
    for j in 0..n {
        cost2[j] = objective[j];
        cost2[n + j] = -objective[j];
    }
    tab.optimize(&cost2, &|j| j < art_start)?;

    let mut x = Vector::zeros(n);
    for r in 0..tab.rows {
        let j = tab.basis[r];
        if j < n {
            x[j] += tab.rhs(r);
        } else if j < 2 * n {
            x[j - n] -= tab.rhs(r);
        }
    }
    let value = objective.dot(&x);
    Ok(LpSolution { x, value })
}

/// Maximises `objective · x`; convenience wrapper.
pub fn maximize(
    objective: &Vector,
    a: &Matrix,
    b: &Vector,
    c: &Matrix,
    e: &Vector,
) -> Result<LpSolution> {
    let neg = -objective;
    let mut sol = minimize(&neg, a, b, c, e)?;
    sol.value = -sol.value;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simplex3() -> (Matrix, Vector, Matrix, Vector) {
        (
            -Matrix::identity(3, 3),
            Vector::zeros(3),
            Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            Vector::from_vec(vec![1.0]),
        )
    }

    #[test]
    fn simplex_vertex_optimum() {
        let (a, b, c, e) = simplex3();
        let obj = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let sol = minimize(&obj, &a, &b, &c, &e).unwrap();
        assert_relative_eq!(sol.value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn free_variables_and_negative_rhs() {
        // x in [-3, -1]
        let a = Matrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = Vector::from_vec(vec![-1.0, 3.0]);
        let obj = Vector::from_vec(vec![1.0]);
        let sol = minimize(&obj, &a, &b, &Matrix::zeros(0, 1), &Vector::zeros(0)).unwrap();
        assert_relative_eq!(sol.x[0], -3.0, epsilon = 1e-12);
        let sol = maximize(&obj, &a, &b, &Matrix::zeros(0, 1), &Vector::zeros(0)).unwrap();
        assert_relative_eq!(sol.x[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        let a = Matrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = Vector::from_vec(vec![0.0, -1.0]); // x <= 0 and x >= 1
        let obj = Vector::from_vec(vec![1.0]);
        assert_eq!(
            minimize(&obj, &a, &b, &Matrix::zeros(0, 1), &Vector::zeros(0)).unwrap_err(),
            Error::LpInfeasible
        );
    }

    #[test]
    fn unbounded_detected() {
        let a = Matrix::from_row_slice(1, 1, &[-1.0]);
        let b = Vector::from_vec(vec![0.0]);
        let obj = Vector::from_vec(vec![-1.0]);
        assert_eq!(
            minimize(&obj, &a, &b, &Matrix::zeros(0, 1), &Vector::zeros(0)).unwrap_err(),
            Error::LpUnbounded
        );
    }

    #[test]
    fn redundant_equalities_tolerated() {
        let a = -Matrix::identity(2, 2);
        let b = Vector::zeros(2);
        let c = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let e = Vector::from_vec(vec![1.0, 2.0]);
        let obj = Vector::from_vec(vec![0.0, 1.0]);
        let sol = minimize(&obj, &a, &b, &c, &e).unwrap();
        assert_relative_eq!(sol.value, 0.0, epsilon = 1e-12);
    }
}
