//! Log-barrier calculus over polytopes `{x : A x ≤ b, C x = e}`.
//!
//! The barrier `R(x) = -Σ log(b_i - a_i·x)` is built from the inequality rows
//! only. Equality rows are handled by working in the affine subspace
//! `x₀ + range(W)`, where the columns of `W` are an orthonormal basis of
//! `null(C)`: every Newton system is solved in those reduced coordinates,
//! which is equivalent to factorising the full KKT system.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::lp;

/// Projected-gradient tolerance of the Newton solvers.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Equality residual tolerance.
pub const EQUALITY_TOL: f64 = 1e-10;
/// Iteration cap of the Newton solvers.
pub const MAX_NEWTON_ITERS: usize = 200;

/// A polytope `{x : A x ≤ b, C x = e}` with a nonempty relative interior and
/// linearly independent equality rows.
#[derive(Debug, Clone)]
pub struct Polytope {
    a: Matrix,
    b: Vector,
    c: Matrix,
    e: Vector,
    c_right_inverse: Matrix,
    interior_point: Vector,
}

impl Polytope {
    /// Builds the polytope, certifying a strictly interior point with a
    /// Phase-I linear program.
    pub fn new(a: Matrix, b: Vector, c: Matrix, e: Vector) -> Result<Self> {
        Self::check_shapes(&a, &b, &c, &e)?;
        let n = a.ncols();
        let m = a.nrows();
        linalg::null_space(&c, n)?;
        // max t  s.t.  A x + t·|a_i| ≤ b,  C x = e,  t ≤ 1
        let mut a1 = Matrix::zeros(m + 1, n + 1);
        let mut b1 = Vector::zeros(m + 1);
        for i in 0..m {
            let norm = a.row(i).norm().max(1e-300);
            for j in 0..n {
                a1[(i, j)] = a[(i, j)];
            }
            a1[(i, n)] = norm;
            b1[i] = b[i];
        }
        a1[(m, n)] = 1.0;
        b1[m] = 1.0;
        let mut c1 = Matrix::zeros(c.nrows(), n + 1);
        for i in 0..c.nrows() {
            for j in 0..n {
                c1[(i, j)] = c[(i, j)];
            }
        }
        let mut obj = Vector::zeros(n + 1);
        obj[n] = 1.0;
        let sol = match lp::maximize(&obj, &a1, &b1, &c1, &e) {
            Ok(s) => s,
            Err(Error::LpInfeasible) => return Err(Error::EmptyInterior),
            Err(err) => return Err(err),
        };
        if sol.value <= 1e-9 {
            return Err(Error::EmptyInterior);
        }
        let x0 = sol.x.rows(0, n).clone_owned();
        Self::with_interior_point(a, b, c, e, x0)
    }

    /// Builds the polytope from a caller-supplied strictly interior point.
    pub fn with_interior_point(
        a: Matrix,
        b: Vector,
        c: Matrix,
        e: Vector,
        interior_point: Vector,
    ) -> Result<Self> {
        Self::check_shapes(&a, &b, &c, &e)?;
        let n = a.ncols();
        if interior_point.len() != n {
            return Err(Error::DimensionMismatch("interior point length".into()));
        }
        linalg::null_space(&c, n)?;
        let c_right_inverse = linalg::right_inverse(&c).ok_or(Error::RankDeficient {
            rank: 0,
            rows: c.nrows(),
        })?;
        let poly = Polytope {
            a,
            b,
            c,
            e,
            c_right_inverse,
            interior_point,
        };
        let x0 = poly.interior_point.clone();
        poly.slacks(&x0)?;
        if poly.equality_residual(&x0) > 1e-8 {
            return Err(Error::InvalidArgument(
                "interior point violates the equality rows".into(),
            ));
        }
        Ok(poly)
    }

    fn check_shapes(a: &Matrix, b: &Vector, c: &Matrix, e: &Vector) -> Result<()> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch("A rows vs b".into()));
        }
        if c.nrows() != e.len() {
            return Err(Error::DimensionMismatch("C rows vs e".into()));
        }
        if c.ncols() != a.ncols() {
            return Err(Error::DimensionMismatch("A vs C columns".into()));
        }
        Ok(())
    }

    /// `[lo, hi]` on the real line.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(
            Matrix::from_row_slice(2, 1, &[-1.0, 1.0]),
            Vector::from_vec(vec![-lo, hi]),
            Matrix::zeros(0, 1),
            Vector::zeros(0),
        )
    }

    /// The probability simplex in `ℝⁿ`: `x ≥ 0`, `Σx = 1`.
    pub fn probability_simplex(n: usize) -> Result<Self> {
        Self::with_interior_point(
            -Matrix::identity(n, n),
            Vector::zeros(n),
            Matrix::from_element(1, n, 1.0),
            Vector::from_element(1, 1.0),
            Vector::from_element(n, 1.0 / n as f64),
        )
    }

    /// The simplex intersected with the box `x_i ≤ cap`.
    pub fn capped_simplex(n: usize, cap: f64) -> Result<Self> {
        if cap * n as f64 <= 1.0 || cap <= 0.0 {
            return Err(Error::InvalidArgument("cap too small for a simplex".into()));
        }
        let mut a = Matrix::zeros(2 * n, n);
        let mut b = Vector::zeros(2 * n);
        for i in 0..n {
            a[(i, i)] = -1.0;
            a[(n + i, i)] = 1.0;
            b[n + i] = cap;
        }
        Self::with_interior_point(
            a,
            b,
            Matrix::from_element(1, n, 1.0),
            Vector::from_element(1, 1.0),
            Vector::from_element(n, 1.0 / n as f64),
        )
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn n_inequalities(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_equalities(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn e(&self) -> &Vector {
        &self.e
    }

    pub fn interior_point(&self) -> &Vector {
        &self.interior_point
    }

    /// Slack vector `b - A x`; errors if any entry is not strictly positive.
    pub fn slacks(&self, x: &Vector) -> Result<Vector> {
        let s = self.raw_slacks(x);
        let (row, min) = s
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        if !(min > 0.0) {
            return Err(Error::NonInteriorPoint {
                row,
                min_slack: min,
            });
        }
        Ok(s)
    }

    pub fn raw_slacks(&self, x: &Vector) -> Vector {
        &self.b - &self.a * x
    }

    pub fn is_strictly_interior(&self, x: &Vector) -> bool {
        self.raw_slacks(x).iter().all(|&s| s > 0.0)
    }

    /// `max |C x - e|`.
    pub fn equality_residual(&self, x: &Vector) -> f64 {
        if self.c.nrows() == 0 {
            return 0.0;
        }
        linalg::max_abs(&(&self.c * x - &self.e))
    }

    /// Orthogonal projection of `x` onto `{C x = e}`.
    pub fn project_affine(&self, x: &Vector) -> Vector {
        if self.c.nrows() == 0 {
            return x.clone();
        }
        let r = &self.c * x - &self.e;
        x - &self.c_right_inverse * r
    }

    /// Feasibility with tolerance (boundary allowed).
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.raw_slacks(x).iter().all(|&s| s >= -tol) && self.equality_residual(x) <= tol
    }

    /// `min objective · x` over the polytope.
    pub fn minimize_linear(&self, objective: &Vector) -> Result<lp::LpSolution> {
        lp::minimize(objective, &self.a, &self.b, &self.c, &self.e)
    }

    /// Largest `‖x‖₁` over the polytope. Exact by sign enumeration for
    /// `n ≤ 12`; beyond that, coordinatewise maxima give an upper bound.
    pub fn max_l1_norm(&self) -> Result<f64> {
        let n = self.dim();
        if n <= 12 {
            let mut best = f64::NEG_INFINITY;
            for mask in 0u32..(1u32 << n) {
                let obj = Vector::from_fn(n, |i, _| if mask & (1 << i) != 0 { -1.0 } else { 1.0 });
                let sol = lp::maximize(&obj, &self.a, &self.b, &self.c, &self.e)?;
                best = best.max(sol.value);
            }
            Ok(best)
        } else {
            let mut total = 0.0;
            for i in 0..n {
                let mut obj = Vector::zeros(n);
                obj[i] = 1.0;
                let hi = lp::maximize(&obj, &self.a, &self.b, &self.c, &self.e)?.value;
                let lo = lp::minimize(&obj, &self.a, &self.b, &self.c, &self.e)?.value;
                total += hi.abs().max(lo.abs());
            }
            Ok(total)
        }
    }
}

/// Orthonormal basis of `null(C)`.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    w: Matrix,
}

impl SubspaceBasis {
    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.w.nrows()
    }

    /// `W Wᵀ`, the orthogonal projector onto `null(C)`.
    pub fn projector(&self) -> Matrix {
        &self.w * self.w.transpose()
    }
}

/// Orthonormal basis of the null space of `c` (which has `n` columns).
pub fn null_basis(c: &Matrix, n: usize) -> Result<SubspaceBasis> {
    Ok(SubspaceBasis {
        w: linalg::null_space(c, n)?,
    })
}

/// The restricted Hessian `H_W = Wᵀ∇²R(x)W` with its square root and
/// inverse square root.
#[derive(Debug, Clone)]
pub struct RestrictedHessian {
    pub h_w: Matrix,
    pub sqrt: Matrix,
    pub inv_sqrt: Matrix,
}

/// The log barrier over a polytope; `theta` is the barrier parameter, equal
/// to the number of inequality rows.
#[derive(Debug, Clone)]
pub struct BarrierSpec {
    polytope: Polytope,
    theta: f64,
}

impl BarrierSpec {
    pub fn new(polytope: Polytope) -> Self {
        let theta = polytope.n_inequalities() as f64;
        BarrierSpec { polytope, theta }
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn null_basis(&self) -> Result<SubspaceBasis> {
        null_basis(self.polytope.c(), self.polytope.dim())
    }

    /// `R(x) = -Σ log(b_i - a_i·x)`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        let s = self.polytope.slacks(x)?;
        Ok(-s.iter().map(|v| v.ln()).sum::<f64>())
    }

    /// `∇R(x) = Σ a_i / (b_i - a_i·x)`.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        let s = self.polytope.slacks(x)?;
        Ok(self.gradient_from_slacks(&s))
    }

    fn gradient_from_slacks(&self, s: &Vector) -> Vector {
        self.polytope.a.tr_mul(&s.map(|v| 1.0 / v))
    }

    /// `∇²R(x) = Σ a_i a_iᵀ / (b_i - a_i·x)²`.
    pub fn hessian(&self, x: &Vector) -> Result<Matrix> {
        let s = self.polytope.slacks(x)?;
        Ok(self.hessian_from_slacks(&s))
    }

    fn hessian_from_slacks(&self, s: &Vector) -> Matrix {
        let a = &self.polytope.a;
        let mut scaled = a.clone();
        for (i, si) in s.iter().enumerate() {
            let f = 1.0 / si;
            scaled.row_mut(i).scale_mut(f);
        }
        let mut h = scaled.tr_mul(&scaled);
        linalg::symmetrize(&mut h);
        h
    }

    /// `‖h‖_x = √(hᵀ∇²R(x)h)`.
    pub fn local_norm(&self, x: &Vector, h: &Vector) -> Result<f64> {
        let s = self.polytope.slacks(x)?;
        // hᵀ A ᵀ D² A h = Σ (a_i·h / s_i)²
        let ah = &self.polytope.a * h;
        Ok(ah
            .iter()
            .zip(s.iter())
            .map(|(v, si)| (v / si).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    /// `‖g‖*_x = √(gᵀ∇²R(x)⁻¹g)` over the full ambient space.
    pub fn dual_local_norm(&self, x: &Vector, g: &Vector) -> Result<f64> {
        let h = self.hessian(x)?;
        let chol = linalg::cholesky_regularized(&h).ok_or(Error::SingularHessian)?;
        let sol = chol.solve(g);
        Ok(g.dot(&sol).max(0.0).sqrt())
    }

    /// Dual of the local norm restricted to `null(C)`:
    /// `√(gᵀW(Wᵀ∇²R(x)W)⁻¹Wᵀg)`. Coincides with [`Self::dual_local_norm`]
    /// when there are no equality rows.
    pub fn restricted_dual_norm(
        &self,
        x: &Vector,
        basis: &SubspaceBasis,
        g: &Vector,
    ) -> Result<f64> {
        let h = self.hessian(x)?;
        let hw = basis.w.tr_mul(&(&h * &basis.w));
        let chol = linalg::cholesky_regularized(&hw).ok_or(Error::SingularRestrictedHessian {
            min_eig: linalg::min_eigenvalue(&hw),
        })?;
        let wg = basis.w.tr_mul(g);
        let sol = chol.solve(&wg);
        Ok(wg.dot(&sol).max(0.0).sqrt())
    }

    /// `B_R(y‖x) = R(y) - R(x) - ∇R(x)·(y - x)`.
    pub fn bregman(&self, y: &Vector, x: &Vector) -> Result<f64> {
        let ry = self.value(y)?;
        let sx = self.polytope.slacks(x)?;
        let rx = -sx.iter().map(|v| v.ln()).sum::<f64>();
        let gx = self.gradient_from_slacks(&sx);
        Ok(ry - rx - gx.dot(&(y - x)))
    }

    /// `H_W = Wᵀ∇²R(x)W` with its matrix square roots.
    pub fn restricted_hessian(
        &self,
        x: &Vector,
        basis: &SubspaceBasis,
    ) -> Result<RestrictedHessian> {
        let h = self.hessian(x)?;
        let mut h_w = basis.w.tr_mul(&(&h * &basis.w));
        linalg::symmetrize(&mut h_w);
        let reg = linalg::regularize(&h_w);
        let (sqrt, inv_sqrt, _) =
            linalg::sqrt_and_inv_sqrt(&reg).ok_or(Error::SingularRestrictedHessian {
                min_eig: linalg::min_eigenvalue(&reg),
            })?;
        Ok(RestrictedHessian {
            h_w,
            sqrt,
            inv_sqrt,
        })
    }

    /// Minimiser of `R` over the polytope, started from a strictly interior
    /// point on `{C x = e}`.
    pub fn analytic_center(&self, x0: &Vector) -> Result<Vector> {
        let basis = self.null_basis()?;
        let zero = Vector::zeros(self.polytope.dim());
        self.minimize_tilted(x0, &zero, &basis, "analytic center")
    }

    /// One barrier mirror-descent step restricted to `{C x = e}`:
    /// `argmin { R(x) - (∇R(x_t) - eta·loss)·x : C x = e }`.
    ///
    /// Fails with `StepConditionViolated` if `eta·‖loss‖*_{x_t} > 1/2` in the
    /// restricted dual norm.
    pub fn mirror_step(
        &self,
        x_t: &Vector,
        eta: f64,
        loss_est: &Vector,
        basis: &SubspaceBasis,
    ) -> Result<Vector> {
        let step = eta * self.restricted_dual_norm(x_t, basis, loss_est)?;
        if step > 0.5 + 1e-12 {
            return Err(Error::StepConditionViolated { value: step });
        }
        if eta == 0.0 {
            return Ok(x_t.clone());
        }
        let target = self.gradient(x_t)? - loss_est * eta;
        self.minimize_tilted(x_t, &target, basis, "mirror step")
    }

    /// Damped Newton on `R(x) - tilt·x` over `x0 + range(W)`.
    fn minimize_tilted(
        &self,
        x0: &Vector,
        tilt: &Vector,
        basis: &SubspaceBasis,
        what: &'static str,
    ) -> Result<Vector> {
        let poly = &self.polytope;
        let w = &basis.w;
        let mut x = x0.clone();
        poly.slacks(&x)?;
        if poly.equality_residual(&x) > EQUALITY_TOL {
            x = poly.project_affine(&x);
            poly.slacks(&x)?;
        }
        if basis.dim() == 0 {
            return Ok(x);
        }
        let objective = |s: &Vector, x: &Vector| -> f64 {
            -s.iter().map(|v| v.ln()).sum::<f64>() - tilt.dot(x)
        };
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_NEWTON_ITERS {
            let s = poly.slacks(&x)?;
            let g = self.gradient_from_slacks(&s) - tilt;
            let r = w.tr_mul(&g);
            residual = r.norm();
            let h = self.hessian_from_slacks(&s);
            let hw = w.tr_mul(&(&h * w));
            let chol = linalg::cholesky_regularized(&hw).ok_or(
                Error::SingularRestrictedHessian {
                    min_eig: linalg::min_eigenvalue(&hw),
                },
            )?;
            let dz = -chol.solve(&r);
            let dx = w * &dz;
            if residual <= STATIONARITY_TOL {
                // one polishing step inside the quadratic-convergence region
                let polished = &x + &dx;
                if let Ok(sp) = poly.slacks(&polished) {
                    let rp = w.tr_mul(&(self.gradient_from_slacks(&sp) - tilt)).norm();
                    if rp <= residual {
                        return Ok(polished);
                    }
                }
                return Ok(x);
            }
            let decrement = (-r.dot(&dz)).max(0.0).sqrt();

            // fraction to boundary: keep every slack at least 1% of current
            let adx = &poly.a * &dx;
            let mut alpha_max: f64 = 1.0;
            for (ai, si) in adx.iter().zip(s.iter()) {
                if *ai > 0.0 {
                    alpha_max = alpha_max.min(0.99 * si / ai);
                }
            }
            let mut alpha = alpha_max;
            if decrement >= 0.25 {
                let f0 = objective(&s, &x);
                let slope = r.dot(&dz);
                loop {
                    let xn = &x + &dx * alpha;
                    let sn = poly.raw_slacks(&xn);
                    if sn.iter().all(|&v| v > 0.0)
                        && objective(&sn, &xn) <= f0 + 1e-4 * alpha * slope
                    {
                        break;
                    }
                    alpha *= 0.5;
                    if alpha < 1e-16 {
                        return Err(Error::DidNotConverge {
                            what,
                            iterations: 0,
                            residual,
                        });
                    }
                }
            }
            x += &dx * alpha;
            if poly.equality_residual(&x) > 1e-12 {
                x = poly.project_affine(&x);
            }
        }
        Err(Error::DidNotConverge {
            what,
            iterations: MAX_NEWTON_ITERS,
            residual,
        })
    }

    /// Uniform draw from the unit shell of the Dikin ellipsoid at `x`
    /// intersected with `{C x = e}`: `y = x + W H_W^{-1/2} u` with `u`
    /// uniform on the unit sphere of `ℝᵖ`. Returns `(y, u)`.
    pub fn dikin_sample<R: Rng + ?Sized>(
        &self,
        x: &Vector,
        basis: &SubspaceBasis,
        rng: &mut R,
    ) -> Result<(Vector, Vector)> {
        let rh = self.restricted_hessian(x, basis)?;
        let u = sample_unit_sphere(basis.dim(), rng)?;
        let y = x + &basis.w * (&rh.inv_sqrt * &u);
        Ok((y, u))
    }
}

/// Uniform sample on the unit sphere of `ℝᵖ`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Vector> {
    if p == 0 {
        return Err(Error::InvalidArgument(
            "cannot sample a direction in a zero-dimensional subspace".into(),
        ));
    }
    loop {
        let g = Vector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-12 {
            return Ok(g / norm);
        }
    }
}

/// `ρ(z) = z - log(1 + z)`.
pub fn rho(z: f64) -> f64 {
    z - z.ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_interval() -> BarrierSpec {
        BarrierSpec::new(Polytope::interval(0.0, 1.0).unwrap())
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn value_examples() {
        let spec = unit_interval();
        assert_relative_eq!(spec.value(&v(&[0.5])).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-12);
        assert!(matches!(
            spec.value(&v(&[1.0])),
            Err(Error::NonInteriorPoint { .. })
        ));
        let simplex = BarrierSpec::new(Polytope::probability_simplex(3).unwrap());
        let c = Vector::from_element(3, 1.0 / 3.0);
        assert_relative_eq!(simplex.value(&c).unwrap(), 3.0 * 3f64.ln(), epsilon = 1e-12);
        assert_eq!(simplex.theta(), 3.0);
    }

    #[test]
    fn derivative_examples() {
        let spec = unit_interval();
        assert_relative_eq!(spec.gradient(&v(&[0.5])).unwrap()[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            spec.gradient(&v(&[0.25])).unwrap()[0],
            -8.0 / 3.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(spec.hessian(&v(&[0.5])).unwrap()[(0, 0)], 8.0, epsilon = 1e-12);
    }

    #[test]
    fn norm_examples() {
        let spec = unit_interval();
        let x = v(&[0.5]);
        assert_relative_eq!(spec.local_norm(&x, &v(&[1.0])).unwrap(), 8f64.sqrt(), epsilon = 1e-12);
        assert_eq!(spec.local_norm(&x, &v(&[0.0])).unwrap(), 0.0);
        assert_relative_eq!(
            spec.dual_local_norm(&x, &v(&[1.0])).unwrap(),
            1.0 / 8f64.sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn bregman_examples() {
        let spec = unit_interval();
        let x = v(&[0.5]);
        assert_eq!(spec.bregman(&x, &x).unwrap(), 0.0);
        let expected = spec.value(&v(&[0.25])).unwrap() - spec.value(&x).unwrap();
        assert_relative_eq!(spec.bregman(&v(&[0.25]), &x).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.287682, epsilon = 1e-6);
        assert_relative_eq!(rho(1.0), 1.0 - 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn analytic_center_examples() {
        let spec = unit_interval();
        let c = spec.analytic_center(&v(&[0.1])).unwrap();
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-10);

        let simplex = BarrierSpec::new(Polytope::probability_simplex(3).unwrap());
        let c = simplex.analytic_center(&v(&[0.6, 0.3, 0.1])).unwrap();
        for i in 0..3 {
            assert_relative_eq!(c[i], 1.0 / 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn mirror_step_examples() {
        let spec = unit_interval();
        let basis = spec.null_basis().unwrap();
        let x = v(&[0.5]);
        assert_eq!(spec.mirror_step(&x, 0.0, &v(&[1.0]), &basis).unwrap(), x);
        let z = spec.mirror_step(&x, 1.0, &v(&[1.0]), &basis).unwrap();
        assert_relative_eq!(z[0], (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-10);
        assert!(matches!(
            spec.mirror_step(&x, 10.0, &v(&[1.0]), &basis),
            Err(Error::StepConditionViolated { .. })
        ));
    }

    #[test]
    fn mirror_step_ignores_row_space_losses() {
        let simplex = BarrierSpec::new(Polytope::probability_simplex(3).unwrap());
        let basis = simplex.null_basis().unwrap();
        let x = v(&[0.5, 0.3, 0.2]);
        let next = simplex
            .mirror_step(&x, 0.1, &Vector::from_element(3, 1.0), &basis)
            .unwrap();
        assert_relative_eq!(next, x, epsilon = 1e-12);
    }

    #[test]
    fn dikin_sample_in_interval() {
        let spec = unit_interval();
        let basis = spec.null_basis().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (y, u) = spec.dikin_sample(&v(&[0.5]), &basis, &mut rng).unwrap();
            let expected = 0.5 + u[0] / 8f64.sqrt();
            assert_relative_eq!(y[0], expected, epsilon = 1e-12);
            assert!((y[0] - 0.146447).abs() < 1e-6 || (y[0] - 0.853553).abs() < 1e-6);
        }
    }

    #[test]
    fn restricted_hessian_scalar() {
        let spec = unit_interval();
        let basis = spec.null_basis().unwrap();
        let rh = spec.restricted_hessian(&v(&[0.5]), &basis).unwrap();
        assert_relative_eq!(rh.h_w[(0, 0)], 8.0, epsilon = 1e-12);
        assert_relative_eq!(rh.sqrt[(0, 0)], 8f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn empty_interior_rejected() {
        // x <= 0 and x >= 0
        let err = Polytope::new(
            Matrix::from_row_slice(2, 1, &[1.0, -1.0]),
            Vector::zeros(2),
            Matrix::zeros(0, 1),
            Vector::zeros(0),
        )
        .unwrap_err();
        assert_eq!(err, Error::EmptyInterior);
    }
}
