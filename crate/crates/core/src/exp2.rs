//! Exponential weights over a finite action set with optimistic bias
//! correction.
//!
//! The learner mixes its weights with a fixed exploration design, estimates
//! the loss vector from one scalar observation and the exact second-moment
//! matrix of its sampling distribution, and subtracts a bonus proportional to
//! `‖ε_t‖` so that the corrected losses are optimistic in expectation. The
//! action set is enumerated explicitly, so this is only practical for a few
//! hundred points.

use rand::Rng;

use crate::dlb::DlbLearner;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::StreamRng;

pub const DESIGN_MAX_ITERS: usize = 10_000;
pub const DESIGN_TOL: f64 = 1e-9;

fn moment(points: &[Vector], weights: &[f64]) -> Matrix {
    let d = points[0].len();
    let mut m = Matrix::zeros(d, d);
    for (y, &w) in points.iter().zip(weights) {
        if w != 0.0 {
            m.ger(w, y, y, 1.0);
        }
    }
    linalg::symmetrize(&mut m);
    m
}

/// Approximate D-optimal design on `points` by Frank-Wolfe (the
/// Kiefer-Wolfowitz iteration), stopped when `max_y yᵀM⁻¹y - d ≤ tol`.
/// Returns the design and the smallest eigenvalue of its moment matrix.
pub fn optimal_design(points: &[Vector], max_iters: usize, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::DegenerateSpan);
    }
    let d = points[0].len();
    if points.iter().any(|y| y.len() != d) {
        return Err(Error::DimensionMismatch("design points differ in length".into()));
    }
    let mut mu = vec![1.0 / n as f64; n];
    // The uniform design has the largest support; if it is singular, all are.
    let m0 = moment(points, &mu);
    if linalg::min_eigenvalue(&m0) <= 1e-12 * m0.trace().max(1e-300) {
        return Err(Error::DegenerateSpan);
    }
    for _ in 0..max_iters {
        let m = moment(points, &mu);
        let chol = m.clone().cholesky().ok_or(Error::DegenerateSpan)?;
        let (best, g_max) = points
            .iter()
            .map(|y| y.dot(&chol.solve(y)))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
        if g_max - d as f64 <= tol {
            break;
        }
        let alpha = (g_max / d as f64 - 1.0) / (g_max - 1.0);
        for w in mu.iter_mut() {
            *w *= 1.0 - alpha;
        }
        mu[best] += alpha;
    }
    let lambda = linalg::min_eigenvalue(&moment(points, &mu));
    Ok((mu, lambda))
}

/// `η = √(log|S|/T)/(2Hβd)` and `γ = 2H²(H+β√d)η/λ`; fails if `γ > 1/2`.
pub fn default_params(
    h_norm: f64,
    beta: f64,
    d: usize,
    lambda: f64,
    n_points: usize,
    horizon: f64,
) -> Result<(f64, f64)> {
    let d = d as f64;
    let eta = ((n_points as f64).ln() / horizon).sqrt() / (2.0 * h_norm * beta * d);
    let gamma = 2.0 * h_norm * h_norm * (h_norm + beta * d.sqrt()) * eta / lambda;
    if gamma > 0.5 {
        return Err(Error::HorizonTooShort { gamma });
    }
    let t_min = 4.0 * h_norm.powi(2) * (h_norm + beta * d.sqrt()).powi(2) * (n_points as f64).ln()
        / (lambda * lambda * beta * beta * d * d);
    if horizon < t_min || beta < 1.0 {
        log::warn!("horizon {horizon} is below the guarantee's threshold {t_min:.1} or beta < 1");
    }
    Ok((eta, gamma))
}

/// `ℓ̃(y) = ℓ̂·y - √d‖y‖_{M⁻¹}‖ε‖_M`.
pub fn bias_corrected_loss(y: &Vector, ell_hat: &Vector, eps: &Vector, m: &Matrix) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or(Error::SingularMoment)?;
    Ok(corrected_with(y, ell_hat, eps.dot(&(m * eps)).max(0.0).sqrt(), &|v| chol.solve(v)))
}

fn corrected_with(y: &Vector, ell_hat: &Vector, eps_m: f64, solve: &dyn Fn(&Vector) -> Vector) -> f64 {
    let d = y.len() as f64;
    let y_minv = y.dot(&solve(y)).max(0.0).sqrt();
    ell_hat.dot(y) - d.sqrt() * y_minv * eps_m
}

struct Pending {
    index: usize,
    q: Vec<f64>,
    m: Matrix,
}

/// Sampling distribution and corrected losses of the last update.
#[derive(Debug, Clone)]
pub struct Exp2Step {
    pub q: Vec<f64>,
    pub corrected: Vec<f64>,
}

pub struct Exp2Learner {
    points: Vec<Vector>,
    log_w: Vec<f64>,
    eta: f64,
    gamma: f64,
    mu: Vec<f64>,
    lambda: f64,
    rng: StreamRng,
    pending: Option<Pending>,
    last: Option<Exp2Step>,
    enforce_range: bool,
}

impl Exp2Learner {
    /// A learner with explicit `η`, `γ` and design `μ`.
    pub fn new(points: Vec<Vector>, eta: f64, gamma: f64, mu: Vec<f64>, rng: StreamRng) -> Result<Self> {
        if points.is_empty() || mu.len() != points.len() {
            return Err(Error::DimensionMismatch("design and point set differ in length".into()));
        }
        if !(0.0..=1.0).contains(&gamma) || !(eta >= 0.0) {
            return Err(Error::InvalidArgument(format!("eta {eta}, gamma {gamma}")));
        }
        let lambda = linalg::min_eigenvalue(&moment(&points, &mu));
        Ok(Exp2Learner {
            log_w: vec![0.0; points.len()],
            points,
            eta,
            gamma,
            mu,
            lambda,
            rng,
            pending: None,
            last: None,
            enforce_range: false,
        })
    }

    /// A learner with the optimal design and the default `η`, `γ`. Rounds
    /// with `|ℓ̃(y)| > 1/η` are then reported as errors.
    pub fn with_defaults(points: Vec<Vector>, h_norm: f64, beta: f64, horizon: usize, rng: StreamRng) -> Result<Self> {
        let (mu, lambda) = optimal_design(&points, DESIGN_MAX_ITERS, DESIGN_TOL)?;
        let d = points[0].len();
        let (eta, gamma) = default_params(h_norm, beta, d, lambda, points.len(), horizon as f64)?;
        let mut l = Self::new(points, eta, gamma, mu, rng)?;
        l.enforce_range = true;
        Ok(l)
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn last_step(&self) -> Option<&Exp2Step> {
        self.last.as_ref()
    }

    /// `p_t ∝ exp(log w_t)`.
    pub fn weights(&self) -> Vec<f64> {
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = self.log_w.iter().map(|l| (l - max).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    /// `q_t = (1-γ)p_t + γμ`.
    pub fn sampling_distribution(&self) -> Vec<f64> {
        self.weights()
            .iter()
            .zip(&self.mu)
            .map(|(p, m)| (1.0 - self.gamma) * p + self.gamma * m)
            .collect()
    }

    /// Samples `y_t ∼ q_t` and returns it with `q_t` and `M_t = E_{q_t}[yyᵀ]`.
    pub fn predict_full(&mut self) -> (Vector, Vec<f64>, Matrix) {
        let q = self.sampling_distribution();
        let m = moment(&self.points, &q);
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut index = q.len() - 1;
        for (i, &qi) in q.iter().enumerate() {
            acc += qi;
            if u < acc {
                index = i;
                break;
            }
        }
        let y = self.points[index].clone();
        self.pending = Some(Pending {
            index,
            q: q.clone(),
            m: m.clone(),
        });
        (y, q, m)
    }

    /// Multiplies every weight by `exp(-η ℓ̃_t(y))`.
    pub fn update(&mut self, _z_hat: &Vector, eps: &Vector, loss_scalar: f64) -> Result<()> {
        let pending = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        let y_t = &self.points[pending.index];
        let eps_m = eps.dot(&(&pending.m * eps)).max(0.0).sqrt();
        let solver: Box<dyn Fn(&Vector) -> Vector> = match pending.m.clone().cholesky() {
            Some(chol) => Box::new(move |v: &Vector| chol.solve(v)),
            None => {
                log::warn!("moment matrix is singular; falling back to the pseudo-inverse");
                let pinv = pending
                    .m
                    .clone()
                    .pseudo_inverse(1e-12)
                    .map_err(|_| Error::SingularMoment)?;
                Box::new(move |v: &Vector| &pinv * v)
            }
        };
        let ell_hat = solver(y_t) * loss_scalar;
        let corrected: Vec<f64> = self
            .points
            .iter()
            .map(|y| corrected_with(y, &ell_hat, eps_m, &*solver))
            .collect();
        if self.enforce_range {
            let worst = corrected.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if self.eta * worst > 1.0 + 1e-9 {
                return Err(Error::StepConditionViolated { value: self.eta * worst });
            }
        }
        for (lw, c) in self.log_w.iter_mut().zip(&corrected) {
            *lw -= self.eta * c;
        }
        self.last = Some(Exp2Step {
            q: pending.q,
            corrected,
        });
        Ok(())
    }
}

impl DlbLearner for Exp2Learner {
    fn predict(&mut self) -> Result<Vector> {
        Ok(self.predict_full().0)
    }

    fn update(&mut self, z_hat: &Vector, eps: &Vector, loss_scalar: f64) -> Result<()> {
        Exp2Learner::update(self, z_hat, eps, loss_scalar)
    }

    fn eta(&self) -> f64 {
        self.eta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use approx::assert_relative_eq;

    fn basis(d: usize) -> Vec<Vector> {
        (0..d)
            .map(|i| {
                let mut v = Vector::zeros(d);
                v[i] = 1.0;
                v
            })
            .collect()
    }

    #[test]
    fn design_on_basis_is_uniform() {
        let (mu, lambda) = optimal_design(&basis(3), 100, 1e-9).unwrap();
        for w in mu {
            assert_relative_eq!(w, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_relative_eq!(lambda, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = vec![Vector::from_vec(vec![1.0, 1.0]), Vector::from_vec(vec![2.0, 2.0])];
        assert_eq!(optimal_design(&pts, 100, 1e-9).unwrap_err(), Error::DegenerateSpan);
    }

    #[test]
    fn default_params_example() {
        let (eta, gamma) = default_params(1.0, 1.0, 2, 0.5, 4, 1e4).unwrap();
        assert_relative_eq!(eta, 0.25 * (4f64.ln() / 1e4).sqrt(), epsilon = 1e-15);
        // The worked example is rounded; the formula itself is checked above.
        assert_relative_eq!(eta, 0.00294345, epsilon = 1e-7);
        assert_relative_eq!(gamma, 4.0 * (1.0 + 2f64.sqrt()) * eta, epsilon = 1e-15);
        assert_relative_eq!(gamma, 0.0284300, epsilon = 1e-5);
        assert!(matches!(
            default_params(1.0, 1.0, 2, 0.5, 4, 1.0),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn corrected_loss_examples() {
        let m = Matrix::identity(2, 2);
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let v = bias_corrected_loss(&e1, &Vector::zeros(2), &e1, &m).unwrap();
        assert_relative_eq!(v, -2f64.sqrt(), epsilon = 1e-12);
        let ell = Vector::from_vec(vec![0.3, 0.7]);
        assert_relative_eq!(
            bias_corrected_loss(&e1, &ell, &Vector::zeros(2), &m).unwrap(),
            0.3,
            epsilon = 1e-15
        );
        assert_eq!(
            bias_corrected_loss(&e1, &ell, &e1, &Matrix::zeros(2, 2)).unwrap_err(),
            Error::SingularMoment
        );
    }

    #[test]
    fn gamma_one_samples_design() {
        let pts = basis(2);
        let mut l = Exp2Learner::new(pts, 0.1, 1.0, vec![0.25, 0.75], stream(0, 0, Stream::Learner)).unwrap();
        let (_, q, m) = l.predict_full();
        assert_eq!(q, vec![0.25, 0.75]);
        assert_relative_eq!(m[(1, 1)], 0.75);
    }

    #[test]
    fn zero_rate_leaves_weights() {
        let pts = basis(2);
        let mut l = Exp2Learner::new(pts, 0.0, 0.5, vec![0.5, 0.5], stream(0, 0, Stream::Learner)).unwrap();
        let before = l.weights();
        l.predict_full();
        l.update(&Vector::zeros(2), &Vector::zeros(2), 1.0).unwrap();
        assert_eq!(l.weights(), before);
    }
}
