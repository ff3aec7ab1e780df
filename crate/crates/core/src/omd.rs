//! Barrier mirror descent with Dikin-ellipsoid exploration and increasing
//! learning rates.
//!
//! Each round the learner plays a point on the unit shell of the Dikin
//! ellipsoid around its iterate, builds a one-point estimate of the loss
//! from the observed scalar, raises its learning rate by an amount
//! proportional to the observed bias `|ẑ·ε|`, and takes a mirror step. All
//! of this happens inside the affine hull `{C x = e}` of the domain, so the
//! dimension `d` of the textbook algorithm is replaced by `p = dim null(C)`.

use crate::barrier::{BarrierSpec, SubspaceBasis};
use crate::dlb::{DlbInstance, DlbLearner};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::rng::StreamRng;

/// `min{√(ϑ log(HT)/(p²H²T)), 1/(4p√(BT))}`.
pub fn default_eta0(theta: f64, p: f64, h_norm: f64, b_budget: f64, horizon: f64) -> f64 {
    let explore = (theta * (h_norm * horizon).ln() / (p * p * h_norm * h_norm * horizon)).sqrt();
    let bias = 1.0 / (4.0 * p * (b_budget * horizon).sqrt());
    explore.min(bias)
}

/// What one update consumed and produced; kept for post-hoc checks.
#[derive(Debug, Clone)]
pub struct OmdStep {
    /// Iterate the round's prediction was drawn around.
    pub x: Vector,
    /// Learning rate used for this round's mirror step.
    pub eta: f64,
    pub loss_est: Vector,
    /// Restricted dual local norm of `loss_est` at `x`.
    pub dual_norm: f64,
}

struct Pending {
    y: Vector,
    // W H_W^{1/2} u
    scaled_dir: Vector,
}

pub struct OmdLearner {
    barrier: BarrierSpec,
    basis: SubspaceBasis,
    x: Vector,
    eta0: f64,
    inv_eta: f64,
    pending: Option<Pending>,
    rng: StreamRng,
    history: Option<Vec<OmdStep>>,
}

impl OmdLearner {
    /// Starts at the analytic centre of the instance's domain.
    pub fn new(inst: &DlbInstance, eta0: f64, rng: StreamRng) -> Result<Self> {
        let barrier = BarrierSpec::new(inst.domain.clone());
        let x0 = inst.domain.interior_point().clone();
        Self::with_start(barrier, &x0, eta0, rng)
    }

    /// Starts at the analytic centre, found by Newton's method from the
    /// strictly interior point `x0`.
    pub fn with_start(barrier: BarrierSpec, x0: &Vector, eta0: f64, rng: StreamRng) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta0 must be positive, got {eta0}")));
        }
        let basis = barrier.null_basis()?;
        if basis.dim() == 0 {
            return Err(Error::DegenerateSpan);
        }
        let x = barrier.analytic_center(x0)?;
        Ok(OmdLearner {
            barrier,
            basis,
            x,
            eta0,
            inv_eta: 1.0 / eta0,
            pending: None,
            rng,
            history: None,
        })
    }

    /// Keeps an [`OmdStep`] for every update from now on.
    pub fn record_history(mut self) -> Self {
        self.history = Some(Vec::new());
        self
    }

    pub fn history(&self) -> Option<&[OmdStep]> {
        self.history.as_deref()
    }

    pub fn barrier(&self) -> &BarrierSpec {
        &self.barrier
    }

    pub fn basis(&self) -> &SubspaceBasis {
        &self.basis
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    /// Effective dimension `p`.
    pub fn p(&self) -> usize {
        self.basis.dim()
    }

    /// `y_t = x_t + W H_W^{-1/2} u_t`.
    pub fn predict(&mut self) -> Result<Vector> {
        let rh = self.barrier.restricted_hessian(&self.x, &self.basis)?;
        let u = crate::barrier::sample_unit_sphere(self.basis.dim(), &mut self.rng)?;
        let w = self.basis.w();
        let y = &self.x + w * (&rh.inv_sqrt * &u);
        let scaled_dir = w * (&rh.sqrt * &u);
        self.pending = Some(Pending {
            y: y.clone(),
            scaled_dir,
        });
        Ok(y)
    }

    /// The point returned by the pending prediction.
    pub fn pending_prediction(&self) -> Option<&Vector> {
        self.pending.as_ref().map(|p| &p.y)
    }

    /// `ℓ̃_t = p·(ℓ_t·ẑ_t)·W H_W^{1/2} u_t`.
    pub fn loss_estimate(&self, loss_scalar: f64) -> Result<Vector> {
        let pending = self.pending.as_ref().ok_or(Error::NoPendingPrediction)?;
        Ok(&pending.scaled_dir * (self.p() as f64 * loss_scalar))
    }

    /// Raises the rate by `η⁻¹ ← η⁻¹ - 2p|ẑ·ε|` and takes the mirror step.
    pub fn update(&mut self, z_hat: &Vector, eps: &Vector, loss_scalar: f64) -> Result<()> {
        let loss_est = self.loss_estimate(loss_scalar)?;
        let inv_eta = self.inv_eta - 2.0 * self.p() as f64 * z_hat.dot(eps).abs();
        if !(inv_eta > 0.0) {
            return Err(Error::LearningRateOverflow { inv_eta });
        }
        let eta = 1.0 / inv_eta;
        let next = self.barrier.mirror_step(&self.x, eta, &loss_est, &self.basis)?;
        if let Some(h) = self.history.as_mut() {
            let dual_norm = self
                .barrier
                .restricted_dual_norm(&self.x, &self.basis, &loss_est)?;
            h.push(OmdStep {
                x: self.x.clone(),
                eta,
                loss_est,
                dual_norm,
            });
        }
        self.inv_eta = inv_eta;
        self.x = next;
        self.pending = None;
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        1.0 / self.inv_eta
    }

    /// Gives back the random generator.
    pub fn into_rng(self) -> StreamRng {
        self.rng
    }
}

impl DlbLearner for OmdLearner {
    fn predict(&mut self) -> Result<Vector> {
        OmdLearner::predict(self)
    }

    fn update(&mut self, z_hat: &Vector, eps: &Vector, loss_scalar: f64) -> Result<()> {
        OmdLearner::update(self, z_hat, eps, loss_scalar)
    }

    fn eta(&self) -> f64 {
        OmdLearner::eta(self)
    }
}

/// Both sides of the pathwise mirror-descent inequality for comparator `u`:
/// `Σ ℓ̃_t·(x_t - u)` and
/// `B(u‖x₁)/η₁ - Σ_{t≥2} (η_{t-1}⁻¹ - η_t⁻¹) B(u‖x_t) + Σ η_t (‖ℓ̃_t‖*_{x_t})²`.
pub fn pathwise_bound(barrier: &BarrierSpec, steps: &[OmdStep], u: &Vector) -> Result<(f64, f64)> {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (i, s) in steps.iter().enumerate() {
        lhs += s.loss_est.dot(&(&s.x - u));
        rhs += s.eta * s.dual_norm * s.dual_norm;
        let breg = barrier.bregman(u, &s.x)?;
        if i == 0 {
            rhs += breg / s.eta;
        } else {
            rhs -= (1.0 / steps[i - 1].eta - 1.0 / s.eta) * breg;
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::Polytope;
    use crate::rng::{stream, Stream};
    use approx::assert_relative_eq;

    fn interval_learner(eta0: f64) -> OmdLearner {
        let inst = DlbInstance::new(Polytope::interval(0.0, 1.0).unwrap(), 1.0, 1.0, 1.0, 100).unwrap();
        OmdLearner::new(&inst, eta0, stream(1, 0, Stream::Learner)).unwrap()
    }

    #[test]
    fn default_rate_picks_bias_branch() {
        assert_relative_eq!(default_eta0(2.0, 1.0, 1.0, 1.0, 100.0), 0.025, epsilon = 1e-15);
        assert!(default_eta0(2.0, 1.0, 1.0, 1e12, 100.0) < 1e-7);
    }

    #[test]
    fn interval_prediction_and_estimate() {
        let mut l = interval_learner(0.025);
        assert_relative_eq!(l.x()[0], 0.5, epsilon = 1e-12);
        let y = l.predict().unwrap()[0];
        let off = 0.5 / 2f64.sqrt();
        assert!((y - 0.5).abs() > off - 1e-9 && (y - 0.5).abs() < off + 1e-9);
        let est = l.loss_estimate(1.0).unwrap()[0];
        assert_relative_eq!(est.abs(), 8f64.sqrt(), epsilon = 1e-9);
        assert_eq!(est.signum(), (y - 0.5).signum());
        assert_eq!(l.loss_estimate(0.0).unwrap()[0], 0.0);
    }

    #[test]
    fn estimate_requires_prediction() {
        let l = interval_learner(0.025);
        assert_eq!(l.loss_estimate(1.0).unwrap_err(), Error::NoPendingPrediction);
    }

    #[test]
    fn rate_update_matches_formula() {
        let mut l = interval_learner(0.025);
        l.predict().unwrap();
        let one = Vector::from_element(1, 1.0);
        l.update(&one, &Vector::from_element(1, 0.5), 0.0).unwrap();
        assert_relative_eq!(l.eta(), 1.0 / 39.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_bias_zero_loss_is_stationary() {
        let mut l = interval_learner(0.025);
        let x0 = l.x().clone();
        l.predict().unwrap();
        l.update(&x0, &Vector::zeros(1), 0.0).unwrap();
        assert_eq!(l.eta(), 0.025);
        assert_relative_eq!(l.x()[0], x0[0], epsilon = 1e-12);
    }

    #[test]
    fn overflow_detected() {
        let mut l = interval_learner(0.5);
        l.predict().unwrap();
        let one = Vector::from_element(1, 1.0);
        assert!(matches!(
            l.update(&one, &one, 0.0),
            Err(Error::LearningRateOverflow { .. })
        ));
    }
}
