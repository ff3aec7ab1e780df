//! The distorted-linear-bandit (DLB) protocol.
//!
//! Each round the learner picks `y_t ∈ S`, the adversary moves it to some
//! `z_t` with `‖z_t - y_t‖₁ ≤ min{|z_t·ε_t|, |y_t·ε_t|}`, and a random `ẑ_t`
//! with `E[ẑ_t | z_t] = z_t` is played. The learner observes `ℓ_t·ẑ_t`,
//! `ẑ_t` and `ε_t`. This module holds the instance description, the
//! per-round validity checker, synthetic adversaries for exercising
//! learners, the comparator oracle and regret accounting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::barrier::Polytope;
use crate::error::{Error, Result};
use crate::linalg::{l1_norm, Vector};

/// Absolute slack allowed by the validity checks.
pub const VALIDITY_TOL: f64 = 1e-9;

/// A DLB instance: the domain `S`, a bound `H` with `‖y‖₁ ≤ H` on `S`, the
/// bias parameter `β ≥ ‖ε_t‖∞`, the a-priori bound `B ≥ Σ(ẑ_t·ε_t)²`, and
/// the horizon `T`.
#[derive(Debug, Clone)]
pub struct DlbInstance {
    pub domain: Polytope,
    pub h_norm: f64,
    pub beta: f64,
    pub b_budget: f64,
    pub horizon: usize,
}

impl DlbInstance {
    /// Checks `H ≥ max_S ‖y‖₁` by linear programming, `β > 0` and `B ≥ H`.
    pub fn new(
        domain: Polytope,
        h_norm: f64,
        beta: f64,
        b_budget: f64,
        horizon: usize,
    ) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument("beta must be positive".into()));
        }
        if b_budget < h_norm {
            return Err(Error::InvalidArgument(format!(
                "B = {b_budget} must be at least H = {h_norm}"
            )));
        }
        let max_l1 = domain.max_l1_norm()?;
        if max_l1 > h_norm + VALIDITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "H = {h_norm} is below max ‖y‖₁ = {max_l1} over the domain"
            )));
        }
        Ok(DlbInstance {
            domain,
            h_norm,
            beta,
            b_budget,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// One round of play. `loss_vec` is the hidden loss and is only read by the
/// harness, never by learners.
#[derive(Debug, Clone)]
pub struct DlbRound {
    pub t: usize,
    pub y: Vector,
    pub z: Vector,
    pub z_hat: Vector,
    pub eps: Vector,
    pub loss_scalar: f64,
    pub eta: f64,
    pub loss_vec: Vector,
}

/// Measured slacks of one round against the protocol constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub shift_l1: f64,
    pub shift_budget: f64,
    pub z_l1: f64,
    pub z_hat_l1: f64,
    pub loss_min: f64,
    pub loss_max: f64,
    pub shift_ok: bool,
    pub z_norm_ok: bool,
    pub z_hat_norm_ok: bool,
    pub loss_range_ok: bool,
}

impl RoundReport {
    pub fn passed(&self) -> bool {
        self.shift_ok && self.z_norm_ok && self.z_hat_norm_ok && self.loss_range_ok
    }

    pub fn describe(&self) -> String {
        format!(
            "shift {:.3e} vs budget {:.3e}; ‖z‖₁ {:.6}; ‖ẑ‖₁ {:.6}; loss range [{:.3}, {:.3}]",
            self.shift_l1, self.shift_budget, self.z_l1, self.z_hat_l1, self.loss_min, self.loss_max
        )
    }
}

/// Checks the protocol constraints of one round.
pub fn check_round_validity(round: &DlbRound, h_norm: f64) -> RoundReport {
    let shift_l1 = l1_norm(&(&round.z - &round.y));
    let shift_budget = round.z.dot(&round.eps).abs().min(round.y.dot(&round.eps).abs());
    let z_l1 = l1_norm(&round.z);
    let z_hat_l1 = l1_norm(&round.z_hat);
    let loss_min = round.loss_vec.iter().copied().fold(f64::INFINITY, f64::min);
    let loss_max = round.loss_vec.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    RoundReport {
        shift_l1,
        shift_budget,
        z_l1,
        z_hat_l1,
        loss_min,
        loss_max,
        shift_ok: shift_l1 <= shift_budget + VALIDITY_TOL,
        z_norm_ok: z_l1 <= h_norm + VALIDITY_TOL,
        z_hat_norm_ok: z_hat_l1 <= h_norm + VALIDITY_TOL,
        loss_range_ok: round.loss_vec.is_empty() || (loss_min >= 0.0 && loss_max <= 1.0),
    }
}

/// Synthetic adversaries for testing learners in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// `z = ẑ = y`.
    Identity,
    /// Moves ℓ₁ mass from the cheapest to the most expensive coordinate, as
    /// far as the shift budget allows; `ẑ = z`.
    GreedyShift,
    /// `z = y`; `ẑ` is a random vertex of the radius-`H` ℓ₁ ball with
    /// `E[ẑ] = y`.
    MeanSplit,
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "greedy_shift" | "greedy-shift" => Ok(Self::GreedyShift),
            "mean_split" | "mean-split" => Ok(Self::MeanSplit),
            other => Err(Error::Validation(format!("unknown adversary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdversaryResponse {
    pub z: Vector,
    pub z_hat: Vector,
    /// Set when a shift was requested but none was possible; `z = y` then.
    pub budget_infeasible: bool,
}

pub fn synthetic_adversary<R: Rng + ?Sized>(
    kind: AdversaryKind,
    y: &Vector,
    eps: &Vector,
    loss: &Vector,
    h_norm: f64,
    rng: &mut R,
) -> AdversaryResponse {
    match kind {
        AdversaryKind::Identity => AdversaryResponse {
            z: y.clone(),
            z_hat: y.clone(),
            budget_infeasible: false,
        },
        AdversaryKind::GreedyShift => {
            let (z, budget_infeasible) = match greedy_shift(y, eps, loss) {
                Ok(z) => (z, false),
                Err(_) => (y.clone(), true),
            };
            AdversaryResponse {
                z_hat: z.clone(),
                z,
                budget_infeasible,
            }
        }
        AdversaryKind::MeanSplit => AdversaryResponse {
            z: y.clone(),
            z_hat: vertex_split(y, h_norm, rng),
            budget_infeasible: false,
        },
    }
}

fn greedy_shift(y: &Vector, eps: &Vector, loss: &Vector) -> Result<Vector> {
    let budget = y.dot(eps).abs();
    if budget == 0.0 {
        return Ok(y.clone());
    }
    let receiver = loss.argmax().0;
    let donor = (0..y.len())
        .filter(|&i| y[i] > 0.0 && i != receiver)
        .min_by(|&i, &j| loss[i].total_cmp(&loss[j]).then(i.cmp(&j)));
    let Some(donor) = donor else {
        return Err(Error::BudgetInfeasible);
    };
    if loss[donor] >= loss[receiver] {
        return Err(Error::BudgetInfeasible);
    }
    // |z·ε| ≥ |y·ε| - m|ε_r - ε_d|, so 2m ≤ that lower bound suffices.
    let delta = (eps[receiver] - eps[donor]).abs();
    let mass = (budget / (2.0 + delta)).min(y[donor]);
    let mut z = y.clone();
    z[donor] -= mass;
    z[receiver] += mass;
    Ok(z)
}

/// Draws `H·sign(y_j)·e_j` with probability `|y_j|/H`, and `0` otherwise.
pub fn vertex_split<R: Rng + ?Sized>(y: &Vector, h_norm: f64, rng: &mut R) -> Vector {
    let u: f64 = rng.random::<f64>() * h_norm;
    let mut acc = 0.0;
    let mut out = Vector::zeros(y.len());
    for (j, &v) in y.iter().enumerate() {
        acc += v.abs();
        if u < acc {
            out[j] = h_norm * v.signum();
            break;
        }
    }
    out
}

/// `min_{z ∈ S} z·cum_loss` and a minimiser.
pub fn comparator_loss(domain: &Polytope, cum_loss: &Vector) -> Result<(Vector, f64)> {
    let sol = domain.minimize_linear(cum_loss)?;
    Ok((sol.x, sol.value))
}

/// `Σ_t ẑ_t·ℓ_t - min_{z ∈ S} Σ_t z·ℓ_t`.
pub fn regret(trace: &[DlbRound], inst: &DlbInstance) -> Result<f64> {
    let n = inst.dim();
    let mut played = 0.0;
    let mut cum = Vector::zeros(n);
    for r in trace {
        played += r.z_hat.dot(&r.loss_vec);
        cum += &r.loss_vec;
    }
    Ok(played - comparator_loss(&inst.domain, &cum)?.1)
}

/// Regret after every round; one comparator solve per round.
pub fn cumulative_regret(trace: &[DlbRound], domain: &Polytope) -> Result<Vec<f64>> {
    let mut played = 0.0;
    let mut cum = Vector::zeros(domain.dim());
    let mut out = Vec::with_capacity(trace.len());
    for r in trace {
        played += r.z_hat.dot(&r.loss_vec);
        cum += &r.loss_vec;
        out.push(played - comparator_loss(domain, &cum)?.1);
    }
    Ok(out)
}

/// `Σ_t (ẑ_t·ε_t)²`, the quantity bounded by `B`.
pub fn perturbation_energy(trace: &[DlbRound]) -> f64 {
    trace.iter().map(|r| r.z_hat.dot(&r.eps).powi(2)).sum()
}

/// A learner for the DLB protocol. `update` must follow each `predict`.
pub trait DlbLearner {
    fn predict(&mut self) -> Result<Vector>;
    fn update(&mut self, z_hat: &Vector, eps: &Vector, loss_scalar: f64) -> Result<()>;
    /// The learning rate in force after the last update.
    fn eta(&self) -> f64;
}

/// Plays `losses.len()` rounds of the protocol against a synthetic
/// adversary, with `eps[t]` the perturbation of round `t`. Every round is
/// checked with [`check_round_validity`]; a failing round aborts the run.
pub fn play<L: DlbLearner + ?Sized, R: Rng + ?Sized>(
    inst: &DlbInstance,
    learner: &mut L,
    kind: AdversaryKind,
    losses: &[Vector],
    eps: &[Vector],
    rng: &mut R,
) -> Result<Vec<DlbRound>> {
    if eps.len() != losses.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} loss vectors but {} perturbations",
            losses.len(),
            eps.len()
        )));
    }
    let mut out = Vec::with_capacity(losses.len());
    for (i, (loss, e)) in losses.iter().zip(eps).enumerate() {
        let y = learner.predict()?;
        let resp = synthetic_adversary(kind, &y, e, loss, inst.h_norm, rng);
        let loss_scalar = loss.dot(&resp.z_hat);
        learner.update(&resp.z_hat, e, loss_scalar)?;
        let round = DlbRound {
            t: i + 1,
            y,
            z: resp.z,
            z_hat: resp.z_hat,
            eps: e.clone(),
            loss_scalar,
            eta: learner.eta(),
            loss_vec: loss.clone(),
        };
        let report = check_round_validity(&round, inst.h_norm);
        if !report.passed() {
            return Err(Error::InvalidRound {
                round: round.t,
                detail: report.describe(),
            });
        }
        out.push(round);
    }
    Ok(out)
}
