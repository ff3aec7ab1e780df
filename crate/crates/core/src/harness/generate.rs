//! Loss-sequence and instance generators.
//!
//! Sequences are produced in full before any learner exists, so the
//! adversary is oblivious by construction.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::Result;
use crate::mdp::{FiniteMdp, Layout, Transitions, ROW_SUM_TOL};
use crate::rng::StreamRng;

use super::config::{LossKind, MdpKind};

/// Chain slip probability.
pub const CHAIN_SLIP: f64 = 0.1;
/// Weight of the uniform row mixed into random-dense rows, per state.
pub const DENSE_MIX_PER_STATE: f64 = 1e-3;

const SWITCH_LOW: f64 = 0.2;
const SWITCH_HIGH: f64 = 0.8;
const SWITCH_NOISE: f64 = 0.05;

/// Loss vectors over the cells of `layout`; every cell of a triple shares
/// one value, so losses depend on `(h, s, a)` only.
///
/// - `iid-uniform`: independent uniform draws.
/// - `switching`: blocks of `period` episodes. In even blocks action 0 costs
///   about 0.2 and the others 0.8; in odd blocks action 0 costs about 0.6
///   and the others 0.4. Action 0 wins overall but loses every odd block.
/// - `sinusoidal-drift`: `0.5 + 0.4 sin(2πk/K + φ)` with a random phase per
///   triple.
/// - `single-cell-spike`: 0.25 everywhere, except one random triple that
///   costs 1 during the middle third of the run.
pub fn generate_losses(
    kind: LossKind,
    layout: Layout,
    episodes: usize,
    period: Option<usize>,
    rng: &mut StreamRng,
) -> Vec<crate::Vector> {
    let nt = layout.n_triples();
    let na = layout.n_actions;
    let per_triple: Vec<Vec<f64>> = match kind {
        LossKind::IidUniform => (0..episodes)
            .map(|_| (0..nt).map(|_| rng.random::<f64>()).collect())
            .collect(),
        LossKind::Constant => {
            let l: Vec<f64> = (0..nt).map(|_| rng.random::<f64>()).collect();
            vec![l; episodes]
        }
        LossKind::Switching => {
            let period = period.unwrap_or((episodes / 4).max(1)).max(1);
            (0..episodes)
                .map(|k| {
                    let odd = (k / period) % 2 == 1;
                    (0..nt)
                        .map(|t| {
                            let base = match (odd, t % na == 0) {
                                (false, true) => SWITCH_LOW,
                                (false, false) => SWITCH_HIGH,
                                (true, true) => 0.6,
                                (true, false) => 0.4,
                            };
                            base + SWITCH_NOISE * (2.0 * rng.random::<f64>() - 1.0)
                        })
                        .collect()
                })
                .collect()
        }
        LossKind::SinusoidalDrift => {
            let phase: Vec<f64> = (0..nt).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
            (0..episodes)
                .map(|k| {
                    let w = 2.0 * PI * (k + 1) as f64 / episodes as f64;
                    phase.iter().map(|p| 0.5 + 0.4 * (w + p).sin()).collect()
                })
                .collect()
        }
        LossKind::SingleCellSpike => {
            let hot = rng.random_range(0..nt);
            let (lo, hi) = (episodes / 3, 2 * episodes / 3);
            (0..episodes)
                .map(|k| {
                    (0..nt)
                        .map(|t| if t == hot && (lo..hi).contains(&k) { 1.0 } else { 0.25 })
                        .collect()
                })
                .collect()
        }
    };
    let sn = layout.n_states;
    per_triple
        .into_iter()
        .map(|l| crate::Vector::from_fn(layout.dim(), |c, _| l[c / sn].clamp(0.0, 1.0)))
        .collect()
}

/// Loss vectors in `[0,1]^dim` for the bandit modes.
pub fn generate_vector_losses(kind: LossKind, dim: usize, rounds: usize, rng: &mut StreamRng) -> Vec<crate::Vector> {
    match kind {
        LossKind::IidUniform => (0..rounds)
            .map(|_| crate::Vector::from_fn(dim, |_, _| rng.random::<f64>()))
            .collect(),
        _ => {
            let l = crate::Vector::from_fn(dim, |_, _| rng.random::<f64>());
            vec![l; rounds]
        }
    }
}

/// A random instance; the start state is 0.
///
/// `random-dense` rows are Dirichlet(1) draws mixed with the uniform row at
/// weight `|S|·1e-3`, so every entry is at least `1e-3`. `chain` moves to
/// `s + 1` under action 0 and to `s - 1` under any other action (clamped at
/// the ends), and stays put with probability 0.1. On a one-state chain the
/// only row is `[1]`.
pub fn generate_mdp(kind: MdpKind, layout: Layout, rng: &mut StreamRng) -> Result<FiniteMdp> {
    let sn = layout.n_states;
    let mut p = vec![0.0; layout.dim()];
    for t in 0..layout.n_triples() {
        let row = &mut p[t * sn..(t + 1) * sn];
        match kind {
            MdpKind::RandomDense => {
                let kappa = (sn as f64 * DENSE_MIX_PER_STATE).min(1.0);
                let draws: Vec<f64> = (0..sn).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = draws.iter().sum();
                for (r, d) in row.iter_mut().zip(&draws) {
                    *r = (1.0 - kappa) * d / total + kappa / sn as f64;
                }
            }
            MdpKind::Chain => {
                let s = (t / layout.n_actions) % sn;
                let a = t % layout.n_actions;
                let target = if a == 0 { (s + 1).min(sn - 1) } else { s.saturating_sub(1) };
                row[s] += CHAIN_SLIP;
                row[target] += 1.0 - CHAIN_SLIP;
            }
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
    FiniteMdp::new(Transitions { layout, p }, 0, ROW_SUM_TOL)
}
