//! Browser demo: Dikin samples on a planar polytope, OMD regret curves on a
//! synthetic distorted bandit, and the MDP reduction against a uniform
//! policy. Every export returns a JSON string.

use dlb_core::barrier::{BarrierSpec, Polytope};
use dlb_core::dlb::AdversaryKind;
use dlb_core::harness::config::{ExperimentSpec, LossKind, Mode};
use dlb_core::harness::run::{experiment_losses, experiment_mdp, run_replicate};
use dlb_core::mdp::{self, Policy};
use dlb_core::rng::{stream, Stream};
use dlb_core::{Matrix, Vector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest run the page will request; keeps the tab responsive.
const MAX_ROUNDS: usize = 5000;

fn js_err(e: impl ToString) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

// x ≤ 1, y ≤ 1, -x ≤ 1, -y ≤ 1, x + y ≤ 1.2, -x + 2y ≤ 1.5
fn pentagon() -> Result<Polytope, JsValue> {
    let a = Matrix::from_row_slice(6, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0, 1.0, 1.0, -1.0, 2.0]);
    let b = Vector::from_vec(vec![1.0, 1.0, 1.0, 1.0, 1.2, 1.5]);
    Polytope::with_interior_point(a, b, Matrix::zeros(0, 2), Vector::zeros(0), Vector::zeros(2)).map_err(js_err)
}

#[derive(Serialize)]
struct DikinView {
    normals: Vec<[f64; 2]>,
    offsets: Vec<f64>,
    center: [f64; 2],
    point: [f64; 2],
    samples: Vec<[f64; 2]>,
    barrier: f64,
}

/// `n` points on the Dikin shell around `(x, y)`, which must be strictly
/// inside the demo polytope.
#[wasm_bindgen]
pub fn dikin_samples(x: f64, y: f64, n: usize, seed: u64) -> Result<String, JsValue> {
    let poly = pentagon()?;
    let bar = BarrierSpec::new(poly.clone());
    let basis = bar.null_basis().map_err(js_err)?;
    let c = bar.analytic_center(poly.interior_point()).map_err(js_err)?;
    let p = Vector::from_vec(vec![x, y]);
    let value = bar.value(&p).map_err(js_err)?;
    let mut rng = stream(seed, 0, Stream::Verification);
    let mut samples = Vec::with_capacity(n.min(MAX_ROUNDS));
    for _ in 0..n.min(MAX_ROUNDS) {
        let (s, _) = bar.dikin_sample(&p, &basis, &mut rng).map_err(js_err)?;
        samples.push([s[0], s[1]]);
    }
    let a = poly.a();
    to_json(&DikinView {
        normals: (0..a.nrows()).map(|i| [a[(i, 0)], a[(i, 1)]]).collect(),
        offsets: poly.b().iter().copied().collect(),
        center: [c[0], c[1]],
        point: [x, y],
        samples,
        barrier: value,
    })
}

#[derive(Serialize)]
struct RegretCurve {
    cum_regret: Vec<f64>,
    eta: Vec<f64>,
    eta0: f64,
}

/// Cumulative regret of barrier mirror descent on the capped simplex
/// `{x ∈ Δ₃ : x ≤ 0.8}` with a constant loss and `ε_t = β/√t`.
#[wasm_bindgen]
pub fn omd_regret_curve(adversary: &str, rounds: usize, beta: f64, seed: u64) -> Result<String, JsValue> {
    let adversary: AdversaryKind = adversary.parse().map_err(js_err)?;
    let spec = ExperimentSpec {
        mode: Mode::DlbSynthetic,
        rounds: rounds.clamp(1, MAX_ROUNDS),
        beta,
        adversary,
        seed,
        ..Default::default()
    };
    spec.validate().map_err(js_err)?;
    let out = run_replicate(&spec, 0).map_err(js_err)?;
    to_json(&RegretCurve {
        cum_regret: out.trace.rows.iter().map(|r| r.cum_regret).collect(),
        eta: out.trace.rows.iter().map(|r| r.eta).collect(),
        eta0: out.eta0,
    })
}

#[derive(Serialize)]
struct ReductionView {
    cum_regret: Vec<f64>,
    uniform_regret: Vec<f64>,
    epoch_starts: Vec<usize>,
    eta0: f64,
}

/// The reduction on a random instance with switching losses, next to the
/// expected regret of the uniform policy on the same losses.
#[wasm_bindgen]
pub fn reduction_vs_uniform(states: usize, actions: usize, horizon: usize, episodes: usize, seed: u64) -> Result<String, JsValue> {
    let spec = ExperimentSpec {
        mode: Mode::MdpReduction,
        rounds: episodes.clamp(1, MAX_ROUNDS),
        n_states: states,
        n_actions: actions,
        horizon,
        losses: Some(LossKind::Switching),
        seed,
        ..Default::default()
    };
    spec.validate().map_err(js_err)?;
    let out = run_replicate(&spec, 0).map_err(js_err)?;
    let m = experiment_mdp(&spec).map_err(js_err)?;
    let losses = experiment_losses(&spec, m.layout()).map_err(js_err)?;
    let u = mdp::occupancy_from_policy(&Policy::uniform(m.layout()), &m.transitions, m.start);
    let mut cum = Vector::zeros(m.layout().dim());
    let mut played = 0.0;
    let uniform_regret = losses
        .iter()
        .map(|l| {
            cum += l;
            played += u.dot(l);
            played - mdp::best_policy_hindsight(&m.transitions, m.start, &cum).1
        })
        .collect();
    let rows = &out.trace.rows;
    let epoch_starts = rows
        .iter()
        .enumerate()
        .filter(|(i, r)| *i == 0 || rows[i - 1].epoch.map(|e| e.0) != r.epoch.map(|e| e.0))
        .map(|(_, r)| r.t)
        .collect();
    to_json(&ReductionView {
        cum_regret: rows.iter().map(|r| r.cum_regret).collect(),
        uniform_regret,
        epoch_starts,
        eta0: out.eta0,
    })
}
