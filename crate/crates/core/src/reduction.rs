//! Online MDPs with aggregate bandit feedback, reduced to distorted linear
//! bandits.
//!
//! Episodes are grouped into epochs. At the start of an epoch the visit
//! counts give empirical dynamics `P̂` and confidence widths `ε`, and from
//! them a polytope of occupancy measures whose induced dynamics are within
//! `ε/H` of `P̂` in ℓ₁. A fresh barrier mirror-descent learner runs on that
//! polytope; each episode plays the policy induced by its prediction and
//! feeds back the trajectory indicator, the aggregate loss and `ε`. An epoch
//! ends once some `(s, a, h)` has been visited as often within the epoch as
//! in all previous epochs together.
//!
//! The ℓ₁ constraints are linearised with one auxiliary variable `ξ` per
//! cell:
//!
//! ```text
//! ±(x(h,s,a,s′) - P̂(s′|s,a,h)·x(h,s,a)) ≤ ξ(h,s,a,s′),   ξ ≥ 0,
//! Σ_{s′} ξ(h,s,a,s′) ≤ (ε(s,a,h)/H)·x(h,s,a),
//! ```
//!
//! whose projection onto `x` is exactly the ℓ₁ set. Cells of the first layer
//! that leave a state other than `s₁` are fixed at zero by the start
//! condition and are dropped from the variables, so that the polytope has a
//! relative interior.
//!
//! Counts are updated with the episode just played.

use crate::barrier::{BarrierSpec, Polytope};
use crate::dlb::{check_round_validity, DlbRound, RoundReport};
use crate::error::{Error, Result};
use crate::linalg::{l1_norm, Matrix, Vector};
use crate::mdp::{self, Episode, FiniteMdp, Layout, Policy, Transitions};
use crate::omd::{default_eta0, OmdLearner};
use crate::rng::StreamRng;
use rand::SeedableRng;

/// Relative slack every inequality must have at the closed-form interior
/// point.
pub const INTERIOR_RELATIVE_SLACK: f64 = 1e-6;

/// Visit counts: `n_prev*` over all finished epochs, `n_epoch*` within the
/// current one. Triples use [`Layout::triple`], cells [`Layout::cell`].
#[derive(Debug, Clone, PartialEq)]
pub struct Counts {
    pub layout: Layout,
    pub n_prev: Vec<u64>,
    pub n_prev_trans: Vec<u64>,
    pub n_epoch: Vec<u64>,
    pub n_epoch_trans: Vec<u64>,
}

impl Counts {
    pub fn new(layout: Layout) -> Self {
        Counts {
            layout,
            n_prev: vec![0; layout.n_triples()],
            n_prev_trans: vec![0; layout.dim()],
            n_epoch: vec![0; layout.n_triples()],
            n_epoch_trans: vec![0; layout.dim()],
        }
    }

    /// Adds one trajectory's transitions to the within-epoch counts.
    pub fn record(&mut self, episode: &Episode) {
        let l = self.layout;
        for h in 0..l.horizon {
            let (s, a, s2) = (episode.states[h], episode.actions[h], episode.states[h + 1]);
            self.n_epoch[l.triple(h, s, a)] += 1;
            self.n_epoch_trans[l.cell(h, s, a, s2)] += 1;
        }
    }

    /// Folds the within-epoch counts into the totals.
    pub fn end_epoch(&mut self) {
        for (n, m) in self.n_prev.iter_mut().zip(self.n_epoch.iter_mut()) {
            *n += std::mem::take(m);
        }
        for (n, m) in self.n_prev_trans.iter_mut().zip(self.n_epoch_trans.iter_mut()) {
            *n += std::mem::take(m);
        }
    }
}

/// `P̂(s′|s,a,h) = N(s,a,h,s′)/max{N(s,a,h),1}` from the pre-epoch counts.
/// Unvisited triples get all-zero rows.
pub fn empirical_dynamics(counts: &Counts) -> Transitions {
    let l = counts.layout;
    let mut p = vec![0.0; l.dim()];
    for h in 0..l.horizon {
        for s in 0..l.n_states {
            for a in 0..l.n_actions {
                let n = counts.n_prev[l.triple(h, s, a)].max(1) as f64;
                for s2 in 0..l.n_states {
                    let c = l.cell(h, s, a, s2);
                    p[c] = counts.n_prev_trans[c] as f64 / n;
                }
            }
        }
    }
    Transitions { layout: l, p }
}

fn log_term(layout: Layout, episodes: usize, delta: f64) -> f64 {
    let (s, a, h) = (
        layout.n_states as f64,
        layout.n_actions as f64,
        layout.horizon as f64,
    );
    s + (h * s * a * episodes as f64 / delta).ln()
}

/// `ε(s,a,h) = 5H√((|S| + log(H|S||A|K/δ))/max{N(s,a,h),1})` per triple.
pub fn confidence_widths(counts: &Counts, delta: f64, episodes: usize) -> Vec<f64> {
    let l = counts.layout;
    let base = 5.0 * l.horizon as f64 * log_term(l, episodes, delta).sqrt();
    counts
        .n_prev
        .iter()
        .map(|&n| base / (n.max(1) as f64).sqrt())
        .collect()
}

/// Constants of the per-epoch DLB instances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DlbConstants {
    /// `|S|²|A|H`, the number of occupancy cells.
    pub d: usize,
    /// `5H√(|S| + log(H|S||A|K/δ))`, the width of an unvisited triple.
    pub beta: f64,
    /// `β²|S||A|H²`.
    pub b_budget: f64,
    pub delta: f64,
}

/// Default failure probability `1/(HK)`.
pub fn default_delta(layout: Layout, episodes: usize) -> f64 {
    1.0 / (layout.horizon as f64 * episodes as f64)
}

pub fn dlb_constants(layout: Layout, episodes: usize, delta: f64) -> DlbConstants {
    let (s, a, h) = (
        layout.n_states as f64,
        layout.n_actions as f64,
        layout.horizon as f64,
    );
    let lt = log_term(layout, episodes, delta);
    let beta = 5.0 * h * lt.sqrt();
    let b_budget = beta * beta * s * a * h * h;
    let energy = 25.0 * h.powi(4) * s * a * lt;
    assert!(
        (b_budget - energy).abs() <= 1e-12 * energy,
        "B = {b_budget} disagrees with the per-epoch energy bound {energy}"
    );
    DlbConstants {
        d: layout.dim(),
        beta,
        b_budget,
        delta,
    }
}

/// `25H⁴|S||A|(|S| + log(H|S||A|K/δ))`, the per-epoch bound on `Σ(ε·ẑ)²`.
pub fn epoch_energy_bound(layout: Layout, episodes: usize, delta: f64) -> f64 {
    let (s, a, h) = (
        layout.n_states as f64,
        layout.n_actions as f64,
        layout.horizon as f64,
    );
    25.0 * h.powi(4) * s * a * log_term(layout, episodes, delta)
}

/// True iff some triple has `n(s,a,h) ≥ max{N(s,a,h),1}`.
pub fn epoch_should_end(counts: &Counts) -> bool {
    counts
        .n_epoch
        .iter()
        .zip(&counts.n_prev)
        .any(|(&n, &big_n)| n >= big_n.max(1))
}

/// The lifted polytope with its coordinate maps. Variables are
/// `[x(active cells), ξ(active cells)]`.
#[derive(Debug, Clone)]
pub struct OccupancyPolytope {
    pub layout: Layout,
    pub start: usize,
    pub polytope: Polytope,
    /// Cell index of each active `x` variable.
    pub active: Vec<usize>,
    /// Triple index of each active `(s, a, h)`.
    pub active_triples: Vec<usize>,
    pub p_hat: Transitions,
    /// Width per triple.
    pub eps: Vec<f64>,
}

impl OccupancyPolytope {
    pub fn n_x(&self) -> usize {
        self.active.len()
    }

    /// `x`-part of a lifted vector, in the full cell layout.
    pub fn x_part(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.layout.dim());
        for (j, &c) in self.active.iter().enumerate() {
            out[c] = v[j];
        }
        out
    }

    /// Lifts a cell vector, setting `ξ = 0`.
    pub fn lift(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(2 * self.n_x());
        for (j, &c) in self.active.iter().enumerate() {
            out[j] = x[c];
        }
        out
    }

    /// `ε` broadcast to cells, `ε(h,s,a,s′) = ε(s,a,h)`.
    pub fn eps_cells(&self) -> Vector {
        let sn = self.layout.n_states;
        Vector::from_fn(self.layout.dim(), |c, _| self.eps[c / sn])
    }

    /// Lifted point `(x, ξ)` with `ξ = 1.5·|x - P̂·x(h,s,a)| + 0.1·(ε/H)·x(h,s,a)/|S|`.
    fn lifted_point(&self, x: &Vector) -> Vector {
        let l = self.layout;
        let sn = l.n_states;
        let mass = mdp::triple_mass(l, x);
        let mut v = self.lift(x);
        let n_x = self.n_x();
        for (j, &c) in self.active.iter().enumerate() {
            let t = c / sn;
            let dev = (x[c] - self.p_hat.p[c] * mass[t]).abs();
            v[n_x + j] = 1.5 * dev + 0.1 * self.eps[t] / l.horizon as f64 * mass[t] / sn as f64;
        }
        v
    }

    /// Membership of a cell vector in the unlifted set: an occupancy
    /// measure with `‖x(h,s,a,·) - P̂(·|s,a,h)·x(h,s,a)‖₁ ≤ (ε/H)·x(h,s,a)`.
    /// Returns the worst violation, `0` when inside.
    pub fn l1_violation(&self, x: &Vector) -> f64 {
        let l = self.layout;
        let rep = mdp::validate_occupancy(l, self.start, x, 0.0);
        let mut worst = rep
            .negativity
            .max(rep.layer_normalization)
            .max(rep.start_condition)
            .max(rep.flow_conservation);
        let mass = mdp::triple_mass(l, x);
        let sn = l.n_states;
        for (t, &m) in mass.iter().enumerate() {
            let dev: f64 = (0..sn)
                .map(|s2| (x[t * sn + s2] - self.p_hat.p[t * sn + s2] * m).abs())
                .sum();
            worst = worst.max(dev - self.eps[t] / l.horizon as f64 * m);
        }
        worst
    }
}

fn constraint_rows(
    layout: Layout,
    start: usize,
    p_hat: &Transitions,
    eps: &[f64],
) -> (Vec<usize>, Vec<usize>, Matrix, Vector, Matrix, Vector) {
    let (sn, na, hn) = (layout.n_states, layout.n_actions, layout.horizon);
    let mut active = Vec::new();
    let mut active_triples = Vec::new();
    let mut var_of = vec![usize::MAX; layout.dim()];
    for h in 0..hn {
        for s in 0..sn {
            if h == 0 && s != start {
                continue;
            }
            for a in 0..na {
                active_triples.push(layout.triple(h, s, a));
                for s2 in 0..sn {
                    let c = layout.cell(h, s, a, s2);
                    var_of[c] = active.len();
                    active.push(c);
                }
            }
        }
    }
    let n_x = active.len();
    let n = 2 * n_x;
    let m = 4 * n_x + active_triples.len();
    let mut a_mat = Matrix::zeros(m, n);
    let b = Vector::zeros(m);
    let mut row = 0;
    let h_f = hn as f64;
    for (j, &c) in active.iter().enumerate() {
        let t = c / sn;
        let base = t * sn;
        // -x ≤ 0
        a_mat[(row, j)] = -1.0;
        row += 1;
        // ±(x_c - P̂_c Σ_{s′} x_{t,s′}) - ξ_c ≤ 0
        for sign in [1.0, -1.0] {
            for s2 in 0..sn {
                a_mat[(row, var_of[base + s2])] -= sign * p_hat.p[c];
            }
            a_mat[(row, j)] += sign;
            a_mat[(row, n_x + j)] = -1.0;
            row += 1;
        }
        // -ξ ≤ 0
        a_mat[(row, n_x + j)] = -1.0;
        row += 1;
    }
    for &t in &active_triples {
        for s2 in 0..sn {
            let j = var_of[t * sn + s2];
            a_mat[(row, n_x + j)] = 1.0;
            a_mat[(row, j)] = -eps[t] / h_f;
        }
        row += 1;
    }
    debug_assert_eq!(row, m);

    // start row, then flow rows for layers 2..H; layer normalisation follows
    let q = 1 + (hn - 1) * sn;
    let mut c_mat = Matrix::zeros(q, n);
    let mut e = Vector::zeros(q);
    for a in 0..na {
        for s2 in 0..sn {
            c_mat[(0, var_of[layout.cell(0, start, a, s2)])] = 1.0;
        }
    }
    e[0] = 1.0;
    let mut r = 1;
    for h in 1..hn {
        for s in 0..sn {
            for a in 0..na {
                for s2 in 0..sn {
                    c_mat[(r, var_of[layout.cell(h, s, a, s2)])] += 1.0;
                }
            }
            for s0 in 0..sn {
                for a in 0..na {
                    let v = var_of[layout.cell(h - 1, s0, a, s)];
                    if v != usize::MAX {
                        c_mat[(r, v)] -= 1.0;
                    }
                }
            }
            r += 1;
        }
    }
    (active, active_triples, a_mat, b, c_mat, e)
}

/// Builds the lifted polytope from `P̂` and per-triple widths, using
/// [`interior_init`] for the strictly interior point and an LP Phase-I if
/// that fails.
pub fn build_occupancy_polytope(
    layout: Layout,
    start: usize,
    p_hat: &Transitions,
    eps: &[f64],
) -> Result<OccupancyPolytope> {
    if eps.len() != layout.n_triples() || eps.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("widths must be positive, one per triple".into()));
    }
    let (active, active_triples, a, b, c, e) = constraint_rows(layout, start, p_hat, eps);
    let point = closed_form_interior(layout, start, p_hat, eps, &active, &a, &b);
    let polytope = match point {
        Ok(x0) => Polytope::with_interior_point(a, b, c, e, x0)?,
        Err(Error::PhaseOneFailed) => {
            log::warn!("closed-form interior point failed; running an LP Phase-I");
            Polytope::new(a, b, c, e)?
        }
        Err(err) => return Err(err),
    };
    Ok(OccupancyPolytope {
        layout,
        start,
        polytope,
        active,
        active_triples,
        p_hat: p_hat.clone(),
        eps: eps.to_vec(),
    })
}

/// Strictly feasible lifted point: the uniform policy's occupancy under
/// `P_mix = (1-α)·P̂ + α·uniform` (unvisited rows taken as uniform), with
/// `α` halved from `min{1, min ε/(4H)}` until every inequality has relative
/// slack `INTERIOR_RELATIVE_SLACK`.
pub fn interior_init(poly: &OccupancyPolytope) -> Result<Vector> {
    let (_, _, a, b, _, _) = constraint_rows(poly.layout, poly.start, &poly.p_hat, &poly.eps);
    closed_form_interior(poly.layout, poly.start, &poly.p_hat, &poly.eps, &poly.active, &a, &b)
}

fn closed_form_interior(
    layout: Layout,
    start: usize,
    p_hat: &Transitions,
    eps: &[f64],
    active: &[usize],
    a: &Matrix,
    b: &Vector,
) -> Result<Vector> {
    let sn = layout.n_states;
    let h_f = layout.horizon as f64;
    let probe = OccupancyPolytope {
        layout,
        start,
        polytope: Polytope::interval(0.0, 1.0)?,
        active: active.to_vec(),
        active_triples: Vec::new(),
        p_hat: p_hat.clone(),
        eps: eps.to_vec(),
    };
    let min_eps = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let mut alpha = (0.25 * min_eps / h_f).min(1.0);
    let uniform = Policy::uniform(layout);
    for _ in 0..60 {
        let mut p = p_hat.p.clone();
        for t in 0..layout.n_triples() {
            let row = &mut p[t * sn..(t + 1) * sn];
            let total: f64 = row.iter().sum();
            for v in row.iter_mut() {
                let base = if total > 0.0 { *v / total } else { 1.0 / sn as f64 };
                *v = (1.0 - alpha) * base + alpha / sn as f64;
            }
        }
        let mix = Transitions { layout, p };
        let x = mdp::occupancy_from_policy(&uniform, &mix, start);
        let v = probe.lifted_point(&x);
        let slack = b - a * &v;
        let ok = (0..a.nrows()).all(|i| {
            let scale: f64 = b[i].abs() + a.row(i).iter().zip(v.iter()).map(|(c, x)| (c * x).abs()).sum::<f64>();
            slack[i] > INTERIOR_RELATIVE_SLACK * scale
        });
        if ok {
            return Ok(v);
        }
        alpha *= 0.5;
    }
    Err(Error::PhaseOneFailed)
}

/// Hides the true dynamics behind an episode interface.
pub trait EpisodeEnvironment {
    fn layout(&self) -> Layout;
    fn start(&self) -> usize;
    fn play(&mut self, policy: &Policy, loss: &Vector) -> Episode;
}

/// An environment simulated from a known MDP.
pub struct SimulatedEnvironment {
    mdp: FiniteMdp,
    rng: StreamRng,
}

impl SimulatedEnvironment {
    pub fn new(mdp: FiniteMdp, rng: StreamRng) -> Self {
        SimulatedEnvironment { mdp, rng }
    }
}

impl EpisodeEnvironment for SimulatedEnvironment {
    fn layout(&self) -> Layout {
        self.mdp.layout()
    }

    fn start(&self) -> usize {
        self.mdp.start
    }

    fn play(&mut self, policy: &Policy, loss: &Vector) -> Episode {
        mdp::simulate_episode(&self.mdp, policy, loss, &mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundCheck {
    /// Abort the run on the first invalid round.
    Abort,
    /// Keep the report of every round and carry on.
    Record,
}

#[derive(Debug, Clone)]
pub struct ReductionConfig {
    pub episodes: usize,
    pub delta: f64,
    /// Overrides the default initial learning rate of every epoch.
    pub eta0: Option<f64>,
    pub round_check: RoundCheck,
}

impl ReductionConfig {
    pub fn new(layout: Layout, episodes: usize) -> Self {
        ReductionConfig {
            episodes,
            delta: default_delta(layout, episodes),
            eta0: None,
            round_check: RoundCheck::Abort,
        }
    }
}

/// Per-epoch annotations.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub index: usize,
    /// 1-based first episode.
    pub k_start: usize,
    pub n_prev: Vec<u64>,
    pub p_hat: Transitions,
    /// Width per triple.
    pub eps: Vec<f64>,
    pub eps_max: f64,
    pub theta: f64,
    pub p: usize,
    pub eta0: f64,
    /// Analytic centre of the epoch's polytope, in cell layout.
    pub center: Vector,
    /// `Σ_k (ε·ẑ_k)²` over the epoch's episodes.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub k: usize,
    pub epoch: usize,
    /// `x`-part of the learner's lifted prediction.
    pub y: Vector,
    pub policy: Policy,
    pub z_hat: Vector,
    pub loss_scalar: f64,
    /// Rate in force after the update.
    pub eta: f64,
    /// True occupancy of the played policy, when an oracle was supplied.
    pub z: Option<Vector>,
    pub report: Option<RoundReport>,
}

#[derive(Debug, Clone)]
pub struct ReductionTrace {
    pub constants: DlbConstants,
    pub epochs: Vec<EpochRecord>,
    pub episodes: Vec<EpisodeRecord>,
}

impl ReductionTrace {
    /// Broadcast `ε` vector of the epoch containing `record`.
    pub fn eps_cells(&self, record: &EpisodeRecord) -> Vector {
        let e = &self.epochs[record.epoch - 1];
        let sn = e.p_hat.layout.n_states;
        Vector::from_fn(e.p_hat.layout.dim(), |c, _| e.eps[c / sn])
    }
}

/// Runs the reduction for `losses.len()` episodes.
///
/// `oracle`, when given, is the true transition tensor; it is used only to
/// compute `z_k = x^{π_k, P}` for the round validity check and never reaches
/// the learner.
pub fn run_reduction<E: EpisodeEnvironment + ?Sized>(
    env: &mut E,
    losses: &[Vector],
    config: &ReductionConfig,
    learner_rng: &mut StreamRng,
    oracle: Option<&Transitions>,
) -> Result<ReductionTrace> {
    let layout = env.layout();
    let start = env.start();
    if losses.len() != config.episodes {
        return Err(Error::DimensionMismatch(format!(
            "{} loss vectors for {} episodes",
            losses.len(),
            config.episodes
        )));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", config.delta)));
    }
    if let Some(bad) = losses.iter().position(|l| l.len() != layout.dim()) {
        return Err(Error::DimensionMismatch(format!("loss vector {} has the wrong length", bad + 1)));
    }
    let constants = dlb_constants(layout, config.episodes, config.delta);
    let h_norm = layout.horizon as f64;
    let mut counts = Counts::new(layout);
    let mut epochs = Vec::new();
    let mut records = Vec::with_capacity(config.episodes);
    let mut k = 0;
    while k < config.episodes {
        let p_hat = empirical_dynamics(&counts);
        let eps = confidence_widths(&counts, config.delta, config.episodes);
        let poly = build_occupancy_polytope(layout, start, &p_hat, &eps)?;
        let barrier = BarrierSpec::new(poly.polytope.clone());
        let theta = barrier.theta();
        let x0 = poly.polytope.interior_point().clone();
        let p = poly.polytope.dim() - poly.polytope.n_equalities();
        let eta0 = config.eta0.unwrap_or_else(|| {
            default_eta0(theta, p as f64, h_norm, constants.b_budget, config.episodes as f64)
        });
        // the learner borrows the generator for the epoch and hands it back
        let rng = std::mem::replace(learner_rng, StreamRng::seed_from_u64(0));
        let mut learner = OmdLearner::with_start(barrier, &x0, eta0, rng)?;
        let eps_lifted = poly.lift(&poly.eps_cells());
        let eps_cells = poly.eps_cells();
        let epoch_index = epochs.len() + 1;
        let mut energy = 0.0;
        let k_start = k + 1;
        let center = poly.x_part(learner.x());
        loop {
            let y_lifted = learner.predict()?;
            let y = poly.x_part(&y_lifted);
            let (policy, _) = mdp::policy_and_dynamics_from_occupancy(layout, &y);
            let loss = &losses[k];
            let episode = env.play(&policy, loss);
            let z_hat_lifted = poly.lift(&episode.z_hat);
            learner.update(&z_hat_lifted, &eps_lifted, episode.loss)?;
            energy += episode.z_hat.dot(&eps_cells).powi(2);
            counts.record(&episode);
            k += 1;

            let z = oracle.map(|t| mdp::occupancy_from_policy(&policy, t, start));
            let report = z.as_ref().map(|z| {
                let round = DlbRound {
                    t: k,
                    y: y.clone(),
                    z: z.clone(),
                    z_hat: episode.z_hat.clone(),
                    eps: eps_cells.clone(),
                    loss_scalar: episode.loss,
                    eta: learner.eta(),
                    loss_vec: loss.clone(),
                };
                check_round_validity(&round, h_norm)
            });
            if let (Some(rep), RoundCheck::Abort) = (&report, config.round_check) {
                if !rep.passed() {
                    return Err(Error::InvalidRound {
                        round: k,
                        detail: format!("epoch {epoch_index}: {}", rep.describe()),
                    });
                }
            }
            records.push(EpisodeRecord {
                k,
                epoch: epoch_index,
                y,
                policy,
                z_hat: episode.z_hat,
                loss_scalar: episode.loss,
                eta: learner.eta(),
                z,
                report,
            });
            if k >= config.episodes || epoch_should_end(&counts) {
                break;
            }
        }
        *learner_rng = learner.into_rng();
        log::debug!("epoch {epoch_index}: episodes {k_start}..={k}, eta0 {eta0:.3e}");
        epochs.push(EpochRecord {
            index: epoch_index,
            k_start,
            n_prev: counts.n_prev.clone(),
            eps_max: eps.iter().copied().fold(0.0, f64::max),
            p_hat,
            eps,
            theta,
            p,
            eta0,
            center,
            energy,
        });
        counts.end_epoch();
    }
    Ok(ReductionTrace {
        constants,
        epochs,
        episodes: records,
    })
}

/// `‖P(·|s,a,h) - P̂(·|s,a,h)‖₁ ≤ ε(s,a,h)/H` for every triple of `epoch`.
pub fn coverage_holds(truth: &Transitions, epoch: &EpochRecord) -> bool {
    let l = truth.layout;
    let sn = l.n_states;
    (0..l.n_triples()).all(|t| {
        let dev: f64 = (0..sn)
            .map(|s2| (truth.p[t * sn + s2] - epoch.p_hat.p[t * sn + s2]).abs())
            .sum();
        dev <= epoch.eps[t] / l.horizon as f64
    })
}

/// Occupancy distortion `‖y - z‖₁` against its budget
/// `min{ε·y, ε·z}`, for one episode with a known `z`.
pub fn distortion(trace: &ReductionTrace, record: &EpisodeRecord) -> Option<(f64, f64)> {
    let z = record.z.as_ref()?;
    let eps = trace.eps_cells(record);
    Some((l1_norm(&(&record.y - z)), record.y.dot(&eps).min(z.dot(&eps))))
}
