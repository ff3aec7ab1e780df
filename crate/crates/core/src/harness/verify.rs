//! Verification suites: every property checker the library ships, run at
//! fixed sample sizes. Failures are report entries, never errors.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::barrier::{rho, BarrierSpec, Polytope, SubspaceBasis};
use crate::dlb::{self, synthetic_adversary, AdversaryKind, DlbInstance, DlbLearner};
use crate::error::{Error, Result};
use crate::exp2::{bias_corrected_loss, Exp2Learner};
use crate::linalg::l1_norm;
use crate::mdp::{self, FiniteMdp, Layout, Policy, Transitions};
use crate::omd::{default_eta0, pathwise_bound, OmdLearner};
use crate::reduction::{self, ReductionConfig, ReductionTrace, RoundCheck, SimulatedEnvironment};
use crate::rng::{stream, Stream, StreamRng};
use crate::{Matrix, Vector};

use super::config::{LossKind, MdpKind};
use super::generate::{generate_losses, generate_mdp};
use super::run::{decaying_eps, exp2_points, honest_budget};
use super::summary::CheckEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Barrier,
    Estimators,
    Concentration,
    Reduction,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "barrier" => Ok(Suite::Barrier),
            "estimators" => Ok(Suite::Estimators),
            "concentration" => Ok(Suite::Concentration),
            "reduction" => Ok(Suite::Reduction),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Monte-Carlo reruns for the coverage check.
    pub replicates: usize,
    /// Episodes per reduction run.
    pub episodes: usize,
    /// Frozen-state rounds for the estimator checks.
    pub samples: usize,
    /// Multiplies the OMD loss estimate; anything but 1 is a planted defect.
    pub estimator_scale: f64,
    /// Confidence level of the coverage check.
    pub delta: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            replicates: 500,
            episodes: 2000,
            samples: 100_000,
            estimator_scale: 1.0,
            delta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub entries: Vec<CheckEntry>,
}

pub fn verify(suite: Suite, opts: &VerifyOptions) -> VerifyReport {
    let mut entries = Vec::new();
    let wanted = |s: Suite| suite == s || suite == Suite::All;
    if wanted(Suite::Barrier) {
        entries.extend(guard("barrier", barrier_suite(opts)));
    }
    if wanted(Suite::Estimators) {
        entries.extend(guard("estimators", estimator_suite(opts)));
    }
    if wanted(Suite::Concentration) {
        entries.extend(guard("concentration", concentration_suite(opts)));
    }
    if wanted(Suite::Reduction) {
        entries.extend(guard("reduction", reduction_suite(opts)));
    }
    VerifyReport {
        suite,
        passed: entries.iter().all(|e| e.passed),
        entries,
    }
}

fn guard(suite: &str, r: Result<Vec<CheckEntry>>) -> Vec<CheckEntry> {
    r.unwrap_or_else(|e| vec![CheckEntry::new(format!("{suite}.error"), false, f64::NEG_INFINITY, e.to_string())])
}

/// Accumulates the worst margin of a family of checks.
struct Worst {
    name: String,
    margin: f64,
    count: usize,
    failures: usize,
    detail: String,
}

impl Worst {
    fn new(name: &str) -> Self {
        Worst {
            name: name.into(),
            margin: f64::INFINITY,
            count: 0,
            failures: 0,
            detail: String::new(),
        }
    }

    fn add(&mut self, margin: f64, detail: impl FnOnce() -> String) {
        self.count += 1;
        if !(margin >= 0.0) {
            self.failures += 1;
        }
        if !(margin >= self.margin) {
            self.margin = margin;
            self.detail = detail();
        }
    }

    fn finish(self) -> CheckEntry {
        let passed = self.failures == 0 && self.count > 0;
        let detail = format!("{} cases, {} failures; worst: {}", self.count, self.failures, self.detail);
        CheckEntry::new(self.name, passed, self.margin, detail)
    }
}

// ---------------------------------------------------------------------------
// Polytope fixtures
// ---------------------------------------------------------------------------

/// Random bounded polytope around the origin in `ℝⁿ`: the box `|x_i| ≤ 2`,
/// `extra` random halfspaces with offsets in `[0.5, 1.5]`, and, if
/// `equality`, one random hyperplane through the origin.
pub fn random_polytope(n: usize, extra: usize, equality: bool, rng: &mut StreamRng) -> Result<Polytope> {
    let m = 2 * n + extra;
    let mut a = Matrix::zeros(m, n);
    let mut b = Vector::zeros(m);
    for i in 0..n {
        a[(i, i)] = 1.0;
        a[(n + i, i)] = -1.0;
        b[i] = 2.0;
        b[n + i] = 2.0;
    }
    for r in 2 * n..m {
        for j in 0..n {
            a[(r, j)] = rng.sample(StandardNormal);
        }
        b[r] = rng.random_range(0.5..1.5);
    }
    let (c, e) = if equality {
        let row = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
        (Matrix::from_row_slice(1, n, row.as_slice()), Vector::zeros(1))
    } else {
        (Matrix::zeros(0, n), Vector::zeros(0))
    };
    Polytope::with_interior_point(a, b, c, e, Vector::zeros(n))
}

/// Hit-and-run style walk: `steps` random chords through the current point
/// inside `{Cx = e}`, each shrunk to 95% so the result stays interior.
pub fn random_interior(poly: &Polytope, basis: &SubspaceBasis, start: &Vector, steps: usize, rng: &mut StreamRng) -> Vector {
    let mut x = start.clone();
    for _ in 0..steps {
        let g = Vector::from_fn(basis.dim(), |_, _| rng.sample(StandardNormal));
        let v = basis.w() * g;
        let s = poly.raw_slacks(&x);
        let av = poly.a() * &v;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..av.len() {
            if av[i] > 1e-14 {
                hi = hi.min(s[i] / av[i]);
            } else if av[i] < -1e-14 {
                lo = lo.max(s[i] / av[i]);
            }
        }
        let t = rng.random_range(0.95 * lo..0.95 * hi);
        x += v * t;
    }
    x
}

fn polytope_fixtures(seed: u64, count: usize) -> Result<Vec<Polytope>> {
    let mut rng = stream(seed, 0, Stream::Verification);
    (0..count)
        .map(|i| {
            let n = 2 + i % 2;
            random_polytope(n, 1 + i % 3, i % 3 == 2, &mut rng)
        })
        .collect()
}

fn rel_err(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn barrier_suite(opts: &VerifyOptions) -> Result<Vec<CheckEntry>> {
    let polys = polytope_fixtures(opts.seed, 10)?;
    let mut rng = stream(opts.seed, 1, Stream::Verification);
    let mut grad = Worst::new("barrier.gradient_fd");
    let mut hess = Worst::new("barrier.hessian_fd");
    let mut psd = Worst::new("barrier.hessian_psd");
    let mut rho_lb = Worst::new("barrier.bregman_rho_lower_bound");
    let mut half = Worst::new("barrier.bregman_half_norm_lower_bound");
    let mut shrink = [Worst::new("barrier.bregman_center_gamma_0.1"), Worst::new("barrier.bregman_center_gamma_0.01")];
    let mut kkt = Worst::new("barrier.mirror_step_kkt");
    let mut dikin = Worst::new("barrier.dikin_shell");
    for (pi, poly) in polys.iter().enumerate() {
        let bar = BarrierSpec::new(poly.clone());
        let basis = bar.null_basis()?;
        let center = bar.analytic_center(poly.interior_point())?;
        let n = poly.dim();
        for _ in 0..10 {
            let x = random_interior(poly, &basis, &center, 4, &mut rng);
            let g = bar.gradient(&x)?;
            let h = bar.hessian(&x)?;
            let step = 1e-5 * poly.raw_slacks(&x).min();
            let mut g_fd = Vector::zeros(n);
            let mut h_fd = Matrix::zeros(n, n);
            for j in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += step;
                xm[j] -= step;
                g_fd[j] = (bar.value(&xp)? - bar.value(&xm)?) / (2.0 * step);
                let col = (bar.gradient(&xp)? - bar.gradient(&xm)?) / (2.0 * step);
                h_fd.set_column(j, &col);
            }
            let eg = rel_err(&g_fd, &g);
            grad.add(1e-6 - eg, || format!("polytope {pi}: rel err {eg:.2e}"));
            let eh = (&h_fd - &h).norm() / h.norm().max(1.0);
            hess.add(1e-5 - eh, || format!("polytope {pi}: rel err {eh:.2e}"));
            let me = crate::linalg::min_eigenvalue(&h);
            psd.add(me + 1e-10, || format!("polytope {pi}: min eigenvalue {me:.2e}"));
        }
        for _ in 0..100 {
            let x = random_interior(poly, &basis, &center, 3, &mut rng);
            let y = random_interior(poly, &basis, &x, 2, &mut rng);
            let br = bar.bregman(&y, &x)?;
            let z = bar.local_norm(&x, &(&y - &x))?;
            let tol = 1e-9 * br.abs().max(1.0);
            let lb = rho(z);
            rho_lb.add(br - lb + tol, || format!("polytope {pi}: B = {br:.6}, rho = {lb:.6}"));
            half.add(br - (0.5 * z - 1.0) + tol, || format!("polytope {pi}: B = {br:.6}, |y-x| = {z:.6}"));
        }
        for (gi, gamma) in [0.1f64, 0.01].into_iter().enumerate() {
            let bound = bar.theta() * (1.0 / gamma).ln();
            for k in 0..20 {
                // vertices first, then interior points
                let v = if k < 10 {
                    let c = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
                    poly.minimize_linear(&c)?.x
                } else {
                    random_interior(poly, &basis, &center, 5, &mut rng)
                };
                let y = &v * (1.0 - gamma) + &center * gamma;
                let br = bar.bregman(&y, &center)?;
                shrink[gi].add(bound - br, || format!("polytope {pi}: B = {br:.4}, bound {bound:.4}"));
            }
        }
        for _ in 0..10 {
            let x = random_interior(poly, &basis, &center, 3, &mut rng);
            let l = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
            let dn = bar.restricted_dual_norm(&x, &basis, &l)?;
            let eta = 0.45 / dn.max(1e-300);
            let x1 = bar.mirror_step(&x, eta, &l, &basis)?;
            let stat = basis.w().tr_mul(&(bar.gradient(&x1)? - bar.gradient(&x)? + &l * eta)).norm();
            let eq = poly.equality_residual(&x1);
            let fixed = (bar.mirror_step(&x, 0.0, &l, &basis)? - &x).amax();
            let m = (1e-8 - stat).min(1e-10 - eq).min(if fixed == 0.0 { 0.0 } else { -fixed });
            kkt.add(m, || format!("polytope {pi}: stationarity {stat:.2e}, equality {eq:.2e}, eta=0 drift {fixed:.2e}"));
        }
        for _ in 0..1000 {
            let (y, _) = bar.dikin_sample(&center, &basis, &mut rng)?;
            let norm = bar.local_norm(&center, &(&y - &center))?;
            let slack = poly.raw_slacks(&y).min();
            let eq = poly.equality_residual(&y);
            let m = (1e-9 - (norm - 1.0).abs()).min(if slack > 0.0 { 1.0 } else { slack }).min(1e-10 - eq);
            dikin.add(m, || format!("polytope {pi}: norm {norm:.12}, min slack {slack:.2e}, equality {eq:.2e}"));
        }
    }
    let mut out = vec![grad.finish(), hess.finish(), psd.finish(), rho_lb.finish(), half.finish()];
    out.extend(shrink.into_iter().map(Worst::finish));
    out.push(kkt.finish());
    out.push(dikin.finish());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn estimator_suite(opts: &VerifyOptions) -> Result<Vec<CheckEntry>> {
    let mut out = Vec::new();
    let n = opts.samples.max(2);

    // OMD unbiasedness along null(C) at a frozen state, ε = 0
    let domain = Polytope::capped_simplex(3, 0.8)?;
    let inst = DlbInstance::new(domain.clone(), 1.0, 1.0, 1.0, n)?;
    let mut learner = OmdLearner::new(&inst, 1e-3, stream(opts.seed, 0, Stream::Learner))?;
    let loss = Vector::from_vec(vec![0.0, 0.5, 1.0]);
    let mut rng = stream(opts.seed, 2, Stream::Verification);
    let probes: Vec<Vector> = (0..20)
        .map(|_| learner.basis().w() * Vector::from_fn(learner.p(), |_, _| rng.sample(StandardNormal)))
        .collect();
    let mut proj = vec![Vec::with_capacity(n); probes.len()];
    for _ in 0..n {
        let y = learner.predict()?;
        let est = learner.loss_estimate(loss.dot(&y))? * opts.estimator_scale;
        for (p, v) in proj.iter_mut().zip(&probes) {
            p.push(v.dot(&est));
        }
    }
    let mut unbiased = Worst::new("estimators.omd_unbiased");
    for (i, (p, v)) in proj.iter().zip(&probes).enumerate() {
        let (m, se) = mean_se(p);
        let target = v.dot(&loss);
        unbiased.add(4.0 * se - (m - target).abs(), || {
            format!("probe {i}: mean {m:.5}, target {target:.5}, se {se:.2e}")
        });
    }
    out.push(unbiased.finish());

    // EXP2 optimism at a frozen state under shifting adversaries
    let points = exp2_points(3, 10, &mut stream(opts.seed, 0, Stream::Instance));
    let mut exp2 = Exp2Learner::with_defaults(points.clone(), 1.0, 1.0, 10_000, stream(opts.seed, 1, Stream::Learner))?;
    let eps = Vector::from_fn(3, |_, _| rng.random_range(0.0..0.5));
    let loss = Vector::from_vec(vec![0.2, 0.5, 0.9]);
    for kind in [AdversaryKind::GreedyShift, AdversaryKind::MeanSplit] {
        let mut adv = stream(opts.seed, 3, Stream::Adversary);
        let mut vals = vec![Vec::with_capacity(n); points.len()];
        for _ in 0..n {
            let (y, _, m) = exp2.predict_full();
            let resp = synthetic_adversary(kind, &y, &eps, &loss, 1.0, &mut adv);
            let chol = m.clone().cholesky().ok_or(Error::SingularMoment)?;
            let ell_hat = chol.solve(&y) * loss.dot(&resp.z_hat);
            for (v, p) in vals.iter_mut().zip(&points) {
                v.push(bias_corrected_loss(p, &ell_hat, &eps, &m)?);
            }
        }
        let name = format!("estimators.exp2_optimism_{}", serde_json::to_value(kind).unwrap_or_default().as_str().unwrap_or("?"));
        let mut w = Worst::new(&name);
        for (i, (v, p)) in vals.iter().zip(&points).enumerate() {
            let (m, se) = mean_se(v);
            let target = loss.dot(p);
            w.add(target + 4.0 * se - m, || format!("point {i}: mean {m:.5} vs {target:.5}, se {se:.2e}"));
        }
        out.push(w.finish());
    }

    // EXP2 second moment along a real run, ε = 0
    let t_rounds = 20_000.min(n);
    let mut exp2 = Exp2Learner::with_defaults(points.clone(), 1.0, 1.0, t_rounds, stream(opts.seed, 2, Stream::Learner))?;
    let zero = Vector::zeros(3);
    let loss = Vector::from_vec(vec![0.1, 0.5, 0.9]);
    let mut second = Vec::with_capacity(t_rounds);
    for _ in 0..t_rounds {
        let y = DlbLearner::predict(&mut exp2)?;
        exp2.update(&y, &zero, loss.dot(&y))?;
        let step = exp2.last_step().ok_or(Error::NoPendingPrediction)?;
        second.push(step.q.iter().zip(&step.corrected).map(|(q, c)| q * c * c).sum::<f64>());
    }
    let (m, se) = mean_se(&second);
    let cap = (2.0 * 1.0 * 1.0 * 3.0f64).powi(2);
    out.push(CheckEntry::new(
        "estimators.exp2_second_moment",
        m <= cap + 4.0 * se,
        cap + 4.0 * se - m,
        format!("mean {m:.4} vs cap {cap}"),
    ));

    // pathwise OMD inequality and the dual-norm cap on a stored run
    let t_rounds = 2000;
    let eps = decaying_eps(3, 0.5, 1.0, t_rounds);
    let b = honest_budget(&eps);
    let inst = DlbInstance::new(domain.clone(), 1.0, 0.5, b, t_rounds)?;
    let eta0 = default_eta0(domain.n_inequalities() as f64, 2.0, 1.0, b, t_rounds as f64);
    let mut learner = OmdLearner::new(&inst, eta0, stream(opts.seed, 4, Stream::Learner))?.record_history();
    let losses: Vec<Vector> = (0..t_rounds).map(|_| Vector::from_fn(3, |_, _| rng.random::<f64>())).collect();
    let mut adv = stream(opts.seed, 4, Stream::Adversary);
    dlb::play(&inst, &mut learner, AdversaryKind::GreedyShift, &losses, &eps, &mut adv)?;
    let steps = learner.history().unwrap_or_default();
    let x1 = steps[0].x.clone();
    let mut path = Worst::new("estimators.omd_pathwise");
    for i in 0..50 {
        let c = Vector::from_fn(3, |_, _| rng.sample(StandardNormal));
        let v = if i % 2 == 0 {
            domain.minimize_linear(&c)?.x
        } else {
            let w = Vector::from_fn(3, |_, _| Exp1.sample(&mut rng));
            let w = &w / w.sum();
            domain.project_affine(&(&x1 + (w - &x1) * 0.5))
        };
        let u = &v * 0.99 + &x1 * 0.01;
        let (lhs, rhs) = pathwise_bound(learner.barrier(), steps, &u)?;
        let tol = 1e-9 * rhs.abs().max(1.0);
        path.add(rhs - lhs + tol, || format!("comparator {i}: lhs {lhs:.6}, rhs {rhs:.6}"));
    }
    out.push(path.finish());
    let p_h = learner.p() as f64;
    let worst = steps.iter().map(|s| s.dual_norm).fold(0.0, f64::max);
    out.push(CheckEntry::new(
        "estimators.omd_dual_norm_cap",
        worst <= p_h * (1.0 + 1e-9),
        p_h - worst,
        format!("max dual norm {worst:.6} vs p·H = {p_h}"),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reduction and concentration
// ---------------------------------------------------------------------------

/// One seeded reduction run on a random-dense instance with switching
/// losses; the instance and losses depend on `seed` only.
pub fn reduction_run(
    seed: u64,
    replicate: u32,
    layout: Layout,
    episodes: usize,
    delta: Option<f64>,
) -> Result<(FiniteMdp, Vec<Vector>, ReductionTrace)> {
    let mdp = generate_mdp(MdpKind::RandomDense, layout, &mut stream(seed, 0, Stream::Instance))?;
    let losses = generate_losses(LossKind::Switching, layout, episodes, None, &mut stream(seed, 0, Stream::Losses));
    let mut cfg = ReductionConfig::new(layout, episodes);
    if let Some(d) = delta {
        cfg.delta = d;
    }
    cfg.round_check = RoundCheck::Record;
    let mut env = SimulatedEnvironment::new(mdp.clone(), stream(seed, replicate, Stream::Environment));
    let mut rng = stream(seed, replicate, Stream::Learner);
    let tr = reduction::run_reduction(&mut env, &losses, &cfg, &mut rng, Some(&mdp.transitions))?;
    Ok((mdp, losses, tr))
}

fn distortion_entry(name: &str, runs: &[(FiniteMdp, ReductionTrace)]) -> CheckEntry {
    let mut w = Worst::new(name);
    for (r, (mdp, tr)) in runs.iter().enumerate() {
        if !tr.epochs.iter().all(|e| reduction::coverage_holds(&mdp.transitions, e)) {
            continue;
        }
        for rec in &tr.episodes {
            if let Some((l1, budget)) = reduction::distortion(tr, rec) {
                w.add(budget + 1e-9 - l1, || format!("run {r}, episode {}: {l1:.3e} > {budget:.3e}", rec.k));
            }
        }
    }
    w.finish()
}

fn concentration_suite(opts: &VerifyOptions) -> Result<Vec<CheckEntry>> {
    let layout = Layout::new(2, 2, 2)?;
    let mut failures = 0usize;
    let mut runs = Vec::new();
    for r in 0..opts.replicates {
        let (mdp, _, tr) = reduction_run(opts.seed, r as u32, layout, opts.episodes, Some(opts.delta))?;
        if !tr.epochs.iter().all(|e| reduction::coverage_holds(&mdp.transitions, e)) {
            failures += 1;
        }
        runs.push((mdp, tr));
    }
    let n = opts.replicates as f64;
    let freq = failures as f64 / n;
    let limit = opts.delta + 3.0 * (opts.delta * (1.0 - opts.delta) / n).sqrt();
    Ok(vec![
        CheckEntry::new(
            "concentration.coverage",
            freq <= limit,
            limit - freq,
            format!("{failures}/{} replicates failed coverage; limit {limit:.4}", opts.replicates),
        ),
        distortion_entry("concentration.occupancy_distortion", &runs),
    ])
}

fn random_policy(layout: Layout, rng: &mut StreamRng) -> Policy {
    let mut pi = vec![0.0; layout.n_triples()];
    for chunk in pi.chunks_mut(layout.n_actions) {
        let w: Vec<f64> = (0..chunk.len()).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = w.iter().sum();
        for (c, v) in chunk.iter_mut().zip(w) {
            *c = v / s;
        }
    }
    Policy { layout, pi }
}

/// Occupancy by summing over every trajectory.
pub fn enumerate_occupancy(policy: &Policy, t: &Transitions, start: usize) -> Vector {
    let l = t.layout;
    let mut x = Vector::zeros(l.dim());
    fn walk(h: usize, s: usize, prob: f64, cells: &mut Vec<usize>, policy: &Policy, t: &Transitions, x: &mut Vector) {
        let l = t.layout;
        if h == l.horizon {
            for &c in cells.iter() {
                x[c] += prob;
            }
            return;
        }
        for a in 0..l.n_actions {
            for s2 in 0..l.n_states {
                let p = prob * policy.get(h, s, a) * t.get(h, s, a, s2);
                if p == 0.0 {
                    continue;
                }
                cells.push(l.cell(h, s, a, s2));
                walk(h + 1, s2, p, cells, policy, t, x);
                cells.pop();
            }
        }
    }
    walk(0, start, 1.0, &mut Vec::new(), policy, t, &mut x);
    x
}

fn reduction_suite(opts: &VerifyOptions) -> Result<Vec<CheckEntry>> {
    let mut out = Vec::new();
    let small = Layout::new(3, 2, 3)?;
    let mut rng = stream(opts.seed, 5, Stream::Verification);
    let mut enum_w = Worst::new("reduction.occupancy_enumeration");
    let mut round_w = Worst::new("reduction.extraction_roundtrip");
    for i in 0..20 {
        let m = generate_mdp(MdpKind::RandomDense, small, &mut rng)?;
        let pol = random_policy(small, &mut rng);
        let x = mdp::occupancy_from_policy(&pol, &m.transitions, m.start);
        let err = (&x - enumerate_occupancy(&pol, &m.transitions, m.start)).amax();
        let norm_err = (l1_norm(&x) - small.horizon as f64).abs();
        enum_w.add(1e-10 - err.max(norm_err), || format!("instance {i}: max cell error {err:.2e}"));
        let (p2, t2) = mdp::policy_and_dynamics_from_occupancy(small, &x);
        let q = mdp::state_marginals(&pol, &m.transitions, m.start);
        let mut worst = 0.0_f64;
        for h in 0..small.horizon {
            for s in 0..small.n_states {
                if q[h][s] <= 1e-12 {
                    continue;
                }
                for a in 0..small.n_actions {
                    worst = worst.max((p2.get(h, s, a) - pol.get(h, s, a)).abs());
                    for s2 in 0..small.n_states {
                        worst = worst.max((t2.get(h, s, a, s2) - m.transitions.get(h, s, a, s2)).abs());
                    }
                }
            }
        }
        round_w.add(1e-9 - worst, || format!("instance {i}: max error {worst:.2e}"));
    }
    out.push(enum_w.finish());
    out.push(round_w.finish());

    let layout = Layout::new(2, 2, 2)?;
    let mut runs = Vec::new();
    let mut valid = Worst::new("reduction.round_validity");
    let mut rate = Worst::new("reduction.learning_rate_sandwich");
    let mut energy = Worst::new("reduction.epoch_energy");
    let mut feas = Worst::new("reduction.optimum_feasible");
    for r in 0..3u32 {
        let (m, losses, tr) = reduction_run(opts.seed, r, layout, opts.episodes, None)?;
        for rec in &tr.episodes {
            let ok = rec.report.as_ref().is_some_and(|rep| rep.passed());
            valid.add(if ok { 0.0 } else { -1.0 }, || format!("run {r}, episode {}", rec.k));
            let e0 = tr.epochs[rec.epoch - 1].eta0;
            let ratio = rec.eta / e0;
            rate.add((ratio - 1.0).min(2.0 - ratio) + 1e-12, || format!("run {r}, episode {}: eta/eta0 = {ratio:.6}", rec.k));
        }
        let bound = reduction::epoch_energy_bound(layout, opts.episodes, tr.constants.delta);
        let cum: Vector = losses.iter().fold(Vector::zeros(layout.dim()), |a, l| a + l);
        let (pi_star, _) = mdp::best_policy_hindsight(&m.transitions, m.start, &cum);
        let x_star = mdp::occupancy_from_policy(&pi_star, &m.transitions, m.start);
        for e in &tr.epochs {
            energy.add(bound - e.energy, || format!("run {r}, epoch {}: {:.4} vs {bound:.4}", e.index, e.energy));
            if reduction::coverage_holds(&m.transitions, e) {
                let poly = reduction::build_occupancy_polytope(layout, m.start, &e.p_hat, &e.eps)?;
                let v = poly.l1_violation(&x_star);
                feas.add(1e-9 - v, || format!("run {r}, epoch {}: violation {v:.2e}", e.index));
            }
        }
        runs.push((m, tr));
    }
    out.push(valid.finish());
    out.push(rate.finish());
    out.push(energy.finish());
    out.push(feas.finish());
    out.push(distortion_entry("reduction.occupancy_distortion", &runs));

    // E[ẑ | π] = z at a frozen policy
    let (m, tr) = &runs[0];
    let rec = tr.episodes.last().ok_or(Error::InvalidArgument("empty run".into()))?;
    let z = mdp::occupancy_from_policy(&rec.policy, &m.transitions, m.start);
    let n = 20_000;
    let mut sum = Vector::zeros(layout.dim());
    let zero = Vector::zeros(layout.dim());
    let mut env_rng = stream(opts.seed, 6, Stream::Environment);
    for _ in 0..n {
        sum += mdp::simulate_episode(m, &rec.policy, &zero, &mut env_rng).z_hat;
    }
    let mut tm = Worst::new("reduction.trajectory_mean");
    for c in 0..layout.dim() {
        let mean = sum[c] / n as f64;
        let se = (z[c] * (1.0 - z[c]) / n as f64).sqrt();
        tm.add(4.0 * se + 1e-12 - (mean - z[c]).abs(), || format!("cell {c}: {mean:.5} vs {:.5}", z[c]));
    }
    out.push(tm.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            replicates: 4,
            episodes: 200,
            samples: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn barrier_suite_passes() {
        let r = verify(Suite::Barrier, &quick());
        assert!(r.passed, "{:#?}", r.entries);
    }

    #[test]
    fn planted_estimator_bias_is_caught() {
        let mut o = quick();
        o.samples = 100_000;
        let good = verify(Suite::Estimators, &o);
        assert!(good.passed, "{:#?}", good.entries);
        o.estimator_scale = 1.1;
        let bad = verify(Suite::Estimators, &o);
        let e = bad.entries.iter().find(|e| e.name == "estimators.omd_unbiased").unwrap();
        assert!(!e.passed);
    }
}
