mod common;

use approx::assert_relative_eq;
use common::*;
use dlb_core::barrier::Polytope;
use dlb_core::dlb::{self, vertex_split, AdversaryKind, DlbInstance, DlbLearner};
use dlb_core::exp2::{optimal_design, Exp2Learner};
use dlb_core::omd::{default_eta0, OmdLearner};
use dlb_core::rng::{stream, Stream, StreamRng};
use dlb_core::trace::{read_trace, write_trace, Trace, TraceRow};
use dlb_core::{Matrix, Vector};
use rand::Rng;

#[test]
fn mean_split_is_unbiased() {
    let y = Vector::from_vec(vec![0.5, 0.5]);
    let mut rng = stream(1, 0, Stream::Adversary);
    let n = 100_000;
    let draws: Vec<Vector> = (0..n).map(|_| vertex_split(&y, 1.0, &mut rng)).collect();
    for i in 0..2 {
        let col: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        assert!(col.iter().all(|&v| v == 0.0 || v == 1.0));
        let (m, se) = mean_and_se(&col);
        assert!((m - 0.5).abs() <= 4.0 * se);
    }
    assert!(draws.iter().all(|d| d.sum() == 1.0));
}

/// Plays a uniformly random point of the capped simplex each round.
struct RandomLearner(StreamRng);

impl DlbLearner for RandomLearner {
    fn predict(&mut self) -> dlb_core::Result<Vector> {
        // mixtures of the capped simplex's vertices, permutations of (0.8, 0.2, 0)
        let w = dirichlet(6, &mut self.0);
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut y = Vector::zeros(3);
        for (wk, p) in w.iter().zip(perms) {
            y[p[0]] += wk * 0.8;
            y[p[1]] += wk * 0.2;
        }
        Ok(y)
    }
    fn update(&mut self, _: &Vector, _: &Vector, _: f64) -> dlb_core::Result<()> {
        Ok(())
    }
    fn eta(&self) -> f64 {
        0.0
    }
}

#[test]
fn regret_recomputed_from_trace_file() {
    let domain = Polytope::capped_simplex(3, 0.8).unwrap();
    let t = 1000;
    let inst = DlbInstance::new(domain.clone(), 1.0, 0.5, 2.0, t).unwrap();
    let mut lrng = stream(2, 0, Stream::Losses);
    let losses: Vec<Vector> = (0..t).map(|_| Vector::from_fn(3, |_, _| lrng.random::<f64>())).collect();
    let eps: Vec<Vector> = (1..=t).map(|k| Vector::from_element(3, 0.5 / (k as f64).sqrt())).collect();
    let mut learner = RandomLearner(stream(2, 0, Stream::Learner));
    let rounds = dlb::play(&inst, &mut learner, AdversaryKind::Identity, &losses, &eps, &mut stream(2, 0, Stream::Adversary)).unwrap();
    let cum = dlb::cumulative_regret(&rounds, &domain).unwrap();
    let trace = Trace {
        dim: 3,
        with_epochs: false,
        rows: rounds
            .iter()
            .zip(&cum)
            .map(|(r, &c)| TraceRow {
                t: r.t,
                y: r.y.iter().copied().collect(),
                z_hat: r.z_hat.iter().copied().collect(),
                eps: r.eps.iter().copied().collect(),
                loss_scalar: r.loss_scalar,
                eta: r.eta,
                cum_regret: c,
                epoch: None,
            })
            .collect(),
    };
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace).unwrap();
    let back = read_trace(&buf[..]).unwrap();

    // recompute from the file and the loss sequence alone
    let vertices: Vec<[f64; 3]> = vec![
        [0.8, 0.2, 0.0], [0.8, 0.0, 0.2], [0.2, 0.8, 0.0], [0.0, 0.8, 0.2], [0.2, 0.0, 0.8], [0.0, 0.2, 0.8],
    ];
    let mut cumloss = [0.0; 3];
    let mut played = 0.0;
    for (row, l) in back.rows.iter().zip(&losses) {
        for i in 0..3 {
            cumloss[i] += l[i];
        }
        played += row.loss_scalar;
        let best = vertices
            .iter()
            .map(|v| v[0] * cumloss[0] + v[1] * cumloss[1] + v[2] * cumloss[2])
            .fold(f64::INFINITY, f64::min);
        assert!((played - best - row.cum_regret).abs() <= 1e-9 * played.max(1.0), "round {}", row.t);
    }
    assert_relative_eq!(dlb::regret(&rounds, &inst).unwrap(), back.rows.last().unwrap().cum_regret, epsilon = 1e-9);
}

#[test]
fn eta0_first_branch_scales_with_root_horizon() {
    // a tiny budget keeps the exploration branch active
    let (theta, p, h) = (6.0, 2.0, 1.0);
    let t = 1e4;
    let e1 = default_eta0(theta, p, h, 1e-9, t);
    let e4 = default_eta0(theta, p, h, 1e-9, 4.0 * t);
    let correction = ((4.0 * h * t).ln() / (h * t).ln()).sqrt();
    let ratio = e4 / e1 / correction;
    assert!((0.45..=0.55).contains(&ratio), "{ratio}");
    assert_relative_eq!(default_eta0(2.0, 1.0, 1.0, 1.0, 100.0), 0.025, epsilon = 1e-15);
    assert_relative_eq!((2.0 * 100f64.ln() / 100.0).sqrt(), 0.303486, epsilon = 1e-6);
}

#[test]
fn omd_predictions_average_to_iterate() {
    let domain = Polytope::capped_simplex(3, 0.8).unwrap();
    let inst = DlbInstance::new(domain, 1.0, 1.0, 1.0, 10).unwrap();
    let mut l = OmdLearner::new(&inst, 1e-3, stream(3, 0, Stream::Learner)).unwrap();
    let x = l.x().clone();
    let n = 100_000;
    let ys: Vec<Vector> = (0..n).map(|_| l.predict().unwrap()).collect();
    for i in 0..3 {
        let col: Vec<f64> = ys.iter().map(|y| y[i]).collect();
        let (m, se) = mean_and_se(&col);
        assert!((m - x[i]).abs() <= 4.0 * se);
    }
}

#[test]
fn honest_budget_keeps_rate_below_double() {
    let domain = Polytope::capped_simplex(3, 0.8).unwrap();
    let t = 3000;
    let beta = 0.5;
    let eps: Vec<Vector> = (1..=t).map(|k| Vector::from_element(3, beta / (k as f64).sqrt())).collect();
    let b: f64 = eps.iter().map(|e| e[0] * e[0]).sum::<f64>().max(1.0);
    let inst = DlbInstance::new(domain.clone(), 1.0, beta, b, t).unwrap();
    let eta0 = default_eta0(6.0, 2.0, 1.0, b, t as f64);
    let mut l = OmdLearner::new(&inst, eta0, stream(4, 0, Stream::Learner)).unwrap();
    let losses = vec![Vector::from_vec(vec![0.1, 0.5, 0.9]); t];
    let rounds = dlb::play(&inst, &mut l, AdversaryKind::GreedyShift, &losses, &eps, &mut stream(4, 0, Stream::Adversary)).unwrap();
    assert!(dlb::perturbation_energy(&rounds) <= b);
    let last = rounds.last().unwrap().eta;
    assert!(last >= eta0 && last <= 2.0 * eta0);
}

fn log_det_design(points: &[Vector], mu: &[f64]) -> f64 {
    let d = points[0].len();
    let mut m = Matrix::zeros(d, d);
    for (p, w) in points.iter().zip(mu) {
        m += p * p.transpose() * *w;
    }
    m.determinant().ln()
}

#[test]
fn design_matches_exhaustive_grid() {
    let points = vec![
        Vector::from_vec(vec![1.0, 0.0]),
        Vector::from_vec(vec![0.0, 1.0]),
        Vector::from_vec(vec![2.0, 0.0]),
    ];
    let (mu, _) = optimal_design(&points, 10_000, 1e-9).unwrap();
    let mut best = f64::NEG_INFINITY;
    let n = 400;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let w = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
            let v = log_det_design(&points, &w);
            if v.is_finite() {
                best = best.max(v);
            }
        }
    }
    // Kiefer–Wolfowitz: max leverage equals d at the optimum, and its excess
    // bounds the log-det gap
    let d = 2;
    let mut m = Matrix::zeros(d, d);
    for (p, w) in points.iter().zip(&mu) {
        m += p * p.transpose() * *w;
    }
    let mi = m.try_inverse().unwrap();
    let lev = points.iter().map(|p| p.dot(&(&mi * p))).fold(0.0, f64::max);
    assert!(lev - d as f64 <= 1e-3);
    let got = log_det_design(&points, &mu);
    assert!(got >= best - (lev - d as f64) - 1e-9, "{got} < {best}");
    assert!(got <= best + 1e-9 || (got - best) < 1e-3);
}

/// Upper 99.9% quantile of χ²(k), Wilson–Hilferty.
fn chi2_999(k: f64) -> f64 {
    let z = 3.090232;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

#[test]
fn exp2_sampling_frequencies() {
    let mut rng = stream(6, 0, Stream::Instance);
    let mut points: Vec<Vector> = (0..3).map(|i| Vector::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    for _ in 0..5 {
        points.push(Vector::from_vec(dirichlet(3, &mut rng)));
    }
    let mut l = Exp2Learner::with_defaults(points.clone(), 1.0, 1.0, 10_000, stream(6, 0, Stream::Learner)).unwrap();
    // move the weights away from uniform first
    let zero = Vector::zeros(3);
    let loss = Vector::from_vec(vec![0.9, 0.1, 0.5]);
    for _ in 0..300 {
        let y = DlbLearner::predict(&mut l).unwrap();
        l.update(&y, &zero, loss.dot(&y)).unwrap();
    }
    let q = l.sampling_distribution();
    let n = 100_000;
    let mut counts = vec![0usize; points.len()];
    for _ in 0..n {
        let (y, _, _) = l.predict_full();
        let i = points.iter().position(|p| p == &y).unwrap();
        counts[i] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&q)
        .map(|(&c, &qi)| (c as f64 - n as f64 * qi).powi(2) / (n as f64 * qi))
        .sum();
    assert!(stat < chi2_999((points.len() - 1) as f64), "chi2 = {stat}");
}

#[test]
fn exp2_two_point_update_closed_form() {
    let points = vec![Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![0.0, 1.0])];
    let (eta, gamma) = (0.1, 0.2);
    let mut l = Exp2Learner::new(points.clone(), eta, gamma, vec![0.5, 0.5], stream(7, 0, Stream::Learner)).unwrap();
    let (y, q, _) = l.predict_full();
    let i = if y[0] == 1.0 { 0 } else { 1 };
    let loss_scalar = 0.7;
    l.update(&y, &Vector::zeros(2), loss_scalar).unwrap();
    // M = diag(q), ℓ̂ = e_i L / q_i, ℓ̃(e_j) = ℓ̂_j
    let lt = [if i == 0 { loss_scalar / q[0] } else { 0.0 }, if i == 1 { loss_scalar / q[1] } else { 0.0 }];
    let w: Vec<f64> = lt.iter().map(|v| (-eta * v).exp()).collect();
    let s = w[0] + w[1];
    let got = l.weights();
    let gs: f64 = got.iter().sum();
    for j in 0..2 {
        assert_relative_eq!(got[j] / gs, w[j] / s, epsilon = 1e-12);
    }
}
