mod common;

use approx::assert_relative_eq;
use common::*;
use dlb_core::harness::verify::reduction_run;
use dlb_core::lp;
use dlb_core::mdp::{self, FiniteMdp, Layout, Policy, Transitions};
use dlb_core::reduction::{self, build_occupancy_polytope, interior_init, Counts};
use dlb_core::rng::{stream, Stream};
use dlb_core::{Matrix, Vector};
use rand::Rng;

fn instance(layout: Layout, seed: u64) -> FiniteMdp {
    let t = random_transitions(layout, &mut stream(seed, 0, Stream::Instance));
    FiniteMdp::new(t, 0, 1e-9).unwrap()
}

#[test]
fn trajectory_indicator_is_unbiased() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let m = instance(layout, 1);
    let pol = random_policy(layout, &mut stream(1, 0, Stream::Learner));
    let want = enumerated_occupancy(&pol, &m.transitions, 0);
    let loss = Vector::zeros(layout.dim());
    let mut rng = stream(1, 0, Stream::Environment);
    let n = 100_000;
    let mut sum = Vector::zeros(layout.dim());
    for _ in 0..n {
        sum += mdp::simulate_episode(&m, &pol, &loss, &mut rng).z_hat;
    }
    for c in 0..layout.dim() {
        let p = want[c];
        let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
        assert!((sum[c] / n as f64 - p).abs() <= 4.0 * se + 1e-12, "cell {c}");
    }
}

#[test]
fn dynamic_programme_matches_policy_enumeration() {
    let layout = Layout::new(3, 2, 3).unwrap();
    for seed in 0..5 {
        let m = instance(layout, seed);
        let mut rng = stream(seed, 0, Stream::Losses);
        let loss = Vector::from_fn(layout.dim(), |_, _| rng.random::<f64>());
        let (_, v) = mdp::best_policy_hindsight(&m.transitions, 0, &loss);
        let slots = layout.horizon * layout.n_states;
        let mut best = f64::INFINITY;
        for code in 0..(layout.n_actions.pow(slots as u32)) {
            let mut c = code;
            let choice: Vec<usize> = (0..slots)
                .map(|_| {
                    let a = c % layout.n_actions;
                    c /= layout.n_actions;
                    a
                })
                .collect();
            let pol = Policy::deterministic(layout, &choice);
            best = best.min(enumerated_occupancy(&pol, &m.transitions, 0).dot(&loss));
        }
        assert_relative_eq!(v, best, epsilon = 1e-10);
    }
}

/// Occupancy polytope of known dynamics, written out row by row.
fn occupancy_lp(t: &Transitions, start: usize) -> (Matrix, Vector, Matrix, Vector) {
    let l = t.layout;
    let (sn, na, hn) = (l.n_states, l.n_actions, l.horizon);
    let d = l.dim();
    let idx = |h: usize, s: usize, a: usize, s2: usize| ((h * sn + s) * na + a) * sn + s2;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for h in 0..hn {
        for s in 0..sn {
            for a in 0..na {
                for s2 in 0..sn {
                    let mut r = vec![0.0; d];
                    r[idx(h, s, a, s2)] += 1.0;
                    for s3 in 0..sn {
                        r[idx(h, s, a, s3)] -= t.p[idx(h, s, a, s2)];
                    }
                    rows.push((r, 0.0));
                }
            }
        }
    }
    for s in 0..sn {
        let mut r = vec![0.0; d];
        for a in 0..na {
            for s2 in 0..sn {
                r[idx(0, s, a, s2)] = 1.0;
            }
        }
        rows.push((r, if s == start { 1.0 } else { 0.0 }));
    }
    for h in 1..hn {
        for s in 0..sn {
            let mut r = vec![0.0; d];
            for a in 0..na {
                for s2 in 0..sn {
                    r[idx(h, s, a, s2)] += 1.0;
                }
            }
            for s0 in 0..sn {
                for a in 0..na {
                    r[idx(h - 1, s0, a, s)] -= 1.0;
                }
            }
            rows.push((r, 0.0));
        }
    }
    let c = Matrix::from_fn(rows.len(), d, |i, j| rows[i].0[j]);
    let e = Vector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    (-Matrix::identity(d, d), Vector::zeros(d), c, e)
}

#[test]
fn occupancy_lp_matches_dynamic_programme() {
    let layout = Layout::new(2, 2, 3).unwrap();
    for seed in 0..5 {
        let m = instance(layout, seed + 10);
        let mut rng = stream(seed, 0, Stream::Losses);
        let loss = Vector::from_fn(layout.dim(), |_, _| rng.random::<f64>());
        let (a, b, c, e) = occupancy_lp(&m.transitions, 0);
        let sol = lp::minimize(&loss, &a, &b, &c, &e).unwrap();
        let (_, v) = mdp::best_policy_hindsight(&m.transitions, 0, &loss);
        assert!((sol.value - v).abs() <= 1e-8, "{} vs {v}", sol.value);
    }
}

#[test]
fn width_constants_worked_example() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let k = reduction::dlb_constants(layout, 100, 0.01);
    let beta = 10.0 * (2.0 + (8.0f64 * 100.0 / 0.01).ln()).sqrt();
    assert_relative_eq!(k.beta, beta, epsilon = 1e-12);
    assert!((k.beta - 36.4552).abs() < 1e-4);
    assert!((k.b_budget - 21263.7).abs() < 0.1);
    assert_eq!(k.d, 16);
}

/// `P̂` and the widths recomputed from raw episode transitions.
fn estimate(layout: Layout, episodes: &[mdp::Episode], delta: f64, horizon_k: usize) -> (Vec<f64>, Vec<f64>) {
    let sn = layout.n_states;
    let mut trans = vec![0.0; layout.dim()];
    for ep in episodes {
        for h in 0..layout.horizon {
            trans[layout.cell(h, ep.states[h], ep.actions[h], ep.states[h + 1])] += 1.0;
        }
    }
    let mut p = vec![0.0; layout.dim()];
    let mut eps = vec![0.0; layout.n_triples()];
    let (s, a, h) = (sn as f64, layout.n_actions as f64, layout.horizon as f64);
    let scale = 5.0 * h * (s + (h * s * a * horizon_k as f64 / delta).ln()).sqrt();
    for t in 0..layout.n_triples() {
        let n: f64 = trans[t * sn..(t + 1) * sn].iter().sum();
        for j in 0..sn {
            p[t * sn + j] = if n > 0.0 { trans[t * sn + j] / n } else { 0.0 };
        }
        eps[t] = scale / n.max(1.0).sqrt();
    }
    (p, eps)
}

#[test]
fn fixed_policy_widths_cover_truth() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let m = instance(layout, 3);
    let pol = Policy::uniform(layout);
    let loss = Vector::zeros(layout.dim());
    let (reps, k, delta) = (200, 500, 0.1);
    let mut failures = 0;
    for r in 0..reps {
        let mut rng = stream(3, r, Stream::Environment);
        let eps_list: Vec<_> = (0..k).map(|_| mdp::simulate_episode(&m, &pol, &loss, &mut rng)).collect();
        let mut counts = Counts::new(layout);
        for ep in &eps_list {
            counts.record(ep);
        }
        counts.end_epoch();
        let (p, eps) = estimate(layout, &eps_list, delta, k);
        let lib = reduction::empirical_dynamics(&counts);
        for (x, y) in p.iter().zip(&lib.p) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
        for (x, y) in eps.iter().zip(&reduction::confidence_widths(&counts, delta, k)) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
        let sn = layout.n_states;
        let covered = (0..layout.n_triples()).all(|t| {
            let dev: f64 = (0..sn).map(|j| (m.transitions.p[t * sn + j] - p[t * sn + j]).abs()).sum();
            dev <= eps[t] / layout.horizon as f64
        });
        if !covered {
            failures += 1;
        }
    }
    assert!(failures as f64 / reps as f64 <= delta);
}

#[test]
fn true_occupancy_is_feasible_under_coverage() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let m = instance(layout, 4);
    let pol = Policy::uniform(layout);
    let loss = Vector::zeros(layout.dim());
    let mut rng = stream(4, 0, Stream::Environment);
    let k = 20_000;
    let episodes: Vec<_> = (0..k).map(|_| mdp::simulate_episode(&m, &pol, &loss, &mut rng)).collect();
    let (p, eps) = estimate(layout, &episodes, 0.1, k);
    let p_hat = Transitions { layout, p };
    let poly = build_occupancy_polytope(layout, 0, &p_hat, &eps).unwrap();
    let mut lrng = stream(4, 0, Stream::Losses);
    for _ in 0..20 {
        let cum = Vector::from_fn(layout.dim(), |_, _| lrng.random::<f64>());
        let (best, _) = mdp::best_policy_hindsight(&m.transitions, 0, &cum);
        let z = enumerated_occupancy(&best, &m.transitions, 0);
        assert!(poly.l1_violation(&z) <= 1e-9);
    }
}

#[test]
fn lifted_set_projects_onto_l1_set() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let sn = layout.n_states;
    let mut rng = stream(5, 0, Stream::Instance);
    let p_hat = random_transitions(layout, &mut rng);
    let eps = vec![0.4; layout.n_triples()];
    let poly = build_occupancy_polytope(layout, 0, &p_hat, &eps).unwrap();
    let (mut inside, mut outside) = (0, 0);
    for i in 0..1000 {
        // dynamics pulled a random distance from P̂
        let other = random_transitions(layout, &mut rng);
        let w = 0.6 * (i as f64 / 1000.0);
        let t = Transitions {
            layout,
            p: p_hat.p.iter().zip(&other.p).map(|(a, b)| (1.0 - w) * a + w * b).collect(),
        };
        let x = enumerated_occupancy(&random_policy(layout, &mut rng), &t, 0);
        let mut worst = f64::NEG_INFINITY;
        let mut v = poly.lift(&x);
        let n_x = poly.n_x();
        for tr in 0..layout.n_triples() {
            let mass: f64 = (0..sn).map(|j| x[tr * sn + j]).sum();
            if mass == 0.0 {
                continue;
            }
            let dev: f64 = (0..sn).map(|j| (x[tr * sn + j] - p_hat.p[tr * sn + j] * mass).abs()).sum();
            worst = worst.max(dev - eps[tr] / layout.horizon as f64 * mass);
        }
        for (j, &c) in poly.active.iter().enumerate() {
            let tr = c / sn;
            let mass: f64 = (0..sn).map(|k| x[tr * sn + k]).sum();
            v[n_x + j] = (x[c] - p_hat.p[c] * mass).abs();
        }
        if worst.abs() < 1e-9 {
            continue;
        }
        let lifted_ok = poly.polytope.contains(&v, 1e-12);
        assert_eq!(lifted_ok, worst < 0.0, "point {i}: violation {worst:.3e}");
        if worst < 0.0 {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    assert!(inside > 50 && outside > 50, "{inside} / {outside}");
}

#[test]
fn epoch_centres_are_occupancy_measures() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let (_, _, tr) = reduction_run(6, 0, layout, 300, None).unwrap();
    for e in &tr.epochs {
        let rep = mdp::validate_occupancy(layout, 0, &e.center, 1e-8);
        assert!(rep.passed, "epoch {}: {rep:?}", e.index);
    }
}

#[test]
fn deterministic_estimate_still_has_interior() {
    let layout = Layout::new(3, 2, 3).unwrap();
    let sn = layout.n_states;
    let mut p = vec![0.0; layout.dim()];
    for t in 0..layout.n_triples() {
        p[t * sn + (t % sn)] = 1.0;
    }
    let p_hat = Transitions { layout, p };
    let eps = vec![0.05; layout.n_triples()];
    let poly = build_occupancy_polytope(layout, 0, &p_hat, &eps).unwrap();
    let v = interior_init(&poly).unwrap();
    assert!(poly.polytope.is_strictly_interior(&v));
    assert!(poly.polytope.equality_residual(&v) <= 1e-9);
}

#[test]
fn epoch_count_is_logarithmic() {
    let layout = Layout::new(2, 2, 2).unwrap();
    let k = 600;
    let (_, _, tr) = reduction_run(7, 0, layout, k, None).unwrap();
    let hsa = (layout.n_triples()) as f64;
    let bound = 2.0 * hsa * (k as f64).log2() + hsa;
    assert!((tr.epochs.len() as f64) <= bound, "{} epochs", tr.epochs.len());
    assert_eq!(tr.episodes.len(), k);
    // epochs tile the episodes
    for w in tr.epochs.windows(2) {
        assert!(w[1].k_start > w[0].k_start);
    }
}
