//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use dlb_core::barrier::{BarrierSpec, Polytope, SubspaceBasis};
use dlb_core::mdp::{Layout, Policy, Transitions};
use dlb_core::rng::StreamRng;
use dlb_core::{Matrix, Vector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Every trajectory with positive probability: `(prob, cells, states)`.
pub fn trajectories(policy: &Policy, t: &Transitions, start: usize) -> Vec<(f64, Vec<usize>, Vec<usize>)> {
    let l = t.layout;
    let mut out = vec![(1.0, Vec::new(), vec![start])];
    for h in 0..l.horizon {
        let mut next = Vec::new();
        for (p, cells, states) in out {
            let s = *states.last().unwrap();
            for a in 0..l.n_actions {
                for s2 in 0..l.n_states {
                    let q = p * policy.pi[(h * l.n_states + s) * l.n_actions + a]
                        * t.p[((h * l.n_states + s) * l.n_actions + a) * l.n_states + s2];
                    if q > 0.0 {
                        let mut c = cells.clone();
                        c.push(((h * l.n_states + s) * l.n_actions + a) * l.n_states + s2);
                        let mut st = states.clone();
                        st.push(s2);
                        next.push((q, c, st));
                    }
                }
            }
        }
        out = next;
    }
    out
}

pub fn enumerated_occupancy(policy: &Policy, t: &Transitions, start: usize) -> Vector {
    let mut x = Vector::zeros(t.layout.dim());
    for (p, cells, _) in trajectories(policy, t, start) {
        for c in cells {
            x[c] += p;
        }
    }
    x
}

pub fn dirichlet(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn random_policy(layout: Layout, rng: &mut StreamRng) -> Policy {
    let pi = (0..layout.horizon * layout.n_states)
        .flat_map(|_| dirichlet(layout.n_actions, rng))
        .collect();
    Policy { layout, pi }
}

pub fn random_transitions(layout: Layout, rng: &mut StreamRng) -> Transitions {
    let p = (0..layout.n_triples()).flat_map(|_| dirichlet(layout.n_states, rng)).collect();
    Transitions { layout, p }
}

/// A bounded polytope containing the origin: the box `[-3, 3]ⁿ` and random
/// halfspaces `a·x ≤ r‖a‖` with `r ∈ [0.3, 1]`, plus one random hyperplane
/// through the origin when `equality`.
pub fn random_polytope(n: usize, extra: usize, equality: bool, rng: &mut StreamRng) -> Polytope {
    let m = 2 * n + extra;
    let mut a = Matrix::zeros(m, n);
    let mut b = Vector::zeros(m);
    for i in 0..n {
        a[(2 * i, i)] = 1.0;
        a[(2 * i + 1, i)] = -1.0;
        b[2 * i] = 3.0;
        b[2 * i + 1] = 3.0;
    }
    for r in 2 * n..m {
        let row = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        a.set_row(r, &row.transpose());
        b[r] = row.norm() * rng.random_range(0.3..1.0);
    }
    let (c, e) = if equality {
        let row = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (Matrix::from_row_slice(1, n, row.as_slice()), Vector::zeros(1))
    } else {
        (Matrix::zeros(0, n), Vector::zeros(0))
    };
    Polytope::with_interior_point(a, b, c, e, Vector::zeros(n)).unwrap()
}

/// A point `c + t(v - c)` on the segment from `c` to a random vertex `v`,
/// with `t ∈ [0, max_t)`.
pub fn segment_point(poly: &Polytope, c: &Vector, max_t: f64, rng: &mut StreamRng) -> Vector {
    let obj = Vector::from_fn(poly.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = poly.minimize_linear(&obj).unwrap().x;
    let t = rng.random_range(0.0..max_t);
    c + (v - c) * t
}

/// `√(gᵀ W (WᵀHW)⁻¹ Wᵀ g)` via an LU solve.
pub fn restricted_dual(bar: &BarrierSpec, basis: &SubspaceBasis, x: &Vector, g: &Vector) -> f64 {
    let w = basis.w();
    let hw = w.transpose() * bar.hessian(x).unwrap() * w;
    let wg = w.transpose() * g;
    let sol = hw.lu().solve(&wg).unwrap();
    wg.dot(&sol).sqrt()
}

pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Log-log slope over `t ∈ [T/10, T]` of a 1-based cumulative curve.
pub fn last_decade_slope(cum: &[f64]) -> f64 {
    let t_max = cum.len();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in (t_max / 10).max(1)..=t_max {
        xs.push((t as f64).ln());
        ys.push(cum[t - 1].max(1e-9).ln());
    }
    ols_slope(&xs, &ys)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Bisection for an increasing function on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
