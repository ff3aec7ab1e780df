//! Finite-horizon MDPs with losses on `(h, s, a, s′)` cells, and the
//! algebra of occupancy measures.
//!
//! Cells are laid out layer-major: the flat index of `(h, s, a, s′)` with
//! `h ∈ 1..=H` is `(((h-1)·|S| + s)·|A| + a)·|S| + s′`. Transition tensors,
//! occupancy vectors, loss vectors and trace columns all share this layout.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Sums of probability rows must be this close to 1 in instance files.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
}

impl Layout {
    pub fn new(n_states: usize, n_actions: usize, horizon: usize) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::InvalidArgument(format!(
                "sizes must be positive, got |S|={n_states} |A|={n_actions} H={horizon}"
            )));
        }
        Ok(Layout {
            n_states,
            n_actions,
            horizon,
        })
    }

    /// Number of cells `H·|S|·|A|·|S|`.
    pub fn dim(&self) -> usize {
        self.horizon * self.n_states * self.n_actions * self.n_states
    }

    /// Number of `(h, s, a)` triples.
    pub fn n_triples(&self) -> usize {
        self.horizon * self.n_states * self.n_actions
    }

    /// Flat index with a 1-based layer `h`.
    pub fn flat_index(&self, h: usize, s: usize, a: usize, s_next: usize) -> Result<usize> {
        if h == 0 || h > self.horizon || s >= self.n_states || a >= self.n_actions || s_next >= self.n_states {
            return Err(Error::IndexOutOfRange(format!(
                "cell ({h}, {s}, {a}, {s_next}) outside H={} |S|={} |A|={}",
                self.horizon, self.n_states, self.n_actions
            )));
        }
        Ok(self.cell(h - 1, s, a, s_next))
    }

    /// Inverse of [`Self::flat_index`]; the returned layer is 1-based.
    pub fn unflatten(&self, index: usize) -> Result<(usize, usize, usize, usize)> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange(format!("cell {index} of {}", self.dim())));
        }
        let (sn, na) = (self.n_states, self.n_actions);
        let s_next = index % sn;
        let rest = index / sn;
        let a = rest % na;
        let rest = rest / na;
        Ok((rest / sn + 1, rest % sn, a, s_next))
    }

    /// Flat index with a 0-based layer, unchecked.
    #[inline]
    pub fn cell(&self, h0: usize, s: usize, a: usize, s_next: usize) -> usize {
        ((h0 * self.n_states + s) * self.n_actions + a) * self.n_states + s_next
    }

    /// Index of `(h, s, a)` with a 0-based layer.
    #[inline]
    pub fn triple(&self, h0: usize, s: usize, a: usize) -> usize {
        (h0 * self.n_states + s) * self.n_actions + a
    }
}

/// `P(s′ | s, a, h)` stored in the cell layout. Rows may be all-zero (used
/// for empirical dynamics of unvisited triples).
#[derive(Debug, Clone, PartialEq)]
pub struct Transitions {
    pub layout: Layout,
    pub p: Vec<f64>,
}

impl Transitions {
    pub fn get(&self, h0: usize, s: usize, a: usize, s_next: usize) -> f64 {
        self.p[self.layout.cell(h0, s, a, s_next)]
    }

    pub fn row(&self, h0: usize, s: usize, a: usize) -> &[f64] {
        let start = self.layout.cell(h0, s, a, 0);
        &self.p[start..start + self.layout.n_states]
    }

    /// Largest `|Σ_{s′} P(s′|s,a,h) - 1|` over all triples.
    pub fn max_row_error(&self) -> f64 {
        let l = self.layout;
        let mut worst = 0.0_f64;
        for h in 0..l.horizon {
            for s in 0..l.n_states {
                for a in 0..l.n_actions {
                    let row = self.row(h, s, a);
                    let neg = row.iter().any(|&v| v < 0.0);
                    let err = (row.iter().sum::<f64>() - 1.0).abs();
                    worst = worst.max(if neg { f64::INFINITY } else { err });
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    pub transitions: Transitions,
    pub start: usize,
}

impl FiniteMdp {
    /// Validates that every row is a probability vector within `tol`.
    pub fn new(transitions: Transitions, start: usize, tol: f64) -> Result<Self> {
        let l = transitions.layout;
        if transitions.p.len() != l.dim() {
            return Err(Error::DimensionMismatch(format!(
                "transition tensor has {} entries, expected {}",
                transitions.p.len(),
                l.dim()
            )));
        }
        if start >= l.n_states {
            return Err(Error::IndexOutOfRange(format!("start state {start}")));
        }
        let err = transitions.max_row_error();
        if err > tol {
            return Err(Error::Validation(format!(
                "transition rows must be probability vectors (worst error {err:e})"
            )));
        }
        Ok(FiniteMdp { transitions, start })
    }

    pub fn layout(&self) -> Layout {
        self.transitions.layout
    }
}

/// `π(a | s, h)` indexed by [`Layout::triple`].
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub layout: Layout,
    pub pi: Vec<f64>,
}

impl Policy {
    pub fn uniform(layout: Layout) -> Self {
        Policy {
            layout,
            pi: vec![1.0 / layout.n_actions as f64; layout.n_triples()],
        }
    }

    /// Deterministic policy from `choice[h0 * |S| + s]`.
    pub fn deterministic(layout: Layout, choice: &[usize]) -> Self {
        let mut pi = vec![0.0; layout.n_triples()];
        for h in 0..layout.horizon {
            for s in 0..layout.n_states {
                pi[layout.triple(h, s, choice[h * layout.n_states + s])] = 1.0;
            }
        }
        Policy { layout, pi }
    }

    pub fn get(&self, h0: usize, s: usize, a: usize) -> f64 {
        self.pi[self.layout.triple(h0, s, a)]
    }
}

/// State distribution of every layer; `q[h0][s] = Pr[s_h = s]`.
pub fn state_marginals(policy: &Policy, transitions: &Transitions, start: usize) -> Vec<Vec<f64>> {
    let l = transitions.layout;
    let mut q = vec![vec![0.0; l.n_states]; l.horizon + 1];
    q[0][start] = 1.0;
    for h in 0..l.horizon {
        for s in 0..l.n_states {
            let qs = q[h][s];
            if qs == 0.0 {
                continue;
            }
            for a in 0..l.n_actions {
                let w = qs * policy.get(h, s, a);
                for s2 in 0..l.n_states {
                    q[h + 1][s2] += w * transitions.get(h, s, a, s2);
                }
            }
        }
    }
    q
}

/// `x(h,s,a,s′) = Pr[s_h = s, a_h = a, s_{h+1} = s′]` by forward recursion.
pub fn occupancy_from_policy(policy: &Policy, transitions: &Transitions, start: usize) -> Vector {
    let l = transitions.layout;
    let q = state_marginals(policy, transitions, start);
    let mut x = Vector::zeros(l.dim());
    for h in 0..l.horizon {
        for s in 0..l.n_states {
            for a in 0..l.n_actions {
                let w = q[h][s] * policy.get(h, s, a);
                for s2 in 0..l.n_states {
                    x[l.cell(h, s, a, s2)] = w * transitions.get(h, s, a, s2);
                }
            }
        }
    }
    x
}

/// `x(h, s, a) = Σ_{s′} x(h, s, a, s′)`, indexed by [`Layout::triple`].
pub fn triple_mass(layout: Layout, x: &Vector) -> Vec<f64> {
    let sn = layout.n_states;
    (0..layout.n_triples())
        .map(|t| x.rows(t * sn, sn).sum())
        .collect()
}

/// The policy and dynamics induced by an occupancy vector. Zero-mass
/// `(s, h)` pairs get a uniform policy row and zero-mass `(s, a, h)` triples
/// a uniform transition row.
pub fn policy_and_dynamics_from_occupancy(layout: Layout, x: &Vector) -> (Policy, Transitions) {
    let (sn, na) = (layout.n_states, layout.n_actions);
    let mass = triple_mass(layout, x);
    let mut pi = vec![0.0; layout.n_triples()];
    let mut p = vec![0.0; layout.dim()];
    for h in 0..layout.horizon {
        for s in 0..sn {
            let state_mass: f64 = (0..na).map(|a| mass[layout.triple(h, s, a)]).sum();
            for a in 0..na {
                let t = layout.triple(h, s, a);
                pi[t] = if state_mass > 0.0 {
                    mass[t] / state_mass
                } else {
                    1.0 / na as f64
                };
                for s2 in 0..sn {
                    let c = layout.cell(h, s, a, s2);
                    p[c] = if mass[t] > 0.0 {
                        x[c] / mass[t]
                    } else {
                        1.0 / sn as f64
                    };
                }
            }
        }
    }
    (Policy { layout, pi }, Transitions { layout, p })
}

/// Worst violation of each family of occupancy constraints.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OccupancyReport {
    /// `max(0, -min x)`.
    pub negativity: f64,
    pub layer_normalization: f64,
    pub start_condition: f64,
    pub flow_conservation: f64,
    pub passed: bool,
}

pub fn validate_occupancy(layout: Layout, start: usize, x: &Vector, tol: f64) -> OccupancyReport {
    let (sn, na) = (layout.n_states, layout.n_actions);
    let negativity = (-x.min()).max(0.0);
    let mass = triple_mass(layout, x);
    let out_of = |h: usize, s: usize| -> f64 { (0..na).map(|a| mass[layout.triple(h, s, a)]).sum() };
    let mut layer_normalization = 0.0_f64;
    for h in 0..layout.horizon {
        let total: f64 = (0..sn).map(|s| out_of(h, s)).sum();
        layer_normalization = layer_normalization.max((total - 1.0).abs());
    }
    let mut start_condition = 0.0_f64;
    for s in 0..sn {
        let want = if s == start { 1.0 } else { 0.0 };
        start_condition = start_condition.max((out_of(0, s) - want).abs());
    }
    let mut flow_conservation = 0.0_f64;
    for h in 1..layout.horizon {
        for s in 0..sn {
            let inflow: f64 = (0..sn)
                .flat_map(|s0| (0..na).map(move |a| (s0, a)))
                .map(|(s0, a)| x[layout.cell(h - 1, s0, a, s)])
                .sum();
            flow_conservation = flow_conservation.max((out_of(h, s) - inflow).abs());
        }
    }
    OccupancyReport {
        negativity,
        layer_normalization,
        start_condition,
        flow_conservation,
        passed: negativity <= tol
            && layer_normalization <= tol
            && start_condition <= tol
            && flow_conservation <= tol,
    }
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // round-off: the last index with positive weight
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// One episode: the trajectory's cell indicator, its aggregate loss and the
/// visited states `s_1, …, s_{H+1}`.
#[derive(Debug, Clone)]
pub struct Episode {
    pub z_hat: Vector,
    pub loss: f64,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

pub fn simulate_episode<R: Rng + ?Sized>(mdp: &FiniteMdp, policy: &Policy, loss: &Vector, rng: &mut R) -> Episode {
    let l = mdp.layout();
    let mut z_hat = Vector::zeros(l.dim());
    let mut states = vec![mdp.start];
    let mut actions = Vec::with_capacity(l.horizon);
    let mut total = 0.0;
    let mut s = mdp.start;
    for h in 0..l.horizon {
        let t = l.triple(h, s, 0);
        let a = sample_index(&policy.pi[t..t + l.n_actions], rng);
        let s2 = sample_index(mdp.transitions.row(h, s, a), rng);
        let c = l.cell(h, s, a, s2);
        z_hat[c] = 1.0;
        total += loss[c];
        actions.push(a);
        states.push(s2);
        s = s2;
    }
    Episode {
        z_hat,
        loss: total,
        states,
        actions,
    }
}

/// Deterministic policy minimising `x^{π,P}·cum_loss`, by backward dynamic
/// programming, and its value. Ties go to the lowest action.
pub fn best_policy_hindsight(transitions: &Transitions, start: usize, cum_loss: &Vector) -> (Policy, f64) {
    let l = transitions.layout;
    let (sn, na) = (l.n_states, l.n_actions);
    let mut v = vec![0.0; sn];
    let mut choice = vec![0usize; l.horizon * sn];
    for h in (0..l.horizon).rev() {
        let mut v_new = vec![0.0; sn];
        for s in 0..sn {
            let mut best = (0, f64::INFINITY);
            for a in 0..na {
                let q: f64 = (0..sn)
                    .map(|s2| transitions.get(h, s, a, s2) * (cum_loss[l.cell(h, s, a, s2)] + v[s2]))
                    .sum();
                if q < best.1 {
                    best = (a, q);
                }
            }
            choice[h * sn + s] = best.0;
            v_new[s] = best.1;
        }
        v = v_new;
    }
    (Policy::deterministic(l, &choice), v[start])
}

// ---------------------------------------------------------------------------
// Instance files
//
//     n_states = 2
//     n_actions = 2
//     horizon = 2
//     start = 0
//     P 1 0 0 = 0.9 0.1
//
// One `P h s a = …` row per triple, `h` 1-based. `#` starts a comment.
// ---------------------------------------------------------------------------

pub fn write_mdp<W: Write>(mut out: W, mdp: &FiniteMdp) -> Result<()> {
    let l = mdp.layout();
    let mut text = String::new();
    writeln!(text, "n_states = {}", l.n_states).unwrap();
    writeln!(text, "n_actions = {}", l.n_actions).unwrap();
    writeln!(text, "horizon = {}", l.horizon).unwrap();
    writeln!(text, "start = {}", mdp.start).unwrap();
    for h in 0..l.horizon {
        for s in 0..l.n_states {
            for a in 0..l.n_actions {
                let row: Vec<String> = mdp.transitions.row(h, s, a).iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(text, "P {} {s} {a} = {}", h + 1, row.join(" ")).unwrap();
            }
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_mdp_file(path: &Path, mdp: &FiniteMdp) -> Result<()> {
    write_mdp(std::fs::File::create(path)?, mdp)
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn parse_mdp(text: &str) -> Result<FiniteMdp> {
    let mut header: [Option<usize>; 4] = [None; 4];
    let names = ["n_states", "n_actions", "horizon", "start"];
    let mut rows: Vec<(usize, usize, Vec<usize>, Vec<f64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            let col = line.len() - line.trim_start().len() + 1;
            return Err(parse_err(lineno, col, "expected 'key = value'"));
        };
        let (lhs, rhs) = (&line[..eq], &line[eq + 1..]);
        let key_col = lhs.len() - lhs.trim_start().len() + 1;
        let rhs_col = eq + 2 + (rhs.len() - rhs.trim_start().len());
        let words: Vec<&str> = lhs.split_whitespace().collect();
        if words.first() == Some(&"P") {
            if words.len() != 4 {
                return Err(parse_err(lineno, key_col, "expected 'P h s a = probabilities'"));
            }
            let idx: Vec<usize> = words[1..]
                .iter()
                .map(|w| w.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(lineno, key_col, "non-integer index in P row"))?;
            let probs: Vec<f64> = rhs
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(lineno, rhs_col, "non-numeric probability"))?;
            rows.push((lineno, rhs_col, idx, probs));
        } else if words.len() == 1 {
            let Some(k) = names.iter().position(|n| *n == words[0]) else {
                return Err(parse_err(lineno, key_col, format!("unknown key '{}'", words[0])));
            };
            let v = rhs
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(lineno, rhs_col, format!("'{}' must be a non-negative integer", names[k])))?;
            header[k] = Some(v);
        } else {
            return Err(parse_err(lineno, key_col, "expected 'key = value'"));
        }
    }
    let get = |k: usize| header[k].ok_or_else(|| Error::Validation(format!("missing key '{}'", names[k])));
    let layout = Layout::new(get(0)?, get(1)?, get(2)?)?;
    let start = get(3)?;
    let mut p = vec![f64::NAN; layout.dim()];
    for (lineno, col, idx, probs) in rows {
        let (h, s, a) = (idx[0], idx[1], idx[2]);
        let base = layout
            .flat_index(h, s, a, 0)
            .map_err(|e| parse_err(lineno, 1, e.to_string()))?;
        if probs.len() != layout.n_states {
            return Err(parse_err(lineno, col, format!("expected {} probabilities", layout.n_states)));
        }
        if probs.iter().any(|&v| v < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOL {
            return Err(parse_err(lineno, col, "row is not a probability vector"));
        }
        p[base..base + layout.n_states].copy_from_slice(&probs);
    }
    if let Some(missing) = p.iter().position(|v| v.is_nan()) {
        let (h, s, a, _) = layout.unflatten(missing)?;
        return Err(Error::Validation(format!("missing row 'P {h} {s} {a}'")));
    }
    FiniteMdp::new(Transitions { layout, p }, start, ROW_SUM_TOL)
}

pub fn read_mdp_file(path: &Path) -> Result<FiniteMdp> {
    parse_mdp(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Loss sequences: CSV with header `episode,l0,…,l{d-1}`, one row per episode.
// ---------------------------------------------------------------------------

pub fn write_losses<W: Write>(out: W, losses: &[Vector]) -> Result<()> {
    let dim = losses.first().map_or(0, |l| l.len());
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["episode".to_string()];
    head.extend((0..dim).map(|i| format!("l{i}")));
    w.write_record(&head).map_err(|e| Error::Io(e.to_string()))?;
    for (k, l) in losses.iter().enumerate() {
        let mut rec = vec![(k + 1).to_string()];
        rec.extend(l.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_losses<R: Read>(input: R) -> Result<Vec<Vector>> {
    let mut rd = csv::Reader::from_reader(input);
    let head = rd.headers().map_err(|e| Error::SchemaMismatch(e.to_string()))?.clone();
    let dim = head.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("episode".to_string())
        .chain((0..dim).map(|i| format!("l{i}")))
        .collect();
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::SchemaMismatch(format!("unexpected loss header {head:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        let mut v = Vector::zeros(dim);
        for j in 0..dim {
            let val = rec
                .get(j + 1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| parse_err(i + 2, j + 2, "expected a number"))?;
            if !(0.0..=1.0).contains(&val) {
                return Err(parse_err(i + 2, j + 2, "losses must lie in [0, 1]"));
            }
            v[j] = val;
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flip(layout: Layout) -> Transitions {
        let mut p = vec![0.0; layout.dim()];
        for h in 0..layout.horizon {
            for s in 0..2 {
                for a in 0..layout.n_actions {
                    p[layout.cell(h, s, a, 1 - s)] = 1.0;
                }
            }
        }
        Transitions { layout, p }
    }

    #[test]
    fn flat_index_bounds() {
        let l = Layout::new(3, 2, 4).unwrap();
        assert_eq!(l.flat_index(1, 0, 0, 0).unwrap(), 0);
        assert_eq!(l.flat_index(4, 2, 1, 2).unwrap(), l.dim() - 1);
        assert!(l.flat_index(0, 0, 0, 0).is_err());
        assert!(l.flat_index(5, 0, 0, 0).is_err());
        for i in 0..l.dim() {
            let (h, s, a, s2) = l.unflatten(i).unwrap();
            assert_eq!(l.flat_index(h, s, a, s2).unwrap(), i);
        }
    }

    #[test]
    fn deterministic_chain_occupancy() {
        let l = Layout::new(2, 1, 1).unwrap();
        let x = occupancy_from_policy(&Policy::uniform(l), &flip(l), 0);
        assert_eq!(x[l.cell(0, 0, 0, 1)], 1.0);
        assert_eq!(x.sum(), 1.0);
    }

    #[test]
    fn flip_marginals_and_validation() {
        let l = Layout::new(2, 2, 3).unwrap();
        let mut t = flip(l);
        // action 1 stays in place
        for h in 0..3 {
            for s in 0..2 {
                t.p[l.cell(h, s, 1, 1 - s)] = 0.0;
                t.p[l.cell(h, s, 1, s)] = 1.0;
            }
        }
        let q = state_marginals(&Policy::uniform(l), &t, 0);
        assert_relative_eq!(q[1][0], 0.5);
        assert_relative_eq!(q[1][1], 0.5);
        let x = occupancy_from_policy(&Policy::uniform(l), &t, 0);
        assert!(validate_occupancy(l, 0, &x, 1e-12).passed);
        assert_relative_eq!(x.sum(), 3.0, epsilon = 1e-15);

        let zero = validate_occupancy(l, 0, &Vector::zeros(l.dim()), 1e-10);
        assert!(!zero.passed);
        assert_relative_eq!(zero.layer_normalization, 1.0);

        let mut bad = x.clone();
        bad[l.cell(1, 0, 0, 1)] += 1e-3;
        let rep = validate_occupancy(l, 0, &bad, 1e-10);
        assert!(!rep.passed);
        assert_relative_eq!(rep.flow_conservation, 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn extraction_fills_unreachable_uniformly() {
        let l = Layout::new(2, 2, 1).unwrap();
        let x = occupancy_from_policy(&Policy::deterministic(l, &[0, 0]), &flip(l), 0);
        let (pi, p) = policy_and_dynamics_from_occupancy(l, &x);
        assert_eq!(pi.get(0, 0, 0), 1.0);
        assert_eq!(pi.get(0, 1, 0), 0.5);
        assert_eq!(p.get(0, 0, 0, 1), 1.0);
        assert_eq!(p.get(0, 0, 1, 0), 0.5);
    }

    #[test]
    fn one_step_hindsight() {
        let l = Layout::new(1, 2, 1).unwrap();
        let t = Transitions { layout: l, p: vec![1.0, 1.0] };
        let loss = Vector::from_vec(vec![0.3, 0.7]);
        let (pi, v) = best_policy_hindsight(&t, 0, &loss);
        assert_eq!(pi.get(0, 0, 0), 1.0);
        assert_relative_eq!(v, 0.3);
        assert_eq!(best_policy_hindsight(&t, 0, &Vector::zeros(2)).1, 0.0);
    }

    #[test]
    fn deterministic_episode() {
        let l = Layout::new(2, 1, 2).unwrap();
        let mdp = FiniteMdp::new(flip(l), 0, 1e-12).unwrap();
        let loss = Vector::from_fn(l.dim(), |i, _| i as f64 / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ep = simulate_episode(&mdp, &Policy::uniform(l), &loss, &mut rng);
        let x = occupancy_from_policy(&Policy::uniform(l), &mdp.transitions, 0);
        assert_eq!(ep.z_hat, x);
        assert_relative_eq!(ep.loss, loss.dot(&x));
        assert_eq!(ep.states, vec![0, 1, 0]);
    }

    #[test]
    fn instance_file_roundtrip_and_errors() {
        let l = Layout::new(2, 2, 2).unwrap();
        let mut p = vec![0.5; l.dim()];
        p[0] = 0.25;
        p[1] = 0.75;
        let mdp = FiniteMdp::new(Transitions { layout: l, p }, 1, 1e-12).unwrap();
        let mut buf = Vec::new();
        write_mdp(&mut buf, &mdp).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(parse_mdp(&text).unwrap(), mdp);

        let bad = text.replacen("2.5000000000000000e-1", "2.6000000000000000e-1", 1);
        assert_ne!(bad, text);
        assert!(matches!(parse_mdp(&bad), Err(Error::Parse { line: 5, .. })));
        let typo = text.replace("horizon", "horizn");
        assert!(matches!(parse_mdp(&typo), Err(Error::Parse { line: 3, column: 1, .. })));
    }

    #[test]
    fn losses_roundtrip() {
        let ls = vec![Vector::from_vec(vec![0.0, 0.5]), Vector::from_vec(vec![1.0, 0.1])];
        let mut buf = Vec::new();
        write_losses(&mut buf, &ls).unwrap();
        assert_eq!(read_losses(buf.as_slice()).unwrap(), ls);
        assert!(read_losses("episode,l0\n1,1.5\n".as_bytes()).is_err());
    }
}
