//! Experiment execution: one trace per replicate plus a summary.

use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Exp1};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::barrier::Polytope;
use crate::dlb::{self, DlbInstance, DlbRound};
use crate::error::{Error, Result};
use crate::exp2::Exp2Learner;
use crate::mdp::{self, FiniteMdp, Layout};
use crate::omd::{default_eta0, OmdLearner};
use crate::reduction::{self, ReductionConfig, RoundCheck, SimulatedEnvironment};
use crate::rng::{stream, Stream, StreamRng};
use crate::trace::{self, Trace, TraceRow};
use crate::Vector;

use super::config::{ExperimentSpec, LearnerParams, Mode, RoundCheckMode};
use super::generate::{generate_losses, generate_mdp, generate_vector_losses};
use super::summary::{summarize_traces, CheckEntry, SummaryReport};

/// Relative slack allowed on the learning-rate sandwich.
const RATE_SLACK: f64 = 1e-12;

/// What one replicate produced.
#[derive(Debug, Clone)]
pub struct ReplicateOutput {
    pub trace: Trace,
    pub eta0: f64,
    pub epochs: Option<usize>,
    /// Inline assertions; any failure makes the run fail.
    pub checks: Vec<CheckEntry>,
    /// Informational entries, such as confidence coverage.
    pub notes: Vec<CheckEntry>,
    pub constants: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: SummaryReport,
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

/// `ε_t = scale·β/√t` in every coordinate, `t` 1-based.
pub fn decaying_eps(dim: usize, beta: f64, scale: f64, rounds: usize) -> Vec<Vector> {
    (1..=rounds)
        .map(|t| Vector::from_element(dim, scale * beta / (t as f64).sqrt()))
        .collect()
}

/// `Σ_t (ẑ_t·ε_t)²` for simplex-valued plays, `H = 1`, floored at `H`.
pub fn honest_budget(eps: &[Vector]) -> f64 {
    let e: f64 = eps.iter().map(|e| e.max().powi(2)).sum();
    e.max(1.0)
}

/// The first `dim` points are the standard basis; the rest are uniform on
/// the simplex.
pub fn exp2_points(dim: usize, n_points: usize, rng: &mut StreamRng) -> Vec<Vector> {
    let mut pts: Vec<Vector> = (0..dim)
        .map(|i| Vector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    while pts.len() < n_points {
        let v = Vector::from_fn(dim, |_, _| Exp1.sample(rng));
        let s = v.sum();
        pts.push(v / s);
    }
    pts
}

fn rate_check(name: &str, etas: impl Iterator<Item = (f64, f64)>) -> CheckEntry {
    // margin: distance to the nearer side of [η₀, 2η₀], relative to η₀
    let mut margin = f64::INFINITY;
    let mut worst = String::new();
    for (i, (eta0, eta)) in etas.enumerate() {
        let m = (eta / eta0 - 1.0).min(2.0 - eta / eta0);
        if m < margin {
            margin = m;
            worst = format!("round {}: eta/eta0 = {:.6}", i + 1, eta / eta0);
        }
    }
    CheckEntry::new(name, margin >= -RATE_SLACK, margin, worst)
}

fn bandit_rows(rounds: &[DlbRound], cum: &[f64]) -> Vec<TraceRow> {
    rounds
        .iter()
        .zip(cum)
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
        .collect()
}

fn eta0_for(spec: &ExperimentSpec, default: f64) -> f64 {
    match spec.learner {
        LearnerParams::Custom => spec.eta0.unwrap_or(default),
        LearnerParams::Defaults => default,
    }
}

fn run_dlb_synthetic(spec: &ExperimentSpec, r: u32) -> Result<ReplicateOutput> {
    let t = spec.rounds;
    let domain = Polytope::capped_simplex(spec.dim, spec.cap)?;
    let eps = decaying_eps(spec.dim, spec.beta, spec.eps_scale, t);
    let b_budget = honest_budget(&eps);
    let inst = DlbInstance::new(domain.clone(), 1.0, spec.beta, b_budget, t)?;
    let theta = domain.n_inequalities() as f64;
    let p = (domain.dim() - domain.n_equalities()) as f64;
    let eta0 = eta0_for(spec, default_eta0(theta, p, 1.0, b_budget, t as f64));
    let losses = generate_vector_losses(spec.loss_kind(), spec.dim, t, &mut stream(spec.seed, 0, Stream::Losses));
    let mut learner = OmdLearner::new(&inst, eta0, stream(spec.seed, r, Stream::Learner))?;
    let mut adv = stream(spec.seed, r, Stream::Adversary);
    let rounds = dlb::play(&inst, &mut learner, spec.adversary, &losses, &eps, &mut adv)?;
    let cum = dlb::cumulative_regret(&rounds, &domain)?;
    let energy = dlb::perturbation_energy(&rounds);
    let mut checks = vec![rate_check("learning_rate_sandwich", rounds.iter().map(|x| (eta0, x.eta)))];
    checks.push(CheckEntry::new(
        "perturbation_energy",
        energy <= b_budget * (1.0 + 1e-12),
        b_budget - energy,
        format!("energy {energy:.6} <= B {b_budget:.6}"),
    ));
    Ok(ReplicateOutput {
        trace: Trace {
            dim: spec.dim,
            with_epochs: false,
            rows: bandit_rows(&rounds, &cum),
        },
        eta0,
        epochs: None,
        checks,
        notes: Vec::new(),
        constants: serde_json::json!({
            "d": spec.dim, "h_norm": 1.0, "beta": spec.beta, "b_budget": b_budget,
            "theta": theta, "p": p,
        }),
    })
}

fn run_exp2(spec: &ExperimentSpec, r: u32) -> Result<ReplicateOutput> {
    let t = spec.rounds;
    let points = exp2_points(spec.dim, spec.n_points, &mut stream(spec.seed, 0, Stream::Instance));
    let domain = Polytope::probability_simplex(spec.dim)?;
    let eps = decaying_eps(spec.dim, spec.beta, spec.eps_scale, t);
    let b_budget = honest_budget(&eps);
    let inst = DlbInstance::new(domain, 1.0, spec.beta, b_budget, t)?;
    let mut learner = Exp2Learner::with_defaults(points.clone(), 1.0, spec.beta, t, stream(spec.seed, r, Stream::Learner))?;
    if spec.learner == LearnerParams::Custom {
        let (mu, gamma) = (learner.mu().to_vec(), learner.gamma());
        learner = Exp2Learner::new(points.clone(), spec.eta0.unwrap_or(1.0), gamma, mu, stream(spec.seed, r, Stream::Learner))?;
    }
    let eta = dlb::DlbLearner::eta(&learner);
    let losses = generate_vector_losses(spec.loss_kind(), spec.dim, t, &mut stream(spec.seed, 0, Stream::Losses));
    let mut adv = stream(spec.seed, r, Stream::Adversary);
    let rounds = dlb::play(&inst, &mut learner, spec.adversary, &losses, &eps, &mut adv)?;
    // the comparator ranges over the finite action set
    let mut cum_loss = Vector::zeros(spec.dim);
    let mut played = 0.0;
    let cum: Vec<f64> = rounds
        .iter()
        .map(|x| {
            cum_loss += &x.loss_vec;
            played += x.z_hat.dot(&x.loss_vec);
            played - points.iter().map(|p| p.dot(&cum_loss)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ReplicateOutput {
        trace: Trace {
            dim: spec.dim,
            with_epochs: false,
            rows: bandit_rows(&rounds, &cum),
        },
        eta0: eta,
        epochs: None,
        checks: Vec::new(),
        notes: Vec::new(),
        constants: serde_json::json!({
            "d": spec.dim, "n_points": points.len(), "eta": eta, "gamma": learner.gamma(),
            "lambda": learner.lambda(), "beta": spec.beta,
        }),
    })
}

/// The instance used by every replicate of an MDP run.
pub fn experiment_mdp(spec: &ExperimentSpec) -> Result<FiniteMdp> {
    match &spec.mdp_file {
        Some(p) => mdp::read_mdp_file(p),
        None => {
            let layout = Layout::new(spec.n_states, spec.n_actions, spec.horizon)?;
            generate_mdp(spec.mdp_kind, layout, &mut stream(spec.seed, 0, Stream::Instance))
        }
    }
}

/// The loss sequence shared by every replicate of an MDP run.
pub fn experiment_losses(spec: &ExperimentSpec, layout: Layout) -> Result<Vec<Vector>> {
    match &spec.loss_file {
        Some(p) => {
            let losses = mdp::read_losses(std::fs::File::open(p)?)?;
            if losses.len() < spec.rounds {
                return Err(Error::Validation(format!(
                    "loss file has {} rows but rounds = {}",
                    losses.len(),
                    spec.rounds
                )));
            }
            if losses[0].len() != layout.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "loss file has {} columns, instance has {} cells",
                    losses[0].len(),
                    layout.dim()
                )));
            }
            Ok(losses[..spec.rounds].to_vec())
        }
        None => Ok(generate_losses(
            spec.loss_kind(),
            layout,
            spec.rounds,
            spec.switch_period,
            &mut stream(spec.seed, 0, Stream::Losses),
        )),
    }
}

fn run_mdp(spec: &ExperimentSpec, r: u32) -> Result<ReplicateOutput> {
    let mdp = experiment_mdp(spec)?;
    let layout = mdp.layout();
    let losses = experiment_losses(spec, layout)?;
    let mut cfg = ReductionConfig::new(layout, spec.rounds);
    if let Some(d) = spec.delta {
        cfg.delta = d;
    }
    if spec.learner == LearnerParams::Custom {
        cfg.eta0 = spec.eta0;
    }
    cfg.round_check = match spec.round_check {
        RoundCheckMode::Abort => RoundCheck::Abort,
        RoundCheckMode::Record => RoundCheck::Record,
    };
    let mut env = SimulatedEnvironment::new(mdp.clone(), stream(spec.seed, r, Stream::Environment));
    let mut rng = stream(spec.seed, r, Stream::Learner);
    let tr = reduction::run_reduction(&mut env, &losses, &cfg, &mut rng, Some(&mdp.transitions))?;

    let mut cum_loss = Vector::zeros(layout.dim());
    let mut played = 0.0;
    let mut rows = Vec::with_capacity(tr.episodes.len());
    for (rec, loss) in tr.episodes.iter().zip(&losses) {
        cum_loss += loss;
        played += rec.loss_scalar;
        let best = mdp::best_policy_hindsight(&mdp.transitions, mdp.start, &cum_loss).1;
        let e = &tr.epochs[rec.epoch - 1];
        rows.push(TraceRow {
            t: rec.k,
            y: rec.y.iter().copied().collect(),
            z_hat: rec.z_hat.iter().copied().collect(),
            eps: tr.eps_cells(rec).iter().copied().collect(),
            loss_scalar: rec.loss_scalar,
            eta: rec.eta,
            cum_regret: played - best,
            epoch: Some((rec.epoch, e.eps_max)),
        });
    }

    let invalid: Vec<usize> = tr
        .episodes
        .iter()
        .filter(|e| e.report.as_ref().is_some_and(|r| !r.passed()))
        .map(|e| e.k)
        .collect();
    let mut checks = vec![CheckEntry::new(
        "round_validity",
        invalid.is_empty(),
        -(invalid.len() as f64),
        match invalid.first() {
            Some(k) => format!("{} invalid rounds, first at episode {k}", invalid.len()),
            None => "all rounds valid".into(),
        },
    )];
    checks.push(rate_check(
        "learning_rate_sandwich",
        tr.episodes.iter().map(|e| (tr.epochs[e.epoch - 1].eta0, e.eta)),
    ));
    let bound = reduction::epoch_energy_bound(layout, spec.rounds, cfg.delta);
    let worst = tr.epochs.iter().map(|e| e.energy).fold(0.0, f64::max);
    checks.push(CheckEntry::new(
        "epoch_energy",
        worst <= bound,
        bound - worst,
        format!("max epoch energy {worst:.4} <= {bound:.4}"),
    ));
    let covered = tr
        .epochs
        .iter()
        .filter(|e| reduction::coverage_holds(&mdp.transitions, e))
        .count();
    let notes = vec![CheckEntry::new(
        "confidence_coverage",
        covered == tr.epochs.len(),
        (covered as f64) - tr.epochs.len() as f64,
        format!("{covered}/{} epochs covered", tr.epochs.len()),
    )];
    Ok(ReplicateOutput {
        trace: Trace {
            dim: layout.dim(),
            with_epochs: true,
            rows,
        },
        eta0: tr.epochs[0].eta0,
        epochs: Some(tr.epochs.len()),
        checks,
        notes,
        constants: serde_json::to_value(tr.constants).unwrap_or_default(),
    })
}

/// Runs replicate `r` in memory.
pub fn run_replicate(spec: &ExperimentSpec, r: usize) -> Result<ReplicateOutput> {
    let rid = r as u32;
    let out = match spec.mode {
        Mode::DlbSynthetic => run_dlb_synthetic(spec, rid),
        Mode::Exp2Reference => run_exp2(spec, rid),
        Mode::MdpReduction => run_mdp(spec, rid),
    };
    out.map_err(|e| Error::InReplicate {
        replicate: r,
        source: Box::new(e),
    })
}

fn merge(name_order: &mut Vec<String>, acc: &mut Vec<CheckEntry>, r: usize, e: &CheckEntry) {
    match acc.iter_mut().find(|a| a.name == e.name) {
        Some(a) => {
            a.passed &= e.passed;
            if e.margin < a.margin {
                a.margin = e.margin;
                a.detail = format!("replicate {r}: {}", e.detail);
            }
        }
        None => {
            name_order.push(e.name.clone());
            let mut e = e.clone();
            e.detail = format!("replicate {r}: {}", e.detail);
            acc.push(e);
        }
    }
}

/// Runs every replicate and returns their outputs in replicate order.
pub fn run_replicates(spec: &ExperimentSpec) -> Result<Vec<ReplicateOutput>> {
    spec.validate()?;
    #[cfg(feature = "parallel")]
    let outs: Vec<Result<ReplicateOutput>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, r))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outs: Vec<Result<ReplicateOutput>> = (0..spec.replicates).map(|r| run_replicate(spec, r)).collect();
    outs.into_iter().collect()
}

/// Summary of replicate outputs, with the checker table.
pub fn build_summary(spec: &ExperimentSpec, outs: &[ReplicateOutput]) -> Result<SummaryReport> {
    let traces: Vec<Trace> = outs.iter().map(|o| o.trace.clone()).collect();
    let mut summary = summarize_traces(&traces)?;
    summary.mode = serde_json::to_value(spec.mode).ok().and_then(|v| v.as_str().map(String::from));
    for (rep, o) in summary.replicates.iter_mut().zip(outs) {
        rep.eta0 = Some(o.eta0);
    }
    let mut order = Vec::new();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for (r, o) in outs.iter().enumerate() {
        for c in &o.checks {
            merge(&mut order, &mut checks, r, c);
        }
        for c in &o.notes {
            merge(&mut order, &mut notes, r, c);
        }
    }
    summary.assertion_failed = checks.iter().any(|c| !c.passed);
    checks.extend(notes);
    summary.checks = checks;
    summary.constants = outs.first().map(|o| o.constants.clone());
    Ok(summary)
}

fn gnuplot_script(dim: usize, files: &[String]) -> String {
    let col = 1 + 3 * dim + 3;
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale xy\n\
         set xlabel 'round'\n\
         set ylabel 'cumulative regret'\n\
         plot for [f in '{}'] f using 1:{col} with lines title f\n",
        files.join(" ")
    )
}

/// Runs the experiment and writes `trace_rep{r}.csv`, `summary.json` and
/// `regret.gp` into `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let outs = run_replicates(spec)?;
    let summary = build_summary(spec, &outs)?;
    write_outputs(&spec.out, &outs, &summary)
}

pub fn write_outputs(dir: &Path, outs: &[ReplicateOutput], summary: &SummaryReport) -> Result<RunOutcome> {
    std::fs::create_dir_all(dir)?;
    let mut trace_paths = Vec::new();
    let mut names = Vec::new();
    for (r, o) in outs.iter().enumerate() {
        let name = format!("trace_rep{r}.csv");
        let path = dir.join(&name);
        trace::write_trace_file(&path, &o.trace)?;
        trace_paths.push(path);
        names.push(name);
    }
    let summary_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&summary_path, json + "\n")?;
    let dim = outs.first().map_or(0, |o| o.trace.dim);
    std::fs::write(dir.join("regret.gp"), gnuplot_script(dim, &names))?;
    Ok(RunOutcome {
        summary: summary.clone(),
        trace_paths,
        summary_path,
    })
}
