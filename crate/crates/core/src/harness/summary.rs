//! Regret summaries computed from trace files alone.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{read_trace_file, Trace};

/// Floor applied to cumulative regret before taking logs.
pub const LOG_FLOOR: f64 = 1e-9;

/// One row of a checker table; `margin` is bound minus measurement, so a
/// negative margin is a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, passed: bool, margin: f64, detail: impl Into<String>) -> Self {
        CheckEntry {
            name: name.into(),
            passed,
            margin,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub replicate: usize,
    pub rounds: usize,
    pub final_regret: f64,
    pub slope: f64,
    /// Initial learning rate actually used (first epoch for reductions).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSummary {
    pub replicate: usize,
    pub epoch: usize,
    pub first_round: usize,
    pub last_round: usize,
    pub eps_max: f64,
    /// Growth of cumulative regret over the epoch.
    pub regret_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub replicates: Vec<ReplicateSummary>,
    pub median_final_regret: f64,
    pub q1_final_regret: f64,
    pub q3_final_regret: f64,
    pub median_slope: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epochs: Vec<EpochSummary>,
    pub checks: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<serde_json::Value>,
    pub assertion_failed: bool,
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope of `cum[t-1]` against `t` over `t ∈ [T/10, T]`.
pub fn regret_slope(cum: &[f64]) -> f64 {
    let big_t = cum.len();
    let lo = (big_t / 10).max(1);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in lo..=big_t {
        xs.push((t as f64).ln());
        ys.push(cum[t - 1].max(LOG_FLOOR).ln());
    }
    ols_slope(&xs, &ys)
}

/// Linear-interpolation quantile of `values` at `q ∈ [0,1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Summary of in-memory traces, listed in replicate order.
pub fn summarize_traces(traces: &[Trace]) -> Result<SummaryReport> {
    let Some(first) = traces.first() else {
        return Err(Error::InvalidArgument("no traces to summarise".into()));
    };
    if let Some(i) = traces
        .iter()
        .position(|t| t.dim != first.dim || t.with_epochs != first.with_epochs)
    {
        return Err(Error::SchemaMismatch(format!(
            "trace {i} does not share the schema of trace 0"
        )));
    }
    let mut reps = Vec::new();
    let mut epochs = Vec::new();
    for (r, tr) in traces.iter().enumerate() {
        let cum: Vec<f64> = tr.rows.iter().map(|row| row.cum_regret).collect();
        let final_regret = cum.last().copied().unwrap_or(0.0);
        let mut n_epochs = None;
        if tr.with_epochs {
            let mut start = 0;
            while start < tr.rows.len() {
                let (e, eps_max) = tr.rows[start].epoch.unwrap_or((0, 0.0));
                let mut end = start;
                while end + 1 < tr.rows.len() && tr.rows[end + 1].epoch.map(|x| x.0) == Some(e) {
                    end += 1;
                }
                let before = if start == 0 { 0.0 } else { cum[start - 1] };
                epochs.push(EpochSummary {
                    replicate: r,
                    epoch: e,
                    first_round: tr.rows[start].t,
                    last_round: tr.rows[end].t,
                    eps_max,
                    regret_increment: cum[end] - before,
                });
                start = end + 1;
            }
            n_epochs = tr.rows.last().and_then(|row| row.epoch.map(|x| x.0));
        }
        reps.push(ReplicateSummary {
            replicate: r,
            rounds: tr.rows.len(),
            final_regret,
            slope: regret_slope(&cum),
            eta0: None,
            epochs: n_epochs,
        });
    }
    let finals: Vec<f64> = reps.iter().map(|r| r.final_regret).collect();
    let slopes: Vec<f64> = reps.iter().map(|r| r.slope).collect();
    Ok(SummaryReport {
        mode: None,
        median_final_regret: median(&finals),
        q1_final_regret: quantile(&finals, 0.25),
        q3_final_regret: quantile(&finals, 0.75),
        median_slope: median(&slopes),
        replicates: reps,
        epochs,
        checks: Vec::new(),
        constants: None,
        assertion_failed: false,
    })
}

/// Reads trace files and summarises them.
pub fn summarize<P: AsRef<Path>>(paths: &[P]) -> Result<SummaryReport> {
    let traces = paths
        .iter()
        .map(|p| read_trace_file(p.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    summarize_traces(&traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRow;

    fn synthetic(cum: impl Fn(f64) -> f64, n: usize) -> Trace {
        Trace {
            dim: 1,
            with_epochs: false,
            rows: (1..=n)
                .map(|t| TraceRow {
                    t,
                    y: vec![0.0],
                    z_hat: vec![0.0],
                    eps: vec![0.0],
                    loss_scalar: 0.0,
                    eta: 1.0,
                    cum_regret: cum(t as f64),
                    epoch: None,
                })
                .collect(),
        }
    }

    #[test]
    fn slopes_of_constructed_curves() {
        let lin = summarize_traces(&[synthetic(|t| t, 1000)]).unwrap();
        assert!((lin.median_slope - 1.0).abs() <= 0.02);
        let root = summarize_traces(&[synthetic(f64::sqrt, 1000)]).unwrap();
        assert!((root.median_slope - 0.5).abs() <= 0.02);
    }

    #[test]
    fn quartiles() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(median(&v), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn mixed_schema_rejected() {
        let mut b = synthetic(|t| t, 10);
        b.dim = 2;
        for r in &mut b.rows {
            r.y.push(0.0);
            r.z_hat.push(0.0);
            r.eps.push(0.0);
        }
        assert!(matches!(
            summarize_traces(&[synthetic(|t| t, 10), b]),
            Err(Error::SchemaMismatch(_))
        ));
    }
}
