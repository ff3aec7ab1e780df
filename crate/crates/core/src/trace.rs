//! Per-round trace files.
//!
//! One CSV row per round with columns `t, y0.., zhat0.., eps0.., loss_scalar,
//! eta, cum_regret`, optionally followed by `epoch, eps_max` for traces
//! produced by the MDP reduction. Floats are written with 17 significant
//! digits so that a trace round-trips bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub y: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub eps: Vec<f64>,
    pub loss_scalar: f64,
    pub eta: f64,
    pub cum_regret: f64,
    pub epoch: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dim: usize,
    pub with_epochs: bool,
    pub rows: Vec<TraceRow>,
}

pub fn header(dim: usize, with_epochs: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["y", "zhat", "eps"] {
        h.extend((0..dim).map(|i| format!("{prefix}{i}")));
    }
    h.extend(["loss_scalar", "eta", "cum_regret"].map(String::from));
    if with_epochs {
        h.extend(["epoch", "eps_max"].map(String::from));
    }
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e.to_string()),
        other => Error::SchemaMismatch(format!("{other:?}")),
    }
}

pub fn write_trace<W: Write>(out: W, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace.dim, trace.with_epochs)).map_err(csv_err)?;
    for r in &trace.rows {
        if r.y.len() != trace.dim || r.z_hat.len() != trace.dim || r.eps.len() != trace.dim {
            return Err(Error::DimensionMismatch(format!("trace row {}", r.t)));
        }
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.y.iter().chain(&r.z_hat).chain(&r.eps).map(|&v| fmt(v)));
        rec.extend([fmt(r.loss_scalar), fmt(r.eta), fmt(r.cum_regret)]);
        if trace.with_epochs {
            let (epoch, eps_max) = r.epoch.ok_or_else(|| {
                Error::Validation(format!("trace row {} lacks epoch columns", r.t))
            })?;
            rec.extend([epoch.to_string(), fmt(eps_max)]);
        }
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &Trace) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_trace(std::io::BufWriter::new(f), trace)
}

/// Reads a trace, inferring the dimension from the header and rejecting any
/// header that does not match the expected layout.
pub fn read_trace<R: Read>(input: R) -> Result<Trace> {
    let mut rd = csv::Reader::from_reader(input);
    let head: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let with_epochs = head.last().map(String::as_str) == Some("eps_max");
    let fixed = 4 + if with_epochs { 2 } else { 0 };
    if head.len() < fixed || (head.len() - fixed) % 3 != 0 {
        return Err(Error::SchemaMismatch(format!("unexpected trace header {head:?}")));
    }
    let dim = (head.len() - fixed) / 3;
    if head != header(dim, with_epochs) {
        return Err(Error::SchemaMismatch(format!("unexpected trace header {head:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    line: line + 2,
                    column: i + 1,
                    message: format!("expected a number in column '{}'", head[i]),
                })
        };
        let int = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    line: line + 2,
                    column: i + 1,
                    message: format!("expected an integer in column '{}'", head[i]),
                })
        };
        let vec_at = |start: usize| -> Result<Vec<f64>> { (start..start + dim).map(num).collect() };
        let base = 1 + 3 * dim;
        rows.push(TraceRow {
            t: int(0)?,
            y: vec_at(1)?,
            z_hat: vec_at(1 + dim)?,
            eps: vec_at(1 + 2 * dim)?,
            loss_scalar: num(base)?,
            eta: num(base + 1)?,
            cum_regret: num(base + 2)?,
            epoch: if with_epochs {
                Some((int(base + 3)?, num(base + 4)?))
            } else {
                None
            },
        });
    }
    Ok(Trace {
        dim,
        with_epochs,
        rows,
    })
}

pub fn read_trace_file(path: &Path) -> Result<Trace> {
    read_trace(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_bits() {
        let trace = Trace {
            dim: 2,
            with_epochs: true,
            rows: vec![TraceRow {
                t: 1,
                y: vec![0.1, 1.0 / 3.0],
                z_hat: vec![0.0, 1.0],
                eps: vec![1e-300, 2.5],
                loss_scalar: std::f64::consts::PI,
                eta: 0.025,
                cum_regret: -0.75,
                epoch: Some((3, 0.5)),
            }],
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,y0,y1,zhat0,zhat1,eps0,eps1,loss_scalar,eta,cum_regret,epoch,eps_max\n"));
        assert_eq!(read_trace(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn bad_header_is_schema_mismatch() {
        let text = "t,y0,foo,loss_scalar,eta,cum_regret\n";
        assert!(matches!(read_trace(text.as_bytes()), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn bad_number_reports_position() {
        let text = "t,y0,zhat0,eps0,loss_scalar,eta,cum_regret\n1,0.5,x,0,0,0.1,0\n";
        match read_trace(text.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }
}
