//! CSV and file output.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), lines end in
//! LF, and files appear atomically: a failed run never leaves a partial file.

use std::io::Write;
use std::path::Path;

use gainloss_core::dynamics::{Sample, Trajectory};
use gainloss_core::experiments::SweepTable;

use crate::error::CliError;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            h.push(format!("rho_{i}{j}_re"));
            h.push(format!("rho_{i}{j}_im"));
        }
    }
    h.extend(
        ["purity", "gamma_expectation", "speed", "trace_drift", "min_eig"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn sample_record(s: &Sample) -> Vec<String> {
    let mut r = vec![fmt_f64(s.t)];
    for z in s.state.matrix().as_slice() {
        r.push(fmt_f64(z.re));
        r.push(fmt_f64(z.im));
    }
    r.push(fmt_f64(s.purity));
    r.push(fmt_f64(s.gamma_expectation));
    r.push(fmt_f64(s.speed.unwrap_or(f64::NAN)));
    r.push(fmt_f64(s.trace_drift));
    r.push(fmt_f64(s.min_eigenvalue));
    r
}

pub fn trajectory_csv(traj: &Trajectory, dim: usize) -> Result<Vec<u8>, CliError> {
    let mut w = writer(Vec::new());
    w.write_record(trajectory_header(dim))?;
    for s in &traj.samples {
        w.write_record(sample_record(s))?;
    }
    w.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

pub const SWEEP_HEADER: [&str; 5] = ["gamma_inv", "kappa", "m", "phase", "converged"];

pub fn sweep_csv(table: &SweepTable) -> Result<Vec<u8>, CliError> {
    let mut w = writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for row in &table.rows {
        w.write_record([
            fmt_f64(row.gamma_inv),
            fmt_f64(row.kappa),
            fmt_f64(row.m),
            row.phase.label().to_string(),
            row.converged.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.flush()?;
            tmp.persist(p).map_err(|e| CliError::from(e.error))?;
            Ok(())
        }
    }
}
