//! Parallel order-parameter sweeps over `(γ⁻¹, κ)`.

use gainloss_core::experiments::{sweep_point, sweep_points, SweepConfig, SweepTable};
use gainloss_core::state::Observable;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;

/// Generator for the `index`-th point: one ChaCha stream per point, so the
/// draw is independent of scheduling and thread count.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `points` evenly spaced values from `min` to `max` (just `min` when
/// `points == 1`).
pub fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(CliError::Config("--points must be at least 1".into()));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    if !(max > min) {
        return Err(CliError::Config("--gamma-inv-max must exceed --gamma-inv-min".into()));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { max } else { min + step * i as f64 })
        .collect())
}

/// Runs every grid point on the current rayon pool; rows come back in grid
/// order regardless of scheduling.
pub fn parallel_sweep(
    gamma_inv_grid: &[f64],
    kappas: &[f64],
    f: &Observable,
    cfg: &SweepConfig,
    seed: u64,
) -> Result<SweepTable, CliError> {
    if f.dim() != 2 {
        return Err(CliError::Config("sweep observable must be 2x2".into()));
    }
    let points = sweep_points(gamma_inv_grid, kappas)?;
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(g, k))| sweep_point(g, k, f, cfg, &mut point_rng(seed, i)))
        .collect();
    Ok(SweepTable { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMetadata {
    pub gamma_inv_grid: Vec<f64>,
    pub kappas: Vec<f64>,
    pub observable: String,
    pub t_max: f64,
    pub order_tolerance: f64,
    pub critical_window: f64,
    pub critical_factor: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub seed: u64,
    pub failed_points: usize,
    pub flagged_points: Vec<usize>,
    pub version: &'static str,
}

impl SweepMetadata {
    pub fn new(
        gamma_inv_grid: &[f64],
        kappas: &[f64],
        observable: &str,
        cfg: &SweepConfig,
        seed: u64,
        table: &SweepTable,
    ) -> Self {
        Self {
            gamma_inv_grid: gamma_inv_grid.to_vec(),
            kappas: kappas.to_vec(),
            observable: observable.to_string(),
            t_max: cfg.t_max,
            order_tolerance: cfg.tol,
            critical_window: cfg.critical_window,
            critical_factor: cfg.critical_factor,
            rel_tol: cfg.integrator.rel_tol,
            abs_tol: cfg.integrator.abs_tol,
            seed,
            failed_points: table.rows.iter().filter(|r| r.m.is_nan()).count(),
            flagged_points: table
                .rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.flagged)
                .map(|(i, _)| i)
                .collect(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}
