//! JSON reports for the `spectrum` and `equilibrium` commands.

use gainloss_core::experiments::{near_exceptional, Equilibrium};
use gainloss_core::spectral::{stationary_set, EigenSystem};
use gainloss_core::state::{expectation, GainLossModel};
use serde::Serialize;

use crate::config::{encode_complex, encode_matrix, JsonMatrix};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct StationarySummary {
    pub pure_fixed_points: usize,
    pub mixed_generators: usize,
    pub generator_indices: Vec<usize>,
    pub real_eigenvalues: usize,
    pub max_residual: f64,
    pub projectors: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub phase: &'static str,
    pub eigenvalues: Vec<[f64; 2]>,
    pub energies: Vec<f64>,
    pub decay_rates: Vec<f64>,
    pub overlap: JsonMatrix,
    /// `null` when the eigenvector matrix is singular.
    pub condition: Option<f64>,
    pub near_exceptional: bool,
    pub stationary: StationarySummary,
}

impl SpectrumReport {
    pub fn new(sys: &EigenSystem, model: &GainLossModel) -> Result<Self, CliError> {
        let set = stationary_set(sys, model)?;
        Ok(Self {
            phase: sys.phase.label(),
            eigenvalues: sys.eigenvalues.iter().map(|&z| encode_complex(z)).collect(),
            energies: sys.energies(),
            decay_rates: sys.decay_rates(),
            overlap: encode_matrix(&sys.overlap),
            condition: sys.condition.is_finite().then_some(sys.condition),
            near_exceptional: near_exceptional(sys),
            stationary: StationarySummary {
                pure_fixed_points: set.pure_fixed_points.len(),
                mixed_generators: set.mixed_generators.len(),
                generator_indices: set.generator_indices.clone(),
                real_eigenvalues: set.real_count,
                max_residual: set.max_residual,
                projectors: set
                    .pure_fixed_points
                    .iter()
                    .map(|p| encode_matrix(p.matrix()))
                    .collect(),
            },
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub rho: JsonMatrix,
    pub residual: f64,
    pub relaxation_distance: f64,
    pub relaxation_time: f64,
    pub newton_converged: bool,
    pub gamma_expectation: f64,
}

impl EquilibriumReport {
    pub fn new(eq: &Equilibrium, model: &GainLossModel) -> Result<Self, CliError> {
        Ok(Self {
            rho: encode_matrix(eq.state.matrix()),
            residual: eq.residual,
            relaxation_distance: eq.relaxation_distance,
            relaxation_time: eq.relaxation_time,
            newton_converged: eq.newton_converged,
            gamma_expectation: expectation(&eq.state, &model.gamma_observable())?,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report is serialisable");
    s.push('\n');
    s.into_bytes()
}
