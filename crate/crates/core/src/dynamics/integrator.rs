//! Embedded Dormand–Prince 5(4) integration of the matrix flow.
//!
//! After every accepted step the state is hermitised and its trace reset to
//! one. The exact flow preserves both, so the size of that repair is a direct
//! measure of the local error; repairs above `1e-8` abort the integration.
//! Small negative eigenvalues (states at the edge of the positive cone) are
//! clipped to zero, which moves the state to the nearest positive matrix.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::rates::evolution_speed;
use super::rhs::rhs_raw;
use crate::error::{Error, Result, ValidationReport, Violation};
use crate::numerics::{eig_hermitian, CMatrix};
use crate::state::{expectation, inspect, min_eigenvalue, purity, DensityMatrix, GainLossModel};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on a single step.
    pub max_step: f64,
    /// Spacing of stored samples; `None` stores every accepted step.
    pub output_interval: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: f64::INFINITY,
            output_interval: None,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_output_interval(mut self, dt: f64) -> Self {
        self.output_interval = Some(dt);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("integrator tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive"));
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidArgument("output interval must be positive"));
            }
        }
        Ok(())
    }
}

/// One stored point of a trajectory.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub state: DensityMatrix,
    pub purity: f64,
    pub gamma_expectation: f64,
    /// Only defined for noise-free models.
    pub speed: Option<f64>,
    /// Largest pre-repair `|tr ρ - 1|` since the previous sample.
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
}

impl Sample {
    pub fn new(t: f64, state: DensityMatrix, model: &GainLossModel, trace_drift: f64) -> Result<Self> {
        let purity = purity(&state);
        let gamma_expectation = expectation(&state, &model.gamma_observable())?;
        let speed = if model.kappa() == 0.0 {
            Some(evolution_speed(&state, model)?)
        } else {
            None
        };
        let min_eigenvalue = min_eigenvalue(state.matrix())?;
        Ok(Self {
            t,
            state,
            purity,
            gamma_expectation,
            speed,
            trace_drift,
            min_eigenvalue,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Stage coefficients; the last row doubles as the fifth-order weights.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Adaptive stepper that can be driven one accepted step at a time.
#[derive(Debug, Clone)]
pub struct Stepper<'m> {
    model: &'m GainLossModel,
    cfg: IntegratorConfig,
    t: f64,
    y: CMatrix,
    f: CMatrix,
    h: f64,
    err_old: f64,
    steps: usize,
    drift_since_mark: f64,
}

impl<'m> Stepper<'m> {
    pub fn new(rho0: &DensityMatrix, model: &'m GainLossModel, cfg: IntegratorConfig) -> Result<Self> {
        model.check_state(rho0)?;
        cfg.validate()?;
        let y = rho0.matrix().clone();
        let f = rhs_raw(&y, model);
        let mut s = Self {
            model,
            cfg,
            t: 0.0,
            y,
            f,
            h: 0.0,
            err_old: 1e-4,
            steps: 0,
            drift_since_mark: 0.0,
        };
        s.h = s.initial_step();
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.y.clone())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.y
    }

    /// Current value of the right-hand side.
    pub fn derivative(&self) -> &CMatrix {
        &self.f
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Largest pre-repair trace drift since the last call, then resets it.
    pub fn take_drift(&mut self) -> f64 {
        core::mem::replace(&mut self.drift_since_mark, 0.0)
    }

    fn error_norm(&self, y0: &CMatrix, y1: &CMatrix, err: &CMatrix) -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for ((a, b), e) in y0.as_slice().iter().zip(y1.as_slice()).zip(err.as_slice()) {
            let sc_re = self.cfg.abs_tol + self.cfg.rel_tol * a.re.abs().max(b.re.abs());
            let sc_im = self.cfg.abs_tol + self.cfg.rel_tol * a.im.abs().max(b.im.abs());
            acc += (e.re / sc_re) * (e.re / sc_re) + (e.im / sc_im) * (e.im / sc_im);
            count += 2;
        }
        libm::sqrt(acc / count as f64)
    }

    fn scaled_norm(&self, m: &CMatrix, reference: &CMatrix) -> f64 {
        self.error_norm(reference, reference, m)
    }

    fn initial_step(&self) -> f64 {
        let d0 = self.scaled_norm(&self.y, &self.y);
        let d1 = self.scaled_norm(&self.f, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = self.y.clone();
        y1.axpy(Complex64::new(h0, 0.0), &self.f);
        let f1 = rhs_raw(&y1, self.model);
        let d2 = self.scaled_norm(&(&f1 - &self.f), &self.y) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            libm::pow(0.01 / dmax, 0.2)
        };
        (100.0 * h0).min(h1).min(self.cfg.max_step)
    }

    /// Takes one accepted step that does not pass `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<()> {
        let model = self.model;
        loop {
            if self.steps >= self.cfg.max_steps {
                return Err(Error::TooManySteps { t: self.t });
            }
            let remaining = t_stop - self.t;
            if !(remaining > 0.0) {
                return Ok(());
            }
            let mut h = self.h.min(self.cfg.max_step);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) && !clipped {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }

            let mut k: [CMatrix; 7] = core::array::from_fn(|_| CMatrix::zeros(0));
            k[0] = self.f.clone();
            let mut y_new = self.y.clone();
            for s in 1..7 {
                let mut ys = self.y.clone();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        ys.axpy(Complex64::new(h * a, 0.0), kj);
                    }
                }
                k[s] = rhs_raw(&ys, model);
                if s == 6 {
                    y_new = ys;
                }
            }
            let mut err = CMatrix::zeros(self.y.dim());
            for (e, kj) in E.iter().zip(&k) {
                if *e != 0.0 {
                    err.axpy(Complex64::new(h * e, 0.0), kj);
                }
            }
            let err_norm = self.error_norm(&self.y, &y_new, &err);
            self.steps += 1;

            if !err_norm.is_finite() {
                self.h = h * MIN_FACTOR;
                continue;
            }

            let expo = 0.2 - 0.75 * BETA;
            if err_norm <= 1.0 {
                let factor = if err_norm == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * libm::pow(err_norm, -expo) * libm::pow(self.err_old, BETA))
                        .clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.err_old = err_norm.max(1e-4);
                self.t = if clipped { t_stop } else { self.t + h };
                self.accept(y_new)?;
                // a step clipped to an output time must not shrink the next proposal
                let proposal = h * factor;
                self.h = if clipped { self.h.max(proposal) } else { proposal };
                return Ok(());
            }
            let factor = (SAFETY * libm::pow(err_norm, -expo)).clamp(MIN_FACTOR, 1.0);
            self.h = h * factor;
        }
    }

    fn accept(&mut self, y_new: CMatrix) -> Result<()> {
        let tol = Tolerances::DEFAULT;
        let trace = y_new.trace().re;
        let drift = (trace - 1.0).abs();
        let herm = y_new.hermiticity_defect();
        if !(drift <= tol.repair) || !(herm <= tol.repair) {
            let mut report = inspect(&y_new);
            if !(herm <= tol.repair) && !report.violations.iter().any(|v| matches!(v, Violation::Hermiticity(_))) {
                report.violations.push(Violation::Hermiticity(herm));
            }
            return Err(Error::IntegrationFailure { t: self.t, report });
        }
        self.drift_since_mark = self.drift_since_mark.max(drift);
        self.y = clip_negative(y_new.hermitian_part().scale_real(1.0 / trace))?;
        self.f = rhs_raw(&self.y, self.model);
        Ok(())
    }

    /// Steps until `t_target` is reached exactly.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.t < t_target {
            self.step(t_target)?;
        }
        Ok(())
    }
}

/// Zeroes negative eigenvalues down to the rejection threshold and restores
/// the unit trace; deeper negatives are left for the sample check to report.
fn clip_negative(y: CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(&y)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if !(min < 0.0) || min < -Tolerances::DEFAULT.psd_reject {
        return Ok(y);
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let v = &eig.vectors;
    let m = v.matmul(&CMatrix::from_real_diag(&clipped)).matmul(&v.adjoint());
    Ok(m.hermitian_part().scale_real(1.0 / total))
}

/// Integrates from `t = 0` to `t_final`, storing samples as configured.
///
/// Every stored state is re-validated; a negative eigenvalue beyond the
/// validation threshold aborts with [`Error::IntegrationFailure`].
pub fn integrate(
    rho0: &DensityMatrix,
    t_final: f64,
    model: &GainLossModel,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument("t_final must be positive"));
    }
    let mut stepper = Stepper::new(rho0, model, *cfg)?;
    let mut traj = Trajectory::default();
    traj.samples.push(Sample::new(0.0, rho0.clone(), model, 0.0)?);

    let mut next_index = 1usize;
    loop {
        let t_stop = match cfg.output_interval {
            Some(dt) => (next_index as f64 * dt).min(t_final),
            None => t_final,
        };
        stepper.step(t_stop)?;
        let reached = stepper.time() >= t_stop;
        if cfg.output_interval.is_none() || reached {
            let drift = stepper.take_drift();
            let sample = Sample::new(stepper.time(), stepper.state(), model, drift)?;
            if !(sample.min_eigenvalue >= -Tolerances::DEFAULT.psd_reject) {
                return Err(Error::IntegrationFailure {
                    t: sample.t,
                    report: ValidationReport {
                        trace: 1.0,
                        hermiticity_defect: 0.0,
                        min_eigenvalue: sample.min_eigenvalue,
                        violations: alloc::vec![Violation::NegativeEigenvalue(sample.min_eigenvalue)],
                    },
                });
            }
            traj.samples.push(sample);
            if reached && cfg.output_interval.is_some() {
                next_index += 1;
            }
        }
        if stepper.time() >= t_final {
            break;
        }
    }
    Ok(traj)
}
