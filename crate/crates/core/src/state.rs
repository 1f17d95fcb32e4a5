//! Density matrices, pure states, the gain/loss model and observables.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result, ValidationReport, Violation};
use crate::numerics::{eig_hermitian, vec_norm, CMatrix, I};
use crate::tolerance::Tolerances;

/// Hermitian, unit-trace, positive-semidefinite `n x n` matrix.
///
/// The only way to obtain one is through [`validate_density`] (or the
/// constructors built on it), so every value carries the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates (and lightly repairs) a candidate matrix.
    pub fn new(candidate: CMatrix) -> Result<Self> {
        validate_density(candidate)
    }

    /// `I / n`
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix(CMatrix::identity(n).scale_real(1.0 / n as f64))
    }

    /// `|k><k|` in the computational basis.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidArgument("basis index out of range"));
        }
        let mut m = CMatrix::zeros(n);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Distance in Frobenius norm.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        self.0.distance(&other.0)
    }

    /// Convex combination `Σ w_k ρ_k` with nonnegative weights summing to one.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::InvalidArgument("mixture needs one weight per state"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative"));
        }
        let n = states[0].dim();
        let mut acc = CMatrix::zeros(n);
        for (w, s) in weights.iter().zip(states) {
            acc.check_same_dim(s.matrix())?;
            acc.axpy(Complex64::new(*w, 0.0), s.matrix());
        }
        validate_density(acc)
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        DensityMatrix(m)
    }
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(Vec<Complex64>);

impl PureState {
    /// Accepts amplitudes whose norm is 1 within `1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("empty state vector"));
        }
        let norm = vec_norm(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("state vector is not normalised"));
        }
        Ok(PureState(amplitudes))
    }

    /// Normalises arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if amplitudes.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalise a zero vector"));
        }
        for z in amplitudes.iter_mut() {
            *z /= norm;
        }
        Ok(PureState(amplitudes))
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Hermitian matrix used as a measured quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(CMatrix);

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(Observable(matrix.hermitian_part()))
    }

    pub fn pauli_x() -> Self {
        Observable(CMatrix::pauli_x())
    }

    pub fn pauli_y() -> Self {
        Observable(CMatrix::pauli_y())
    }

    pub fn pauli_z() -> Self {
        Observable(CMatrix::pauli_z())
    }

    pub fn identity(n: usize) -> Self {
        Observable(CMatrix::identity(n))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Complex Hamiltonian `K = H - iΓ` together with the noise strength `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainLossModel {
    h: CMatrix,
    gamma: CMatrix,
    kappa: f64,
}

impl GainLossModel {
    pub fn new(h: CMatrix, gamma: CMatrix, kappa: f64) -> Result<Self> {
        h.check_same_dim(&gamma)?;
        check_hermitian(&h)?;
        check_hermitian(&gamma)?;
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument("kappa must be finite and nonnegative"));
        }
        Ok(Self {
            h: h.hermitian_part(),
            gamma: gamma.hermitian_part(),
            kappa,
        })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `K = H - iΓ`
    pub fn k(&self) -> CMatrix {
        &self.h - &self.gamma.scale(I)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.gamma.clone(), kappa)
    }

    pub fn gamma_observable(&self) -> Observable {
        Observable(self.gamma.clone())
    }

    pub fn h_observable(&self) -> Observable {
        Observable(self.h.clone())
    }

    pub fn is_hermitian(&self) -> bool {
        self.gamma.max_abs() == 0.0
    }

    pub(crate) fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        self.h.check_same_dim(rho.matrix())
    }
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let defect = m.hermiticity_defect();
    let scale = m.norm_fro().max(1.0);
    if defect > Tolerances::DEFAULT.hermitian_input * scale {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// `|ψ><ψ|`
pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    let a = psi.amplitudes();
    let mut m = CMatrix::outer(a, a);
    // exact unit trace
    let tr = m.trace().re;
    m = m.scale_real(1.0 / tr);
    DensityMatrix(m.hermitian_part())
}

/// `tr(Fρ)`; the imaginary residue must stay below `1e-8`.
pub fn expectation(rho: &DensityMatrix, f: &Observable) -> Result<f64> {
    rho.matrix().check_same_dim(f.matrix())?;
    let z = f.matrix().trace_product(rho.matrix());
    let scale = f.matrix().norm_fro().max(1.0);
    if z.im.abs() > Tolerances::DEFAULT.expectation_residue * scale {
        return Err(Error::Inconsistent { residue: z.im });
    }
    Ok(z.re)
}

/// `tr ρ²`
pub fn purity(rho: &DensityMatrix) -> f64 {
    // tr ρ² = Σ |ρ_ij|² for Hermitian ρ
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `var_ρ(Γ) = tr(Γ²ρ) - (tr Γρ)²`, clamped at zero.
pub fn gamma_variance(rho: &DensityMatrix, gamma: &Observable) -> Result<f64> {
    rho.matrix().check_same_dim(gamma.matrix())?;
    let g = gamma.matrix();
    let mean = g.trace_product(rho.matrix()).re;
    let second = g.matmul(g).trace_product(rho.matrix()).re;
    Ok((second - mean * mean).max(0.0))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eig_hermitian(&m.hermitian_part())?
        .values
        .first()
        .copied()
        .unwrap_or(0.0))
}

/// Inspects a candidate without repairing it.
pub fn inspect(candidate: &CMatrix) -> ValidationReport {
    let tol = Tolerances::DEFAULT;
    let mut report = ValidationReport::default();
    if !candidate.is_finite() {
        report.violations.push(Violation::NonFinite);
        report.trace = f64::NAN;
        report.hermiticity_defect = f64::NAN;
        report.min_eigenvalue = f64::NAN;
        return report;
    }
    report.trace = candidate.trace().re;
    report.hermiticity_defect = candidate.hermiticity_defect();
    let herm = candidate.hermitian_part();
    report.min_eigenvalue = min_eigenvalue(&herm).unwrap_or(f64::NAN);

    let scale = candidate.norm_fro().max(1.0);
    if report.hermiticity_defect > tol.repair * scale {
        report
            .violations
            .push(Violation::Hermiticity(report.hermiticity_defect));
    }
    let drift = (report.trace - 1.0).abs();
    if !(drift <= tol.repair) {
        report.violations.push(Violation::TraceDrift(drift));
    }
    if !(report.min_eigenvalue >= -tol.psd_reject) {
        report
            .violations
            .push(Violation::NegativeEigenvalue(report.min_eigenvalue));
    }
    report
}

/// Hermitises and renormalises a candidate whose defects are within the
/// repair threshold (`1e-8`); otherwise returns the full report.
pub fn validate_density(candidate: CMatrix) -> Result<DensityMatrix> {
    let report = inspect(&candidate);
    if !report.is_ok() {
        return Err(Error::InvalidState(report));
    }
    let herm = candidate.hermitian_part();
    let tr = herm.trace().re;
    Ok(DensityMatrix(herm.scale_real(1.0 / tr)))
}
