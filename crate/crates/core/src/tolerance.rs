//! Shared numerical thresholds.
//!
//! Every acceptance threshold used by validation, the integrator and the
//! spectral classification lives here so that they cannot drift apart.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative Hermiticity defect allowed for H, Γ, observables and
    /// `eig_hermitian` input.
    pub hermitian_input: f64,
    /// Hermiticity of a stored density matrix, relative to `max(1, ‖ρ‖)`.
    pub density_hermitian: f64,
    /// Allowed `|tr ρ - 1|` of a stored density matrix.
    pub density_trace: f64,
    /// Largest trace drift or Hermiticity defect that may be repaired.
    pub repair: f64,
    /// Eigenvalues below `-psd_reject` fail validation.
    pub psd_reject: f64,
    /// Eigenvalues in `[-sqrt_clamp, 0)` are clamped to zero by `psd_sqrt`.
    pub sqrt_clamp: f64,
    /// Largest imaginary residue of `tr(Fρ)` tolerated before it is an error.
    pub expectation_residue: f64,
    /// Eigenvector condition above which a matrix is reported defective.
    pub defective_condition: f64,
    /// Eigenvector condition below which `mat_exp` uses the eigen path.
    pub eigen_path_condition: f64,
    /// Relative bound on `|Im λ|` for an eigenvalue to count as real.
    pub reality: f64,
    /// Relative eigenvalue gap below which a non-normal matrix is exceptional.
    pub collision: f64,
    /// Imaginary residue allowed in the evolution speed.
    pub speed_residue: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian_input: 1e-12,
        density_hermitian: 1e-10,
        density_trace: 1e-10,
        repair: 1e-8,
        psd_reject: 1e-6,
        sqrt_clamp: 1e-10,
        expectation_residue: 1e-8,
        defective_condition: 1e8,
        eigen_path_condition: 1e6,
        reality: 1e-9,
        collision: 1e-10,
        speed_residue: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
