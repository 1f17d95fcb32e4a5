use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::numerics::EigenDecomposition;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is numerically defective (eigenvector condition {condition:.3e})")]
    Defective {
        condition: f64,
        partial: Box<EigenDecomposition>,
    },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("eigenvalue iteration did not converge")]
    NoEigenConvergence,

    #[error("expectation value has imaginary residue {residue:.3e}")]
    Inconsistent { residue: f64 },

    #[error("state validation failed: {0}")]
    InvalidState(ValidationReport),

    #[error("unsupported model: {0}")]
    UnsupportedModel(&'static str),

    #[error(
        "normalisation factor {norm_factor:.3e} out of floating-point range; use segmented propagation"
    )]
    NormOutOfRange { norm_factor: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("integration failed at t = {t}: {report}")]
    IntegrationFailure { t: f64, report: ValidationReport },

    #[error("integration exceeded the maximum number of steps at t = {t}")]
    TooManySteps { t: f64 },

    #[error("eigenvector frame is ill-conditioned (condition {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("eigen-expansion has no diagonal weight above threshold")]
    DegenerateExpansion,
}

/// One violated density-matrix invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    NonFinite,
    Hermiticity(f64),
    TraceDrift(f64),
    NegativeEigenvalue(f64),
}

/// Diagnostic produced when a candidate density matrix is checked.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub trace: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            match v {
                Violation::NonFinite => write!(f, "non-finite entries")?,
                Violation::Hermiticity(d) => write!(f, "hermiticity defect {d:.3e}")?,
                Violation::TraceDrift(d) => {
                    write!(f, "trace = {:.12} (drift {d:.3e})", self.trace)?
                }
                Violation::NegativeEigenvalue(e) => write!(f, "negative eigenvalue {e:.3e}")?,
            }
        }
        Ok(())
    }
}
