use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{inner, CMatrix, I};
use crate::state::{DensityMatrix, GainLossModel, PureState};

/// Right-hand side of the covariance equation with the noise term:
///
/// `dρ/dt = -i[H,ρ] - ([Γ,ρ]_+ - 2 tr(ρΓ) ρ) + κ(I - nρ)`
pub fn rhs(rho: &DensityMatrix, model: &GainLossModel) -> Result<CMatrix> {
    model.check_state(rho)?;
    Ok(rhs_raw(rho.matrix(), model))
}

/// Same as [`rhs`] on an unvalidated matrix (integrator stages).
pub(crate) fn rhs_raw(rho: &CMatrix, model: &GainLossModel) -> CMatrix {
    let h = model.h();
    let g = model.gamma();
    let n = rho.dim();
    let hr = h.matmul(rho);
    let gr = g.matmul(rho);
    let mean_gamma = gr.trace().re;

    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            // (Hρ)_ij - (ρH)_ij with (ρH)_ij = conj((Hρ)_ji) for Hermitian H, ρ;
            // written out in full so that non-Hermitian stage values stay exact.
            let mut rh = Complex64::new(0.0, 0.0);
            let mut rg = Complex64::new(0.0, 0.0);
            for k in 0..n {
                rh += rho[(i, k)] * h[(k, j)];
                rg += rho[(i, k)] * g[(k, j)];
            }
            let comm = hr[(i, j)] - rh;
            let anti = gr[(i, j)] + rg;
            out[(i, j)] = -I * comm - anti + rho[(i, j)] * (2.0 * mean_gamma);
        }
    }
    let kappa = model.kappa();
    if kappa != 0.0 {
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] -= rho[(i, j)] * (kappa * n as f64);
            }
            out[(i, i)] += Complex64::new(kappa, 0.0);
        }
    }
    out
}

/// Double-bracket flow `dρ/dt = -i[H,ρ] - [[Γ,ρ],ρ]`; agrees with [`rhs`]
/// on pure states only. Requires `κ = 0`.
pub fn rhs_double_bracket(rho: &DensityMatrix, model: &GainLossModel) -> Result<CMatrix> {
    model.check_state(rho)?;
    if model.kappa() != 0.0 {
        return Err(Error::UnsupportedModel(
            "double-bracket flow is defined for kappa = 0",
        ));
    }
    let r = rho.matrix();
    let unitary = model.h().commutator(r).scale(-I);
    let inner_bracket = model.gamma().commutator(r);
    Ok(&unitary - &inner_bracket.commutator(r))
}

/// Norm-preserving pure-state flow
/// `dψ/dt = -i(H - <H>)ψ - (Γ - <Γ>)ψ`. Requires `κ = 0`.
pub fn pure_rhs(psi: &PureState, model: &GainLossModel) -> Result<Vec<Complex64>> {
    if psi.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: psi.dim(),
        });
    }
    if model.kappa() != 0.0 {
        return Err(Error::UnsupportedModel("pure-state flow is defined for kappa = 0"));
    }
    let a = psi.amplitudes();
    let hpsi = model.h().matvec(a);
    let gpsi = model.gamma().matvec(a);
    let mean_h = inner(a, &hpsi).re;
    let mean_g = inner(a, &gpsi).re;
    Ok(a
        .iter()
        .zip(hpsi.iter().zip(&gpsi))
        .map(|(&x, (&hx, &gx))| -I * (hx - x * mean_h) - (gx - x * mean_g))
        .collect())
}
