//! Instantaneous rates: purity, observables and evolution speed.

use num_complex::Complex64;

use super::rhs::rhs_raw;
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, psd_sqrt, CMatrix, I};
use crate::state::{purity, DensityMatrix, GainLossModel, Observable};
use crate::tolerance::Tolerances;

/// `d tr ρ²/dt = -4(tr(Γρ²) - tr(ρΓ) tr ρ²) + 2κ(1 - n tr ρ²)`
pub fn purity_rate(rho: &DensityMatrix, model: &GainLossModel) -> Result<f64> {
    model.check_state(rho)?;
    let r = rho.matrix();
    let g = model.gamma();
    let r2 = r.matmul(r);
    let p = purity(rho);
    let mean_g = g.trace_product(r).re;
    let n = rho.dim() as f64;
    Ok(-4.0 * (g.trace_product(&r2).re - mean_g * p) + 2.0 * model.kappa() * (1.0 - n * p))
}

/// `d<F>/dt = i<[H,F]> - <[Γ,F]_+> + 2<Γ><F> + κ(tr F - n<F>)`
pub fn observable_rate(
    rho: &DensityMatrix,
    f: &Observable,
    model: &GainLossModel,
) -> Result<f64> {
    model.check_state(rho)?;
    rho.matrix().check_same_dim(f.matrix())?;
    let r = rho.matrix();
    let fm = f.matrix();
    let h = model.h();
    let g = model.gamma();
    let mean = |a: &CMatrix| a.trace_product(r);
    let mean_f = mean(fm);
    let mean_g = mean(g);
    let n = rho.dim() as f64;
    let z: Complex64 = I * mean(&h.commutator(fm)) - mean(&g.anticommutator(fm))
        + mean_g * mean_f * 2.0
        + (fm.trace() - mean_f * n) * model.kappa();
    let scale = fm.norm_fro().max(1.0) * (h.norm_fro() + g.norm_fro() + model.kappa()).max(1.0);
    if z.im.abs() > Tolerances::DEFAULT.expectation_residue * scale {
        return Err(Error::Inconsistent { residue: z.im });
    }
    Ok(z.re)
}

fn require_noise_free(model: &GainLossModel) -> Result<()> {
    if model.kappa() != 0.0 {
        return Err(Error::UnsupportedModel(
            "evolution speed is defined for kappa = 0",
        ));
    }
    Ok(())
}

const RANK_FLOOR: f64 = 1e-14;

/// Evolution speed `v = tr((d√ρ/dt)²)` of the covariance flow.
///
/// `X = d√ρ/dt` solves `√ρ X + X √ρ = dρ/dt`; in the eigenbasis of √ρ this is
/// `X_ij = (dρ/dt)_ij / (s_i + s_j)`. Blocks with `s_i + s_j = 0` carry no
/// motion for the noise-free flow and are dropped. Eigenvalues below the
/// numerical-rank floor `1e-14·λ_max` count as exact zeros; their roots would
/// otherwise divide roundoff in the kernel block by near-zero sums.
pub fn evolution_speed(rho: &DensityMatrix, model: &GainLossModel) -> Result<f64> {
    model.check_state(rho)?;
    require_noise_free(model)?;
    let r = rho.matrix();
    let eig = eig_hermitian(r)?;
    let v = &eig.vectors;
    let floor = RANK_FLOOR * eig.values.last().copied().unwrap_or(1.0);
    let roots: alloc::vec::Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l > floor { libm::sqrt(l) } else { 0.0 })
        .collect();
    let drho = v.adjoint().matmul(&rhs_raw(r, model)).matmul(v);
    let n = rho.dim();
    let mut speed = 0.0;
    for i in 0..n {
        for j in 0..n {
            let denom = roots[i] + roots[j];
            if denom > 0.0 {
                // tr(X²) = Σ |X_ij|² for Hermitian X
                speed += drho[(i, j)].norm_sqr() / (denom * denom);
            }
        }
    }
    Ok(speed)
}

/// Closed-form speed expression
///
/// `2(tr(H²ρ) - tr(H√ρH√ρ)) - 2i tr([H,Γ]ρ) + 2(tr(Γ²ρ) + tr(Γ√ρΓ√ρ) - 2(tr Γρ)²)`.
///
/// It coincides with [`evolution_speed`] on pure states and when `Γ = 0`
/// (where it is the Wigner–Yanase skew information); on mixed states with
/// `Γ ≠ 0` it is `tr(Y²)` for `Y` the covariance flow applied to √ρ, which is
/// not the derivative of √ρ.
pub fn evolution_speed_closed_form(rho: &DensityMatrix, model: &GainLossModel) -> Result<f64> {
    model.check_state(rho)?;
    require_noise_free(model)?;
    let r = rho.matrix();
    let s = psd_sqrt(r)?;
    let h = model.h();
    let g = model.gamma();
    let hs = h.matmul(&s);
    let gs = g.matmul(&s);
    let mean_g = g.trace_product(r);
    let z: Complex64 = (h.matmul(h).trace_product(r) - hs.trace_product(&hs)) * 2.0
        - I * h.commutator(g).trace_product(r) * 2.0
        + (g.matmul(g).trace_product(r) + gs.trace_product(&gs) - mean_g * mean_g * 2.0) * 2.0;
    let hg = h.norm_fro() + g.norm_fro();
    let scale = (hg * hg).max(1.0);
    if z.im.abs() > Tolerances::DEFAULT.speed_residue * scale {
        return Err(Error::Inconsistent { residue: z.im });
    }
    Ok(z.re)
}
