//! Closed-form propagators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{mat_exp, CMatrix, I};
use crate::state::{validate_density, DensityMatrix, GainLossModel};

/// Largest `‖K‖ Δt` used for a single exponential before renormalising.
pub const MAX_SEGMENT_EXPONENT: f64 = 20.0;

/// Normalised state together with `ln tr(e^{-iKt} ρ0 e^{iK†t})`.
#[derive(Debug, Clone)]
pub struct Propagated {
    pub state: DensityMatrix,
    pub log_norm: f64,
}

impl Propagated {
    pub fn norm_factor(&self) -> f64 {
        libm::exp(self.log_norm)
    }
}

fn require_noise_free(model: &GainLossModel) -> Result<()> {
    if model.kappa() != 0.0 {
        return Err(Error::UnsupportedModel(
            "closed-form propagation needs kappa = 0 (or Gamma = 0, see propagate_noise_unitary)",
        ));
    }
    Ok(())
}

/// `ρ_t = e^{-iKt} ρ0 e^{iK†t} / tr(...)`, returned with the normalisation
/// factor `tr(e^{-iKt} ρ0 e^{iK†t})`.
///
/// Fails with [`Error::NormOutOfRange`] when that factor leaves the range
/// `[1e-300, 1e300]`; [`propagate_segmented`] has no such limit.
pub fn propagate_exact(
    rho0: &DensityMatrix,
    t: f64,
    model: &GainLossModel,
) -> Result<(DensityMatrix, f64)> {
    let p = propagate_segmented(rho0, t, model)?;
    let norm_factor = p.norm_factor();
    if !(1e-300..=1e300).contains(&norm_factor) {
        return Err(Error::NormOutOfRange { norm_factor });
    }
    Ok((p.state, norm_factor))
}

/// Closed-form propagation in segments with `‖K‖ Δt ≤ 20`, renormalising
/// after each so that the exponentials stay in range.
pub fn propagate_segmented(
    rho0: &DensityMatrix,
    t: f64,
    model: &GainLossModel,
) -> Result<Propagated> {
    model.check_state(rho0)?;
    require_noise_free(model)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument("propagation time must be finite and >= 0"));
    }
    if t == 0.0 {
        return Ok(Propagated {
            state: rho0.clone(),
            log_norm: 0.0,
        });
    }
    let generator = model.k().scale(-I);
    let knorm = generator.norm_fro();
    let segments = if knorm * t <= MAX_SEGMENT_EXPONENT {
        1
    } else {
        libm::ceil(knorm * t / MAX_SEGMENT_EXPONENT) as usize
    };
    let dt = t / segments as f64;
    let u = mat_exp(&generator, dt)?;
    let ud = u.adjoint();

    let mut rho = rho0.matrix().clone();
    let mut log_norm = 0.0;
    for _ in 0..segments {
        let sigma = u.matmul(&rho).matmul(&ud);
        let tr = sigma.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::NormOutOfRange { norm_factor: tr });
        }
        log_norm += libm::log(tr);
        rho = sigma.hermitian_part().scale_real(1.0 / tr);
    }
    Ok(Propagated {
        state: validate_density(rho)?,
        log_norm,
    })
}

/// Closed form for `Γ = 0`, `κ ≥ 0`:
///
/// `ρ_t = (1/n) [I + (n e^{-iHt} ρ0 e^{iHt} - I) e^{-κnt}]`
pub fn propagate_noise_unitary(
    rho0: &DensityMatrix,
    t: f64,
    model: &GainLossModel,
) -> Result<DensityMatrix> {
    model.check_state(rho0)?;
    if !model.is_hermitian() {
        return Err(Error::UnsupportedModel(
            "noisy closed form requires Gamma = 0",
        ));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument("propagation time must be finite and >= 0"));
    }
    let n = rho0.dim();
    let nf = n as f64;
    let u = mat_exp(&model.h().scale(-I), t)?;
    let rotated = u.matmul(rho0.matrix()).matmul(&u.adjoint());
    let damp = libm::exp(-model.kappa() * nf * t);
    let mut out = CMatrix::identity(n).scale_real((1.0 - damp) / nf);
    out.axpy(Complex64::new(damp, 0.0), &rotated);
    validate_density(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig_general;
    use crate::state::{purity, validate_density};

    fn standard(gamma: f64, kappa: f64) -> GainLossModel {
        GainLossModel::new(
            CMatrix::pauli_x(),
            CMatrix::pauli_z().scale_real(gamma),
            kappa,
        )
        .unwrap()
    }

    fn projector(v: &[Complex64]) -> DensityMatrix {
        validate_density(CMatrix::outer(v, v)).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let (out, norm) = propagate_exact(&rho, 0.0, &standard(2.0, 0.0)).unwrap();
        assert_eq!(out, rho);
        assert_eq!(norm, 1.0);
    }

    #[test]
    fn unitary_limit_preserves_purity() {
        let rho = validate_density(CMatrix::from_real_diag(&[0.3, 0.7])).unwrap();
        let (out, norm) = propagate_exact(&rho, 3.7, &standard(0.0, 0.0)).unwrap();
        assert!((purity(&out) - purity(&rho)).abs() < 1e-12);
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenprojector_is_fixed_with_decaying_norm() {
        let m = standard(2.0, 0.0);
        let e = eig_general(&m.k()).unwrap();
        for j in 0..2 {
            let p = projector(&e.right.column(j));
            let gamma_j = -e.eigenvalues[j].im;
            let t = 1.3;
            let (out, norm) = propagate_exact(&p, t, &m).unwrap();
            assert!(out.distance(&p) < 1e-12);
            let expect = libm::exp(-2.0 * gamma_j * t);
            assert!((norm - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn segmented_matches_single_shot() {
        let m = standard(0.5, 0.0);
        let rho = validate_density(CMatrix::from_real_diag(&[0.9, 0.1])).unwrap();
        let t = 30.0;
        let seg = propagate_segmented(&rho, t, &m).unwrap();
        let u = mat_exp(&m.k().scale(-I), t).unwrap();
        let s = u.matmul(rho.matrix()).matmul(&u.adjoint());
        let single = s.scale_real(1.0 / s.trace().re);
        assert!(seg.state.matrix().distance(&single) < 1e-10);
    }

    #[test]
    fn norm_guard_trips_in_broken_phase() {
        let m = standard(5.0, 0.0);
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            propagate_exact(&rho, 200.0, &m),
            Err(Error::NormOutOfRange { .. })
        ));
        assert!(propagate_segmented(&rho, 200.0, &m).is_ok());
    }

    #[test]
    fn noise_closed_form_limits() {
        let m = GainLossModel::new(CMatrix::pauli_x(), CMatrix::zeros(2), 0.5).unwrap();
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let late = propagate_noise_unitary(&rho, 60.0, &m).unwrap();
        assert!(late.distance(&DensityMatrix::maximally_mixed(2)) < 1e-12);

        let free = m.with_kappa(0.0).unwrap();
        let a = propagate_noise_unitary(&rho, 0.8, &free).unwrap();
        let (b, _) = propagate_exact(&rho, 0.8, &free).unwrap();
        assert!(a.distance(&b) < 1e-14);

        assert!(propagate_noise_unitary(&rho, 1.0, &standard(0.5, 0.1)).is_err());
    }
}
