//! Matrix exponential `e^{At}`.
//!
//! Diagonalisable matrices with a well-conditioned eigenbasis go through
//! `R diag(e^{λt}) R^-1`. Anything else (notably exceptional points, where
//! `K` is defective) uses scaling and squaring with a degree-13 Padé
//! approximant.

use num_complex::Complex64;

use super::eigen::eig_general;
use super::linalg::{c, solve};
use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub fn mat_exp(a: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() || !a.is_finite() {
        return Err(Error::InvalidArgument("mat_exp needs finite input"));
    }
    let n = a.dim();
    if t == 0.0 || a.max_abs() == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    match eig_general(a) {
        Ok(e) if e.condition < Tolerances::DEFAULT.eigen_path_condition => {
            let exps: alloc::vec::Vec<Complex64> =
                e.eigenvalues.iter().map(|&l| (l * t).exp()).collect();
            let out = e
                .right
                .matmul(&CMatrix::from_diag(&exps))
                .matmul(&e.left.adjoint());
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::InvalidArgument("mat_exp overflow"))
            }
        }
        Ok(_) | Err(Error::Defective { .. }) | Err(Error::NoEigenConvergence) => {
            mat_exp_pade(a, t)
        }
        Err(e) => Err(e),
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Scaling and squaring with the `[13/13]` Padé approximant, regardless of
/// the eigenstructure of `a`.
pub fn mat_exp_pade(a: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() || !a.is_finite() {
        return Err(Error::InvalidArgument("mat_exp needs finite input"));
    }
    let n = a.dim();
    if t == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let at = a.scale_real(t);
    let norm = at.norm_one();
    let s = if norm > THETA13 {
        libm::ceil(libm::log2(norm / THETA13)) as i32
    } else {
        0
    };
    let x = at.scale_real(libm::pow(2.0, -(s as f64)));

    let id = CMatrix::identity(n);
    let x2 = x.matmul(&x);
    let x4 = x2.matmul(&x2);
    let x6 = x2.matmul(&x4);
    let b = &PADE13;

    let mut u_inner = x6.scale(c(b[13]));
    u_inner.axpy(c(b[11]), &x4);
    u_inner.axpy(c(b[9]), &x2);
    let mut u = x6.matmul(&u_inner);
    u.axpy(c(b[7]), &x6);
    u.axpy(c(b[5]), &x4);
    u.axpy(c(b[3]), &x2);
    u.axpy(c(b[1]), &id);
    let u = x.matmul(&u);

    let mut v_inner = x6.scale(c(b[12]));
    v_inner.axpy(c(b[10]), &x4);
    v_inner.axpy(c(b[8]), &x2);
    let mut v = x6.matmul(&v_inner);
    v.axpy(c(b[6]), &x6);
    v.axpy(c(b[4]), &x4);
    v.axpy(c(b[2]), &x2);
    v.axpy(c(b[0]), &id);

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::InvalidArgument("mat_exp overflow"));
    }
    Ok(r)
}
