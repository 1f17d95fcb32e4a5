//! Eigendecompositions for small dense complex matrices.
//!
//! General matrices go through a Householder reduction to Hessenberg form
//! followed by a single-shift complex QR iteration (Wilkinson shifts), which
//! yields a Schur form `K = Q T Q^dagger`. Eigenvectors come from
//! back-substitution on `T`. 2x2 diagonal blocks are split in closed form,
//! so for two-level systems the eigenvalues are exact up to one rounding of
//! the discriminant, and exceptional points produce exactly coalesced
//! eigenvalues rather than an `O(sqrt(eps))` split.
//!
//! Hermitian matrices use cyclic complex Jacobi rotations.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;

use super::linalg::{inverse, spectral_norm};
use super::matrix::{vec_norm, CMatrix, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Right/left eigenvectors of a (generally non-normal) matrix.
///
/// Columns of `right` are unit-norm eigenvectors `φ_j`; columns of `left`
/// are the dual vectors `χ_j` with `<χ_j|φ_k> = δ_jk`, i.e.
/// `left = (right^-1)^dagger`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub right: CMatrix,
    pub left: CMatrix,
    /// Spectral-norm condition number of `right`.
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `j` belongs to `values[j]`.
    pub vectors: CMatrix,
}

/// `eig_general` with the default defectiveness threshold.
pub fn eig_general(k: &CMatrix) -> Result<EigenDecomposition> {
    eig_general_with(k, Tolerances::DEFAULT.defective_condition)
}

/// Eigenvalues ascending by real part (ties by imaginary part) with right and
/// biorthogonal left eigenvectors.
///
/// A condition number above `defective_threshold` returns
/// [`Error::Defective`] carrying the partial decomposition.
pub fn eig_general_with(k: &CMatrix, defective_threshold: f64) -> Result<EigenDecomposition> {
    if !k.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries"));
    }
    let n = k.dim();
    let (t, q) = schur(k)?;
    let scale = t.norm_fro();
    let smin = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);

    let mut vectors = Vec::with_capacity(n);
    for kk in 0..n {
        let lambda = t[(kk, kk)];
        let mut y = alloc::vec![ZERO; n];
        y[kk] = ONE;
        for i in (0..kk).rev() {
            let mut s = ZERO;
            for j in i + 1..=kk {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            y[i] = -s / d;
        }
        let mut x = q.matvec(&y);
        let nx = vec_norm(&x);
        for z in x.iter_mut() {
            *z /= nx;
        }
        vectors.push((lambda, x));
    }

    let tie = 1e-10 * eigen_scale(vectors.iter().map(|(l, _)| *l));
    vectors.sort_by(|(a, _), (b, _)| compare_eigenvalues(*a, *b, tie));

    let mut right = CMatrix::zeros(n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (j, (lambda, x)) in vectors.into_iter().enumerate() {
        eigenvalues.push(lambda);
        right.set_column(j, &x);
    }

    let (left, condition) = match inverse(&right) {
        Ok(inv) => {
            let cond = spectral_norm(&right)? * spectral_norm(&inv)?;
            (inv.adjoint(), if cond.is_finite() { cond } else { f64::INFINITY })
        }
        Err(Error::Singular) => (CMatrix::zeros(n), f64::INFINITY),
        Err(e) => return Err(e),
    };

    let decomposition = EigenDecomposition {
        eigenvalues,
        right,
        left,
        condition,
    };
    if !(condition <= defective_threshold) {
        return Err(Error::Defective {
            condition,
            partial: alloc::boxed::Box::new(decomposition),
        });
    }
    Ok(decomposition)
}

/// `max(1, max_j |λ_j|)`
pub(crate) fn eigen_scale(values: impl Iterator<Item = Complex64>) -> f64 {
    values.map(|z| z.norm()).fold(1.0, f64::max)
}

fn compare_eigenvalues(a: Complex64, b: Complex64, tie: f64) -> Ordering {
    if (a.re - b.re).abs() <= tie {
        a.im.total_cmp(&b.im)
    } else {
        a.re.total_cmp(&b.re)
    }
}

/// Hermitian eigendecomposition with ascending real eigenvalues.
pub fn eig_hermitian(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries"));
    }
    let defect = a.hermiticity_defect();
    let norm = a.norm_fro();
    if defect > Tolerances::DEFAULT.hermitian_input * norm.max(f64::MIN_POSITIVE) && defect > 0.0
    {
        return Err(Error::NotHermitian { defect });
    }
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off <= (1e-17 * norm) * (1e-17 * norm) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n).map(|j| (m[(j, j)].re, v.column(j))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = CMatrix::zeros(n);
    let mut values = Vec::with_capacity(n);
    for (j, (val, col)) in pairs.into_iter().enumerate() {
        values.push(val);
        vectors.set_column(j, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

fn jacobi_rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let n = m.dim();
    let phase = apq / g;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let t = 1.0 / (theta.abs() + libm::sqrt(theta * theta + 1.0));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;
    // J = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q).
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for r in 0..n {
        let x = m[(r, p)];
        let y = m[(r, q)];
        m[(r, p)] = x * jpp + y * jqp;
        m[(r, q)] = x * jpq + y * jqq;
        let x = v[(r, p)];
        let y = v[(r, q)];
        v[(r, p)] = x * jpp + y * jqp;
        v[(r, q)] = x * jpq + y * jqq;
    }
    for r in 0..n {
        let x = m[(p, r)];
        let y = m[(q, r)];
        m[(p, r)] = jpp.conj() * x + jqp.conj() * y;
        m[(q, r)] = jpq.conj() * x + jqq.conj() * y;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
}

/// Hermitian positive-semidefinite square root.
///
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero; anything more negative
/// is rejected.
pub fn psd_sqrt(rho: &CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(rho)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -Tolerances::DEFAULT.sqrt_clamp {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    let roots: Vec<f64> = eig.values.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    let v = &eig.vectors;
    let s = v.matmul(&CMatrix::from_real_diag(&roots)).matmul(&v.adjoint());
    Ok(s.hermitian_part())
}

/// Unitary `G` with `G [a; b] = [r; 0]`, returned as `(c, s)` for
/// `G = [[c, s], [-conj(s), c]]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    let na = a.norm();
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = libm::hypot(na, nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Left-multiplies rows `i, i+1` by `G`, columns `from..n`.
fn rotate_rows(h: &mut CMatrix, i: usize, c: f64, s: Complex64, from: usize) {
    for j in from..h.dim() {
        let x = h[(i, j)];
        let y = h[(i + 1, j)];
        h[(i, j)] = x * c + s * y;
        h[(i + 1, j)] = -s.conj() * x + y * c;
    }
}

/// Right-multiplies columns `i, i+1` by `G^dagger`, rows `0..to`.
fn rotate_cols(h: &mut CMatrix, i: usize, c: f64, s: Complex64, to: usize) {
    for r in 0..to {
        let x = h[(r, i)];
        let y = h[(r, i + 1)];
        h[(r, i)] = x * c + y * s.conj();
        h[(r, i + 1)] = -x * s + y * c;
    }
}

/// Eigenvalues of `[[a, b], [c, d]]`, larger-magnitude one first.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mean = (a + d) * 0.5;
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let (l1, l2) = if (mean + disc).norm() >= (mean - disc).norm() {
        (mean + disc, mean - disc)
    } else {
        (mean - disc, mean + disc)
    };
    let det = a * d - b * c;
    let l2 = if l1.norm() > 0.0 && l2.norm() < 1e-8 * l1.norm() {
        det / l1
    } else {
        l2
    };
    (l1, l2)
}

/// Complex Schur decomposition `a = Q T Q^dagger` with `T` upper triangular.
pub fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.dim();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);

    // Householder reduction to upper Hessenberg form.
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = vec_norm(&x);
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = vec_norm(&v);
        for z in v.iter_mut() {
            *z /= vn;
        }
        // h <- P h with P = I - 2 v v^dagger acting on rows k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for (idx, i) in (k + 1..n).enumerate() {
                s += v[idx].conj() * h[(i, j)];
            }
            for (idx, i) in (k + 1..n).enumerate() {
                h[(i, j)] -= v[idx] * s * 2.0;
            }
        }
        // h <- h P, q <- q P on columns k+1..n
        for mat in [&mut h, &mut q] {
            for r in 0..n {
                let mut s = ZERO;
                for (idx, j) in (k + 1..n).enumerate() {
                    s += mat[(r, j)] * v[idx];
                }
                for (idx, j) in (k + 1..n).enumerate() {
                    mat[(r, j)] -= s * v[idx].conj() * 2.0;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }

    let eps = f64::EPSILON;
    let hnorm = h.norm_fro();
    let mut hi = n as isize - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n.max(1);
    while hi > 0 {
        let hiu = hi as usize;
        // Locate the start of the active unreduced block.
        let mut lo = hiu;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = hnorm;
            }
            if sub <= eps * diag {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hiu {
            hi -= 1;
            iter = 0;
            continue;
        }
        if hiu - lo == 1 {
            split_2x2(&mut h, &mut q, lo);
            hi -= 2;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::NoEigenConvergence);
        }
        let shift = if iter.is_multiple_of(11) {
            // Ad hoc shift to break cycles.
            h[(hiu, hiu)] + Complex64::new(0.75 * h[(hiu, hiu - 1)].norm(), 0.0)
        } else {
            let (l1, l2) = eig2(
                h[(hiu - 1, hiu - 1)],
                h[(hiu - 1, hiu)],
                h[(hiu, hiu - 1)],
                h[(hiu, hiu)],
            );
            let d = h[(hiu, hiu)];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        for i in lo..=hiu {
            h[(i, i)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hiu - lo);
        for kk in lo..hiu {
            let (c, s) = givens(h[(kk, kk)], h[(kk + 1, kk)]);
            rotate_rows(&mut h, kk, c, s, kk);
            h[(kk + 1, kk)] = ZERO;
            rotations.push((kk, c, s));
        }
        for &(kk, c, s) in &rotations {
            rotate_cols(&mut h, kk, c, s, (kk + 2).min(hiu) + 1);
            rotate_cols(&mut q, kk, c, s, n);
        }
        for i in lo..=hiu {
            h[(i, i)] += shift;
        }
    }
    Ok((h, q))
}

/// Triangularises the 2x2 diagonal block at `(p, p)` with one rotation.
fn split_2x2(h: &mut CMatrix, q: &mut CMatrix, p: usize) {
    let n = h.dim();
    let (a, b, c, d) = (h[(p, p)], h[(p, p + 1)], h[(p + 1, p)], h[(p + 1, p + 1)]);
    let (l1, l2) = eig2(a, b, c, d);
    let v1 = (l1 - d, c);
    let v2 = (b, l1 - a);
    let (x, y) = if v1.0.norm_sqr() + v1.1.norm_sqr() >= v2.0.norm_sqr() + v2.1.norm_sqr() {
        v1
    } else {
        v2
    };
    if x.norm() + y.norm() == 0.0 {
        // Block is already a multiple of the identity.
        h[(p + 1, p)] = ZERO;
        return;
    }
    let (cs, sn) = givens(x, y);
    rotate_rows(h, p, cs, sn, p);
    rotate_cols(h, p, cs, sn, p + 2);
    rotate_cols(q, p, cs, sn, n);
    h[(p + 1, p)] = ZERO;
    h[(p, p)] = l1;
    h[(p + 1, p + 1)] = l2;
}
