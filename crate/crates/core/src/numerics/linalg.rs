//! Gaussian elimination with partial pivoting, complex and real.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::matrix::{CMatrix, ZERO};
use crate::error::{Error, Result};

/// Solves `A X = B` for square `B`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.check_same_dim(b)?;
    let n = a.dim();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[(i, col)].norm().total_cmp(&lu[(j, col)].norm()))
            .unwrap_or(col);
        if lu[(pivot, col)] == ZERO {
            return Err(Error::Singular);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
                let tmp = x[(col, j)];
                x[(col, j)] = x[(pivot, j)];
                x[(pivot, j)] = tmp;
            }
        }
        let p = lu[(col, col)];
        for row in col + 1..n {
            let f = lu[(row, col)] / p;
            if f == ZERO {
                continue;
            }
            lu[(row, col)] = ZERO;
            for j in col + 1..n {
                let v = lu[(col, j)];
                lu[(row, j)] -= f * v;
            }
            for j in 0..n {
                let v = x[(col, j)];
                x[(row, j)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let p = lu[(col, col)];
        for j in 0..n {
            let mut s = x[(col, j)];
            for k in col + 1..n {
                s -= lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = s / p;
        }
    }
    if !x.is_finite() {
        return Err(Error::Singular);
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &CMatrix::identity(a.dim()))
}

/// Solves the dense real system `A x = b`; `a` is row-major `n x n`.
pub fn solve_real(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::InvalidArgument("real system is not square"));
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        if m[pivot * n + col] == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            x.swap(col, pivot);
        }
        let p = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            for j in col..n {
                m[row * n + j] -= f * m[col * n + j];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Largest eigenvalue of a Hermitian PSD matrix, i.e. the squared spectral
/// norm when `a = B^dagger B`.
pub(crate) fn spectral_norm(b: &CMatrix) -> Result<f64> {
    let gram = b.adjoint().matmul(b).hermitian_part();
    let eig = super::eigen::eig_hermitian(&gram)?;
    Ok(libm::sqrt(eig.values.last().copied().unwrap_or(0.0).max(0.0)))
}

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn inverse_roundtrip() {
        let a = CMatrix::from_rows(&[
            vec![Complex64::new(2.0, 1.0), Complex64::new(0.0, -1.0), c(0.5)],
            vec![c(1.0), Complex64::new(3.0, 0.0), Complex64::new(0.2, 0.3)],
            vec![Complex64::new(0.0, 2.0), c(-1.0), c(4.0)],
        ])
        .unwrap();
        let inv = inverse(&a).unwrap();
        assert!(a.matmul(&inv).distance(&CMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = CMatrix::from_rows(&[vec![c(1.0), c(2.0)], vec![c(2.0), c(4.0)]]).unwrap();
        assert!(matches!(inverse(&a), Err(Error::Singular)));
    }

    #[test]
    fn real_solve() {
        let x = solve_real(&[0.0, 2.0, 1.0, 1.0], &[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}
