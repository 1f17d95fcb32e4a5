//! Random states and operators for tests and sampled initial conditions.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::error::Result;
use crate::numerics::CMatrix;
use crate::state::{validate_density, DensityMatrix, PureState};

/// Uniform on `(0, 1]`.
fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Standard complex Gaussian (`E|z|² = 1`) by Box–Muller.
pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> Complex64 {
    let r = libm::sqrt(-libm::log(uniform(rng)));
    let theta = 2.0 * core::f64::consts::PI * uniform(rng);
    Complex64::new(r * libm::cos(theta), r * libm::sin(theta))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let data: Vec<Complex64> = (0..n * n).map(|_| complex_normal(rng)).collect();
    CMatrix::from_row_major(n, data).expect("n*n entries")
}

/// Haar-random pure state.
pub fn random_pure<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<PureState> {
    PureState::normalized((0..n).map(|_| complex_normal(rng)).collect())
}

/// Hilbert–Schmidt random density matrix `G G† / tr(G G†)`; full rank with
/// probability one.
pub fn random_density<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    let g = ginibre(n, rng);
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    validate_density(w.hermitian_part().scale_real(1.0 / tr))
}

/// `(G + G†)/2` for Ginibre `G`.
pub fn random_hermitian<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    ginibre(n, rng).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{min_eigenvalue, purity};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..5 {
            let rho = random_density(n, &mut rng).unwrap();
            assert!(min_eigenvalue(rho.matrix()).unwrap() > 0.0);
            assert!(purity(&rho) <= 1.0 + 1e-12);
            let psi = random_pure(n, &mut rng).unwrap();
            assert_eq!(psi.dim(), n);
            assert_eq!(random_hermitian(n, &mut rng).hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let a = random_density(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = random_density(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
    }
}
