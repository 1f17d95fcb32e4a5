//! Dense complex linear algebra for small `n`.

mod eigen;
mod expm;
mod linalg;
mod matrix;

pub use eigen::{
    eig_general, eig_general_with, eig_hermitian, psd_sqrt, schur, EigenDecomposition,
    HermitianEigen,
};
pub(crate) use eigen::eigen_scale;
pub use expm::{mat_exp, mat_exp_pade};
pub use linalg::{inverse, solve, solve_real};
pub use matrix::{inner, vec_norm, CMatrix, I, ONE, ZERO};
