#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Density-matrix dynamics under a non-Hermitian generator `K = H - iΓ`.

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod random;
pub mod spectral;
pub mod state;
pub mod tolerance;

pub use error::{Error, Result};
