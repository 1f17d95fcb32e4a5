//! Time evolution under the covariance flow.

mod integrator;
mod propagate;
mod rates;
mod rhs;

pub use integrator::{integrate, IntegratorConfig, Sample, Stepper, Trajectory};
pub use propagate::{
    propagate_exact, propagate_noise_unitary, propagate_segmented, Propagated, MAX_SEGMENT_EXPONENT,
};
pub use rates::{evolution_speed, evolution_speed_closed_form, observable_rate, purity_rate};
pub use rhs::{pure_rhs, rhs, rhs_double_bracket};
pub(crate) use rhs::rhs_raw;
