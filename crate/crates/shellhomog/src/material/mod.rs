//! Microscopic stored-energy densities, their quadratic expansions and the
//! pointwise plane-stress-type reduction.

mod energy;
mod micro;
mod quadratic;

pub use energy::EnergyDensity;
pub use micro::{sample_cell, Family, MicrostructureSpec, PhaseSpec, TDependence};
pub use quadratic::{
    compose_full, embed_and_eval, plane_stress_reduce, reduce_q2, split_full, QuadraticDensity,
    ReducedDensity,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("quadratic expansion ladder does not settle: residuals {0:?}")]
    ExpansionMismatch(Vec<f64>),
    #[error("out-of-plane block of the density is not positive definite")]
    SingularBlock,
    #[error("invalid microstructure: {0}")]
    BadSpec(String),
}
