//! Numerical homogenization of periodically heterogeneous thin shells.
//!
//! The crate computes effective membrane-bending stiffness forms from a
//! microscopic quadratic stored-energy density by solving periodic cell
//! problems with a spectral Galerkin method, together with the surface
//! geometry operators (metric variation, linearized second fundamental
//! form, ...) needed to assemble the limit energy of a parametrized shell.

pub mod assembly;
pub mod cell;
pub mod cli;
pub mod config;
pub mod convex;
pub mod geometry;
pub mod material;
pub mod voigt;

pub use assembly::{assemble, BendingInput, EnergyReport, SurfaceQuadrature};
pub use cell::{
    build_basis, corrector, effective_form, gamma_limit_study, q_infinity_per_t,
    reduced_zero_form, CellDiscretization, CellError, EffectiveForm, MinimizerRecord, RegimeSpec,
    SolverKind,
};
pub use convex::{
    convex_bending_functional, convex_effective_form, curlcurl_check, solve_modes,
    ConvexityCertificate, FourierField, ModeSolution,
};
pub use geometry::{
    ansatz_gradient, b_form, dv2_form, frame_at, mu_field, nabla_pi, omega_field, q_form,
    strain_linearization_check, Chart, DisplacementField, FrameTag, GeometryError, SurfacePoint,
    TangentForm,
};
pub use material::{
    reduce_q2, sample_cell, EnergyDensity, MaterialError, MicrostructureSpec, QuadraticDensity,
    ReducedDensity,
};
