//! Surface charts, moving frames and the first-order shell operators.

mod chart;
mod displacement;
mod ops;
mod point;

pub mod identities;

pub use chart::{Chart, DerivativeMode};
pub use displacement::DisplacementField;
pub use ops::{
    ansatz_gradient, b_form, b_form_frame_route, dv2_form, mu_field, nabla_pi, omega_field,
    q_form, q_form_via_christoffel, strain_linearization_check, tube_coords, tube_jacobian,
    tube_point,
};
pub use point::{frame_at, SurfacePoint};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("chart degenerate at xi=({0}, {1}): det(metric) = {2:e}")]
    DegenerateChart(f64, f64, f64),
    #[error("point ({0}, {1}) lies outside the chart domain")]
    OutOfDomain(f64, f64),
    #[error("tubular neighborhood condition violated: |det(I + tA)| = {0:e}")]
    TubularViolation(f64),
    #[error("polar square root not computable: smallest eigenvalue of C is {0:e}")]
    SqrtDomain(f64),
}

/// Which frame the coefficients of a [`TangentForm`] refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameTag {
    /// Coefficients b_ij = B(tau_i, tau_j) with respect to the chart frame.
    Covariant,
    /// Coefficients with respect to the Gram-Schmidt orthonormal tangent pair.
    Orthonormal,
}

/// A symmetric bilinear form on the tangent plane, stored as 2x2 symmetric
/// coefficients in a tagged frame.
#[derive(Debug, Clone, Copy)]
pub struct TangentForm {
    pub coeffs: Matrix2<f64>,
    pub frame: FrameTag,
}

impl TangentForm {
    pub fn new(coeffs: Matrix2<f64>, frame: FrameTag) -> Self {
        let sym = (coeffs + coeffs.transpose()) * 0.5;
        Self { coeffs: sym, frame }
    }

    pub fn zero(frame: FrameTag) -> Self {
        Self { coeffs: Matrix2::zeros(), frame }
    }

    /// Coefficients in the orthonormal frame. The change of basis is the
    /// congruence by the Gram-Schmidt matrix P (e_a = sum_i P_ia tau_i).
    pub fn ortho_coeffs(&self, p: &SurfacePoint) -> Matrix2<f64> {
        match self.frame {
            FrameTag::Orthonormal => self.coeffs,
            FrameTag::Covariant => p.gs.transpose() * self.coeffs * p.gs,
        }
    }

    pub fn covariant_coeffs(&self, p: &SurfacePoint) -> Matrix2<f64> {
        match self.frame {
            FrameTag::Covariant => self.coeffs,
            FrameTag::Orthonormal => {
                let pinv = p
                    .gs
                    .try_inverse()
                    .expect("Gram-Schmidt matrix is triangular with positive diagonal");
                pinv.transpose() * self.coeffs * pinv
            }
        }
    }

    pub fn to_frame(&self, frame: FrameTag, p: &SurfacePoint) -> TangentForm {
        let coeffs = match frame {
            FrameTag::Covariant => self.covariant_coeffs(p),
            FrameTag::Orthonormal => self.ortho_coeffs(p),
        };
        TangentForm { coeffs, frame }
    }
}
