//! Orthonormal Voigt coordinates for symmetric matrices.
//!
//! Off-diagonal components carry a factor `sqrt(2)` so that the Euclidean
//! norm of the coefficient vector equals the Frobenius norm of the matrix.
//! With this scaling the two-sided bounds on a quadratic density become
//! literal eigenvalue bounds of its Voigt matrix.

use nalgebra::{Matrix2, Matrix3, Matrix6, Vector3, Vector6};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Indices of the tangential (in-plane) components inside a 6-vector:
/// (11), (22), (12).
pub const TANGENTIAL_IDX: [usize; 3] = [0, 1, 3];
/// Indices of the out-of-plane components: (33), (13), (23).
pub const FREE_IDX: [usize; 3] = [2, 4, 5];

/// Voigt vector of the symmetric part of a 3x3 matrix.
pub fn to_voigt6(m: &Matrix3<f64>) -> Vector6<f64> {
    let s = (m + m.transpose()) * 0.5;
    Vector6::new(
        s[(0, 0)],
        s[(1, 1)],
        s[(2, 2)],
        SQRT2 * s[(0, 1)],
        SQRT2 * s[(0, 2)],
        SQRT2 * s[(1, 2)],
    )
}

pub fn from_voigt6(v: &Vector6<f64>) -> Matrix3<f64> {
    let a = v[3] / SQRT2;
    let b = v[4] / SQRT2;
    let c = v[5] / SQRT2;
    Matrix3::new(v[0], a, b, a, v[1], c, b, c, v[2])
}

/// Voigt vector of the symmetric part of a 2x2 matrix: (11), (22), sqrt2*(12).
pub fn to_voigt3(m: &Matrix2<f64>) -> Vector3<f64> {
    let s = (m + m.transpose()) * 0.5;
    Vector3::new(s[(0, 0)], s[(1, 1)], SQRT2 * s[(0, 1)])
}

pub fn from_voigt3(v: &Vector3<f64>) -> Matrix2<f64> {
    let a = v[2] / SQRT2;
    Matrix2::new(v[0], a, a, v[1])
}

/// Embeds a tangential 2x2 form (Voigt-3) into the 3x3 Voigt-6 coordinates,
/// zero on the out-of-plane components.
pub fn embed_tangential(v: &Vector3<f64>) -> Vector6<f64> {
    let mut out = Vector6::zeros();
    for (a, &i) in TANGENTIAL_IDX.iter().enumerate() {
        out[i] = v[a];
    }
    out
}

/// Extracts the tangential Voigt-3 part of a Voigt-6 vector.
pub fn tangential_part(v: &Vector6<f64>) -> Vector3<f64> {
    Vector3::new(v[TANGENTIAL_IDX[0]], v[TANGENTIAL_IDX[1]], v[TANGENTIAL_IDX[2]])
}

/// Voigt-6 matrix of the isotropic density Q(G) = 2 mu |sym G|^2 + lambda (tr G)^2.
pub fn isotropic_qmat(lambda: f64, mu: f64) -> Matrix6<f64> {
    let m = Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);
    Matrix6::identity() * (2.0 * mu) + m * m.transpose() * lambda
}
