use std::sync::Arc;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::voigt::{embed_tangential, tangential_part, FREE_IDX, TANGENTIAL_IDX};

use super::MaterialError;

type QFn = Arc<dyn Fn(f64, [f64; 2]) -> Matrix6<f64> + Send + Sync>;
type Q2Fn = Arc<dyn Fn(f64, [f64; 2]) -> Matrix3<f64> + Send + Sync>;

/// The microscopic quadratic form Q(t, y, .) as an SPD operator on symmetric
/// 3x3 matrices in orthonormal Voigt coordinates.
#[derive(Clone)]
pub struct QuadraticDensity {
    qmat: QFn,
    pub alpha: f64,
    pub beta: f64,
}

impl QuadraticDensity {
    pub fn new(qmat: QFn, alpha: f64, beta: f64) -> Self {
        Self { qmat, alpha, beta }
    }

    pub fn constant(q: Matrix6<f64>) -> Self {
        let eig = q.symmetric_eigenvalues();
        let (alpha, beta) = (eig.min(), eig.max());
        Self::new(Arc::new(move |_, _| q), alpha, beta)
    }

    pub fn qmat(&self, t: f64, y: [f64; 2]) -> Matrix6<f64> {
        (self.qmat)(t, y)
    }

    pub fn eval(&self, t: f64, y: [f64; 2], v: &Vector6<f64>) -> f64 {
        (v.transpose() * self.qmat(t, y) * v)[0]
    }
}

/// Result of eliminating the out-of-plane strain components: the 3x3 reduced
/// density on tangential forms plus the linear minimizer map of the
/// eliminated block.
#[derive(Clone)]
pub struct ReducedDensity {
    q2: Q2Fn,
    elim: Q2Fn,
    pub alpha: f64,
    pub beta: f64,
}

impl ReducedDensity {
    pub fn q2mat(&self, t: f64, y: [f64; 2]) -> Matrix3<f64> {
        (self.q2)(t, y)
    }

    pub fn eval(&self, t: f64, y: [f64; 2], v: &Vector3<f64>) -> f64 {
        (v.transpose() * self.q2mat(t, y) * v)[0]
    }

    /// Optimal out-of-plane components (Voigt entries 33, 13, 23) for a given
    /// tangential load, M_free = E v_tan.
    pub fn free_minimizer(&self, t: f64, y: [f64; 2], v_tan: &Vector3<f64>) -> Vector3<f64> {
        (self.elim)(t, y) * v_tan
    }
}

/// Static condensation of the out-of-plane block: returns (Q2, E) with
/// Q2 = A_TT - A_TF A_FF^{-1} A_FT and E = -A_FF^{-1} A_FT.
pub fn plane_stress_reduce(q: &Matrix6<f64>) -> Result<(Matrix3<f64>, Matrix3<f64>), MaterialError> {
    let mut a_tt = Matrix3::zeros();
    let mut a_tf = Matrix3::zeros();
    let mut a_ff = Matrix3::zeros();
    for (a, &i) in TANGENTIAL_IDX.iter().enumerate() {
        for (b, &j) in TANGENTIAL_IDX.iter().enumerate() {
            a_tt[(a, b)] = q[(i, j)];
        }
        for (b, &j) in FREE_IDX.iter().enumerate() {
            a_tf[(a, b)] = q[(i, j)];
        }
    }
    for (a, &i) in FREE_IDX.iter().enumerate() {
        for (b, &j) in FREE_IDX.iter().enumerate() {
            a_ff[(a, b)] = q[(i, j)];
        }
    }
    let chol = nalgebra::Cholesky::new(a_ff).ok_or(MaterialError::SingularBlock)?;
    let e = -chol.solve(&a_tf.transpose());
    let q2 = a_tt + a_tf * e;
    Ok(((q2 + q2.transpose()) * 0.5, e))
}

/// Pointwise plane-stress-type relaxation Q2 of a quadratic density.
pub fn reduce_q2(q: &QuadraticDensity) -> ReducedDensity {
    let src = q.clone();
    let src2 = q.clone();
    ReducedDensity {
        q2: Arc::new(move |t, y| {
            plane_stress_reduce(&src.qmat(t, y))
                .expect("density violates the two-sided bound: out-of-plane block singular")
                .0
        }),
        elim: Arc::new(move |t, y| {
            plane_stress_reduce(&src2.qmat(t, y))
                .expect("density violates the two-sided bound: out-of-plane block singular")
                .1
        }),
        alpha: q.alpha,
        beta: q.beta,
    }
}

/// Full-density value of a tangential load with explicit out-of-plane
/// components filled in. Used by tests to confirm Q2(q) <= Q(embed(q)).
pub fn embed_and_eval(q: &QuadraticDensity, t: f64, y: [f64; 2], v_tan: &Vector3<f64>) -> f64 {
    q.eval(t, y, &embed_tangential(v_tan))
}

/// Reconstructs a full Voigt-6 vector from a tangential part and free part.
pub fn compose_full(v_tan: &Vector3<f64>, v_free: &Vector3<f64>) -> Vector6<f64> {
    let mut out = embed_tangential(v_tan);
    for (a, &i) in FREE_IDX.iter().enumerate() {
        out[i] = v_free[a];
    }
    out
}

/// Extracts (tangential, free) Voigt-3 pairs from a Voigt-6 vector.
pub fn split_full(v: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let t = tangential_part(v);
    let f = Vector3::new(v[FREE_IDX[0]], v[FREE_IDX[1]], v[FREE_IDX[2]]);
    (t, f)
}
