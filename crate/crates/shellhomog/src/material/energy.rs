use std::sync::Arc;

use nalgebra::{Matrix3, Matrix6};

use crate::voigt::from_voigt6;

use super::MaterialError;

type WFn = Arc<dyn Fn(f64, [f64; 2], &Matrix3<f64>) -> f64 + Send + Sync>;

/// A nonlinear stored-energy density W(t, y, F) at a fixed surface point,
/// together with its class constants.
#[derive(Clone)]
pub struct EnergyDensity {
    w: WFn,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
}

impl EnergyDensity {
    pub fn new(w: WFn, alpha: f64, beta: f64, rho: f64) -> Self {
        Self { w, alpha, beta, rho }
    }

    pub fn eval(&self, t: f64, y: [f64; 2], f: &Matrix3<f64>) -> f64 {
        (self.w)(t, y, f)
    }

    /// St. Venant-Kirchhoff: W(F) = mu |E|^2 + lambda/2 (tr E)^2 with
    /// E = (F^T F - I)/2. Its quadratic expansion at the identity is
    /// Q(G) = mu |sym G|^2 + lambda/2 (tr G)^2. The class constants cover
    /// the neighborhood dist^2(F, SO(3)) <= rho = 1/4: there the singular
    /// values lie in [1/2, 3/2], so |E|^2 = sum (s_i - 1)^2 (s_i + 1)^2 / 4
    /// is pinched between (9/16) dist^2 and (25/16) dist^2.
    pub fn st_venant_kirchhoff(lambda: f64, mu: f64) -> Self {
        Self::new(
            Arc::new(move |_t, _y, f: &Matrix3<f64>| {
                let e = (f.transpose() * f - Matrix3::identity()) * 0.5;
                mu * e.norm_squared() + 0.5 * lambda * e.trace() * e.trace()
            }),
            0.5 * mu,
            2.0 * (mu + 1.5 * lambda),
            0.25,
        )
    }

    /// Squared distance to SO(3); expansion Q(G) = |sym G|^2.
    pub fn dist_squared_so3() -> Self {
        Self::new(Arc::new(move |_t, _y, f: &Matrix3<f64>| dist2_so3(f)), 1.0, 1.0, f64::INFINITY)
    }

    /// Hessian-at-identity quadratic form, by symmetric second-order central
    /// differences over the six symmetric basis directions, with an expansion
    /// ladder validating W(I + sG) = s^2 Q(G) + o(s^2).
    pub fn quadratic_expansion(
        &self,
        t: f64,
        y: [f64; 2],
    ) -> Result<Matrix6<f64>, MaterialError> {
        let s = 1e-4;
        let basis: Vec<Matrix3<f64>> = (0..6)
            .map(|a| {
                let mut v = nalgebra::Vector6::zeros();
                v[a] = 1.0;
                from_voigt6(&v)
            })
            .collect();
        let mut q = Matrix6::zeros();
        for a in 0..6 {
            for b in a..6 {
                let plus = basis[a] + basis[b];
                let minus = basis[a] - basis[b];
                let id = Matrix3::identity();
                let num = self.eval(t, y, &(id + plus * s)) + self.eval(t, y, &(id - plus * s))
                    - self.eval(t, y, &(id + minus * s))
                    - self.eval(t, y, &(id - minus * s));
                let h = num / (8.0 * s * s);
                q[(a, b)] = h;
                q[(b, a)] = h;
            }
        }

        // expansion ladder on the basis directions plus a mixed probe
        let mut probes = basis.clone();
        probes.push(basis[0] + basis[3] * 0.5 - basis[5] * 0.25);
        for g in &probes {
            let v = crate::voigt::to_voigt6(g);
            let qg = (v.transpose() * q * v)[0];
            let mut ladder = Vec::new();
            for &step in &[1e-2, 1e-3, 1e-4] {
                let id = Matrix3::identity();
                let r = (self.eval(t, y, &(id + g * step)) - step * step * qg).abs()
                    / (step * step);
                ladder.push(r);
            }
            let scale = 1.0 + qg.abs();
            let ok = ladder[1] <= ladder[0] * 0.95 + 1e-9
                && ladder[2] <= ladder[1] * 0.95 + 1e-7
                && ladder[2] <= 1e-3 * scale;
            if !ok {
                return Err(MaterialError::ExpansionMismatch(ladder));
            }
        }
        Ok(q)
    }
}

/// dist^2(F, SO(3)) via the singular values of F.
pub fn dist2_so3(f: &Matrix3<f64>) -> f64 {
    let svd = f.svd(false, false);
    let mut s = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sign = if f.determinant() >= 0.0 { 1.0 } else { -1.0 };
    (s[0] - 1.0).powi(2) + (s[1] - 1.0).powi(2) + (s[2] - sign).powi(2)
}
