//! The convex-shell sub-regime: on a surface with positive-definite shape
//! operator the tangential relaxation space is all of the mean-zero fields,
//! witnessed by an explicit per-Fourier-mode solve, and the limit bending
//! functional decouples completely from the membrane data.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::assembly::SurfaceQuadrature;
use crate::cell::{
    basis::convex_basis, solve_with, CellDiscretization, CellError, EffectiveForm, PointDensity,
    RegimeSpec,
};
use crate::cell::grid::half_modes;
use crate::geometry::{b_form, frame_at, Chart, DisplacementField, GeometryError};
use crate::material::ReducedDensity;
use crate::voigt::to_voigt3;

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error("shape operator is not uniformly positive definite (sampled minimum {0:.3e})")]
    NotConvex(f64),
    #[error("mode k = ({0}, {1}) produced determinant {2:.3e}; internal inconsistency")]
    SingularMode(i64, i64, f64),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Sampled lower bound on the eigenvalues of the shape operator, certifying
/// the convexity assumption the sub-regime needs.
#[derive(Clone, Copy, Debug)]
pub struct ConvexityCertificate {
    pub c_min: f64,
}

impl ConvexityCertificate {
    pub fn from_weingarten(a: &Matrix2<f64>) -> Self {
        let s = (a + a.transpose()) * 0.5;
        Self { c_min: s.symmetric_eigenvalues().min() }
    }

    /// Smallest shape-operator eigenvalue over an m x m sample of the chart
    /// domain (orthonormal frame).
    pub fn sample(chart: &Chart, m: usize) -> Result<Self, GeometryError> {
        let mut c_min = f64::INFINITY;
        for i in 0..m {
            for j in 0..m {
                let xi = Vector2::new(
                    chart.domain[0][0]
                        + (chart.domain[0][1] - chart.domain[0][0]) * (i as f64 + 0.5) / m as f64,
                    chart.domain[1][0]
                        + (chart.domain[1][1] - chart.domain[1][0]) * (j as f64 + 0.5) / m as f64,
                );
                let p = frame_at(chart, &xi)?;
                c_min = c_min.min(p.weingarten_ortho().symmetric_eigenvalues().min());
            }
        }
        Ok(Self { c_min })
    }

    pub fn check(&self) -> Result<(), ConvexError> {
        if self.c_min > 0.0 {
            Ok(())
        } else {
            Err(ConvexError::NotConvex(self.c_min))
        }
    }

    /// The certified bound with a safety margin against the sampling.
    pub fn margin(&self) -> f64 {
        0.9 * self.c_min
    }
}

/// A mean-zero tangential field on the unit torus in Fourier coordinates:
/// one (b11, b12, b22) coefficient triple per half-lattice mode; the other
/// half is the complex conjugate, so the field is real.
#[derive(Clone, Debug)]
pub struct FourierField {
    pub n: usize,
    pub coeffs: Vec<[Complex64; 3]>,
}

impl FourierField {
    pub fn zero(n: usize) -> Self {
        Self { n, coeffs: vec![[Complex64::new(0.0, 0.0); 3]; half_modes(n).len()] }
    }

    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        let coeffs = half_modes(n)
            .iter()
            .map(|_| {
                [0, 1, 2].map(|_| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        Self { n, coeffs }
    }

    pub fn modes(&self) -> impl Iterator<Item = ([i64; 2], [Complex64; 3])> + '_ {
        half_modes(self.n).into_iter().zip(self.coeffs.iter().copied())
    }

    /// Pointwise value of the (real) field.
    pub fn eval(&self, y: [f64; 2]) -> Matrix2<f64> {
        let mut v = [0.0; 3];
        for (k, b) in self.modes() {
            let phase = 2.0 * std::f64::consts::PI * (k[0] as f64 * y[0] + k[1] as f64 * y[1]);
            let e = Complex64::new(phase.cos(), phase.sin());
            for j in 0..3 {
                v[j] += 2.0 * (b[j] * e).re;
            }
        }
        Matrix2::new(v[0], v[1], v[1], v[2])
    }
}

/// Per-mode solution data: the coefficients of the tangential field w and of
/// the scalar multiplier phi that reproduce the target field.
#[derive(Clone, Debug)]
pub struct ModeSolution {
    pub n: usize,
    pub modes: Vec<ModeData>,
}

#[derive(Clone, Copy, Debug)]
pub struct ModeData {
    pub k: [i64; 2],
    pub c: [Complex64; 2],
    pub d: Complex64,
    pub det: f64,
}

impl ModeData {
    /// The (11, 12, 22) components this mode contributes before the
    /// conjugate doubling: sym-gradient part plus d times the shape operator.
    pub fn strain(&self, a: &Matrix2<f64>) -> [Complex64; 3] {
        let (k1, k2) = (self.k[0] as f64, self.k[1] as f64);
        [
            k1 * self.c[0] + self.d * a[(0, 0)],
            0.5 * (k2 * self.c[0] + k1 * self.c[1]) + self.d * a[(0, 1)],
            k2 * self.c[1] + self.d * a[(1, 1)],
        ]
    }
}

impl ModeSolution {
    /// The reconstructed field sym grad w + phi A at a point.
    pub fn eval_strain(&self, a: &Matrix2<f64>, y: [f64; 2]) -> Matrix2<f64> {
        let mut v = [0.0; 3];
        for m in &self.modes {
            let phase = 2.0 * std::f64::consts::PI * (m.k[0] as f64 * y[0] + m.k[1] as f64 * y[1]);
            let e = Complex64::new(phase.cos(), phase.sin());
            let s = m.strain(a);
            for j in 0..3 {
                v[j] += 2.0 * (s[j] * e).re;
            }
        }
        Matrix2::new(v[0], v[1], v[1], v[2])
    }

    /// The real vector field w (the system variables c are the symbols of
    /// the gradient, so w-hat = c / (2 pi i)).
    pub fn eval_w(&self, y: [f64; 2]) -> Vector2<f64> {
        let tpi = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut w = Vector2::zeros();
        for m in &self.modes {
            let phase = 2.0 * std::f64::consts::PI * (m.k[0] as f64 * y[0] + m.k[1] as f64 * y[1]);
            let e = Complex64::new(phase.cos(), phase.sin());
            for j in 0..2 {
                w[j] += 2.0 * (m.c[j] / tpi * e).re;
            }
        }
        w
    }

    /// The real scalar field phi.
    pub fn eval_phi(&self, y: [f64; 2]) -> f64 {
        let mut p = 0.0;
        for m in &self.modes {
            let phase = 2.0 * std::f64::consts::PI * (m.k[0] as f64 * y[0] + m.k[1] as f64 * y[1]);
            let e = Complex64::new(phase.cos(), phase.sin());
            p += 2.0 * (m.d * e).re;
        }
        p
    }
}

/// Solves, mode by mode, for the pair (w, phi) with
/// sym grad_y w + phi A = B. The per-mode 3x3 system is nonsingular whenever
/// A is positive definite; its determinant grows like |k|^2.
pub fn solve_modes(a: &Matrix2<f64>, b: &FourierField) -> Result<ModeSolution, ConvexError> {
    ConvexityCertificate::from_weingarten(a).check()?;
    let mut modes = Vec::with_capacity(b.coeffs.len());
    for (k, bk) in b.modes() {
        let (k1, k2) = (k[0] as f64, k[1] as f64);
        let m = Matrix3::new(
            k1,
            0.0,
            a[(0, 0)],
            0.5 * k2,
            0.5 * k1,
            a[(0, 1)],
            0.0,
            k2,
            a[(1, 1)],
        );
        let det = m.determinant();
        if det.abs() < 1e-14 {
            return Err(ConvexError::SingularMode(k[0], k[1], det));
        }
        let lu = m.lu();
        let re = lu
            .solve(&Vector3::new(bk[0].re, bk[1].re, bk[2].re))
            .ok_or(ConvexError::SingularMode(k[0], k[1], det))?;
        let im = lu
            .solve(&Vector3::new(bk[0].im, bk[1].im, bk[2].im))
            .ok_or(ConvexError::SingularMode(k[0], k[1], det))?;
        modes.push(ModeData {
            k,
            c: [Complex64::new(re[0], im[0]), Complex64::new(re[1], im[1])],
            d: Complex64::new(re[2], im[2]),
            det: det.abs(),
        });
    }
    Ok(ModeSolution { n: b.n, modes })
}

/// Residual of the eliminated scalar equation
/// (A11 k2^2 - 2 A12 k1 k2 + A22 k1^2) d = k2^2 b11 - 2 k1 k2 b12 + k1^2 b22
/// (the cofactor-contracted Hessian of phi against the curl-curl of B),
/// maximized over modes.
pub fn curlcurl_check(a: &Matrix2<f64>, b: &FourierField, sol: &ModeSolution) -> f64 {
    let mut worst: f64 = 0.0;
    for ((k, bk), m) in b.modes().zip(&sol.modes) {
        let (k1, k2) = (k[0] as f64, k[1] as f64);
        let sym = a[(0, 0)] * k2 * k2 - 2.0 * a[(0, 1)] * k1 * k2 + a[(1, 1)] * k1 * k1;
        let rhs = k2 * k2 * bk[0] - 2.0 * k1 * k2 * bk[1] + k1 * k1 * bk[2];
        worst = worst.max((sym * m.d - rhs).norm());
    }
    worst
}

/// The convex sub-regime effective form: relaxation over mean-zero
/// tangential fields B(y), with the free strain block eliminated into the
/// reduced density. For t-independent densities the bending block decouples
/// with the 1/12 factor and sees no relaxation at all.
pub fn convex_effective_form(
    q2: &ReducedDensity,
    disc: &CellDiscretization,
) -> Result<EffectiveForm, CellError> {
    disc.validate()?;
    let regime = RegimeSpec::zero_sub_convex(Matrix2::zeros());
    let basis = convex_basis(&regime, disc.grid(), disc.n);
    solve_with(basis, PointDensity::Reduced(q2.clone()), disc.solver)
}

/// The simplified limit bending functional of a convex shell: the bending
/// moment of the reduced density applied to the linearized second
/// fundamental form, averaged over the cell and integrated over the surface.
/// For t-independent densities the thickness moment is exactly (1/12) Q2.
pub fn convex_bending_functional(
    chart: &Chart,
    quad: &SurfaceQuadrature,
    q2: &ReducedDensity,
    v: &DisplacementField,
    ny: usize,
) -> Result<f64, ConvexError> {
    let cert = ConvexityCertificate::sample(chart, 8)?;
    cert.check()?;
    let tq = crate::cell::grid::gauss_legendre(3);
    let mut total = 0.0;
    for &(xi, w) in &quad.points {
        let p = frame_at(chart, &xi)?;
        let b = b_form(chart, &xi, v)?.ortho_coeffs(&p);
        let bv = to_voigt3(&b);
        let mut cell_mean = 0.0;
        for i in 0..ny {
            for j in 0..ny {
                let y = [(i as f64 + 0.5) / ny as f64, (j as f64 + 0.5) / ny as f64];
                // thickness moment int_I t^2 Q2(t, y, b) dt
                let mut moment = 0.0;
                for &(x, wt) in &tq {
                    let t = 0.5 * x;
                    moment += 0.5 * wt * t * t * q2.eval(t, y, &bv);
                }
                cell_mean += moment;
            }
        }
        total += w * cell_mean / (ny * ny) as f64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{reduce_q2, QuadraticDensity};
    use crate::voigt::isotropic_qmat;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn hand_solved_mode() {
        let a = Matrix2::identity();
        let mut b = FourierField::zero(1);
        let modes = half_modes(1);
        let idx = modes.iter().position(|&k| k == [1, 0]).unwrap();
        b.coeffs[idx] = [Complex64::new(1.0, 0.0); 3];
        let sol = solve_modes(&a, &b).unwrap();
        let m = sol.modes[idx];
        assert_relative_eq!(m.d.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.c[0].norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.c[1].re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_shape_operator_determinants() {
        let a = Matrix2::identity();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let b = FourierField::random(4, &mut rng);
        let sol = solve_modes(&a, &b).unwrap();
        for m in &sol.modes {
            let k2 = (m.k[0] * m.k[0] + m.k[1] * m.k[1]) as f64;
            assert_relative_eq!(m.det, k2 / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reconstruction_round_trip() {
        let a = Matrix2::new(2.0, 0.3, 0.3, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let b = FourierField::random(4, &mut rng);
        let sol = solve_modes(&a, &b).unwrap();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                let y = [i as f64 / 12.0, j as f64 / 12.0];
                let target = b.eval(y);
                worst = worst.max((sol.eval_strain(&a, y) - target).norm());
                scale = scale.max(target.norm());
            }
        }
        assert!(worst <= 1e-10 * scale, "residual {worst:e} vs scale {scale:e}");
        assert!(curlcurl_check(&a, &b, &sol) <= 1e-10 * scale);
        // w and phi genuinely produce the strain: check via finite differences
        let y = [0.3, 0.7];
        let h = 1e-6;
        let mut sg = Matrix2::zeros();
        for l in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[l] += h;
            ym[l] -= h;
            let dw = (sol.eval_w(yp) - sol.eval_w(ym)) / (2.0 * h);
            for r in 0..2 {
                sg[(r, l)] += 0.5 * dw[r];
                sg[(l, r)] += 0.5 * dw[r];
            }
        }
        let rec = sg + a * sol.eval_phi(y);
        assert!((rec - b.eval(y)).norm() < 1e-6 * (1.0 + scale));
    }

    #[test]
    fn perturbation_is_detected() {
        let a = Matrix2::identity();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let b = FourierField::random(2, &mut rng);
        let mut sol = solve_modes(&a, &b).unwrap();
        sol.modes[3].d += Complex64::new(1e-3, 0.0);
        let r = curlcurl_check(&a, &b, &sol);
        assert!(r > 1e-5, "corruption not detected: {r:e}");
    }

    #[test]
    fn flat_operator_rejected() {
        let a = Matrix2::zeros();
        let b = FourierField::zero(1);
        assert!(matches!(solve_modes(&a, &b), Err(ConvexError::NotConvex(_))));
    }

    #[test]
    fn homogeneous_effective_form_collapses() {
        let q2 = reduce_q2(&QuadraticDensity::constant(isotropic_qmat(1.0, 1.0)));
        let form = convex_effective_form(&q2, &CellDiscretization::new(2, 2)).unwrap();
        let d10 = Matrix2::new(1.0, 0.0, 0.0, 0.0);
        let z = Matrix2::zeros();
        assert_relative_eq!(form.eval(&d10, &z), 8.0 / 3.0, epsilon = 1e-8);
        assert_relative_eq!(form.eval(&z, &d10), 2.0 / 9.0, epsilon = 1e-8);
    }
}
