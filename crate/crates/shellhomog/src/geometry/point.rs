use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use super::chart::Chart;
use super::GeometryError;

/// Minimum admissible det(metric); below this the chart counts as degenerate.
pub const ETA_MIN: f64 = 1e-10;

/// Full frame data of a chart at one parameter point.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub xi: Vector2<f64>,
    /// Point on the surface.
    pub x: Vector3<f64>,
    /// Covariant tangent vectors tau_i = d_i psi.
    pub tau: [Vector3<f64>; 2],
    /// Dual frame tau^i (tau^i . tau_j = delta^i_j, tau^i . n = 0).
    pub tau_dual: [Vector3<f64>; 2],
    /// Unit normal n = tau_1 x tau_2 / |tau_1 x tau_2|.
    pub n: Vector3<f64>,
    /// Partial derivatives of the normal, d_i n.
    pub dn: [Vector3<f64>; 2],
    /// Metric g_ij = tau_i . tau_j.
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
    /// Weingarten coordinates A_ij = (d_i n) . tau_j = -n . d_i d_j psi.
    ///
    /// This is the convention A = grad_tan n, i.e. the *negated*
    /// second fundamental form; the sign is fixed here, once, by the normal
    /// orientation above. On the unit cylinder with outward normal A_11 = +1,
    /// and on a sphere with outward normal A = +g/r.
    pub weingarten: Matrix2<f64>,
    /// Christoffel symbols Gamma^k_ij, indexed [k][i][j].
    pub christoffel: [[[f64; 2]; 2]; 2],
    /// Orthonormal tangent pair from Gram-Schmidt on (tau_1, tau_2).
    pub ortho_frame: [Vector3<f64>; 2],
    /// Change-of-basis matrix P with e_a = sum_i P[(i,a)] tau_i.
    pub gs: Matrix2<f64>,
    /// Second derivatives of the chart at xi.
    pub d2psi: [[Vector3<f64>; 2]; 2],
}

impl SurfacePoint {
    /// Orthogonal projection T_S = I - n (x) n onto the tangent plane.
    pub fn t_s(&self) -> Matrix3<f64> {
        Matrix3::identity() - self.n * self.n.transpose()
    }

    /// The Weingarten map extended to R^3 by A n = 0, as a 3x3 matrix.
    pub fn weingarten_op(&self) -> Matrix3<f64> {
        self.dn[0] * self.tau_dual[0].transpose() + self.dn[1] * self.tau_dual[1].transpose()
    }

    /// Weingarten coefficients in the orthonormal frame.
    pub fn weingarten_ortho(&self) -> Matrix2<f64> {
        self.gs.transpose() * self.weingarten * self.gs
    }

    /// Embeds covariant coefficients b_ij as the 3x3 matrix
    /// sum_ij b_ij tau^i (x) tau^j (the form B(T_S ., T_S .)).
    pub fn embed_covariant(&self, b: &Matrix2<f64>) -> Matrix3<f64> {
        let mut out = Matrix3::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out += self.tau_dual[i] * self.tau_dual[j].transpose() * b[(i, j)];
            }
        }
        out
    }
}

/// Assembles the full frame at `xi`.
pub fn frame_at(chart: &Chart, xi: &Vector2<f64>) -> Result<SurfacePoint, GeometryError> {
    if !chart.contains(xi) {
        return Err(GeometryError::OutOfDomain(xi[0], xi[1]));
    }
    let x = chart.psi(xi);
    let tau = chart.d_psi(xi);
    let d2psi = chart.d2_psi(xi);

    let metric = Matrix2::new(
        tau[0].dot(&tau[0]),
        tau[0].dot(&tau[1]),
        tau[1].dot(&tau[0]),
        tau[1].dot(&tau[1]),
    );
    let det = metric.determinant();
    if det < ETA_MIN {
        return Err(GeometryError::DegenerateChart(xi[0], xi[1], det));
    }
    let metric_inv = metric.try_inverse().expect("det checked above");

    let w = tau[0].cross(&tau[1]);
    let n = w / w.norm();

    // dual frame tau^i = g^{ij} tau_j
    let tau_dual = [
        tau[0] * metric_inv[(0, 0)] + tau[1] * metric_inv[(0, 1)],
        tau[0] * metric_inv[(1, 0)] + tau[1] * metric_inv[(1, 1)],
    ];

    // d_i n = (I - n n^T)(d_i w)/|w|
    let mut dn = [Vector3::zeros(); 2];
    for i in 0..2 {
        let dw = d2psi[i][0].cross(&tau[1]) + tau[0].cross(&d2psi[i][1]);
        let v = dw / w.norm();
        dn[i] = v - n * n.dot(&v);
    }

    // A_ij = (d_i n) . tau_j; symmetric up to derivative noise
    let mut a = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            a[(i, j)] = dn[i].dot(&tau[j]);
        }
    }
    let weingarten = (a + a.transpose()) * 0.5;

    // Gamma^k_ij = g^{kl} (tau_l . d_i d_j psi)
    let mut christoffel = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += metric_inv[(k, l)] * tau[l].dot(&d2psi[i][j]);
                }
                christoffel[k][i][j] = s;
            }
        }
    }

    // Gram-Schmidt: g = L L^T, P = L^{-T}, e_a = sum_i P_ia tau_i
    let chol = nalgebra::Cholesky::new(metric)
        .ok_or(GeometryError::DegenerateChart(xi[0], xi[1], det))?;
    let l = chol.l();
    let gs = l
        .transpose()
        .try_inverse()
        .ok_or(GeometryError::DegenerateChart(xi[0], xi[1], det))?;
    let ortho_frame = [
        tau[0] * gs[(0, 0)] + tau[1] * gs[(1, 0)],
        tau[0] * gs[(0, 1)] + tau[1] * gs[(1, 1)],
    ];

    Ok(SurfacePoint {
        xi: *xi,
        x,
        tau,
        tau_dual,
        n,
        dn,
        metric,
        metric_inv,
        weingarten,
        christoffel,
        ortho_frame,
        gs,
        d2psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dom() -> [[f64; 2]; 2] {
        [[-1.0, 1.0], [-1.0, 1.0]]
    }

    #[test]
    fn flat_chart_frame() {
        let chart = Chart::plane(dom());
        let p = frame_at(&chart, &Vector2::new(0.3, -0.2)).unwrap();
        assert_relative_eq!(p.n, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-14);
        assert_relative_eq!(p.weingarten.norm(), 0.0, epsilon = 1e-14);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(p.christoffel[k][i][j].abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn cylinder_weingarten_sign() {
        let chart = Chart::cylinder(1.0, dom());
        let p = frame_at(&chart, &Vector2::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(p.metric, Matrix2::identity(), epsilon = 1e-14);
        // outward normal, so A_11 = +1
        assert_relative_eq!(p.weingarten[(0, 0)], 1.0, epsilon = 1e-13);
        assert!(p.weingarten[(0, 1)].abs() < 1e-13);
        assert!(p.weingarten[(1, 1)].abs() < 1e-13);
    }

    #[test]
    fn sphere_weingarten_is_metric() {
        let chart = Chart::sphere(1.0, dom());
        for &xi in &[Vector2::new(0.2, 0.3), Vector2::new(-0.4, 0.1)] {
            let p = frame_at(&chart, &xi).unwrap();
            assert_relative_eq!(p.weingarten, p.metric, epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_frame_identity() {
        let chart = Chart::torus(2.0, 0.5, dom());
        let p = frame_at(&chart, &Vector2::new(0.7, 0.9)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(p.tau_dual[i].dot(&p.tau[j]), d, epsilon = 1e-12);
            }
            assert!(p.tau_dual[i].dot(&p.n).abs() < 1e-12);
        }
        assert_relative_eq!(p.n.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ortho_frame_is_orthonormal() {
        let chart = Chart::graph(0.5, -0.3, 0.2, dom());
        let p = frame_at(&chart, &Vector2::new(0.4, -0.6)).unwrap();
        assert_relative_eq!(p.ortho_frame[0].norm(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(p.ortho_frame[1].norm(), 1.0, epsilon = 1e-13);
        assert!(p.ortho_frame[0].dot(&p.ortho_frame[1]).abs() < 1e-13);
        assert!(p.ortho_frame[0].dot(&p.n).abs() < 1e-13);
    }

    #[test]
    fn out_of_domain_rejected() {
        let chart = Chart::plane(dom());
        assert!(matches!(
            frame_at(&chart, &Vector2::new(5.0, 0.0)),
            Err(GeometryError::OutOfDomain(_, _))
        ));
    }

    #[test]
    fn fd_derivatives_match_analytic() {
        let a = Chart::sphere(1.0, dom());
        let f = Chart::sphere(1.0, dom()).with_finite_differences(1e-5, 1e-4);
        let xi = Vector2::new(0.3, 0.25);
        let (da, df) = (a.d_psi(&xi), f.d_psi(&xi));
        for i in 0..2 {
            assert!((da[i] - df[i]).norm() < 1e-9, "first derivative step^2 accuracy");
        }
        let (d2a, d2f) = (a.d2_psi(&xi), f.d2_psi(&xi));
        for i in 0..2 {
            for j in 0..2 {
                assert!((d2a[i][j] - d2f[i][j]).norm() < 1e-6);
            }
        }
    }
}
