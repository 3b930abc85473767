use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use super::chart::Chart;
use super::displacement::DisplacementField;
use super::point::frame_at;
use super::{FrameTag, GeometryError, TangentForm};

/// First variation of the metric, q_V, in covariant coordinates:
/// (q_V)_ij = sym(tau_i . d_j V).
pub fn q_form(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
) -> Result<TangentForm, GeometryError> {
    let p = frame_at(chart, xi)?;
    let dv = v.d(xi);
    let mut q = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            q[(i, j)] = 0.5 * (p.tau[i].dot(&dv[j]) + p.tau[j].dot(&dv[i]));
        }
    }
    Ok(TangentForm::new(q, FrameTag::Covariant))
}

/// Second route to q_V: sym(grad Vbar) - Gamma . Vbar + (V.n) A, where
/// Vbar_k = V . tau_k are the covariant components of V.
pub fn q_form_via_christoffel(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
) -> Result<TangentForm, GeometryError> {
    let p = frame_at(chart, xi)?;
    let val = v.value(xi);
    let dv = v.d(xi);
    // d_i (V . tau_j) = d_i V . tau_j + V . d_i d_j psi
    let mut dcov = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            dcov[(i, j)] = dv[i].dot(&p.tau[j]) + val.dot(&p.d2psi[i][j]);
        }
    }
    let vbar = [val.dot(&p.tau[0]), val.dot(&p.tau[1])];
    let vn = val.dot(&p.n);
    let mut q = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let gamma_v: f64 = (0..2).map(|k| p.christoffel[k][i][j] * vbar[k]).sum();
            q[(i, j)] = 0.5 * (dcov[(i, j)] + dcov[(j, i)]) - gamma_v + vn * p.weingarten[(i, j)];
        }
    }
    Ok(TangentForm::new(q, FrameTag::Covariant))
}

/// The infinitesimal rotation axis field
/// mu_V = T_S (d_1 V x tau_2 + tau_1 x d_2 V) / |tau_1 x tau_2|.
pub fn mu_field(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
) -> Result<Vector3<f64>, GeometryError> {
    let p = frame_at(chart, xi)?;
    let dv = v.d(xi);
    let w = p.tau[0].cross(&p.tau[1]);
    let raw = (dv[0].cross(&p.tau[1]) + p.tau[0].cross(&dv[1])) / w.norm();
    Ok(raw - p.n * p.n.dot(&raw))
}

/// Omega_V = grad_tan V T_S + mu_V (x) n, with grad_tan V = sum_i d_i V (x) tau^i.
pub fn omega_field(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
) -> Result<Matrix3<f64>, GeometryError> {
    let p = frame_at(chart, xi)?;
    let dv = v.d(xi);
    let mu = mu_field(chart, xi, v)?;
    let mut omega = mu * p.n.transpose();
    for i in 0..2 {
        omega += dv[i] * p.tau_dual[i].transpose();
    }
    Ok(omega)
}

/// Linearized second fundamental form in coordinates:
/// (b_V)_ij = n . (d_i d_j V - Gamma^k_ij d_k V).
pub fn b_form(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
) -> Result<TangentForm, GeometryError> {
    let p = frame_at(chart, xi)?;
    let dv = v.d(xi);
    let d2v = v.d2(xi);
    let mut b = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut w = d2v[i][j];
            for k in 0..2 {
                w -= dv[k] * p.christoffel[k][i][j];
            }
            b[(i, j)] = p.n.dot(&w);
        }
    }
    Ok(TangentForm::new(b, FrameTag::Covariant))
}

/// Frame route to b_V: tau_i . (grad_tan V A - grad_tan mu_V) tau_j.
/// Agrees with [`b_form`] when V is an infinitesimal bending. The derivative
/// of mu_V is taken by central differences with the given step.
pub fn b_form_frame_route(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
    step: f64,
) -> Result<TangentForm, GeometryError> {
    let p = frame_at(chart, xi)?;
    let dv = v.d(xi);
    let mut dmu = [Vector3::zeros(); 2];
    for i in 0..2 {
        let mut xp = *xi;
        let mut xm = *xi;
        xp[i] += step;
        xm[i] -= step;
        dmu[i] = (mu_field(chart, &xp, v)? - mu_field(chart, &xm, v)?) / (2.0 * step);
    }
    let a3 = p.weingarten_op();
    let mut b3 = Matrix3::zeros();
    for i in 0..2 {
        b3 += dv[i] * (a3.transpose() * p.tau_dual[i]).transpose();
        b3 -= dmu[i] * p.tau_dual[i].transpose();
    }
    let mut b = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            b[(i, j)] = p.tau[i].dot(&(b3 * p.tau[j]));
        }
    }
    Ok(TangentForm::new(b, FrameTag::Covariant))
}

/// The quadratic form (dV)^2 in covariant coordinates: d_i V . d_j V.
pub fn dv2_form(
    chart: &Chart,
    xi: &Vector2<f64>,
    v: &DisplacementField,
) -> Result<TangentForm, GeometryError> {
    let _ = frame_at(chart, xi)?;
    let dv = v.d(xi);
    let mut m = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = dv[i].dot(&dv[j]);
        }
    }
    Ok(TangentForm::new(m, FrameTag::Covariant))
}

/// Gradient of the nearest-point projection: T_S (I + t A)^{-1}.
pub fn nabla_pi(chart: &Chart, xi: &Vector2<f64>, t: f64) -> Result<Matrix3<f64>, GeometryError> {
    let p = frame_at(chart, xi)?;
    let m = Matrix3::identity() + p.weingarten_op() * t;
    let det = m.determinant();
    if det.abs() < 1e-12 {
        return Err(GeometryError::TubularViolation(det.abs()));
    }
    let minv = m.try_inverse().ok_or(GeometryError::TubularViolation(det.abs()))?;
    Ok(p.t_s() * minv)
}

/// Gradient of the ansatz rho(x) = V + t mu_V on the tube, evaluated through
/// the closed formula
/// grad rho = Omega_V - t b_V(T_S,T_S) - t^2 grad_tan mu_V A
///            + (grad_tan V + t grad_tan mu_V) T_S ((I+tA)^{-1} - (I-tA)).
pub fn ansatz_gradient(
    chart: &Chart,
    xi: &Vector2<f64>,
    t: f64,
    h: f64,
    v: &DisplacementField,
) -> Result<Matrix3<f64>, GeometryError> {
    assert!(t.abs() <= h / 2.0 + 1e-14, "ansatz gradient needs |t| <= h/2");
    let p = frame_at(chart, xi)?;
    let a3 = p.weingarten_op();
    let m = Matrix3::identity() + a3 * t;
    let det = m.determinant();
    if det.abs() < 1e-12 {
        return Err(GeometryError::TubularViolation(det.abs()));
    }
    let minv = m.try_inverse().ok_or(GeometryError::TubularViolation(det.abs()))?;

    let omega = omega_field(chart, xi, v)?;
    let b = b_form(chart, xi, v)?;
    let b_emb = p.embed_covariant(&b.coeffs);

    let (step, _) = v.mode.steps();
    let mut dmu = [Vector3::zeros(); 2];
    for i in 0..2 {
        let mut xp = *xi;
        let mut xm = *xi;
        xp[i] += step;
        xm[i] -= step;
        dmu[i] = (mu_field(chart, &xp, v)? - mu_field(chart, &xm, v)?) / (2.0 * step);
    }
    let mut grad_mu = Matrix3::zeros();
    for i in 0..2 {
        grad_mu += dmu[i] * p.tau_dual[i].transpose();
    }
    let dv = v.d(xi);
    let mut grad_v = Matrix3::zeros();
    for i in 0..2 {
        grad_v += dv[i] * p.tau_dual[i].transpose();
    }

    let qcorr = minv - (Matrix3::identity() - a3 * t);
    let out = omega - b_emb * t - grad_mu * a3 * (t * t)
        + (grad_v + grad_mu * t) * p.t_s() * qcorr;
    Ok(out)
}

/// Exact vs. approximate strain after linearizing the matrix square root:
/// E_exact = (sqrt((I+hK+h^2G)^T (I+hK+h^2G)) - I)/h^2,  E_app = sym G - K^2/2.
/// Returns (E_exact, E_app, ||E_exact - E_app||_F).
pub fn strain_linearization_check(
    k: &Matrix3<f64>,
    g: &Matrix3<f64>,
    h: f64,
) -> Result<(Matrix3<f64>, Matrix3<f64>, f64), GeometryError> {
    let a = k * h + g * (h * h);
    let f = Matrix3::identity() + a;
    let c = f.transpose() * f;
    let eig = nalgebra::SymmetricEigen::new(c);
    let min_eig = eig.eigenvalues.min();
    if min_eig <= 0.0 {
        return Err(GeometryError::SqrtDomain(min_eig));
    }
    let sqrt_vals = eig.eigenvalues.map(f64::sqrt);
    let sqrt_c =
        &eig.eigenvectors * Matrix3::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let e_exact = (sqrt_c - Matrix3::identity()) / (h * h);
    let e_app = (g + g.transpose()) * 0.5 - k * k * 0.5;
    let err = (e_exact - e_app).norm();
    Ok((e_exact, e_app, err))
}

// --- tube map helpers ------------------------------------------------------

/// Point of the tubular neighborhood: psi(xi) + t n(xi).
pub fn tube_point(chart: &Chart, xi: &Vector2<f64>, t: f64) -> Result<Vector3<f64>, GeometryError> {
    let p = frame_at(chart, xi)?;
    Ok(p.x + p.n * t)
}

/// Jacobian of (xi, t) -> psi(xi) + t n(xi): columns tau_i + t d_i n and n.
pub fn tube_jacobian(chart: &Chart, xi: &Vector2<f64>, t: f64) -> Result<Matrix3<f64>, GeometryError> {
    let p = frame_at(chart, xi)?;
    Ok(Matrix3::from_columns(&[p.tau[0] + p.dn[0] * t, p.tau[1] + p.dn[1] * t, p.n]))
}

/// Inverts the tube map by Newton iteration starting from `guess`.
pub fn tube_coords(
    chart: &Chart,
    x: &Vector3<f64>,
    guess: (Vector2<f64>, f64),
) -> Result<(Vector2<f64>, f64), GeometryError> {
    let (mut xi, mut t) = guess;
    for _ in 0..50 {
        let r = tube_point(chart, &xi, t)? - x;
        if r.norm() < 1e-14 {
            break;
        }
        let j = tube_jacobian(chart, &xi, t)?;
        let delta = j
            .lu()
            .solve(&r)
            .ok_or(GeometryError::TubularViolation(j.determinant().abs()))?;
        xi -= Vector2::new(delta[0], delta[1]);
        t -= delta[2];
    }
    Ok((xi, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn dom() -> [[f64; 2]; 2] {
        [[-1.0, 1.0], [-1.0, 1.0]]
    }

    #[test]
    fn rigid_motion_has_zero_q() {
        for chart in [Chart::sphere(1.0, dom()), Chart::torus(2.0, 0.5, dom())] {
            let v =
                DisplacementField::rigid(&chart, Vector3::new(0.3, 0.1, -0.2), Vector3::new(1.0, 2.0, -0.5));
            let q = q_form(&chart, &Vector2::new(0.3, 0.4), &v).unwrap();
            assert!(q.coeffs.norm() < 1e-12, "rigid motions are infinitesimal bendings");
        }
    }

    #[test]
    fn flat_normal_displacement_has_zero_q() {
        let chart = Chart::plane(dom());
        let v = DisplacementField::polynomial([[0.0; 6], [0.0; 6], [0.0, 1.0, 2.0, 0.5, 0.3, 0.1]]);
        let q = q_form(&chart, &Vector2::new(0.2, -0.5), &v).unwrap();
        assert!(q.coeffs.norm() < 1e-13);
    }

    #[test]
    fn flat_in_plane_stretch() {
        let chart = Chart::plane(dom());
        // V = (xi1, 0, 0)
        let v = DisplacementField::polynomial([[0.0, 1.0, 0.0, 0.0, 0.0, 0.0], [0.0; 6], [0.0; 6]]);
        let q = q_form(&chart, &Vector2::new(0.1, 0.1), &v).unwrap();
        assert_relative_eq!(q.coeffs, Matrix2::new(1.0, 0.0, 0.0, 0.0), epsilon = 1e-13);
    }

    #[test]
    fn mu_of_constant_is_zero() {
        let chart = Chart::cylinder(1.0, dom());
        let v = DisplacementField::constant(Vector3::new(1.0, -2.0, 0.5));
        let mu = mu_field(&chart, &Vector2::new(0.5, 0.2), &v).unwrap();
        assert!(mu.norm() < 1e-13);
    }

    #[test]
    fn mu_on_flat_chart_is_negative_gradient() {
        let chart = Chart::plane(dom());
        // V = (0,0,w), w = xi1 + 3 xi2 + xi1^2
        let v = DisplacementField::polynomial([[0.0; 6], [0.0; 6], [0.0, 1.0, 3.0, 1.0, 0.0, 0.0]]);
        let xi = Vector2::new(0.25, -0.3);
        let mu = mu_field(&chart, &xi, &v).unwrap();
        let w1 = 1.0 + 2.0 * xi[0];
        let w2 = 3.0;
        assert_relative_eq!(mu, Vector3::new(-w1, -w2, 0.0), epsilon = 1e-13);
    }

    #[test]
    fn omega_of_rigid_is_the_rotation_generator() {
        let chart = Chart::sphere(1.0, dom());
        let b = Vector3::new(0.7, -0.2, 0.4);
        let v = DisplacementField::rigid(&chart, Vector3::zeros(), b);
        let omega = omega_field(&chart, &Vector2::new(0.3, -0.1), &v).unwrap();
        let hat = Matrix3::new(0.0, -b[2], b[1], b[2], 0.0, -b[0], -b[1], b[0], 0.0);
        assert_relative_eq!(omega, hat, epsilon = 1e-11);
    }

    #[test]
    fn omega_shear_sym_part() {
        let chart = Chart::plane(dom());
        // V = (xi2, 0, 0)
        let v = DisplacementField::polynomial([[0.0, 0.0, 1.0, 0.0, 0.0, 0.0], [0.0; 6], [0.0; 6]]);
        let omega = omega_field(&chart, &Vector2::new(0.0, 0.0), &v).unwrap();
        let sym = (omega + omega.transpose()) * 0.5;
        let mut expected = Matrix3::zeros();
        expected[(0, 1)] = 0.5;
        expected[(1, 0)] = 0.5;
        assert_relative_eq!(sym, expected, epsilon = 1e-13);
    }

    #[test]
    fn b_form_flat_height_profile() {
        let chart = Chart::plane(dom());
        // V = (0,0,xi1^2/2) -> b_V = diag(1,0)
        let v = DisplacementField::polynomial([[0.0; 6], [0.0; 6], [0.0, 0.0, 0.0, 0.5, 0.0, 0.0]]);
        let b = b_form(&chart, &Vector2::new(0.4, 0.2), &v).unwrap();
        assert_relative_eq!(b.coeffs, Matrix2::new(1.0, 0.0, 0.0, 0.0), epsilon = 1e-13);
    }

    #[test]
    fn b_form_of_rigid_vanishes() {
        for chart in [Chart::sphere(1.0, dom()), Chart::cylinder(1.0, dom())] {
            let v = DisplacementField::rigid(&chart, Vector3::new(1.0, 0.0, 0.5), Vector3::new(0.2, 0.4, -1.0));
            let b = b_form(&chart, &Vector2::new(0.3, 0.5), &v).unwrap();
            assert!(b.coeffs.norm() < 1e-10, "rigid motion does not change curvature");
        }
    }

    #[test]
    fn dv2_flat_examples() {
        let chart = Chart::plane(dom());
        let v = DisplacementField::polynomial([[0.0; 6], [0.0; 6], [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]]);
        let f = dv2_form(&chart, &Vector2::new(0.0, 0.0), &v).unwrap();
        assert_relative_eq!(f.coeffs, Matrix2::new(1.0, 0.0, 0.0, 0.0), epsilon = 1e-14);
        let c = DisplacementField::constant(Vector3::new(3.0, 1.0, 2.0));
        assert!(dv2_form(&chart, &Vector2::new(0.0, 0.0), &c).unwrap().coeffs.norm() < 1e-15);
    }

    #[test]
    fn nabla_pi_cases() {
        let chart = Chart::plane(dom());
        let p = frame_at(&chart, &Vector2::new(0.0, 0.0)).unwrap();
        for &t in &[0.0, 0.3, -0.4] {
            let np = nabla_pi(&chart, &Vector2::new(0.0, 0.0), t).unwrap();
            assert_relative_eq!(np, p.t_s(), epsilon = 1e-13);
        }
        // unit cylinder: tangential direction tau_1 is scaled by 1/(1 + t A_11)
        let cyl = Chart::cylinder(1.0, dom());
        let pc = frame_at(&cyl, &Vector2::new(0.2, 0.1)).unwrap();
        let np = nabla_pi(&cyl, &Vector2::new(0.2, 0.1), 0.25).unwrap();
        let a11 = pc.weingarten[(0, 0)];
        assert_relative_eq!(np * pc.tau[0], pc.tau[0] / (1.0 + 0.25 * a11), epsilon = 1e-12);
    }

    #[test]
    fn ansatz_gradient_trivial_cases() {
        let chart = Chart::cylinder(1.0, dom());
        let zero = DisplacementField::constant(Vector3::zeros());
        let g = ansatz_gradient(&chart, &Vector2::new(0.1, 0.3), 0.02, 0.1, &zero).unwrap();
        assert!(g.norm() < 1e-12);

        let v = DisplacementField::rigid(&chart, Vector3::zeros(), Vector3::new(0.3, 0.7, -0.1));
        let g0 = ansatz_gradient(&chart, &Vector2::new(0.1, 0.3), 0.0, 0.1, &v).unwrap();
        let om = omega_field(&chart, &Vector2::new(0.1, 0.3), &v).unwrap();
        assert_relative_eq!(g0, om, epsilon = 1e-9);
    }

    #[test]
    fn strain_linearization_trivial_and_sym() {
        let (e, ea, err) =
            strain_linearization_check(&Matrix3::zeros(), &Matrix3::zeros(), 1e-2).unwrap();
        assert!(e.norm() < 1e-12 && ea.norm() < 1e-12 && err < 1e-12);

        let g = Matrix3::new(1.0, 0.2, 0.0, 0.2, -0.5, 0.1, 0.0, 0.1, 0.3);
        let (_, _, err) = strain_linearization_check(&Matrix3::zeros(), &g, 1e-3).unwrap();
        assert!(err <= 1e-5 * g.norm() * g.norm(), "err = {err:e}");
    }

    #[test]
    fn strain_linearization_first_order_in_h() {
        // with G != 0 the leading error term h sym(K^T G) is genuinely first
        // order; pure rotations (G = 0) are a second-order special case
        let theta: f64 = 0.1;
        let k = Matrix3::new(0.0, -theta, 0.0, theta, 0.0, 0.0, 0.0, 0.0, 0.0);
        let g = Matrix3::new(0.4, 0.1, -0.2, 0.0, -0.3, 0.2, 0.1, 0.0, 0.5);
        let (_, _, e1) = strain_linearization_check(&k, &g, 1e-2).unwrap();
        let (_, _, e2) = strain_linearization_check(&k, &g, 1e-3).unwrap();
        let ratio = e1 / e2;
        assert!((ratio - 10.0).abs() < 1.5, "observed ratio {ratio}");
    }

    #[test]
    fn tube_coords_round_trip() {
        let chart = Chart::torus(2.0, 0.5, dom());
        let xi = Vector2::new(0.3, -0.2);
        let t = 0.1;
        let x = tube_point(&chart, &xi, t).unwrap();
        let (xi2, t2) = tube_coords(&chart, &x, (Vector2::new(0.25, -0.15), 0.0)).unwrap();
        assert_relative_eq!(xi2, xi, epsilon = 1e-10);
        assert_relative_eq!(t2, t, epsilon = 1e-10);
    }
}
