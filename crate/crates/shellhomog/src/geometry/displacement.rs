use std::sync::Arc;

use nalgebra::{Vector2, Vector3};

use super::chart::{central_first, central_second, Chart, D2Map3, DMap3, DerivativeMode, Map3};
use super::point::frame_at;

/// A displacement field V of the surface, given in chart coordinates.
#[derive(Clone)]
pub struct DisplacementField {
    v: Map3,
    d_v: Option<DMap3>,
    d2_v: Option<D2Map3>,
    pub mode: DerivativeMode,
}

impl DisplacementField {
    pub fn new(v: Map3, d_v: Option<DMap3>, d2_v: Option<D2Map3>) -> Self {
        let mode = if d_v.is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::default_fd()
        };
        Self { v, d_v, d2_v, mode }
    }

    pub fn with_finite_differences(mut self, step1: f64, step2: f64) -> Self {
        self.d_v = None;
        self.d2_v = None;
        self.mode = DerivativeMode::FiniteDifference { step1, step2 };
        self
    }

    pub fn value(&self, xi: &Vector2<f64>) -> Vector3<f64> {
        (self.v)(xi)
    }

    pub fn d(&self, xi: &Vector2<f64>) -> [Vector3<f64>; 2] {
        if let Some(d) = &self.d_v {
            return d(xi);
        }
        let (h, _) = self.mode.steps();
        central_first(|x| (self.v)(x), xi, h)
    }

    pub fn d2(&self, xi: &Vector2<f64>) -> [[Vector3<f64>; 2]; 2] {
        if let Some(d2) = &self.d2_v {
            return d2(xi);
        }
        let (_, h) = self.mode.steps();
        if let Some(d) = &self.d_v {
            let mut out = [[Vector3::zeros(); 2]; 2];
            for i in 0..2 {
                let mut xp = *xi;
                let mut xm = *xi;
                xp[i] += h;
                xm[i] -= h;
                let (dp, dm) = (d(&xp), d(&xm));
                for j in 0..2 {
                    out[i][j] = (dp[j] - dm[j]) / (2.0 * h);
                }
            }
            let mixed = (out[0][1] + out[1][0]) * 0.5;
            out[0][1] = mixed;
            out[1][0] = mixed;
            out
        } else {
            central_second(|x| (self.v)(x), xi, h)
        }
    }

    // --- built-in families ------------------------------------------------

    pub fn constant(c: Vector3<f64>) -> Self {
        Self::new(
            Arc::new(move |_: &Vector2<f64>| c),
            Some(Arc::new(|_: &Vector2<f64>| [Vector3::zeros(); 2])),
            Some(Arc::new(|_: &Vector2<f64>| [[Vector3::zeros(); 2]; 2])),
        )
    }

    /// Rigid motion V(x) = a + b x psi(xi); an infinitesimal bending of every
    /// chart.
    pub fn rigid(chart: &Chart, a: Vector3<f64>, b: Vector3<f64>) -> Self {
        let c1 = chart.clone();
        let c2 = chart.clone();
        let c3 = chart.clone();
        Self::new(
            Arc::new(move |xi: &Vector2<f64>| a + b.cross(&c1.psi(xi))),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let d = c2.d_psi(xi);
                [b.cross(&d[0]), b.cross(&d[1])]
            })),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let d2 = c3.d2_psi(xi);
                let mut out = [[Vector3::zeros(); 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        out[i][j] = b.cross(&d2[i][j]);
                    }
                }
                out
            })),
        )
    }

    /// Per-component quadratic polynomial in xi. Each row of `coeffs` holds
    /// (c, c_1, c_2, c_11, c_12, c_22) for
    /// c + c_1 xi1 + c_2 xi2 + c_11 xi1^2 + c_12 xi1 xi2 + c_22 xi2^2.
    pub fn polynomial(coeffs: [[f64; 6]; 3]) -> Self {
        let eval = move |xi: &Vector2<f64>| {
            let (u, v) = (xi[0], xi[1]);
            Vector3::from_fn(|r, _| {
                let c = coeffs[r];
                c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v
            })
        };
        Self::new(
            Arc::new(eval),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                [
                    Vector3::from_fn(|r, _| {
                        let c = coeffs[r];
                        c[1] + 2.0 * c[3] * u + c[4] * v
                    }),
                    Vector3::from_fn(|r, _| {
                        let c = coeffs[r];
                        c[2] + c[4] * u + 2.0 * c[5] * v
                    }),
                ]
            })),
            Some(Arc::new(move |_: &Vector2<f64>| {
                let d11 = Vector3::from_fn(|r, _| 2.0 * coeffs[r][3]);
                let d12 = Vector3::from_fn(|r, _| coeffs[r][4]);
                let d22 = Vector3::from_fn(|r, _| 2.0 * coeffs[r][5]);
                [[d11, d12], [d12, d22]]
            })),
        )
    }

    /// Normal displacement V = w(xi) n(xi) for a quadratic polynomial w
    /// with coefficients as in [`Self::polynomial`]. First derivatives are
    /// assembled from the chart frame; second derivatives fall back to
    /// differentiating the analytic first derivative.
    pub fn normal_graph(chart: &Chart, w: [f64; 6]) -> Self {
        let weval = move |xi: &Vector2<f64>| {
            let (u, v) = (xi[0], xi[1]);
            w[0] + w[1] * u + w[2] * v + w[3] * u * u + w[4] * u * v + w[5] * v * v
        };
        let dweval = move |xi: &Vector2<f64>| {
            let (u, v) = (xi[0], xi[1]);
            [w[1] + 2.0 * w[3] * u + w[4] * v, w[2] + w[4] * u + 2.0 * w[5] * v]
        };
        let c1 = chart.clone();
        let c2 = chart.clone();
        Self::new(
            Arc::new(move |xi: &Vector2<f64>| {
                let p = frame_at(&c1, xi).expect("normal_graph evaluated inside the domain");
                p.n * weval(xi)
            }),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let p = frame_at(&c2, xi).expect("normal_graph evaluated inside the domain");
                let wv = weval(xi);
                let dw = dweval(xi);
                [p.n * dw[0] + p.dn[0] * wv, p.n * dw[1] + p.dn[1] * wv]
            })),
            None,
        )
    }

    /// Derived field T_S V (the tangential part of V along the chart), with
    /// analytic first derivatives. Second derivatives are not provided.
    pub fn tangential_part(&self, chart: &Chart) -> Self {
        let base = self.clone();
        let base2 = self.clone();
        let c1 = chart.clone();
        let c2 = chart.clone();
        Self::new(
            Arc::new(move |xi: &Vector2<f64>| {
                let p = frame_at(&c1, xi).expect("tangential_part inside the domain");
                let v = base.value(xi);
                v - p.n * p.n.dot(&v)
            }),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let p = frame_at(&c2, xi).expect("tangential_part inside the domain");
                let v = base2.value(xi);
                let dv = base2.d(xi);
                let mut out = [Vector3::zeros(); 2];
                for i in 0..2 {
                    // d_i (T_S V) = (d_i T_S) V + T_S d_i V,
                    // d_i T_S = -dn_i (x) n - n (x) dn_i
                    let dts_v = -p.dn[i] * p.n.dot(&v) - p.n * p.dn[i].dot(&v);
                    out[i] = dts_v + dv[i] - p.n * p.n.dot(&dv[i]);
                }
                out
            })),
            None,
        )
    }
}
