use std::sync::Arc;

use nalgebra::{Vector2, Vector3};

pub type Map3 = Arc<dyn Fn(&Vector2<f64>) -> Vector3<f64> + Send + Sync>;
pub type DMap3 = Arc<dyn Fn(&Vector2<f64>) -> [Vector3<f64>; 2] + Send + Sync>;
pub type D2Map3 = Arc<dyn Fn(&Vector2<f64>) -> [[Vector3<f64>; 2]; 2] + Send + Sync>;

/// How derivatives of a map are obtained when no analytic closure is supplied.
#[derive(Debug, Clone, Copy)]
pub enum DerivativeMode {
    Analytic,
    /// Central differences; `step1` for first, `step2` for second derivatives.
    FiniteDifference { step1: f64, step2: f64 },
}

impl DerivativeMode {
    pub fn default_fd() -> Self {
        DerivativeMode::FiniteDifference { step1: 1e-5, step2: 1e-4 }
    }

    pub fn steps(&self) -> (f64, f64) {
        match self {
            DerivativeMode::Analytic => (1e-5, 1e-4),
            DerivativeMode::FiniteDifference { step1, step2 } => (*step1, *step2),
        }
    }
}

/// An embedding of a planar parameter rectangle into R^3 together with its
/// first and second derivatives.
#[derive(Clone)]
pub struct Chart {
    pub name: String,
    /// Parameter rectangle [[xi1_min, xi1_max], [xi2_min, xi2_max]].
    pub domain: [[f64; 2]; 2],
    psi: Map3,
    d_psi: Option<DMap3>,
    d2_psi: Option<D2Map3>,
    pub mode: DerivativeMode,
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        domain: [[f64; 2]; 2],
        psi: Map3,
        d_psi: Option<DMap3>,
        d2_psi: Option<D2Map3>,
    ) -> Self {
        let mode = if d_psi.is_some() && d2_psi.is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::default_fd()
        };
        Self { name: name.into(), domain, psi, d_psi, d2_psi, mode }
    }

    /// Drops the analytic derivative closures, forcing central differences.
    pub fn with_finite_differences(mut self, step1: f64, step2: f64) -> Self {
        self.d_psi = None;
        self.d2_psi = None;
        self.mode = DerivativeMode::FiniteDifference { step1, step2 };
        self
    }

    pub fn contains(&self, xi: &Vector2<f64>) -> bool {
        let eps = 1e-9;
        xi[0] >= self.domain[0][0] - eps
            && xi[0] <= self.domain[0][1] + eps
            && xi[1] >= self.domain[1][0] - eps
            && xi[1] <= self.domain[1][1] + eps
    }

    pub fn psi(&self, xi: &Vector2<f64>) -> Vector3<f64> {
        (self.psi)(xi)
    }

    pub fn d_psi(&self, xi: &Vector2<f64>) -> [Vector3<f64>; 2] {
        if let Some(d) = &self.d_psi {
            return d(xi);
        }
        let (h, _) = self.mode.steps();
        central_first(|x| (self.psi)(x), xi, h)
    }

    pub fn d2_psi(&self, xi: &Vector2<f64>) -> [[Vector3<f64>; 2]; 2] {
        if let Some(d2) = &self.d2_psi {
            return d2(xi);
        }
        let (_, h) = self.mode.steps();
        if self.d_psi.is_some() {
            // differentiate the analytic first derivative
            let d = self.d_psi.as_ref().unwrap();
            let mut out = [[Vector3::zeros(); 2]; 2];
            for i in 0..2 {
                let mut xp = *xi;
                let mut xm = *xi;
                xp[i] += h;
                xm[i] -= h;
                let dp = d(&xp);
                let dm = d(&xm);
                for j in 0..2 {
                    out[i][j] = (dp[j] - dm[j]) / (2.0 * h);
                }
            }
            // symmetrize mixed partials
            let mixed = (out[0][1] + out[1][0]) * 0.5;
            out[0][1] = mixed;
            out[1][0] = mixed;
            out
        } else {
            central_second(|x| (self.psi)(x), xi, h)
        }
    }

    // --- built-in charts -------------------------------------------------

    pub fn plane(domain: [[f64; 2]; 2]) -> Self {
        Self::new(
            "plane",
            domain,
            Arc::new(|xi: &Vector2<f64>| Vector3::new(xi[0], xi[1], 0.0)),
            Some(Arc::new(|_: &Vector2<f64>| {
                [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)]
            })),
            Some(Arc::new(|_: &Vector2<f64>| [[Vector3::zeros(); 2]; 2])),
        )
    }

    pub fn cylinder(radius: f64, domain: [[f64; 2]; 2]) -> Self {
        let r = radius;
        Self::new(
            "cylinder",
            domain,
            Arc::new(move |xi: &Vector2<f64>| {
                Vector3::new(r * xi[0].cos(), r * xi[0].sin(), xi[1])
            }),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                [
                    Vector3::new(-r * xi[0].sin(), r * xi[0].cos(), 0.0),
                    Vector3::new(0.0, 0.0, 1.0),
                ]
            })),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let mut out = [[Vector3::zeros(); 2]; 2];
                out[0][0] = Vector3::new(-r * xi[0].cos(), -r * xi[0].sin(), 0.0);
                out
            })),
        )
    }

    /// Sphere patch away from the poles; xi = (longitude, latitude).
    /// The normal points outward, so the Weingarten coordinates equal +g/r.
    pub fn sphere(radius: f64, domain: [[f64; 2]; 2]) -> Self {
        let r = radius;
        Self::new(
            "sphere",
            domain,
            Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                Vector3::new(r * v.cos() * u.cos(), r * v.cos() * u.sin(), r * v.sin())
            }),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                [
                    Vector3::new(-r * v.cos() * u.sin(), r * v.cos() * u.cos(), 0.0),
                    Vector3::new(-r * v.sin() * u.cos(), -r * v.sin() * u.sin(), r * v.cos()),
                ]
            })),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                let d11 = Vector3::new(-r * v.cos() * u.cos(), -r * v.cos() * u.sin(), 0.0);
                let d12 = Vector3::new(r * v.sin() * u.sin(), -r * v.sin() * u.cos(), 0.0);
                let d22 = Vector3::new(-r * v.cos() * u.cos(), -r * v.cos() * u.sin(), -r * v.sin());
                [[d11, d12], [d12, d22]]
            })),
        )
    }

    /// Torus patch; xi = (angle around the axis, angle around the tube).
    pub fn torus(major: f64, minor: f64, domain: [[f64; 2]; 2]) -> Self {
        let (rr, r) = (major, minor);
        Self::new(
            "torus",
            domain,
            Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                let w = rr + r * v.cos();
                Vector3::new(w * u.cos(), w * u.sin(), r * v.sin())
            }),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                let w = rr + r * v.cos();
                [
                    Vector3::new(-w * u.sin(), w * u.cos(), 0.0),
                    Vector3::new(-r * v.sin() * u.cos(), -r * v.sin() * u.sin(), r * v.cos()),
                ]
            })),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let (u, v) = (xi[0], xi[1]);
                let w = rr + r * v.cos();
                let d11 = Vector3::new(-w * u.cos(), -w * u.sin(), 0.0);
                let d12 = Vector3::new(r * v.sin() * u.sin(), -r * v.sin() * u.cos(), 0.0);
                let d22 =
                    Vector3::new(-r * v.cos() * u.cos(), -r * v.cos() * u.sin(), -r * v.sin());
                [[d11, d12], [d12, d22]]
            })),
        )
    }

    /// Graph chart psi = (xi1, xi2, f) with
    /// f = a xi1^2/2 + b xi2^2/2 + c sin(xi1) cos(xi2).
    pub fn graph(a: f64, b: f64, c: f64, domain: [[f64; 2]; 2]) -> Self {
        Self::new(
            "graph",
            domain,
            Arc::new(move |xi: &Vector2<f64>| {
                let f = 0.5 * a * xi[0] * xi[0]
                    + 0.5 * b * xi[1] * xi[1]
                    + c * xi[0].sin() * xi[1].cos();
                Vector3::new(xi[0], xi[1], f)
            }),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let f1 = a * xi[0] + c * xi[0].cos() * xi[1].cos();
                let f2 = b * xi[1] - c * xi[0].sin() * xi[1].sin();
                [Vector3::new(1.0, 0.0, f1), Vector3::new(0.0, 1.0, f2)]
            })),
            Some(Arc::new(move |xi: &Vector2<f64>| {
                let f11 = a - c * xi[0].sin() * xi[1].cos();
                let f12 = -c * xi[0].cos() * xi[1].sin();
                let f22 = b - c * xi[0].sin() * xi[1].cos();
                [
                    [Vector3::new(0.0, 0.0, f11), Vector3::new(0.0, 0.0, f12)],
                    [Vector3::new(0.0, 0.0, f12), Vector3::new(0.0, 0.0, f22)],
                ]
            })),
        )
    }
}

pub(crate) fn central_first<F>(f: F, xi: &Vector2<f64>, h: f64) -> [Vector3<f64>; 2]
where
    F: Fn(&Vector2<f64>) -> Vector3<f64>,
{
    let mut out = [Vector3::zeros(); 2];
    for i in 0..2 {
        let mut xp = *xi;
        let mut xm = *xi;
        xp[i] += h;
        xm[i] -= h;
        out[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    out
}

pub(crate) fn central_second<F>(f: F, xi: &Vector2<f64>, h: f64) -> [[Vector3<f64>; 2]; 2]
where
    F: Fn(&Vector2<f64>) -> Vector3<f64>,
{
    let f0 = f(xi);
    let mut out = [[Vector3::zeros(); 2]; 2];
    for i in 0..2 {
        let mut xp = *xi;
        let mut xm = *xi;
        xp[i] += h;
        xm[i] -= h;
        out[i][i] = (f(&xp) - f0 * 2.0 + f(&xm)) / (h * h);
    }
    // mixed partial, symmetric 4-point stencil
    let eval = |s1: f64, s2: f64| {
        let x = Vector2::new(xi[0] + s1 * h, xi[1] + s2 * h);
        f(&x)
    };
    let mixed =
        (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h);
    out[0][1] = mixed;
    out[1][0] = mixed;
    out
}
