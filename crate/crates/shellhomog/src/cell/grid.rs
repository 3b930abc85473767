//! Quadrature and basis ingredients for the cell domain I x Y with
//! I = [-1/2, 1/2] and Y the unit 2-torus: Gauss-Legendre in t, a uniform
//! midpoint grid in y (exact for the trigonometric products that appear in
//! the Galerkin matrices), Legendre polynomials and the Fourier half-lattice.

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
pub fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Values and derivatives of P_0..P_pmax at x, in one sweep.
pub fn legendre_table(pmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; pmax + 1];
    let mut d = vec![0.0; pmax + 1];
    v[0] = 1.0;
    d[0] = 0.0;
    if pmax >= 1 {
        v[1] = x;
        d[1] = 1.0;
    }
    for k in 1..pmax {
        let kf = k as f64;
        v[k + 1] = ((2.0 * kf + 1.0) * x * v[k] - kf * v[k - 1]) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k+1) P_k
        d[k + 1] = d[k - 1] + (2.0 * kf + 1.0) * v[k];
    }
    (v, d)
}

/// Quadrature grid on I x Y. Point index p = it * ny + iy; the total weight
/// of point p is `t_weights[it] * y_weight`.
#[derive(Clone, Debug)]
pub struct CellGrid {
    pub t_nodes: Vec<f64>,
    pub t_weights: Vec<f64>,
    pub y_nodes: Vec<[f64; 2]>,
    pub y_weight: f64,
}

impl CellGrid {
    /// nt Gauss nodes in t on [-1/2, 1/2] (weights summing to 1) and an
    /// m x m midpoint grid in y. The midpoint offset keeps phase interfaces
    /// of the shipped laminates off the sample points.
    pub fn new(nt: usize, m: usize) -> Self {
        let gl = gauss_legendre(nt);
        let t_nodes = gl.iter().map(|&(x, _)| 0.5 * x).collect();
        let t_weights = gl.iter().map(|&(_, w)| 0.5 * w).collect();
        let mut y_nodes = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                y_nodes.push([(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64]);
            }
        }
        CellGrid { t_nodes, t_weights, y_nodes, y_weight: 1.0 / (m * m) as f64 }
    }

    /// A single-t grid (weight 1), for per-t relaxations.
    pub fn at_fixed_t(t: f64, m: usize) -> Self {
        let mut g = Self::new(1, m);
        g.t_nodes = vec![t];
        g.t_weights = vec![1.0];
        g
    }

    pub fn nt(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn ny(&self) -> usize {
        self.y_nodes.len()
    }

    pub fn npts(&self) -> usize {
        self.nt() * self.ny()
    }

    pub fn weight(&self, pt: usize) -> f64 {
        self.t_weights[pt / self.ny()] * self.y_weight
    }

    pub fn point(&self, pt: usize) -> (f64, [f64; 2]) {
        (self.t_nodes[pt / self.ny()], self.y_nodes[pt % self.ny()])
    }
}

/// One half of the nonzero Fourier lattice {k != 0, |k_i| <= n}: exactly one
/// of each +/-k pair, so cos/sin over this list spans all real mean-zero
/// trigonometric polynomials of order n.
pub fn half_modes(n: usize) -> Vec<[i64; 2]> {
    let n = n as i64;
    let mut out = Vec::new();
    for k1 in 0..=n {
        for k2 in -n..=n {
            if k1 > 0 || k2 > 0 {
                out.push([k1, k2]);
            }
        }
    }
    out
}

/// A real scalar Fourier mode on the unit torus.
#[derive(Clone, Copy, Debug)]
pub struct YMode {
    pub k: [i64; 2],
    pub sin: bool,
}

impl YMode {
    fn phase(&self, y: [f64; 2]) -> f64 {
        2.0 * std::f64::consts::PI * (self.k[0] as f64 * y[0] + self.k[1] as f64 * y[1])
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let p = self.phase(y);
        if self.sin {
            p.sin()
        } else {
            p.cos()
        }
    }

    pub fn grad(&self, y: [f64; 2]) -> [f64; 2] {
        let p = self.phase(y);
        let tp = 2.0 * std::f64::consts::PI;
        let d = if self.sin { p.cos() } else { -p.sin() };
        [tp * self.k[0] as f64 * d, tp * self.k[1] as f64 * d]
    }

    /// Hessian entries (11, 22, 12).
    pub fn hess(&self, y: [f64; 2]) -> [f64; 3] {
        let f = -4.0 * std::f64::consts::PI * std::f64::consts::PI * self.eval(y);
        let (k1, k2) = (self.k[0] as f64, self.k[1] as f64);
        [k1 * k1 * f, k2 * k2 * f, k1 * k2 * f]
    }
}

/// All real nonconstant modes of order n: a cos and a sin per half-lattice
/// point, (2n+1)^2 - 1 functions in total.
pub fn y_modes(n: usize) -> Vec<YMode> {
    let mut out = Vec::new();
    for k in half_modes(n) {
        out.push(YMode { k, sin: false });
        out.push(YMode { k, sin: true });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        // n nodes are exact through degree 2n-1
        for n in 1..=8 {
            let q = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let num: f64 = q.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert_relative_eq!(num, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn cell_grid_moments() {
        let g = CellGrid::new(4, 6);
        let w: f64 = (0..g.npts()).map(|p| g.weight(p)).sum();
        assert_relative_eq!(w, 1.0, epsilon = 1e-13);
        // int_I t^2 dt = 1/12
        let m2: f64 = (0..g.npts()).map(|p| g.weight(p) * g.point(p).0.powi(2)).sum();
        assert_relative_eq!(m2, 1.0 / 12.0, epsilon = 1e-13);
        let m1: f64 = (0..g.npts()).map(|p| g.weight(p) * g.point(p).0).sum();
        assert_relative_eq!(m1, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn midpoint_grid_is_exact_for_low_modes() {
        // products of order-n modes have order <= 2n < 2n+2 = m
        let n = 2;
        let g = CellGrid::new(1, 2 * n + 2);
        for a in y_modes(n) {
            for b in y_modes(n) {
                let num: f64 =
                    g.y_nodes.iter().map(|&y| g.y_weight * a.eval(y) * b.eval(y)).sum();
                let same = a.k == b.k && a.sin == b.sin;
                let exact = if same { 0.5 } else { 0.0 };
                assert_relative_eq!(num, exact, epsilon = 1e-12);
            }
            let mean: f64 = g.y_nodes.iter().map(|&y| g.y_weight * a.eval(y)).sum();
            assert_relative_eq!(mean, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn legendre_tables_match_closed_forms() {
        let x = 0.37;
        let (v, d) = legendre_table(3, x);
        assert_relative_eq!(v[2], 0.5 * (3.0 * x * x - 1.0), epsilon = 1e-14);
        assert_relative_eq!(d[2], 3.0 * x, epsilon = 1e-14);
        assert_relative_eq!(v[3], 0.5 * (5.0 * x * x * x - 3.0 * x), epsilon = 1e-14);
        assert_relative_eq!(d[3], 0.5 * (15.0 * x * x - 3.0), epsilon = 1e-14);
    }

    #[test]
    fn half_lattice_counts() {
        assert_eq!(half_modes(1).len(), 4);
        assert_eq!(half_modes(2).len(), 12);
        assert_eq!(y_modes(3).len(), (2 * 3 + 1) * (2 * 3 + 1) - 1);
    }
}
