//! Discrete relaxation spaces: for every regime, a list of basis fields in
//! the regime's parameter space together with their strain images tabulated
//! on the quadrature grid in Voigt coordinates (6 components for full
//! densities, 3 tangential components after the pointwise elimination of the
//! free strain block).

use nalgebra::DMatrix;

use crate::voigt::{FREE_IDX, SQRT2, TANGENTIAL_IDX};

use super::grid::{legendre_table, y_modes, CellGrid, YMode};
use super::{CellDiscretization, CellError, RegimeKind, RegimeSpec};

/// A regime space sampled on the quadrature grid. `images` holds one column
/// per basis field; the row block of point p (p = it * ny + iy) carries the
/// `voigt_dim` strain components at that point.
#[derive(Debug)]
pub struct RelaxationBasis {
    pub regime: RegimeSpec,
    pub grid: CellGrid,
    pub voigt_dim: usize,
    pub images: DMatrix<f64>,
    /// Named subspace sizes, e.g. [("zeta", 96), ("phi", 48), ("g", 960)].
    pub field_counts: Vec<(String, usize)>,
}

impl RelaxationBasis {
    pub fn len(&self) -> usize {
        self.images.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Voigt-6 image of sym(e_c ⊗ g) for a unit vector e_c and g in R^3.
fn voigt6_sym_outer(c: usize, g: [f64; 3]) -> [f64; 6] {
    let mut s = [[0.0; 3]; 3];
    for j in 0..3 {
        s[c][j] += 0.5 * g[j];
        s[j][c] += 0.5 * g[j];
    }
    [s[0][0], s[1][1], s[2][2], SQRT2 * s[0][1], SQRT2 * s[0][2], SQRT2 * s[1][2]]
}

/// Voigt-3 image of the tangential form sym(e_a ⊗ grad F), a in {0, 1}.
fn voigt3_sym_outer(a: usize, grad: [f64; 2]) -> [f64; 3] {
    match a {
        0 => [grad[0], 0.0, SQRT2 * 0.5 * grad[1]],
        _ => [0.0, grad[1], SQRT2 * 0.5 * grad[0]],
    }
}

fn set_block(images: &mut DMatrix<f64>, col: usize, pt: usize, dim: usize, vals: &[f64]) {
    for (c, &v) in vals.iter().enumerate() {
        images[(pt * dim + c, col)] = v;
    }
}

/// Builds the discretized relaxation space for a regime. For the zero-limit
/// regimes the pointwise-free block is eliminated analytically by default
/// (tangential Voigt-3 images, to be paired with the reduced density);
/// `disc.explicit_g` keeps it as explicit per-node unknowns instead.
pub fn build_basis(
    regime: &RegimeSpec,
    disc: &CellDiscretization,
) -> Result<RelaxationBasis, CellError> {
    regime.validate()?;
    disc.validate()?;
    let grid = disc.grid();
    match regime.kind {
        RegimeKind::FiniteGamma(gamma) => Ok(finite_gamma_basis(regime, grid, disc, gamma)),
        RegimeKind::Infinity => Ok(infinity_basis_on_grid(regime, grid, disc.n)),
        RegimeKind::ZeroSuper | RegimeKind::ZeroCritical(_) => {
            if disc.explicit_g {
                Ok(zero_basis_explicit(regime, grid, disc.n))
            } else {
                Ok(zero_basis_reduced(regime, grid, disc.n))
            }
        }
        RegimeKind::ZeroSubConvex => Err(CellError::UnsupportedRegime(
            "the convex sub-regime relaxes over mean-zero tangential fields; \
             use convex_effective_form"
                .into(),
        )),
    }
}

/// phi in H^1(I x Y; R^3), mean zero: Fourier x Legendre tensor modes per
/// component, without the global constant. Strain sym(grad_y phi | (1/gamma) d_t phi).
fn finite_gamma_basis(
    regime: &RegimeSpec,
    grid: CellGrid,
    disc: &CellDiscretization,
    gamma: f64,
) -> RelaxationBasis {
    let modes = y_modes(disc.n);
    // scalar modes (ym, p): ym = None is the constant y-mode
    let mut scalar: Vec<(Option<YMode>, usize)> = Vec::new();
    for p in 1..=disc.p {
        scalar.push((None, p));
    }
    for &ym in &modes {
        for p in 0..=disc.p {
            scalar.push((Some(ym), p));
        }
    }
    let npts = grid.npts();
    let ncols = 3 * scalar.len();
    let mut images = DMatrix::zeros(npts * 6, ncols);
    // Legendre values/derivatives of P_p(2t) per t node
    let leg: Vec<(Vec<f64>, Vec<f64>)> =
        grid.t_nodes.iter().map(|&t| legendre_table(disc.p, 2.0 * t)).collect();
    let ny = grid.ny();
    for (s, &(ym, p)) in scalar.iter().enumerate() {
        for pt in 0..npts {
            let (it, iy) = (pt / ny, pt % ny);
            let y = grid.y_nodes[iy];
            let (lv, ld) = (&leg[it].0, &leg[it].1);
            let (f, fy) = match ym {
                Some(m) => (m.eval(y), m.grad(y)),
                None => (1.0, [0.0, 0.0]),
            };
            // d/dt P_p(2t) = 2 P_p'(2t)
            let g = [fy[0] * lv[p], fy[1] * lv[p], f * 2.0 * ld[p] / gamma];
            for c in 0..3 {
                set_block(&mut images, 3 * s + c, pt, 6, &voigt6_sym_outer(c, g));
            }
        }
    }
    RelaxationBasis {
        regime: *regime,
        grid,
        voigt_dim: 6,
        images,
        field_counts: vec![("phi".into(), ncols)],
    }
}

/// Per-t fields zeta(t,.) in H^1(Y;R^2), psi(t,.) in H^1(Y), c(t) in R^3 with
/// block-diagonal strain across t nodes: tangential block sym grad_y zeta,
/// (i,3) entries d_{y_i} psi + c_i, (3,3) entry c_3.
pub(crate) fn infinity_basis_on_grid(
    regime: &RegimeSpec,
    grid: CellGrid,
    n: usize,
) -> RelaxationBasis {
    let modes = y_modes(n);
    let nm = modes.len();
    let per_node = 2 * nm + nm + 3;
    let (nt, ny) = (grid.nt(), grid.ny());
    let mut images = DMatrix::zeros(grid.npts() * 6, nt * per_node);
    for it in 0..nt {
        let base = it * per_node;
        for iy in 0..ny {
            let pt = it * ny + iy;
            let y = grid.y_nodes[iy];
            for (m, ym) in modes.iter().enumerate() {
                let gr = ym.grad(y);
                for a in 0..2 {
                    let t3 = voigt3_sym_outer(a, gr);
                    let mut v = [0.0; 6];
                    for (j, &idx) in TANGENTIAL_IDX.iter().enumerate() {
                        v[idx] = t3[j];
                    }
                    set_block(&mut images, base + 2 * m + a, pt, 6, &v);
                }
                let mut v = [0.0; 6];
                v[4] = SQRT2 * gr[0];
                v[5] = SQRT2 * gr[1];
                set_block(&mut images, base + 2 * nm + m, pt, 6, &v);
            }
            set_block(&mut images, base + 3 * nm, pt, 6, &[0.0, 0.0, 0.0, 0.0, SQRT2, 0.0]);
            set_block(&mut images, base + 3 * nm + 1, pt, 6, &[0.0, 0.0, 0.0, 0.0, 0.0, SQRT2]);
            set_block(&mut images, base + 3 * nm + 2, pt, 6, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        }
    }
    RelaxationBasis {
        regime: *regime,
        grid,
        voigt_dim: 6,
        images,
        field_counts: vec![
            ("zeta".into(), nt * 2 * nm),
            ("psi".into(), nt * nm),
            ("c".into(), nt * 3),
        ],
    }
}

/// Tangential Voigt-3 images of the zeta / phi fields of the zero-limit
/// spaces: sym grad_y zeta - t hess_y phi, plus (1/gamma1) phi A in the
/// critical sub-regime.
fn zero_tangential_columns(
    regime: &RegimeSpec,
    grid: &CellGrid,
    n: usize,
) -> (Vec<Vec<[f64; 3]>>, usize, usize) {
    let modes = y_modes(n);
    let nm = modes.len();
    let npts = grid.npts();
    let ny = grid.ny();
    let mut cols: Vec<Vec<[f64; 3]>> = Vec::with_capacity(3 * nm);
    for a in 0..2 {
        for ym in &modes {
            let mut col = vec![[0.0; 3]; npts];
            for (pt, entry) in col.iter_mut().enumerate() {
                *entry = voigt3_sym_outer(a, ym.grad(grid.y_nodes[pt % ny]));
            }
            cols.push(col);
        }
    }
    let a_voigt = crate::voigt::to_voigt3(&regime.weingarten);
    let critical = match regime.kind {
        RegimeKind::ZeroCritical(g1) => Some(1.0 / g1),
        _ => None,
    };
    for ym in &modes {
        let mut col = vec![[0.0; 3]; npts];
        for (pt, entry) in col.iter_mut().enumerate() {
            let (t, y) = (grid.t_nodes[pt / ny], grid.y_nodes[pt % ny]);
            let h = ym.hess(y);
            let mut v = [-t * h[0], -t * h[1], -t * SQRT2 * h[2]];
            if let Some(inv_g1) = critical {
                let f = inv_g1 * ym.eval(y);
                v[0] += f * a_voigt[0];
                v[1] += f * a_voigt[1];
                v[2] += f * a_voigt[2];
            }
            *entry = v;
        }
        cols.push(col);
    }
    (cols, 2 * nm, nm)
}

fn zero_basis_reduced(regime: &RegimeSpec, grid: CellGrid, n: usize) -> RelaxationBasis {
    let (cols, nzeta, nphi) = zero_tangential_columns(regime, &grid, n);
    let npts = grid.npts();
    let mut images = DMatrix::zeros(npts * 3, cols.len());
    for (c, col) in cols.iter().enumerate() {
        for (pt, v) in col.iter().enumerate() {
            set_block(&mut images, c, pt, 3, v);
        }
    }
    RelaxationBasis {
        regime: *regime,
        grid,
        voigt_dim: 3,
        images,
        field_counts: vec![("zeta".into(), nzeta), ("phi".into(), nphi)],
    }
}

fn zero_basis_explicit(regime: &RegimeSpec, grid: CellGrid, n: usize) -> RelaxationBasis {
    let (cols, nzeta, nphi) = zero_tangential_columns(regime, &grid, n);
    let npts = grid.npts();
    let ng = npts * 3;
    let mut images = DMatrix::zeros(npts * 6, cols.len() + ng);
    for (c, col) in cols.iter().enumerate() {
        for (pt, v3) in col.iter().enumerate() {
            let mut v = [0.0; 6];
            for (j, &idx) in TANGENTIAL_IDX.iter().enumerate() {
                v[idx] = v3[j];
            }
            set_block(&mut images, c, pt, 6, &v);
        }
    }
    // free block: one delta unknown per quadrature point and component
    let base = cols.len();
    for pt in 0..npts {
        for (f, &idx) in FREE_IDX.iter().enumerate() {
            images[(pt * 6 + idx, base + 3 * pt + f)] = 1.0;
        }
    }
    RelaxationBasis {
        regime: *regime,
        grid,
        voigt_dim: 6,
        images,
        field_counts: vec![("zeta".into(), nzeta), ("phi".into(), nphi), ("g".into(), ng)],
    }
}

/// Mean-zero tangential fields B(y) for the convex sub-regime: three Voigt
/// components per nonconstant Fourier mode, constant in t.
pub(crate) fn convex_basis(regime: &RegimeSpec, grid: CellGrid, n: usize) -> RelaxationBasis {
    let modes = y_modes(n);
    let npts = grid.npts();
    let ny = grid.ny();
    let mut images = DMatrix::zeros(npts * 3, 3 * modes.len());
    for (m, ym) in modes.iter().enumerate() {
        for pt in 0..npts {
            let f = ym.eval(grid.y_nodes[pt % ny]);
            for j in 0..3 {
                images[(pt * 3 + j, 3 * m + j)] = f;
            }
        }
    }
    RelaxationBasis {
        regime: *regime,
        grid,
        voigt_dim: 3,
        images,
        field_counts: vec![("bdot".into(), 3 * modes.len())],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_gamma_count() {
        // 3 components x ((2N+1)^2 (P+1) - 1)
        let b = build_basis(&RegimeSpec::finite_gamma(1.0), &CellDiscretization::new(1, 1)).unwrap();
        assert_eq!(b.len(), 51);
        let b = build_basis(&RegimeSpec::finite_gamma(2.0), &CellDiscretization::new(2, 3)).unwrap();
        assert_eq!(b.len(), 3 * (25 * 4 - 1));
    }

    #[test]
    fn mean_zero_images() {
        // every strain image integrates to zero over I x Y in the membrane
        // rows (all fields are gradients/hessians of periodic mean-zero data)
        for regime in [
            RegimeSpec::finite_gamma(1.0),
            RegimeSpec::zero_super(),
            RegimeSpec::zero_critical(1.0, nalgebra::Matrix2::identity()),
        ] {
            let b = build_basis(&regime, &CellDiscretization::new(1, 2)).unwrap();
            let d = b.voigt_dim;
            let rows: &[usize] = if d == 6 { &TANGENTIAL_IDX } else { &[0, 1, 2] };
            for c in 0..b.len() {
                // tangential rows only: hessian terms carry a factor t which
                // kills the t-average; gradients average out in y
                for &j in rows {
                    let mut s = 0.0;
                    for pt in 0..b.grid.npts() {
                        s += b.grid.weight(pt) * b.images[(pt * d + j, c)];
                    }
                    assert!(s.abs() < 1e-12, "column {c} row {j} mean {s:e}");
                }
            }
        }
    }

    #[test]
    fn infinity_blocks_do_not_couple_t_nodes() {
        let b = build_basis(&RegimeSpec::infinity(), &CellDiscretization::new(1, 1)).unwrap();
        let ny = b.grid.ny();
        let per_node = b.len() / b.grid.nt();
        for c in 0..b.len() {
            let node = c / per_node;
            for pt in 0..b.grid.npts() {
                if pt / ny != node {
                    for j in 0..6 {
                        assert_eq!(b.images[(pt * 6 + j, c)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn explicit_g_adds_one_unknown_per_node_component() {
        let disc = CellDiscretization::new(1, 1).with_explicit_g(true);
        let b = build_basis(&RegimeSpec::zero_super(), &disc).unwrap();
        let reduced = build_basis(&RegimeSpec::zero_super(), &CellDiscretization::new(1, 1)).unwrap();
        assert_eq!(b.len(), reduced.len() + 3 * b.grid.npts());
        assert_eq!(b.voigt_dim, 6);
        assert_eq!(reduced.voigt_dim, 3);
    }

    #[test]
    fn convex_regime_is_delegated() {
        let err = build_basis(
            &RegimeSpec::zero_sub_convex(nalgebra::Matrix2::identity()),
            &CellDiscretization::new(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, CellError::UnsupportedRegime(_)));
    }

    #[test]
    fn scale_gate() {
        assert!(matches!(
            build_basis(&RegimeSpec::finite_gamma(1e-4), &CellDiscretization::new(1, 1)),
            Err(CellError::ScaleWarning(_))
        ));
        assert!(matches!(
            build_basis(
                &RegimeSpec::zero_critical(1e4, nalgebra::Matrix2::identity()),
                &CellDiscretization::new(1, 1)
            ),
            Err(CellError::ScaleWarning(_))
        ));
    }
}
