//! Galerkin assembly and solve of the cell minimizations. The normal
//! equations are built as a Gram matrix of weighted strain images, so the
//! effective form comes out exactly symmetric positive semidefinite:
//! with X the basis images, L the load images and W the pointwise density
//! weight, qhat = L'WL - (X'WL)' (X'WX)^{-1} (X'WL).

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2, Matrix6, Vector6};

use crate::material::{reduce_q2, QuadraticDensity, ReducedDensity};
use crate::voigt::{embed_tangential, to_voigt3};

use super::basis::{build_basis, RelaxationBasis};
use super::grid::CellGrid;
use super::{CellDiscretization, CellError, RegimeKind, RegimeSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverKind {
    DenseCholesky,
    ConjugateGradient { tol: f64, max_iter: usize },
}

/// The density evaluated pointwise during assembly: the full 6x6 matrix, or
/// the reduced 3x3 matrix after elimination of the free strain block.
pub(crate) enum PointDensity {
    Full(QuadraticDensity),
    Reduced(ReducedDensity),
}

impl PointDensity {
    fn dim(&self) -> usize {
        match self {
            PointDensity::Full(_) => 6,
            PointDensity::Reduced(_) => 3,
        }
    }

    fn mat(&self, t: f64, y: [f64; 2]) -> DMatrix<f64> {
        match self {
            PointDensity::Full(q) => DMatrix::from_iterator(6, 6, q.qmat(t, y).iter().copied()),
            PointDensity::Reduced(q) => {
                DMatrix::from_iterator(3, 3, q.q2mat(t, y).iter().copied())
            }
        }
    }
}

enum KInv {
    Empty,
    Chol(Cholesky<f64, Dyn>),
    Cg { k: DMatrix<f64>, tol: f64, max_iter: usize },
}

struct SolveData {
    basis: RelaxationBasis,
    /// f = X' W L, nbasis x 6.
    f: DMatrix<f64>,
    kinv: KInv,
}

/// A solved cell problem: the 6x6 effective membrane-bending form over
/// (q1, q2) in tangential Voigt coordinates, plus the factorized normal
/// equations for corrector evaluation.
#[derive(Clone)]
pub struct EffectiveForm {
    pub qhat: Matrix6<f64>,
    pub regime: RegimeSpec,
    pub basis_size: usize,
    pub field_counts: Vec<(String, usize)>,
    /// Rough spectral condition estimate of the Galerkin matrix.
    pub cond_estimate: f64,
    /// Diagonal shift applied when the plain factorization broke down.
    pub jitter: f64,
    solve: Arc<SolveData>,
}

/// The minimizing corrector for one load pair.
pub struct MinimizerRecord {
    pub coefficients: DVector<f64>,
    /// Optimal strain field on the quadrature grid, voigt_dim entries per
    /// point.
    pub strain: DVector<f64>,
    pub voigt_dim: usize,
    pub objective: f64,
}

/// Stacks the loads (q1, q2) into the 6-vector of tangential Voigt
/// coordinates that qhat acts on.
pub fn load_vector(q1: &Matrix2<f64>, q2: &Matrix2<f64>) -> Vector6<f64> {
    let a = to_voigt3(q1);
    let b = to_voigt3(q2);
    Vector6::new(a[0], a[1], a[2], b[0], b[1], b[2])
}

impl EffectiveForm {
    pub fn eval(&self, q1: &Matrix2<f64>, q2: &Matrix2<f64>) -> f64 {
        let v = load_vector(q1, q2);
        (v.transpose() * self.qhat * v)[0]
    }
}

/// Images of the six unit loads on the quadrature grid: membrane loads are
/// constant tangential forms, bending loads carry the factor t.
fn load_images(grid: &CellGrid, dim: usize) -> DMatrix<f64> {
    let npts = grid.npts();
    let mut l = DMatrix::zeros(npts * dim, 6);
    for pt in 0..npts {
        let (t, _) = grid.point(pt);
        for j in 0..3 {
            let mut e = nalgebra::Vector3::zeros();
            e[j] = 1.0;
            let img: Vec<f64> = if dim == 6 {
                embed_tangential(&e).iter().copied().collect()
            } else {
                e.iter().copied().collect()
            };
            for (c, &v) in img.iter().enumerate() {
                l[(pt * dim + c, j)] = v;
                l[(pt * dim + c, 3 + j)] = t * v;
            }
        }
    }
    l
}

fn jacobi_cg(
    k: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>, CellError> {
    let n = k.nrows();
    let diag_inv: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| 1.0 / k[(i, i)]));
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = r.component_mul(&diag_inv);
    let mut p = z.clone();
    let bnorm = b.norm().max(1e-300);
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        if r.norm() / bnorm <= tol {
            return Ok(x);
        }
        let kp = k * &p;
        let alpha = rz / p.dot(&kp);
        x += &p * alpha;
        r -= kp * alpha;
        z = r.component_mul(&diag_inv);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    if r.norm() / bnorm <= tol {
        Ok(x)
    } else {
        Err(CellError::SolveFailure(format!(
            "conjugate gradient did not reach tol {tol:.1e} in {max_iter} iterations \
             (residual {:.3e})",
            r.norm() / bnorm
        )))
    }
}

pub(crate) fn solve_with(
    basis: RelaxationBasis,
    density: PointDensity,
    solver: SolverKind,
) -> Result<EffectiveForm, CellError> {
    let dim = basis.voigt_dim;
    debug_assert_eq!(dim, density.dim());
    let grid = &basis.grid;
    let npts = grid.npts();
    let nb = basis.len();

    // weight the image rows by the Cholesky factor of w_p * Q(t_p, y_p)
    let mut xw = basis.images.clone();
    let mut lw = load_images(grid, dim);
    for pt in 0..npts {
        let (t, y) = grid.point(pt);
        let w = grid.weight(pt);
        let chol = Cholesky::new(density.mat(t, y) * w).ok_or_else(|| {
            CellError::SolveFailure(format!(
                "density is not positive definite at t={t:.3}, y=({:.3}, {:.3})",
                y[0], y[1]
            ))
        })?;
        let lt = chol.l().transpose();
        let xb = xw.rows(pt * dim, dim).into_owned();
        xw.rows_mut(pt * dim, dim).copy_from(&(&lt * xb));
        let lb = lw.rows(pt * dim, dim).into_owned();
        lw.rows_mut(pt * dim, dim).copy_from(&(&lt * lb));
    }

    let a0 = lw.transpose() * &lw;
    if nb == 0 {
        let qhat = Matrix6::from_iterator(a0.iter().copied());
        return Ok(EffectiveForm {
            qhat,
            regime: basis.regime,
            basis_size: 0,
            field_counts: basis.field_counts.clone(),
            cond_estimate: 1.0,
            jitter: 0.0,
            solve: Arc::new(SolveData { basis, f: DMatrix::zeros(0, 6), kinv: KInv::Empty }),
        });
    }

    let xt = xw.transpose();
    let mut k = &xt * &xw;
    let f = &xt * &lw;
    drop(xt);
    drop(xw);
    // the Gram product is symmetric up to summation roundoff
    for i in 0..nb {
        for j in (i + 1)..nb {
            let s = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = s;
            k[(j, i)] = s;
        }
    }

    let (qhat_d, kinv, cond, jitter) = match solver {
        SolverKind::DenseCholesky => {
            let (chol, jitter) = match Cholesky::new(k.clone()) {
                Some(c) => (c, 0.0),
                None => {
                    let eps = 1e-12 * k.trace();
                    let mut kj = k;
                    for i in 0..nb {
                        kj[(i, i)] += eps;
                    }
                    let c = Cholesky::new(kj).ok_or_else(|| {
                        CellError::SolveFailure(
                            "Galerkin matrix not positive definite even with jitter".into(),
                        )
                    })?;
                    (c, eps)
                }
            };
            let l = chol.l();
            let mut dmin = f64::INFINITY;
            let mut dmax: f64 = 0.0;
            for i in 0..nb {
                dmin = dmin.min(l[(i, i)]);
                dmax = dmax.max(l[(i, i)]);
            }
            let cond = (dmax / dmin).powi(2);
            let z = l.solve_lower_triangular(&f).ok_or_else(|| {
                CellError::SolveFailure("triangular solve broke down".into())
            })?;
            // A0 - Z'Z: both Gram products, hence exactly symmetric
            (a0 - z.transpose() * z, KInv::Chol(chol), cond, jitter)
        }
        SolverKind::ConjugateGradient { tol, max_iter } => {
            let mut q = a0.clone();
            for j in 0..6 {
                let x = jacobi_cg(&k, &f.column(j).into_owned(), tol, max_iter)?;
                let col = f.transpose() * &x;
                for i in 0..6 {
                    q[(i, j)] -= col[i];
                }
            }
            let q = (q.transpose() + &q) * 0.5;
            let mut dmin = f64::INFINITY;
            let mut dmax: f64 = 0.0;
            for i in 0..nb {
                dmin = dmin.min(k[(i, i)]);
                dmax = dmax.max(k[(i, i)]);
            }
            (q, KInv::Cg { k, tol, max_iter }, dmax / dmin, 0.0)
        }
    };

    Ok(EffectiveForm {
        qhat: Matrix6::from_iterator(qhat_d.iter().copied()),
        regime: basis.regime,
        basis_size: nb,
        field_counts: basis.field_counts.clone(),
        cond_estimate: cond,
        jitter,
        solve: Arc::new(SolveData { basis, f, kinv }),
    })
}

/// The effective form of a regime for a microscopic density, by Galerkin
/// minimization over the regime's relaxation space. Zero-limit regimes are
/// computed on the reduced tangential space with the plane-stress-type
/// density unless `disc.explicit_g` is set.
pub fn effective_form(
    q: &QuadraticDensity,
    regime: &RegimeSpec,
    disc: &CellDiscretization,
) -> Result<EffectiveForm, CellError> {
    match regime.kind {
        RegimeKind::ZeroSubConvex => Err(CellError::UnsupportedRegime(
            "use convex_effective_form for the convex sub-regime".into(),
        )),
        RegimeKind::ZeroSuper | RegimeKind::ZeroCritical(_) if !disc.explicit_g => {
            let basis = build_basis(regime, disc)?;
            solve_with(basis, PointDensity::Reduced(reduce_q2(q)), disc.solver)
        }
        _ => {
            let basis = build_basis(regime, disc)?;
            solve_with(basis, PointDensity::Full(q.clone()), disc.solver)
        }
    }
}

/// The zero-limit effective forms straight from a reduced density, over the
/// tangential relaxation spaces.
pub fn reduced_zero_form(
    q2: &ReducedDensity,
    regime: &RegimeSpec,
    disc: &CellDiscretization,
) -> Result<EffectiveForm, CellError> {
    match regime.kind {
        RegimeKind::ZeroSuper | RegimeKind::ZeroCritical(_) => {
            let basis = build_basis(regime, &disc.with_explicit_g(false))?;
            solve_with(basis, PointDensity::Reduced(q2.clone()), disc.solver)
        }
        _ => Err(CellError::UnsupportedRegime(
            "reduced_zero_form only handles the zero-limit regimes".into(),
        )),
    }
}

/// The minimizing corrector for a load pair; linear in (q1, q2).
pub fn corrector(
    form: &EffectiveForm,
    q1: &Matrix2<f64>,
    q2: &Matrix2<f64>,
) -> Result<MinimizerRecord, CellError> {
    let data = &form.solve;
    let v = load_vector(q1, q2);
    let rhs = -(&data.f * v);
    let coefficients = match &data.kinv {
        KInv::Empty => DVector::zeros(0),
        KInv::Chol(chol) => chol.solve(&rhs),
        KInv::Cg { k, tol, max_iter } => jacobi_cg(k, &rhs, *tol, *max_iter)?,
    };
    let strain = &data.basis.images * &coefficients;
    Ok(MinimizerRecord {
        strain,
        coefficients,
        voigt_dim: data.basis.voigt_dim,
        objective: form.eval(q1, q2),
    })
}
