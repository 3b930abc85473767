//! Spectral Galerkin solvers for the periodic cell problems that define the
//! effective membrane-bending forms of the different regimes, together with
//! the minimizing correctors.

pub mod basis;
pub mod grid;
mod solver;
mod study;

pub use basis::{build_basis, RelaxationBasis};
pub use grid::CellGrid;
pub use solver::{
    corrector, effective_form, load_vector, reduced_zero_form, EffectiveForm, MinimizerRecord,
    SolverKind,
};
pub(crate) use solver::{solve_with, PointDensity};
pub use study::{gamma_limit_study, q_infinity_per_t, GammaRow, GammaStudy};

use nalgebra::Matrix2;
use thiserror::Error;

/// Relative thickness-to-period regime. The scale parameters are the limit
/// of h / eps (finite regime) and of eps^2 / h (critical sub-regime).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegimeKind {
    FiniteGamma(f64),
    Infinity,
    ZeroSuper,
    ZeroCritical(f64),
    ZeroSubConvex,
}

impl RegimeKind {
    pub fn label(&self) -> &'static str {
        match self {
            RegimeKind::FiniteGamma(_) => "gamma",
            RegimeKind::Infinity => "infinity",
            RegimeKind::ZeroSuper => "zero",
            RegimeKind::ZeroCritical(_) => "zero-critical",
            RegimeKind::ZeroSubConvex => "zero-convex",
        }
    }
}

/// A regime together with the point data it needs: the critical and convex
/// sub-regimes see the shape operator of the surface at the evaluation point
/// (orthonormal-frame coefficients).
#[derive(Clone, Copy, Debug)]
pub struct RegimeSpec {
    pub kind: RegimeKind,
    pub weingarten: Matrix2<f64>,
}

impl RegimeSpec {
    pub fn finite_gamma(gamma: f64) -> Self {
        Self { kind: RegimeKind::FiniteGamma(gamma), weingarten: Matrix2::zeros() }
    }

    pub fn infinity() -> Self {
        Self { kind: RegimeKind::Infinity, weingarten: Matrix2::zeros() }
    }

    pub fn zero_super() -> Self {
        Self { kind: RegimeKind::ZeroSuper, weingarten: Matrix2::zeros() }
    }

    pub fn zero_critical(gamma1: f64, weingarten: Matrix2<f64>) -> Self {
        Self { kind: RegimeKind::ZeroCritical(gamma1), weingarten }
    }

    pub fn zero_sub_convex(weingarten: Matrix2<f64>) -> Self {
        Self { kind: RegimeKind::ZeroSubConvex, weingarten }
    }

    /// Scale-parameter sanity gate: outside [1e-3, 1e3] the (1/gamma)
    /// entries make the Galerkin system arbitrarily ill-conditioned and the
    /// limit regimes are the correct objects.
    pub fn validate(&self) -> Result<(), CellError> {
        let check = |g: f64| {
            if !(g.is_finite() && g > 0.0) || !(1e-3..=1e3).contains(&g) {
                Err(CellError::ScaleWarning(g))
            } else {
                Ok(())
            }
        };
        match self.kind {
            RegimeKind::FiniteGamma(g) | RegimeKind::ZeroCritical(g) => check(g),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CellDiscretization {
    /// Fourier order: modes k with |k_i| <= n, k != 0 on mean-zero spaces.
    pub n: usize,
    /// Legendre degree in t.
    pub p: usize,
    pub solver: SolverKind,
    /// Override the Gauss node count in t (default p + 2). Fixing the
    /// quadrature across refinements makes Galerkin nesting exact.
    pub quad_nt: Option<usize>,
    /// Override the y-grid side length (default 2n + 2).
    pub quad_ny: Option<usize>,
    /// Keep the pointwise-free strain block as explicit unknowns instead of
    /// eliminating it analytically (used to verify the equivalence of the
    /// full and reduced cell formulas).
    pub explicit_g: bool,
}

impl CellDiscretization {
    pub fn new(n: usize, p: usize) -> Self {
        Self { n, p, solver: SolverKind::DenseCholesky, quad_nt: None, quad_ny: None, explicit_g: false }
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_quadrature(mut self, nt: usize, ny: usize) -> Self {
        self.quad_nt = Some(nt);
        self.quad_ny = Some(ny);
        self
    }

    pub fn with_explicit_g(mut self, explicit: bool) -> Self {
        self.explicit_g = explicit;
        self
    }

    pub fn nt(&self) -> usize {
        self.quad_nt.unwrap_or(self.p + 2)
    }

    pub fn ny_side(&self) -> usize {
        self.quad_ny.unwrap_or(2 * self.n + 2)
    }

    pub fn grid(&self) -> CellGrid {
        CellGrid::new(self.nt(), self.ny_side())
    }

    pub fn validate(&self) -> Result<(), CellError> {
        if self.n < 1 || self.p < 1 {
            return Err(CellError::BadDiscretization(format!(
                "need n >= 1 and p >= 1, got n={}, p={}",
                self.n, self.p
            )));
        }
        if self.nt() < self.p + 1 {
            return Err(CellError::BadDiscretization(format!(
                "t-quadrature with {} nodes cannot resolve Legendre degree {}",
                self.nt(),
                self.p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CellError {
    #[error(
        "scale parameter {0:.3e} outside [1e-3, 1e3]; use the Infinity or ZeroSuper limit form"
    )]
    ScaleWarning(f64),
    #[error("regime not handled by this solver: {0}")]
    UnsupportedRegime(String),
    #[error("cell solve failed: {0}")]
    SolveFailure(String),
    #[error("invalid discretization: {0}")]
    BadDiscretization(String),
    #[error(transparent)]
    Material(#[from] crate::material::MaterialError),
}
