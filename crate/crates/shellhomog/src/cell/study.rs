//! Limit studies across the regime parameter: the finite-regime forms for a
//! list of scale parameters next to their two limit anchors, and the per-t
//! slice of the Infinity regime.

use nalgebra::Matrix6;

use crate::material::QuadraticDensity;

use super::basis::infinity_basis_on_grid;
use super::grid::CellGrid;
use super::solver::{effective_form, solve_with, PointDensity};
use super::{CellDiscretization, CellError, RegimeSpec};

#[derive(Clone, Debug)]
pub struct GammaRow {
    pub gamma: f64,
    pub qhat: Matrix6<f64>,
    pub basis_size: usize,
    pub cond_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct GammaStudy {
    pub rows: Vec<GammaRow>,
    /// The gamma -> infinity anchor.
    pub infinity: Matrix6<f64>,
    /// The gamma -> 0 anchor.
    pub zero: Matrix6<f64>,
}

/// Effective forms across a sorted list of scale parameters, bracketed by
/// the two limit anchors.
pub fn gamma_limit_study(
    q: &QuadraticDensity,
    disc: &CellDiscretization,
    gammas: &[f64],
) -> Result<GammaStudy, CellError> {
    for w in gammas.windows(2) {
        if w[0] >= w[1] {
            return Err(CellError::BadDiscretization(
                "gamma list must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&g) = gammas.first() {
        if g <= 0.0 {
            return Err(CellError::BadDiscretization("gamma values must be positive".into()));
        }
    }
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let form = effective_form(q, &RegimeSpec::finite_gamma(gamma), disc)?;
        rows.push(GammaRow {
            gamma,
            qhat: form.qhat,
            basis_size: form.basis_size,
            cond_estimate: form.cond_estimate,
        });
    }
    let infinity = effective_form(q, &RegimeSpec::infinity(), disc)?.qhat;
    let zero = effective_form(q, &RegimeSpec::zero_super(), disc)?.qhat;
    Ok(GammaStudy { rows, infinity, zero })
}

/// The per-t relaxation of the Infinity regime, over (zeta, psi, c) at a
/// single thickness coordinate. Gauss integration of these slices over t
/// reproduces the Infinity effective form.
pub fn q_infinity_per_t(
    q: &QuadraticDensity,
    disc: &CellDiscretization,
    t: f64,
) -> Result<Matrix6<f64>, CellError> {
    disc.validate()?;
    let grid = CellGrid::at_fixed_t(t, disc.ny_side());
    let basis = infinity_basis_on_grid(&RegimeSpec::infinity(), grid, disc.n);
    Ok(solve_with(basis, PointDensity::Full(q.clone()), disc.solver)?.qhat)
}
