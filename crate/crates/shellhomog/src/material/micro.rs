use std::sync::Arc;

use nalgebra::Matrix6;

use crate::voigt::isotropic_qmat;

use super::{MaterialError, QuadraticDensity};

/// One material phase, given either by Lamé constants or a full Voigt matrix.
#[derive(Clone, Debug)]
pub enum PhaseSpec {
    Isotropic { lambda: f64, mu: f64 },
    Full(Matrix6<f64>),
}

impl PhaseSpec {
    pub fn qmat(&self) -> Matrix6<f64> {
        match self {
            PhaseSpec::Isotropic { lambda, mu } => isotropic_qmat(*lambda, *mu),
            PhaseSpec::Full(m) => *m,
        }
    }

    fn validate(&self) -> Result<(f64, f64), MaterialError> {
        let q = self.qmat();
        if (q - q.transpose()).norm() > 1e-12 {
            return Err(MaterialError::BadSpec("phase matrix not symmetric".into()));
        }
        let eig = q.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if lo <= 0.0 {
            return Err(MaterialError::BadSpec(format!(
                "phase matrix not positive definite (min eigenvalue {lo:.3e})"
            )));
        }
        Ok((lo, hi))
    }
}

/// Variation of the density through the thickness.
#[derive(Clone, Debug)]
pub enum TDependence {
    None,
    /// qmat(t, y) = (1 + slope * t) * qmat(y); requires |slope| < 2 so the
    /// factor stays positive on t in [-1/2, 1/2].
    Affine { slope: f64 },
}

/// In-plane microstructure families on the unit cell.
#[derive(Clone)]
pub enum Family {
    Homogeneous,
    /// Two-phase layers normal to the given axis (0 or 1): phase A on
    /// [0, theta), phase B on [theta, 1).
    Laminate { direction: usize, theta: f64 },
    /// Two-phase checkerboard with period 1 in each direction.
    Checkerboard,
    /// Smooth blend: phase A weighted by (1 + cos 2πy₁ cos 2πy₂)/2.
    Cosine,
    Custom(Arc<dyn Fn([f64; 2]) -> Matrix6<f64> + Send + Sync>),
}

#[derive(Clone)]
pub struct MicrostructureSpec {
    pub family: Family,
    pub phases: Vec<PhaseSpec>,
    pub t_dependence: TDependence,
}

impl MicrostructureSpec {
    pub fn homogeneous(phase: PhaseSpec) -> Self {
        Self { family: Family::Homogeneous, phases: vec![phase], t_dependence: TDependence::None }
    }

    pub fn laminate(direction: usize, theta: f64, a: PhaseSpec, b: PhaseSpec) -> Self {
        Self {
            family: Family::Laminate { direction, theta },
            phases: vec![a, b],
            t_dependence: TDependence::None,
        }
    }

    pub fn checkerboard(a: PhaseSpec, b: PhaseSpec) -> Self {
        Self { family: Family::Checkerboard, phases: vec![a, b], t_dependence: TDependence::None }
    }

    pub fn with_t_dependence(mut self, t: TDependence) -> Self {
        self.t_dependence = t;
        self
    }

    fn required_phases(&self) -> usize {
        match self.family {
            Family::Homogeneous => 1,
            Family::Laminate { .. } | Family::Checkerboard | Family::Cosine => 2,
            Family::Custom(_) => 0,
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let need = self.required_phases();
        if self.phases.len() < need {
            return Err(MaterialError::BadSpec(format!(
                "family needs {need} phases, got {}",
                self.phases.len()
            )));
        }
        for p in &self.phases {
            p.validate()?;
        }
        if let Family::Laminate { direction, theta } = self.family {
            if direction > 1 {
                return Err(MaterialError::BadSpec("laminate direction must be 0 or 1".into()));
            }
            if !(theta > 0.0 && theta < 1.0) {
                return Err(MaterialError::BadSpec(format!(
                    "volume fraction must lie in (0,1), got {theta}"
                )));
            }
        }
        if let TDependence::Affine { slope } = self.t_dependence {
            if slope.abs() >= 2.0 {
                return Err(MaterialError::BadSpec(format!(
                    "affine thickness slope must satisfy |slope| < 2, got {slope}"
                )));
            }
        }
        Ok(())
    }

    /// In-plane density matrix at a cell point (y reduced mod 1).
    pub fn qmat_y(&self, y: [f64; 2]) -> Matrix6<f64> {
        let y = [y[0].rem_euclid(1.0), y[1].rem_euclid(1.0)];
        match &self.family {
            Family::Homogeneous => self.phases[0].qmat(),
            Family::Laminate { direction, theta } => {
                if y[*direction] < *theta {
                    self.phases[0].qmat()
                } else {
                    self.phases[1].qmat()
                }
            }
            Family::Checkerboard => {
                let same = (y[0] < 0.5) == (y[1] < 0.5);
                if same {
                    self.phases[0].qmat()
                } else {
                    self.phases[1].qmat()
                }
            }
            Family::Cosine => {
                let w = 0.5
                    * (1.0
                        + (2.0 * std::f64::consts::PI * y[0]).cos()
                            * (2.0 * std::f64::consts::PI * y[1]).cos());
                self.phases[0].qmat() * w + self.phases[1].qmat() * (1.0 - w)
            }
            Family::Custom(f) => f(y),
        }
    }

    /// The full (t, y)-dependent density. Also computes the two-sided bound
    /// constants by sampling the phases.
    pub fn density(&self) -> Result<QuadraticDensity, MaterialError> {
        self.validate()?;
        let (mut alpha, mut beta) = (f64::INFINITY, 0.0f64);
        if matches!(self.family, Family::Custom(_)) {
            // sample the callable on a coarse grid for the class constants
            for i in 0..8 {
                for j in 0..8 {
                    let q = self.qmat_y([i as f64 / 8.0, j as f64 / 8.0]);
                    let eig = q.symmetric_eigenvalues();
                    alpha = alpha.min(eig.min());
                    beta = beta.max(eig.max());
                }
            }
            if alpha <= 0.0 {
                return Err(MaterialError::BadSpec(
                    "custom density is not uniformly positive definite on samples".into(),
                ));
            }
        } else {
            for p in &self.phases {
                let (lo, hi) = p.validate()?;
                alpha = alpha.min(lo);
                beta = beta.max(hi);
            }
        }
        let (tlo, thi) = match self.t_dependence {
            TDependence::None => (1.0, 1.0),
            TDependence::Affine { slope } => {
                (1.0 - slope.abs() * 0.5, 1.0 + slope.abs() * 0.5)
            }
        };
        let spec = self.clone();
        Ok(QuadraticDensity::new(
            Arc::new(move |t, y| {
                let base = spec.qmat_y(y);
                match spec.t_dependence {
                    TDependence::None => base,
                    TDependence::Affine { slope } => base * (1.0 + slope * t),
                }
            }),
            alpha * tlo,
            beta * thi,
        ))
    }
}

/// Samples a microstructure into a density ready for quadrature on a grid;
/// the dims are only sanity-checked here — the cell solver owns the actual
/// node placement.
pub fn sample_cell(
    spec: &MicrostructureSpec,
    grid: (usize, usize, usize),
) -> Result<QuadraticDensity, MaterialError> {
    if grid.0 < 1 || grid.1 < 1 || grid.2 < 1 {
        return Err(MaterialError::BadSpec("grid dimensions must be >= 1".into()));
    }
    spec.density()
}
