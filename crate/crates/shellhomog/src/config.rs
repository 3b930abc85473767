//! TOML run configuration: chart, microstructure, cell discretization and
//! the run parameters shared by the command-line verbs.

use nalgebra::{Matrix2, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::cell::{CellDiscretization, RegimeKind, SolverKind};
use crate::geometry::{Chart, DisplacementField};
use crate::material::{MicrostructureSpec, PhaseSpec, TDependence};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("configuration parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub cell: CellConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl Config {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Ok(toml::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub chart: String,
    pub domain: [[f64; 2]; 2],
    pub radius: Option<f64>,
    pub major: Option<f64>,
    pub minor: Option<f64>,
    pub graph_coeffs: Option<[f64; 3]>,
}

impl GeometryConfig {
    pub fn chart(&self) -> Result<Chart, ConfigError> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| {
                ConfigError::Invalid(format!("chart '{}' needs '{what}'", self.chart))
            })
        };
        match self.chart.as_str() {
            "plane" => Ok(Chart::plane(self.domain)),
            "cylinder" => Ok(Chart::cylinder(need(self.radius, "radius")?, self.domain)),
            "sphere" => Ok(Chart::sphere(need(self.radius, "radius")?, self.domain)),
            "torus" => Ok(Chart::torus(
                need(self.major, "major")?,
                need(self.minor, "minor")?,
                self.domain,
            )),
            "graph" => {
                let c = self.graph_coeffs.ok_or_else(|| {
                    ConfigError::Invalid("chart 'graph' needs 'graph_coeffs'".into())
                })?;
                Ok(Chart::graph(c[0], c[1], c[2], self.domain))
            }
            other => Err(ConfigError::Invalid(format!("unknown chart '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub lambda: f64,
    pub mu: f64,
}

impl PhaseConfig {
    fn spec(&self) -> PhaseSpec {
        PhaseSpec::Isotropic { lambda: self.lambda, mu: self.mu }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub family: String,
    pub direction: Option<usize>,
    pub theta: Option<f64>,
    pub phase_a: PhaseConfig,
    pub phase_b: Option<PhaseConfig>,
    /// Affine thickness dependence: qmat scaled by (1 + t_slope * t).
    pub t_slope: Option<f64>,
}

impl MaterialConfig {
    pub fn spec(&self) -> Result<MicrostructureSpec, ConfigError> {
        let a = self.phase_a.spec();
        let b = || {
            self.phase_b.as_ref().map(|p| p.spec()).ok_or_else(|| {
                ConfigError::Invalid(format!("family '{}' needs 'phase_b'", self.family))
            })
        };
        let mut spec = match self.family.as_str() {
            "homogeneous" => MicrostructureSpec::homogeneous(a),
            "laminate" => {
                let dir = self.direction.unwrap_or(0);
                let theta = self.theta.unwrap_or(0.5);
                MicrostructureSpec::laminate(dir, theta, a, b()?)
            }
            "checkerboard" => MicrostructureSpec::checkerboard(a, b()?),
            "cosine" => MicrostructureSpec {
                family: crate::material::Family::Cosine,
                phases: vec![a, b()?],
                t_dependence: TDependence::None,
            },
            other => return Err(ConfigError::Invalid(format!("unknown material family '{other}'"))),
        };
        if let Some(slope) = self.t_slope {
            spec = spec.with_t_dependence(TDependence::Affine { slope });
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub n: usize,
    pub p: usize,
    pub solver: Option<String>,
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
}

impl CellConfig {
    pub fn disc(&self) -> Result<CellDiscretization, ConfigError> {
        let solver = match self.solver.as_deref() {
            None | Some("cholesky") => SolverKind::DenseCholesky,
            Some("cg") => SolverKind::ConjugateGradient {
                tol: self.cg_tol.unwrap_or(1e-12),
                max_iter: self.cg_max_iter.unwrap_or(50_000),
            },
            Some(other) => {
                return Err(ConfigError::Invalid(format!("unknown solver '{other}'")))
            }
        };
        Ok(CellDiscretization::new(self.n, self.p).with_solver(solver))
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub regime: Option<String>,
    pub gamma: Option<f64>,
    pub gamma1: Option<f64>,
    pub gammas: Option<Vec<f64>>,
    pub quad_order: Option<usize>,
    /// Shape operator coordinates (a11, a12, a22) in the orthonormal frame,
    /// for regimes that need one away from an assembled surface.
    pub weingarten: Option<[f64; 3]>,
    /// Displacement for `assemble`: "zero", "rigid" or "polynomial".
    pub displacement: Option<String>,
    pub rigid_a: Option<[f64; 3]>,
    pub rigid_b: Option<[f64; 3]>,
    pub poly: Option<[[f64; 6]; 3]>,
    /// Constant membrane field B_w in orthonormal Voigt-3 coordinates.
    pub b_w: Option<[f64; 3]>,
    pub bending_tolerance: Option<f64>,
}

impl RunConfig {
    pub fn weingarten_matrix(&self) -> Matrix2<f64> {
        match self.weingarten {
            Some([a11, a12, a22]) => Matrix2::new(a11, a12, a12, a22),
            None => Matrix2::identity(),
        }
    }

    pub fn regime_kind(&self, override_regime: Option<&str>) -> Result<RegimeKind, ConfigError> {
        let name = override_regime
            .or(self.regime.as_deref())
            .ok_or_else(|| ConfigError::Invalid("no regime given".into()))?;
        let gamma = self.gamma.unwrap_or(1.0);
        let gamma1 = self.gamma1.unwrap_or(1.0);
        match name {
            "gamma" => Ok(RegimeKind::FiniteGamma(gamma)),
            "infinity" => Ok(RegimeKind::Infinity),
            "zero" => Ok(RegimeKind::ZeroSuper),
            "zero-critical" => Ok(RegimeKind::ZeroCritical(gamma1)),
            "zero-convex" => Ok(RegimeKind::ZeroSubConvex),
            other => Err(ConfigError::Invalid(format!("unknown regime '{other}'"))),
        }
    }

    pub fn displacement_field(&self, chart: &Chart) -> Result<DisplacementField, ConfigError> {
        match self.displacement.as_deref().unwrap_or("zero") {
            "zero" => Ok(DisplacementField::constant(Vector3::zeros())),
            "rigid" => {
                let a = self.rigid_a.unwrap_or([0.0; 3]);
                let b = self.rigid_b.unwrap_or([0.0; 3]);
                Ok(DisplacementField::rigid(
                    chart,
                    Vector3::new(a[0], a[1], a[2]),
                    Vector3::new(b[0], b[1], b[2]),
                ))
            }
            "polynomial" => {
                let c = self.poly.ok_or_else(|| {
                    ConfigError::Invalid("displacement 'polynomial' needs 'poly'".into())
                })?;
                Ok(DisplacementField::polynomial(c))
            }
            other => Err(ConfigError::Invalid(format!("unknown displacement '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        [geometry]
        chart = "cylinder"
        radius = 1.0
        domain = [[0.0, 1.0], [0.0, 1.0]]

        [material]
        family = "laminate"
        direction = 1
        theta = 0.5
        phase_a = { lambda = 1.0, mu = 1.0 }
        phase_b = { lambda = 10.0, mu = 10.0 }

        [cell]
        n = 2
        p = 2

        [run]
        regime = "gamma"
        gamma = 1.5
        quad_order = 4
    "#;

    #[test]
    fn sample_parses() {
        let cfg: Config = toml::from_str(SAMPLE).unwrap();
        assert!(cfg.geometry.chart().is_ok());
        assert!(cfg.material.spec().is_ok());
        assert_eq!(cfg.cell.disc().unwrap().n, 2);
        assert!(matches!(
            cfg.run.regime_kind(None).unwrap(),
            RegimeKind::FiniteGamma(g) if (g - 1.5).abs() < 1e-15
        ));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let bad = SAMPLE.replace("gamma = 1.5", "gamma = 1.5\nbogus_key = 3");
        assert!(toml::from_str::<Config>(&bad).is_err());
    }

    #[test]
    fn missing_phase_is_reported() {
        let bad = SAMPLE.replace("phase_b = { lambda = 10.0, mu = 10.0 }", "");
        let cfg: Config = toml::from_str(&bad).unwrap();
        assert!(cfg.material.spec().is_err());
    }
}
