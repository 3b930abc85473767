//! Command-line interface: `geom-check`, `qhat`, `sweep`, `assemble`,
//! `convex-solve` and `convex-qhat`. All artifacts are written atomically
//! and deterministically (fixed key order, fixed float formatting), so
//! identical configurations produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::{Matrix2, Matrix6, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{assemble, AssemblyError, BendingInput, SurfaceQuadrature};
use crate::cell::{effective_form, gamma_limit_study, CellError, EffectiveForm, RegimeSpec};
use crate::config::{Config, ConfigError};
use crate::convex::{convex_effective_form, curlcurl_check, solve_modes, ConvexError, FourierField};
use crate::geometry::{identities, Chart, DisplacementField, GeometryError};
use crate::material::{reduce_q2, MaterialError};
use crate::voigt::from_voigt3;

#[derive(Parser)]
#[command(name = "shellhomog", version, about = "Effective stiffness of periodically heterogeneous thin shells")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the geometry identity suite on the configured chart.
    GeomCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Compute the effective form of one regime.
    Qhat {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effective forms across a list of scale parameters, with the two limit
    /// anchors, as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly increasing, e.g. "0.1,1,10,100".
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a limit functional over the configured surface patch.
    Assemble {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve the per-mode systems of the convex sub-regime for a random
    /// right-hand side and report the residuals.
    ConvexSolve {
        /// Shape operator "a11,a12,a22" (orthonormal frame).
        #[arg(long, default_value = "1,0,1")]
        a: String,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The convex sub-regime effective form.
    ConvexQhat {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("geometry identity residuals exceed tolerance (worst {0:.3e} > {1:.3e})")]
    ResidualExceeded(f64, f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid flag: {0}")]
    Flag(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Flag(_) => 2,
            CliError::Geometry(_) | CliError::ResidualExceeded(..) => 3,
            CliError::Material(_) => 4,
            CliError::Cell(_) => 5,
            CliError::Convex(_) => 6,
            CliError::Assembly(_) => 7,
            CliError::Io(_) => 1,
        }
    }
}

pub fn run_from_args() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn verbose() -> bool {
    std::env::var("SHELLHOMOG_LOG").map(|v| !v.is_empty() && v != "0").unwrap_or(false)
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_atomic(path, bytes)?;
            if verbose() {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize infallibly");
    s.push('\n');
    Ok(s.into_bytes())
}

fn mat6_rows(m: &Matrix6<f64>) -> [[f64; 6]; 6] {
    let mut out = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            out[i][j] = m[(i, j)];
        }
    }
    out
}

#[derive(Serialize)]
struct ResidualEntry {
    name: &'static str,
    max: f64,
}

#[derive(Serialize)]
struct GeomCheckReport {
    chart: String,
    samples: usize,
    tol: f64,
    pass: bool,
    residuals: Vec<ResidualEntry>,
}

#[derive(Serialize)]
struct QhatReport {
    regime: String,
    n: usize,
    p: usize,
    basis_size: usize,
    field_counts: Vec<(String, usize)>,
    cond_estimate: f64,
    jitter: f64,
    qhat: [[f64; 6]; 6],
}

impl QhatReport {
    fn new(form: &EffectiveForm, n: usize, p: usize) -> Self {
        Self {
            regime: form.regime.kind.label().to_string(),
            n,
            p,
            basis_size: form.basis_size,
            field_counts: form.field_counts.clone(),
            cond_estimate: form.cond_estimate,
            jitter: form.jitter,
            qhat: mat6_rows(&form.qhat),
        }
    }
}

fn random_xi(chart: &Chart, rng: &mut impl Rng) -> Vector2<f64> {
    let [d1, d2] = chart.domain;
    let f = |d: [f64; 2], u: f64| d[0] + (d[1] - d[0]) * (0.1 + 0.8 * u);
    Vector2::new(f(d1, rng.gen::<f64>()), f(d2, rng.gen::<f64>()))
}

fn random_poly(rng: &mut impl Rng) -> DisplacementField {
    let mut c = [[0.0; 6]; 3];
    for row in &mut c {
        for x in row.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    DisplacementField::polynomial(c)
}

fn geom_check(
    config: &Path,
    out: &Option<PathBuf>,
    seed: u64,
    samples: usize,
    tol: f64,
) -> Result<(), CliError> {
    let cfg = Config::from_path(config)?;
    let chart = cfg.geometry.chart()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maxima = [0.0f64; 10];
    for _ in 0..samples {
        let xi = random_xi(&chart, &mut rng);
        let v = random_poly(&mut rng);
        let rigid = DisplacementField::rigid(
            &chart,
            Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.2),
            Vector3::new(0.3, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        let t = 0.05;
        let rs = [
            identities::dual_frame_residual(&chart, &xi)?,
            identities::gauss_formula_residual(&chart, &xi)?,
            identities::metric_variation_split_residual(&chart, &xi, &v)?,
            identities::q_routes_residual(&chart, &xi, &v)?,
            identities::omega_sym_residual(&chart, &xi, &v)?,
            identities::mu_pairing_residual(&chart, &xi, &v)?,
            identities::squared_rotation_residual(&chart, &xi, &rigid)?,
            identities::b_routes_residual(&chart, &xi, &rigid)?,
            identities::nabla_pi_residual(&chart, &xi, t)?,
            identities::ansatz_residual(&chart, &xi, t, 0.1, &rigid, 1e-5)?,
        ];
        for (m, r) in maxima.iter_mut().zip(rs) {
            *m = m.max(r);
        }
    }
    let names = [
        "dual_frame",
        "gauss_formula",
        "metric_variation_split",
        "q_routes",
        "omega_sym",
        "mu_pairing",
        "squared_rotation",
        "b_routes",
        "nabla_pi",
        "ansatz_gradient",
    ];
    let worst = maxima.iter().cloned().fold(0.0f64, f64::max);
    let report = GeomCheckReport {
        chart: chart.name.to_string(),
        samples,
        tol,
        pass: worst <= tol,
        residuals: names
            .iter()
            .zip(maxima)
            .map(|(&name, max)| ResidualEntry { name, max })
            .collect(),
    };
    write_output(out, &to_json(&report)?)?;
    if worst <= tol {
        Ok(())
    } else {
        Err(CliError::ResidualExceeded(worst, tol))
    }
}

fn qhat_cmd(
    config: &Path,
    regime: Option<String>,
    gamma: Option<f64>,
    n: Option<usize>,
    p: Option<usize>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = Config::from_path(config)?;
    let density = cfg.material.spec()?.density()?;
    let mut disc = cfg.cell.disc()?;
    if let Some(n) = n {
        disc.n = n;
    }
    if let Some(p) = p {
        disc.p = p;
    }
    let mut run = cfg.run.clone();
    if gamma.is_some() {
        run.gamma = gamma;
    }
    let kind = run.regime_kind(regime.as_deref())?;
    let spec = RegimeSpec { kind, weingarten: run.weingarten_matrix() };
    let form = effective_form(&density, &spec, &disc)?;
    write_output(out, &to_json(&QhatReport::new(&form, disc.n, disc.p))?)
}

const LOAD_IDS: [&str; 6] = ["m11", "m22", "m12", "b11", "b22", "b12"];

fn sweep_cmd(
    config: &Path,
    gammas: Option<String>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = Config::from_path(config)?;
    let density = cfg.material.spec()?.density()?;
    let disc = cfg.cell.disc()?;
    let gammas: Vec<f64> = match gammas {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Flag(format!("--gammas: {e}"))))
            .collect::<Result<_, _>>()?,
        None => cfg.run.gammas.clone().unwrap_or_default(),
    };
    let study = gamma_limit_study(&density, &disc, &gammas)?;
    let mut csv = String::from("gamma,load_id,value,N,P,cond_estimate\n");
    for row in &study.rows {
        for (j, id) in LOAD_IDS.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{:.6e},{},{:.12e},{},{},{:.6e}",
                row.gamma,
                id,
                row.qhat[(j, j)],
                disc.n,
                disc.p,
                row.cond_estimate
            );
        }
    }
    for (label, m) in [("inf", &study.infinity), ("0", &study.zero)] {
        for (j, id) in LOAD_IDS.iter().enumerate() {
            let _ = writeln!(csv, "{label},{id},{:.12e},{},{},", m[(j, j)], disc.n, disc.p);
        }
    }
    write_output(out, csv.as_bytes())
}

fn assemble_cmd(
    config: &Path,
    out: &Option<PathBuf>,
    threads: Option<usize>,
) -> Result<(), CliError> {
    let cfg = Config::from_path(config)?;
    let chart = cfg.geometry.chart()?;
    let material = cfg.material.spec()?;
    let disc = cfg.cell.disc()?;
    let kind = cfg.run.regime_kind(None)?;
    let quad = SurfaceQuadrature::new(&chart, cfg.run.quad_order.unwrap_or(4))?;
    let v = cfg.run.displacement_field(&chart)?;
    let bw = cfg.run.b_w.unwrap_or([0.0; 3]);
    let bw_mat = from_voigt3(&nalgebra::Vector3::new(bw[0], bw[1], bw[2]));
    let mut input = BendingInput::new(v, std::sync::Arc::new(move |_: &Vector2<f64>| bw_mat));
    if let Some(tol) = cfg.run.bending_tolerance {
        input = input.with_tolerance(tol);
    }
    let work = || assemble(&chart, &quad, &input, kind, &disc, &material);
    let report = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Flag(format!("--threads: {e}")))?
            .install(work),
        None => work(),
    }?;
    if verbose() {
        eprintln!("assembled {} points in {} ms", report.quadrature_points, report.elapsed_ms);
    }
    write_output(out, &to_json(&report)?)
}

#[derive(Serialize)]
struct ModeReport {
    k: [i64; 2],
    c_re: [f64; 2],
    c_im: [f64; 2],
    d_re: f64,
    d_im: f64,
    det: f64,
}

#[derive(Serialize)]
struct ConvexSolveReport {
    a: [f64; 3],
    n: usize,
    seed: u64,
    min_det_over_k2: f64,
    curlcurl_residual: f64,
    reconstruction_residual: f64,
    modes: Vec<ModeReport>,
}

fn convex_solve_cmd(
    a: &str,
    n: usize,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let parts: Vec<f64> = a
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Flag(format!("--a: {e}"))))
        .collect::<Result<_, _>>()?;
    if parts.len() != 3 {
        return Err(CliError::Flag("--a needs exactly three components a11,a12,a22".into()));
    }
    let a_mat = Matrix2::new(parts[0], parts[1], parts[1], parts[2]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = FourierField::random(n, &mut rng);
    let sol = solve_modes(&a_mat, &b)?;
    let mut min_ratio = f64::INFINITY;
    for m in &sol.modes {
        min_ratio = min_ratio.min(m.det / (m.k[0] * m.k[0] + m.k[1] * m.k[1]) as f64);
    }
    let mut rec: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let g = 4 * n + 2;
    for i in 0..g {
        for j in 0..g {
            let y = [i as f64 / g as f64, j as f64 / g as f64];
            let target = b.eval(y);
            rec = rec.max((sol.eval_strain(&a_mat, y) - target).norm());
            scale = scale.max(target.norm());
        }
    }
    let report = ConvexSolveReport {
        a: [parts[0], parts[1], parts[2]],
        n,
        seed,
        min_det_over_k2: min_ratio,
        curlcurl_residual: curlcurl_check(&a_mat, &b, &sol),
        reconstruction_residual: rec / scale.max(1e-300),
        modes: sol
            .modes
            .iter()
            .map(|m| ModeReport {
                k: m.k,
                c_re: [m.c[0].re, m.c[1].re],
                c_im: [m.c[0].im, m.c[1].im],
                d_re: m.d.re,
                d_im: m.d.im,
                det: m.det,
            })
            .collect(),
    };
    write_output(out, &to_json(&report)?)
}

fn convex_qhat_cmd(
    config: &Path,
    n: Option<usize>,
    p: Option<usize>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = Config::from_path(config)?;
    let density = cfg.material.spec()?.density()?;
    let mut disc = cfg.cell.disc()?;
    if let Some(n) = n {
        disc.n = n;
    }
    if let Some(p) = p {
        disc.p = p;
    }
    let form = convex_effective_form(&reduce_q2(&density), &disc)?;
    write_output(out, &to_json(&QhatReport::new(&form, disc.n, disc.p))?)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GeomCheck { config, out, seed, samples, tol } => {
            geom_check(&config, &out, seed, samples, tol)
        }
        Command::Qhat { config, regime, gamma, n, p, out } => {
            qhat_cmd(&config, regime, gamma, n, p, &out)
        }
        Command::Sweep { config, gammas, out } => sweep_cmd(&config, gammas, &out),
        Command::Assemble { config, out, threads } => assemble_cmd(&config, &out, threads),
        Command::ConvexSolve { a, n, seed, out } => convex_solve_cmd(&a, n, seed, &out),
        Command::ConvexQhat { config, n, p, out } => convex_qhat_cmd(&config, n, p, &out),
    }
}
