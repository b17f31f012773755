use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{CaseConfig, MembraneSource, ModelKind, SurfaceKind};
use crate::dual::{self, CertifyOptions, DualCertificate};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridShape, TensorField2x2};
use crate::loads::{build_t0_plate, build_t0_shell, T0Field, T0Options};
use crate::model::{Discretization, EnergyBreakdown};
use crate::plate::{DisplacementField, Plate, PlateMaterial};
use crate::shell::{Shell, ShellMaterial, Surface, SurfaceGeometry};
use crate::solver::{coercivity_probe, solve, MinimizeOptions, MinimizeResult, ProbeTable};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Certify,
    BuildT0,
    ProbeCoercivity,
    GeometryCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::BuildT0 => "build-t0",
            Command::ProbeCoercivity => "probe-coercivity",
            Command::GeometryCheck => "geometry-check",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub gtol: f64,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub membrane: MembraneSource,
    #[serde(rename = "K")]
    pub k: f64,
    pub residual_a1: f64,
    pub residual_a2: f64,
    pub tol: f64,
    pub in_a3: bool,
    pub lambda_min_a3: f64,
    pub lambda_min_a4: Option<f64>,
    pub dual_value: Option<f64>,
    pub j_star: Option<f64>,
    pub gap: Option<f64>,
    pub gap_tol: f64,
}

impl CertificateReport {
    fn new(c: &DualCertificate, membrane: MembraneSource) -> Self {
        Self {
            membrane,
            k: c.k,
            residual_a1: c.residual_a1,
            residual_a2: c.residual_a2,
            tol: c.tol,
            in_a3: c.in_a3,
            lambda_min_a3: c.lambda_min_a3,
            lambda_min_a4: c.lambda_min_a4,
            dual_value: c.dual_value,
            j_star: c.j_star,
            gap: c.gap,
            gap_tol: c.gap_tol,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct T0Report {
    pub symmetric: bool,
    pub norm2: f64,
    pub residual: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub surface: SurfaceKind,
    pub metric_inverse_error: f64,
    pub min_sqrt_a: f64,
    /// Gauss curvature range over nodes at least two spacings from the edge.
    pub gauss_min: f64,
    pub gauss_max: f64,
    pub gauss_expected: Option<f64>,
    pub gauss_max_deviation: Option<f64>,
    pub material_min_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: Command,
    pub config: CaseConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergyBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<T0Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub fields: Vec<String>,
}

/// Outcome of one case: the report and the process exit status.
pub struct CaseOutcome {
    pub report: CaseReport,
    pub report_path: PathBuf,
    pub exit: i32,
    pub error: Option<Error>,
}

pub enum Model {
    Plate(Plate),
    Shell(Shell),
}

impl Model {
    pub fn disc(&self) -> &Discretization {
        match self {
            Model::Plate(p) => &p.disc,
            Model::Shell(s) => &s.disc,
        }
    }
}

pub fn build_grid(cfg: &CaseConfig) -> Result<Grid> {
    Grid::new(cfg.grid.extents, cfg.grid.nx, cfg.grid.ny, cfg.grid.boundary)
}

pub fn build_geometry(cfg: &CaseConfig, grid: &Grid) -> Result<SurfaceGeometry> {
    let s = &cfg.shell;
    let surface = match s.surface {
        SurfaceKind::Plane => Surface::Plane,
        SurfaceKind::Cylinder => Surface::Cylinder { r: s.r },
        SurfaceKind::Sphere => Surface::Sphere { r: s.r },
        SurfaceKind::Paraboloid => Surface::Paraboloid { a: s.a, b: s.b },
        SurfaceKind::File => {
            let file = s.file.as_ref().ok_or_else(|| Error::Config("shell.file missing".into()))?;
            return SurfaceGeometry::from_csv(grid, &cfg.base_dir.join(file));
        }
    };
    surface.validate()?;
    SurfaceGeometry::analytic(grid, &surface)
}

pub fn build_model(cfg: &CaseConfig) -> Result<Model> {
    let grid = build_grid(cfg)?;
    let loads = cfg.loads.build(&grid);
    let m = cfg.material;
    match cfg.model {
        ModelKind::Plate => Ok(Model::Plate(Plate::new(grid, PlateMaterial::new(m.e, m.nu, m.h)?, loads)?)),
        ModelKind::Shell => {
            if !grid.spec().is_fully_clamped() {
                return Err(Error::Config("shell cases use a clamped boundary".into()));
            }
            let geom = build_geometry(cfg, &grid)?;
            let mat = ShellMaterial::new(&geom, m.e, m.nu, m.h)?;
            Ok(Model::Shell(Shell::new(geom, mat, loads)?))
        }
    }
}

fn solver_report(r: &MinimizeResult) -> SolverReport {
    SolverReport {
        iterations: r.iterations,
        converged: r.converged,
        grad_norm: r.grad_norm,
        gtol: r.gtol,
        message: r.message.clone(),
    }
}

struct Dumps<'a> {
    dir: &'a Path,
    enabled: bool,
    shape: GridShape,
    written: Vec<String>,
}

impl Dumps<'_> {
    fn field(&mut self, name: &str, values: &[f64]) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let mut s = String::from("x,y,value\n");
        for (k, v) in values.iter().enumerate() {
            let (x, y) = self.shape.coords(k);
            let _ = writeln!(s, "{x},{y},{v}");
        }
        let file = format!("{name}.csv");
        std::fs::write(self.dir.join(&file), s)?;
        self.written.push(file);
        Ok(())
    }

    fn displacement(&mut self, u: &DisplacementField) -> Result<()> {
        self.field("u1", &u.u1.values)?;
        self.field("u2", &u.u2.values)?;
        self.field("w", &u.w.values)
    }

    fn tensor(&mut self, prefix: &str, t: &TensorField2x2, full: bool) -> Result<()> {
        self.field(&format!("{prefix}11"), &t.xx)?;
        self.field(&format!("{prefix}12"), &t.xy)?;
        if full {
            self.field(&format!("{prefix}21"), &t.yx)?;
        }
        self.field(&format!("{prefix}22"), &t.yy)
    }

    fn vector(&mut self, prefix: &str, v: &[f64]) -> Result<()> {
        let (a, b): (Vec<f64>, Vec<f64>) = v.chunks(2).map(|c| (c[0], c[1])).unzip();
        self.field(&format!("{prefix}1"), &a)?;
        self.field(&format!("{prefix}2"), &b)
    }
}

fn t0_for(cfg: &CaseConfig, model: &Model) -> Result<T0Field> {
    let opts = T0Options { symmetric: cfg.t0_symmetric };
    match model {
        Model::Plate(p) => build_t0_plate(p.grid(), &p.loads, opts),
        Model::Shell(s) => build_t0_shell(&s.geometry, &s.loads, opts),
    }
}

fn probe_directions(cfg: &CaseConfig, shape: GridShape) -> Vec<DisplacementField> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pi = std::f64::consts::PI;
    (0..cfg.probe.directions)
        .map(|_| {
            let modes: Vec<[f64; 3]> = (0..3)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(1..4) as f64, rng.gen_range(1..4) as f64])
                .collect();
            DisplacementField::from_fn(shape, |x, y| {
                let xs = (x - shape.x0) / (shape.x1 - shape.x0);
                let ys = (y - shape.y0) / (shape.y1 - shape.y0);
                let f = |m: &[f64; 3]| m[0] * (m[1] * pi * xs).sin() * (m[2] * pi * ys).sin();
                [0.1 * f(&modes[0]), 0.1 * f(&modes[1]), f(&modes[2])]
            })
        })
        .collect()
}

fn geometry_report(cfg: &CaseConfig) -> Result<GeometryReport> {
    let grid = Grid::new(cfg.grid.extents, cfg.grid.nx, cfg.grid.ny, crate::grid::BoundarySpec::clamped())?;
    let g = build_geometry(cfg, &grid)?;
    let m = cfg.material;
    let mat = ShellMaterial::new(&g, m.e, m.nu, m.h)?;
    let s = grid.shape();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..s.len() {
        let (i, j) = s.ij(k);
        if i < 2 || j < 2 || i + 2 >= s.nx || j + 2 >= s.ny {
            continue;
        }
        let kg = g.gauss_curvature(k);
        lo = lo.min(kg);
        hi = hi.max(kg);
    }
    let expected = match cfg.shell.surface {
        SurfaceKind::Plane | SurfaceKind::Cylinder => Some(0.0),
        SurfaceKind::Sphere => Some(1.0 / (cfg.shell.r * cfg.shell.r)),
        _ => None,
    };
    Ok(GeometryReport {
        surface: cfg.shell.surface,
        metric_inverse_error: g.metric_inverse_error(),
        min_sqrt_a: g.sqrt_a.iter().copied().fold(f64::INFINITY, f64::min),
        gauss_min: lo,
        gauss_max: hi,
        gauss_expected: expected,
        gauss_max_deviation: expected.map(|e| (hi - e).abs().max((lo - e).abs())),
        material_min_eigenvalue: mat.min_eigenvalue(),
    })
}

/// Runs one case and writes `report.json` (plus CSV fields on request)
/// into `out`.
pub fn run_case(cmd: Command, cfg: &CaseConfig, out: &Path, dump_fields: bool) -> Result<CaseOutcome> {
    std::fs::create_dir_all(out)?;
    let mut report = CaseReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: cmd,
        config: cfg.clone(),
        energies: None,
        solver: None,
        certificate: None,
        t0: None,
        probe: None,
        geometry: None,
        verdict: None,
        fields: vec![],
    };
    let shape = GridShape {
        nx: cfg.grid.nx,
        ny: cfg.grid.ny,
        x0: cfg.grid.extents[0],
        x1: cfg.grid.extents[1],
        y0: cfg.grid.extents[2],
        y1: cfg.grid.extents[3],
    };
    let mut dumps = Dumps { dir: out, enabled: dump_fields, shape, written: vec![] };
    let result = execute(cmd, cfg, &mut report, &mut dumps);
    report.fields = dumps.written;
    let report_path = out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(format!("report: {e}")))?;
    text.push('\n');
    std::fs::write(&report_path, text)?;
    let (exit, error) = match result {
        Ok(code) => (code, None),
        Err(e) => (1, Some(e)),
    };
    Ok(CaseOutcome { report, report_path, exit, error })
}

fn execute(cmd: Command, cfg: &CaseConfig, report: &mut CaseReport, dumps: &mut Dumps) -> Result<i32> {
    if cmd == Command::GeometryCheck {
        report.geometry = Some(geometry_report(cfg)?);
        return Ok(0);
    }
    let model = build_model(cfg)?;
    let disc = model.disc();
    match cmd {
        Command::BuildT0 => {
            let t0 = t0_for(cfg, &model)?;
            dumps.tensor("T0_", &t0.t, !cfg.t0_symmetric)?;
            report.t0 = Some(T0Report {
                symmetric: cfg.t0_symmetric,
                norm2: t0.norm2,
                residual: t0.residual,
                max_abs: t0.t.max_abs(),
            });
            Ok(0)
        }
        Command::ProbeCoercivity => {
            let t0 = t0_for(cfg, &model)?;
            let dirs = probe_directions(cfg, disc.grid.shape());
            let curv = match &model {
                Model::Shell(s) => Some(s.geometry.curvature.as_slice()),
                Model::Plate(_) => None,
            };
            let table = coercivity_probe(disc, curv, &t0.t, &dirs, &cfg.probe.t)?;
            report.t0 = Some(T0Report {
                symmetric: cfg.t0_symmetric,
                norm2: t0.norm2,
                residual: t0.residual,
                max_abs: t0.t.max_abs(),
            });
            report.probe = Some(table);
            Ok(0)
        }
        Command::Solve | Command::Certify => {
            let cert_opts = CertifyOptions {
                k: cfg.certificate.k,
                rel_tol: cfg.certificate.tol,
                gap_rel_tol: cfg.certificate.gap_tol,
                a4: cfg.certificate.a4,
            };
            let gtol = match (cmd, cfg.solver.gtol) {
                (_, Some(g)) => Some(g),
                (Command::Certify, None) => Some(0.1 * cert_opts.rel_tol * disc.load_scale),
                _ => None,
            };
            let opts = MinimizeOptions { gtol, max_iter: cfg.solver.max_iter, memory: cfg.solver.memory };
            let r = solve(disc, cfg.solver.init, &opts)?;
            log::info!("solver: {} after {} iterations, |g| = {:.3e}", r.message, r.iterations, r.grad_norm);
            report.solver = Some(solver_report(&r));
            report.energies = Some(disc.energy(&r.x)?);
            dumps.displacement(&DisplacementField::from_dofs(&disc.dofs, &r.x))?;
            if !r.converged {
                return Err(Error::Solver(format!("{} (|g| = {:.3e} > {:.3e})", r.message, r.grad_norm, r.gtol)));
            }
            if cmd == Command::Solve {
                return Ok(0);
            }
            let cert = match cfg.certificate.membrane {
                MembraneSource::Computed => dual::extract_certificate(disc, &r.x, &cert_opts)?,
                MembraneSource::Compressive => {
                    let n = dual::compressive_membrane(disc, cfg.certificate.amplitude);
                    let q = dual::transverse_balance(disc, &n)?;
                    dual::evaluate_dual_point(disc, &n, &q, Some(&r.x), &cert_opts)?
                }
            };
            let nf = cert.n_field(disc)?;
            dumps.tensor("N", &nf, false)?;
            dumps.vector("Q", &cert.q)?;
            dumps.vector("z", &cert.zstar)?;
            report.certificate = Some(CertificateReport::new(&cert, cfg.certificate.membrane));
            report.verdict = Some(cert.verdict.to_string());
            Ok(if cert.verdict.is_certified() { 0 } else { 2 })
        }
        Command::GeometryCheck => unreachable!(),
    }
}
