//! Case files: one `key = value` per line, dotted keys, `#` comments.
//!
//! ```text
//! model = plate
//! grid.nx = 33
//! grid.ny = 33
//! material.E = 1
//! material.nu = 0.3
//! material.h = 0.1
//! loads.P = sin-product
//! loads.P.amplitude = 1e-4
//! ```

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dual::A4Method;
use crate::error::{Error, Result};
use crate::grid::{BoundarySpec, EdgeCondition, GridShape, ScalarField};
use crate::plate::PlateLoads;
use crate::solver::Init;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Plate,
    Shell,
}

/// Load profiles available by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadKind {
    Zero,
    Const,
    SinProduct,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoadSpec {
    pub kind: LoadKind,
    pub amplitude: f64,
    /// Half-wave counts of `sin-product` along each axis.
    pub m: u32,
    pub n: u32,
    /// Centre and width of `gaussian`, in units of the domain size.
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self { kind: LoadKind::Zero, amplitude: 1.0, m: 1, n: 1, cx: 0.5, cy: 0.5, width: 0.1 }
    }
}

impl LoadSpec {
    pub fn eval(&self, s: &GridShape, x: f64, y: f64) -> f64 {
        let (lx, ly) = (s.x1 - s.x0, s.y1 - s.y0);
        let (xs, ys) = ((x - s.x0) / lx, (y - s.y0) / ly);
        let pi = std::f64::consts::PI;
        self.amplitude
            * match self.kind {
                LoadKind::Zero => 0.0,
                LoadKind::Const => 1.0,
                LoadKind::SinProduct => (self.m as f64 * pi * xs).sin() * (self.n as f64 * pi * ys).sin(),
                LoadKind::Gaussian => {
                    let r2 = (xs - self.cx).powi(2) + (ys - self.cy).powi(2);
                    (-r2 / (2.0 * self.width * self.width)).exp()
                }
            }
    }

    pub fn field(&self, s: GridShape) -> ScalarField {
        if self.kind == LoadKind::Zero {
            return ScalarField::zeros(s);
        }
        ScalarField::from_fn(s, |x, y| self.eval(&s, x, y))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LoadsConfig {
    #[serde(rename = "P")]
    pub p: LoadSpec,
    #[serde(rename = "P1")]
    pub p1: LoadSpec,
    #[serde(rename = "P2")]
    pub p2: LoadSpec,
    #[serde(rename = "Pt")]
    pub pt: LoadSpec,
    #[serde(rename = "Pt1")]
    pub pt1: LoadSpec,
    #[serde(rename = "Pt2")]
    pub pt2: LoadSpec,
}

impl LoadsConfig {
    /// Area loads everywhere; tractions only on traction-edge nodes.
    pub fn build(&self, grid: &crate::grid::Grid) -> PlateLoads {
        let s = grid.shape();
        let edge = |spec: &LoadSpec| {
            let mut f = spec.field(s);
            for (k, v) in f.values.iter_mut().enumerate() {
                if grid.tag(k) != crate::grid::NodeTag::Traction {
                    *v = 0.0;
                }
            }
            f
        };
        PlateLoads {
            p: self.p.field(s),
            p1: self.p1.field(s),
            p2: self.p2.field(s),
            pt: edge(&self.pt),
            pt1: edge(&self.pt1),
            pt2: edge(&self.pt2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub extents: [f64; 4],
    pub boundary: BoundarySpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaterialConfig {
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Plane,
    Cylinder,
    Sphere,
    Paraboloid,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellConfig {
    pub surface: SurfaceKind,
    #[serde(rename = "R")]
    pub r: f64,
    pub a: f64,
    pub b: f64,
    /// Sampled positions, relative to the case file.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub gtol: Option<f64>,
    pub max_iter: usize,
    pub memory: usize,
    pub init: Init,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MembraneSource {
    /// Forces of the computed minimizer.
    Computed,
    /// Uniform biaxial compression of the given amplitude.
    Compressive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateConfig {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub tol: f64,
    pub gap_tol: f64,
    pub a4: A4Method,
    pub membrane: MembraneSource,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub directions: usize,
    pub t: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseConfig {
    pub model: ModelKind,
    pub grid: GridConfig,
    pub material: MaterialConfig,
    pub loads: LoadsConfig,
    pub shell: ShellConfig,
    pub solver: SolverConfig,
    pub certificate: CertificateConfig,
    pub t0_symmetric: bool,
    pub probe: ProbeConfig,
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Plate,
            grid: GridConfig { nx: 33, ny: 33, extents: [0.0, 1.0, 0.0, 1.0], boundary: BoundarySpec::clamped() },
            material: MaterialConfig { e: 1.0, nu: 0.3, h: 0.1 },
            loads: LoadsConfig::default(),
            shell: ShellConfig { surface: SurfaceKind::Plane, r: 1.0, a: 0.0, b: 0.0, file: None },
            solver: SolverConfig { gtol: None, max_iter: 5000, memory: 10, init: Init::Linear },
            certificate: CertificateConfig {
                k: None,
                tol: 1e-6,
                gap_tol: 1e-6,
                a4: A4Method::Auto,
                membrane: MembraneSource::Computed,
                amplitude: 1.0,
            },
            t0_symmetric: false,
            probe: ProbeConfig { directions: 4, t: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0] },
            seed: 0,
            base_dir: PathBuf::new(),
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{msg} at line {line}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| bad(line, format!("invalid value '{v}' for {key}")))
}

fn real(key: &str, v: &str, line: usize) -> Result<f64> {
    let x: f64 = num(key, v, line)?;
    if !x.is_finite() {
        return Err(bad(line, format!("{key} must be finite")));
    }
    Ok(x)
}

fn positive(key: &str, v: &str, line: usize) -> Result<f64> {
    let x = real(key, v, line)?;
    if x <= 0.0 {
        return Err(bad(line, format!("{key} must be positive")));
    }
    Ok(x)
}

fn choice<T: Copy>(key: &str, v: &str, line: usize, table: &[(&str, T)]) -> Result<T> {
    table.iter().find(|(n, _)| *n == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
        bad(line, format!("invalid value '{v}' for {key} (expected one of {})", names.join(", ")))
    })
}

fn edge(key: &str, v: &str, line: usize) -> Result<EdgeCondition> {
    choice(key, v, line, &[("clamped", EdgeCondition::Clamped), ("traction", EdgeCondition::Traction)])
}

fn load_key(cfg: &mut CaseConfig, key: &str, v: &str, line: usize) -> Result<bool> {
    let rest = &key["loads.".len()..];
    let (name, field) = match rest.split_once('.') {
        Some((a, b)) => (a, Some(b)),
        None => (rest, None),
    };
    let spec = match name {
        "P" => &mut cfg.loads.p,
        "P1" => &mut cfg.loads.p1,
        "P2" => &mut cfg.loads.p2,
        "Pt" => &mut cfg.loads.pt,
        "Pt1" => &mut cfg.loads.pt1,
        "Pt2" => &mut cfg.loads.pt2,
        _ => return Ok(false),
    };
    match field {
        None => {
            spec.kind = choice(
                key,
                v,
                line,
                &[
                    ("zero", LoadKind::Zero),
                    ("const", LoadKind::Const),
                    ("sin-product", LoadKind::SinProduct),
                    ("gaussian", LoadKind::Gaussian),
                ],
            )?
        }
        Some("amplitude") => spec.amplitude = real(key, v, line)?,
        Some("m") => spec.m = num(key, v, line)?,
        Some("n") => spec.n = num(key, v, line)?,
        Some("cx") => spec.cx = real(key, v, line)?,
        Some("cy") => spec.cy = real(key, v, line)?,
        Some("width") => spec.width = positive(key, v, line)?,
        Some(_) => return Ok(false),
    }
    Ok(true)
}

fn set(cfg: &mut CaseConfig, key: &str, v: &str, line: usize) -> Result<()> {
    match key {
        "model" => cfg.model = choice(key, v, line, &[("plate", ModelKind::Plate), ("shell", ModelKind::Shell)])?,
        "seed" => cfg.seed = num(key, v, line)?,
        "grid.nx" => cfg.grid.nx = num(key, v, line)?,
        "grid.ny" => cfg.grid.ny = num(key, v, line)?,
        "grid.n" => {
            cfg.grid.nx = num(key, v, line)?;
            cfg.grid.ny = cfg.grid.nx;
        }
        "grid.x0" => cfg.grid.extents[0] = real(key, v, line)?,
        "grid.x1" => cfg.grid.extents[1] = real(key, v, line)?,
        "grid.y0" => cfg.grid.extents[2] = real(key, v, line)?,
        "grid.y1" => cfg.grid.extents[3] = real(key, v, line)?,
        "boundary.left" => cfg.grid.boundary.left = edge(key, v, line)?,
        "boundary.right" => cfg.grid.boundary.right = edge(key, v, line)?,
        "boundary.bottom" => cfg.grid.boundary.bottom = edge(key, v, line)?,
        "boundary.top" => cfg.grid.boundary.top = edge(key, v, line)?,
        "boundary.all" => cfg.grid.boundary = BoundarySpec::uniform(edge(key, v, line)?),
        "material.E" => cfg.material.e = positive(key, v, line)?,
        "material.h" => cfg.material.h = positive(key, v, line)?,
        "material.nu" => {
            let nu = real(key, v, line)?;
            if !(nu > -1.0 && nu < 0.5) {
                return Err(bad(line, "nu out of range (-1, 0.5)"));
            }
            cfg.material.nu = nu;
        }
        "shell.surface" => {
            cfg.shell.surface = choice(
                key,
                v,
                line,
                &[
                    ("plane", SurfaceKind::Plane),
                    ("cylinder", SurfaceKind::Cylinder),
                    ("sphere", SurfaceKind::Sphere),
                    ("paraboloid", SurfaceKind::Paraboloid),
                    ("file", SurfaceKind::File),
                ],
            )?
        }
        "shell.R" => cfg.shell.r = positive(key, v, line)?,
        "shell.a" => cfg.shell.a = real(key, v, line)?,
        "shell.b" => cfg.shell.b = real(key, v, line)?,
        "shell.file" => cfg.shell.file = Some(PathBuf::from(v)),
        "solver.gtol" => cfg.solver.gtol = Some(positive(key, v, line)?),
        "solver.max_iter" => cfg.solver.max_iter = num(key, v, line)?,
        "solver.memory" => cfg.solver.memory = num(key, v, line)?,
        "solver.init" => cfg.solver.init = choice(key, v, line, &[("linear", Init::Linear), ("zero", Init::Zero)])?,
        "certificate.K" => cfg.certificate.k = Some(positive(key, v, line)?),
        "certificate.tol" => cfg.certificate.tol = positive(key, v, line)?,
        "certificate.gap_tol" => cfg.certificate.gap_tol = positive(key, v, line)?,
        "certificate.a4" => {
            cfg.certificate.a4 = choice(
                key,
                v,
                line,
                &[("auto", A4Method::Auto), ("dense", A4Method::Dense), ("iterative", A4Method::Iterative)],
            )?
        }
        "certificate.membrane" => {
            cfg.certificate.membrane = choice(
                key,
                v,
                line,
                &[("computed", MembraneSource::Computed), ("compressive", MembraneSource::Compressive)],
            )?
        }
        "certificate.amplitude" => cfg.certificate.amplitude = positive(key, v, line)?,
        "t0.symmetric" => cfg.t0_symmetric = choice(key, v, line, &[("true", true), ("false", false)])?,
        "probe.directions" => cfg.probe.directions = num(key, v, line)?,
        "probe.t" => {
            cfg.probe.t = v.split(',').map(|s| positive(key, s.trim(), line)).collect::<Result<_>>()?;
        }
        k if k.starts_with("loads.") => {
            if !load_key(cfg, key, v, line)? {
                return Err(bad(line, format!("unknown key '{key}'")));
            }
        }
        _ => return Err(bad(line, format!("unknown key '{key}'"))),
    }
    Ok(())
}

/// Parses case text. Relative file references resolve against `base_dir`.
pub fn parse_str(text: &str, base_dir: &Path) -> Result<CaseConfig> {
    let mut cfg = CaseConfig { base_dir: base_dir.to_path_buf(), ..Default::default() };
    let mut grid_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(bad(line, format!("expected 'key = value', found '{body}'")));
        };
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        if v.is_empty() {
            return Err(bad(line, format!("missing value for {k}")));
        }
        if k.starts_with("grid.") {
            grid_line = line;
        }
        set(&mut cfg, k, v, line)?;
    }
    let [x0, x1, y0, y1] = cfg.grid.extents;
    if !(x1 > x0 && y1 > y0) {
        return Err(bad(grid_line, "grid extents must satisfy x1 > x0 and y1 > y0"));
    }
    if cfg.model == ModelKind::Shell && cfg.shell.surface == SurfaceKind::File && cfg.shell.file.is_none() {
        return Err(Error::Config("shell.surface = file needs shell.file".into()));
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<CaseConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text, path.parent().unwrap_or(Path::new(".")))
}
