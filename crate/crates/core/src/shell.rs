//! Shells with moderately large rotations about the tangents.
//!
//! The middle surface is `r(ξ₁, ξ₂)` over a rectangular parameter grid.
//! Strains:
//!
//! ```text
//! θ_{αβ} = ½(u_{α|β} + u_{β|α}) − b_{αβ} w
//! φ_α    = w_{,α} + b_α^β u_β
//! γ_{αβ} = θ_{αβ} + ½ φ_α φ_β
//! κ_{αβ} = −w_{|αβ} − b^λ_{α|β} u_λ − b_α^λ u_{λ|β} − b_β^λ u_{λ|α} + b_α^λ b_{λβ} w
//! ```
//!
//! with `u_{α|β} = u_{α,β} − Γ^λ_{αβ} u_λ` and
//! `w_{|αβ} = w_{,αβ} − Γ^λ_{αβ} w_{,λ}`. All integrals carry the area
//! element `√a`.
//!
//! The normal is `a₁ × a₂ / |a₁ × a₂|`; on the cylinder
//! `r = (R cos ξ₁, R sin ξ₁, ξ₂)` it points outwards and `b₁₁ = −R`.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::calculus::{along, d2_line, dx, dy};
use crate::grid::{DofMap, Grid, LinearOp, OpBuilder, StencilSet, TensorField2x2, VectorField2};
use crate::model::{voigt_inverse, voigt_min_eigenvalue, Discretization, EnergyBreakdown, Voigt};
use crate::plate::{check_parameters, isotropic_voigt, DisplacementField, PlateLoads, PlateMaterial};

type V3 = [f64; 3];
type M2 = [[f64; 2]; 2];

fn d3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Position and partial derivatives of a parametrization at one point.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub r: V3,
    /// `[r_{,1}, r_{,2}]`.
    pub d: [V3; 2],
    /// `r_{,αβ}`.
    pub dd: [[V3; 2]; 2],
}

pub trait Parametrization {
    fn point(&self, xi1: f64, xi2: f64) -> SurfacePoint;
}

/// Built-in surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "surface", rename_all = "lowercase")]
pub enum Surface {
    Plane,
    Cylinder { r: f64 },
    Sphere { r: f64 },
    Paraboloid { a: f64, b: f64 },
}

impl Parametrization for Surface {
    fn point(&self, x: f64, y: f64) -> SurfacePoint {
        match *self {
            Surface::Plane => SurfacePoint {
                r: [x, y, 0.0],
                d: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
                dd: [[[0.0; 3]; 2]; 2],
            },
            Surface::Cylinder { r } => {
                let (s, c) = x.sin_cos();
                let r12 = [0.0; 3];
                SurfacePoint {
                    r: [r * c, r * s, y],
                    d: [[-r * s, r * c, 0.0], [0.0, 0.0, 1.0]],
                    dd: [[[-r * c, -r * s, 0.0], r12], [r12, [0.0; 3]]],
                }
            }
            Surface::Sphere { r } => {
                let (s1, c1) = x.sin_cos();
                let (s2, c2) = y.sin_cos();
                let p = [r * c1 * c2, r * c1 * s2, r * s1];
                let r12 = [r * s1 * s2, -r * s1 * c2, 0.0];
                SurfacePoint {
                    r: p,
                    d: [[-r * s1 * c2, -r * s1 * s2, r * c1], [-r * c1 * s2, r * c1 * c2, 0.0]],
                    dd: [[[-p[0], -p[1], -p[2]], r12], [r12, [-r * c1 * c2, -r * c1 * s2, 0.0]]],
                }
            }
            Surface::Paraboloid { a, b } => {
                let r12 = [0.0; 3];
                SurfacePoint {
                    r: [x, y, a * x * x + b * y * y],
                    d: [[1.0, 0.0, 2.0 * a * x], [0.0, 1.0, 2.0 * b * y]],
                    dd: [[[0.0, 0.0, 2.0 * a], r12], [r12, [0.0, 0.0, 2.0 * b]]],
                }
            }
        }
    }
}

impl Surface {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Surface::Plane => true,
            Surface::Cylinder { r } | Surface::Sphere { r } => r.is_finite() && r > 0.0,
            Surface::Paraboloid { a, b } => a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("invalid surface parameters {self:?}")))
        }
    }
}

/// Differential geometry of the middle surface at every node.
#[derive(Clone, Debug)]
pub struct SurfaceGeometry {
    pub grid: Grid,
    pub position: Vec<V3>,
    /// `a_{αβ}`.
    pub metric: Vec<M2>,
    /// `a^{αβ}`.
    pub metric_inv: Vec<M2>,
    pub sqrt_a: Vec<f64>,
    pub normal: Vec<V3>,
    /// `b_{αβ}`.
    pub curvature: Vec<M2>,
    /// `b_α^β` stored as `[α][β]`.
    pub curvature_mixed: Vec<M2>,
    /// `Γ_{αβγ}` stored as `[α][β][γ]`.
    pub christoffel_first: Vec<[M2; 2]>,
    /// `Γ^λ_{αβ}` stored as `[λ][α][β]`.
    pub christoffel: Vec<[M2; 2]>,
    /// Symmetrized `b^λ_{α|β}` stored as `[λ][α][β]`.
    pub curvature_derivative: Vec<[M2; 2]>,
}

fn inv2(a: M2) -> (M2, f64) {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    ([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]], det)
}

impl SurfaceGeometry {
    /// Geometry from an analytic parametrization.
    pub fn analytic(grid: &Grid, surface: &impl Parametrization) -> Result<Self> {
        let s = grid.shape();
        let pts: Vec<SurfacePoint> = (0..s.len())
            .map(|k| {
                let (x, y) = s.coords(k);
                surface.point(x, y)
            })
            .collect();
        Self::from_points(grid, pts)
    }

    /// Geometry from sampled positions (row-major node order); derivatives
    /// come from the grid difference operators.
    pub fn sampled(grid: &Grid, positions: &[V3]) -> Result<Self> {
        let s = grid.shape();
        if positions.len() != s.len() {
            return Err(Error::Geometry(format!(
                "expected {} sampled positions, got {}",
                s.len(),
                positions.len()
            )));
        }
        let comp = |c: usize| positions.iter().map(|p| p[c]).collect::<Vec<_>>();
        let xs = [comp(0), comp(1), comp(2)];
        let mut d1 = vec![[0.0; 3]; s.len()];
        let mut d2 = vec![[0.0; 3]; s.len()];
        let mut d11 = vec![[0.0; 3]; s.len()];
        let mut d22 = vec![[0.0; 3]; s.len()];
        let mut d12 = vec![[0.0; 3]; s.len()];
        for (c, v) in xs.iter().enumerate() {
            let a = dx(s, v);
            let b = dy(s, v);
            let aa = along(s, v, 0, d2_line);
            let bb = along(s, v, 1, d2_line);
            let ab = dy(s, &a);
            for k in 0..s.len() {
                d1[k][c] = a[k];
                d2[k][c] = b[k];
                d11[k][c] = aa[k];
                d22[k][c] = bb[k];
                d12[k][c] = ab[k];
            }
        }
        let pts = (0..s.len())
            .map(|k| SurfacePoint { r: positions[k], d: [d1[k], d2[k]], dd: [[d11[k], d12[k]], [d12[k], d22[k]]] })
            .collect();
        Self::from_points(grid, pts)
    }

    /// Reads `xi1, xi2, x, y, z` rows (header optional, `#` comments
    /// allowed) in row-major node order and builds the sampled geometry.
    pub fn from_csv(grid: &Grid, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut pos = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(Error::Geometry(format!("line {}: expected 5 columns", ln + 1)));
            }
            let vals: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match vals {
                Ok(v) => {
                    let k = pos.len();
                    if k < grid.len() {
                        let (x, y) = grid.shape().coords(k);
                        let tol = 1e-9 * (1.0 + x.abs().max(y.abs()));
                        if (v[0] - x).abs() > tol || (v[1] - y).abs() > tol {
                            return Err(Error::Geometry(format!(
                                "line {}: parameters ({}, {}) do not match node ({x}, {y})",
                                ln + 1,
                                v[0],
                                v[1]
                            )));
                        }
                    }
                    pos.push([v[2], v[3], v[4]]);
                }
                Err(_) if pos.is_empty() && ln == 0 => continue,
                Err(e) => return Err(Error::Geometry(format!("line {}: {e}", ln + 1))),
            }
        }
        Self::sampled(grid, &pos)
    }

    fn from_points(grid: &Grid, pts: Vec<SurfacePoint>) -> Result<Self> {
        let s = grid.shape();
        let n = s.len();
        let mut g = SurfaceGeometry {
            grid: grid.clone(),
            position: Vec::with_capacity(n),
            metric: Vec::with_capacity(n),
            metric_inv: Vec::with_capacity(n),
            sqrt_a: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
            curvature_mixed: Vec::with_capacity(n),
            christoffel_first: Vec::with_capacity(n),
            christoffel: Vec::with_capacity(n),
            curvature_derivative: vec![[[[0.0; 2]; 2]; 2]; n],
        };
        for (k, p) in pts.iter().enumerate() {
            if p.r.iter().chain(p.d.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("surface parametrization"));
            }
            let mut a = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    a[i][j] = d3(p.d[i], p.d[j]);
                }
            }
            let (ainv, det) = inv2(a);
            let scale = a[0][0].abs().max(a[1][1].abs());
            if !(det > 1e-14 * scale * scale) {
                let (i, j) = s.ij(k);
                return Err(Error::Geometry(format!("degenerate metric at node ({i}, {j})")));
            }
            let c = cross(p.d[0], p.d[1]);
            let cn = d3(c, c).sqrt();
            let nrm = [c[0] / cn, c[1] / cn, c[2] / cn];
            let mut b = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    b[i][j] = d3(nrm, p.dd[i][j]);
                }
            }
            let bs = 0.5 * (b[0][1] + b[1][0]);
            b[0][1] = bs;
            b[1][0] = bs;
            let mut bm = [[0.0; 2]; 2];
            for al in 0..2 {
                for be in 0..2 {
                    bm[al][be] = b[al][0] * ainv[0][be] + b[al][1] * ainv[1][be];
                }
            }
            // Γ_{γαβ} = r_{,αβ}·r_{,γ}
            let mut first = [[[0.0; 2]; 2]; 2];
            for ga in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        first[ga][al][be] = d3(p.dd[al][be], p.d[ga]);
                    }
                }
            }
            let mut second = [[[0.0; 2]; 2]; 2];
            for la in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        second[la][al][be] = ainv[la][0] * first[0][al][be] + ainv[la][1] * first[1][al][be];
                    }
                }
            }
            g.position.push(p.r);
            g.metric.push(a);
            g.metric_inv.push(ainv);
            g.sqrt_a.push(det.sqrt());
            g.normal.push(nrm);
            g.curvature.push(b);
            g.curvature_mixed.push(bm);
            g.christoffel_first.push(first);
            g.christoffel.push(second);
        }
        // b^λ_{α|β} = ∂_β b^λ_α + Γ^λ_{βμ} b^μ_α − Γ^μ_{αβ} b^λ_μ, with b^λ_α = b_α^λ
        let db: Vec<Vec<[Vec<f64>; 2]>> = (0..2)
            .map(|la| {
                (0..2)
                    .map(|al| {
                        let v: Vec<f64> = g.curvature_mixed.iter().map(|m| m[al][la]).collect();
                        [dx(s, &v), dy(s, &v)]
                    })
                    .collect()
            })
            .collect();
        for k in 0..n {
            let bm = g.curvature_mixed[k];
            let ch = g.christoffel[k];
            let mut t = [[[0.0; 2]; 2]; 2];
            for la in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        let mut v = db[la][al][be][k];
                        for mu in 0..2 {
                            v += ch[la][be][mu] * bm[al][mu] - ch[mu][al][be] * bm[mu][la];
                        }
                        t[la][al][be] = v;
                    }
                }
            }
            for tl in t.iter_mut() {
                let m = 0.5 * (tl[0][1] + tl[1][0]);
                tl[0][1] = m;
                tl[1][0] = m;
            }
            g.curvature_derivative[k] = t;
        }
        Ok(g)
    }

    /// `det b / det a` at node `k`.
    pub fn gauss_curvature(&self, k: usize) -> f64 {
        let b = self.curvature[k];
        let a = self.metric[k];
        (b[0][0] * b[1][1] - b[0][1] * b[1][0]) / (a[0][0] * a[1][1] - a[0][1] * a[1][0])
    }

    /// `max |a^{αβ} a_{βγ} − δ|` over all nodes.
    pub fn metric_inverse_error(&self) -> f64 {
        let mut e = 0.0f64;
        for (a, ai) in self.metric.iter().zip(&self.metric_inv) {
            for i in 0..2 {
                for j in 0..2 {
                    let v = ai[i][0] * a[0][j] + ai[i][1] * a[1][j] - if i == j { 1.0 } else { 0.0 };
                    e = e.max(v.abs());
                }
            }
        }
        e
    }

    /// Quadrature weights `ω √a`.
    pub fn area_weights(&self) -> Vec<f64> {
        self.grid.shape().trapezoid_weights().iter().zip(&self.sqrt_a).map(|(w, s)| w * s).collect()
    }
}

/// Node-wise shell elasticity tensors.
#[derive(Clone, Debug)]
pub struct ShellMaterial {
    pub e: f64,
    pub nu: f64,
    pub h: f64,
    pub membrane: Vec<Voigt>,
    pub bending: Vec<Voigt>,
    pub membrane_inv: Vec<Voigt>,
    pub bending_inv: Vec<Voigt>,
}

impl ShellMaterial {
    pub fn new(geom: &SurfaceGeometry, e: f64, nu: f64, h: f64) -> Result<Self> {
        check_parameters(e, nu, h)?;
        let s = h * h / 12.0;
        let n = geom.metric_inv.len();
        let mut m = ShellMaterial {
            e,
            nu,
            h,
            membrane: Vec::with_capacity(n),
            bending: Vec::with_capacity(n),
            membrane_inv: Vec::with_capacity(n),
            bending_inv: Vec::with_capacity(n),
        };
        for (k, ainv) in geom.metric_inv.iter().enumerate() {
            let c = isotropic_voigt(*ainv, e, nu, h);
            let cb = c.map(|v| s * v);
            if voigt_min_eigenvalue(&c) <= 0.0 {
                let (i, j) = geom.grid.shape().ij(k);
                return Err(Error::Material(format!("shell elasticity tensor is indefinite at node ({i}, {j})")));
            }
            let ci = voigt_inverse(&c).ok_or_else(|| Error::Material("singular shell tensor".into()))?;
            let cbi = voigt_inverse(&cb).ok_or_else(|| Error::Material("singular shell tensor".into()))?;
            m.membrane.push(c);
            m.bending.push(cb);
            m.membrane_inv.push(ci);
            m.bending_inv.push(cbi);
        }
        Ok(m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.membrane.iter().map(voigt_min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// The plate material, when the tensors are spatially constant.
    pub fn as_plate(&self) -> Result<PlateMaterial> {
        PlateMaterial::new(self.e, self.nu, self.h)
    }
}

/// Adds `coef · u_{λ|β}` at node `k` to `row`.
fn add_cov(b: &mut OpBuilder, st: &StencilSet, ch: &[M2; 2], row: usize, coef: f64, k: usize, la: usize, be: usize) {
    b.add_op(row, coef, &st.d[be], k, la);
    for mu in 0..2 {
        b.add_point(row, -coef * ch[mu][la][be], k, mu);
    }
}

/// Shell strain operators on the free unknowns.
pub fn shell_operators(geom: &SurfaceGeometry, dofs: &DofMap, st: &StencilSet) -> [LinearOp; 3] {
    let n = geom.grid.len();
    let mut lt = OpBuilder::new(dofs, 3 * n);
    let mut lp = OpBuilder::new(dofs, 2 * n);
    let mut lk = OpBuilder::new(dofs, 3 * n);
    let pairs = [(0usize, 0usize, 1.0f64), (1, 1, 1.0), (0, 1, 2.0)];
    for k in 0..n {
        let ch = &geom.christoffel[k];
        let b = geom.curvature[k];
        let bm = geom.curvature_mixed[k];
        let db = &geom.curvature_derivative[k];
        for (r, &(al, be, f)) in pairs.iter().enumerate() {
            let row = 3 * k + r;
            // θ: f·½(u_{α|β} + u_{β|α}) − f·b_{αβ} w
            if al == be {
                add_cov(&mut lt, st, ch, row, 1.0, k, al, be);
            } else {
                add_cov(&mut lt, st, ch, row, 1.0, k, al, be);
                add_cov(&mut lt, st, ch, row, 1.0, k, be, al);
            }
            lt.add_point(row, -f * b[al][be], k, 2);
            // κ
            lk.add_op(row, -f, st.second(al, be), k, 2);
            for la in 0..2 {
                lk.add_op(row, f * ch[la][al][be], &st.d[la], k, 2);
            }
            for la in 0..2 {
                lk.add_point(row, -f * db[la][al][be], k, la);
            }
            for la in 0..2 {
                add_cov(&mut lk, st, ch, row, -f * bm[al][la], k, la, be);
                add_cov(&mut lk, st, ch, row, -f * bm[be][la], k, la, al);
            }
            let c = bm[al][0] * b[0][be] + bm[al][1] * b[1][be];
            lk.add_point(row, f * c, k, 2);
        }
        for al in 0..2 {
            lp.add_op(2 * k + al, 1.0, &st.d[al], k, 2);
            for be in 0..2 {
                lp.add_point(2 * k + al, bm[al][be], k, be);
            }
        }
    }
    [lt.finish(), lp.finish(), lk.finish()]
}

/// Node-wise shell strains.
#[derive(Clone, Debug)]
pub struct ShellStrains {
    pub theta: TensorField2x2,
    pub phi: VectorField2,
    pub gamma: TensorField2x2,
    pub kappa: TensorField2x2,
}

/// A discretized shell problem.
#[derive(Clone, Debug)]
pub struct Shell {
    pub disc: Discretization,
    pub geometry: SurfaceGeometry,
    pub material: ShellMaterial,
    pub loads: PlateLoads,
}

impl Shell {
    /// Builds the shell over the geometry's grid. Loads are the
    /// components `P^α`, `P` on the parameter grid.
    pub fn new(geometry: SurfaceGeometry, material: ShellMaterial, loads: PlateLoads) -> Result<Self> {
        let grid = geometry.grid.clone();
        loads.validate(&grid)?;
        let dofs = DofMap::new(&grid);
        let stencils = StencilSet::new(&grid);
        let [l_theta, l_phi, l_kappa] = shell_operators(&geometry, &dofs, &stencils);
        let weights = geometry.area_weights();
        let load = loads.vector(&grid, &dofs, &weights);
        let disc = Discretization {
            c_mem: material.membrane.clone(),
            c_bend: material.bending.clone(),
            load_scale: loads.scale(),
            grid,
            dofs,
            stencils,
            l_theta,
            l_phi,
            l_kappa,
            weights,
            load,
        };
        Ok(Self { disc, geometry, material, loads })
    }

    pub fn state(&self, u: &DisplacementField) -> Result<Vec<f64>> {
        u.to_dofs(&self.disc.dofs)
    }

    pub fn strains(&self, u: &DisplacementField) -> Result<ShellStrains> {
        let s = self.disc.strains(&self.state(u)?);
        Ok(ShellStrains {
            theta: self.disc.symmetric_field(&s.theta, true)?,
            phi: self.disc.vector_field(&s.phi)?,
            gamma: self.disc.symmetric_field(&s.gamma, true)?,
            kappa: self.disc.symmetric_field(&s.kappa, true)?,
        })
    }

    pub fn energy(&self, u: &DisplacementField) -> Result<EnergyBreakdown> {
        self.disc.energy(&self.state(u)?)
    }

    pub fn energy_gradient(&self, u: &DisplacementField) -> Result<DisplacementField> {
        let g = self.disc.gradient(&self.state(u)?)?;
        Ok(DisplacementField::from_dofs(&self.disc.dofs, &g))
    }
}
