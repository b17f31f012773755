//! Dual certificate for the discrete plate and shell energies.
//!
//! With a membrane force field `N` and a shift `K`, the energy splits as
//! `F(x) = ½ xᵀ A x` with `A = Lκᵀ W C_b Lκ + K Lφᵀ W Lφ` and the node-wise
//! quadratic of `M = K I − N` in the rotations. The dual functional is
//!
//! ```text
//! J*(v*, z*) = −F*(z* + Q) + G*(z*, N)
//! F*(y)      = ½ bᵀ A⁺ b,            b = Lφᵀ W y
//! G*(z*, N)  = ½ Σ ω z*ᵀ M⁻¹ z*  −  ½ Σ ω Nᵀ C⁻¹ N
//! ```
//!
//! for `v* = (Q, N)`. Feasibility:
//!
//! * A₁, A₂: `Lθᵀ W N + Lφᵀ W Q = f` (in-plane and transverse rows),
//! * A₃: `M` positive definite at every node,
//! * A₄: `C − B ≻ 0` with `C = blockdiag(ω M⁻¹)` and `B = W Lφ A⁺ Lφᵀ W`.
//!
//! Everything works on a [`Discretization`], so plates and shells share it.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{LinearOp, TensorField2x2, VectorField2};
use crate::linalg::{dot, lanczos_smallest, pcg, BandedLdl};
use crate::loads::min_norm_div_solve;
use crate::model::{dot3, voigt_inverse, voigt_mul, Discretization, Voigt};

/// Largest node count for which A₄ is checked by dense eigenvalues.
pub const DENSE_A4_NODES: usize = 33 * 33;
const A4_TOL: f64 = 1e-8;
const CG_TOL: f64 = 1e-12;

/// `M = K I − N` at every node.
#[derive(Clone, Debug)]
pub struct ShiftedMembrane {
    /// Tensorial `(N₁₁, N₂₂, N₁₂)` per node.
    pub n: Vec<[f64; 3]>,
    pub k: f64,
    /// Row-major 2×2 blocks.
    pub m: Vec<[f64; 4]>,
    pub m_inv: Vec<[f64; 4]>,
    pub lambda_min: f64,
}

impl ShiftedMembrane {
    pub fn in_a3(&self) -> bool {
        self.lambda_min > 0.0
    }

    /// Largest `‖M M⁻¹ − I‖∞` over the nodes.
    pub fn inverse_error(&self) -> f64 {
        self.m
            .iter()
            .zip(&self.m_inv)
            .map(|(a, b)| {
                let p = [
                    a[0] * b[0] + a[1] * b[2] - 1.0,
                    a[0] * b[1] + a[1] * b[3],
                    a[2] * b[0] + a[3] * b[2],
                    a[2] * b[1] + a[3] * b[3] - 1.0,
                ];
                p.iter().fold(0.0f64, |s, v| s.max(v.abs()))
            })
            .fold(0.0, f64::max)
    }
}

/// The automatic shift `1.05·max(0, max λ_max(N)) + 1e−8`.
pub fn auto_shift(n: &[[f64; 3]]) -> f64 {
    let top = n.iter().map(|v| crate::grid::sym2_eigenvalues(v[0], v[2], v[1]).1).fold(0.0f64, f64::max);
    1.05 * top + 1e-8
}

/// Builds `M = K I − N` node-wise from tensorial Voigt forces.
pub fn shift_voigt(n: Vec<[f64; 3]>, k: Option<f64>) -> Result<ShiftedMembrane> {
    if n.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("membrane force"));
    }
    let k = match k {
        Some(k) if !(k > 0.0) || !k.is_finite() => {
            return Err(Error::Dual(format!("shift K must be positive, got {k}")));
        }
        Some(k) => k,
        None => auto_shift(&n),
    };
    let mut m = Vec::with_capacity(n.len());
    let mut m_inv = Vec::with_capacity(n.len());
    let mut lambda_min = f64::INFINITY;
    for (node, v) in n.iter().enumerate() {
        let (a, b, d) = (k - v[0], -v[2], k - v[1]);
        let det = a * d - b * b;
        let scale = a.abs().max(d.abs()).max(b.abs());
        if det.abs() <= 1e-14 * scale * scale || det == 0.0 {
            return Err(Error::Dual(format!("shifted membrane tensor is singular at node {node} (K = {k} too small)")));
        }
        m.push([a, b, b, d]);
        m_inv.push([d / det, -b / det, -b / det, a / det]);
        lambda_min = lambda_min.min(crate::grid::sym2_eigenvalues(a, b, d).0);
    }
    Ok(ShiftedMembrane { n, k, m, m_inv, lambda_min })
}

/// [`shift_voigt`] for a symmetric tensor field.
pub fn shift_membrane(n: &TensorField2x2, k: Option<f64>) -> Result<ShiftedMembrane> {
    if !n.is_symmetric() && n.asymmetry() > 0.0 {
        return Err(Error::Dual("membrane force must be symmetric".into()));
    }
    let v = (0..n.xx.len()).map(|i| [n.xx[i], n.yy[i], n.xy[i]]).collect();
    shift_voigt(v, k)
}

fn to_nodes(n: &[f64]) -> Vec<[f64; 3]> {
    n.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// How the smallest eigenvalue of `C − B` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum A4Method {
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// Dual functionals for one membrane field `N` and shift `K`.
pub struct DualProblem<'a> {
    pub disc: &'a Discretization,
    pub shift: ShiftedMembrane,
    a: BandedLdl,
    c_inv: Vec<Voigt>,
}

impl<'a> DualProblem<'a> {
    /// `n` holds tensorial `(N₁₁, N₂₂, N₁₂)` per node.
    pub fn new(disc: &'a Discretization, n: &[f64], k: Option<f64>) -> Result<Self> {
        if n.len() != 3 * disc.n_nodes() {
            return Err(Error::GridMismatch("membrane force"));
        }
        let shift = shift_voigt(to_nodes(n), k)?;
        let eye = vec![[1.0, 0.0, 0.0, 1.0]; disc.n_nodes()];
        let mut a = disc.bending_stiffness();
        let rot = disc.rotation_form(&eye);
        a = &a + &(rot * shift.k);
        let a = BandedLdl::factor(&a)?;
        let c_inv = disc
            .c_mem
            .iter()
            .map(|c| voigt_inverse(c).ok_or_else(|| Error::Material("membrane stiffness is singular".into())))
            .collect::<Result<_>>()?;
        Ok(Self { disc, shift, a, c_inv })
    }

    pub fn k(&self) -> f64 {
        self.shift.k
    }

    fn zlen(&self) -> usize {
        2 * self.disc.n_nodes()
    }

    fn weighted(&self, y: &[f64]) -> Vec<f64> {
        let w = &self.disc.weights;
        y.iter().enumerate().map(|(i, v)| v * w[i / 2]).collect()
    }

    /// `F*(z* + Q)` and the maximizing state.
    pub fn conjugate_f(&self, z: &[f64], q: &[f64]) -> Result<(f64, Vec<f64>)> {
        if z.len() != self.zlen() || q.len() != self.zlen() {
            return Err(Error::GridMismatch("dual rotation field"));
        }
        let y: Vec<f64> = z.iter().zip(q).map(|(a, b)| a + b).collect();
        let b = self.disc.l_phi.apply_t(&self.weighted(&y));
        let x = self.a.solve(&b);
        Ok((0.5 * dot(&b, &x), x))
    }

    /// `F(x) = ½ xᵀ A x`.
    pub fn primal_f(&self, x: &[f64]) -> f64 {
        let s = self.disc.strains(x);
        let mut f = 0.0;
        for k in 0..self.disc.n_nodes() {
            let q = [s.kappa[3 * k], s.kappa[3 * k + 1], s.kappa[3 * k + 2]];
            let p = (s.phi[2 * k], s.phi[2 * k + 1]);
            f += self.disc.weights[k] * (dot3(q, voigt_mul(&self.disc.c_bend[k], q)) + self.shift.k * (p.0 * p.0 + p.1 * p.1));
        }
        0.5 * f
    }

    /// `½ Σ ω Nᵀ C⁻¹ N`.
    pub fn complementary_membrane(&self) -> f64 {
        let mut s = 0.0;
        for (k, n) in self.shift.n.iter().enumerate() {
            s += self.disc.weights[k] * dot3(*n, voigt_mul(&self.c_inv[k], *n));
        }
        0.5 * s
    }

    /// `G*(z*, N)`; refuses outside A₃.
    pub fn conjugate_g(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.zlen() {
            return Err(Error::GridMismatch("dual rotation field"));
        }
        if !self.shift.in_a3() {
            return Err(Error::Dual(format!(
                "G* is only defined on A3 (smallest eigenvalue of K - N is {:.3e})",
                self.shift.lambda_min
            )));
        }
        let mut s = 0.0;
        for (k, mi) in self.shift.m_inv.iter().enumerate() {
            let (a, b) = (z[2 * k], z[2 * k + 1]);
            s += self.disc.weights[k] * (a * (mi[0] * a + mi[1] * b) + b * (mi[2] * a + mi[3] * b));
        }
        Ok(0.5 * s - self.complementary_membrane())
    }

    /// `J*(v*, z*) = −F*(z* + Q) + G*(z*, N)`.
    pub fn j_star(&self, z: &[f64], q: &[f64]) -> Result<f64> {
        Ok(self.conjugate_g(z)? - self.conjugate_f(z, q)?.0)
    }

    fn apply_c(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (k, mi) in self.shift.m_inv.iter().enumerate() {
            let w = self.disc.weights[k];
            out[2 * k] = w * (mi[0] * z[2 * k] + mi[1] * z[2 * k + 1]);
            out[2 * k + 1] = w * (mi[2] * z[2 * k] + mi[3] * z[2 * k + 1]);
        }
        out
    }

    fn apply_b(&self, y: &[f64]) -> Vec<f64> {
        let b = self.disc.l_phi.apply_t(&self.weighted(y));
        let x = self.a.solve(&b);
        self.weighted(&self.disc.l_phi.apply(&x))
    }

    /// `J̃*(v*) = inf_z J*(v*, z*)` and the minimizing `z*`.
    ///
    /// Requires A₃ and A₄ (`lambda_min_a4 > 0`).
    pub fn dual_value(&self, q: &[f64], lambda_min_a4: f64) -> Result<(f64, Vec<f64>)> {
        if q.len() != self.zlen() {
            return Err(Error::GridMismatch("dual rotation field"));
        }
        if !self.shift.in_a3() || !(lambda_min_a4 > 0.0) {
            return Err(Error::Dual("dual value unbounded below / not certified".into()));
        }
        let rhs = self.apply_b(q);
        let pre = |r: &[f64]| {
            let mut out = vec![0.0; r.len()];
            for (k, m) in self.shift.m.iter().enumerate() {
                let w = self.disc.weights[k];
                out[2 * k] = (m[0] * r[2 * k] + m[1] * r[2 * k + 1]) / w;
                out[2 * k + 1] = (m[2] * r[2 * k] + m[3] * r[2 * k + 1]) / w;
            }
            out
        };
        let apply = |z: &[f64]| {
            let c = self.apply_c(z);
            let b = self.apply_b(z);
            c.iter().zip(&b).map(|(a, b)| a - b).collect::<Vec<_>>()
        };
        let z = pcg(apply, &rhs, pre, CG_TOL, 10 * self.zlen())
            .map_err(|e| match e {
                Error::Singular(_) => Error::Dual("dual value unbounded below / not certified".into()),
                other => other,
            })?
            .x;
        Ok((self.j_star(&z, q)?, z))
    }

    /// Applies the symmetric form `S = M⁻¹ − W^{½} Lφ A⁺ Lφᵀ W^{½}`.
    fn apply_s(&self, v: &[f64]) -> Vec<f64> {
        let w = &self.disc.weights;
        let sv: Vec<f64> = v.iter().enumerate().map(|(i, x)| x * w[i / 2].sqrt()).collect();
        let b = self.disc.l_phi.apply_t(&sv);
        let x = self.a.solve(&b);
        let lx = self.disc.l_phi.apply(&x);
        let mut out = vec![0.0; v.len()];
        for (k, mi) in self.shift.m_inv.iter().enumerate() {
            let s = w[k].sqrt();
            out[2 * k] = mi[0] * v[2 * k] + mi[1] * v[2 * k + 1] - s * lx[2 * k];
            out[2 * k + 1] = mi[2] * v[2 * k] + mi[3] * v[2 * k + 1] - s * lx[2 * k + 1];
        }
        out
    }

    fn a4_dense(&self) -> f64 {
        let n = self.zlen();
        let w = &self.disc.weights;
        let active: Vec<usize> = self.a.active().iter().enumerate().filter(|(_, a)| **a).map(|(i, _)| i).collect();
        let g = self.disc.l_phi.csr();
        let mut x = DMatrix::<f64>::zeros(active.len(), n);
        let mut col = vec![0.0; self.disc.ndof()];
        for c in 0..n {
            let row = g.row(c);
            if row.nnz() == 0 {
                continue;
            }
            col.iter_mut().for_each(|v| *v = 0.0);
            let s = w[c / 2].sqrt();
            for (j, v) in row.col_indices().iter().zip(row.values()) {
                col[*j] += s * v;
            }
            let h = self.a.half_solve(&col);
            for (i, &a) in active.iter().enumerate() {
                x[(i, c)] = h[a];
            }
        }
        let mut s = -(x.transpose() * &x);
        for (k, mi) in self.shift.m_inv.iter().enumerate() {
            s[(2 * k, 2 * k)] += mi[0];
            s[(2 * k, 2 * k + 1)] += mi[1];
            s[(2 * k + 1, 2 * k)] += mi[2];
            s[(2 * k + 1, 2 * k + 1)] += mi[3];
        }
        crate::linalg::dense_smallest(s)
    }

    /// Smallest eigenvalue of `C − B` relative to the quadrature weights.
    pub fn lambda_min_a4(&self, method: A4Method) -> Result<f64> {
        if !self.shift.in_a3() {
            return Err(Error::Dual("A4 is only defined on A3".into()));
        }
        let dense = match method {
            A4Method::Dense => true,
            A4Method::Iterative => false,
            A4Method::Auto => self.disc.n_nodes() <= DENSE_A4_NODES,
        };
        if dense {
            return Ok(self.a4_dense());
        }
        let out = lanczos_smallest(self.zlen(), |v| self.apply_s(v), A4_TOL, 300, 200, 0x5eed)?;
        Ok(out.value)
    }

    /// `Ĵ*(z*) / ‖z*‖²_W`, the Rayleigh quotient whose infimum is the A₄
    /// eigenvalue.
    pub fn rayleigh_a4(&self, z: &[f64]) -> Result<f64> {
        let zero = vec![0.0; z.len()];
        let (f, _) = self.conjugate_f(z, &zero)?;
        let mut c = 0.0;
        let mut nz = 0.0;
        for (k, mi) in self.shift.m_inv.iter().enumerate() {
            let (a, b) = (z[2 * k], z[2 * k + 1]);
            let w = self.disc.weights[k];
            c += w * (a * (mi[0] * a + mi[1] * b) + b * (mi[2] * a + mi[3] * b));
            nz += w * (a * a + b * b);
        }
        Ok((c - 2.0 * f) / nz)
    }
}

/// Equilibrium residual `Lθᵀ W N + Lφᵀ W Q − f`.
pub fn equilibrium_residual(disc: &Discretization, n: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    if n.len() != 3 * disc.n_nodes() || q.len() != 2 * disc.n_nodes() {
        return Err(Error::GridMismatch("dual fields"));
    }
    let w = &disc.weights;
    let wn: Vec<f64> = n.iter().enumerate().map(|(i, v)| v * w[i / 3]).collect();
    let wq: Vec<f64> = q.iter().enumerate().map(|(i, v)| v * w[i / 2]).collect();
    let mut r = disc.l_theta.apply_t(&wn);
    for ((ri, a), f) in r.iter_mut().zip(disc.l_phi.apply_t(&wq)).zip(&disc.load) {
        *ri += a - f;
    }
    Ok(r)
}

/// Sup-norm residual densities of the in-plane (A₁) and transverse (A₂)
/// equilibrium equations.
pub fn check_a1_a2(disc: &Discretization, n: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    let r = equilibrium_residual(disc, n, q)?;
    Ok(disc.density_norms_split(&r))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    CertifiedGlobal,
    NotCertified(Vec<String>),
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::CertifiedGlobal => write!(f, "certified-global"),
            Verdict::NotCertified(why) => write!(f, "not-certified: {}", why.join(", ")),
        }
    }
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::CertifiedGlobal)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertifyOptions {
    /// Shift override; the automatic rule when absent.
    pub k: Option<f64>,
    /// Feasibility tolerance relative to the load scale.
    pub rel_tol: f64,
    /// Gap tolerance relative to `1 + |J|`.
    pub gap_rel_tol: f64,
    pub a4: A4Method,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { k: None, rel_tol: 1e-6, gap_rel_tol: 1e-6, a4: A4Method::Auto }
    }
}

/// A dual point with its membership diagnostics.
#[derive(Clone, Debug)]
pub struct DualCertificate {
    /// Tensorial `(N₁₁, N₂₂, N₁₂)` per node.
    pub n: Vec<f64>,
    pub q: Vec<f64>,
    pub zstar: Vec<f64>,
    pub k: f64,
    pub residual_a1: f64,
    pub residual_a2: f64,
    pub tol: f64,
    pub in_a3: bool,
    pub lambda_min_a3: f64,
    /// `None` outside A₃.
    pub lambda_min_a4: Option<f64>,
    /// `J*(v*, z*)` at the stored `z*`; finite only on A₃.
    pub j_star: Option<f64>,
    /// `J̃*(v*)`; only when A₃ and A₄ hold.
    pub dual_value: Option<f64>,
    /// Primal energy at the state the certificate was built from.
    pub primal: Option<f64>,
    pub gap: Option<f64>,
    pub gap_tol: f64,
    pub verdict: Verdict,
}

impl DualCertificate {
    pub fn n_field(&self, disc: &Discretization) -> Result<TensorField2x2> {
        disc.symmetric_field(&self.n, false)
    }

    pub fn q_field(&self, disc: &Discretization) -> Result<VectorField2> {
        disc.vector_field(&self.q)
    }

    pub fn z_field(&self, disc: &Discretization) -> Result<VectorField2> {
        disc.vector_field(&self.zstar)
    }

    /// Failing conditions in the order A3, A4, A1, A2, gap.
    fn failures(&self) -> Vec<String> {
        let mut out = vec![];
        if !self.in_a3 {
            out.push("A3".to_string());
        }
        if !matches!(self.lambda_min_a4, Some(l) if l > 0.0) {
            out.push("A4".to_string());
        }
        if !(self.residual_a1 <= self.tol) {
            out.push("A1".to_string());
        }
        if !(self.residual_a2 <= self.tol) {
            out.push("A2".to_string());
        }
        let mut why: Vec<String> = if out.is_empty() { vec![] } else { vec![format!("{} failed", out.join(", "))] };
        if let Some(g) = self.gap {
            if !(g.abs() <= self.gap_tol) {
                why.push(format!("gap {g:.3e} above tolerance"));
            }
        }
        why
    }

    fn finish(mut self) -> Self {
        let why = self.failures();
        self.verdict = if why.is_empty() { Verdict::CertifiedGlobal } else { Verdict::NotCertified(why) };
        self
    }
}

/// Evaluates a given dual point `(Q, N)` with its minimizing `z*`.
///
/// `x` is an optional primal state for the gap.
pub fn evaluate_dual_point(
    disc: &Discretization,
    n: &[f64],
    q: &[f64],
    x: Option<&[f64]>,
    opts: &CertifyOptions,
) -> Result<DualCertificate> {
    let dp = DualProblem::new(disc, n, opts.k)?;
    let (residual_a1, residual_a2) = check_a1_a2(disc, n, q)?;
    let in_a3 = dp.shift.in_a3();
    let lambda_min_a4 = if in_a3 { Some(dp.lambda_min_a4(opts.a4)?) } else { None };
    let (mut dual_value, mut zstar, mut j_star) = (None, vec![0.0; q.len()], None);
    if let Some(l) = lambda_min_a4 {
        if l > 0.0 {
            let (v, z) = dp.dual_value(q, l)?;
            dual_value = Some(v);
            j_star = Some(v);
            zstar = z;
        }
    }
    let primal = x.map(|x| disc.value(x)).transpose()?;
    let gap = match (primal, dual_value) {
        (Some(p), Some(d)) => Some(p - d),
        _ => None,
    };
    let scale = 1.0 + primal.map_or(0.0, f64::abs);
    Ok(DualCertificate {
        n: n.to_vec(),
        q: q.to_vec(),
        zstar,
        k: dp.k(),
        residual_a1,
        residual_a2,
        tol: opts.rel_tol * disc.load_scale,
        in_a3,
        lambda_min_a3: dp.shift.lambda_min,
        lambda_min_a4,
        j_star,
        dual_value,
        primal,
        gap,
        gap_tol: opts.gap_rel_tol * scale,
        verdict: Verdict::CertifiedGlobal,
    }
    .finish())
}

/// `z₀* = (K − N₀) φ(x₀)` node-wise.
pub fn stationary_z(shift: &ShiftedMembrane, phi: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; phi.len()];
    for (k, m) in shift.m.iter().enumerate() {
        z[2 * k] = m[0] * phi[2 * k] + m[1] * phi[2 * k + 1];
        z[2 * k + 1] = m[2] * phi[2 * k] + m[3] * phi[2 * k + 1];
    }
    z
}

/// Builds the dual point attached to a computed minimizer `x0`.
///
/// `N₀ = Cγ(x₀)`, `z₀* = (K − N₀) φ(x₀)`, and `Q₀` is the minimal-norm
/// solution of `Lφᵀ W Q₀ = A x₀ − Lφᵀ W z₀*`. Only clamped boundaries are
/// supported: traction data would enter `F` as well.
pub fn extract_certificate(disc: &Discretization, x0: &[f64], opts: &CertifyOptions) -> Result<DualCertificate> {
    if !disc.grid.spec().is_fully_clamped() {
        return Err(Error::Dual("the dual certificate requires a fully clamped boundary".into()));
    }
    if x0.len() != disc.ndof() {
        return Err(Error::GridMismatch("state length"));
    }
    let s = disc.strains(x0);
    let n0 = disc.membrane_forces(&s.gamma);
    let dp = DualProblem::new(disc, &n0, opts.k)?;
    let z0 = stationary_z(&dp.shift, &s.phi);

    // A x0 − Lφᵀ W z0
    let h = {
        let mut a = disc.bending_stiffness();
        let eye = vec![[1.0, 0.0, 0.0, 1.0]; disc.n_nodes()];
        a = &a + &(disc.rotation_form(&eye) * dp.k());
        a
    };
    let mut rhs = crate::linalg::csr_apply(&h, x0);
    let wz = dp.weighted(&z0);
    for (r, v) in rhs.iter_mut().zip(disc.l_phi.apply_t(&wz)) {
        *r -= v;
    }
    let w2: Vec<f64> = (0..2 * disc.n_nodes()).map(|i| disc.weights[i / 2]).collect();
    let q0 = min_norm_div_solve(&disc.l_phi, &w2, &w2, &rhs)?.x;

    let (residual_a1, residual_a2) = check_a1_a2(disc, &n0, &q0)?;
    let in_a3 = dp.shift.in_a3();
    let lambda_min_a4 = if in_a3 { Some(dp.lambda_min_a4(opts.a4)?) } else { None };
    let j_star = if in_a3 { Some(dp.j_star(&z0, &q0)?) } else { None };
    let dual_value = match lambda_min_a4 {
        Some(l) if l > 0.0 => Some(dp.dual_value(&q0, l)?.0),
        _ => None,
    };
    let primal = disc.value(x0)?;
    let gap = j_star.map(|d| primal - d);
    Ok(DualCertificate {
        n: n0,
        q: q0,
        zstar: z0,
        k: dp.k(),
        residual_a1,
        residual_a2,
        tol: opts.rel_tol * disc.load_scale,
        in_a3,
        lambda_min_a3: dp.shift.lambda_min,
        lambda_min_a4,
        j_star,
        dual_value,
        primal: Some(primal),
        gap,
        gap_tol: opts.gap_rel_tol * (1.0 + primal.abs()),
        verdict: Verdict::CertifiedGlobal,
    }
    .finish())
}

/// `J(x) − J*(v₀*, z₀*)` for the certificate's dual point.
pub fn duality_gap(disc: &Discretization, x: &[f64], cert: &DualCertificate) -> Result<f64> {
    let d = cert.j_star.ok_or_else(|| Error::Dual("certificate has no dual value outside A3".into()))?;
    Ok(disc.value(x)? - d)
}

/// Minimal-norm correction `(δN, δQ)` with `Lθᵀ W δN + Lφᵀ W δQ = r`.
fn equilibrium_correction(disc: &Discretization, stacked: &LinearOp, r: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = disc.n_nodes();
    let mut p = Vec::with_capacity(5 * nn);
    let mut m = Vec::with_capacity(5 * nn);
    for i in 0..3 * nn {
        let w = disc.weights[i / 3];
        p.push(w);
        m.push(if i % 3 == 2 { 2.0 * w } else { w });
    }
    for i in 0..2 * nn {
        let w = disc.weights[i / 2];
        p.push(w);
        m.push(w);
    }
    let sol = min_norm_div_solve(stacked, &p, &m, r)?;
    let (n, q) = sol.x.split_at(3 * nn);
    Ok((n.to_vec(), q.to_vec()))
}

/// A random point of A₁ ∩ A₂ ∩ A₃ ∩ A₄.
#[derive(Clone, Debug)]
pub struct FeasibleDual {
    pub n: Vec<f64>,
    pub q: Vec<f64>,
    pub k: f64,
    pub lambda_min_a4: f64,
    pub dual_value: f64,
}

/// Samples feasible dual points by projection.
///
/// A smooth random `(N, Q)` is projected onto the equilibrium constraints
/// by a minimal-norm correction; its homogeneous part is halved until A₄
/// holds.
pub fn sample_feasible_dual(disc: &Discretization, rng: &mut impl Rng, amplitude: f64) -> Result<FeasibleDual> {
    let nn = disc.n_nodes();
    let stacked = LinearOp::vstack(&disc.l_theta, &disc.l_phi);
    let zero_n = vec![0.0; 3 * nn];
    let zero_q = vec![0.0; 2 * nn];
    let r0: Vec<f64> = equilibrium_residual(disc, &zero_n, &zero_q)?.iter().map(|v| -v).collect();
    let (pn, pq) = equilibrium_correction(disc, &stacked, &r0)?;

    let shape = disc.grid.shape();
    let mut field = |comps: usize| -> Vec<f64> {
        let modes: Vec<(f64, f64, f64, f64, f64)> = (0..comps * 4)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.0..6.3),
                    rng.gen_range(0.0..6.3),
                )
            })
            .collect();
        let mut out = vec![0.0; comps * nn];
        for k in 0..nn {
            let (x, y) = shape.coords(k);
            for c in 0..comps {
                out[comps * k + c] = modes[4 * c..4 * c + 4]
                    .iter()
                    .map(|(a, fx, fy, px, py)| a * (fx * x + px).sin() * (fy * y + py).sin())
                    .sum();
            }
        }
        out
    };
    let mut hn = field(3);
    let mut hq = field(2);
    let r: Vec<f64> = equilibrium_residual(disc, &hn, &hq)?
        .iter()
        .zip(&disc.load)
        .map(|(v, f)| -(v + f))
        .collect();
    let (cn, cq) = equilibrium_correction(disc, &stacked, &r)?;
    hn.iter_mut().zip(&cn).for_each(|(a, b)| *a += b);
    hq.iter_mut().zip(&cq).for_each(|(a, b)| *a += b);

    let mut s = amplitude;
    for _ in 0..60 {
        let n: Vec<f64> = pn.iter().zip(&hn).map(|(a, b)| a + s * b).collect();
        let q: Vec<f64> = pq.iter().zip(&hq).map(|(a, b)| a + s * b).collect();
        let dp = DualProblem::new(disc, &n, None)?;
        let l = dp.lambda_min_a4(A4Method::Auto)?;
        if l > 0.0 {
            let (v, _) = dp.dual_value(&q, l)?;
            return Ok(FeasibleDual { k: dp.k(), n, q, lambda_min_a4: l, dual_value: v });
        }
        s *= 0.5;
    }
    Err(Error::Dual("no A4-feasible scaling of the sampled dual point".into()))
}

/// Uniform biaxial force `N = −a I` at every node.
pub fn compressive_membrane(disc: &Discretization, a: f64) -> Vec<f64> {
    (0..disc.n_nodes()).flat_map(|_| [-a, -a, 0.0]).collect()
}

/// The minimal-norm `Q` with `Lφᵀ W Q = f − Lθᵀ W N` on the transverse rows.
pub fn transverse_balance(disc: &Discretization, n: &[f64]) -> Result<Vec<f64>> {
    let r = equilibrium_residual(disc, n, &vec![0.0; 2 * disc.n_nodes()])?;
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    let w2: Vec<f64> = (0..2 * disc.n_nodes()).map(|i| disc.weights[i / 2]).collect();
    Ok(min_norm_div_solve(&disc.l_phi, &w2, &w2, &rhs)?.x)
}
