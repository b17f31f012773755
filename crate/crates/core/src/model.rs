//! The discrete energy shared by plates and shells.
//!
//! A model is described by three sparse operators on the free unknowns
//! `x = (u₁, u₂, w)`:
//!
//! * `Lθ` gives the linear membrane strain in engineering Voigt form
//!   `(θ₁₁, θ₂₂, 2θ₁₂)` at every node,
//! * `Lφ` gives the rotations `(φ₁, φ₂)`,
//! * `Lκ` gives the bending strain `(κ₁₁, κ₂₂, 2κ₁₂)`.
//!
//! The membrane strain is `γ = θ + ½ φ⊗φ` and the energy is
//!
//! ```text
//! J(x) = ½ Σ ω (γᵀ C γ + κᵀ C_b κ) − f·x
//! ```
//!
//! with node weights `ω` (trapezoid times area element) and node-wise 3×3
//! Voigt matrices. Forces are reported with tensorial shear, so
//! `N = C γ` pairs with engineering strains directly.

use nalgebra_sparse::CsrMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DofMap, Grid, LinearOp, StencilSet, TensorField2x2, VectorField2};
use crate::linalg::BandedLdl;

/// Node-wise 3×3 matrix stored row-major.
pub type Voigt = [f64; 9];

#[inline]
pub fn voigt_mul(c: &Voigt, v: [f64; 3]) -> [f64; 3] {
    [
        c[0] * v[0] + c[1] * v[1] + c[2] * v[2],
        c[3] * v[0] + c[4] * v[1] + c[5] * v[2],
        c[6] * v[0] + c[7] * v[1] + c[8] * v[2],
    ]
}

#[inline]
pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn voigt_inverse(c: &Voigt) -> Option<Voigt> {
    let m = nalgebra::Matrix3::from_row_slice(c);
    let inv = m.try_inverse()?;
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = inv[(i, j)];
        }
    }
    Some(out)
}

pub fn voigt_min_eigenvalue(c: &Voigt) -> f64 {
    let m = nalgebra::Matrix3::from_row_slice(c);
    let s = 0.5 * (m + m.transpose());
    s.symmetric_eigenvalues().min()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// Membrane energy `½∫Hγ:γ`.
    pub g1: f64,
    /// Bending energy `½∫hκ:κ`.
    pub g2: f64,
    /// External work.
    pub f1: f64,
    pub j: f64,
}

/// Strains at every node, Voigt layout with engineering shear.
#[derive(Clone, Debug)]
pub struct Strains {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: Grid,
    pub dofs: DofMap,
    pub stencils: StencilSet,
    pub l_theta: LinearOp,
    pub l_phi: LinearOp,
    pub l_kappa: LinearOp,
    /// Quadrature weight per node, including the area element.
    pub weights: Vec<f64>,
    pub c_mem: Vec<Voigt>,
    pub c_bend: Vec<Voigt>,
    /// Load vector on the free unknowns.
    pub load: Vec<f64>,
    /// Sup of all load data, used to scale tolerances.
    pub load_scale: f64,
}

impl Discretization {
    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn ndof(&self) -> usize {
        self.dofs.ndof()
    }

    pub fn strains(&self, x: &[f64]) -> Strains {
        let theta = self.l_theta.apply(x);
        let phi = self.l_phi.apply(x);
        let kappa = self.l_kappa.apply(x);
        let mut gamma = theta.clone();
        for k in 0..self.n_nodes() {
            let (p1, p2) = (phi[2 * k], phi[2 * k + 1]);
            gamma[3 * k] += 0.5 * p1 * p1;
            gamma[3 * k + 1] += 0.5 * p2 * p2;
            gamma[3 * k + 2] += p1 * p2;
        }
        Strains { theta, phi, gamma, kappa }
    }

    /// Membrane forces `N = Cγ` (tensorial components `N₁₁, N₂₂, N₁₂`).
    pub fn membrane_forces(&self, gamma: &[f64]) -> Vec<f64> {
        let mut n = vec![0.0; gamma.len()];
        for k in 0..self.n_nodes() {
            let v = voigt_mul(&self.c_mem[k], [gamma[3 * k], gamma[3 * k + 1], gamma[3 * k + 2]]);
            n[3 * k..3 * k + 3].copy_from_slice(&v);
        }
        n
    }

    pub fn moments(&self, kappa: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; kappa.len()];
        for k in 0..self.n_nodes() {
            let v = voigt_mul(&self.c_bend[k], [kappa[3 * k], kappa[3 * k + 1], kappa[3 * k + 2]]);
            m[3 * k..3 * k + 3].copy_from_slice(&v);
        }
        m
    }

    pub fn energy(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        if x.len() != self.ndof() {
            return Err(Error::GridMismatch("state length"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        let s = self.strains(x);
        let (mut g1, mut g2) = (0.0, 0.0);
        for k in 0..self.n_nodes() {
            let g = [s.gamma[3 * k], s.gamma[3 * k + 1], s.gamma[3 * k + 2]];
            let q = [s.kappa[3 * k], s.kappa[3 * k + 1], s.kappa[3 * k + 2]];
            g1 += self.weights[k] * dot3(g, voigt_mul(&self.c_mem[k], g));
            g2 += self.weights[k] * dot3(q, voigt_mul(&self.c_bend[k], q));
        }
        g1 *= 0.5;
        g2 *= 0.5;
        let f1 = crate::linalg::dot(&self.load, x);
        let j = g1 + g2 - f1;
        if !j.is_finite() {
            return Err(Error::NonFinite("energy"));
        }
        Ok(EnergyBreakdown { g1, g2, f1, j })
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.energy(x)?.j)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ndof() {
            return Err(Error::GridMismatch("state length"));
        }
        let s = self.strains(x);
        let n = self.membrane_forces(&s.gamma);
        let m = self.moments(&s.kappa);
        let nn = self.n_nodes();
        let mut wn = vec![0.0; 3 * nn];
        let mut wm = vec![0.0; 3 * nn];
        let mut wq = vec![0.0; 2 * nn];
        for k in 0..nn {
            let w = self.weights[k];
            for c in 0..3 {
                wn[3 * k + c] = w * n[3 * k + c];
                wm[3 * k + c] = w * m[3 * k + c];
            }
            let (p1, p2) = (s.phi[2 * k], s.phi[2 * k + 1]);
            wq[2 * k] = w * (n[3 * k] * p1 + n[3 * k + 2] * p2);
            wq[2 * k + 1] = w * (n[3 * k + 2] * p1 + n[3 * k + 1] * p2);
        }
        let mut g = self.l_theta.apply_t(&wn);
        for (gi, v) in g.iter_mut().zip(self.l_phi.apply_t(&wq)) {
            *gi += v;
        }
        for (gi, v) in g.iter_mut().zip(self.l_kappa.apply_t(&wm)) {
            *gi += v;
        }
        for (gi, f) in g.iter_mut().zip(&self.load) {
            *gi -= f;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(g)
    }

    fn node_blocks(&self, c: &[Voigt]) -> Vec<Vec<f64>> {
        c.iter().zip(&self.weights).map(|(m, w)| m.iter().map(|v| v * w).collect()).collect()
    }

    /// Hessian of the energy at the zero state (the linear model).
    pub fn linear_hessian(&self) -> CsrMatrix<f64> {
        let a = self.l_theta.gram(3, &self.node_blocks(&self.c_mem));
        let b = self.l_kappa.gram(3, &self.node_blocks(&self.c_bend));
        &a + &b
    }

    /// Bending stiffness `Lκᵀ W C_b Lκ`.
    pub fn bending_stiffness(&self) -> CsrMatrix<f64> {
        self.l_kappa.gram(3, &self.node_blocks(&self.c_bend))
    }

    /// `Lφᵀ W D Lφ` with node-wise 2×2 blocks `D` (row-major).
    pub fn rotation_form(&self, d: &[[f64; 4]]) -> CsrMatrix<f64> {
        let blocks: Vec<Vec<f64>> =
            d.iter().zip(&self.weights).map(|(m, w)| m.iter().map(|v| v * w).collect()).collect();
        self.l_phi.gram(2, &blocks)
    }

    /// Solution of the linear model `H₀ x = f`.
    pub fn linear_solution(&self) -> Result<Vec<f64>> {
        let h = self.linear_hessian();
        let f = BandedLdl::factor(&h)?;
        if f.skipped() > 0 {
            return Err(Error::Singular(format!(
                "linear stiffness has {} zero pivots (no clamped edge?)",
                f.skipped()
            )));
        }
        Ok(f.solve(&self.load))
    }

    /// Weighted sup-norm `max |g_i| / ω_i` of a cotangent vector: the
    /// nodal value of the residual density.
    pub fn density_norm(&self, g: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for (i, v) in g.iter().enumerate() {
            let (k, _) = self.dofs.locate(i);
            m = m.max(v.abs() / self.weights[k]);
        }
        m
    }

    /// Separate density norms over in-plane and transverse unknowns.
    pub fn density_norms_split(&self, g: &[f64]) -> (f64, f64) {
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for (i, v) in g.iter().enumerate() {
            let (k, c) = self.dofs.locate(i);
            let r = v.abs() / self.weights[k];
            if c == 2 {
                b = b.max(r);
            } else {
                a = a.max(r);
            }
        }
        (a, b)
    }

    pub fn symmetric_field(&self, v: &[f64], engineering: bool) -> Result<TensorField2x2> {
        let n = self.n_nodes();
        let s = if engineering { 0.5 } else { 1.0 };
        TensorField2x2::symmetric(
            self.grid.shape(),
            (0..n).map(|k| v[3 * k]).collect(),
            (0..n).map(|k| v[3 * k + 1]).collect(),
            (0..n).map(|k| s * v[3 * k + 2]).collect(),
        )
    }

    pub fn vector_field(&self, v: &[f64]) -> Result<VectorField2> {
        VectorField2::from_interleaved(self.grid.shape(), v)
    }
}
