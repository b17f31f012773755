//! Minimization of the discrete energy and the coercivity probe.
//!
//! The minimizer is a limited-memory BFGS method whose initial inverse
//! Hessian is the factorized linear stiffness, with Armijo backtracking.
//! Near convergence the energy differences fall below roundoff; steps are
//! then accepted on an approximate Wolfe test (gradient decrease with the
//! energy flat to within a few ulps).

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TensorField2x2;
use crate::linalg::{dot, sup_norm, BandedLdl};
use crate::model::{voigt_mul, Discretization};
use crate::plate::DisplacementField;

pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Norm used for the stopping test.
    fn grad_norm(&self, g: &[f64]) -> f64 {
        sup_norm(g)
    }
}

pub trait Preconditioner {
    /// Approximate inverse Hessian applied to `r`.
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

impl Preconditioner for BandedLdl {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.solve(r)
    }
}

impl Objective for Discretization {
    fn dim(&self) -> usize {
        self.ndof()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Discretization::value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Discretization::gradient(self, x)
    }

    /// Nodal residual density `max |g_i| / ω_i`.
    fn grad_norm(&self, g: &[f64]) -> f64 {
        self.density_norm(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinimizeOptions {
    /// Absolute stopping tolerance; `None` means `1e-8 (1 + |J(x₀)|)`.
    pub gtol: Option<f64>,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { gtol: None, max_iter: 5000, memory: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterRecord {
    pub j: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub j: f64,
    pub grad_norm: f64,
    pub gtol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterRecord>,
    pub message: String,
}

const C1: f64 = 1e-4;

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn direction(g: &[f64], pairs: &VecDeque<Pair>, pre: Option<&dyn Preconditioner>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = vec![0.0; pairs.len()];
    for (i, p) in pairs.iter().enumerate().rev() {
        let a = p.rho * dot(&p.s, &q);
        alpha[i] = a;
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= a * yi;
        }
    }
    let mut r = match pre {
        Some(p) => p.apply(&q),
        None => {
            let gamma = pairs.back().map(|p| dot(&p.s, &p.y) / dot(&p.y, &p.y)).unwrap_or(1.0);
            q.iter().map(|v| gamma * v).collect()
        }
    };
    for (i, p) in pairs.iter().enumerate() {
        let b = p.rho * dot(&p.y, &r);
        for (ri, si) in r.iter_mut().zip(&p.s) {
            *ri += (alpha[i] - b) * si;
        }
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

struct Step {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

fn line_search(obj: &dyn Objective, x: &[f64], f: f64, g: &[f64], d: &[f64]) -> Result<Option<Step>> {
    let gd = dot(g, d);
    let mut a = 1.0;
    let noise = 32.0 * f64::EPSILON * f.abs().max(f64::MIN_POSITIVE);
    for _ in 0..60 {
        let xn: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
        let fnew = match obj.value(&xn) {
            Ok(v) if v.is_finite() => v,
            _ => {
                a *= 0.5;
                continue;
            }
        };
        if fnew <= f + C1 * a * gd {
            let gn = obj.gradient(&xn)?;
            return Ok(Some(Step { x: xn, f: fnew, g: gn }));
        }
        if fnew <= f + noise {
            let gn = obj.gradient(&xn)?;
            if dot(&gn, d) <= (2.0 * C1 - 1.0) * gd && dot(&gn, d) >= 0.9 * gd {
                return Ok(Some(Step { x: xn, f: fnew, g: gn }));
            }
        }
        a *= 0.5;
    }
    Ok(None)
}

/// Limited-memory quasi-Newton minimization from `x0`.
pub fn minimize(
    obj: &dyn Objective,
    x0: &[f64],
    pre: Option<&dyn Preconditioner>,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if x0.len() != obj.dim() {
        return Err(Error::Solver(format!("initial state has length {}, expected {}", x0.len(), obj.dim())));
    }
    let mut x = x0.to_vec();
    let mut f = obj.value(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFinite("energy"));
    }
    let mut g = obj.gradient(&x)?;
    let gtol = opts.gtol.unwrap_or(1e-8 * (1.0 + f.abs()));
    let mut gn = obj.grad_norm(&g);
    let mut history = vec![IterRecord { j: f, grad_norm: gn }];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut it = 0;
    let finish = |x, f, gn, it, converged, history, message: &str| MinimizeResult {
        x,
        j: f,
        grad_norm: gn,
        gtol,
        iterations: it,
        converged,
        history,
        message: message.to_string(),
    };
    while it < opts.max_iter {
        if gn <= gtol {
            return Ok(finish(x, f, gn, it, true, history, "converged"));
        }
        let mut d = direction(&g, &pairs, pre);
        if !(dot(&g, &d) < 0.0) {
            pairs.clear();
            d = direction(&g, &pairs, pre);
        }
        let mut step = line_search(obj, &x, f, &g, &d)?;
        if step.is_none() && !pairs.is_empty() {
            pairs.clear();
            d = direction(&g, &pairs, pre);
            step = line_search(obj, &x, f, &g, &d)?;
        }
        let Some(st) = step else {
            log::info!("line search failed at iteration {it}, |g| = {gn:.3e}");
            return Ok(finish(x, f, gn, it, false, history, "line search failed"));
        };
        let s: Vec<f64> = st.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = st.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 && sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == opts.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back(Pair { rho: 1.0 / sy, s, y });
        }
        x = st.x;
        f = st.f;
        g = st.g;
        gn = obj.grad_norm(&g);
        it += 1;
        history.push(IterRecord { j: f, grad_norm: gn });
        log::debug!("iter {it}: J = {f:.12e}, |g| = {gn:.3e}");
    }
    let converged = gn <= gtol;
    let msg = if converged { "converged" } else { "iteration cap reached" };
    Ok(finish(x, f, gn, it, converged, history, msg))
}

/// Starting point for [`solve`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// Solution of the linear model (membrane coupling off).
    #[default]
    Linear,
    Zero,
}

/// Minimizes the energy of a discretized plate or shell, preconditioned by
/// the linear stiffness.
pub fn solve(disc: &Discretization, init: Init, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let h = disc.linear_hessian();
    let ldl = BandedLdl::factor(&h)?;
    let x0 = match init {
        Init::Linear => ldl.solve(&disc.load),
        Init::Zero => vec![0.0; disc.ndof()],
    };
    minimize(disc, &x0, Some(&ldl), opts)
}

/// `J₁(t·d)` for every direction `d` and scale `t`.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeTable {
    pub t: Vec<f64>,
    /// One row per direction.
    pub values: Vec<Vec<f64>>,
    /// Eventually increasing and ending above the start, for every direction.
    pub coercive_along_sample: bool,
}

/// Evaluates the reduced functional
///
/// ```text
/// J₁(u) = G₂(κ(u)) + ½⟨T₀, φ(u)⊗φ(u)⟩ − ⟨T₀:b + P, w⟩ − ⟨P^t, w⟩_{Γt}
/// ```
///
/// along rays `t·d`. On plates `φ = ∇w` and `b = 0`. A sampling
/// diagnostic only: growth along finitely many rays does not prove
/// coercivity.
pub fn coercivity_probe(
    disc: &Discretization,
    curvature: Option<&[[[f64; 2]; 2]]>,
    t0: &TensorField2x2,
    directions: &[DisplacementField],
    t_list: &[f64],
) -> Result<ProbeTable> {
    if t0.shape() != disc.grid.shape() {
        return Err(Error::GridMismatch("T0"));
    }
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Solver("probe scales must be positive and increasing".into()));
    }
    let n = disc.n_nodes();
    let tb: Vec<f64> = (0..n)
        .map(|k| match curvature {
            Some(b) => {
                let m = t0.at(k);
                (0..2).map(|a| (0..2).map(|c| m[a][c] * b[k][a][c]).sum::<f64>()).sum()
            }
            None => 0.0,
        })
        .collect();
    let mut values = Vec::with_capacity(directions.len());
    for d in directions {
        let x = d.to_dofs(&disc.dofs)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::Solver("probe direction vanishes on the free nodes".into()));
        }
        let mut row = Vec::with_capacity(t_list.len());
        for &t in t_list {
            let xt: Vec<f64> = x.iter().map(|v| t * v).collect();
            let s = disc.strains(&xt);
            let mut j = 0.0;
            for k in 0..n {
                let q = [s.kappa[3 * k], s.kappa[3 * k + 1], s.kappa[3 * k + 2]];
                let m = voigt_mul(&disc.c_bend[k], q);
                let p = [s.phi[2 * k], s.phi[2 * k + 1]];
                let tt = t0.at(k);
                let mut quad = 0.0;
                for a in 0..2 {
                    for c in 0..2 {
                        quad += tt[a][c] * p[a] * p[c];
                    }
                }
                j += disc.weights[k] * (0.5 * (q[0] * m[0] + q[1] * m[1] + q[2] * m[2]) + 0.5 * quad);
            }
            let [_, _, w] = disc.dofs.scatter(&xt);
            for k in 0..n {
                j -= disc.weights[k] * tb[k] * w[k];
            }
            for (i, f) in disc.load.iter().enumerate() {
                if i % 3 == 2 {
                    j -= f * xt[i];
                }
            }
            row.push(j);
        }
        values.push(row);
    }
    let coercive = values.iter().all(|r| {
        let m = r.len();
        let tail = &r[m.saturating_sub(3)..];
        tail.windows(2).all(|w| w[1] > w[0]) && r[m - 1] > r[0]
    });
    Ok(ProbeTable { t: t_list.to_vec(), values, coercive_along_sample: coercive })
}
