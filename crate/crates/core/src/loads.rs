//! Load-balancing tensor fields.
//!
//! * [`build_t_tilde`]: cumulative integrals of the in-plane loads, shifted
//!   to be positive definite.
//! * [`build_t0_plate`], [`build_t0_shell`]: the least-norm field whose weak
//!   divergence balances the in-plane loads and tractions.
//! * [`min_norm_div_solve`]: the minimal-norm kernel behind both.

use crate::error::{Error, Result};
use crate::grid::{DofMap, EdgeCondition, Grid, LinearOp, OpBuilder, ScalarField, StencilSet, TensorField2x2};
use crate::linalg::{pcg, sup_norm};
use crate::plate::PlateLoads;
use crate::shell::SurfaceGeometry;

/// Relative residual of the iterative solves.
pub const CG_TOL: f64 = 1e-10;

/// `T = T̃ + C δ` with `T̃₁₁ = −∫P₁ dx`, `T̃₂₂ = −∫P₂ dy` (trapezoid rule
/// along grid lines, starting at `x₀` and `y₀`).
///
/// Without an explicit shift, `C` is the largest node-wise spectral radius
/// of `T̃` plus one, so every eigenvalue of `T` is at least one.
pub fn build_t_tilde(grid: &Grid, p1: &ScalarField, p2: &ScalarField, c: Option<f64>) -> Result<TensorField2x2> {
    let s = grid.shape();
    if p1.shape() != s || p2.shape() != s {
        return Err(Error::GridMismatch("load field"));
    }
    if !p1.is_finite() || !p2.is_finite() {
        return Err(Error::NonFinite("loads"));
    }
    let n = s.len();
    let mut t11 = vec![0.0; n];
    let mut t22 = vec![0.0; n];
    let (hx, hy) = (s.hx(), s.hy());
    for j in 0..s.ny {
        for i in 1..s.nx {
            let (a, b) = (s.index(i - 1, j), s.index(i, j));
            t11[b] = t11[a] - 0.5 * hx * (p1.values[a] + p1.values[b]);
        }
    }
    for i in 0..s.nx {
        for j in 1..s.ny {
            let (a, b) = (s.index(i, j - 1), s.index(i, j));
            t22[b] = t22[a] - 0.5 * hy * (p2.values[a] + p2.values[b]);
        }
    }
    let shift = match c {
        Some(c) => {
            if !c.is_finite() {
                return Err(Error::NonFinite("shift"));
            }
            c
        }
        None => t11.iter().zip(&t22).fold(0.0f64, |m, (a, b)| m.max(a.abs()).max(b.abs())) + 1.0,
    };
    for v in t11.iter_mut().chain(t22.iter_mut()) {
        *v += shift;
    }
    TensorField2x2::symmetric(s, t11, t22, vec![0.0; n])
}

/// Outcome of a minimal-norm solve.
#[derive(Clone, Debug)]
pub struct MinNormSolution {
    /// The field `X`.
    pub x: Vec<f64>,
    /// The multiplier `y` with `X = M⁻¹ P L y`.
    pub multiplier: Vec<f64>,
    /// `‖Lᵀ P X − r‖∞` over the constrained unknowns.
    pub residual: f64,
    pub iterations: usize,
}

/// Minimizes `½ Xᵀ M X` subject to `Lᵀ P X = r`.
///
/// `M` and `P` are diagonal (one entry per row of `L`). Unknowns whose
/// column of `L` is empty carry no constraint; their entries of `r` must
/// vanish. The multiplier solves `Lᵀ P M⁻¹ P L y = r` by Jacobi-
/// preconditioned conjugate gradients.
pub fn min_norm_div_solve(op: &LinearOp, p: &[f64], m: &[f64], rhs: &[f64]) -> Result<MinNormSolution> {
    let nr = op.nrows();
    let nc = op.ncols();
    if p.len() != nr || m.len() != nr || rhs.len() != nc {
        return Err(Error::GridMismatch("minimal-norm operator sizes"));
    }
    let mut diag = vec![0.0; nc];
    let mut scale = vec![0.0; nr];
    for i in 0..nr {
        if m[i] <= 0.0 {
            return Err(Error::Singular(format!("non-positive norm weight at row {i}")));
        }
        scale[i] = p[i] * p[i] / m[i];
    }
    for (i, j, v) in op.csr().triplet_iter() {
        diag[j] += v * v * scale[i];
    }
    let active: Vec<bool> = diag.iter().map(|d| *d > 0.0).collect();
    let rmax = sup_norm(rhs);
    for j in 0..nc {
        if !active[j] && rhs[j].abs() > 1e-12 * rmax.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(format!("constraint {j} has no support but nonzero right-hand side")));
        }
    }
    let b: Vec<f64> = rhs.iter().zip(&active).map(|(r, a)| if *a { *r } else { 0.0 }).collect();
    let apply = |y: &[f64]| {
        let ly = op.apply(y);
        let s: Vec<f64> = ly.iter().zip(&scale).map(|(a, b)| a * b).collect();
        let mut out = op.apply_t(&s);
        for (o, a) in out.iter_mut().zip(&active) {
            if !a {
                *o = 0.0;
            }
        }
        out
    };
    let pre = |r: &[f64]| r.iter().zip(&diag).map(|(v, d)| if *d > 0.0 { v / d } else { 0.0 }).collect::<Vec<_>>();
    let cg = pcg(apply, &b, pre, CG_TOL, 10 * nc.max(1))?;
    let ly = op.apply(&cg.x);
    let x: Vec<f64> = (0..nr).map(|i| p[i] * ly[i] / m[i]).collect();
    let px: Vec<f64> = x.iter().zip(p).map(|(a, b)| a * b).collect();
    let check = op.apply_t(&px);
    let residual = check.iter().zip(&b).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    Ok(MinNormSolution { x, multiplier: cg.x, residual, iterations: cg.iterations })
}

/// A least-norm load tensor together with its diagnostics.
#[derive(Clone, Debug)]
pub struct T0Field {
    pub t: TensorField2x2,
    /// Weighted squared norm `∫ |T|²`.
    pub norm2: f64,
    /// Largest residual density of the weak divergence constraint.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct T0Options {
    /// Restrict to symmetric fields (`T = sym ∇v` instead of `∇v`).
    pub symmetric: bool,
}

fn require_clamped(grid: &Grid) -> Result<()> {
    if grid.spec().edges().iter().any(|e| *e == EdgeCondition::Clamped) {
        Ok(())
    } else {
        Err(Error::Loads("the clamped part of the boundary is empty".into()))
    }
}

/// Gradient-type operator `v ↦ (v_{λ|β})` on the in-plane unknowns, four
/// rows per node ordered `11, 12, 21, 22`.
fn covariant_gradient(grid: &Grid, dofs: &DofMap, st: &StencilSet, geom: Option<&SurfaceGeometry>) -> LinearOp {
    let n = grid.len();
    let mut b = OpBuilder::new(dofs, 4 * n);
    for k in 0..n {
        for la in 0..2 {
            for be in 0..2 {
                let row = 4 * k + 2 * la + be;
                b.add_op(row, 1.0, &st.d[be], k, la);
                if let Some(g) = geom {
                    for al in 0..2 {
                        b.add_point(row, -g.christoffel[k][al][la][be], k, al);
                    }
                }
            }
        }
    }
    b.finish()
}

fn symmetric_gradient(grid: &Grid, dofs: &DofMap, st: &StencilSet, geom: Option<&SurfaceGeometry>) -> LinearOp {
    let n = grid.len();
    let mut b = OpBuilder::new(dofs, 3 * n);
    let rows = [(0usize, 0usize), (1, 1), (0, 1)];
    for k in 0..n {
        for (r, &(al, be)) in rows.iter().enumerate() {
            let pairs: &[(usize, usize)] = if al == be { &[(al, be)] } else { &[(0, 1), (1, 0)] };
            for &(la, mu) in pairs {
                b.add_op(3 * k + r, 1.0, &st.d[mu], k, la);
                if let Some(g) = geom {
                    for a in 0..2 {
                        b.add_point(3 * k + r, -g.christoffel[k][a][la][mu], k, a);
                    }
                }
            }
        }
    }
    b.finish()
}

fn build_t0(
    grid: &Grid,
    loads: &PlateLoads,
    geom: Option<&SurfaceGeometry>,
    weights: &[f64],
    opts: T0Options,
) -> Result<T0Field> {
    require_clamped(grid)?;
    loads.validate(grid)?;
    let dofs = DofMap::new(grid);
    let st = StencilSet::new(grid);
    let mut f = loads.vector(grid, &dofs, weights);
    for (i, v) in f.iter_mut().enumerate() {
        if i % 3 == 2 {
            *v = 0.0;
        }
    }
    let n = grid.len();
    let s = grid.shape();
    let (op, p, m) = if opts.symmetric {
        let op = symmetric_gradient(grid, &dofs, &st, geom);
        let p: Vec<f64> = (0..3 * n).map(|r| weights[r / 3]).collect();
        let m: Vec<f64> = (0..3 * n).map(|r| weights[r / 3] * if r % 3 == 2 { 2.0 } else { 1.0 }).collect();
        (op, p, m)
    } else {
        let op = covariant_gradient(grid, &dofs, &st, geom);
        let p: Vec<f64> = (0..4 * n).map(|r| weights[r / 4]).collect();
        (op, p.clone(), p)
    };
    let sol = min_norm_div_solve(&op, &p, &m, &f)?;
    let norm2 = sol.x.iter().zip(&m).map(|(x, w)| w * x * x).sum();
    let mut residual = 0.0f64;
    let px: Vec<f64> = sol.x.iter().zip(&p).map(|(a, b)| a * b).collect();
    for (i, (a, b)) in op.apply_t(&px).iter().zip(&f).enumerate() {
        let (k, _) = dofs.locate(i);
        residual = residual.max((a - b).abs() / weights[k]);
    }
    let t = if opts.symmetric {
        let x = &sol.x;
        TensorField2x2::symmetric(
            s,
            (0..n).map(|k| x[3 * k]).collect(),
            (0..n).map(|k| x[3 * k + 1]).collect(),
            (0..n).map(|k| x[3 * k + 2]).collect(),
        )?
    } else {
        let x = &sol.x;
        TensorField2x2::general(
            s,
            (0..n).map(|k| x[4 * k]).collect(),
            (0..n).map(|k| x[4 * k + 1]).collect(),
            (0..n).map(|k| x[4 * k + 2]).collect(),
            (0..n).map(|k| x[4 * k + 3]).collect(),
        )?
    };
    Ok(T0Field { t, norm2, residual })
}

/// Least-norm `T` with `T_{αβ,β} + P_α = 0` in Ω and `T_{αβ}n_β = P^t_α`
/// on the traction edges, in weak form.
///
/// The minimizer is `T = ∇v` where `v` solves the Poisson problems
/// `−Δv_α = P_α` with `v = 0` on the clamped edges and `∂v_α/∂n = P^t_α`
/// on the traction edges. `T` is not symmetric in general.
pub fn build_t0_plate(grid: &Grid, loads: &PlateLoads, opts: T0Options) -> Result<T0Field> {
    let w = grid.shape().trapezoid_weights();
    build_t0(grid, loads, None, &w, opts)
}

/// Shell variant: the constraint reads
/// `(√a T_{αβ})_{,β}/√a + Γ^α_{λβ} T_{λβ} + P_α = 0`, all pairings carry `√a`.
/// On the plane it reproduces [`build_t0_plate`].
pub fn build_t0_shell(geom: &SurfaceGeometry, loads: &PlateLoads, opts: T0Options) -> Result<T0Field> {
    let w = geom.area_weights();
    build_t0(&geom.grid, loads, Some(geom), &w, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{div_tensor, BoundarySpec};
    use crate::shell::Surface;

    #[test]
    fn t_tilde_constant_load() {
        let g = Grid::unit_square(9).unwrap();
        let p = 2.5;
        let t = build_t_tilde(&g, &g.scalar(|_, _| p), &g.zeros(), None).unwrap();
        for k in 0..g.len() {
            let (x, _) = g.shape().coords(k);
            assert!((t.xx[k] - (-p * x + p + 1.0)).abs() < 1e-12);
            assert!((t.yy[k] - (p + 1.0)).abs() < 1e-12);
            assert!(t.eigen_range(k).0 >= 1.0 - 1e-12);
        }
        let t = build_t_tilde(&g, &g.zeros(), &g.zeros(), None).unwrap();
        assert!(t.xx.iter().chain(&t.yy).all(|v| *v == 1.0));
        assert!(t.xy.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn t_tilde_divergence_residual() {
        let g = Grid::unit_square(33).unwrap();
        let p1 = g.scalar(|_, y| (std::f64::consts::PI * y).sin());
        let t = build_t_tilde(&g, &p1, &g.zeros(), None).unwrap();
        let d = div_tensor(&g, &t).unwrap();
        let s = g.shape();
        let mut r = 0.0f64;
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                let k = s.index(i, j);
                r = r.max((d.x[k] + p1.values[k]).abs()).max(d.y[k].abs());
            }
        }
        assert!(r <= 1e-3, "{r}");
    }

    #[test]
    fn t0_zero_loads() {
        let g = Grid::unit_square(7).unwrap();
        let t = build_t0_plate(&g, &PlateLoads::zeros(g.shape()), T0Options::default()).unwrap();
        assert_eq!(t.t.max_abs(), 0.0);
    }

    #[test]
    fn t0_requires_clamped_edge() {
        let g = Grid::new([0.0, 1.0, 0.0, 1.0], 7, 7, BoundarySpec::uniform(EdgeCondition::Traction)).unwrap();
        assert!(build_t0_plate(&g, &PlateLoads::zeros(g.shape()), T0Options::default()).is_err());
    }

    #[test]
    fn t0_interior_divergence_is_balanced() {
        let g = Grid::unit_square(17).unwrap();
        let mut l = PlateLoads::zeros(g.shape());
        l.p1 = g.scalar(|_, _| 1.0);
        let t = build_t0_plate(&g, &l, T0Options::default()).unwrap();
        let d = div_tensor(&g, &t.t).unwrap();
        let s = g.shape();
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                let k = s.index(i, j);
                assert!((d.x[k] + 1.0).abs() < 1e-7, "{}", d.x[k]);
                assert!(d.y[k].abs() < 1e-7);
            }
        }
        let sym = build_t0_plate(&g, &l, T0Options { symmetric: true }).unwrap();
        assert_eq!(sym.t.asymmetry(), 0.0);
        assert!(sym.residual < 1e-8);
        // the symmetric class is smaller, so its least norm is not smaller
        assert!(sym.norm2 >= t.norm2 * (1.0 - 1e-9));
    }

    #[test]
    fn t0_shell_flat_matches_plate() {
        let g = Grid::unit_square(9).unwrap();
        let mut l = PlateLoads::zeros(g.shape());
        l.p1 = g.scalar(|x, y| x + y * y);
        l.p2 = g.scalar(|x, _| (3.0 * x).cos());
        let geo = SurfaceGeometry::analytic(&g, &Surface::Plane).unwrap();
        let a = build_t0_plate(&g, &l, T0Options::default()).unwrap();
        let b = build_t0_shell(&geo, &l, T0Options::default()).unwrap();
        assert_eq!(a.t, b.t);
        let geo = SurfaceGeometry::analytic(&g, &Surface::Cylinder { r: 2.0 }).unwrap();
        let z = build_t0_shell(&geo, &PlateLoads::zeros(g.shape()), T0Options::default()).unwrap();
        assert_eq!(z.t.max_abs(), 0.0);
    }
}
