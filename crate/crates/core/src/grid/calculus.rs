//! Finite-difference calculus on whole fields.
//!
//! Interior nodes use second-order central differences; the first and last
//! node of every grid line use second-order one-sided stencils
//! (`(-3, 4, -1) / 2h` and `(2, -5, 4, -1) / h²`).

use super::{Grid, GridShape, ScalarField, TensorField2x2, VectorField2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffMode {
    Grad,
    Hess,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiffOutput {
    Grad(VectorField2),
    Hess(TensorField2x2),
}

fn check(grid: &Grid, shape: GridShape) -> Result<()> {
    if grid.shape() == shape {
        Ok(())
    } else {
        Err(Error::GridMismatch("field does not live on this grid"))
    }
}

/// First derivative of one grid line, written into `out`.
pub(crate) fn d1_line(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    let c = 0.5 / h;
    out[0] = c * (-3.0 * v[0] + 4.0 * v[1] - v[2]);
    for i in 1..n - 1 {
        out[i] = c * (v[i + 1] - v[i - 1]);
    }
    out[n - 1] = c * (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]);
}

/// Second derivative of one grid line.
pub(crate) fn d2_line(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    let c = 1.0 / (h * h);
    out[0] = c * (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]);
    for i in 1..n - 1 {
        out[i] = c * (v[i + 1] - 2.0 * v[i] + v[i - 1]);
    }
    out[n - 1] = c * (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]);
}

/// Applies a line operator along `x` (axis 0) or `y` (axis 1).
pub(crate) fn along(shape: GridShape, v: &[f64], axis: usize, op: fn(&[f64], f64, &mut [f64])) -> Vec<f64> {
    let (nx, ny) = (shape.nx, shape.ny);
    let mut out = vec![0.0; v.len()];
    if axis == 0 {
        let h = shape.hx();
        for j in 0..ny {
            op(&v[j * nx..(j + 1) * nx], h, &mut out[j * nx..(j + 1) * nx]);
        }
    } else {
        let h = shape.hy();
        let mut line = vec![0.0; ny];
        let mut res = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                line[j] = v[j * nx + i];
            }
            op(&line, h, &mut res);
            for j in 0..ny {
                out[j * nx + i] = res[j];
            }
        }
    }
    out
}

pub(crate) fn dx(shape: GridShape, v: &[f64]) -> Vec<f64> {
    along(shape, v, 0, d1_line)
}

pub(crate) fn dy(shape: GridShape, v: &[f64]) -> Vec<f64> {
    along(shape, v, 1, d1_line)
}

pub fn grad(grid: &Grid, f: &ScalarField) -> Result<VectorField2> {
    check(grid, f.shape())?;
    let s = f.shape();
    VectorField2::new(s, dx(s, &f.values), dy(s, &f.values))
}

/// Hessian; the mixed entry is computed once and shared so the output is
/// symmetric bitwise.
pub fn hess(grid: &Grid, f: &ScalarField) -> Result<TensorField2x2> {
    check(grid, f.shape())?;
    let s = f.shape();
    let xx = along(s, &f.values, 0, d2_line);
    let yy = along(s, &f.values, 1, d2_line);
    let xy = dy(s, &dx(s, &f.values));
    TensorField2x2::symmetric(s, xx, yy, xy)
}

pub fn diff(grid: &Grid, f: &ScalarField, mode: DiffMode) -> Result<DiffOutput> {
    Ok(match mode {
        DiffMode::Grad => DiffOutput::Grad(grad(grid, f)?),
        DiffMode::Hess => DiffOutput::Hess(hess(grid, f)?),
    })
}

pub fn div_vec(grid: &Grid, v: &VectorField2) -> Result<ScalarField> {
    check(grid, v.shape())?;
    let s = v.shape();
    let a = dx(s, &v.x);
    let b = dy(s, &v.y);
    ScalarField::from_values(s, a.iter().zip(&b).map(|(p, q)| p + q).collect())
}

/// Row-wise divergence `(T_{1β,β}, T_{2β,β})`.
pub fn div_tensor(grid: &Grid, t: &TensorField2x2) -> Result<VectorField2> {
    check(grid, t.shape())?;
    let s = t.shape();
    let add = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(p, q)| p + q).collect::<Vec<_>>();
    let r1 = add(dx(s, &t.xx), dy(s, &t.xy));
    let r2 = add(dx(s, &t.yx), dy(s, &t.yy));
    VectorField2::new(s, r1, r2)
}

/// Trapezoidal quadrature of `f` (times `weight` when given).
pub fn integrate(grid: &Grid, f: &ScalarField, weight: Option<&ScalarField>) -> Result<f64> {
    check(grid, f.shape())?;
    let w = grid.shape().trapezoid_weights();
    match weight {
        None => Ok(w.iter().zip(&f.values).map(|(a, b)| a * b).sum()),
        Some(g) => {
            check(grid, g.shape())?;
            Ok(w.iter().zip(&f.values).zip(&g.values).map(|((a, b), c)| a * b * c).sum())
        }
    }
}

/// One-dimensional trapezoidal quadrature of `f` over the traction edges.
pub fn integrate_boundary(grid: &Grid, f: &ScalarField) -> Result<f64> {
    check(grid, f.shape())?;
    Ok(grid.traction_weights().iter().zip(&f.values).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundarySpec;
    use std::f64::consts::PI;

    fn rect(n: usize) -> Grid {
        Grid::new([0.0, 1.0, 0.0, 1.0], n, n, BoundarySpec::clamped()).unwrap()
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let g = rect(9);
        let d = grad(&g, &g.scalar(|_, _| 3.7)).unwrap();
        assert!(d.max_abs() < 1e-12);
    }

    #[test]
    fn hess_of_x_squared_is_exact() {
        let g = Grid::new([-1.0, 2.0, 0.0, 1.0], 7, 6, BoundarySpec::clamped()).unwrap();
        let h = hess(&g, &g.scalar(|x, _| x * x)).unwrap();
        assert!(h.is_symmetric());
        for k in 0..g.len() {
            assert!((h.xx[k] - 2.0).abs() < 1e-10);
            assert!(h.yy[k].abs() < 1e-10);
            assert!(h.xy[k].abs() < 1e-10);
        }
        assert_eq!(h.asymmetry(), 0.0);
    }

    #[test]
    fn hess_of_sine_is_second_order() {
        // max |hess11 + π² w| / h² measured at 65×65 and 129×129
        let mut ratios = vec![];
        for n in [65, 129] {
            let g = rect(n);
            let w = g.scalar(|x, y| (PI * x).sin() * (PI * y).sin());
            let h = hess(&g, &w).unwrap();
            let e = (0..g.len()).fold(0.0f64, |m, k| m.max((h.xx[k] + PI * PI * w.values[k]).abs()));
            ratios.push(e / (g.hx() * g.hx()));
        }
        // constant C frozen from the first run, with a margin
        assert!(ratios[0] < 12.0, "{:?}", ratios);
        assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.1, "{:?}", ratios);
    }

    #[test]
    fn div_of_gradient_of_quadratic() {
        let g = rect(9);
        let v = VectorField2::from_fn(g.shape(), |x, y| [x * y, y * y]);
        let d = div_vec(&g, &v).unwrap();
        for k in 0..g.len() {
            let (_, y) = g.shape().coords(k);
            assert!((d.values[k] - 3.0 * y).abs() < 1e-12);
        }
        let t = TensorField2x2::general(
            g.shape(),
            v.x.clone(),
            v.y.clone(),
            vec![0.0; g.len()],
            v.x.clone(),
        )
        .unwrap();
        let r = div_tensor(&g, &t).unwrap();
        for k in 0..g.len() {
            let (x, y) = g.shape().coords(k);
            assert!((r.x[k] - 3.0 * y).abs() < 1e-12);
            assert!((r.y[k] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_examples() {
        let g = rect(33);
        assert_eq!(integrate(&g, &g.scalar(|_, _| 1.0), None).unwrap(), 1.0);
        assert!((integrate(&g, &g.scalar(|x, _| x), None).unwrap() - 0.5).abs() < 1e-15);
        let s = integrate(&g, &g.scalar(|x, y| (PI * x).sin() * (PI * y).sin()), None).unwrap();
        assert!((s - 4.0 / (PI * PI)).abs() < 1e-3);
        let two = g.scalar(|_, _| 2.0);
        let one = g.scalar(|_, _| 1.0);
        assert_eq!(integrate(&g, &one, Some(&two)).unwrap(), 2.0);
    }

    #[test]
    fn mismatch_is_refused() {
        let a = rect(9);
        let b = rect(11);
        assert!(grad(&a, &b.zeros()).is_err());
        assert!(integrate(&a, &b.zeros(), None).is_err());
    }
}
