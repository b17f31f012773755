//! Linear algebra kernels: banded `LDLᵀ`, preconditioned conjugate
//! gradients and a Lanczos smallest-eigenvalue solver.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest `|i − j|` over the stored entries.
pub fn bandwidth(a: &CsrMatrix<f64>) -> usize {
    a.triplet_iter().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
}

/// `LDLᵀ` factorization of a symmetric banded matrix.
///
/// Positive semidefinite input is accepted: a pivot that drops below
/// `1e-13 · max diag` is treated as zero and the corresponding unknown is
/// pinned to zero in [`BandedLdl::solve`]. For consistent right-hand sides
/// this yields a solution of the singular system.
#[derive(Clone, Debug)]
pub struct BandedLdl {
    n: usize,
    bw: usize,
    // row i holds columns i-bw .. i-1 at offsets 0 .. bw-1
    l: Vec<f64>,
    d: Vec<f64>,
    skipped: usize,
}

impl BandedLdl {
    pub fn factor(a: &CsrMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Singular("matrix is not square".into()));
        }
        let bw = bandwidth(a).max(1);
        let mut l = vec![0.0; n * bw];
        let mut d = vec![0.0; n];
        for (i, j, v) in a.triplet_iter() {
            if j == i {
                d[i] += v;
            } else if j < i {
                l[i * bw + (j + bw - i)] += v;
            }
        }
        let max_diag = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = 1e-13 * max_diag.max(f64::MIN_POSITIVE);
        let mut skipped = 0;
        let mut ld = vec![0.0; bw];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * bw;
            for j in lo..i {
                // L[i][j] = (A[i][j] - Σ_k L[i][k] d[k] L[j][k]) / d[j]
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = l[row + (j + bw - i)];
                let jrow = j * bw;
                for k in jlo..j {
                    s -= ld[k + bw - i] * l[jrow + (k + bw - j)];
                }
                if d[j] != 0.0 {
                    ld[j + bw - i] = s;
                    l[row + (j + bw - i)] = s / d[j];
                } else {
                    ld[j + bw - i] = 0.0;
                    l[row + (j + bw - i)] = 0.0;
                }
            }
            let mut di = d[i];
            for j in lo..i {
                di -= ld[j + bw - i] * l[row + (j + bw - i)];
            }
            if di <= tiny {
                if di < -1e-8 * max_diag {
                    return Err(Error::Singular(format!("matrix is indefinite (pivot {di:.3e} at row {i})")));
                }
                di = 0.0;
                skipped += 1;
                for j in lo..i {
                    l[row + (j + bw - i)] = 0.0;
                }
            }
            d[i] = di;
        }
        Ok(Self { n, bw, l, d, skipped })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of pivots treated as zero.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Unknowns with a nonzero pivot.
    pub fn active(&self) -> Vec<bool> {
        self.d.iter().map(|d| *d != 0.0).collect()
    }

    /// `D^{+½} L⁻¹ b`, so that `bᵀ A⁺ b = ‖D^{+½} L⁻¹ b‖²`.
    pub fn half_solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * bw;
            let mut s = x[i];
            for j in lo..i {
                s -= self.l[row + (j + bw - i)] * x[j];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] = if self.d[i] > 0.0 { x[i] / self.d[i].sqrt() } else { 0.0 };
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * bw;
            let mut s = x[i];
            for j in lo..i {
                s -= self.l[row + (j + bw - i)] * x[j];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] = if self.d[i] != 0.0 { x[i] / self.d[i] } else { 0.0 };
        }
        for i in (0..n).rev() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let lo = i.saturating_sub(bw);
            let row = i * bw;
            for j in lo..i {
                x[j] -= self.l[row + (j + bw - i)] * xi;
            }
        }
        x
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradients for `A x = b`, stopping at relative
/// residual `tol`.
pub fn pcg(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(CgOutcome { x, iterations: it, residual: rel });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular(format!("non-positive curvature {pap:.3e} in conjugate gradients")));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let rel = norm(&r) / bnorm;
    if rel <= tol {
        Ok(CgOutcome { x, iterations: max_iter, residual: rel })
    } else {
        Err(Error::NotConverged { iterations: max_iter, residual: rel })
    }
}

#[derive(Clone, Debug)]
pub struct EigOutcome {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖A v − θ v‖` for the returned unit vector.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of a symmetric operator by restarted Lanczos with
/// full reorthogonalization.
///
/// Stops when the Ritz residual is below `tol` times the largest Ritz value
/// in magnitude.
pub fn lanczos_smallest(
    n: usize,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    tol: f64,
    max_basis: usize,
    max_restarts: usize,
    seed: u64,
) -> Result<EigOutcome> {
    if n == 0 {
        return Err(Error::Singular("empty operator".into()));
    }
    let m_max = max_basis.clamp(2, n.max(2)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut total = 0;
    let mut last = (f64::NAN, f64::INFINITY);
    for _ in 0..=max_restarts {
        let s = norm(&start);
        start.iter_mut().for_each(|v| *v /= s);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = vec![];
        let mut beta: Vec<f64> = vec![];
        let mut ritz = None;
        for j in 0..m_max {
            let mut w = apply(&basis[j]);
            total += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    axpy(-c, v, &mut w);
                }
            }
            let b = norm(&w);
            let m = alpha.len();
            let check = b <= 1e-14 * a.abs().max(1.0) || m == m_max || m % 10 == 0;
            if check {
                let mut t = DMatrix::<f64>::zeros(m, m);
                for i in 0..m {
                    t[(i, i)] = alpha[i];
                    if i + 1 < m {
                        t[(i, i + 1)] = beta[i];
                        t[(i + 1, i)] = beta[i];
                    }
                }
                let eig = t.symmetric_eigen();
                let (imin, &theta) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .min_by(|x, y| x.1.total_cmp(y.1))
                    .expect("nonempty");
                let scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
                let sv = eig.eigenvectors.column(imin);
                let res = (b * sv[m - 1]).abs();
                let mut y = vec![0.0; n];
                for (i, v) in basis.iter().enumerate().take(m) {
                    axpy(sv[i], v, &mut y);
                }
                last = (theta, res);
                ritz = Some(y);
                if res <= tol * scale || b <= 1e-14 * scale {
                    let y = ritz.take().expect("ritz vector");
                    let ay = apply(&y);
                    let mut r = ay.clone();
                    axpy(-theta, &y, &mut r);
                    return Ok(EigOutcome { value: theta, vector: y, residual: norm(&r), iterations: total });
                }
                if m == m_max {
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        start = match ritz {
            Some(y) => y,
            None => break,
        };
    }
    log::warn!("lanczos stopped at θ = {:.6e} with residual {:.3e}", last.0, last.1);
    Err(Error::NotConverged { iterations: total, residual: last.1 })
}

/// `A x` for a sparse matrix.
pub fn csr_apply(a: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (i, row) in a.row_iter().enumerate() {
        y[i] = row.col_indices().iter().zip(row.values()).map(|(j, v)| v * x[*j]).sum();
    }
    y
}

/// Smallest eigenvalue of a dense symmetric matrix.
pub fn dense_smallest(m: DMatrix<f64>) -> f64 {
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        m[(i, j)] += v;
    }
    m
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
