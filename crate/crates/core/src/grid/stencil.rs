//! Sparse difference operators on the free degrees of freedom.
//!
//! Clamped nodes are eliminated: their `u₁, u₂, w` are identically zero and
//! carry no unknowns. The remaining nodes hold three unknowns each,
//! interleaved (`3·k + c`, `c = 0, 1, 2` for `u₁, u₂, w`) so that the
//! assembled Hessians stay banded.
//!
//! First derivatives use the summation-by-parts pair: central differences
//! inside and `(v₁ − v₀)/h` at the ends of a line. With trapezoidal weights
//! the weighted adjoint of this operator is exactly the negative central
//! difference at interior nodes, which is what makes the discrete
//! equilibrium identities hold without a truncation term.
//!
//! Second derivatives of `w` reflect a ghost node at clamped ends
//! (`w₋₁ = w₁`, i.e. `∂w/∂n = 0`) and use the one-sided `(2, −5, 4, −1)`
//! stencil at traction ends. The mixed derivative vanishes along clamped
//! edges.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::{EdgeCondition, Grid, GridShape};

type Row = Vec<(usize, f64)>;

/// Sparse operator from node values to node values.
#[derive(Clone, Debug)]
pub struct NodeOp {
    pub rows: Vec<Row>,
}

impl NodeOp {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(m, c)| c * v[*m]).sum()).collect()
    }

    pub fn row(&self, k: usize) -> &[(usize, f64)] {
        &self.rows[k]
    }
}

fn sbp_1d(n: usize, h: f64) -> Vec<Row> {
    let c = 0.5 / h;
    let mut rows = Vec::with_capacity(n);
    rows.push(vec![(0, -1.0 / h), (1, 1.0 / h)]);
    for i in 1..n - 1 {
        rows.push(vec![(i - 1, -c), (i + 1, c)]);
    }
    rows.push(vec![(n - 2, -1.0 / h), (n - 1, 1.0 / h)]);
    rows
}

fn d2_1d(n: usize, h: f64, lo: EdgeCondition, hi: EdgeCondition) -> Vec<Row> {
    let c = 1.0 / (h * h);
    let mut rows = Vec::with_capacity(n);
    rows.push(match lo {
        EdgeCondition::Clamped => vec![(0, -2.0 * c), (1, 2.0 * c)],
        EdgeCondition::Traction => vec![(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)],
    });
    for i in 1..n - 1 {
        rows.push(vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)]);
    }
    rows.push(match hi {
        EdgeCondition::Clamped => vec![(n - 2, 2.0 * c), (n - 1, -2.0 * c)],
        EdgeCondition::Traction => vec![(n - 4, -c), (n - 3, 4.0 * c), (n - 2, -5.0 * c), (n - 1, 2.0 * c)],
    });
    rows
}

fn dm_1d(n: usize, h: f64, lo: EdgeCondition, hi: EdgeCondition) -> Vec<Row> {
    let c = 0.5 / h;
    let mut rows = Vec::with_capacity(n);
    rows.push(match lo {
        EdgeCondition::Clamped => vec![],
        EdgeCondition::Traction => vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)],
    });
    for i in 1..n - 1 {
        rows.push(vec![(i - 1, -c), (i + 1, c)]);
    }
    rows.push(match hi {
        EdgeCondition::Clamped => vec![],
        EdgeCondition::Traction => vec![(n - 3, c), (n - 2, -4.0 * c), (n - 1, 3.0 * c)],
    });
    rows
}

fn along_x(s: GridShape, line: &[Row]) -> NodeOp {
    let mut rows = Vec::with_capacity(s.len());
    for j in 0..s.ny {
        for row in line.iter().take(s.nx) {
            rows.push(row.iter().map(|(m, c)| (s.index(*m, j), *c)).collect());
        }
    }
    NodeOp { rows }
}

fn along_y(s: GridShape, line: &[Row]) -> NodeOp {
    let mut rows = Vec::with_capacity(s.len());
    for row in line.iter().take(s.ny) {
        for i in 0..s.nx {
            rows.push(row.iter().map(|(m, c)| (s.index(i, *m), *c)).collect());
        }
    }
    NodeOp { rows }
}

fn tensor(s: GridShape, lx: &[Row], ly: &[Row]) -> NodeOp {
    let mut rows = Vec::with_capacity(s.len());
    for ry in ly.iter().take(s.ny) {
        for rx in lx.iter().take(s.nx) {
            let mut r = Vec::with_capacity(rx.len() * ry.len());
            for (l, b) in ry {
                for (m, a) in rx {
                    r.push((s.index(*m, *l), a * b));
                }
            }
            rows.push(r);
        }
    }
    NodeOp { rows }
}

/// Node-space difference operators used by the energies.
#[derive(Clone, Debug)]
pub struct StencilSet {
    /// First derivatives `∂₁, ∂₂` (summation-by-parts).
    pub d: [NodeOp; 2],
    /// Second derivatives of `w`: `∂₁₁, ∂₂₂, ∂₁₂`.
    pub s: [NodeOp; 3],
}

impl StencilSet {
    pub fn new(grid: &Grid) -> Self {
        let s = grid.shape();
        let spec = grid.spec();
        let dx = along_x(s, &sbp_1d(s.nx, s.hx()));
        let dy = along_y(s, &sbp_1d(s.ny, s.hy()));
        let sxx = along_x(s, &d2_1d(s.nx, s.hx(), spec.left, spec.right));
        let syy = along_y(s, &d2_1d(s.ny, s.hy(), spec.bottom, spec.top));
        let sxy = tensor(
            s,
            &dm_1d(s.nx, s.hx(), spec.left, spec.right),
            &dm_1d(s.ny, s.hy(), spec.bottom, spec.top),
        );
        Self { d: [dx, dy], s: [sxx, syy, sxy] }
    }

    /// Second-derivative operator for the index pair `(α, β)`.
    pub fn second(&self, a: usize, b: usize) -> &NodeOp {
        match (a, b) {
            (0, 0) => &self.s[0],
            (1, 1) => &self.s[1],
            _ => &self.s[2],
        }
    }
}

/// Numbering of the free unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    shape: GridShape,
    free_of_node: Vec<Option<usize>>,
    node_of_free: Vec<usize>,
}

impl DofMap {
    pub fn new(grid: &Grid) -> Self {
        let mut free_of_node = vec![None; grid.len()];
        let mut node_of_free = Vec::new();
        for (k, slot) in free_of_node.iter_mut().enumerate() {
            if !grid.is_clamped(k) {
                *slot = Some(node_of_free.len());
                node_of_free.push(k);
            }
        }
        Self { shape: grid.shape(), free_of_node, node_of_free }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn n_free_nodes(&self) -> usize {
        self.node_of_free.len()
    }

    pub fn ndof(&self) -> usize {
        3 * self.node_of_free.len()
    }

    /// Unknown index of component `c` at node `k`, `None` on clamped nodes.
    #[inline]
    pub fn dof(&self, k: usize, c: usize) -> Option<usize> {
        self.free_of_node[k].map(|f| 3 * f + c)
    }

    pub fn node_of_free(&self) -> &[usize] {
        &self.node_of_free
    }

    /// Node of unknown `i` and its component.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        (self.node_of_free[i / 3], i % 3)
    }

    /// Splits an unknown vector into node arrays `(u₁, u₂, w)`, zero on
    /// clamped nodes.
    pub fn scatter(&self, x: &[f64]) -> [Vec<f64>; 3] {
        let n = self.shape.len();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (f, &k) in self.node_of_free.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                o[k] = x[3 * f + c];
            }
        }
        out
    }

    /// Inverse of [`DofMap::scatter`]; clamped node values are dropped.
    pub fn gather(&self, u1: &[f64], u2: &[f64], w: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.ndof());
        for &k in &self.node_of_free {
            x.push(u1[k]);
            x.push(u2[k]);
            x.push(w[k]);
        }
        x
    }

    /// Mask of unknowns belonging to component `c`.
    pub fn component_mask(&self, c: usize) -> Vec<bool> {
        (0..self.ndof()).map(|i| i % 3 == c).collect()
    }
}

/// A sparse matrix together with its transpose.
#[derive(Clone, Debug)]
pub struct LinearOp {
    a: CsrMatrix<f64>,
    at: CsrMatrix<f64>,
}

fn csr_mul(m: &CsrMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let offs = m.row_offsets();
    let cols = m.col_indices();
    let vals = m.values();
    for (r, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for p in offs[r]..offs[r + 1] {
            s += vals[p] * x[cols[p]];
        }
        *o = s;
    }
}

impl LinearOp {
    pub fn from_csr(a: CsrMatrix<f64>) -> Self {
        let at = a.transpose();
        Self { a, at }
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.a.nrows()];
        csr_mul(&self.a, x, &mut out);
        out
    }

    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.at.nrows()];
        csr_mul(&self.at, y, &mut out);
        out
    }

    pub fn csr(&self) -> &CsrMatrix<f64> {
        &self.a
    }

    pub fn csr_t(&self) -> &CsrMatrix<f64> {
        &self.at
    }

    /// Stacks two operators with the same column space.
    pub fn vstack(top: &LinearOp, bottom: &LinearOp) -> LinearOp {
        assert_eq!(top.ncols(), bottom.ncols());
        let mut coo = CooMatrix::new(top.nrows() + bottom.nrows(), top.ncols());
        for (r, c, v) in top.a.triplet_iter() {
            coo.push(r, c, *v);
        }
        for (r, c, v) in bottom.a.triplet_iter() {
            coo.push(top.nrows() + r, c, *v);
        }
        LinearOp::from_csr(CsrMatrix::from(&coo))
    }

    /// `Aᵀ D A` where `D` is block diagonal with `b × b` blocks, one per
    /// group of `b` consecutive rows.
    pub fn gram(&self, b: usize, blocks: &[Vec<f64>]) -> CsrMatrix<f64> {
        assert_eq!(self.nrows(), b * blocks.len());
        let mut coo = CooMatrix::new(self.nrows(), self.nrows());
        for (g, blk) in blocks.iter().enumerate() {
            for i in 0..b {
                for j in 0..b {
                    let v = blk[i * b + j];
                    if v != 0.0 {
                        coo.push(g * b + i, g * b + j, v);
                    }
                }
            }
        }
        let d = CsrMatrix::from(&coo);
        let da = &d * &self.a;
        &self.at * &da
    }
}

/// Accumulates rows of an operator acting on the free unknowns.
pub struct OpBuilder<'a> {
    dofs: &'a DofMap,
    coo: CooMatrix<f64>,
}

impl<'a> OpBuilder<'a> {
    pub fn new(dofs: &'a DofMap, nrows: usize) -> Self {
        Self { dofs, coo: CooMatrix::new(nrows, dofs.ndof()) }
    }

    /// Adds `coef · (op u_c)_k` to output row `row`.
    pub fn add_op(&mut self, row: usize, coef: f64, op: &NodeOp, k: usize, c: usize) {
        if coef == 0.0 {
            return;
        }
        for (m, v) in op.row(k) {
            if let Some(d) = self.dofs.dof(*m, c) {
                let e = coef * v;
                if e != 0.0 {
                    self.coo.push(row, d, e);
                }
            }
        }
    }

    /// Adds `coef · u_c(k)` to output row `row`.
    pub fn add_point(&mut self, row: usize, coef: f64, k: usize, c: usize) {
        if coef == 0.0 {
            return;
        }
        if let Some(d) = self.dofs.dof(k, c) {
            self.coo.push(row, d, coef);
        }
    }

    pub fn finish(self) -> LinearOp {
        LinearOp::from_csr(CsrMatrix::from(&self.coo))
    }
}
