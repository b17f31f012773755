//! Structured rectangular grids, grid-sampled fields and finite-difference
//! calculus.
//!
//! Nodes are numbered row-major with `x` running fastest: node `(i, j)` has
//! index `j * nx + i`. Fields carry the [`GridShape`] they were sampled on and
//! refuse to combine with fields from a different shape.
//!
//! Two families of difference operators live here:
//!
//! * [`calculus`] works on arbitrary fields (central differences inside,
//!   second-order one-sided differences on the boundary rows);
//! * [`stencil`] assembles sparse operators acting on the free degrees of
//!   freedom of a clamped/traction problem. Those are the operators the
//!   energies are built from.

pub mod calculus;
pub mod stencil;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use calculus::{div_tensor, div_vec, grad, hess, integrate, integrate_boundary, DiffMode, DiffOutput};
pub use stencil::{DofMap, LinearOp, NodeOp, OpBuilder, StencilSet};

/// Minimum node count per axis: the one-sided boundary stencils reach four
/// nodes deep.
pub const MIN_NODES: usize = 5;

/// Condition imposed on one edge of the rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeCondition {
    /// Γ₀: `u = w = ∂w/∂n = 0`.
    Clamped,
    /// Γ_t: prescribed tractions, free displacements.
    Traction,
}

/// Edge conditions for the four sides, `left` being `x = x0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub left: EdgeCondition,
    pub right: EdgeCondition,
    pub bottom: EdgeCondition,
    pub top: EdgeCondition,
}

impl BoundarySpec {
    pub fn clamped() -> Self {
        Self::uniform(EdgeCondition::Clamped)
    }

    pub fn uniform(c: EdgeCondition) -> Self {
        Self { left: c, right: c, bottom: c, top: c }
    }

    pub fn is_fully_clamped(&self) -> bool {
        self.edges().iter().all(|e| *e == EdgeCondition::Clamped)
    }

    pub fn has_clamped(&self) -> bool {
        self.edges().iter().any(|e| *e == EdgeCondition::Clamped)
    }

    pub fn edges(&self) -> [EdgeCondition; 4] {
        [self.left, self.right, self.bottom, self.top]
    }
}

/// Classification of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Clamped,
    Traction,
}

/// The geometric part of a grid. Fields are tagged with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl GridShape {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x1
        } else {
            self.x0 + i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.y1
        } else {
            self.y0 + j as f64 * self.hy()
        }
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x(i), self.y(j))
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Trapezoidal weights, one per node.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let wx = trapezoid_1d(self.nx, self.hx());
        let wy = trapezoid_1d(self.ny, self.hy());
        let mut w = Vec::with_capacity(self.len());
        for &b in &wy {
            for &a in &wx {
                w.push(a * b);
            }
        }
        w
    }
}

fn trapezoid_1d(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// A rectangular grid with boundary classification.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: GridShape,
    spec: BoundarySpec,
    tags: Vec<NodeTag>,
}

impl Grid {
    /// Builds a grid over `[x0,x1]×[y0,y1]` with `nx × ny` nodes.
    ///
    /// Corner nodes shared by a clamped and a traction edge are clamped.
    pub fn new(extents: [f64; 4], nx: usize, ny: usize, spec: BoundarySpec) -> Result<Self> {
        let [x0, x1, y0, y1] = extents;
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(Error::Grid(format!(
                "node counts {nx}x{ny} are below the stencil width ({MIN_NODES} nodes per axis)"
            )));
        }
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(Error::Grid(format!("degenerate extents [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        let shape = GridShape { nx, ny, x0, x1, y0, y1 };
        let mut tags = vec![NodeTag::Interior; shape.len()];
        for j in 0..ny {
            for i in 0..nx {
                let mut on = Vec::with_capacity(2);
                if i == 0 {
                    on.push(spec.left);
                }
                if i + 1 == nx {
                    on.push(spec.right);
                }
                if j == 0 {
                    on.push(spec.bottom);
                }
                if j + 1 == ny {
                    on.push(spec.top);
                }
                if on.is_empty() {
                    continue;
                }
                tags[shape.index(i, j)] = if on.contains(&EdgeCondition::Clamped) {
                    NodeTag::Clamped
                } else {
                    NodeTag::Traction
                };
            }
        }
        Ok(Self { shape, spec, tags })
    }

    /// Unit square, fully clamped, `n × n` nodes.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new([0.0, 1.0, 0.0, 1.0], n, n, BoundarySpec::clamped())
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn spec(&self) -> BoundarySpec {
        self.spec
    }

    pub fn nx(&self) -> usize {
        self.shape.nx
    }

    pub fn ny(&self) -> usize {
        self.shape.ny
    }

    pub fn hx(&self) -> f64 {
        self.shape.hx()
    }

    pub fn hy(&self) -> f64 {
        self.shape.hy()
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn tag(&self, k: usize) -> NodeTag {
        self.tags[k]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    pub fn is_clamped(&self, k: usize) -> bool {
        self.tags[k] == NodeTag::Clamped
    }

    pub fn count(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }

    /// Length of Γ₀ along the boundary.
    pub fn clamped_measure(&self) -> f64 {
        let s = self.shape;
        let (lx, ly) = (s.x1 - s.x0, s.y1 - s.y0);
        let mut m = 0.0;
        for (e, len) in self.spec.edges().iter().zip([ly, ly, lx, lx]) {
            if *e == EdgeCondition::Clamped {
                m += len;
            }
        }
        m
    }

    /// One-dimensional trapezoid weights of the traction edges, per node
    /// (a node on two traction edges gets both contributions).
    pub fn traction_weights(&self) -> Vec<f64> {
        let s = self.shape;
        let wx = trapezoid_1d(s.nx, s.hx());
        let wy = trapezoid_1d(s.ny, s.hy());
        let mut w = vec![0.0; s.len()];
        let spec = self.spec;
        for j in 0..s.ny {
            if spec.left == EdgeCondition::Traction {
                w[s.index(0, j)] += wy[j];
            }
            if spec.right == EdgeCondition::Traction {
                w[s.index(s.nx - 1, j)] += wy[j];
            }
        }
        for i in 0..s.nx {
            if spec.bottom == EdgeCondition::Traction {
                w[s.index(i, 0)] += wx[i];
            }
            if spec.top == EdgeCondition::Traction {
                w[s.index(i, s.ny - 1)] += wx[i];
            }
        }
        for (k, t) in self.tags.iter().enumerate() {
            if *t != NodeTag::Traction {
                w[k] = 0.0;
            }
        }
        w
    }

    pub fn scalar(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_fn(self.shape, f)
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField::zeros(self.shape)
    }
}

fn check_shape(a: GridShape, b: GridShape, what: &'static str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(what))
    }
}

/// A scalar sampled at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(shape: GridShape) -> Self {
        Self { shape, values: vec![0.0; shape.len()] }
    }

    pub fn constant(shape: GridShape, c: f64) -> Self {
        Self { shape, values: vec![c; shape.len()] }
    }

    pub fn from_fn(shape: GridShape, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..shape.len())
            .map(|k| {
                let (x, y) = shape.coords(k);
                f(x, y)
            })
            .collect();
        Self { shape, values }
    }

    pub fn from_values(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::GridMismatch("scalar field length"));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        check_shape(self.shape, other.shape, "scalar fields")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { shape: self.shape, values })
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        Self { shape: self.shape, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self { shape: self.shape, values: self.values.iter().map(|v| f(*v)).collect() }
    }
}

/// A two-component vector sampled at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2 {
    shape: GridShape,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField2 {
    pub fn zeros(shape: GridShape) -> Self {
        Self { shape, x: vec![0.0; shape.len()], y: vec![0.0; shape.len()] }
    }

    pub fn new(shape: GridShape, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != shape.len() || y.len() != shape.len() {
            return Err(Error::GridMismatch("vector field length"));
        }
        Ok(Self { shape, x, y })
    }

    pub fn from_fn(shape: GridShape, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut v = Self::zeros(shape);
        for k in 0..shape.len() {
            let (x, y) = shape.coords(k);
            let [a, b] = f(x, y);
            v.x[k] = a;
            v.y[k] = b;
        }
        v
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    /// Interleaved `[x0, y0, x1, y1, ...]` layout.
    pub fn to_interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.x.len());
        for k in 0..self.x.len() {
            out.push(self.x[k]);
            out.push(self.y[k]);
        }
        out
    }

    pub fn from_interleaved(shape: GridShape, v: &[f64]) -> Result<Self> {
        if v.len() != 2 * shape.len() {
            return Err(Error::GridMismatch("interleaved vector field length"));
        }
        let x = v.iter().step_by(2).copied().collect();
        let y = v.iter().skip(1).step_by(2).copied().collect();
        Ok(Self { shape, x, y })
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A 2×2 tensor sampled at every node. Symmetric tensors satisfy
/// `xy == yx` bitwise.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField2x2 {
    shape: GridShape,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yx: Vec<f64>,
    pub yy: Vec<f64>,
    symmetric: bool,
}

impl TensorField2x2 {
    pub fn zeros(shape: GridShape, symmetric: bool) -> Self {
        let n = shape.len();
        Self { shape, xx: vec![0.0; n], xy: vec![0.0; n], yx: vec![0.0; n], yy: vec![0.0; n], symmetric }
    }

    pub fn symmetric(shape: GridShape, xx: Vec<f64>, yy: Vec<f64>, xy: Vec<f64>) -> Result<Self> {
        let n = shape.len();
        if xx.len() != n || yy.len() != n || xy.len() != n {
            return Err(Error::GridMismatch("tensor field length"));
        }
        Ok(Self { shape, yx: xy.clone(), xx, xy, yy, symmetric: true })
    }

    pub fn general(shape: GridShape, xx: Vec<f64>, xy: Vec<f64>, yx: Vec<f64>, yy: Vec<f64>) -> Result<Self> {
        let n = shape.len();
        if [xx.len(), xy.len(), yx.len(), yy.len()].iter().any(|l| *l != n) {
            return Err(Error::GridMismatch("tensor field length"));
        }
        Ok(Self { shape, xx, xy, yx, yy, symmetric: false })
    }

    /// Symmetric tensor from a node-wise closure returning `[xx, yy, xy]`.
    pub fn symmetric_from_fn(shape: GridShape, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut t = Self::zeros(shape, true);
        for k in 0..shape.len() {
            let (x, y) = shape.coords(k);
            let [a, b, c] = f(x, y);
            t.xx[k] = a;
            t.yy[k] = b;
            t.xy[k] = c;
            t.yx[k] = c;
        }
        t
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `max |t12 - t21|`.
    pub fn asymmetry(&self) -> f64 {
        self.xy.iter().zip(&self.yx).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Component `(α, β)` with zero-based indices.
    pub fn component(&self, a: usize, b: usize) -> &[f64] {
        match (a, b) {
            (0, 0) => &self.xx,
            (0, 1) => &self.xy,
            (1, 0) => &self.yx,
            _ => &self.yy,
        }
    }

    pub fn at(&self, k: usize) -> [[f64; 2]; 2] {
        [[self.xx[k], self.xy[k]], [self.yx[k], self.yy[k]]]
    }

    /// Node-wise `[xx, yy, xy]` with tensorial shear. Only meaningful for
    /// symmetric fields.
    pub fn voigt(&self, k: usize) -> [f64; 3] {
        [self.xx[k], self.yy[k], self.xy[k]]
    }

    /// `Σ_k |t_k|_F²`, unweighted.
    pub fn max_abs(&self) -> f64 {
        self.xx.iter().chain(&self.xy).chain(&self.yx).chain(&self.yy).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &TensorField2x2) -> Result<TensorField2x2> {
        check_shape(self.shape, other.shape, "tensor fields")?;
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Ok(Self {
            shape: self.shape,
            xx: add(&self.xx, &other.xx),
            xy: add(&self.xy, &other.xy),
            yx: add(&self.yx, &other.yx),
            yy: add(&self.yy, &other.yy),
            symmetric: self.symmetric && other.symmetric,
        })
    }

    /// Node-wise eigenvalues of the symmetric part, `(λ_min, λ_max)`.
    pub fn eigen_range(&self, k: usize) -> (f64, f64) {
        let a = self.xx[k];
        let d = self.yy[k];
        let b = 0.5 * (self.xy[k] + self.yx[k]);
        sym2_eigenvalues(a, b, d)
    }
}

/// Eigenvalues `(min, max)` of `[[a, b], [b, d]]`.
pub fn sym2_eigenvalues(a: f64, b: f64, d: f64) -> (f64, f64) {
    let m = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (m - r, m + r)
}
