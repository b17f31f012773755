//! Kirchhoff–Love plates with von Kármán membrane strain.
//!
//! ```text
//! γ_{αβ} = ½(u_{α,β} + u_{β,α}) + ½ w_{,α} w_{,β}
//! κ_{αβ} = −w_{,αβ}
//! ```

use crate::error::{Error, Result};
use crate::grid::{Grid, GridShape, NodeTag, OpBuilder, ScalarField, TensorField2x2};
use crate::model::{voigt_inverse, voigt_min_eigenvalue, Discretization, EnergyBreakdown, Voigt};
use crate::grid::{DofMap, StencilSet};

/// Isotropic elasticity tensor for the contravariant metric `ainv`, in
/// Voigt form (rows and columns ordered `11, 22, 12`).
///
/// `H^{αβλμ} = μ(a^{αλ}a^{βμ} + a^{αμ}a^{βλ}) + λ a^{αβ}a^{λμ}` with
/// `μ = Eh / 2(1+ν)` and `λ = 2νμ / (1−ν)`.
pub fn isotropic_voigt(ainv: [[f64; 2]; 2], e: f64, nu: f64, h: f64) -> Voigt {
    let mu = e * h / (2.0 * (1.0 + nu));
    let lam = mu * 2.0 * nu / (1.0 - nu);
    let t = |a: usize, b: usize, l: usize, m: usize| {
        mu * (ainv[a][l] * ainv[b][m] + ainv[a][m] * ainv[b][l]) + lam * ainv[a][b] * ainv[l][m]
    };
    let idx = [(0, 0), (1, 1), (0, 1)];
    let mut c = [0.0; 9];
    for (i, (a, b)) in idx.iter().enumerate() {
        for (j, (l, m)) in idx.iter().enumerate() {
            c[3 * i + j] = t(*a, *b, *l, *m);
        }
    }
    c
}

pub fn check_parameters(e: f64, nu: f64, h: f64) -> Result<()> {
    if !(e.is_finite() && e > 0.0) {
        return Err(Error::Material(format!("E must be positive, got {e}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Material(format!("h must be positive, got {h}")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::Material(format!("nu out of range (-1, 0.5): {nu}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlateMaterial {
    pub e: f64,
    pub nu: f64,
    pub h: f64,
    /// `H` in Voigt form.
    pub membrane: Voigt,
    /// `(h²/12) H`.
    pub bending: Voigt,
    pub membrane_inv: Voigt,
    pub bending_inv: Voigt,
}

impl PlateMaterial {
    pub fn new(e: f64, nu: f64, h: f64) -> Result<Self> {
        check_parameters(e, nu, h)?;
        let membrane = isotropic_voigt([[1.0, 0.0], [0.0, 1.0]], e, nu, h);
        let s = h * h / 12.0;
        let bending = membrane.map(|v| s * v);
        let membrane_inv = voigt_inverse(&membrane).ok_or_else(|| Error::Material("singular H".into()))?;
        let bending_inv = voigt_inverse(&bending).ok_or_else(|| Error::Material("singular bending tensor".into()))?;
        if voigt_min_eigenvalue(&membrane) <= 0.0 {
            return Err(Error::Material("H is not positive definite".into()));
        }
        Ok(Self { e, nu, h, membrane, bending, membrane_inv, bending_inv })
    }

    /// `H^{αβλμ}` for zero-based indices.
    pub fn h_component(&self, a: usize, b: usize, l: usize, m: usize) -> f64 {
        let v = |a: usize, b: usize| if a == b { a } else { 2 };
        self.membrane[3 * v(a, b) + v(l, m)]
    }
}

/// In-plane displacements and deflection at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub u1: ScalarField,
    pub u2: ScalarField,
    pub w: ScalarField,
}

impl DisplacementField {
    pub fn zeros(shape: GridShape) -> Self {
        Self { u1: ScalarField::zeros(shape), u2: ScalarField::zeros(shape), w: ScalarField::zeros(shape) }
    }

    pub fn from_fn(shape: GridShape, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut d = Self::zeros(shape);
        for k in 0..shape.len() {
            let (x, y) = shape.coords(k);
            let [a, b, c] = f(x, y);
            d.u1.values[k] = a;
            d.u2.values[k] = b;
            d.w.values[k] = c;
        }
        d
    }

    pub fn shape(&self) -> GridShape {
        self.w.shape()
    }

    /// Unknown vector; values on clamped nodes are dropped.
    pub fn to_dofs(&self, dofs: &DofMap) -> Result<Vec<f64>> {
        if self.u1.shape() != dofs.shape() || self.u2.shape() != dofs.shape() || self.w.shape() != dofs.shape() {
            return Err(Error::GridMismatch("displacement field"));
        }
        Ok(dofs.gather(&self.u1.values, &self.u2.values, &self.w.values))
    }

    pub fn from_dofs(dofs: &DofMap, x: &[f64]) -> Self {
        let s = dofs.shape();
        let [a, b, c] = dofs.scatter(x);
        Self {
            u1: ScalarField::from_values(s, a).expect("length"),
            u2: ScalarField::from_values(s, b).expect("length"),
            w: ScalarField::from_values(s, c).expect("length"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u1.max_abs().max(self.u2.max_abs()).max(self.w.max_abs())
    }
}

/// Distributed loads and boundary tractions.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateLoads {
    pub p: ScalarField,
    pub p1: ScalarField,
    pub p2: ScalarField,
    /// Traction values, nonzero only on traction nodes.
    pub pt: ScalarField,
    pub pt1: ScalarField,
    pub pt2: ScalarField,
}

impl PlateLoads {
    pub fn zeros(shape: GridShape) -> Self {
        let z = ScalarField::zeros(shape);
        Self { p: z.clone(), p1: z.clone(), p2: z.clone(), pt: z.clone(), pt1: z.clone(), pt2: z }
    }

    /// Transverse load only.
    pub fn transverse(p: ScalarField) -> Self {
        let mut l = Self::zeros(p.shape());
        l.p = p;
        l
    }

    fn fields(&self) -> [&ScalarField; 6] {
        [&self.p, &self.p1, &self.p2, &self.pt, &self.pt1, &self.pt2]
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for f in self.fields() {
            if f.shape() != grid.shape() {
                return Err(Error::GridMismatch("load field"));
            }
            if !f.is_finite() {
                return Err(Error::NonFinite("loads"));
            }
        }
        for t in [&self.pt, &self.pt1, &self.pt2] {
            for (k, v) in t.values.iter().enumerate() {
                if *v != 0.0 && grid.tag(k) != NodeTag::Traction {
                    let (i, j) = grid.shape().ij(k);
                    return Err(Error::Loads(format!("traction given at node ({i}, {j}) which is not on a traction edge")));
                }
            }
        }
        Ok(())
    }

    /// `sup |P|, |P_α|, |P^t|, |P^t_α|`.
    pub fn scale(&self) -> f64 {
        self.fields().iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.scale() == 0.0
    }

    pub fn negated_transverse(&self) -> Self {
        let mut l = self.clone();
        l.p = l.p.scaled(-1.0);
        l.pt = l.pt.scaled(-1.0);
        l
    }

    /// Load vector on the free unknowns: area loads with trapezoid weights
    /// `ω·√a`, tractions with one-dimensional edge weights.
    pub fn vector(&self, grid: &Grid, dofs: &DofMap, area: &[f64]) -> Vec<f64> {
        let tw = grid.traction_weights();
        let comps = [(&self.p1, &self.pt1), (&self.p2, &self.pt2), (&self.p, &self.pt)];
        let mut f = vec![0.0; dofs.ndof()];
        for (fi, &k) in dofs.node_of_free().iter().enumerate() {
            for (c, (a, t)) in comps.iter().enumerate() {
                f[3 * fi + c] = area[k] * a.values[k] + tw[k] * t.values[k];
            }
        }
        f
    }
}

/// Plate strain operators on the free unknowns.
pub fn plate_operators(grid: &Grid, dofs: &DofMap, st: &StencilSet) -> [crate::grid::LinearOp; 3] {
    let n = grid.len();
    let mut lt = OpBuilder::new(dofs, 3 * n);
    let mut lp = OpBuilder::new(dofs, 2 * n);
    let mut lk = OpBuilder::new(dofs, 3 * n);
    for k in 0..n {
        lt.add_op(3 * k, 1.0, &st.d[0], k, 0);
        lt.add_op(3 * k + 1, 1.0, &st.d[1], k, 1);
        lt.add_op(3 * k + 2, 1.0, &st.d[1], k, 0);
        lt.add_op(3 * k + 2, 1.0, &st.d[0], k, 1);
        lp.add_op(2 * k, 1.0, &st.d[0], k, 2);
        lp.add_op(2 * k + 1, 1.0, &st.d[1], k, 2);
        lk.add_op(3 * k, -1.0, &st.s[0], k, 2);
        lk.add_op(3 * k + 1, -1.0, &st.s[1], k, 2);
        lk.add_op(3 * k + 2, -2.0, &st.s[2], k, 2);
    }
    [lt.finish(), lp.finish(), lk.finish()]
}

/// A discretized plate problem.
#[derive(Clone, Debug)]
pub struct Plate {
    pub disc: Discretization,
    pub material: PlateMaterial,
    pub loads: PlateLoads,
}

impl Plate {
    pub fn new(grid: Grid, material: PlateMaterial, loads: PlateLoads) -> Result<Self> {
        loads.validate(&grid)?;
        let dofs = DofMap::new(&grid);
        let stencils = StencilSet::new(&grid);
        let [l_theta, l_phi, l_kappa] = plate_operators(&grid, &dofs, &stencils);
        let weights = grid.shape().trapezoid_weights();
        let load = loads.vector(&grid, &dofs, &weights);
        let n = grid.len();
        let disc = Discretization {
            c_mem: vec![material.membrane; n],
            c_bend: vec![material.bending; n],
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
        Ok(Self { disc, material, loads })
    }

    pub fn grid(&self) -> &Grid {
        &self.disc.grid
    }

    pub fn state(&self, u: &DisplacementField) -> Result<Vec<f64>> {
        u.to_dofs(&self.disc.dofs)
    }

    pub fn field(&self, x: &[f64]) -> DisplacementField {
        DisplacementField::from_dofs(&self.disc.dofs, x)
    }

    /// `γ(u)`, symmetric, tensorial shear.
    pub fn membrane_strain(&self, u: &DisplacementField) -> Result<TensorField2x2> {
        let s = self.disc.strains(&self.state(u)?);
        self.disc.symmetric_field(&s.gamma, true)
    }

    /// `κ(u) = −∇²w`.
    pub fn bending_strain(&self, u: &DisplacementField) -> Result<TensorField2x2> {
        let s = self.disc.strains(&self.state(u)?);
        self.disc.symmetric_field(&s.kappa, true)
    }

    pub fn energy(&self, u: &DisplacementField) -> Result<EnergyBreakdown> {
        self.disc.energy(&self.state(u)?)
    }

    /// Gradient of the discrete energy, zero on clamped nodes.
    pub fn energy_gradient(&self, u: &DisplacementField) -> Result<DisplacementField> {
        let g = self.disc.gradient(&self.state(u)?)?;
        Ok(self.field(&g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundarySpec, EdgeCondition};

    fn free_square(n: usize) -> Grid {
        Grid::new([0.0, 1.0, 0.0, 1.0], n, n, BoundarySpec::uniform(EdgeCondition::Traction)).unwrap()
    }

    #[test]
    fn material_examples() {
        let m = PlateMaterial::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!(m.h_component(0, 0, 0, 0), 1.0);
        assert_eq!(m.h_component(0, 0, 1, 1), 0.0);
        assert_eq!(m.h_component(0, 1, 0, 1), 0.5);
        let m = PlateMaterial::new(1.0, 0.3, 1.0).unwrap();
        assert!((m.h_component(0, 0, 1, 1) - 0.3296703296703297).abs() < 1e-12);
        let m = PlateMaterial::new(1.0, 0.3, 0.1).unwrap();
        for i in 0..9 {
            assert!((m.bending[i] - 0.01 / 12.0 * m.membrane[i]).abs() <= 1e-16);
        }
        assert!(PlateMaterial::new(1.0, 0.5, 1.0).is_err());
        assert!(PlateMaterial::new(1.0, -1.0, 1.0).is_err());
        assert!(PlateMaterial::new(0.0, 0.3, 1.0).is_err());
    }

    #[test]
    fn inverse_is_exact() {
        let m = PlateMaterial::new(2.0, 0.25, 0.2).unwrap();
        let a = nalgebra::Matrix3::from_row_slice(&m.membrane) * nalgebra::Matrix3::from_row_slice(&m.membrane_inv);
        assert!((a - nalgebra::Matrix3::identity()).norm() < 1e-13);
    }

    #[test]
    fn strain_examples() {
        let g = free_square(9);
        let p = Plate::new(g.clone(), PlateMaterial::new(1.0, 0.0, 1.0).unwrap(), PlateLoads::zeros(g.shape())).unwrap();
        let u = DisplacementField::from_fn(g.shape(), |x, _| [x, 0.0, 0.0]);
        let gam = p.membrane_strain(&u).unwrap();
        for k in 0..g.len() {
            assert!((gam.xx[k] - 1.0).abs() < 1e-12);
            assert!(gam.yy[k].abs() < 1e-12 && gam.xy[k].abs() < 1e-12);
        }
        assert!((p.energy(&u).unwrap().g1 - 0.5).abs() < 1e-12);
        let eps = 1e-3;
        let u = DisplacementField::from_fn(g.shape(), |x, _| [0.0, 0.0, eps * x]);
        let gam = p.membrane_strain(&u).unwrap();
        for k in 0..g.len() {
            assert!((gam.xx[k] - 0.5 * eps * eps).abs() < 1e-15);
        }
        let u = DisplacementField::from_fn(g.shape(), |x, _| [0.0, 0.0, x * x]);
        let kap = p.bending_strain(&u).unwrap();
        assert_eq!(kap.asymmetry(), 0.0);
        for k in 0..g.len() {
            assert!((kap.xx[k] + 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = Grid::unit_square(7).unwrap();
        let p = Plate::new(g.clone(), PlateMaterial::new(1.0, 0.3, 0.1).unwrap(), PlateLoads::zeros(g.shape())).unwrap();
        let e = p.energy(&DisplacementField::zeros(g.shape())).unwrap();
        assert_eq!(e, EnergyBreakdown::default());
        let gr = p.energy_gradient(&DisplacementField::zeros(g.shape())).unwrap();
        assert_eq!(gr.max_abs(), 0.0);
    }

    #[test]
    fn traction_off_edge_is_rejected() {
        let g = Grid::unit_square(5).unwrap();
        let mut l = PlateLoads::zeros(g.shape());
        l.pt.values[0] = 1.0;
        assert!(l.validate(&g).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let spec = BoundarySpec { left: EdgeCondition::Clamped, right: EdgeCondition::Traction, bottom: EdgeCondition::Clamped, top: EdgeCondition::Traction };
        let g = Grid::new([0.0, 1.0, 0.0, 1.0], 11, 9, spec).unwrap();
        let mut l = PlateLoads::transverse(g.scalar(|x, y| 1.0 + x * y));
        l.p1 = g.scalar(|x, _| x);
        l.pt = ScalarField::from_values(g.shape(), g.traction_weights().iter().map(|w| if *w > 0.0 { 0.3 } else { 0.0 }).collect()).unwrap();
        let p = Plate::new(g, PlateMaterial::new(1.0, 0.3, 0.1).unwrap(), l).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = p.disc.ndof();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gr = p.disc.gradient(&x).unwrap();
        let an = crate::linalg::dot(&gr, &d);
        let t = 1e-5;
        let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
        let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - t * b).collect();
        let fd = (p.disc.value(&xp).unwrap() - p.disc.value(&xm).unwrap()) / (2.0 * t);
        assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} {an}");
    }
}
