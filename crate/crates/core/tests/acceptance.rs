//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use kl_core::dual::{self, A4Method, CertifyOptions};
use kl_core::grid::{BoundarySpec, EdgeCondition, Grid, ScalarField};
use kl_core::linalg::to_dense;
use kl_core::loads::{build_t0_plate, build_t_tilde, T0Options};
use kl_core::model::Discretization;
use kl_core::plate::{Plate, PlateLoads, PlateMaterial};
use kl_core::shell::{Shell, ShellMaterial, Surface, SurfaceGeometry};
use kl_core::solver::{solve, Init, MinimizeOptions, MinimizeResult};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn sin_load(g: &Grid, eps: f64) -> ScalarField {
    g.scalar(|x, y| eps * (PI * x).sin() * (PI * y).sin())
}

fn plate(n: usize, eps: f64) -> Plate {
    let g = Grid::unit_square(n).unwrap();
    let p = sin_load(&g, eps);
    Plate::new(g, PlateMaterial::new(1.0, 0.3, 0.1).unwrap(), PlateLoads::transverse(p)).unwrap()
}

fn cylinder(n: usize, eps: f64) -> Shell {
    let g = Grid::unit_square(n).unwrap();
    let geo = SurfaceGeometry::analytic(&g, &Surface::Cylinder { r: 1.0 }).unwrap();
    let mat = ShellMaterial::new(&geo, 1.0, 0.3, 0.1).unwrap();
    let mut l = PlateLoads::transverse(sin_load(&g, eps));
    l.p1 = g.scalar(|x, y| 0.3 * eps * x * y);
    Shell::new(geo, mat, l).unwrap()
}

fn certify_solve(disc: &Discretization) -> MinimizeResult {
    let gtol = 0.1 * 1e-6 * disc.load_scale;
    solve(disc, Init::Linear, &MinimizeOptions { gtol: Some(gtol), ..Default::default() }).unwrap()
}

/// Dense `A x` for a sparse matrix.
fn dense_mul(a: &DMatrix<f64>, x: &[f64]) -> DVector<f64> {
    a * DVector::from_column_slice(x)
}

fn gradient_fd() -> Check {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = plate(17, 1e-2);
    let s = cylinder(17, 1e-2);
    for (name, disc) in [("plate", &p.disc), ("cylinder", &s.disc)] {
        for _ in 0..10 {
            let amp = rng.gen_range(0.01..0.2);
            let x: Vec<f64> = (0..disc.ndof()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
            let g = disc.gradient(&x).unwrap();
            let mut fd = vec![0.0; x.len()];
            let mut xp = x.clone();
            for i in 0..x.len() {
                let h = 1e-5 * (1.0 + x[i].abs());
                xp[i] = x[i] + h;
                let fp = disc.value(&xp).unwrap();
                xp[i] = x[i] - h;
                let fm = disc.value(&xp).unwrap();
                xp[i] = x[i];
                fd[i] = (fp - fm) / (2.0 * h);
            }
            let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            let rel = num / den;
            worst = worst.max(rel);
            ensure(rel <= 1e-6, format!("{name}: relative gradient error {rel:.3e}"))?;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("took {secs:.1} s"))?;
    Ok(format!("worst relative error {worst:.2e} over 20 states, {secs:.1} s"))
}

fn zero_gap() -> Check {
    let t = Instant::now();
    let p = plate(33, 1e-4);
    let r = certify_solve(&p.disc);
    ensure(r.converged, format!("solver: {}", r.message))?;
    let c = dual::extract_certificate(&p.disc, &r.x, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    let j = p.disc.value(&r.x).unwrap();
    let gap = c.gap.ok_or("no dual value")?;
    let tol = 1e-6 * p.disc.load_scale;
    ensure(gap.abs() <= 1e-6 * (1.0 + j.abs()), format!("gap {gap:.3e}"))?;
    ensure(c.residual_a1 <= tol && c.residual_a2 <= tol, format!("A1 {:.3e}, A2 {:.3e}", c.residual_a1, c.residual_a2))?;
    ensure(c.in_a3, "not in A3".into())?;
    let l4 = c.lambda_min_a4.unwrap_or(f64::NAN);
    ensure(l4 > 0.0, format!("lambda_min_A4 = {l4:.3e}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "J = {j:.6e}, gap = {gap:.2e}, A1 = {:.1e}, A2 = {:.1e}, lambda_A4 = {l4:.3e}, {secs:.1} s",
        c.residual_a1, c.residual_a2
    ))
}

fn weak_duality() -> Check {
    let t = Instant::now();
    let p = plate(17, 1e-2);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut duals = vec![];
    for i in 0..20 {
        let amp = 10f64.powf(-3.0 + 3.0 * i as f64 / 19.0);
        let v = dual::sample_feasible_dual(&p.disc, &mut rng, amp).map_err(|e| e.to_string())?;
        let (a1, a2) = dual::check_a1_a2(&p.disc, &v.n, &v.q).unwrap();
        ensure(a1 <= 1e-10 && a2 <= 1e-10, format!("sampled point infeasible: {a1:.2e} {a2:.2e}"))?;
        duals.push(v.dual_value);
    }
    let r = certify_solve(&p.disc);
    let c = dual::extract_certificate(&p.disc, &r.x, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    if let Some(v) = c.dual_value {
        let (a1, a2) = (c.residual_a1, c.residual_a2);
        ensure(a1 <= c.tol && a2 <= c.tol, format!("extracted point infeasible: {a1:.2e} {a2:.2e}"))?;
        duals.push(v);
    }
    let best_dual = duals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut margin = f64::INFINITY;
    for i in 0..20 {
        let sigma = if i == 0 { 0.0 } else { 10f64.powf(-6.0 + 5.0 * i as f64 / 19.0) };
        let u: Vec<f64> = r.x.iter().map(|v| v + sigma * rng.gen_range(-1.0..1.0)).collect();
        let j = p.disc.value(&u).unwrap();
        for d in &duals {
            ensure(j >= d - 1e-8 * (1.0 + j.abs()), format!("J(u) = {j:.6e} < J*(v) = {d:.6e}"))?;
        }
        margin = margin.min(j - best_dual);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.1} s"))?;
    Ok(format!("{} pairs, smallest J(u) - max J* = {margin:.3e}, {secs:.1} s", 20 * duals.len()))
}

fn suboptimality() -> Check {
    let p = plate(33, 1e-4);
    let r = certify_solve(&p.disc);
    let c = dual::extract_certificate(&p.disc, &r.x, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(c.verdict.is_certified(), format!("unperturbed: {}", c.verdict))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u: Vec<f64> = r.x.iter().map(|v| v + 1e-2 * rng.gen_range(-1.0..1.0)).collect();
    let gap = dual::duality_gap(&p.disc, &u, &c).map_err(|e| e.to_string())?;
    ensure(gap > 10.0 * c.gap_tol, format!("gap {gap:.3e} vs tolerance {:.3e}", c.gap_tol))?;
    Ok(format!("perturbed gap {gap:.3e} = {:.1e} x tolerance", gap / c.gap_tol))
}

/// Smallest `a` with `Bb w = a G w` for some `w ≠ 0`, from dense matrices.
fn buckling_oracle(disc: &Discretization) -> f64 {
    let b = to_dense(&disc.bending_stiffness());
    let g = to_dense(&disc.rotation_form(&vec![[1.0, 0.0, 0.0, 1.0]; disc.n_nodes()]));
    let idx: Vec<usize> = (0..disc.ndof()).filter(|i| i % 3 == 2).collect();
    let bw = b.select_rows(&idx).select_columns(&idx);
    let gw = g.select_rows(&idx).select_columns(&idx);
    let l = gw.cholesky().expect("rotation form is positive definite").l();
    let li = l.try_inverse().unwrap();
    let m = &li * bw * li.transpose();
    let m = 0.5 * (&m + m.transpose());
    m.symmetric_eigenvalues().min()
}

fn a4_sharpness() -> Check {
    let t = Instant::now();
    let p = plate(17, 1e-4);
    let disc = &p.disc;
    let r = certify_solve(disc);
    let opts = CertifyOptions { a4: A4Method::Dense, ..Default::default() };
    let eval = |a: f64| {
        let n = dual::compressive_membrane(disc, a);
        let q = dual::transverse_balance(disc, &n).unwrap();
        dual::evaluate_dual_point(disc, &n, &q, Some(&r.x), &opts).unwrap()
    };
    let d = 1.0 * 0.1f64.powi(3) / (12.0 * (1.0 - 0.09));
    let mut a = 100.0 * d;
    let mut c = eval(a);
    ensure(c.lambda_min_a4.unwrap() < 0.0, format!("lambda_A4 = {:.3e} at a = {a:.3e}", c.lambda_min_a4.unwrap()))?;
    ensure(c.verdict.to_string() == "not-certified: A4 failed", format!("verdict {}", c.verdict))?;
    let start = a;
    let mut halvings = 0;
    while c.lambda_min_a4.unwrap() <= 0.0 {
        a *= 0.5;
        halvings += 1;
        ensure(halvings < 40, "no sign change".into())?;
        c = eval(a);
    }
    ensure(!c.verdict.to_string().contains("A4"), format!("below buckling: {}", c.verdict))?;
    let (mut lo, mut hi) = (a, 2.0 * a);
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).lambda_min_a4.unwrap() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_cr = buckling_oracle(disc);
    ensure(lo <= a_cr && a_cr <= hi, format!("bracket [{lo:.5e}, {hi:.5e}] misses oracle {a_cr:.5e}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "start a = {start:.3e} refused, sign change after {halvings} halvings, bracket [{lo:.5e}, {hi:.5e}] holds buckling load {a_cr:.5e}, {secs:.1} s"
    ))
}

/// Max interior `|div T + P|` by central differences.
fn t_tilde_residual(n: usize) -> f64 {
    let g = Grid::unit_square(n).unwrap();
    let p1 = g.scalar(|x, y| (PI * x).cos() * (1.0 + y * y));
    let p2 = g.scalar(|x, y| (2.0 * y).sin() * (1.0 + x));
    let t = build_t_tilde(&g, &p1, &p2, None).unwrap();
    let s = g.shape();
    let (hx, hy) = (s.hx(), s.hy());
    let mut r = 0.0f64;
    for j in 1..s.ny - 1 {
        for i in 1..s.nx - 1 {
            let k = s.index(i, j);
            let (e, w, nn, so) = (s.index(i + 1, j), s.index(i - 1, j), s.index(i, j + 1), s.index(i, j - 1));
            let d1 = (t.xx[e] - t.xx[w]) / (2.0 * hx) + (t.xy[nn] - t.xy[so]) / (2.0 * hy);
            let d2 = (t.yx[e] - t.yx[w]) / (2.0 * hx) + (t.yy[nn] - t.yy[so]) / (2.0 * hy);
            r = r.max((d1 + p1.values[k]).abs()).max((d2 + p2.values[k]).abs());
        }
    }
    r
}

/// Least-norm `T` from the dense KKT system of the weak constraint
/// `Σ_j ω_j T_{λβ}(j) (D_β v)(j) = Σ ω P_λ v + Σ τ P^t_λ v` for all `v`
/// vanishing on clamped nodes.
fn kkt_oracle(g: &Grid, l: &PlateLoads) -> (Vec<f64>, f64, DMatrix<f64>, DVector<f64>) {
    let s = g.shape();
    let n = s.len();
    let (hx, hy) = (s.hx(), s.hy());
    let wx: Vec<f64> = (0..s.nx).map(|i| if i == 0 || i == s.nx - 1 { hx / 2.0 } else { hx }).collect();
    let wy: Vec<f64> = (0..s.ny).map(|j| if j == 0 || j == s.ny - 1 { hy / 2.0 } else { hy }).collect();
    let w: Vec<f64> = (0..n).map(|k| wx[k % s.nx] * wy[k / s.nx]).collect();
    // derivative of the unit vector at node `k` along axis `b`, evaluated at every node
    let deriv = |k: usize, b: usize| -> Vec<(usize, f64)> {
        let (len, h, stride, pos) =
            if b == 0 { (s.nx, hx, 1usize, k % s.nx) } else { (s.ny, hy, s.nx, k / s.nx) };
        let base = k - pos * stride;
        let mut out = vec![];
        for q in 0..len {
            let c = if q == 0 {
                [(0usize, -1.0 / h), (1, 1.0 / h)].iter().find(|(o, _)| *o == pos).map(|(_, c)| *c)
            } else if q == len - 1 {
                [(len - 2, -1.0 / h), (len - 1, 1.0 / h)].iter().find(|(o, _)| *o == pos).map(|(_, c)| *c)
            } else if pos + 1 == q {
                Some(-0.5 / h)
            } else if pos == q + 1 {
                Some(0.5 / h)
            } else {
                None
            };
            if let Some(c) = c {
                out.push((base + q * stride, c));
            }
        }
        out
    };
    let clamped = |k: usize| {
        let (i, j) = (k % s.nx, k / s.nx);
        let sp = g.spec();
        (i == 0 && sp.left == EdgeCondition::Clamped)
            || (i == s.nx - 1 && sp.right == EdgeCondition::Clamped)
            || (j == 0 && sp.bottom == EdgeCondition::Clamped)
            || (j == s.ny - 1 && sp.top == EdgeCondition::Clamped)
    };
    // one-dimensional trapezoid weights of every traction edge through `k`
    let edge_w = |k: usize| {
        let (i, j) = (k % s.nx, k / s.nx);
        if clamped(k) {
            return 0.0;
        }
        let mut t = 0.0;
        if i == 0 || i == s.nx - 1 {
            t += wy[j];
        }
        if j == 0 || j == s.ny - 1 {
            t += wx[i];
        }
        t
    };
    let free: Vec<usize> = (0..n).filter(|k| !clamped(*k)).collect();
    let m = 2 * free.len();
    let mut b = DMatrix::<f64>::zeros(m, 4 * n);
    let mut rhs = DVector::<f64>::zeros(m);
    for (fi, &k) in free.iter().enumerate() {
        for la in 0..2 {
            let row = 2 * fi + la;
            for be in 0..2 {
                for (j, c) in deriv(k, be) {
                    b[(row, 4 * j + 2 * la + be)] += w[j] * c;
                }
            }
            let (p, pt) = if la == 0 { (&l.p1, &l.pt1) } else { (&l.p2, &l.pt2) };
            rhs[row] = w[k] * p.values[k] + edge_w(k) * pt.values[k];
        }
    }
    let mw: Vec<f64> = (0..4 * n).map(|r| w[r / 4]).collect();
    let dim = 4 * n + m;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut full = DVector::<f64>::zeros(dim);
    for r in 0..4 * n {
        kkt[(r, r)] = mw[r];
    }
    for i in 0..m {
        for r in 0..4 * n {
            kkt[(r, 4 * n + i)] = -b[(i, r)];
            kkt[(4 * n + i, r)] = b[(i, r)];
        }
        full[4 * n + i] = rhs[i];
    }
    let sol = kkt.lu().solve(&full).expect("KKT system is regular");
    let x: Vec<f64> = sol.rows(0, 4 * n).iter().copied().collect();
    let norm2 = x.iter().zip(&mw).map(|(a, b)| b * a * a).sum();
    (x, norm2, b, rhs)
}

fn t_builders() -> Check {
    let rs: Vec<f64> = [17, 33, 65].iter().map(|n| t_tilde_residual(*n)).collect();
    let orders: Vec<f64> = rs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (i, r) in rs.iter().enumerate() {
        let h = 1.0 / ([17, 33, 65][i] - 1) as f64;
        ensure(*r <= 8.0 * h * h, format!("T~ residual {r:.3e} above 8 h^2"))?;
    }
    ensure(orders.iter().all(|o| *o >= 1.9), format!("observed orders {orders:?}"))?;
    let mut worst = 0.0f64;
    for (n, spec) in [
        (9, BoundarySpec::clamped()),
        (
            11,
            BoundarySpec {
                left: EdgeCondition::Clamped,
                right: EdgeCondition::Traction,
                bottom: EdgeCondition::Clamped,
                top: EdgeCondition::Traction,
            },
        ),
    ] {
        let g = Grid::new([0.0, 1.0, 0.0, 1.5], n, n, spec).unwrap();
        let mut l = PlateLoads::zeros(g.shape());
        l.p1 = g.scalar(|x, _| 1.0 + x);
        l.p2 = g.scalar(|x, y| (PI * x).sin() * y);
        if n == 11 {
            let tag = |k: usize| g.tag(k) == kl_core::grid::NodeTag::Traction;
            l.pt1 = ScalarField::from_fn(g.shape(), |_, _| 0.5);
            l.pt2 = ScalarField::from_fn(g.shape(), |_, y| y);
            for k in 0..g.len() {
                if !tag(k) {
                    l.pt1.values[k] = 0.0;
                    l.pt2.values[k] = 0.0;
                }
            }
        }
        let t = build_t0_plate(&g, &l, T0Options::default()).map_err(|e| e.to_string())?;
        let (x, norm2, b, rhs) = kkt_oracle(&g, &l);
        let lib: Vec<f64> = (0..g.len()).flat_map(|k| [t.t.xx[k], t.t.xy[k], t.t.yx[k], t.t.yy[k]]).collect();
        let res = (&b * DVector::from_column_slice(&lib) - &rhs).norm() / rhs.norm();
        let oracle_res = (&b * DVector::from_column_slice(&x) - &rhs).norm() / rhs.norm();
        let norm_err = (t.norm2 - norm2).abs() / norm2;
        let field_err = lib.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            / x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(res <= 1e-6, format!("{n}x{n}: constraint residual {res:.3e} (oracle {oracle_res:.1e})"))?;
        ensure(norm_err <= 1e-6, format!("{n}x{n}: norm error {norm_err:.3e}"))?;
        ensure(field_err <= 1e-6, format!("{n}x{n}: field error {field_err:.3e}"))?;
        worst = worst.max(res).max(norm_err).max(field_err);
    }
    Ok(format!(
        "T~ residuals {:.2e}/{:.2e}/{:.2e}, orders {:.2}/{:.2}; T0 vs KKT worst {worst:.1e}",
        rs[0], rs[1], rs[2], orders[0], orders[1]
    ))
}

fn shell_geometry() -> Check {
    let r = 1.7;
    let g = Grid::new([0.0, 1.0, 0.0, 2.0], 33, 33, BoundarySpec::clamped()).unwrap();
    let geo = SurfaceGeometry::analytic(&g, &Surface::Cylinder { r }).unwrap();
    let mut cyl = 0.0f64;
    for k in 0..g.len() {
        let (a, b) = (geo.metric[k], geo.curvature[k]);
        let e = [a[0][0] - r * r, a[0][1], a[1][0], a[1][1] - 1.0, b[0][0] + r, b[0][1], b[1][0], b[1][1]];
        cyl = e.iter().fold(cyl, |m, v| m.max(v.abs()));
    }
    ensure(cyl <= 1e-10, format!("cylinder error {cyl:.3e}"))?;
    let rs = 2.0;
    let g = Grid::new([-1.0, 1.0, 0.0, 1.5], 65, 65, BoundarySpec::clamped()).unwrap();
    let geo = SurfaceGeometry::analytic(&g, &Surface::Sphere { r: rs }).unwrap();
    let sph = (0..g.len()).map(|k| (geo.gauss_curvature(k) - 1.0 / (rs * rs)).abs()).fold(0.0, f64::max);
    ensure(sph <= 1e-6, format!("sphere Gauss curvature error {sph:.3e}"))?;
    Ok(format!("cylinder metric/curvature error {cyl:.1e}, sphere Gauss curvature error {sph:.1e}"))
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    num / den
}

fn flat_limit() -> Check {
    let g = Grid::unit_square(17).unwrap();
    let mut l = PlateLoads::transverse(sin_load(&g, 1e-3));
    l.p1 = g.scalar(|x, y| 1e-3 * x * y);
    l.p2 = g.scalar(|x, _| 1e-3 * (1.0 - x));
    let p = Plate::new(g.clone(), PlateMaterial::new(1.0, 0.3, 0.1).unwrap(), l.clone()).unwrap();
    let geo = SurfaceGeometry::analytic(&g, &Surface::Plane).unwrap();
    let sm = ShellMaterial::new(&geo, 1.0, 0.3, 0.1).unwrap();
    let s = Shell::new(geo, sm, l).unwrap();
    let (a, b) = (&p.disc, &s.disc);
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<f64> = (0..a.ndof()).map(|_| 0.05 * rng.gen_range(-1.0..1.0)).collect();
    let (sa, sb) = (a.strains(&x), b.strains(&x));
    let mut cmp = |what: &str, u: &[f64], v: &[f64]| -> Result<(), String> {
        let e = rel(u, v);
        worst = worst.max(e);
        ensure(e <= 1e-12, format!("{what}: {e:.3e}"))
    };
    cmp("theta", &sa.theta, &sb.theta)?;
    cmp("phi", &sa.phi, &sb.phi)?;
    cmp("gamma", &sa.gamma, &sb.gamma)?;
    cmp("kappa", &sa.kappa, &sb.kappa)?;
    cmp("membrane stiffness", &a.c_mem.concat(), &b.c_mem.concat())?;
    cmp("bending stiffness", &a.c_bend.concat(), &b.c_bend.concat())?;
    let (ea, eb) = (a.energy(&x).unwrap(), b.energy(&x).unwrap());
    cmp("energy", &[ea.g1, ea.g2, ea.f1, ea.j], &[eb.g1, eb.g2, eb.f1, eb.j])?;
    cmp("gradient", &a.gradient(&x).unwrap(), &b.gradient(&x).unwrap())?;
    let n: Vec<f64> = (0..3 * a.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let q: Vec<f64> = (0..2 * a.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (r1, r2) = (dual::check_a1_a2(a, &n, &q).unwrap(), dual::check_a1_a2(b, &n, &q).unwrap());
    cmp("equilibrium residuals", &[r1.0, r1.1], &[r2.0, r2.1])?;
    let (ra, rb) = (certify_solve(a), certify_solve(b));
    cmp("minimizer", &ra.x, &rb.x)?;
    let opts = CertifyOptions::default();
    let (ca, cb) = (
        dual::extract_certificate(a, &ra.x, &opts).map_err(|e| e.to_string())?,
        dual::extract_certificate(b, &rb.x, &opts).map_err(|e| e.to_string())?,
    );
    cmp("certificate N", &ca.n, &cb.n)?;
    cmp("certificate Q", &ca.q, &cb.q)?;
    cmp("certificate z", &ca.zstar, &cb.zstar)?;
    let sc = |c: &dual::DualCertificate| {
        vec![c.k, c.residual_a1, c.residual_a2, c.lambda_min_a3, c.lambda_min_a4.unwrap(), c.j_star.unwrap()]
    };
    cmp("certificate scalars", &sc(&ca), &sc(&cb))?;
    ensure(ca.verdict == cb.verdict, "verdicts differ".into())?;
    Ok(format!("worst relative difference {worst:.1e}"))
}

fn linear_limit() -> Check {
    let mut errs = vec![];
    for eps in [1e-2, 1e-3, 1e-4] {
        let p = plate(33, eps);
        let d = &p.disc;
        let r = solve(d, Init::Linear, &MinimizeOptions { gtol: Some(1e-7 * eps), ..Default::default() }).unwrap();
        ensure(r.converged, format!("eps = {eps}: {}", r.message))?;
        // dense linear solve of the small-deflection plate
        let h = to_dense(&d.linear_hessian());
        let lin = h.lu().solve(&DVector::from_column_slice(&d.load)).ok_or("singular linear plate")?;
        let check = dense_mul(&to_dense(&d.linear_hessian()), lin.as_slice()) - DVector::from_column_slice(&d.load);
        ensure(check.norm() <= 1e-10 * d.load.iter().map(|v| v * v).sum::<f64>().sqrt(), "oracle residual".into())?;
        let wn: Vec<f64> = r.x.iter().skip(2).step_by(3).copied().collect();
        let wl: Vec<f64> = lin.iter().skip(2).step_by(3).copied().collect();
        let num = wn.iter().zip(&wl).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = wl.iter().map(|a| a * a).sum::<f64>().sqrt();
        errs.push(num / den);
    }
    ensure(errs.windows(2).all(|w| w[1] < w[0]), format!("not decreasing: {errs:?}"))?;
    ensure(errs[2] <= 1e-3, format!("error {:.3e} at eps = 1e-4", errs[2]))?;
    Ok(format!("relative w error {:.2e} / {:.2e} / {:.2e}", errs[0], errs[1], errs[2]))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("case.cfg");
    std::fs::write(
        &cfg,
        "model = plate\ngrid.n = 17\nloads.P = sin-product\nloads.P.amplitude = 1e-3\nloads.P1 = gaussian\nloads.P1.amplitude = 1e-4\n",
    )
    .unwrap();
    let mut reports = vec![];
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let st = std::process::Command::new(env!("CARGO_BIN_EXE_kl"))
            .args(["certify", cfg.to_str().unwrap(), "--dump-fields", "--out", out.to_str().unwrap()])
            .env("KL_LOG", "quiet")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(st.code() == Some(0), format!("exit status {st}"))?;
        let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        let bytes: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        reports.push(bytes);
    }
    ensure(reports[0] == reports[1], "outputs differ between runs".into())?;
    Ok(format!("{} files byte-identical across two runs", reports[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("gradient vs finite differences", gradient_fd),
        ("zero duality gap", zero_gap),
        ("weak duality", weak_duality),
        ("suboptimality detection", suboptimality),
        ("A4 sharpness", a4_sharpness),
        ("load tensor builders", t_builders),
        ("shell geometry", shell_geometry),
        ("flat-limit reduction", flat_limit),
        ("linear-limit convergence", linear_limit),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
