//! Tensor fields balancing the in-plane loads: the integrated field T~ and
//! the least-norm field T0.

use kl_core::grid::{div_tensor, BoundarySpec, EdgeCondition, Grid};
use kl_core::loads::{build_t0_plate, build_t_tilde, T0Options};
use kl_core::plate::PlateLoads;

fn main() -> kl_core::Result<()> {
    let pi = std::f64::consts::PI;
    for n in [17, 33, 65] {
        let g = Grid::unit_square(n)?;
        let p1 = g.scalar(|x, y| (pi * x).cos() * (1.0 + y));
        let p2 = g.zeros();
        let t = build_t_tilde(&g, &p1, &p2, None)?;
        let d = div_tensor(&g, &t)?;
        let s = g.shape();
        let mut r = 0.0f64;
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                let k = s.index(i, j);
                r = r.max((d.x[k] + p1.values[k]).abs());
            }
        }
        println!("T~ on {n}x{n}: interior |div T + P| = {r:.3e}");
    }

    let spec = BoundarySpec { right: EdgeCondition::Traction, ..BoundarySpec::clamped() };
    let g = Grid::new([0.0, 2.0, 0.0, 1.0], 33, 17, spec)?;
    let mut loads = PlateLoads::zeros(g.shape());
    loads.p1 = g.scalar(|_, _| 1.0);
    for symmetric in [false, true] {
        let t0 = build_t0_plate(&g, &loads, T0Options { symmetric })?;
        println!(
            "T0 (symmetric = {symmetric}): |T|^2 = {:.6e}, residual = {:.1e}, asymmetry = {:.3e}",
            t0.norm2,
            t0.residual,
            t0.t.asymmetry()
        );
    }
    Ok(())
}
