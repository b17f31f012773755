//! Samples feasible dual points and shows that every one bounds the
//! energy of every state from below.

use kl_core::dual::{sample_feasible_dual};
use kl_core::grid::Grid;
use kl_core::plate::{Plate, PlateLoads, PlateMaterial};
use kl_core::solver::{solve, Init, MinimizeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> kl_core::Result<()> {
    let grid = Grid::unit_square(17)?;
    let p = grid.scalar(|x, y| 1e-2 * x * (1.0 - x) * y * (1.0 - y) * 16.0);
    let plate = Plate::new(grid, PlateMaterial::new(1.0, 0.3, 0.1)?, PlateLoads::transverse(p))?;
    let r = solve(&plate.disc, Init::Linear, &MinimizeOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut best = f64::NEG_INFINITY;
    for i in 0..10 {
        let v = sample_feasible_dual(&plate.disc, &mut rng, 10f64.powi(-(i % 4)))?;
        best = best.max(v.dual_value);
        println!("sample {i}: K = {:.3e}, lambda_min A4 = {:.3e}, J~* = {:.6e}", v.k, v.lambda_min_a4, v.dual_value);
    }
    for s in [0.0, 1e-4, 1e-3, 1e-2] {
        let u: Vec<f64> = r.x.iter().map(|v| v + s * rng.gen_range(-1.0..1.0)).collect();
        println!("noise {s:.0e}: J(u) = {:.6e} >= {best:.6e}", plate.disc.value(&u)?);
    }
    Ok(())
}
