//! Minimizes the nonlinear energy of a clamped square plate under a
//! sinusoidal pressure and compares with the small-deflection solution.

use kl_core::grid::Grid;
use kl_core::plate::{Plate, PlateLoads, PlateMaterial};
use kl_core::solver::{solve, Init, MinimizeOptions};

fn main() -> kl_core::Result<()> {
    let grid = Grid::unit_square(33)?;
    let material = PlateMaterial::new(1.0, 0.3, 0.1)?;
    for eps in [1e-4, 1e-3, 1e-2, 1e-1] {
        let p = grid.scalar(|x, y| eps * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
        let plate = Plate::new(grid.clone(), material.clone(), PlateLoads::transverse(p))?;
        let lin = plate.disc.linear_solution()?;
        let r = solve(&plate.disc, Init::Linear, &MinimizeOptions { gtol: Some(1e-7 * eps), ..Default::default() })?;
        let (w, wl) = (plate.field(&r.x).w, plate.field(&lin).w);
        let k = grid.shape().index(16, 16);
        println!(
            "P = {eps:.0e}: {} iterations, J = {:.6e}, w(centre) = {:.6e} (linear {:.6e})",
            r.iterations, r.j, w.values[k], wl.values[k]
        );
    }
    Ok(())
}
