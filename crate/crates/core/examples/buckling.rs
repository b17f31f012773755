//! The global-positivity condition A4 under uniform biaxial compression.
//! It fails exactly above the buckling load of the clamped plate.

use kl_core::dual::{compressive_membrane, transverse_balance, evaluate_dual_point, CertifyOptions};
use kl_core::grid::Grid;
use kl_core::plate::{Plate, PlateLoads, PlateMaterial};

fn main() -> kl_core::Result<()> {
    let grid = Grid::unit_square(17)?;
    let plate = Plate::new(grid.clone(), PlateMaterial::new(1.0, 0.3, 0.1)?, PlateLoads::zeros(grid.shape()))?;
    let disc = &plate.disc;
    let x = vec![0.0; disc.ndof()];
    let d = 0.1f64.powi(3) / (12.0 * (1.0 - 0.09));
    println!("bending stiffness D = {d:.4e}");
    for f in [10.0, 30.0, 50.0, 52.0, 53.0, 55.0, 80.0] {
        let n = compressive_membrane(disc, f * d);
        let q = transverse_balance(disc, &n)?;
        let c = evaluate_dual_point(disc, &n, &q, Some(&x), &CertifyOptions::default())?;
        println!("N = -{f:>4} D: lambda_min A4 = {:+.4e}  {}", c.lambda_min_a4.unwrap(), c.verdict);
    }
    Ok(())
}
