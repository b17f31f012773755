//! The reduced functional along random rays, with the least-norm load
//! tensor as membrane prestress.

use kl_core::grid::Grid;
use kl_core::loads::{build_t0_plate, T0Options};
use kl_core::plate::{DisplacementField, Plate, PlateLoads, PlateMaterial};
use kl_core::solver::coercivity_probe;

fn main() -> kl_core::Result<()> {
    let g = Grid::unit_square(17)?;
    let mut loads = PlateLoads::transverse(g.scalar(|_, _| 1e-3));
    loads.p1 = g.scalar(|x, _| 0.5 - x);
    let plate = Plate::new(g.clone(), PlateMaterial::new(1.0, 0.3, 0.1)?, loads.clone())?;
    let t0 = build_t0_plate(&g, &loads, T0Options::default())?;
    let pi = std::f64::consts::PI;
    let dirs: Vec<DisplacementField> = (1..=3)
        .map(|m| DisplacementField::from_fn(g.shape(), move |x, y| [0.0, 0.0, (m as f64 * pi * x).sin() * (pi * y).sin()]))
        .collect();
    let t = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let table = coercivity_probe(&plate.disc, None, &t0.t, &dirs, &t)?;
    for (i, row) in table.values.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:+.3e}")).collect();
        println!("direction {}: {}", i + 1, cells.join("  "));
    }
    println!("growing along every sampled ray: {}", table.coercive_along_sample);
    Ok(())
}
