//! Solves a lightly loaded plate, builds the dual point at the minimizer
//! and checks the optimality conditions and the duality gap.

use kl_core::dual::{duality_gap, extract_certificate, CertifyOptions};
use kl_core::grid::Grid;
use kl_core::plate::{Plate, PlateLoads, PlateMaterial};
use kl_core::solver::{solve, Init, MinimizeOptions};

fn main() -> kl_core::Result<()> {
    let grid = Grid::unit_square(33)?;
    let p = grid.scalar(|x, y| 1e-4 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
    let plate = Plate::new(grid, PlateMaterial::new(1.0, 0.3, 0.1)?, PlateLoads::transverse(p))?;
    let opts = CertifyOptions::default();
    let gtol = 0.1 * opts.rel_tol * plate.disc.load_scale;
    let r = solve(&plate.disc, Init::Linear, &MinimizeOptions { gtol: Some(gtol), ..Default::default() })?;
    let c = extract_certificate(&plate.disc, &r.x, &opts)?;
    println!("J(u0)            = {:.12e}", r.j);
    println!("J*(v0, z0)       = {:.12e}", c.j_star.unwrap_or(f64::NAN));
    println!("residual A1, A2  = {:.2e}, {:.2e} (tol {:.1e})", c.residual_a1, c.residual_a2, c.tol);
    println!("K, lambda_min A3 = {:.3e}, {:.3e}", c.k, c.lambda_min_a3);
    println!("lambda_min A4    = {:.3e}", c.lambda_min_a4.unwrap_or(f64::NAN));
    println!("gap              = {:.2e}", c.gap.unwrap_or(f64::NAN));
    println!("verdict          = {}", c.verdict);

    // any other state has a positive gap
    let bumped: Vec<f64> = r.x.iter().enumerate().map(|(i, v)| v + 1e-3 * ((i % 7) as f64 - 3.0)).collect();
    println!("gap after a bump = {:.3e}", duality_gap(&plate.disc, &bumped, &c)?);
    Ok(())
}
