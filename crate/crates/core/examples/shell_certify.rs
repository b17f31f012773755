//! A clamped cylindrical panel under pressure: solve, then certify with the
//! same dual machinery as the plate.

use kl_core::dual::{extract_certificate, CertifyOptions};
use kl_core::grid::Grid;
use kl_core::plate::PlateLoads;
use kl_core::shell::{Shell, ShellMaterial, Surface, SurfaceGeometry};
use kl_core::solver::{solve, Init, MinimizeOptions};

fn main() -> kl_core::Result<()> {
    let grid = Grid::unit_square(25)?;
    let geo = SurfaceGeometry::analytic(&grid, &Surface::Cylinder { r: 2.0 })?;
    let mat = ShellMaterial::new(&geo, 1.0, 0.3, 0.05)?;
    for eps in [1e-5, 1e-4, 1e-3] {
        let p = grid.scalar(|x, y| eps * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
        let shell = Shell::new(geo.clone(), mat.clone(), PlateLoads::transverse(p))?;
        let opts = CertifyOptions::default();
        let gtol = 0.1 * opts.rel_tol * shell.disc.load_scale;
        let r = solve(&shell.disc, Init::Linear, &MinimizeOptions { gtol: Some(gtol), ..Default::default() })?;
        let c = extract_certificate(&shell.disc, &r.x, &opts)?;
        println!(
            "P = {eps:.0e}: J = {:.6e}, gap = {:.1e}, lambda_min A4 = {:.3e}, {}",
            r.j,
            c.gap.unwrap_or(f64::NAN),
            c.lambda_min_a4.unwrap_or(f64::NAN),
            c.verdict
        );
    }
    Ok(())
}
