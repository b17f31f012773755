//! Metric, curvature and Gauss curvature of the built-in surfaces, and a
//! sampled surface read back from positions.

use kl_core::grid::{BoundarySpec, Grid};
use kl_core::shell::{Parametrization, Surface, SurfaceGeometry};

fn main() -> kl_core::Result<()> {
    let g = Grid::new([-0.8, 0.8, 0.0, 1.2], 33, 33, BoundarySpec::clamped())?;
    for s in [Surface::Plane, Surface::Cylinder { r: 2.0 }, Surface::Sphere { r: 2.0 }, Surface::Paraboloid { a: 0.5, b: -0.25 }] {
        let geo = SurfaceGeometry::analytic(&g, &s)?;
        let k = g.shape().index(16, 16);
        println!(
            "{s:?}: a = {:?}, b = {:?}, K = {:.6}, |a a^-1 - I| = {:.1e}",
            geo.metric[k],
            geo.curvature[k],
            geo.gauss_curvature(k),
            geo.metric_inverse_error()
        );
    }
    let sphere = Surface::Sphere { r: 2.0 };
    let pos: Vec<[f64; 3]> = (0..g.len())
        .map(|k| {
            let (x, y) = g.shape().coords(k);
            sphere.point(x, y).r
        })
        .collect();
    let geo = SurfaceGeometry::sampled(&g, &pos)?;
    let k = g.shape().index(16, 16);
    println!("sampled sphere: K = {:.6} (exact 0.25)", geo.gauss_curvature(k));
    Ok(())
}
