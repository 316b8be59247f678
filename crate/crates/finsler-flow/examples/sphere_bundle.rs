//! Sample a structure on the sphere-bundle grid, run the monitors, and read
//! the curvature back from the samples alone.
use finsler_flow::geometry::{ricci_scalar, BoundaryMode};
use finsler_flow::reference::{catalog, params};
use finsler_flow::sphere_bundle::{
    ellipticity_monitor, integrability_residual, metric_field, metric_field_spectral, FieldOnSM, GridSpec, GridStructure,
    SphereBundleGrid,
};
use std::sync::Arc;

fn main() -> finsler_flow::Result<()> {
    let grid = Arc::new(SphereBundleGrid::new(GridSpec {
        nx1: 17,
        nx2: 17,
        bounds: [[-1.0, 1.0]; 2],
        boundary: BoundaryMode::Pinned,
        ntheta: 64,
    })?);
    for (name, p) in [("round_sphere", params(&[])), ("conformal_randers", params(&[("b", 0.4)]))] {
        let s = catalog(name, &p)?;
        let phi = FieldOnSM::sample(grid.clone(), s.as_ref())?;
        let analytic = metric_field(&grid, s.as_ref())?;
        let spectral = metric_field_spectral(&phi);
        println!("{name}:");
        println!("  min eigenvalue of g (analytic jets):   {:.6}", ellipticity_monitor(&analytic));
        println!("  min eigenvalue of g (fiber spectrum):  {:.6}", ellipticity_monitor(&spectral));
        println!("  integrability residual (fiber spectrum): {:.2e}", integrability_residual(&spectral));

        // curvature from grid differences of the samples vs the closed form
        let sampled = GridStructure::from_field(&phi)?;
        let mut worst: f64 = 0.0;
        for k in 0..grid.len() {
            let (i1, i2, it) = grid.unflatten(k);
            if grid.boundary_distance(i1, i2) >= 3 {
                let (x, y) = (grid.point(i1, i2), grid.direction(it));
                worst = worst.max((ricci_scalar(&sampled, x, y)? - ricci_scalar(s.as_ref(), x, y)?).abs());
            }
        }
        println!("  max |Ric(grid) - Ric(analytic)| away from the ring: {worst:.2e}\n");
    }
    Ok(())
}
