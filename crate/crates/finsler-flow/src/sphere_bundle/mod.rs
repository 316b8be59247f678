//! The sphere bundle SM as an (x¹, x², θ) lattice, fields on it, grid-sampled
//! structures, the Berwald frame, and lattice-wide monitors.

mod field;
mod frame;
mod grid;
mod monitor;
mod sampled;

pub use field::FieldOnSM;
pub use frame::{berwald_frame, BerwaldFrame};
pub use grid::{fornberg, GridSpec, SphereBundleGrid, Stencil};
pub use monitor::{
    cartan_field, ellipticity_monitor, integrability_residual, metric_field_spectral, symmetry_defect, MetricField,
    ThetaSpectral,
};
pub use sampled::{rescale_fiber, GridStructure, Sampler};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMode, FinslerStructure, Pipeline};
use std::path::Path;
use std::sync::Arc;

/// g at every node computed through the jet pipeline of `s`.
pub fn metric_field(grid: &Arc<SphereBundleGrid>, s: &dyn FinslerStructure) -> Result<MetricField> {
    let mut g = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (a, b, c) = grid.unflatten(k);
        let y = grid.direction(c);
        let p = Pipeline::with_threshold(&s.f2_jet(grid.point(a, b), y)?, y, f64::NEG_INFINITY)
            .map_err(|e| e.with_node([a, b, c]))?;
        g.push(p.metric());
    }
    Ok(MetricField { grid: grid.clone(), g })
}

/// Read the last time slice of a snapshot CSV as a grid-sampled structure.
/// The lattice is reconstructed from the index and coordinate columns.
pub fn load_snapshot_structure(path: &Path, periodic: bool) -> Result<GridStructure> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows: Vec<(f64, usize, usize, usize, f64, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Io(format!("short row in {}", path.display())))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        };
        rows.push((f(0)?, f(1)? as usize, f(2)? as usize, f(3)? as usize, f(4)?, f(5)?, f(7)?));
    }
    let t_last = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    rows.retain(|r| r.0 == t_last);
    if rows.is_empty() {
        return Err(Error::Io(format!("{} holds no snapshot rows", path.display())));
    }
    let n1 = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let n2 = rows.iter().map(|r| r.2).max().unwrap() + 1;
    let nt = rows.iter().map(|r| r.3).max().unwrap() + 1;
    let axis = |sel: fn(&(f64, usize, usize, usize, f64, f64, f64)) -> (usize, f64), n: usize| {
        let lo = rows.iter().map(&sel).find(|p| p.0 == 0).map(|p| p.1).unwrap_or(0.0);
        let hi = rows.iter().map(&sel).find(|p| p.0 == n - 1).map(|p| p.1).unwrap_or(1.0);
        if periodic { [lo, hi + (hi - lo) / (n - 1) as f64] } else { [lo, hi] }
    };
    let bounds = [axis(|r| (r.1, r.4), n1), axis(|r| (r.2, r.5), n2)];
    let spec = GridSpec {
        nx1: n1,
        nx2: n2,
        bounds,
        boundary: if periodic { BoundaryMode::Periodic } else { BoundaryMode::Pinned },
        ntheta: nt,
    };
    let grid = Arc::new(SphereBundleGrid::new(spec)?);
    let mut values = vec![f64::NAN; grid.len()];
    for r in &rows {
        values[grid.idx(r.1, r.2, r.3)] = r.6;
    }
    let field = FieldOnSM::new(grid, values)?;
    let mut s = GridStructure::from_field(&field)?;
    s.label = format!("grid_sampled({})", path.display());
    Ok(s)
}
