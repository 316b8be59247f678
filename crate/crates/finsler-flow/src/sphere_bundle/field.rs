use super::SphereBundleGrid;
use crate::error::{Error, Result};
use crate::geometry::{eval_f, ChartPoint, FinslerStructure, TangentVector};
use rayon::prelude::*;
use std::sync::Arc;

/// Scalar values on the (x¹, x², θ) lattice, θ fastest.
#[derive(Clone, Debug)]
pub struct FieldOnSM {
    pub grid: Arc<SphereBundleGrid>,
    pub values: Vec<f64>,
}

impl PartialEq for FieldOnSM {
    fn eq(&self, other: &Self) -> bool {
        self.grid.spec == other.grid.spec && self.values == other.values
    }
}

impl FieldOnSM {
    pub fn new(grid: Arc<SphereBundleGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!("field has {} values, grid needs {}", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (a, b, c) = grid.unflatten(k);
            return Err(Error::InvalidParams(format!("non-finite value at node ({a}, {b}, {c})")));
        }
        Ok(FieldOnSM { grid, values })
    }

    pub fn constant(grid: Arc<SphereBundleGrid>, v: f64) -> Self {
        let n = grid.len();
        FieldOnSM { grid, values: vec![v; n] }
    }

    pub fn from_fn(grid: Arc<SphereBundleGrid>, f: impl Fn(usize, usize, usize) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (a, b, c) = grid.unflatten(k);
                f(a, b, c)
            })
            .collect();
        FieldOnSM { grid, values }
    }

    /// φ = F restricted to the unit circle of the chart, at every node.
    pub fn sample(grid: Arc<SphereBundleGrid>, s: &dyn FinslerStructure) -> Result<Self> {
        let values: Result<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (a, b, c) = grid.unflatten(k);
                eval_f(s, grid.point(a, b), grid.direction(c))
            })
            .collect();
        FieldOnSM::new(grid, values?)
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, it: usize) -> f64 {
        self.values[self.grid.idx(i1, i2, it)]
    }

    /// Tensor-product cubic interpolation: Lagrange in x, periodic in θ.
    pub fn interpolate(&self, x: ChartPoint, theta: f64) -> Result<f64> {
        let x = self.grid.domain().admit(x)?;
        Ok(interpolate_values(&self.grid, &self.values, x, theta))
    }

    /// r·φ(x, θ(y)) — the 1-homogeneous extension off the unit circle.
    pub fn polar_extend(&self, x: ChartPoint, y: TangentVector) -> Result<f64> {
        y.check()?;
        let r = y.norm();
        Ok(r * self.interpolate(x, y.y2.atan2(y.y1))?)
    }

    pub fn max_abs_diff(&self, other: &FieldOnSM) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn interpolate_values(grid: &SphereBundleGrid, values: &[f64], x: ChartPoint, theta: f64) -> f64 {
    let (i1, w1) = grid.x_weights(0, x.x1);
    let (i2, w2) = grid.x_weights(1, x.x2);
    let (it, wt) = grid.theta_weights(theta);
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let wab = w1[a] * w2[b];
            if wab == 0.0 {
                continue;
            }
            let base = grid.xnode(i1[a], i2[b]) * grid.ntheta();
            let mut t = 0.0;
            for c in 0..4 {
                t += wt[c] * values[base + it[c]];
            }
            s += wab * t;
        }
    }
    s
}
