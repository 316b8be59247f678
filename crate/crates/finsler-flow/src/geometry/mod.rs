//! Pointwise geometry of a Finsler surface: everything from g_ij to the Ricci
//! scalar, computed from the jet of F² at one `(x, y)`.
//!
//! Index conventions for the arrays in [`GeometryJet`]:
//! - `cartan[i][j][k]` = C_ijk = ∂g_ij/∂y^k (no ½ factor)
//! - `nonlinear[j][i]` = N^j_i = ∂G^j/∂y^i, with G^i = ¼g^{ih}(F²_{y^h x^j}y^j − F²_{x^h})
//!   (the normalization under which y^j R_j^i_km y^m / F² reproduces R^i_k)
//! - `formal[i][j][k]` = γ^i_jk, `chern[i][j][k]` = Γ^i_jk
//! - `hh[j][i][k][l]` = R_j^i_kl
//! - `reduced[i][k]` = R^i_k

mod analytic;
mod kernel;

pub use analytic::{AffineMap, Analytic, Formula, Pullback, Scaled};
pub use kernel::{GeometryJet, Pipeline, DEGENERACY};

use crate::error::{Error, Result};
use crate::jet::Jet;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::sync::Arc;

pub type Mat2 = [[f64; 2]; 2];
pub type Tensor3 = [[[f64; 2]; 2]; 2];
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x1: f64,
    pub x2: f64,
}

impl ChartPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        ChartPoint { x1, x2 }
    }
    pub fn arr(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub y1: f64,
    pub y2: f64,
}

impl TangentVector {
    pub fn new(y1: f64, y2: f64) -> Self {
        TangentVector { y1, y2 }
    }
    pub fn arr(&self) -> [f64; 2] {
        [self.y1, self.y2]
    }
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        TangentVector { y1: c, y2: s }
    }
    pub fn scaled(&self, l: f64) -> Self {
        TangentVector { y1: self.y1 * l, y2: self.y2 * l }
    }
    pub fn norm(&self) -> f64 {
        self.y1.hypot(self.y2)
    }
    pub fn check(&self) -> Result<()> {
        if !(self.y1.is_finite() && self.y2.is_finite()) || (self.y1 == 0.0 && self.y2 == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Periodic,
    #[default]
    Pinned,
}

/// Where a structure may be evaluated. `bounds == None` means the whole plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartDomain {
    pub bounds: Option<[[f64; 2]; 2]>,
    pub boundary: BoundaryMode,
}

impl ChartDomain {
    pub const PLANE: ChartDomain = ChartDomain { bounds: None, boundary: BoundaryMode::Pinned };

    pub fn periodic(bounds: [[f64; 2]; 2]) -> Self {
        ChartDomain { bounds: Some(bounds), boundary: BoundaryMode::Periodic }
    }

    pub fn pinned(bounds: [[f64; 2]; 2]) -> Self {
        ChartDomain { bounds: Some(bounds), boundary: BoundaryMode::Pinned }
    }

    /// Validate `x` and reduce it into the fundamental domain when periodic.
    pub fn admit(&self, x: ChartPoint) -> Result<ChartPoint> {
        if !(x.x1.is_finite() && x.x2.is_finite()) {
            return Err(Error::OutOfChart { x1: x.x1, x2: x.x2 });
        }
        let Some(b) = self.bounds else { return Ok(x) };
        let mut c = x.arr();
        for a in 0..2 {
            let (lo, hi) = (b[a][0], b[a][1]);
            match self.boundary {
                BoundaryMode::Periodic => c[a] = lo + (c[a] - lo).rem_euclid(hi - lo),
                BoundaryMode::Pinned => {
                    let slack = 1e-12 * (hi - lo);
                    if c[a] < lo - slack || c[a] > hi + slack {
                        return Err(Error::OutOfChart { x1: x.x1, x2: x.x2 });
                    }
                }
            }
        }
        Ok(ChartPoint::new(c[0], c[1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureKind {
    Analytic,
    GridSampled,
}

/// A Finsler structure on a chart, known through the jets of F².
///
/// `f2_jet` returns the Taylor expansion of F² around `(x, y)` in the
/// variables `(x1, x2, y1, y2)`, truncated to x-order 2 and total order 4.
pub trait FinslerStructure: Send + Sync + Debug {
    fn name(&self) -> String;
    fn kind(&self) -> StructureKind;
    fn domain(&self) -> ChartDomain;
    fn f2_jet(&self, x: ChartPoint, y: TangentVector) -> Result<Jet>;

    /// F² at a point; overridden where cheaper than a full jet.
    fn f2(&self, x: ChartPoint, y: TangentVector) -> Result<f64> {
        Ok(self.f2_jet(x, y)?.value())
    }

    /// True when F² is quadratic in y (a Riemannian metric).
    fn is_riemannian(&self) -> bool {
        false
    }
}

pub type SharedStructure = Arc<dyn FinslerStructure>;

fn jet_at(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Jet> {
    y.check()?;
    let x = s.domain().admit(x)?;
    s.f2_jet(x, y)
}

pub fn eval_f(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<f64> {
    y.check()?;
    let x = s.domain().admit(x)?;
    let f2 = s.f2(x, y)?;
    if !(f2 > 0.0) {
        return Err(Error::DegenerateMetric { min_eig: f2, node: None });
    }
    Ok(f2.sqrt())
}

/// Full pipeline at one point.
pub fn geometry_jet(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<GeometryJet> {
    GeometryJet::from_jet(&jet_at(s, x, y)?, x, y)
}

pub fn metric_tensor(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Mat2> {
    let p = Pipeline::new(&jet_at(s, x, y)?, y)?;
    Ok(p.metric())
}

pub fn cartan_tensor(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Tensor3> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.cartan())
}

pub fn spray_coefficients(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<[f64; 2]> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.spray())
}

pub fn nonlinear_connection(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Mat2> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.nonlinear())
}

pub fn chern_connection(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Tensor3> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.chern())
}

pub fn chern_hh_curvature(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Tensor4> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.hh_curvature())
}

pub fn reduced_curvature(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<Mat2> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.reduced())
}

pub fn ricci_scalar(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<f64> {
    Ok(Pipeline::new(&jet_at(s, x, y)?, y)?.ricci())
}

/// Smallest eigenvalue of a symmetric 2×2 matrix.
pub fn min_eig(m: &Mat2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let d = (m[0][0] - m[1][1]).hypot(2.0 * m[0][1]);
    0.5 * (tr - d)
}

/// Largest eigenvalue of a symmetric 2×2 matrix.
pub fn max_eig(m: &Mat2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let d = (m[0][0] - m[1][1]).hypot(2.0 * m[0][1]);
    0.5 * (tr + d)
}

pub fn inverse(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}
