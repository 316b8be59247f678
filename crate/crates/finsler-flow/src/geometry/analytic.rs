use super::{ChartDomain, ChartPoint, FinslerStructure, SharedStructure, StructureKind, TangentVector};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use std::fmt::Debug;

/// A closed-form F²(x, y), written once and evaluated on any [`Scalar`].
pub trait Formula: Send + Sync + Debug {
    fn name(&self) -> String;
    fn f2<S: Scalar>(&self, x: [S; 2], y: [S; 2]) -> S;
    fn is_riemannian(&self) -> bool {
        false
    }
    fn domain(&self) -> ChartDomain {
        ChartDomain::PLANE
    }
}

/// Analytic structure: jets come from evaluating the formula on [`Jet`]s,
/// so every derivative is exact up to rounding.
#[derive(Debug, Clone)]
pub struct Analytic<T: Formula>(pub T);

impl<T: Formula> FinslerStructure for Analytic<T> {
    fn name(&self) -> String {
        self.0.name()
    }
    fn kind(&self) -> StructureKind {
        StructureKind::Analytic
    }
    fn domain(&self) -> ChartDomain {
        self.0.domain()
    }
    fn f2_jet(&self, x: ChartPoint, y: TangentVector) -> Result<Jet> {
        let xs = [Jet::variable(0, x.x1), Jet::variable(1, x.x2)];
        let ys = [Jet::variable(2, y.y1), Jet::variable(3, y.y2)];
        Ok(self.0.f2(xs, ys))
    }
    fn f2(&self, x: ChartPoint, y: TangentVector) -> Result<f64> {
        Ok(self.0.f2(x.arr(), y.arr()))
    }
    fn is_riemannian(&self) -> bool {
        self.0.is_riemannian()
    }
}

/// F² multiplied by a positive constant.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub inner: SharedStructure,
    pub factor: f64,
}

impl FinslerStructure for Scaled {
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.inner.name())
    }
    fn kind(&self) -> StructureKind {
        self.inner.kind()
    }
    fn domain(&self) -> ChartDomain {
        self.inner.domain()
    }
    fn f2_jet(&self, x: ChartPoint, y: TangentVector) -> Result<Jet> {
        Ok(self.inner.f2_jet(x, y)?.scale(self.factor))
    }
    fn f2(&self, x: ChartPoint, y: TangentVector) -> Result<f64> {
        Ok(self.inner.f2(x, y)? * self.factor)
    }
    fn is_riemannian(&self) -> bool {
        self.inner.is_riemannian()
    }
}

/// x ↦ A x + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineMap {
    pub fn scaling(s: f64) -> Self {
        AffineMap { a: [[s, 0.0], [0.0, s]], b: [0.0; 2] }
    }
    pub fn translation(b: [f64; 2]) -> Self {
        AffineMap { a: [[1.0, 0.0], [0.0, 1.0]], b }
    }
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.a[0][0] * x[0] + self.a[0][1] * x[1] + self.b[0],
            self.a[1][0] * x[0] + self.a[1][1] * x[1] + self.b[1],
        ]
    }
    pub fn push(&self, y: [f64; 2]) -> [f64; 2] {
        [self.a[0][0] * y[0] + self.a[0][1] * y[1], self.a[1][0] * y[0] + self.a[1][1] * y[1]]
    }
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }
}

/// (φ*F̃²)(x, y) = F̃²(φ(x), Dφ·y) for an affine φ, with exact jets.
#[derive(Debug, Clone)]
pub struct Pullback {
    pub inner: SharedStructure,
    pub map: AffineMap,
}

impl Pullback {
    pub fn new(inner: SharedStructure, map: AffineMap) -> Result<Self> {
        let det = map.det();
        if !(det > 0.0) {
            return Err(Error::DegeneratePullback { det, node: [0, 0] });
        }
        Ok(Pullback { inner, map })
    }
}

impl FinslerStructure for Pullback {
    fn name(&self) -> String {
        format!("pullback({})", self.inner.name())
    }
    fn kind(&self) -> StructureKind {
        self.inner.kind()
    }
    fn domain(&self) -> ChartDomain {
        ChartDomain::PLANE
    }
    fn f2_jet(&self, x: ChartPoint, y: TangentVector) -> Result<Jet> {
        let (px, py) = self.mapped(x, y)?;
        let inner = self.inner.f2_jet(px, py)?;
        let a = self.map.a;
        let m = [
            [a[0][0], a[0][1], 0.0, 0.0],
            [a[1][0], a[1][1], 0.0, 0.0],
            [0.0, 0.0, a[0][0], a[0][1]],
            [0.0, 0.0, a[1][0], a[1][1]],
        ];
        Ok(inner.linear_substitute(m))
    }
    fn f2(&self, x: ChartPoint, y: TangentVector) -> Result<f64> {
        let (px, py) = self.mapped(x, y)?;
        self.inner.f2(px, py)
    }
    fn is_riemannian(&self) -> bool {
        self.inner.is_riemannian()
    }
}

impl Pullback {
    fn mapped(&self, x: ChartPoint, y: TangentVector) -> Result<(ChartPoint, TangentVector)> {
        let p = self.map.apply(x.arr());
        let q = self.map.push(y.arr());
        let px = self.inner.domain().admit(ChartPoint::new(p[0], p[1]))?;
        Ok((px, TangentVector::new(q[0], q[1])))
    }
}
