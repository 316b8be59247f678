//! Structure catalog, closed-form flow solutions, and an independent Gaussian
//! curvature oracle for Riemannian metrics.

use crate::error::{Error, Result};
use crate::geometry::{
    Analytic, ChartDomain, ChartPoint, FinslerStructure, Formula, Mat2, Scaled, SharedStructure,
};
use crate::jet::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};
use std::sync::Arc;

fn norm2<S: Scalar>(v: [S; 2]) -> S {
    v[0] * v[0] + v[1] * v[1]
}

#[derive(Debug, Clone, Copy)]
pub struct Euclidean;

impl Formula for Euclidean {
    fn name(&self) -> String {
        "euclidean".into()
    }
    fn f2<S: Scalar>(&self, _x: [S; 2], y: [S; 2]) -> S {
        norm2(y)
    }
    fn is_riemannian(&self) -> bool {
        true
    }
}

/// F = |y| + b·y, x-independent (locally Minkowski), needs |b| < 1.
#[derive(Debug, Clone, Copy)]
pub struct RandersFlat {
    pub b: [f64; 2],
}

impl Formula for RandersFlat {
    fn name(&self) -> String {
        "randers_flat".into()
    }
    fn f2<S: Scalar>(&self, _x: [S; 2], y: [S; 2]) -> S {
        let f = norm2(y).sqrt() + y[0] * self.b[0] + y[1] * self.b[1];
        f * f
    }
}

/// Unit sphere in the stereographic chart: a = 4/(1+|x|²)² δ.
#[derive(Debug, Clone, Copy)]
pub struct RoundSphere;

impl Formula for RoundSphere {
    fn name(&self) -> String {
        "round_sphere".into()
    }
    fn f2<S: Scalar>(&self, x: [S; 2], y: [S; 2]) -> S {
        let d = norm2(x) + 1.0;
        norm2(y) * 4.0 / (d * d)
    }
    fn is_riemannian(&self) -> bool {
        true
    }
}

/// Rosenau metric at time t < 0.
#[derive(Debug, Clone, Copy)]
pub struct Rosenau {
    pub t: f64,
}

impl Formula for Rosenau {
    fn name(&self) -> String {
        "rosenau".into()
    }
    fn f2<S: Scalar>(&self, x: [S; 2], y: [S; 2]) -> S {
        let s = -self.t;
        let r2 = norm2(x);
        let d = r2 * r2 + r2 * (2.0 * s.cosh()) + 1.0;
        norm2(y) * (8.0 * s.sinh()) / d
    }
    fn is_riemannian(&self) -> bool {
        true
    }
}

/// (1 + ε cos x¹ cos x²) δ on the periodic square [0, 2π)².
#[derive(Debug, Clone, Copy)]
pub struct TorusBump {
    pub eps: f64,
}

impl Formula for TorusBump {
    fn name(&self) -> String {
        "torus_bump".into()
    }
    fn f2<S: Scalar>(&self, x: [S; 2], y: [S; 2]) -> S {
        norm2(y) * (x[0].cos() * x[1].cos() * self.eps + 1.0)
    }
    fn is_riemannian(&self) -> bool {
        true
    }
    fn domain(&self) -> ChartDomain {
        ChartDomain::periodic([[0.0, 2.0 * PI], [0.0, 2.0 * PI]])
    }
}

/// Torus of revolution, (R + r cos x²)²(dx¹)² + r²(dx²)², on [0, 2π)².
#[derive(Debug, Clone, Copy)]
pub struct RoundTorus {
    pub big: f64,
    pub small: f64,
}

impl Formula for RoundTorus {
    fn name(&self) -> String {
        "round_torus".into()
    }
    fn f2<S: Scalar>(&self, x: [S; 2], y: [S; 2]) -> S {
        let a = x[1].cos() * self.small + self.big;
        a * a * y[0] * y[0] + y[1] * y[1] * (self.small * self.small)
    }
    fn is_riemannian(&self) -> bool {
        true
    }
    fn domain(&self) -> ChartDomain {
        ChartDomain::periodic([[0.0, 2.0 * PI], [0.0, 2.0 * PI]])
    }
}

/// Randers norm rescaled by the sphere's conformal factor:
/// F = 2/(1+|x|²)·(|y| + b y¹). Genuinely Finsler and x-dependent.
#[derive(Debug, Clone, Copy)]
pub struct ConformalRanders {
    pub b: f64,
}

impl Formula for ConformalRanders {
    fn name(&self) -> String {
        "conformal_randers".into()
    }
    fn f2<S: Scalar>(&self, x: [S; 2], y: [S; 2]) -> S {
        let d = norm2(x) + 1.0;
        let f = norm2(y).sqrt() + y[0] * self.b;
        f * f * 4.0 / (d * d)
    }
}

/// Catalog parameter: a number or (for `grid_sampled`) a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

pub type Params = BTreeMap<String, Param>;

fn num(params: &Params, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(Param::Num(v)) if v.is_finite() => Ok(*v),
        Some(_) => Err(Error::InvalidParams(format!("`{key}` must be a finite number"))),
        None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`"))),
    }
}

fn only(params: &Params, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidParams(format!("unexpected parameter `{k}`")));
        }
    }
    Ok(())
}

/// Names accepted by [`catalog`].
pub const CATALOG: &[&str] =
    &["euclidean", "randers_flat", "round_sphere", "rosenau", "torus_bump", "round_torus", "conformal_randers", "grid_sampled"];

pub fn catalog(name: &str, params: &Params) -> Result<SharedStructure> {
    let s: SharedStructure = match name {
        "euclidean" => {
            only(params, &[])?;
            Arc::new(Analytic(Euclidean))
        }
        "randers_flat" => {
            only(params, &["b", "b2"])?;
            let b = [num(params, "b", Some(0.5))?, num(params, "b2", Some(0.0))?];
            if b[0].hypot(b[1]) >= 1.0 {
                return Err(Error::InvalidParams(format!("randers_flat needs |b| < 1, got {}", b[0].hypot(b[1]))));
            }
            Arc::new(Analytic(RandersFlat { b }))
        }
        "round_sphere" => {
            only(params, &[])?;
            Arc::new(Analytic(RoundSphere))
        }
        "rosenau" => {
            only(params, &["t0"])?;
            let t = num(params, "t0", Some(-1.0))?;
            if t >= 0.0 {
                return Err(Error::InvalidTime(t));
            }
            Arc::new(Analytic(Rosenau { t }))
        }
        "torus_bump" => {
            only(params, &["eps"])?;
            let eps = num(params, "eps", Some(0.1))?;
            if eps.abs() >= 1.0 {
                return Err(Error::InvalidParams(format!("torus_bump needs |eps| < 1, got {eps}")));
            }
            Arc::new(Analytic(TorusBump { eps }))
        }
        "round_torus" => {
            only(params, &["R", "r"])?;
            let (big, small) = (num(params, "R", Some(2.0))?, num(params, "r", Some(1.0))?);
            if !(small > 0.0 && big > small) {
                return Err(Error::InvalidParams(format!("round_torus needs R > r > 0, got R = {big}, r = {small}")));
            }
            Arc::new(Analytic(RoundTorus { big, small }))
        }
        "conformal_randers" => {
            only(params, &["b"])?;
            let b = num(params, "b", Some(0.3))?;
            if b.abs() >= 1.0 {
                return Err(Error::InvalidParams(format!("conformal_randers needs |b| < 1, got {b}")));
            }
            Arc::new(Analytic(ConformalRanders { b }))
        }
        "grid_sampled" => {
            only(params, &["path", "boundary"])?;
            let Some(Param::Text(path)) = params.get("path") else {
                return Err(Error::InvalidParams("grid_sampled needs a `path` string".into()));
            };
            let periodic = match params.get("boundary") {
                None => false,
                Some(Param::Text(b)) if b == "pinned" => false,
                Some(Param::Text(b)) if b == "periodic" => true,
                Some(_) => return Err(Error::InvalidParams("boundary must be `pinned` or `periodic`".into())),
            };
            Arc::new(crate::sphere_bundle::load_snapshot_structure(path.as_ref(), periodic)?)
        }
        other => return Err(Error::UnknownEntry(other.to_string())),
    };
    Ok(s)
}

/// F²(t) = τ(t) F₀² with τ = 1 − 2Kt, for F₀ with constant Ricci scalar K.
pub fn einstein_scaling(f0: SharedStructure, k: f64, t: f64) -> Result<SharedStructure> {
    let tau = einstein_tau(k, t);
    if !(tau > 0.0) {
        return Err(Error::CollapsedMetric { tau });
    }
    if tau == 1.0 {
        return Ok(f0);
    }
    Ok(Arc::new(Scaled { inner: f0, factor: tau }))
}

pub fn einstein_tau(k: f64, t: f64) -> f64 {
    1.0 - 2.0 * k * t
}

pub fn rosenau_factor(t: f64, x: ChartPoint) -> Result<f64> {
    if !(t < 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let s = -t;
    let r2 = x.x1 * x.x1 + x.x2 * x.x2;
    Ok(8.0 * s.sinh() / (1.0 + 2.0 * s.cosh() * r2 + r2 * r2))
}

pub fn rosenau_metric(t: f64, x: ChartPoint) -> Result<Mat2> {
    let a = rosenau_factor(t, x)?;
    Ok([[a, 0.0], [0.0, a]])
}

/// Scalar curvature R(a(t)) of the Rosenau metric.
pub fn rosenau_curvature(t: f64, x: ChartPoint) -> Result<f64> {
    if !(t < 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let s = -t;
    let r2 = x.x1 * x.x1 + x.x2 * x.x2;
    let d = 1.0 + 2.0 * s.cosh() * r2 + r2 * r2;
    Ok(s.cosh() / s.sinh() - 2.0 * s.sinh() * r2 / d)
}

/// Exact solution of the flow started from `initial` at elapsed time `t`,
/// when one is known (Einstein scaling or the Rosenau family).
pub fn exact_solution(name: &str, params: &Params, t: f64) -> Result<Option<SharedStructure>> {
    let k = match name {
        "euclidean" | "randers_flat" => 0.0,
        "round_sphere" => 1.0,
        "rosenau" => {
            let t0 = num(params, "t0", Some(-1.0))?;
            return Ok(Some(Arc::new(Analytic(Rosenau { t: t0 + t }))));
        }
        _ => return Ok(None),
    };
    Ok(Some(einstein_scaling(catalog(name, params)?, k, t)?))
}

// ---------------------------------------------------------------------------
// Brioschi oracle. Uses its own second-order number in the two chart
// variables and does not touch the Finsler pipeline.

/// Value, gradient and Hessian in (u, v) = (x¹, x²).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Surf {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

impl Surf {
    pub fn cst(v: f64) -> Self {
        Surf { v, ..Default::default() }
    }
    pub fn coord(i: usize, v: f64) -> Self {
        let mut s = Surf::cst(v);
        s.d[i] = 1.0;
        s
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut o = Surf::cst(f0);
        for i in 0..2 {
            o.d[i] = f1 * self.d[i];
            for j in 0..2 {
                o.dd[i][j] = f1 * self.dd[i][j] + f2 * self.d[i] * self.d[j];
            }
        }
        o
    }
    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }
    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }
    pub fn scale(self, s: f64) -> Self {
        self.chain(s * self.v, s, 0.0)
    }
}

impl Add for Surf {
    type Output = Surf;
    fn add(mut self, o: Surf) -> Surf {
        self.v += o.v;
        for i in 0..2 {
            self.d[i] += o.d[i];
            for j in 0..2 {
                self.dd[i][j] += o.dd[i][j];
            }
        }
        self
    }
}

impl Sub for Surf {
    type Output = Surf;
    fn sub(self, o: Surf) -> Surf {
        self + o.scale(-1.0)
    }
}

impl Mul for Surf {
    type Output = Surf;
    fn mul(self, o: Surf) -> Surf {
        let mut r = Surf::cst(self.v * o.v);
        for i in 0..2 {
            r.d[i] = self.v * o.d[i] + self.d[i] * o.v;
            for j in 0..2 {
                r.dd[i][j] = self.v * o.dd[i][j] + self.d[i] * o.d[j] + self.d[j] * o.d[i] + self.dd[i][j] * o.v;
            }
        }
        r
    }
}

impl Div for Surf {
    type Output = Surf;
    fn div(self, o: Surf) -> Surf {
        self * o.recip()
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian curvature from the first fundamental form (E, F, G) given as a
/// function of the chart coordinates, via the Brioschi formula.
pub fn brioschi_gauss_curvature<M>(metric: M, x: ChartPoint) -> Result<f64>
where
    M: Fn([Surf; 2]) -> [Surf; 3],
{
    let [e, f, g] = metric([Surf::coord(0, x.x1), Surf::coord(1, x.x2)]);
    let w = e.v * g.v - f.v * f.v;
    if !(w > 0.0) || !(e.v > 0.0) {
        return Err(Error::DegenerateMetric { min_eig: w, node: None });
    }
    let (u, v) = (0, 1);
    let m1 = [
        [-0.5 * e.dd[v][v] + f.dd[u][v] - 0.5 * g.dd[u][u], 0.5 * e.d[u], f.d[u] - 0.5 * e.d[v]],
        [f.d[v] - 0.5 * g.d[u], e.v, f.v],
        [0.5 * g.d[v], f.v, g.v],
    ];
    let m2 = [[0.0, 0.5 * e.d[v], 0.5 * g.d[u]], [0.5 * e.d[v], e.v, f.v], [0.5 * g.d[u], f.v, g.v]];
    Ok((det3(m1) - det3(m2)) / (w * w))
}

/// Independent first-fundamental-form evaluators for the Riemannian entries.
pub fn brioschi_metric(name: &str, params: &Params) -> Result<Box<dyn Fn([Surf; 2]) -> [Surf; 3]>> {
    let conformal = |a: Box<dyn Fn([Surf; 2]) -> Surf>| -> Box<dyn Fn([Surf; 2]) -> [Surf; 3]> {
        Box::new(move |x| {
            let l = a(x);
            [l, Surf::cst(0.0), l]
        })
    };
    let r2 = |x: [Surf; 2]| x[0] * x[0] + x[1] * x[1];
    Ok(match name {
        "euclidean" => conformal(Box::new(|_| Surf::cst(1.0))),
        "round_sphere" => conformal(Box::new(move |x| {
            let d = r2(x) + Surf::cst(1.0);
            Surf::cst(4.0) / (d * d)
        })),
        "rosenau" => {
            let s = -num(params, "t0", Some(-1.0))?;
            conformal(Box::new(move |x| {
                let q = r2(x);
                Surf::cst(8.0 * s.sinh()) / (Surf::cst(1.0) + q.scale(2.0 * s.cosh()) + q * q)
            }))
        }
        "torus_bump" => {
            let eps = num(params, "eps", Some(0.1))?;
            conformal(Box::new(move |x| Surf::cst(1.0) + (x[0].cos() * x[1].cos()).scale(eps)))
        }
        other => return Err(Error::InvalidParams(format!("`{other}` is not a Riemannian catalog entry"))),
    })
}

/// Convenience: catalog entry with default parameters.
pub fn entry(name: &str) -> SharedStructure {
    catalog(name, &Params::new()).expect("catalog entry with default parameters")
}

pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), Param::Num(*v))).collect()
}

/// Quick structural sanity check run on catalog entries.
pub fn is_riemannian(s: &dyn FinslerStructure) -> bool {
    s.is_riemannian()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenau_closed_form_values() {
        let o = ChartPoint::new(0.0, 0.0);
        assert!((rosenau_metric(-1.0, o).unwrap()[0][0] - 9.401_609_5).abs() < 1e-6);
        let unit = ChartPoint::new(0.6, 0.8);
        assert!((rosenau_factor(-1.0, unit).unwrap() - 1.848_468_6).abs() < 1e-6);
        assert!((rosenau_factor(-2.0, o).unwrap() - 29.014_883).abs() < 1e-5);
        assert!((rosenau_curvature(-1.0, o).unwrap() - 1.313_035_285).abs() < 1e-8);
        assert!((rosenau_curvature(-60.0, o).unwrap() - 1.0).abs() < 1e-12);
        assert!(rosenau_factor(-1.0, ChartPoint::new(1e3, 0.0)).unwrap() < 1e-10);
        assert_eq!(rosenau_metric(0.5, o), Err(Error::InvalidTime(0.5)));
    }

    #[test]
    fn brioschi_known_curvatures() {
        let sphere = brioschi_metric("round_sphere", &Params::new()).unwrap();
        let flat = brioschi_metric("euclidean", &Params::new()).unwrap();
        let p = ChartPoint::new(0.3, -0.7);
        assert!((brioschi_gauss_curvature(&sphere, p).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(brioschi_gauss_curvature(&flat, p).unwrap(), 0.0);
        let ros = brioschi_metric("rosenau", &params(&[("t0", -1.0)])).unwrap();
        let o = ChartPoint::new(0.0, 0.0);
        let r = rosenau_curvature(-1.0, o).unwrap();
        assert!((brioschi_gauss_curvature(&ros, o).unwrap() - r / 2.0).abs() < 1e-8);
    }

    #[test]
    fn catalog_validates_parameters() {
        assert!(matches!(catalog("randers_flat", &params(&[("b", 1.5)])), Err(Error::InvalidParams(_))));
        assert!(matches!(catalog("nope", &Params::new()), Err(Error::UnknownEntry(_))));
        assert!(matches!(catalog("rosenau", &params(&[("t0", 0.5)])), Err(Error::InvalidTime(_))));
        assert!(matches!(catalog("euclidean", &params(&[("b", 0.5)])), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn einstein_tau_collapse() {
        assert_eq!(einstein_tau(1.0, 0.25), 0.5);
        assert!(matches!(einstein_scaling(entry("round_sphere"), 1.0, 0.5), Err(Error::CollapsedMetric { .. })));
    }
}
