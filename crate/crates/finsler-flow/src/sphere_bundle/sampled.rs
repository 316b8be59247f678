//! Finsler structures known only through samples of φ = F|_{r=1} on the grid.
//!
//! F² is factored as F_base²·exp(2w) with w = ln(φ/φ_base). The base is an
//! analytic structure with exact jets (Euclidean unless told otherwise), and
//! the jets of w come from fourth-order differences in x and θ, pushed through
//! the polar chain rule by expanding θ(y) as a Taylor series in y.

use super::{field::interpolate_values, FieldOnSM, SphereBundleGrid};
use crate::error::{Error, Result};
use crate::geometry::{
    Analytic, ChartDomain, ChartPoint, FinslerStructure, SharedStructure, StructureKind, TangentVector,
};
use crate::jet::{monomials, Jet, NCOEF};
use crate::reference::Euclidean;
use std::sync::{Arc, OnceLock};

/// (a1, a2, c): x¹-order, x²-order, θ-order of a kept derivative of w.
const TERMS: [(usize, usize, usize); 22] = [
    (0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 0, 3), (0, 0, 4),
    (1, 0, 0), (1, 0, 1), (1, 0, 2), (1, 0, 3),
    (0, 1, 0), (0, 1, 1), (0, 1, 2), (0, 1, 3),
    (2, 0, 0), (2, 0, 1), (2, 0, 2),
    (0, 2, 0), (0, 2, 1), (0, 2, 2),
    (1, 1, 0), (1, 1, 1), (1, 1, 2),
];

type Sparse = Vec<(u8, f64)>;

/// Half-width of the widest θ stencil.
const THETA_REACH: usize = 3;

/// Shared, field-independent data for evaluating grid jets.
#[derive(Debug)]
pub struct Sampler {
    pub grid: Arc<SphereBundleGrid>,
    pub base: SharedStructure,
    pub base_phi: Vec<f64>,
    base_jets: Option<Vec<OnceLock<Box<Jet>>>>,
    basis: Vec<[Sparse; 22]>,
}

fn fact(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

impl Sampler {
    /// `cache_jets` keeps every base jet once computed (flows reuse them at
    /// every stage).
    pub fn new(grid: Arc<SphereBundleGrid>, base: SharedStructure, cache_jets: bool) -> Result<Self> {
        let base_phi = FieldOnSM::sample(grid.clone(), base.as_ref())?.values;
        let dx = [Jet::variable(0, 0.0), Jet::variable(1, 0.0)];
        let dy = [Jet::variable(2, 0.0), Jet::variable(3, 0.0)];
        let basis = (0..grid.ntheta())
            .map(|it| {
                let u = grid.direction(it);
                let (c, s) = (u.y1, u.y2);
                let du1 = dy[0] * c + dy[1] * s;
                let du2 = dy[1] * c - dy[0] * s;
                let dth = (du2 / (du1 + 1.0)).atan();
                let mut pw = vec![Jet::constant(1.0)];
                for k in 1..=4 {
                    let next = pw[k - 1] * dth;
                    pw.push(next);
                }
                TERMS.map(|(a1, a2, cc)| {
                    let mut j = pw[cc];
                    for _ in 0..a1 {
                        j *= dx[0];
                    }
                    for _ in 0..a2 {
                        j *= dx[1];
                    }
                    let scale = 1.0 / (fact(a1) * fact(a2) * fact(cc));
                    j.c.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(i, v)| (i as u8, v * scale))
                        .collect()
                })
            })
            .collect();
        let base_jets = cache_jets.then(|| (0..grid.len()).map(|_| OnceLock::new()).collect());
        Ok(Sampler { grid, base, base_phi, base_jets, basis })
    }

    pub fn euclidean(grid: Arc<SphereBundleGrid>) -> Result<Self> {
        Sampler::new(grid, Arc::new(Analytic(Euclidean)), false)
    }

    pub fn base_jet(&self, i1: usize, i2: usize, it: usize) -> Result<Jet> {
        let compute = || self.base.f2_jet(self.grid.point(i1, i2), self.grid.direction(it));
        match &self.base_jets {
            Some(cache) => {
                let slot = &cache[self.grid.idx(i1, i2, it)];
                if let Some(j) = slot.get() {
                    return Ok(**j);
                }
                let j = compute()?;
                Ok(**slot.get_or_init(|| Box::new(j)))
            }
            None => compute(),
        }
    }

    /// ln(φ/φ_base) for a φ field on this grid.
    pub fn log_ratio(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.log_ratio_near(phi, None)
    }

    /// Like [`log_ratio`](Self::log_ratio), but when `thetas` is given only
    /// the θ-nodes that jets at those directions can reach are filled in;
    /// the rest are left at zero.
    pub fn log_ratio_near(&self, phi: &[f64], thetas: Option<&[usize]>) -> Result<Vec<f64>> {
        let nt = self.grid.ntheta();
        let mut need = vec![thetas.is_none(); nt];
        for &it in thetas.unwrap_or(&[]) {
            for d in 0..=2 * THETA_REACH {
                need[(it + nt + d - THETA_REACH) % nt] = true;
            }
        }
        phi.iter()
            .zip(&self.base_phi)
            .enumerate()
            .map(|(k, (p, b))| {
                if !need[k % nt] {
                    Ok(0.0)
                } else if *p > 0.0 && p.is_finite() {
                    Ok((p / b).ln())
                } else {
                    let (a, bb, c) = self.grid.unflatten(k);
                    Err(Error::BlowUp { t: f64::NAN, reason: format!("F = {p} at node ({a}, {bb}, {c})") })
                }
            })
            .collect()
    }

    #[inline]
    fn td(&self, w: &[f64], i1: usize, i2: usize, it: usize, c: usize) -> f64 {
        let base = self.grid.xnode(i1, i2) * self.grid.ntheta();
        let center = w[base + it];
        if c == 0 {
            center
        } else {
            self.grid.theta_stencil(c, it).apply(center, |j| w[base + j])
        }
    }

    /// All kept mixed derivatives ∂ₓ^a ∂_θ^c w at a node, in `TERMS` order.
    pub fn w_derivatives(&self, w: &[f64], i1: usize, i2: usize, it: usize) -> [f64; 22] {
        let g = &*self.grid;
        let mut d = [0.0; 22];
        let line = |axis: usize, order: usize, c: usize| -> f64 {
            let st = g.x_stencil(axis, order, if axis == 0 { i1 } else { i2 });
            let center = self.td(w, i1, i2, it, c);
            if axis == 0 {
                st.apply(center, |j| self.td(w, j, i2, it, c))
            } else {
                st.apply(center, |k| self.td(w, i1, k, it, c))
            }
        };
        for (slot, &(a1, a2, c)) in TERMS.iter().enumerate() {
            d[slot] = match (a1, a2) {
                (0, 0) => self.td(w, i1, i2, it, c),
                (1, 0) => line(0, 1, c),
                (2, 0) => line(0, 2, c),
                (0, 1) => line(1, 1, c),
                (0, 2) => line(1, 2, c),
                _ => {
                    let s2 = g.x_stencil(1, 1, i2);
                    let inner = |j: usize| s2.apply(self.td(w, j, i2, it, c), |k| self.td(w, j, k, it, c));
                    g.x_stencil(0, 1, i1).apply(inner(i1), inner)
                }
            };
        }
        d
    }

    /// Jet of w around (x_node, unit direction θ_it).
    pub fn w_jet(&self, w: &[f64], i1: usize, i2: usize, it: usize) -> Jet {
        let d = self.w_derivatives(w, i1, i2, it);
        let mut out = Jet::zero();
        for (k, sparse) in self.basis[it].iter().enumerate() {
            let dk = d[k];
            if dk == 0.0 {
                continue;
            }
            for &(i, v) in sparse {
                out.c[i as usize] += dk * v;
            }
        }
        out
    }

    /// Jet of F² at a node for the field with log-ratio `w`.
    pub fn node_jet(&self, w: &[f64], i1: usize, i2: usize, it: usize) -> Result<Jet> {
        let wj = self.w_jet(w, i1, i2, it);
        let b = self.base_jet(i1, i2, it)?;
        Ok(b * (wj * 2.0).exp())
    }
}

/// Rescale a unit-direction jet of a 2-homogeneous function to direction r·u.
pub fn rescale_fiber(jet: &Jet, r: f64) -> Jet {
    if r == 1.0 {
        return *jet;
    }
    let mut out = *jet;
    for (i, m) in monomials().iter().enumerate().take(NCOEF) {
        let k = (m[2] + m[3]) as i32;
        out.c[i] *= r.powi(2 - k);
    }
    out
}

/// A grid-sampled Finsler structure. Jets exist only at lattice nodes;
/// F itself can be evaluated anywhere in the chart by interpolation.
#[derive(Debug, Clone)]
pub struct GridStructure {
    pub sampler: Arc<Sampler>,
    pub w: Vec<f64>,
    pub label: String,
    /// φ² is a quadratic form in the direction at every x-node.
    pub riemannian: bool,
}

/// Whether every fiber of φ² is A + B cos 2θ + C sin 2θ to rounding.
fn quadratic_fibers(phi: &FieldOnSM) -> bool {
    let g = &phi.grid;
    let nt = g.ntheta();
    phi.values.chunks(nt).all(|fiber| {
        let q: Vec<f64> = fiber.iter().map(|v| v * v).collect();
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (it, v) in q.iter().enumerate() {
            let th = 2.0 * g.theta(it);
            a += v;
            b += v * th.cos();
            c += v * th.sin();
        }
        let n = nt as f64;
        let (a, b, c) = (a / n, 2.0 * b / n, 2.0 * c / n);
        let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        q.iter().enumerate().all(|(it, v)| {
            let th = 2.0 * g.theta(it);
            (v - a - b * th.cos() - c * th.sin()).abs() <= 1e-10 * scale
        })
    })
}

impl GridStructure {
    pub fn new(sampler: Arc<Sampler>, phi: &FieldOnSM) -> Result<Self> {
        if phi.grid.spec != sampler.grid.spec {
            return Err(Error::InvalidParams("field and sampler grids differ".into()));
        }
        let w = sampler.log_ratio(&phi.values)?;
        Ok(GridStructure { sampler, w, label: "grid_sampled".into(), riemannian: quadratic_fibers(phi) })
    }

    /// Sampled field over a Euclidean base.
    pub fn from_field(phi: &FieldOnSM) -> Result<Self> {
        GridStructure::new(Arc::new(Sampler::euclidean(phi.grid.clone())?), phi)
    }

    pub fn grid(&self) -> &Arc<SphereBundleGrid> {
        &self.sampler.grid
    }

    pub fn phi(&self) -> FieldOnSM {
        let values = self.w.iter().zip(&self.sampler.base_phi).map(|(w, b)| b * w.exp()).collect();
        FieldOnSM { grid: self.sampler.grid.clone(), values }
    }

    pub fn node_jet(&self, i1: usize, i2: usize, it: usize) -> Result<Jet> {
        self.sampler.node_jet(&self.w, i1, i2, it)
    }
}

impl FinslerStructure for GridStructure {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn kind(&self) -> StructureKind {
        StructureKind::GridSampled
    }
    fn domain(&self) -> ChartDomain {
        self.sampler.grid.domain()
    }
    fn f2_jet(&self, x: ChartPoint, y: TangentVector) -> Result<Jet> {
        y.check()?;
        let g = &self.sampler.grid;
        let off = || Error::OffGrid { x1: x.x1, x2: x.x2, theta: y.y2.atan2(y.y1) };
        let i1 = g.node_of(0, x.x1).ok_or_else(off)?;
        let i2 = g.node_of(1, x.x2).ok_or_else(off)?;
        let it = g.theta_node_of(y).ok_or_else(off)?;
        Ok(rescale_fiber(&self.node_jet(i1, i2, it)?, y.norm()))
    }
    fn f2(&self, x: ChartPoint, y: TangentVector) -> Result<f64> {
        y.check()?;
        let x = self.domain().admit(x)?;
        let w = interpolate_values(&self.sampler.grid, &self.w, x, y.y2.atan2(y.y1));
        Ok(self.sampler.base.f2(x, y)? * (2.0 * w).exp())
    }
    fn is_riemannian(&self) -> bool {
        self.riemannian
    }
}
