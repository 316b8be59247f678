//! The DeTurck gauge: the vector field ξ built from a background structure,
//! the Lie-derivative term it adds to the flow, and the diffeomorphisms that
//! turn DeTurck solutions back into Ricci-flow solutions.

use crate::error::{Error, Result};
use crate::geometry::{
    eval_f, geometry_jet, AffineMap, ChartPoint, FinslerStructure, Mat2, Pipeline, Pullback, SharedStructure,
    TangentVector, Tensor3,
};
use crate::sphere_bundle::{FieldOnSM, GridStructure, SphereBundleGrid};
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

/// A fixed structure h with its Chern connection cached at grid nodes.
#[derive(Debug, Clone)]
pub struct BackgroundStructure {
    pub structure: SharedStructure,
    pub grid: Arc<SphereBundleGrid>,
    /// θ-node indices at which Γ(h) is cached.
    pub thetas: Vec<usize>,
    gamma: Vec<Tensor3>,
}

impl BackgroundStructure {
    pub fn new(structure: SharedStructure, grid: Arc<SphereBundleGrid>, thetas: Vec<usize>) -> Result<Self> {
        let m = thetas.len();
        let gamma = (0..grid.n_xnodes() * m)
            .into_par_iter()
            .map(|k| {
                let (xn, j) = (k / m, k % m);
                let (i1, i2) = (xn / grid.nx()[1], xn % grid.nx()[1]);
                let y = grid.direction(thetas[j]);
                let jet = structure.f2_jet(grid.point(i1, i2), y)?;
                Pipeline::new(&jet, y).map(|p| p.chern()).map_err(|e| e.with_node([i1, i2, thetas[j]]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BackgroundStructure { structure, grid, thetas, gamma })
    }

    /// Γ(h) at x-node (i1, i2) and the `k`-th cached direction.
    pub fn gamma(&self, i1: usize, i2: usize, k: usize) -> &Tensor3 {
        &self.gamma[self.grid.xnode(i1, i2) * self.thetas.len() + k]
    }
}

/// ξ^i = g^{pq}(Γ(h) − Γ(g))^i_pq.
pub fn deturck_xi(g_inv: &Mat2, gamma_g: &Tensor3, gamma_h: &Tensor3) -> [f64; 2] {
    let mut xi = [0.0; 2];
    for (i, x) in xi.iter_mut().enumerate() {
        for p in 0..2 {
            for q in 0..2 {
                *x += g_inv[p][q] * (gamma_h[i][p][q] - gamma_g[i][p][q]);
            }
        }
    }
    xi
}

/// ξ at a single point for structures with jets there.
pub fn deturck_vector_at(g: &dyn FinslerStructure, h: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<[f64; 2]> {
    let jg = geometry_jet(g, x, y)?;
    let jh = geometry_jet(h, x, y)?;
    Ok(deturck_xi(&jg.g_inv, &jg.chern, &jh.chern))
}

/// ξ on the lattice, at the directions `thetas` of every x-node.
#[derive(Debug, Clone)]
pub struct DeTurckField {
    pub grid: Arc<SphereBundleGrid>,
    pub thetas: Vec<usize>,
    /// `xi[xnode * thetas.len() + k]`
    pub xi: Vec<[f64; 2]>,
}

impl DeTurckField {
    pub fn from_fn(grid: Arc<SphereBundleGrid>, thetas: Vec<usize>, f: impl Fn(usize, usize, usize) -> [f64; 2]) -> Self {
        let m = thetas.len();
        let mut xi = Vec::with_capacity(grid.n_xnodes() * m);
        for i1 in 0..grid.nx()[0] {
            for i2 in 0..grid.nx()[1] {
                for &it in &thetas {
                    xi.push(f(i1, i2, it));
                }
            }
        }
        DeTurckField { grid, thetas, xi }
    }

    pub fn get(&self, i1: usize, i2: usize, k: usize) -> [f64; 2] {
        self.xi[self.grid.xnode(i1, i2) * self.thetas.len() + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.xi.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∂ξ/∂x^axis at fixed direction, from the lattice stencils.
    pub fn derivative(&self, i1: usize, i2: usize, k: usize, axis: usize) -> [f64; 2] {
        let c = self.get(i1, i2, k);
        let st = self.grid.x_stencil(axis, 1, if axis == 0 { i1 } else { i2 });
        let at = |j: usize| if axis == 0 { self.get(j, i2, k) } else { self.get(i1, j, k) };
        [0, 1].map(|i| st.apply(c[i], |j| at(j)[i]))
    }

    /// Fiber average of ξ at each x-node: the base vector field whose flow
    /// gives the gauge diffeomorphisms.
    pub fn base_average(&self) -> Vec<[f64; 2]> {
        let m = self.thetas.len() as f64;
        self.xi
            .chunks(self.thetas.len())
            .map(|c| {
                let s = c.iter().fold([0.0; 2], |a, v| [a[0] + v[0], a[1] + v[1]]);
                [s[0] / m, s[1] / m]
            })
            .collect()
    }
}

/// ξ for a grid-sampled g against the background, at the background's directions.
pub fn deturck_vector_field(g: &GridStructure, h: &BackgroundStructure) -> Result<DeTurckField> {
    let grid = g.grid().clone();
    let m = h.thetas.len();
    let xi = (0..grid.n_xnodes() * m)
        .into_par_iter()
        .map(|k| {
            let (xn, j) = (k / m, k % m);
            let (i1, i2) = (xn / grid.nx()[1], xn % grid.nx()[1]);
            let it = h.thetas[j];
            let y = grid.direction(it);
            let p = Pipeline::new(&g.node_jet(i1, i2, it)?, y).map_err(|e| e.with_node([i1, i2, it]))?;
            Ok(deturck_xi(&p.metric_inverse(), &p.chern(), h.gamma(i1, i2, j)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeTurckField { grid, thetas: h.thetas.clone(), xi })
}

/// Complete-lift derivative ξ^i ∂_iF² + y^j ∂_jξ^i ∂_{y^i}F² from its parts.
pub fn complete_lift(f2_x: [f64; 2], f2_y: [f64; 2], xi: [f64; 2], dxi: [[f64; 2]; 2], y: [f64; 2]) -> f64 {
    // dxi[j][i] = ∂_j ξ^i
    let mut v = xi[0] * f2_x[0] + xi[1] * f2_x[1];
    for j in 0..2 {
        for i in 0..2 {
            v += y[j] * dxi[j][i] * f2_y[i];
        }
    }
    v
}

/// A vector field given pointwise on the slit tangent bundle.
pub type PointField<'a> = dyn Fn(ChartPoint, TangentVector) -> Result<[f64; 2]> + Sync + 'a;

const FD_STEP: f64 = 1e-3;

/// Fourth-order central x-derivative of ξ at fixed y.
fn dxi_fd(xi: &PointField, x: ChartPoint, y: TangentVector) -> Result<[[f64; 2]; 2]> {
    let mut out = [[0.0; 2]; 2];
    for (j, row) in out.iter_mut().enumerate() {
        let at = |s: f64| {
            let mut p = x.arr();
            p[j] += s * FD_STEP;
            xi(ChartPoint::new(p[0], p[1]), y)
        };
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        for i in 0..2 {
            row[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * FD_STEP);
        }
    }
    Ok(out)
}

/// 𝓛_ξF² along the complete lift of ξ; x-derivatives of ξ by differences.
pub fn lie_derivative_f2(s: &dyn FinslerStructure, xi: &PointField, x: ChartPoint, y: TangentVector) -> Result<f64> {
    y.check()?;
    let jet = s.f2_jet(s.domain().admit(x)?, y)?;
    let f2_x = [jet.d(1, 0, 0, 0), jet.d(0, 1, 0, 0)];
    let f2_y = [jet.d(0, 0, 1, 0), jet.d(0, 0, 0, 1)];
    Ok(complete_lift(f2_x, f2_y, xi(x, y)?, dxi_fd(xi, x, y)?, y.arr()))
}

/// 2y^iy^j g_ik (δ_jξ^k + Γ^k_jl ξ^l): the same term written with the Chern
/// connection, as the metric-compatible computation produces it. Agrees with
/// [`lie_derivative_f2`] for Riemannian structures; the gap on Finsler ones
/// is the Cartan-tensor contribution that the covariant form drops.
pub fn lie_derivative_covariant(s: &dyn FinslerStructure, xi: &PointField, x: ChartPoint, y: TangentVector) -> Result<f64> {
    let j = geometry_jet(s, x, y)?;
    let v = xi(x, y)?;
    let dx = dxi_fd(xi, x, y)?;
    // ∂ξ^k/∂y^l by differences in y (ξ is 0-homogeneous in y)
    let mut dy = [[0.0; 2]; 2];
    for (l, row) in dy.iter_mut().enumerate() {
        let at = |s: f64| {
            let mut q = y.arr();
            q[l] += s * FD_STEP;
            xi(x, TangentVector::new(q[0], q[1]))
        };
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        for k in 0..2 {
            row[k] = (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * FD_STEP);
        }
    }
    let yv = y.arr();
    let mut out = 0.0;
    for jj in 0..2 {
        for k in 0..2 {
            let mut nab = dx[jj][k] - j.nonlinear[0][jj] * dy[0][k] - j.nonlinear[1][jj] * dy[1][k];
            for l in 0..2 {
                nab += j.chern[k][jj][l] * v[l];
            }
            for i in 0..2 {
                out += 2.0 * yv[i] * yv[jj] * j.g[i][k] * nab;
            }
        }
    }
    Ok(out)
}

/// Right-hand side −2F²𝓡ic − 𝓛_ξF² of the DeTurck flow at one point.
pub fn deturck_rhs(s: &dyn FinslerStructure, h: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<f64> {
    let j = geometry_jet(s, x, y)?;
    let xi = |p: ChartPoint, v: TangentVector| deturck_vector_at(s, h, p, v);
    Ok(-2.0 * j.f * j.f * j.ricci - lie_derivative_f2(s, &xi, x, y)?)
}

/// Chart maps φ_t at the x-nodes with Jacobian estimates.
#[derive(Debug, Clone)]
pub struct DiffeoFamily {
    pub grid: Arc<SphereBundleGrid>,
    pub times: Vec<f64>,
    /// `maps[time][xnode]`, not reduced modulo the period on periodic grids
    pub maps: Vec<Vec<[f64; 2]>>,
    /// `jac[time][xnode][a][b]` = ∂φ^a/∂x^b
    pub jac: Vec<Vec<Mat2>>,
}

impl DiffeoFamily {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "i1", "i2", "phi1", "phi2", "J11", "J12", "J21", "J22"])?;
        let [n1, n2] = self.grid.nx();
        for (ti, t) in self.times.iter().enumerate() {
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    let k = self.grid.xnode(i1, i2);
                    let (p, j) = (self.maps[ti][k], self.jac[ti][k]);
                    w.write_record(&[
                        t.to_string(),
                        i1.to_string(),
                        i2.to_string(),
                        p[0].to_string(),
                        p[1].to_string(),
                        j[0][0].to_string(),
                        j[0][1].to_string(),
                        j[1][0].to_string(),
                        j[1][1].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Bilinear interpolation of a base vector field given at the x-nodes.
fn bilinear(grid: &SphereBundleGrid, field: &[[f64; 2]], x: [f64; 2]) -> Option<[f64; 2]> {
    let n = grid.nx();
    let mut lo = [0usize; 2];
    let mut hi = [0usize; 2];
    let mut fr = [0.0; 2];
    for a in 0..2 {
        let s = (x[a] - grid.spec.bounds[a][0]) / grid.dx[a];
        if grid.periodic() {
            let f = s.floor();
            lo[a] = (f as isize).rem_euclid(n[a] as isize) as usize;
            hi[a] = (lo[a] + 1) % n[a];
            fr[a] = s - f;
        } else {
            let top = (n[a] - 1) as f64;
            if !(s >= -1e-12 && s <= top + 1e-12) {
                return None;
            }
            let f = s.clamp(0.0, top - 1.0).floor();
            lo[a] = f as usize;
            hi[a] = lo[a] + 1;
            fr[a] = s.clamp(0.0, top) - f;
        }
    }
    let v = |i1: usize, i2: usize| field[grid.xnode(i1, i2)];
    let (a, b, c, d) = (v(lo[0], lo[1]), v(hi[0], lo[1]), v(lo[0], hi[1]), v(hi[0], hi[1]));
    Some([0, 1].map(|i| {
        (1.0 - fr[0]) * (1.0 - fr[1]) * a[i] + fr[0] * (1.0 - fr[1]) * b[i] + (1.0 - fr[0]) * fr[1] * c[i] + fr[0] * fr[1] * d[i]
    }))
}

/// Jacobians I + D(φ − id) by the lattice first-derivative stencils.
fn jacobians(grid: &SphereBundleGrid, map: &[[f64; 2]]) -> Result<Vec<Mat2>> {
    let [n1, n2] = grid.nx();
    let disp: Vec<[f64; 2]> = (0..n1 * n2)
        .map(|k| {
            let p = grid.point(k / n2, k % n2);
            [map[k][0] - p.x1, map[k][1] - p.x2]
        })
        .collect();
    let mut out = Vec::with_capacity(n1 * n2);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let c = disp[grid.xnode(i1, i2)];
            let s1 = grid.x_stencil(0, 1, i1);
            let s2 = grid.x_stencil(1, 1, i2);
            let mut j = [[1.0, 0.0], [0.0, 1.0]];
            for a in 0..2 {
                j[a][0] += s1.apply(c[a], |m| disp[grid.xnode(m, i2)][a]);
                j[a][1] += s2.apply(c[a], |m| disp[grid.xnode(i1, m)][a]);
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(Error::DegeneratePullback { det, node: [i1, i2] });
            }
            out.push(j);
        }
    }
    Ok(out)
}

/// Integrate ∂φ_t/∂t = ξ(φ_t, t), φ_0 = id, from every x-node.
///
/// `history` holds the base field ξ (one vector per x-node) at increasing
/// times; ξ is bilinear in x and linear in t between samples. Maps and
/// Jacobians are recorded at every history time.
pub fn integrate_diffeomorphisms(history: &[(f64, Vec<[f64; 2]>)], grid: &Arc<SphereBundleGrid>, dt: f64) -> Result<DiffeoFamily> {
    if history.is_empty() || !(dt > 0.0) {
        return Err(Error::InvalidParams("need a non-empty ξ history and dt > 0".into()));
    }
    let n = grid.n_xnodes();
    if history.iter().any(|(_, f)| f.len() != n) {
        return Err(Error::InvalidParams("ξ history does not match the grid".into()));
    }
    if history.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParams("ξ history times must increase".into()));
    }
    let nx2 = grid.nx()[1];
    let mut pos: Vec<[f64; 2]> = (0..n).map(|k| grid.point(k / nx2, k % nx2).arr()).collect();
    let mut times = vec![history[0].0];
    let mut maps = vec![pos.clone()];
    let mut jac = vec![jacobians(grid, &pos)?];
    for w in history.windows(2) {
        let (t0, f0) = (&w[0].0, &w[0].1);
        let (t1, f1) = (&w[1].0, &w[1].1);
        let steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        pos = pos
            .par_iter()
            .enumerate()
            .map(|(k, p0)| {
                let node = [k / nx2, k % nx2];
                let vel = |t: f64, p: [f64; 2]| -> Result<[f64; 2]> {
                    let s = (t - t0) / (t1 - t0);
                    let a = bilinear(grid, f0, p);
                    let b = bilinear(grid, f1, p);
                    match (a, b) {
                        (Some(a), Some(b)) => Ok([0, 1].map(|i| (1.0 - s) * a[i] + s * b[i])),
                        _ => Err(Error::LeftChart { node, t }),
                    }
                };
                let mut p = *p0;
                for m in 0..steps {
                    let t = t0 + m as f64 * h;
                    let k1 = vel(t, p)?;
                    let k2 = vel(t + 0.5 * h, [p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]])?;
                    let k3 = vel(t + 0.5 * h, [p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]])?;
                    let k4 = vel(t + h, [p[0] + h * k3[0], p[1] + h * k3[1]])?;
                    for i in 0..2 {
                        p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
                if !grid.periodic() && bilinear(grid, f1, p).is_none() {
                    return Err(Error::LeftChart { node, t: *t1 });
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        times.push(*t1);
        jac.push(jacobians(grid, &pos)?);
        maps.push(pos.clone());
    }
    Ok(DiffeoFamily { grid: grid.clone(), times, maps, jac })
}

/// (φ*F̃)(x, y) = F̃(φ(x), Dφ·y) at the nodes of the family's grid, for the
/// family member at time index `ti`.
pub fn pullback_structure(family: &DiffeoFamily, ti: usize, s_tilde: &dyn FinslerStructure) -> Result<GridStructure> {
    let grid = family.grid.clone();
    let map = family.maps.get(ti).ok_or_else(|| Error::InvalidParams(format!("no diffeomorphism at index {ti}")))?;
    let jac = &family.jac[ti];
    let t = family.times[ti];
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i1, i2, it) = grid.unflatten(k);
            let xn = grid.xnode(i1, i2);
            let (p, j) = (map[xn], jac[xn]);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(Error::DegeneratePullback { det, node: [i1, i2] });
            }
            let u = grid.direction(it);
            let v = TangentVector::new(j[0][0] * u.y1 + j[0][1] * u.y2, j[1][0] * u.y1 + j[1][1] * u.y2);
            eval_f(s_tilde, ChartPoint::new(p[0], p[1]), v).map_err(|e| match e {
                Error::OutOfChart { .. } => Error::LeftChart { node: [i1, i2], t },
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = GridStructure::from_field(&FieldOnSM::new(grid, values)?)?;
    s.label = format!("pullback({})", s_tilde.name());
    Ok(s)
}

/// Exact pullback by an affine chart map (jets stay analytic).
pub fn pullback_affine(s: SharedStructure, map: AffineMap) -> Result<Pullback> {
    Pullback::new(s, map)
}
