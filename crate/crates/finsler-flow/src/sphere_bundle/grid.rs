use crate::error::{Error, Result};
use crate::geometry::{BoundaryMode, ChartDomain, ChartPoint, TangentVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Lattice description as it appears in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx1: usize,
    pub nx2: usize,
    pub bounds: [[f64; 2]; 2],
    pub boundary: BoundaryMode,
    pub ntheta: usize,
}

/// Finite-difference weights for derivatives of order 0..=m at `z` from
/// values at `xs` (Fornberg's recursion). Returns `c[k][j]`.
pub fn fornberg(z: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One derivative stencil at one node: neighbour indices and weights.
#[derive(Clone, Debug, Default)]
pub struct Stencil {
    pub idx: Vec<usize>,
    pub w: Vec<f64>,
}

impl Stencil {
    /// Σ w_k (v_k − v_center); exact zero on constant data.
    #[inline]
    pub fn apply(&self, center: f64, get: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        for (&i, &w) in self.idx.iter().zip(self.w.iter()) {
            s += w * (get(i) - center);
        }
        s
    }
}

fn periodic_stencil(i: usize, n: usize, h: f64, order: usize, half: isize) -> Stencil {
    let offs: Vec<f64> = (-half..=half).map(|k| k as f64).collect();
    let c = fornberg(0.0, &offs, order);
    let mut st = Stencil::default();
    for (j, k) in (-half..=half).enumerate() {
        if k == 0 {
            continue;
        }
        st.idx.push((i as isize + k).rem_euclid(n as isize) as usize);
        st.w.push(c[order][j] / h.powi(order as i32));
    }
    st
}

fn clamped_stencil(i: usize, n: usize, h: f64, order: usize) -> Stencil {
    // Centered 5-point where it fits, otherwise a one-sided window of
    // order+4 points; all are fourth-order accurate.
    let (lo, len) = if i >= 2 && i + 2 < n { (i - 2, 5) } else { let len = order + 4; if i < 2 { (0, len) } else { (n - len, len) } };
    let offs: Vec<f64> = (lo..lo + len).map(|k| k as f64 - i as f64).collect();
    let c = fornberg(0.0, &offs, order);
    let mut st = Stencil::default();
    for (j, k) in (lo..lo + len).enumerate() {
        if k == i {
            continue;
        }
        st.idx.push(k);
        st.w.push(c[order][j] / h.powi(order as i32));
    }
    st
}

/// Discretized sphere bundle: an (x¹, x²) lattice times a uniform θ-circle.
#[derive(Clone, Debug)]
pub struct SphereBundleGrid {
    pub spec: GridSpec,
    pub dx: [f64; 2],
    pub dtheta: f64,
    /// `xst[axis][order-1][node]` for orders 1, 2.
    xst: [[Vec<Stencil>; 2]; 2],
    /// `tst[order-1][node]` for orders 1..=4.
    tst: [Vec<Stencil>; 4],
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl SphereBundleGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.nx1 < 9 || spec.nx2 < 9 {
            return Err(Error::Config(format!("grid needs nx1, nx2 ≥ 9, got {}×{}", spec.nx1, spec.nx2)));
        }
        if spec.ntheta < 16 || !spec.ntheta.is_multiple_of(2) {
            return Err(Error::Config(format!("ntheta must be even and ≥ 16, got {}", spec.ntheta)));
        }
        for b in &spec.bounds {
            if !(b[0].is_finite() && b[1].is_finite() && b[1] > b[0]) {
                return Err(Error::Config(format!("invalid axis bounds {b:?}")));
            }
        }
        let n = [spec.nx1, spec.nx2];
        let periodic = spec.boundary == BoundaryMode::Periodic;
        let dx = [0, 1].map(|a| {
            let len = spec.bounds[a][1] - spec.bounds[a][0];
            if periodic { len / n[a] as f64 } else { len / (n[a] - 1) as f64 }
        });
        let xst = [0, 1].map(|a| {
            [1, 2].map(|order| {
                (0..n[a])
                    .map(|i| if periodic { periodic_stencil(i, n[a], dx[a], order, 2) } else { clamped_stencil(i, n[a], dx[a], order) })
                    .collect()
            })
        });
        let nt = spec.ntheta;
        let dtheta = TAU / nt as f64;
        let tst = [1, 2, 3, 4].map(|order| {
            let half = if order <= 2 { 2 } else { 3 };
            (0..nt).map(|i| periodic_stencil(i, nt, dtheta, order, half)).collect()
        });
        let cos = (0..nt).map(|i| (i as f64 * dtheta).cos()).collect();
        let sin = (0..nt).map(|i| (i as f64 * dtheta).sin()).collect();
        Ok(SphereBundleGrid { spec, dx, dtheta, xst, tst, cos, sin })
    }

    pub fn nx(&self) -> [usize; 2] {
        [self.spec.nx1, self.spec.nx2]
    }

    pub fn ntheta(&self) -> usize {
        self.spec.ntheta
    }

    pub fn periodic(&self) -> bool {
        self.spec.boundary == BoundaryMode::Periodic
    }

    pub fn n_xnodes(&self) -> usize {
        self.spec.nx1 * self.spec.nx2
    }

    pub fn len(&self) -> usize {
        self.n_xnodes() * self.spec.ntheta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn xnode(&self, i1: usize, i2: usize) -> usize {
        i1 * self.spec.nx2 + i2
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, it: usize) -> usize {
        self.xnode(i1, i2) * self.spec.ntheta + it
    }

    /// Inverse of [`idx`](Self::idx).
    pub fn unflatten(&self, k: usize) -> (usize, usize, usize) {
        let nt = self.spec.ntheta;
        let xn = k / nt;
        (xn / self.spec.nx2, xn % self.spec.nx2, k % nt)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.spec.bounds[axis][0] + i as f64 * self.dx[axis]
    }

    pub fn point(&self, i1: usize, i2: usize) -> ChartPoint {
        ChartPoint::new(self.coord(0, i1), self.coord(1, i2))
    }

    pub fn theta(&self, it: usize) -> f64 {
        it as f64 * self.dtheta
    }

    /// Unit vector (cos θ, sin θ) for node `it`.
    #[inline]
    pub fn direction(&self, it: usize) -> TangentVector {
        TangentVector::new(self.cos[it], self.sin[it])
    }

    pub fn domain(&self) -> ChartDomain {
        let b = self.spec.bounds;
        ChartDomain { bounds: Some(b), boundary: self.spec.boundary }
    }

    pub fn x_stencil(&self, axis: usize, order: usize, i: usize) -> &Stencil {
        &self.xst[axis][order - 1][i]
    }

    pub fn theta_stencil(&self, order: usize, it: usize) -> &Stencil {
        &self.tst[order - 1][it]
    }

    /// Distance (in nodes) to the nearest pinned boundary; `usize::MAX` when periodic.
    pub fn boundary_distance(&self, i1: usize, i2: usize) -> usize {
        if self.periodic() {
            return usize::MAX;
        }
        let [n1, n2] = self.nx();
        i1.min(n1 - 1 - i1).min(i2).min(n2 - 1 - i2)
    }

    pub fn is_boundary(&self, i1: usize, i2: usize) -> bool {
        self.boundary_distance(i1, i2) == 0
    }

    /// Interior in the sense used by acceptance checks: at least two nodes
    /// away from any pinned boundary.
    pub fn is_interior(&self, i1: usize, i2: usize) -> bool {
        self.boundary_distance(i1, i2) >= 2
    }

    /// Lattice position of `x` along `axis`, as (node, offset) if `x` sits on a node.
    pub fn node_of(&self, axis: usize, x: f64) -> Option<usize> {
        let n = self.nx()[axis];
        let s = (x - self.spec.bounds[axis][0]) / self.dx[axis];
        let r = s.round();
        if (s - r).abs() > 1e-9 {
            return None;
        }
        let r = r as isize;
        if self.periodic() {
            Some(r.rem_euclid(n as isize) as usize)
        } else if (0..n as isize).contains(&r) {
            Some(r as usize)
        } else {
            None
        }
    }

    /// θ-node of a direction, if it lies on the θ lattice.
    pub fn theta_node_of(&self, y: TangentVector) -> Option<usize> {
        let th = y.y2.atan2(y.y1).rem_euclid(TAU);
        let s = th / self.dtheta;
        let r = s.round();
        if (s - r).abs() > 1e-9 {
            return None;
        }
        Some((r as usize) % self.spec.ntheta)
    }

    /// Cubic Lagrange weights along `axis` at chart coordinate `x`.
    pub fn x_weights(&self, axis: usize, x: f64) -> ([usize; 4], [f64; 4]) {
        let n = self.nx()[axis];
        let s = (x - self.spec.bounds[axis][0]) / self.dx[axis];
        let base = s.floor() as isize;
        let start = if self.periodic() { base - 1 } else { (base - 1).clamp(0, n as isize - 4) };
        let mut idx = [0; 4];
        let mut pos = [0.0; 4];
        for k in 0..4 {
            let j = start + k as isize;
            pos[k] = j as f64;
            idx[k] = if self.periodic() { j.rem_euclid(n as isize) as usize } else { j as usize };
        }
        (idx, lagrange4(s, pos))
    }

    /// Periodic cubic weights in θ.
    pub fn theta_weights(&self, theta: f64) -> ([usize; 4], [f64; 4]) {
        let nt = self.spec.ntheta as isize;
        let s = theta.rem_euclid(TAU) / self.dtheta;
        let base = s.floor() as isize;
        let mut idx = [0; 4];
        let mut pos = [0.0; 4];
        for k in 0..4 {
            let j = base - 1 + k as isize;
            pos[k] = j as f64;
            idx[k] = j.rem_euclid(nt) as usize;
        }
        (idx, lagrange4(s, pos))
    }
}

fn lagrange4(s: f64, p: [f64; 4]) -> [f64; 4] {
    let mut w = [1.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                w[i] *= (s - p[j]) / (p[i] - p[j]);
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_classic_weights() {
        let c = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert!((c[1][j] - d1[j]).abs() < 1e-14);
            assert!((c[2][j] - d2[j]).abs() < 1e-14);
        }
    }

    fn spec(boundary: BoundaryMode) -> GridSpec {
        GridSpec { nx1: 17, nx2: 9, bounds: [[-1.0, 1.0], [0.0, 2.0]], boundary, ntheta: 32 }
    }

    #[test]
    fn stencils_are_fourth_order() {
        for mode in [BoundaryMode::Pinned, BoundaryMode::Periodic] {
            let g = SphereBundleGrid::new(spec(mode)).unwrap();
            for i in 0..17 {
                let f = |j: usize| g.coord(0, j).powi(4);
                let x = g.coord(0, i);
                let d1 = g.x_stencil(0, 1, i).apply(f(i), f);
                let d2 = g.x_stencil(0, 2, i).apply(f(i), f);
                if mode == BoundaryMode::Pinned {
                    assert!((d1 - 4.0 * x.powi(3)).abs() < 1e-10, "{i} {d1}");
                    assert!((d2 - 12.0 * x * x).abs() < 1e-9, "{i} {d2}");
                }
            }
        }
        let g = SphereBundleGrid::new(spec(BoundaryMode::Pinned)).unwrap();
        for order in 1..=4 {
            let f = |j: usize| (3.0 * g.theta(j)).sin();
            let d = g.theta_stencil(order, 5).apply(f(5), f);
            let exact = 3f64.powi(order as i32) * (3.0 * g.theta(5) + order as f64 * std::f64::consts::FRAC_PI_2).sin();
            assert!((d - exact).abs() < 0.05 * 3f64.powi(order as i32), "order {order}: {d} vs {exact}");
        }
    }

    #[test]
    fn node_lookup_and_validation() {
        let g = SphereBundleGrid::new(spec(BoundaryMode::Periodic)).unwrap();
        assert_eq!(g.node_of(0, -1.0 + 3.0 * g.dx[0]), Some(3));
        assert_eq!(g.node_of(0, 1.0), Some(0));
        assert_eq!(g.node_of(0, 0.01), None);
        assert_eq!(g.theta_node_of(TangentVector::new(0.0, 2.0)), Some(8));
        let mut bad = spec(BoundaryMode::Pinned);
        bad.ntheta = 15;
        assert!(SphereBundleGrid::new(bad).is_err());
    }
}
