//! Positivity and integrability monitors over the whole lattice.

use super::{FieldOnSM, SphereBundleGrid};
use crate::geometry::{min_eig, Mat2};
use rustfft::{num_complex::Complex, FftPlanner};
use std::sync::Arc;

/// g_ij at every lattice node (unit directions).
#[derive(Clone, Debug)]
pub struct MetricField {
    pub grid: Arc<SphereBundleGrid>,
    pub g: Vec<Mat2>,
}

/// Spectral θ-derivative of a periodic sequence, orders 1 and 2.
pub struct ThetaSpectral {
    n: usize,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl ThetaSpectral {
    pub fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        ThetaSpectral { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    /// Returns (f', f'').
    pub fn derivatives(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let mut d1 = buf.clone();
        let mut d2 = buf;
        for k in 0..n {
            let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            if 2 * k == n {
                d1[k] = Complex::new(0.0, 0.0);
                d2[k] *= -(m * m);
                continue;
            }
            d1[k] *= Complex::new(0.0, m);
            d2[k] *= -(m * m);
        }
        self.inv.process(&mut d1);
        self.inv.process(&mut d2);
        let s = 1.0 / n as f64;
        (d1.iter().map(|c| c.re * s).collect(), d2.iter().map(|c| c.re * s).collect())
    }
}

/// g from φ via spectral θ-derivatives: in the polar basis (u, u⊥),
/// with ψ = φ², g = [[ψ, ψ'/2], [ψ'/2, ψ''/2 + ψ]].
pub fn metric_field_spectral(phi: &FieldOnSM) -> MetricField {
    let grid = phi.grid.clone();
    let nt = grid.ntheta();
    let sp = ThetaSpectral::new(nt);
    let mut g = Vec::with_capacity(grid.len());
    for xn in 0..grid.n_xnodes() {
        let psi: Vec<f64> = phi.values[xn * nt..(xn + 1) * nt].iter().map(|p| p * p).collect();
        let (d1, d2) = sp.derivatives(&psi);
        for it in 0..nt {
            let u = grid.direction(it);
            let (c, s) = (u.y1, u.y2);
            let a = psi[it];
            let b = 0.5 * d1[it];
            let d = 0.5 * d2[it] + psi[it];
            // R diag(a,b;b,d) Rᵀ with R = [[c, −s], [s, c]]
            let g11 = c * c * a - 2.0 * c * s * b + s * s * d;
            let g22 = s * s * a + 2.0 * c * s * b + c * c * d;
            let g12 = c * s * (a - d) + (c * c - s * s) * b;
            g.push([[g11, g12], [g12, g22]]);
        }
    }
    MetricField { grid, g }
}

/// min over nodes of the smallest eigenvalue of g.
pub fn ellipticity_monitor(m: &MetricField) -> f64 {
    m.g.iter().map(min_eig).fold(f64::INFINITY, f64::min)
}

/// Cartan tensor at every node from spectral θ-derivatives of g:
/// C_ijk = ∂g_ij/∂y^k = (dg_ij/dθ)·(−sin θ, cos θ)_k on the unit circle.
pub fn cartan_field(m: &MetricField) -> Vec<[[[f64; 2]; 2]; 2]> {
    let grid = &m.grid;
    let nt = grid.ntheta();
    let sp = ThetaSpectral::new(nt);
    let mut out = vec![[[[0.0; 2]; 2]; 2]; grid.len()];
    for xn in 0..grid.n_xnodes() {
        for i in 0..2 {
            for j in i..2 {
                let comp: Vec<f64> = (0..nt).map(|it| m.g[xn * nt + it][i][j]).collect();
                let (d1, _) = sp.derivatives(&comp);
                for it in 0..nt {
                    let u = grid.direction(it);
                    let dth = [-u.y2, u.y1];
                    for k in 0..2 {
                        out[xn * nt + it][i][j][k] = d1[it] * dth[k];
                        out[xn * nt + it][j][i][k] = d1[it] * dth[k];
                    }
                }
            }
        }
    }
    out
}

/// Largest violation of total symmetry of C_ijk = ∂g_ij/∂y^k.
pub fn symmetry_defect(c: &[[[f64; 2]; 2]; 2]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                r = r.max((c[i][j][k] - c[k][j][i]).abs()).max((c[i][j][k] - c[i][k][j]).abs());
            }
        }
    }
    r
}

/// max over nodes and index triples of |C_ijk − C_kji|, |C_ijk − C_ikj|.
pub fn integrability_residual(m: &MetricField) -> f64 {
    cartan_field(m).iter().map(symmetry_defect).fold(0.0, f64::max)
}
