use crate::error::Result;
use crate::geometry::{ChartPoint, FinslerStructure, Mat2, Pipeline, TangentVector};

/// Berwald frame at (x, y) and the associated frame/coframe on SM.
///
/// Vectors on TM are stored as `[dx¹, dx², dy¹, dy²]` components, covectors
/// likewise on the dual basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BerwaldFrame {
    /// `e[a]` are chart components of e₁, e₂ (e₂ = l = y/F).
    pub e: [[f64; 2]; 2],
    /// u^i_a = e[a][i]; v^a_i is its inverse.
    pub v: Mat2,
    /// ω¹, ω², ω³.
    pub omega: [[f64; 4]; 3],
    /// ê₁, ê₂ (horizontal lifts of e₁, e₂) and ê₃ = F u^i_1 ∂/∂y^i.
    pub ehat: [[f64; 4]; 3],
    pub g: Mat2,
    pub nonlinear: Mat2,
}

pub fn berwald_frame(s: &dyn FinslerStructure, x: ChartPoint, y: TangentVector) -> Result<BerwaldFrame> {
    y.check()?;
    let x = s.domain().admit(x)?;
    let p = Pipeline::new(&s.f2_jet(x, y)?, y)?;
    let g = p.metric();
    let n = p.nonlinear();
    let f = p.f2.sqrt();
    let fy = [p.fy[0] / (2.0 * f), p.fy[1] / (2.0 * f)];
    let sg = (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt();
    let yv = y.arr();
    let e = [[fy[1] / sg, -fy[0] / sg], [yv[0] / f, yv[1] / f]];
    // u[i][a] = e[a][i]
    let det = e[0][0] * e[1][1] - e[1][0] * e[0][1];
    let v = [[e[1][1] / det, -e[1][0] / det], [-e[0][1] / det, e[0][0] / det]];
    let mut omega = [[0.0; 4]; 3];
    omega[0][0] = sg / f * yv[1];
    omega[0][1] = -sg / f * yv[0];
    omega[1][0] = fy[0];
    omega[1][1] = fy[1];
    for i in 0..2 {
        omega[2][2 + i] = v[0][i] / f;
        for j in 0..2 {
            omega[2][j] += v[0][i] * n[i][j] / f;
        }
    }
    let lift = |vec: [f64; 2]| {
        let mut out = [vec[0], vec[1], 0.0, 0.0];
        for i in 0..2 {
            out[2 + i] = -(n[i][0] * vec[0] + n[i][1] * vec[1]);
        }
        out
    };
    let ehat = [lift(e[0]), lift(e[1]), [0.0, 0.0, f * e[0][0], f * e[0][1]]];
    Ok(BerwaldFrame { e, v, omega, ehat, g, nonlinear: n })
}

impl BerwaldFrame {
    /// g(e_a, e_b).
    pub fn gram(&self) -> Mat2 {
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        m[a][b] += self.g[i][j] * self.e[a][i] * self.e[b][j];
                    }
                }
            }
        }
        m
    }

    /// ⟨ω^a, ê_b⟩.
    pub fn duality(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] = (0..4).map(|k| self.omega[a][k] * self.ehat[b][k]).sum();
            }
        }
        m
    }
}
