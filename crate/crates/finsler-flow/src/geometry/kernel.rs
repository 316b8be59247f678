use super::{min_eig, ChartPoint, Mat2, Tensor3, Tensor4, TangentVector};
use crate::dual::{D1, D2};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// g is declared degenerate when its smallest eigenvalue drops to this value.
pub const DEGENERACY: f64 = 1e-12;

const XI: [usize; 2] = [0, 1];
const YI: [usize; 2] = [2, 3];

fn d2_at(jet: &Jet, base: [u8; 4]) -> D2 {
    let mut out = D2::cst(jet.deriv(base));
    for k in 0..4 {
        let mut m = base;
        m[k] += 1;
        out.g[k] = jet.deriv(m);
        for l in k..4 {
            let mut n = m;
            n[l] += 1;
            let v = jet.deriv(n);
            out.h[k][l] = v;
            out.h[l][k] = v;
        }
    }
    out
}

fn unit(k: usize) -> [u8; 4] {
    let mut m = [0; 4];
    m[k] = 1;
    m
}

fn pair(k: usize, l: usize) -> [u8; 4] {
    let mut m = unit(k);
    m[l] += 1;
    m
}

/// Second-order forward quantities shared by every downstream object.
///
/// g, g⁻¹ and G^i carry value, gradient and Hessian in (x, y). Hessian blocks
/// that would need x-order 3 of F² are not available and are never read:
/// only x-derivatives of g up to order 2 and mixed/fiber derivatives of G enter.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub y: [f64; 2],
    pub f2: f64,
    pub fy: [f64; 2],
    pub fx: [f64; 2],
    pub g: [[D2; 2]; 2],
    pub ginv: [[D2; 2]; 2],
    pub spray: [D2; 2],
}

impl Pipeline {
    pub fn new(jet: &Jet, y: TangentVector) -> Result<Pipeline> {
        Self::with_threshold(jet, y, DEGENERACY)
    }

    pub fn with_threshold(jet: &Jet, y: TangentVector, degeneracy: f64) -> Result<Pipeline> {
        y.check()?;
        let yv = y.arr();
        let f2 = jet.value();
        let mut g = [[D2::default(); 2]; 2];
        for i in 0..2 {
            for j in i..2 {
                let v = d2_at(jet, pair(YI[i], YI[j])).scale(0.5);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        let gv = [[g[0][0].v, g[0][1].v], [g[1][0].v, g[1][1].v]];
        let lam = min_eig(&gv);
        if !(lam > degeneracy) || !(f2 > 0.0) {
            return Err(Error::DegenerateMetric { min_eig: lam.min(f2), node: None });
        }
        let inv_det = (g[0][0] * g[1][1] - g[0][1] * g[0][1]).recip();
        let ginv = [
            [g[1][1] * inv_det, -(g[0][1] * inv_det)],
            [-(g[0][1] * inv_det), g[0][0] * inv_det],
        ];
        let yy = [D2::var(2, yv[0]), D2::var(3, yv[1])];
        // H_h = F²_{y^h x^j} y^j − F²_{x^h}
        let mut h = [D2::default(); 2];
        for hh in 0..2 {
            let mut acc = -d2_at(jet, unit(XI[hh]));
            for j in 0..2 {
                acc = acc + d2_at(jet, pair(YI[hh], XI[j])) * yy[j];
            }
            h[hh] = acc;
        }
        let spray = [0, 1].map(|i| (ginv[i][0] * h[0] + ginv[i][1] * h[1]).scale(0.25));
        Ok(Pipeline {
            y: yv,
            f2,
            fy: [jet.d(0, 0, 1, 0), jet.d(0, 0, 0, 1)],
            fx: [jet.d(1, 0, 0, 0), jet.d(0, 1, 0, 0)],
            g,
            ginv,
            spray,
        })
    }

    pub fn metric(&self) -> Mat2 {
        let g = &self.g;
        [[g[0][0].v, g[0][1].v], [g[1][0].v, g[1][1].v]]
    }

    pub fn metric_inverse(&self) -> Mat2 {
        let g = &self.ginv;
        [[g[0][0].v, g[0][1].v], [g[1][0].v, g[1][1].v]]
    }

    pub fn cartan(&self) -> Tensor3 {
        let mut c = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    c[i][j][k] = self.g[i][j].g[YI[k]];
                }
            }
        }
        c
    }

    pub fn spray(&self) -> [f64; 2] {
        [self.spray[0].v, self.spray[1].v]
    }

    fn nonlinear_d1(&self) -> [[D1; 2]; 2] {
        let mut n = [[D1::default(); 2]; 2];
        for j in 0..2 {
            for i in 0..2 {
                n[j][i] = self.spray[j].partial(YI[i]);
            }
        }
        n
    }

    pub fn nonlinear(&self) -> Mat2 {
        let n = self.nonlinear_d1();
        [[n[0][0].v, n[0][1].v], [n[1][0].v, n[1][1].v]]
    }

    pub fn formal_christoffel(&self) -> Tensor3 {
        let dg = |k: usize, i: usize, j: usize| self.g[i][j].g[XI[k]];
        let gi = self.metric_inverse();
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut s = 0.0;
                    for h in 0..2 {
                        s += gi[i][h] * (dg(j, h, k) + dg(k, j, h) - dg(h, j, k));
                    }
                    out[i][j][k] = 0.5 * s;
                }
            }
        }
        out
    }

    fn chern_d1(&self, n: &[[D1; 2]; 2]) -> [[[D1; 2]; 2]; 2] {
        // δ_k g_ij = ∂_k g_ij − N^l_k ∂_{y^l} g_ij
        let mut dg = [[[D1::default(); 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let mut v = self.g[i][j].partial(XI[k]);
                    for l in 0..2 {
                        v = v - n[l][k] * self.g[i][j].partial(YI[l]);
                    }
                    dg[k][i][j] = v;
                    dg[k][j][i] = v;
                }
            }
        }
        let gi = [[self.ginv[0][0].first(), self.ginv[0][1].first()], [self.ginv[1][0].first(), self.ginv[1][1].first()]];
        let mut gam = [[[D1::default(); 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in j..2 {
                    let mut s = D1::cst(0.0);
                    for h in 0..2 {
                        s = s + gi[i][h] * (dg[j][h][k] + dg[k][j][h] - dg[h][j][k]);
                    }
                    gam[i][j][k] = s.scale(0.5);
                    gam[i][k][j] = gam[i][j][k];
                }
            }
        }
        gam
    }

    pub fn chern(&self) -> Tensor3 {
        let gam = self.chern_d1(&self.nonlinear_d1());
        gam.map(|a| a.map(|b| b.map(|c| c.v)))
    }

    /// R_j^i_kl = δ_kΓ^i_jl − δ_lΓ^i_jk + Γ^i_hk Γ^h_jl − Γ^i_hl Γ^h_jk
    pub fn hh_curvature(&self) -> Tensor4 {
        let n = self.nonlinear_d1();
        let gam = self.chern_d1(&n);
        let delta = |c: &D1, l: usize| c.g[XI[l]] - n[0][l].v * c.g[YI[0]] - n[1][l].v * c.g[YI[1]];
        let mut r = [[[[0.0; 2]; 2]; 2]; 2];
        for j in 0..2 {
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let mut v = delta(&gam[i][j][l], k) - delta(&gam[i][j][k], l);
                        for h in 0..2 {
                            v += gam[i][h][k].v * gam[h][j][l].v - gam[i][h][l].v * gam[h][j][k].v;
                        }
                        r[j][i][k][l] = v;
                    }
                }
            }
        }
        r
    }

    /// R^i_k from the spray alone.
    pub fn reduced(&self) -> Mat2 {
        let gs = &self.spray;
        let y = self.y;
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                let mut v = 2.0 * gs[i].g[XI[k]];
                for j in 0..2 {
                    v -= y[j] * gs[i].h[XI[j]][YI[k]];
                    v += 2.0 * gs[j].v * gs[i].h[YI[j]][YI[k]];
                    v -= gs[i].g[YI[j]] * gs[j].g[YI[k]];
                }
                r[i][k] = v / self.f2;
            }
        }
        r
    }

    pub fn ricci(&self) -> f64 {
        let r = self.reduced();
        r[0][0] + r[1][1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryJet {
    pub x: ChartPoint,
    pub y: TangentVector,
    pub f: f64,
    pub l: [f64; 2],
    pub g: Mat2,
    pub g_inv: Mat2,
    pub cartan: Tensor3,
    pub spray: [f64; 2],
    pub nonlinear: Mat2,
    pub formal: Tensor3,
    pub chern: Tensor3,
    pub hh: Tensor4,
    pub reduced: Mat2,
    pub ricci: f64,
}

impl GeometryJet {
    pub fn from_jet(jet: &Jet, x: ChartPoint, y: TangentVector) -> Result<GeometryJet> {
        let p = Pipeline::new(jet, y)?;
        let f = p.f2.sqrt();
        let reduced = p.reduced();
        Ok(GeometryJet {
            x,
            y,
            f,
            l: [y.y1 / f, y.y2 / f],
            g: p.metric(),
            g_inv: p.metric_inverse(),
            cartan: p.cartan(),
            spray: p.spray(),
            nonlinear: p.nonlinear(),
            formal: p.formal_christoffel(),
            chern: p.chern(),
            hh: p.hh_curvature(),
            ricci: reduced[0][0] + reduced[1][1],
            reduced,
        })
    }

    /// (1/F²)·y^j R_j^i_km y^m, which should reproduce `reduced`.
    pub fn contracted_hh(&self) -> Mat2 {
        let y = self.y.arr();
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                let mut s = 0.0;
                for j in 0..2 {
                    for m in 0..2 {
                        s += y[j] * self.hh[j][i][k][m] * y[m];
                    }
                }
                out[i][k] = s / (self.f * self.f);
            }
        }
        out
    }
}
