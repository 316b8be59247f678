//! Small forward-mode numbers used inside the curvature pipeline.
//!
//! [`D2`] carries value, gradient and Hessian in the four variables
//! `(x1, x2, y1, y2)`; [`D1`] carries value and gradient only. Both are built
//! from the Taylor coefficients of a [`Jet`](crate::jet::Jet) and propagate
//! through the algebra for g⁻¹, G^i, N and Γ.

use std::ops::{Add, Mul, Neg, Sub};

const N: usize = 4;

#[derive(Clone, Copy, Debug, Default)]
pub struct D1 {
    pub v: f64,
    pub g: [f64; N],
}

impl D1 {
    pub fn cst(v: f64) -> Self {
        D1 { v, g: [0.0; N] }
    }

    pub fn scale(self, s: f64) -> Self {
        D1 { v: self.v * s, g: self.g.map(|q| q * s) }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        D1 { v: r, g: self.g.map(|q| -q * r * r) }
    }
}

impl Add for D1 {
    type Output = D1;
    fn add(self, o: D1) -> D1 {
        let mut g = self.g;
        for k in 0..N {
            g[k] += o.g[k];
        }
        D1 { v: self.v + o.v, g }
    }
}

impl Sub for D1 {
    type Output = D1;
    fn sub(self, o: D1) -> D1 {
        let mut g = self.g;
        for k in 0..N {
            g[k] -= o.g[k];
        }
        D1 { v: self.v - o.v, g }
    }
}

impl Mul for D1 {
    type Output = D1;
    fn mul(self, o: D1) -> D1 {
        let mut g = [0.0; N];
        for k in 0..N {
            g[k] = self.v * o.g[k] + self.g[k] * o.v;
        }
        D1 { v: self.v * o.v, g }
    }
}

impl Neg for D1 {
    type Output = D1;
    fn neg(self) -> D1 {
        self.scale(-1.0)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct D2 {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl D2 {
    pub fn cst(v: f64) -> Self {
        D2 { v, ..Default::default() }
    }

    pub fn var(i: usize, v: f64) -> Self {
        let mut d = D2::cst(v);
        d.g[i] = 1.0;
        d
    }

    pub fn first(&self) -> D1 {
        D1 { v: self.v, g: self.g }
    }

    /// Partial derivative along variable `k`, as a first-order number.
    pub fn partial(&self, k: usize) -> D1 {
        D1 { v: self.g[k], g: self.h[k] }
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.v *= s;
        for k in 0..N {
            self.g[k] *= s;
            for l in 0..N {
                self.h[k][l] *= s;
            }
        }
        self
    }

    /// f(self) given f, f', f'' at the value.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = D2::cst(f0);
        for k in 0..N {
            out.g[k] = f1 * self.g[k];
            for l in 0..N {
                out.h[k][l] = f1 * self.h[k][l] + f2 * self.g[k] * self.g[l];
            }
        }
        out
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for D2 {
    type Output = D2;
    fn add(mut self, o: D2) -> D2 {
        self.v += o.v;
        for k in 0..N {
            self.g[k] += o.g[k];
            for l in 0..N {
                self.h[k][l] += o.h[k][l];
            }
        }
        self
    }
}

impl Sub for D2 {
    type Output = D2;
    fn sub(mut self, o: D2) -> D2 {
        self.v -= o.v;
        for k in 0..N {
            self.g[k] -= o.g[k];
            for l in 0..N {
                self.h[k][l] -= o.h[k][l];
            }
        }
        self
    }
}

impl Mul for D2 {
    type Output = D2;
    fn mul(self, o: D2) -> D2 {
        let mut out = D2::cst(self.v * o.v);
        for k in 0..N {
            out.g[k] = self.v * o.g[k] + self.g[k] * o.v;
            for l in 0..N {
                out.h[k][l] = self.v * o.h[k][l]
                    + self.g[k] * o.g[l]
                    + self.g[l] * o.g[k]
                    + self.h[k][l] * o.v;
            }
        }
        out
    }
}

impl Neg for D2 {
    type Output = D2;
    fn neg(self) -> D2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_reciprocal() {
        let x = D2::var(0, 2.0);
        let y = D2::var(2, 3.0);
        let f = x * x * y; // x^2 y
        assert_eq!(f.v, 12.0);
        assert_eq!(f.g[0], 12.0);
        assert_eq!(f.g[2], 4.0);
        assert_eq!(f.h[0][0], 6.0);
        assert_eq!(f.h[0][2], 4.0);
        let r = x.recip();
        assert!((r.h[0][0] - 2.0 / 8.0).abs() < 1e-15);
        let d = (x * y).first().recip();
        assert!((d.g[0] + 3.0 / 36.0).abs() < 1e-15);
    }
}
