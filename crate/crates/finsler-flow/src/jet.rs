//! Truncated multivariate Taylor polynomials in `(x1, x2, y1, y2)`.
//!
//! A [`Jet`] holds the Taylor coefficients of a function around a base point,
//! keeping monomials of x-order at most 2 and total order at most 4. That is
//! exactly the set of partial derivatives of F² that the curvature pipeline
//! consumes, so analytic structures get all of them from one evaluation of
//! their closed form on `Jet` arguments.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::LazyLock;

/// Number of independent variables: x1, x2, y1, y2.
pub const NVAR: usize = 4;
/// Maximum total order kept.
pub const MAX_ORDER: usize = 4;
/// Maximum combined order in the x variables.
pub const MAX_X_ORDER: usize = 2;
/// Number of stored coefficients.
pub const NCOEF: usize = 53;

pub type Multi = [u8; NVAR];

struct Layout {
    monomials: Vec<Multi>,
    index: Vec<u8>,
    table: Vec<(u8, u8, u8)>,
    factorial: Vec<f64>,
}

const NONE: u8 = u8::MAX;

fn key(m: &Multi) -> usize {
    ((m[0] as usize * 5 + m[1] as usize) * 5 + m[2] as usize) * 5 + m[3] as usize
}

fn admissible(m: &Multi) -> bool {
    let xo = (m[0] + m[1]) as usize;
    let tot = xo + (m[2] + m[3]) as usize;
    xo <= MAX_X_ORDER && tot <= MAX_ORDER
}

static LAYOUT: LazyLock<Layout> = LazyLock::new(|| {
    let mut monomials = Vec::new();
    for deg in 0..=MAX_ORDER as u8 {
        for a in (0..=deg).rev() {
            for b in (0..=deg - a).rev() {
                for c in (0..=deg - a - b).rev() {
                    let m = [a, b, c, deg - a - b - c];
                    if admissible(&m) {
                        monomials.push(m);
                    }
                }
            }
        }
    }
    assert_eq!(monomials.len(), NCOEF);
    let mut index = vec![NONE; 625];
    for (i, m) in monomials.iter().enumerate() {
        index[key(m)] = i as u8;
    }
    let mut table = Vec::new();
    for (i, a) in monomials.iter().enumerate() {
        for (j, b) in monomials.iter().enumerate() {
            let p = [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]];
            if admissible(&p) {
                table.push((i as u8, j as u8, index[key(&p)]));
            }
        }
    }
    let factorial = monomials
        .iter()
        .map(|m| m.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product())
        .collect();
    Layout { monomials, index, table, factorial }
});

/// Position of a multi-index in the coefficient array, if it is kept.
pub fn slot(m: Multi) -> Option<usize> {
    if m.iter().any(|&k| k as usize > MAX_ORDER) || !admissible(&m) {
        return None;
    }
    let i = LAYOUT.index[key(&m)];
    (i != NONE).then_some(i as usize)
}

/// All kept multi-indices, in storage order (graded by total degree).
pub fn monomials() -> &'static [Multi] {
    &LAYOUT.monomials
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; NCOEF],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::zero()
    }
}

impl Jet {
    pub const fn zero() -> Self {
        Jet { c: [0.0; NCOEF] }
    }

    pub fn constant(v: f64) -> Self {
        let mut j = Jet::zero();
        j.c[0] = v;
        j
    }

    /// The coordinate function `var` expanded around `value`.
    pub fn variable(var: usize, value: f64) -> Self {
        let mut j = Jet::constant(value);
        let mut m = [0u8; NVAR];
        m[var] = 1;
        j.c[slot(m).unwrap()] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of the monomial `m` (zero if truncated away).
    pub fn coeff(&self, m: Multi) -> f64 {
        slot(m).map_or(0.0, |i| self.c[i])
    }

    /// Partial derivative ∂^m at the base point.
    pub fn deriv(&self, m: Multi) -> f64 {
        slot(m).map_or(0.0, |i| self.c[i] * LAYOUT.factorial[i])
    }

    /// Same as [`deriv`](Self::deriv) with separate x and y orders.
    pub fn d(&self, x1: u8, x2: u8, y1: u8, y2: u8) -> f64 {
        self.deriv([x1, x2, y1, y2])
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in self.c.iter_mut() {
            *v *= s;
        }
        self
    }

    fn mul_into(&self, rhs: &Jet, out: &mut Jet) {
        let a = &self.c;
        let b = &rhs.c;
        let o = &mut out.c;
        for &(i, j, k) in LAYOUT.table.iter() {
            o[k as usize] += a[i as usize] * b[j as usize];
        }
    }

    /// Σ_k coef[k]·h^k where h is `self` minus its constant part.
    pub fn compose(&self, coef: [f64; MAX_ORDER + 1]) -> Jet {
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Jet::constant(coef[0]);
        // Horner: (((c4 h + c3) h + c2) h + c1) h + c0
        let mut acc = Jet::constant(coef[MAX_ORDER]);
        for k in (1..MAX_ORDER).rev() {
            let mut next = Jet::constant(coef[k]);
            acc.mul_into(&h, &mut next);
            acc = next;
        }
        acc.mul_into(&h, &mut out);
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.c[0];
        let r = 1.0 / a;
        self.compose([r, -r * r, r * r * r, -r * r * r * r, r * r * r * r * r])
    }

    pub fn sqrt(&self) -> Jet {
        let s = self.c[0].sqrt();
        let a = self.c[0];
        self.compose([
            s,
            0.5 / s,
            -0.125 / (s * a),
            0.0625 / (s * a * a),
            -5.0 / 128.0 / (s * a * a * a),
        ])
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        self.compose([e, e, e / 2.0, e / 6.0, e / 24.0])
    }

    pub fn ln(&self) -> Jet {
        let a = self.c[0];
        let r = 1.0 / a;
        self.compose([a.ln(), r, -r * r / 2.0, r * r * r / 3.0, -r * r * r * r / 4.0])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        self.compose([s, c, -s / 2.0, -c / 6.0, s / 24.0])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        self.compose([c, -s, -c / 2.0, s / 6.0, c / 24.0])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        self.compose([s, c, s / 2.0, c / 6.0, s / 24.0])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        self.compose([c, s, c / 2.0, s / 6.0, c / 24.0])
    }

    pub fn atan(&self) -> Jet {
        let z = self.c[0];
        let q = 1.0 / (1.0 + z * z);
        self.compose([
            z.atan(),
            q,
            -z * q * q,
            (3.0 * z * z - 1.0) * q * q * q / 3.0,
            z * (1.0 - z * z) * q * q * q * q,
        ])
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.c[0];
        let mut coef = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        let mut fact = 1.0;
        for (k, slot) in coef.iter_mut().enumerate() {
            if k > 0 {
                falling *= p - (k as f64 - 1.0);
                fact *= k as f64;
            }
            *slot = falling / fact * a.powf(p - k as f64);
        }
        self.compose(coef)
    }

    pub fn powi(&self, n: i32) -> Jet {
        match n {
            0 => Jet::constant(1.0),
            1 => *self,
            2 => *self * *self,
            n if n < 0 => self.powi(-n).recip(),
            n => {
                let half = self.powi(n / 2);
                let sq = half * half;
                if n % 2 == 1 {
                    sq * *self
                } else {
                    sq
                }
            }
        }
    }

    /// Re-expand under the linear substitution `v_old = m · v_new`, i.e.
    /// the jet of `f(m·v)` when `self` is the jet of `f` at `m·v0`.
    /// The matrix must not mix x with y, otherwise truncation is inconsistent.
    pub fn linear_substitute(&self, m: [[f64; NVAR]; NVAR]) -> Jet {
        let lin: Vec<Jet> = (0..NVAR)
            .map(|i| {
                let mut j = Jet::zero();
                for (k, &mk) in m[i].iter().enumerate() {
                    let mut e = [0u8; NVAR];
                    e[k] = 1;
                    j.c[slot(e).unwrap()] = mk;
                }
                j
            })
            .collect();
        let pows: Vec<Vec<Jet>> = lin
            .iter()
            .map(|l| {
                let mut p = vec![Jet::constant(1.0)];
                for k in 1..=MAX_ORDER {
                    let next = p[k - 1] * *l;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Jet::zero();
        for (i, mono) in LAYOUT.monomials.iter().enumerate() {
            let c = self.c[i];
            if c == 0.0 {
                continue;
            }
            let mut term = pows[0][mono[0] as usize];
            for v in 1..NVAR {
                if mono[v] > 0 {
                    term *= pows[v][mono[v] as usize];
                }
            }
            out += term.scale(c);
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self += rhs;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= b;
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet::zero();
        self.mul_into(&rhs, &mut out);
        out
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip().scale(self)
    }
}

/// Numbers a closed-form F² can be written against: plain `f64` for point
/// evaluation and [`Jet`] for derivatives.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn recip(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn val(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    fn val(&self) -> f64 {
        self.c[0]
    }
    fn sqrt(self) -> Self {
        Jet::sqrt(&self)
    }
    fn exp(self) -> Self {
        Jet::exp(&self)
    }
    fn ln(self) -> Self {
        Jet::ln(&self)
    }
    fn sin(self) -> Self {
        Jet::sin(&self)
    }
    fn cos(self) -> Self {
        Jet::cos(&self)
    }
    fn recip(self) -> Self {
        Jet::recip(&self)
    }
    fn powi(self, n: i32) -> Self {
        Jet::powi(&self, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(v: [f64; 4]) -> [Jet; 4] {
        [0, 1, 2, 3].map(|i| Jet::variable(i, v[i]))
    }

    #[test]
    fn layout_is_graded() {
        assert_eq!(monomials().len(), NCOEF);
        assert_eq!(monomials()[0], [0, 0, 0, 0]);
        assert!(slot([3, 0, 0, 0]).is_none());
        assert!(slot([1, 1, 1, 1]).is_some());
        assert!(slot([0, 0, 2, 3]).is_none());
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let [x1, _x2, y1, y2] = at([0.3, -0.2, 1.5, 0.7]);
        // f = x1^2 y1 y2 + y1^4
        let f = x1 * x1 * y1 * y2 + y1.powi(4);
        assert!((f.d(2, 0, 1, 1) - 2.0).abs() < 1e-14);
        assert!((f.d(1, 0, 1, 1) - 0.6).abs() < 1e-14);
        assert!((f.d(0, 0, 4, 0) - 24.0).abs() < 1e-12);
        assert!((f.d(0, 0, 3, 0) - 24.0 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn elementary_functions_match_derivatives() {
        let [x1, _, y1, _] = at([0.4, 0.0, 0.9, 0.0]);
        let e = (x1 * y1).exp();
        // d^2/dx1^2 e^{x y} = y^2 e^{xy}
        let v = (0.4f64 * 0.9).exp();
        assert!((e.d(2, 0, 0, 0) - 0.81 * v).abs() < 1e-12);
        let s = y1.sqrt();
        assert!((s.d(0, 0, 3, 0) - 3.0 / 8.0 * 0.9f64.powf(-2.5)).abs() < 1e-12);
        let a = y1.atan();
        assert!((a.d(0, 0, 2, 0) - (-2.0 * 0.9 / (1.0 + 0.81f64).powi(2))).abs() < 1e-12);
        let l = y1.ln();
        assert!((l.d(0, 0, 4, 0) + 6.0 / 0.9f64.powi(4)).abs() < 1e-10);
        let p = y1.powf(1.5);
        assert!((p.d(0, 0, 2, 0) - 0.75 / 0.9f64.sqrt()).abs() < 1e-12);
        let t = x1.sin() * x1.sin() + x1.cos() * x1.cos();
        assert!((t - Jet::constant(1.0)).c.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn linear_substitution_matches_direct_evaluation() {
        let f = |v: [Jet; 4]| (v[0] * v[2] + v[1] * v[3] * v[3]).exp() * (v[2] * v[2] + v[3] * v[3]);
        let a = [[0.5, 0.2], [-0.1, 0.8]];
        let x0 = [0.2, 0.1];
        let y0 = [1.0, -0.4];
        let xm = [a[0][0] * x0[0] + a[0][1] * x0[1], a[1][0] * x0[0] + a[1][1] * x0[1]];
        let ym = [a[0][0] * y0[0] + a[0][1] * y0[1], a[1][0] * y0[0] + a[1][1] * y0[1]];
        let inner = f(at([xm[0], xm[1], ym[0], ym[1]]));
        let m = [
            [a[0][0], a[0][1], 0.0, 0.0],
            [a[1][0], a[1][1], 0.0, 0.0],
            [0.0, 0.0, a[0][0], a[0][1]],
            [0.0, 0.0, a[1][0], a[1][1]],
        ];
        let sub = inner.linear_substitute(m);
        let v = at([x0[0], x0[1], y0[0], y0[1]]);
        let mapped = [
            v[0] * a[0][0] + v[1] * a[0][1],
            v[0] * a[1][0] + v[1] * a[1][1],
            v[2] * a[0][0] + v[3] * a[0][1],
            v[2] * a[1][0] + v[3] * a[1][1],
        ];
        let direct = f(mapped);
        for (p, q) in sub.c.iter().zip(direct.c.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
