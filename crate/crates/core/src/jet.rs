//! Truncated Taylor arithmetic in one or two variables.
//!
//! A [`Jet`] of order `k` carries the Taylor coefficients of a function up to
//! total degree `k` around an expansion point. At order 2 in two variables
//! this is exactly the second-order hyper-dual number
//! `(f, f_u, f_v, f_uu, f_uv, f_vv)`; higher orders are needed when a normal
//! field is itself differentiated (polar surfaces, Weingarten checks).
//!
//! Coefficients are stored in graded order: for two variables the monomial
//! `u^i v^j` of degree `d = i + j` lives at `d(d+1)/2 + j`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Highest supported total degree.
pub const MAX_ORDER: usize = 10;
const CAP: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JetShape {
    vars: u8,
    order: u8,
}

impl JetShape {
    pub fn univariate(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        JetShape {
            vars: 1,
            order: order as u8,
        }
    }

    pub fn bivariate(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        JetShape {
            vars: 2,
            order: order as u8,
        }
    }

    pub fn vars(&self) -> usize {
        self.vars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn len(&self) -> usize {
        let k = self.order();
        match self.vars {
            1 => k + 1,
            _ => (k + 1) * (k + 2) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage index of the monomial `u^i v^j` (`j` must be 0 for one variable).
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + j <= self.order());
        match self.vars {
            1 => {
                debug_assert_eq!(j, 0);
                i
            }
            _ => {
                let d = i + j;
                d * (d + 1) / 2 + j
            }
        }
    }

    /// Exponents `(i, j)` of the monomial stored at `idx`.
    pub fn exponents(&self, idx: usize) -> (usize, usize) {
        match self.vars {
            1 => (idx, 0),
            _ => {
                let mut d = 0;
                while (d + 1) * (d + 2) / 2 <= idx {
                    d += 1;
                }
                let j = idx - d * (d + 1) / 2;
                (d - j, j)
            }
        }
    }

    fn table_slot(&self) -> usize {
        (self.vars as usize - 1) * (MAX_ORDER + 1) + self.order()
    }
}

type ProductTable = Vec<(u8, u8, u8)>;

fn product_table(shape: JetShape) -> &'static ProductTable {
    static TABLES: OnceLock<Vec<ProductTable>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let mut all = Vec::with_capacity(2 * (MAX_ORDER + 1));
        for vars in 1..=2u8 {
            for order in 0..=MAX_ORDER as u8 {
                let s = JetShape { vars, order };
                let n = s.len();
                let mut t = Vec::new();
                for a in 0..n {
                    let (ai, aj) = s.exponents(a);
                    for b in 0..n {
                        let (bi, bj) = s.exponents(b);
                        if ai + aj + bi + bj <= s.order() {
                            t.push((a as u8, b as u8, s.index(ai + bi, aj + bj) as u8));
                        }
                    }
                }
                all.push(t);
            }
        }
        all
    });
    &tables[shape.table_slot()]
}

/// A truncated Taylor expansion.
#[derive(Clone, Copy)]
pub struct Jet {
    shape: JetShape,
    c: [f64; CAP],
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("shape", &self.shape)
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.coeffs() == other.coeffs()
    }
}

impl Jet {
    pub fn constant(x: f64, shape: JetShape) -> Self {
        let mut c = [0.0; CAP];
        c[0] = x;
        Jet { shape, c }
    }

    /// The independent variable `var` (0 = u, 1 = v) expanded around `x`.
    pub fn variable(x: f64, shape: JetShape, var: usize) -> Self {
        assert!(var < shape.vars(), "variable index out of range");
        let mut j = Self::constant(x, shape);
        if shape.order() >= 1 {
            let idx = if var == 0 {
                shape.index(1, 0)
            } else {
                shape.index(0, 1)
            };
            j.c[idx] = 1.0;
        }
        j
    }

    pub fn from_coeffs(shape: JetShape, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), shape.len());
        let mut c = [0.0; CAP];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Jet { shape, c }
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.shape.len()]
    }

    /// Taylor coefficient of `u^i v^j`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.shape.order() || (self.shape.vars() == 1 && j > 0) {
            return 0.0;
        }
        self.c[self.shape.index(i, j)]
    }

    /// The partial derivative `∂^{i+j} f / ∂u^i ∂v^j` at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    /// Differentiates the expansion with respect to `var`, lowering the order by one.
    pub fn partial(&self, var: usize) -> Jet {
        let order = self.shape.order();
        assert!(order >= 1, "cannot differentiate an order-0 jet");
        let shape = JetShape {
            vars: self.shape.vars,
            order: (order - 1) as u8,
        };
        let mut out = Jet::constant(0.0, shape);
        for idx in 0..shape.len() {
            let (i, j) = shape.exponents(idx);
            out.c[idx] = if var == 0 {
                (i + 1) as f64 * self.coeff(i + 1, j)
            } else {
                (j + 1) as f64 * self.coeff(i, j + 1)
            };
        }
        out
    }

    /// Drops every term above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.shape.order());
        let shape = JetShape {
            vars: self.shape.vars,
            order: order as u8,
        };
        let mut out = Jet::constant(0.0, shape);
        for idx in 0..shape.len() {
            let (i, j) = shape.exponents(idx);
            out.c[idx] = self.coeff(i, j);
        }
        out
    }

    /// Re-expresses a univariate expansion in `var` of a bivariate shape of the same order.
    pub fn embed(&self, var: usize) -> Jet {
        assert_eq!(self.shape.vars(), 1, "embed expects a univariate jet");
        let shape = JetShape::bivariate(self.shape.order());
        let mut out = Jet::constant(0.0, shape);
        for k in 0..=self.shape.order() {
            let idx = if var == 0 {
                shape.index(k, 0)
            } else {
                shape.index(0, k)
            };
            out.c[idx] = self.c[k];
        }
        out
    }

    /// Integrates a univariate expansion from the expansion point, `∫_0^δ f`,
    /// returning a jet of one order higher (capped at [`MAX_ORDER`]).
    pub fn integrate_univariate(&self) -> Jet {
        assert_eq!(self.shape.vars(), 1);
        let order = (self.shape.order() + 1).min(MAX_ORDER);
        let shape = JetShape::univariate(order);
        let mut out = Jet::constant(0.0, shape);
        for k in 1..=order {
            out.c[k] = self.c[k - 1] / k as f64;
        }
        out
    }

    fn nilpotent(&self) -> Jet {
        let mut d = *self;
        d.c[0] = 0.0;
        d
    }

    /// Evaluates `Σ t_k (x - x0)^k` where `t_k = f^(k)(x0)/k!`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let delta = self.nilpotent();
        let k = self.shape.order();
        let mut acc = Jet::constant(taylor[k], self.shape);
        for t in taylor[..k].iter().rev() {
            acc = acc * delta;
            acc.c[0] += *t;
        }
        acc
    }

    fn cyclic(&self, seq: [f64; 4], start: usize) -> Jet {
        let k = self.shape.order();
        let mut t = [0.0; MAX_ORDER + 1];
        for (n, slot) in t.iter_mut().enumerate().take(k + 1) {
            *slot = seq[(start + n) % 4] * inv_factorial(n);
        }
        self.compose(&t[..=k])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.cyclic([s, c, -s, -c], 0)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.cyclic([c, -s, -c, s], 0)
    }

    pub fn sinh(&self) -> Jet {
        let x = self.value();
        self.cyclic([x.sinh(), x.cosh(), x.sinh(), x.cosh()], 0)
    }

    pub fn cosh(&self) -> Jet {
        let x = self.value();
        self.cyclic([x.cosh(), x.sinh(), x.cosh(), x.sinh()], 0)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let k = self.shape.order();
        let mut t = [0.0; MAX_ORDER + 1];
        for (n, slot) in t.iter_mut().enumerate().take(k + 1) {
            *slot = e * inv_factorial(n);
        }
        self.compose(&t[..=k])
    }

    /// `x^alpha` for a positive expansion point.
    pub fn powf(&self, alpha: f64) -> Jet {
        let x0 = self.value();
        let k = self.shape.order();
        let mut t = [0.0; MAX_ORDER + 1];
        t[0] = x0.powf(alpha);
        for n in 1..=k {
            t[n] = t[n - 1] * (alpha - (n - 1) as f64) / (n as f64 * x0);
        }
        self.compose(&t[..=k])
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        let x0 = self.value();
        let k = self.shape.order();
        let mut t = [0.0; MAX_ORDER + 1];
        t[0] = 1.0 / x0;
        for n in 1..=k {
            t[n] = -t[n - 1] / x0;
        }
        self.compose(&t[..=k])
    }

    pub fn ln(&self) -> Jet {
        let x0 = self.value();
        let k = self.shape.order();
        let mut t = [0.0; MAX_ORDER + 1];
        t[0] = x0.ln();
        let mut p = 1.0;
        for (n, slot) in t.iter_mut().enumerate().take(k + 1).skip(1) {
            p /= x0;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            *slot = sign * p / n as f64;
        }
        self.compose(&t[..=k])
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = Jet::constant(1.0, self.shape);
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn inv_factorial(n: usize) -> f64 {
    1.0 / factorial(n)
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.shape, rhs.shape);
        for k in 0..self.shape.len() {
            self.c[k] += rhs.c[k];
        }
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.shape, rhs.shape);
        for k in 0..self.shape.len() {
            self.c[k] -= rhs.c[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for k in 0..self.shape.len() {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.shape, rhs.shape);
        let mut out = Jet::constant(0.0, self.shape);
        for &(a, b, o) in product_table(self.shape) {
            out.c[o as usize] += self.c[a as usize] * rhs.c[b as usize];
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
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
    fn mul(mut self, rhs: f64) -> Jet {
        for k in 0..self.shape.len() {
            self.c[k] *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

/// Arithmetic shared by plain floats and jets, so geometric formulas are
/// written once and evaluated either numerically or with derivatives.
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
    fn value(&self) -> f64;
    /// A constant with the same shape as `self`.
    fn lift(&self, x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn exp(self) -> Self;
    fn recip(self) -> Self;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn lift(&self, x: f64) -> Self {
        Jet::constant(x, self.shape)
    }
    fn sqrt(self) -> Self {
        Jet::sqrt(&self)
    }
    fn sin(self) -> Self {
        Jet::sin(&self)
    }
    fn cos(self) -> Self {
        Jet::cos(&self)
    }
    fn sinh(self) -> Self {
        Jet::sinh(&self)
    }
    fn cosh(self) -> Self {
        Jet::cosh(&self)
    }
    fn exp(self) -> Self {
        Jet::exp(&self)
    }
    fn recip(self) -> Self {
        Jet::recip(&self)
    }
}
