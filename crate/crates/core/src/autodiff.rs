//! Forward-mode automatic differentiation.
//!
//! Cost functions are written once against the [`Real`] trait and evaluated
//! either on plain `f64` (value only) or on [`Dual`] numbers carrying a fixed
//! number of tangent lanes. A full gradient of an `n`-dimensional function is
//! assembled from `ceil(n / LANES)` forward sweeps, see [`gradient`].

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of tangent directions propagated per forward sweep.
pub const LANES: usize = 8;

/// Scalar arithmetic shared by `f64` and dual numbers.
pub trait Real:
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
    fn cst(value: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;

    fn square(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(value: f64) -> Self {
        value
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

/// Dual number with `K` tangent lanes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const K: usize> {
    pub v: f64,
    pub d: [f64; K],
}

impl<const K: usize> Dual<K> {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; K] }
    }

    /// Independent variable seeded in tangent lane `lane`.
    pub fn variable(v: f64, lane: usize) -> Self {
        let mut d = [0.0; K];
        d[lane] = 1.0;
        Self { v, d }
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= dv;
        }
        Self { v, d }
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(rhs.d.iter()) {
            *a += b;
        }
        Self { v: self.v + rhs.v, d }
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(rhs.d.iter()) {
            *a -= b;
        }
        Self { v: self.v - rhs.v, d }
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = self.d[i] * rhs.v + rhs.d[i] * self.v;
        }
        Self { v: self.v * rhs.v, d }
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = (self.d[i] - v * rhs.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const K: usize> Add<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self {
            v: self.v + rhs,
            d: self.d,
        }
    }
}

impl<const K: usize> Sub<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self {
            v: self.v - rhs,
            d: self.d,
        }
    }
}

impl<const K: usize> Mul<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.v * rhs, rhs)
    }
}

impl<const K: usize> Div<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        let inv = 1.0 / rhs;
        self.chain(self.v * inv, inv)
    }
}

impl<const K: usize> Real for Dual<K> {
    #[inline]
    fn cst(value: f64) -> Self {
        Self::constant(value)
    }
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
        let r2 = self.v * self.v + x.v * x.v;
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = (x.v * self.d[i] - self.v * x.d[i]) / r2;
        }
        Self {
            v: self.v.atan2(x.v),
            d,
        }
    }
}

/// Evaluates `f` and its full gradient by chunked forward sweeps.
///
/// `f` must be a pure function of its argument; it is called
/// `ceil(x.len() / LANES)` times.
pub fn gradient<F>(x: &[f64], grad: &mut [f64], mut f: F) -> f64
where
    F: FnMut(&[Dual<LANES>]) -> Dual<LANES>,
{
    assert_eq!(x.len(), grad.len());
    let mut seeded: Vec<Dual<LANES>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut value = f64::NAN;
    let n = x.len();
    if n == 0 {
        let out = f(&seeded);
        return out.v;
    }
    let mut start = 0;
    while start < n {
        let end = (start + LANES).min(n);
        for (lane, i) in (start..end).enumerate() {
            seeded[i] = Dual::variable(x[i], lane);
        }
        let out = f(&seeded);
        value = out.v;
        for (lane, i) in (start..end).enumerate() {
            grad[i] = out.d[lane];
            seeded[i] = Dual::constant(x[i]);
        }
        start = end;
    }
    value
}
