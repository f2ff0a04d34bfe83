//! Scalar abstraction shared by plain floats and forward-mode dual numbers.
//!
//! `Dual<S>` is generic over any `Real`, so duals nest: `Dual<Dual<f64>>`
//! carries mixed second derivatives, three levels carry third derivatives.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    fn cst(x: f64) -> Self;
    /// Primal value with every infinitesimal part dropped.
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn abs(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n.unsigned_abs() {
            acc = acc * self;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
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
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Real> Dual<S> {
    pub fn new(re: S, eps: S) -> Self {
        Self { re, eps }
    }
    /// Independent variable: unit tangent.
    pub fn var(re: S) -> Self {
        Self { re, eps: S::one() }
    }
    pub fn constant(re: S) -> Self {
        Self { re, eps: S::zero() }
    }
    fn chain(self, f: S, df: S) -> Self {
        Self { re: f, eps: df * self.eps }
    }
}

impl<S: Real> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}
impl<S: Real> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}
impl<S: Real> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}
impl<S: Real> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re * inv;
        Self::new(q, (self.eps - q * o.eps) * inv)
    }
}
impl<S: Real> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}
impl<S: Real> Add<f64> for Dual<S> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Self::new(self.re + o, self.eps)
    }
}
impl<S: Real> Sub<f64> for Dual<S> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Self::new(self.re - o, self.eps)
    }
}
impl<S: Real> Mul<f64> for Dual<S> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self::new(self.re * o, self.eps * o)
    }
}
impl<S: Real> Div<f64> for Dual<S> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Self::new(self.re / o, self.eps / o)
    }
}
impl<S: Real> AddAssign for Dual<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<S: Real> SubAssign for Dual<S> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<S: Real> MulAssign for Dual<S> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl<S: Real> DivAssign for Dual<S> {
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl<S: Real> Real for Dual<S> {
    fn cst(x: f64) -> Self {
        Self::constant(S::cst(x))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn powf(self, p: f64) -> Self {
        self.chain(self.re.powf(p), self.re.powf(p - 1.0) * p)
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = x.re * x.re + self.re * self.re;
        Self::new(
            self.re.atan2(x.re),
            (x.re * self.eps - self.re * x.eps) / r2,
        )
    }
    fn abs(self) -> Self {
        if self.re.value() < 0.0 {
            -self
        } else {
            self
        }
    }
}

/// Lift a slice of values into duals seeded along `dir`.
pub fn seed<S: Real>(q: &[S], dir: &[S]) -> Vec<Dual<S>> {
    q.iter().zip(dir).map(|(&a, &b)| Dual::new(a, b)).collect()
}

/// Lift a slice of values into duals seeded along coordinate axis `k`.
pub fn seed_axis<S: Real>(q: &[S], k: usize) -> Vec<Dual<S>> {
    q.iter()
        .enumerate()
        .map(|(i, &a)| Dual::new(a, if i == k { S::one() } else { S::zero() }))
        .collect()
}

pub fn lift<S: Real>(q: &[S]) -> Vec<Dual<S>> {
    q.iter().map(|&a| Dual::constant(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Real>(x: S) -> S {
        (x * x).sin() * x.exp() / (x + 2.0).sqrt()
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        let x = 0.7;
        let d = f(Dual::var(x)).eps;
        let h = 1e-6;
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-8, "{d} vs {fd}");
    }

    #[test]
    fn nested_duals_give_second_derivative() {
        // d²/dx² of x³ is 6x
        let x = 1.3;
        let xx = Dual::new(Dual::var(x), Dual::constant(1.0));
        let y = xx * xx * xx;
        assert!((y.eps.eps - 6.0 * x).abs() < 1e-12);
        assert!((y.eps.re - 3.0 * x * x).abs() < 1e-12);
    }

    #[test]
    fn atan2_derivative() {
        let y = Dual::var(0.4);
        let x = Dual::constant(-1.1);
        let d = y.atan2(x).eps;
        assert!((d - (-1.1) / (1.21 + 0.16)).abs() < 1e-14);
    }

    #[test]
    fn powf_and_powi_agree() {
        let x = Dual::var(1.7);
        let a = x.powf(3.0);
        let b = x.powi(3);
        assert!((a.re - b.re).abs() < 1e-12 && (a.eps - b.eps).abs() < 1e-12);
        let c = x.powi(-2);
        assert!((c.eps + 2.0 / 1.7f64.powi(3)).abs() < 1e-12);
    }
}
