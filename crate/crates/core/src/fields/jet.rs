//! Forward-mode number types used to evaluate expressions with derivatives.
//!
//! [`Dual`] carries a value and its full gradient; [`Jet2`] additionally
//! carries the Hessian, propagated by the second-order chain rule. Both are
//! exact up to floating-point rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::expr::Func;

/// Operations the expression evaluator needs from a number type.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(value: f64, nvars: usize) -> Self;
    fn variable(index: usize, value: f64, nvars: usize) -> Self;
    fn value(&self) -> f64;
    fn apply(&self, func: Func) -> Self;
    fn powi(&self, k: i32) -> Self;
}

impl Scalar for f64 {
    fn constant(value: f64, _: usize) -> Self {
        value
    }

    fn variable(_: usize, value: f64, _: usize) -> Self {
        value
    }

    fn value(&self) -> f64 {
        *self
    }

    fn apply(&self, func: Func) -> Self {
        match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
        }
    }

    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
}

/// `(f(u), f'(u), f''(u))` for the elementary functions.
fn taylor2(func: Func, u: f64) -> (f64, f64, f64) {
    match func {
        Func::Sin => {
            let (s, c) = u.sin_cos();
            (s, c, -s)
        }
        Func::Cos => {
            let (s, c) = u.sin_cos();
            (c, -s, -c)
        }
        Func::Exp => {
            let e = u.exp();
            (e, e, e)
        }
        Func::Log => (u.ln(), 1.0 / u, -1.0 / (u * u)),
    }
}

fn powi_taylor(u: f64, k: i32) -> (f64, f64, f64) {
    let kf = k as f64;
    (u.powi(k), kf * u.powi(k - 1), kf * (kf - 1.0) * u.powi(k - 2))
}

/// First-order multivariate dual number.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Dual {
    fn chain(&self, f0: f64, f1: f64) -> Dual {
        Dual { value: f0, grad: self.grad.iter().map(|g| f1 * g).collect() }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual { value: self.value + rhs.value, grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual { value: self.value - rhs.value, grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect() }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value * rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a * rhs.value + self.value * b).collect(),
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let q = self.value / rhs.value;
        Dual { value: q, grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| (a - q * b) / rhs.value).collect() }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { value: -self.value, grad: self.grad.iter().map(|g| -g).collect() }
    }
}

impl Scalar for Dual {
    fn constant(value: f64, nvars: usize) -> Self {
        Dual { value, grad: vec![0.0; nvars] }
    }

    fn variable(index: usize, value: f64, nvars: usize) -> Self {
        let mut grad = vec![0.0; nvars];
        grad[index] = 1.0;
        Dual { value, grad }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn apply(&self, func: Func) -> Self {
        let (f0, f1, _) = taylor2(func, self.value);
        self.chain(f0, f1)
    }

    fn powi(&self, k: i32) -> Self {
        let (f0, f1, _) = powi_taylor(self.value, k);
        self.chain(f0, f1)
    }
}

/// Second-order multivariate jet: value, gradient and row-major Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    fn nvars(&self) -> usize {
        self.grad.len()
    }

    /// `f(u)` with `h_f = f'(u) h_u + f''(u) g_u g_u^T`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.nvars();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                hess.push(f1 * self.hess[i * n + j] + f2 * self.grad[i] * self.grad[j]);
            }
        }
        Jet2 { value: f0, grad: self.grad.iter().map(|g| f1 * g).collect(), hess }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a - b).collect(),
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let n = self.nvars();
        let (u, v) = (self.value, rhs.value);
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                hess.push(
                    self.hess[i * n + j] * v
                        + u * rhs.hess[i * n + j]
                        + self.grad[i] * rhs.grad[j]
                        + rhs.grad[i] * self.grad[j],
                );
            }
        }
        Jet2 { value: u * v, grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a * v + u * b).collect(), hess }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        let v = rhs.value;
        self * rhs.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }
}

impl Scalar for Jet2 {
    fn constant(value: f64, nvars: usize) -> Self {
        Jet2 { value, grad: vec![0.0; nvars], hess: vec![0.0; nvars * nvars] }
    }

    fn variable(index: usize, value: f64, nvars: usize) -> Self {
        let mut jet = Self::constant(value, nvars);
        jet.grad[index] = 1.0;
        jet
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn apply(&self, func: Func) -> Self {
        let (f0, f1, f2) = taylor2(func, self.value);
        self.chain(f0, f1, f2)
    }

    fn powi(&self, k: i32) -> Self {
        let (f0, f1, f2) = powi_taylor(self.value, k);
        self.chain(f0, f1, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = Dual::variable(0, 3.0, 2);
        let y = Dual::variable(1, 5.0, 2);
        let p = x * y;
        assert_eq!(p.value, 15.0);
        assert_eq!(p.grad, vec![5.0, 3.0]);
    }

    #[test]
    fn quotient_second_order() {
        // 1 / x at x = 2: f' = -1/4, f'' = 2/8
        let x = Jet2::variable(0, 2.0, 1);
        let q = Jet2::constant(1.0, 1) / x;
        assert_eq!(q.value, 0.5);
        assert_eq!(q.grad, vec![-0.25]);
        assert_eq!(q.hess, vec![0.25]);
    }

    #[test]
    fn mixed_partials() {
        // sin(x) * y^3 at (0.3, 2)
        let (x0, y0) = (0.3_f64, 2.0_f64);
        let x = Jet2::variable(0, x0, 2);
        let y = Jet2::variable(1, y0, 2);
        let f = x.apply(Func::Sin) * y.powi(3);
        let expect = [-x0.sin() * y0.powi(3), 3.0 * x0.cos() * y0 * y0, 3.0 * x0.cos() * y0 * y0, 6.0 * x0.sin() * y0];
        for (h, e) in f.hess.iter().zip(expect) {
            assert!((h - e).abs() < 1e-13, "{h} vs {e}");
        }
    }
}
