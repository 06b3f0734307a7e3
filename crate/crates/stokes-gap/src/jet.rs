//! Second-order Taylor jets: a value together with its exact gradient and Hessian.
//!
//! The auxiliary fields are closed-form expressions in the coordinates, the gap
//! thickness and the Keller function. Each primitive carries hand-written first
//! and second derivatives; sums, products and quotients combine them with the
//! product and quotient rules, so derivatives are exact up to rounding.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const D: usize> {
    pub v: f64,
    pub g: [f64; D],
    pub h: [[f64; D]; D],
}

impl<const D: usize> Jet<D> {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; D], h: [[0.0; D]; D] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The coordinate function `x ↦ x[i]` evaluated at `x`.
    pub fn coord(x: &[f64; D], i: usize) -> Self {
        let mut j = Self::constant(x[i]);
        j.g[i] = 1.0;
        j
    }

    pub fn recip(self) -> Self {
        let a = self.v;
        let inv = 1.0 / a;
        let inv2 = inv * inv;
        let mut out = Self::constant(inv);
        for i in 0..D {
            out.g[i] = -self.g[i] * inv2;
        }
        for i in 0..D {
            for j in 0..D {
                out.h[i][j] = -self.h[i][j] * inv2 + 2.0 * self.g[i] * self.g[j] * inv2 * inv;
            }
        }
        out
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.v *= s;
        for i in 0..D {
            out.g[i] *= s;
            for j in 0..D {
                out.h[i][j] *= s;
            }
        }
        out
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn laplacian(&self) -> f64 {
        (0..D).map(|i| self.h[i][i]).sum()
    }
}

impl<const D: usize> Add for Jet<D> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.v += o.v;
        for i in 0..D {
            out.g[i] += o.g[i];
            for j in 0..D {
                out.h[i][j] += o.h[i][j];
            }
        }
        out
    }
}

impl<const D: usize> AddAssign for Jet<D> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const D: usize> Add<f64> for Jet<D> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl<const D: usize> Sub for Jet<D> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const D: usize> Sub<f64> for Jet<D> {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl<const D: usize> Neg for Jet<D> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const D: usize> Mul for Jet<D> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..D {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        for i in 0..D {
            for j in 0..D {
                out.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j];
            }
        }
        out
    }
}

impl<const D: usize> Mul<f64> for Jet<D> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_polynomial() {
        let x = [0.3, -1.2];
        let a = Jet::coord(&x, 0);
        let b = Jet::coord(&x, 1);
        // f = x^2 y
        let f = a * a * b;
        assert!((f.v - 0.09 * -1.2).abs() < 1e-15);
        assert!((f.g[0] - 2.0 * 0.3 * -1.2).abs() < 1e-15);
        assert!((f.g[1] - 0.09).abs() < 1e-15);
        assert!((f.h[0][0] - 2.0 * -1.2).abs() < 1e-15);
        assert!((f.h[0][1] - 0.6).abs() < 1e-15);
        assert!((f.h[1][1]).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_derivatives() {
        let x = [2.0];
        let f = (Jet::coord(&x, 0) * Jet::coord(&x, 0) + 1.0).recip();
        // 1/(x^2+1): f' = -2x/(x^2+1)^2, f'' = (6x^2-2)/(x^2+1)^3
        assert!((f.v - 0.2).abs() < 1e-15);
        assert!((f.g[0] + 4.0 / 25.0).abs() < 1e-15);
        assert!((f.h[0][0] - 22.0 / 125.0).abs() < 1e-15);
    }
}
