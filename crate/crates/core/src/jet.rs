//! Second-order forward-mode automatic differentiation in three variables.
//!
//! A [`Jet2`] carries a value, its gradient and its Hessian. It is used to
//! push test functions through the hyperbolic chart maps and read off exact
//! (up to rounding) chart derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    /// Independent variable number `k` with value `v`.
    pub fn variable(v: f64, k: usize) -> Self {
        let mut g = [0.0; 3];
        g[k] = 1.0;
        Jet2 { v, g, h: [[0.0; 3]; 3] }
    }

    /// Apply a scalar function given `f(a)`, `f'(a)`, `f''(a)`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Jet2::constant(f0);
        for i in 0..3 {
            out.g[i] = f1 * self.g[i];
            for j in 0..3 {
                out.h[i][j] = f2 * self.g[i] * self.g[j] + f1 * self.h[i][j];
            }
        }
        out
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powi(self, k: i32) -> Self {
        let kf = k as f64;
        self.chain(self.v.powi(k), kf * self.v.powi(k - 1), kf * (kf - 1.0) * self.v.powi(k - 2))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(self, c: f64) -> Self {
        let mut out = self;
        out.v *= c;
        for i in 0..3 {
            out.g[i] *= c;
            for j in 0..3 {
                out.h[i][j] *= c;
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        let mut out = self;
        out.v += o.v;
        for i in 0..3 {
            out.g[i] += o.g[i];
            for j in 0..3 {
                out.h[i][j] += o.h[i][j];
            }
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..3 {
                out.h[i][j] = self.h[i][j] * o.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i]
                    + self.v * o.h[i][j];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, c: f64) -> Jet2 {
        let mut out = self;
        out.v += c;
        out
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_second_order() {
        // f = x*y^2 at (2,3): f_xy = 2y = 6, f_yy = 2x = 4
        let x = Jet2::variable(2.0, 0);
        let y = Jet2::variable(3.0, 1);
        let f = x * y * y;
        assert_eq!(f.v, 18.0);
        assert_eq!(f.g, [9.0, 12.0, 0.0]);
        assert_eq!(f.h[0][1], 6.0);
        assert_eq!(f.h[1][1], 4.0);
    }

    #[test]
    fn transcendental_chain() {
        let x = Jet2::variable(0.3, 0);
        let f = x.sin() * x.sin() + x.cos() * x.cos();
        assert!((f.v - 1.0).abs() < 1e-15);
        assert!(f.g[0].abs() < 1e-15 && f.h[0][0].abs() < 1e-14);
        let g = x.cosh() * x.cosh() - x.sinh() * x.sinh();
        assert!((g.v - 1.0).abs() < 1e-14 && g.h[0][0].abs() < 1e-13);
        let e = x.exp();
        assert!((e.h[0][0] - 0.3_f64.exp()).abs() < 1e-15);
        let s = (x * x).sqrt();
        assert!((s.g[0] - 1.0).abs() < 1e-14 && s.h[0][0].abs() < 1e-12);
    }
}
