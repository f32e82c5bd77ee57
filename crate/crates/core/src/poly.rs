//! Exact polynomials in `(t, x1, x2)` with rational coefficients.
//!
//! Used to check the vector-field and null-form identities with zero
//! rounding error: every identity is reduced to "this polynomial is the zero
//! polynomial".

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Default total-degree bound for identity checks.
pub const DEFAULT_DEGREE_BOUND: u32 = 8;

/// Polynomial variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X1,
    X2,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::T, Var::X1, Var::X2];

    fn slot(self) -> usize {
        match self {
            Var::T => 0,
            Var::X1 => 1,
            Var::X2 => 2,
        }
    }
}

/// Sparse polynomial: exponent triple `(a, b, c)` of `t^a x1^b x2^c` to coefficient.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct PolyExpr {
    terms: BTreeMap<[u32; 3], BigRational>,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl PolyExpr {
    pub fn zero() -> Self {
        PolyExpr::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rat(c, 1))
    }

    pub fn var(v: Var) -> Self {
        let mut e = [0; 3];
        e[v.slot()] = 1;
        Self::monomial(BigRational::one(), e)
    }

    pub fn t() -> Self {
        Self::var(Var::T)
    }

    pub fn x1() -> Self {
        Self::var(Var::X1)
    }

    pub fn x2() -> Self {
        Self::var(Var::X2)
    }

    pub fn monomial(c: BigRational, exps: [u32; 3]) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        PolyExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; 3], &BigRational)> {
        self.terms.iter()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn check_degree(&self, bound: u32) -> Result<()> {
        let degree = self.degree();
        if degree > bound {
            Err(Error::DegreeOverflow { degree, bound })
        } else {
            Ok(())
        }
    }

    fn add_term(&mut self, e: [u32; 3], c: BigRational) {
        if c.is_zero() {
            return;
        }
        let remove = {
            let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
            *entry += c;
            entry.is_zero()
        };
        if remove {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        PolyExpr { terms: self.terms.iter().map(|(e, k)| (*e, k * c)).collect() }
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&rat(c, 1))
    }

    /// Exact partial derivative.
    pub fn deriv(&self, v: Var) -> Self {
        let s = v.slot();
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[s] == 0 {
                continue;
            }
            let mut ne = *e;
            ne[s] -= 1;
            out.add_term(ne, c * BigRational::from_integer(BigInt::from(e[s])));
        }
        out
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, p: [&BigRational; 3]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for k in 0..3 {
                for _ in 0..e[k] {
                    term *= p[k];
                }
            }
            acc += term;
        }
        acc
    }

    /// Floating-point evaluation at `(t, x1, x2)`.
    pub fn eval(&self, t: f64, x1: f64, x2: f64) -> f64 {
        let p = [t, x1, x2];
        self.terms
            .iter()
            .map(|(e, c)| {
                let cf = c.to_f64().unwrap_or(f64::NAN);
                cf * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32)
            })
            .sum()
    }

    /// Generic evaluation in any ring that embeds the rationals through `f64`.
    pub fn eval_with<R, F>(&self, vars: [&R; 3], lift: F) -> R
    where
        R: Clone + Add<Output = R> + Mul<Output = R>,
        F: Fn(f64) -> R,
    {
        let mut acc = lift(0.0);
        for (e, c) in &self.terms {
            let mut term = lift(c.to_f64().unwrap_or(f64::NAN));
            for k in 0..3 {
                for _ in 0..e[k] {
                    term = term * vars[k].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Random polynomial of total degree ≤ `degree` with small integer
    /// coefficients; roughly `density` of the admissible monomials are present.
    pub fn random<R: Rng>(rng: &mut R, degree: u32, density: f64) -> Self {
        let mut out = Self::zero();
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                for c in 0..=(degree - a - b) {
                    if rng.gen::<f64>() < density {
                        let k: i64 = rng.gen_range(-5..=5);
                        out.add_term([a, b, c], rat(k, 1));
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }
}

impl fmt::Debug for PolyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PolyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["t", "x1", "x2"];
        for (n, (e, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            write!(f, "{}", c.abs())?;
            for k in 0..3 {
                match e[k] {
                    0 => {}
                    1 => write!(f, "*{}", names[k])?,
                    p => write!(f, "*{}^{}", names[k], p)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &PolyExpr {
    type Output = PolyExpr;
    fn add(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &PolyExpr {
    type Output = PolyExpr;
    fn sub(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &PolyExpr {
    type Output = PolyExpr;
    fn mul(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.add_term([e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]], c1 * c2);
            }
        }
        out
    }
}

impl Neg for &PolyExpr {
    type Output = PolyExpr;
    fn neg(self) -> PolyExpr {
        PolyExpr { terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for PolyExpr {
            type Output = PolyExpr;
            fn $m(self, rhs: PolyExpr) -> PolyExpr {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for PolyExpr {
    type Output = PolyExpr;
    fn neg(self) -> PolyExpr {
        -&self
    }
}

/// Expression `a + r·b` with `r = |x|` and `a`, `b` polynomials; closed under
/// multiplication through `r² = x1² + x2²`. Represents the exact quantities
/// that arise when tangential derivatives (which carry `x/r`) are multiplied
/// through by `r`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SurdPoly {
    pub a: PolyExpr,
    pub b: PolyExpr,
}

impl SurdPoly {
    pub fn poly(a: PolyExpr) -> Self {
        SurdPoly { a, b: PolyExpr::zero() }
    }

    /// The expression `r`.
    pub fn r() -> Self {
        SurdPoly { a: PolyExpr::zero(), b: PolyExpr::one() }
    }

    pub fn rho2() -> PolyExpr {
        &PolyExpr::x1().pow(2) + &PolyExpr::x2().pow(2)
    }

    /// Zero as a function: since `r` is not a rational function, `a + r b ≡ 0`
    /// exactly when both parts vanish.
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &SurdPoly) -> SurdPoly {
        SurdPoly { a: &self.a + &o.a, b: &self.b + &o.b }
    }

    pub fn sub(&self, o: &SurdPoly) -> SurdPoly {
        SurdPoly { a: &self.a - &o.a, b: &self.b - &o.b }
    }

    pub fn mul(&self, o: &SurdPoly) -> SurdPoly {
        let rho2 = Self::rho2();
        SurdPoly {
            a: &(&self.a * &o.a) + &(&rho2 * &(&self.b * &o.b)),
            b: &(&self.a * &o.b) + &(&self.b * &o.a),
        }
    }

    pub fn mul_poly(&self, p: &PolyExpr) -> SurdPoly {
        SurdPoly { a: &self.a * p, b: &self.b * p }
    }

    /// `r · ∂_v (a + r b)`, which is again of the form `a' + r b'`.
    pub fn r_deriv(&self, v: Var) -> SurdPoly {
        match v {
            Var::T => SurdPoly { a: &Self::rho2() * &self.b.deriv(Var::T), b: self.a.deriv(Var::T) },
            Var::X1 | Var::X2 => {
                let xv = PolyExpr::var(v);
                SurdPoly {
                    a: &(&xv * &self.b) + &(&Self::rho2() * &self.b.deriv(v)),
                    b: self.a.deriv(v),
                }
            }
        }
    }

    pub fn eval(&self, t: f64, x1: f64, x2: f64) -> f64 {
        self.a.eval(t, x1, x2) + x1.hypot(x2) * self.b.eval(t, x1, x2)
    }
}
