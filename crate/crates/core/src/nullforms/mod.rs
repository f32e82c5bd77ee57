//! Classical quadratic null forms, assembly of the nonlinearities and the
//! tangential/remainder decomposition.
//!
//! Gradients are passed as `(∂_t, ∂_1, ∂_2)` triples. Every form is written
//! once, generically over [`Ring`], and instantiated for plain numbers, exact
//! polynomials and (pointwise) grid fields.

pub mod identities;

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Grid};
use crate::poly::{PolyExpr, Var};
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Minimal commutative-ring interface shared by `f64` and [`PolyExpr`].
pub trait Ring: Clone {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
}

impl Ring for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    #[inline]
    fn scale(&self, c: f64) -> Self {
        c * self
    }
}

impl Ring for PolyExpr {
    fn zero() -> Self {
        PolyExpr::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: f64) -> Self {
        // Exact: every finite double is a dyadic rational.
        let c = BigRational::from_float(c).unwrap_or_else(BigRational::zero);
        PolyExpr::scale(self, &c)
    }
}

/// Gradient triple `(∂_t, ∂_1, ∂_2)`.
pub type Grad<R> = [R; 3];

/// Exact gradient of a polynomial.
pub fn poly_grad(p: &PolyExpr) -> Grad<PolyExpr> {
    [p.deriv(Var::T), p.deriv(Var::X1), p.deriv(Var::X2)]
}

/// `Q0(φ,ψ) = φ_t ψ_t − ∇φ·∇ψ`
pub fn q0<R: Ring>(a: &Grad<R>, b: &Grad<R>) -> R {
    a[0].mul(&b[0]).sub(&a[1].mul(&b[1])).sub(&a[2].mul(&b[2]))
}

/// `Q0i(φ,ψ) = φ_t ψ_i − ψ_t φ_i`
pub fn q0i<R: Ring>(a: &Grad<R>, b: &Grad<R>, i: Axis) -> R {
    let k = 1 + i.index();
    a[0].mul(&b[k]).sub(&b[0].mul(&a[k]))
}

/// `Q12(φ,ψ) = φ_1 ψ_2 − φ_2 ψ_1`
pub fn q12<R: Ring>(a: &Grad<R>, b: &Grad<R>) -> R {
    a[1].mul(&b[2]).sub(&a[2].mul(&b[1]))
}

/// The four basis forms, in coefficient order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Form {
    Q0,
    Q01,
    Q02,
    Q12,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Q0, Form::Q01, Form::Q02, Form::Q12];

    pub fn index(self) -> usize {
        match self {
            Form::Q0 => 0,
            Form::Q01 => 1,
            Form::Q02 => 2,
            Form::Q12 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Form::Q0 => "Q0",
            Form::Q01 => "Q01",
            Form::Q02 => "Q02",
            Form::Q12 => "Q12",
        }
    }

    pub fn eval<R: Ring>(self, a: &Grad<R>, b: &Grad<R>) -> R {
        match self {
            Form::Q0 => q0(a, b),
            Form::Q01 => q0i(a, b, Axis::X1),
            Form::Q02 => q0i(a, b, Axis::X2),
            Form::Q12 => q12(a, b),
        }
    }
}

/// `c0 Q0 + c01 Q01 + c02 Q02 + c12 Q12`
pub fn eval_n<R: Ring>(coeffs: &[f64; 4], a: &Grad<R>, b: &Grad<R>) -> R {
    let mut acc = R::zero();
    for f in Form::ALL {
        let c = coeffs[f.index()];
        if c != 0.0 {
            acc = acc.add(&f.eval(a, b).scale(c));
        }
    }
    acc
}

/// Coefficients of the two nonlinearities in the basis of [`Form`], plus
/// the spatial direction carried by their second slot:
/// `N(w, ∂Φ) := Σ_f c_f Q_f(w, ∂_d Φ)` with `d = deriv_axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullFormSpec {
    pub n1_coeffs: [f64; 4],
    pub n2_coeffs: [f64; 4],
    pub deriv_axis: Axis,
}

impl Default for NullFormSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl NullFormSpec {
    /// The linear system.
    pub fn zero() -> Self {
        NullFormSpec { n1_coeffs: [0.0; 4], n2_coeffs: [0.0; 4], deriv_axis: Axis::X1 }
    }

    pub fn new(n1_coeffs: [f64; 4], n2_coeffs: [f64; 4], deriv_axis: Axis) -> Result<Self> {
        let s = NullFormSpec { n1_coeffs, n2_coeffs, deriv_axis };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1_coeffs.iter().chain(&self.n2_coeffs).all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("null-form coefficients"))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.n1_coeffs.iter().chain(&self.n2_coeffs).all(|&c| c == 0.0)
    }

    /// Sum of absolute coefficients.
    pub fn l1(&self) -> f64 {
        self.n1_coeffs.iter().chain(&self.n2_coeffs).map(|c| c.abs()).sum()
    }
}

fn check_grads(a: &[&Field; 3], b: &[&Field; 3]) -> Result<usize> {
    let n = a[0].n();
    for f in a.iter().chain(b.iter()) {
        if f.n() != n {
            return Err(Error::ShapeMismatch { expected: n, got: f.n() });
        }
    }
    Ok(n)
}

/// Pointwise evaluation of `eval_n` on gradient fields.
pub fn eval_n_fields(coeffs: &[f64; 4], a: [&Field; 3], b: [&Field; 3]) -> Result<Field> {
    let n = check_grads(&a, &b)?;
    let (a0, a1, a2) = (a[0].as_slice(), a[1].as_slice(), a[2].as_slice());
    let (b0, b1, b2) = (b[0].as_slice(), b[1].as_slice(), b[2].as_slice());
    let data: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let ga = [a0[k], a1[k], a2[k]];
            let gb = [b0[k], b1[k], b2[k]];
            eval_n(coeffs, &ga, &gb)
        })
        .collect();
    Field::from_vec(n, data).map_err(|_| Error::NonFinite("null form evaluation"))
}

/// Pointwise evaluation of a single basis form on gradient fields.
pub fn form_fields(form: Form, a: [&Field; 3], b: [&Field; 3]) -> Result<Field> {
    let mut c = [0.0; 4];
    c[form.index()] = 1.0;
    eval_n_fields(&c, a, b)
}

/// Frame used by [`null_decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Frame {
    /// Good derivatives are the tangential fields `𝒯_j = ∂_j + ω_j ∂_t`;
    /// the remainder vanishes identically.
    #[default]
    Tangential,
    /// Good derivatives are the boosts `Ω_{0j}/t`; the remainder carries the
    /// weight `(t − r)/t`.
    Boost,
}

// Per-form bilinear pieces in tangential variables. `tau` is `(𝒯_1 f, 𝒯_2 f)`.
// T1 pairs a full gradient of φ with tangential derivatives of ψ;
// T2 pairs tangential derivatives of φ with a full gradient of ψ.
fn t1_form(form: Form, dphi: &Grad<f64>, tau_psi: [f64; 2]) -> f64 {
    match form {
        Form::Q0 => -(dphi[1] * tau_psi[0] + dphi[2] * tau_psi[1]),
        Form::Q01 => dphi[0] * tau_psi[0],
        Form::Q02 => dphi[0] * tau_psi[1],
        Form::Q12 => dphi[1] * tau_psi[1] - dphi[2] * tau_psi[0],
    }
}

fn t2_form(form: Form, tau_phi: [f64; 2], dpsi: &Grad<f64>, omega: [f64; 2]) -> f64 {
    match form {
        Form::Q0 => dpsi[0] * (omega[0] * tau_phi[0] + omega[1] * tau_phi[1]),
        Form::Q01 => -dpsi[0] * tau_phi[0],
        Form::Q02 => -dpsi[0] * tau_phi[1],
        Form::Q12 => -dpsi[0] * (omega[1] * tau_phi[0] - omega[0] * tau_phi[1]),
    }
}

/// Split `N(φ,ψ) = Σ c_f Q_f(φ,ψ)` at the point `(t, x)` into
/// `(T1, T2, T3)`: good-derivative-of-ψ terms, good-derivative-of-φ terms,
/// and the remainder.
///
/// In the boost frame `T1, T2` use `Ω_{0j}/t` and
/// `T3 = ((t − r)/t) · (bilinear in ∂φ, ∂ψ)`; in the tangential frame `T3 = 0`.
pub fn null_decompose(
    coeffs: &[f64; 4],
    dphi: &Grad<f64>,
    dpsi: &Grad<f64>,
    t: f64,
    x: [f64; 2],
    frame: Frame,
) -> Result<[f64; 3]> {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return Err(Error::InsideExclusion);
    }
    let omega = [x[0] / r, x[1] / r];
    let tau = |g: &Grad<f64>| [g[1] + omega[0] * g[0], g[2] + omega[1] * g[0]];
    let mut out = [0.0; 3];
    match frame {
        Frame::Tangential => {
            let (tp, ts) = (tau(dphi), tau(dpsi));
            for f in Form::ALL {
                let c = coeffs[f.index()];
                out[0] += c * t1_form(f, dphi, ts);
                out[1] += c * t2_form(f, tp, dpsi, omega);
            }
        }
        Frame::Boost => {
            if t <= 0.0 {
                return Err(Error::InvalidArgument("boost frame requires t > 0".into()));
            }
            let boost = |g: &Grad<f64>| [(t * g[1] + x[0] * g[0]) / t, (t * g[2] + x[1] * g[0]) / t];
            let w = (t - r) / t;
            let rem = |g: &Grad<f64>| [w * omega[0] * g[0], w * omega[1] * g[0]];
            for f in Form::ALL {
                let c = coeffs[f.index()];
                out[0] += c * t1_form(f, dphi, boost(dpsi));
                out[1] += c * t2_form(f, boost(dphi), dpsi, omega);
                out[2] += c * (t1_form(f, dphi, rem(dpsi)) + t2_form(f, rem(dphi), dpsi, omega));
            }
        }
    }
    Ok(out)
}

/// Field version of [`null_decompose`] at time `t`; points with
/// `r < r_min` are set to zero in all three outputs.
pub fn null_decompose_fields(
    grid: &Grid,
    coeffs: &[f64; 4],
    dphi: [&Field; 3],
    dpsi: [&Field; 3],
    t: f64,
    frame: Frame,
) -> Result<[Field; 3]> {
    let n = check_grads(&dphi, &dpsi)?;
    if n != grid.n() {
        return Err(Error::ShapeMismatch { expected: grid.n(), got: n });
    }
    let r_min = grid.r_min();
    let x1 = grid.x(Axis::X1).as_slice();
    let x2 = grid.x(Axis::X2).as_slice();
    let parts: Vec<[f64; 3]> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            if x1[k].hypot(x2[k]) < r_min {
                return [0.0; 3];
            }
            let a = [dphi[0].as_slice()[k], dphi[1].as_slice()[k], dphi[2].as_slice()[k]];
            let b = [dpsi[0].as_slice()[k], dpsi[1].as_slice()[k], dpsi[2].as_slice()[k]];
            null_decompose(coeffs, &a, &b, t, [x1[k], x2[k]], frame).unwrap_or([f64::NAN; 3])
        })
        .collect();
    let mut out = [Field::zeros(n), Field::zeros(n), Field::zeros(n)];
    for (k, p) in parts.iter().enumerate() {
        for m in 0..3 {
            out[m].as_mut_slice()[k] = p[m];
        }
    }
    if out.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite("null decomposition"));
    }
    Ok(out)
}
