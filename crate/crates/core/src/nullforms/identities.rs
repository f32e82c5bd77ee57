//! Catalog of exact identities checked with rational polynomial arithmetic.
//!
//! Every entry maps a pair of input polynomials `(φ, ψ)` to a residual that
//! must be the zero expression. The catalog covers the null-form commutator
//! lemma, the first-order commutators `[Z, ∂]`, null cancellation on plane
//! waves, Lorentz invariance of `t² − |x|²`, the Z–𝒯 relation, and the wave
//! operator in hyperbolic coordinates.
//!
//! A deliberately corrupted catalog can be built with
//! [`catalog_with_mutation`]; this is how the verification driver is tested.

use super::{poly_grad, Form};
use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::poly::{rat, PolyExpr, SurdPoly, Var, DEFAULT_DEGREE_BOUND};
use crate::regions::charts::{box_hyperbolic_residual_poly, Chart};
use crate::vectorfields::{z_poly, zt_relation_residual_poly, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Identity family, used for grouping in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    CommutatorLemma,
    FirstOrderCommutator,
    NullCancellation,
    LorentzInvariance,
    ZTauRelation,
    HyperbolicBox,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Lemma { z: VectorField, form: Form },
    Commutator { z: VectorField, d: Var },
    Plane { form: Form, omega: (i64, i64, i64) },
    Invariance { z: VectorField },
    ZTau { z: VectorField },
    ChartBox { chart: Chart },
}

/// One checkable identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Identity {
    pub name: String,
    pub family: Family,
    kind: Kind,
    mutated: bool,
}

fn q_of(form: Form, a: &PolyExpr, b: &PolyExpr) -> PolyExpr {
    form.eval(&poly_grad(a), &poly_grad(b))
}

fn form_0j(j: Axis) -> Form {
    match j {
        Axis::X1 => Form::Q01,
        Axis::X2 => Form::Q02,
    }
}

/// Extra term `E` in `Z Q(φ,ψ) = Q(Zφ,ψ) + Q(φ,Zψ) + E(φ,ψ)`.
///
/// With `Ω12 = x2∂1 − x1∂2`, `Ω0i = t∂i + xi∂t` and `Q12 = φ1ψ2 − φ2ψ1`:
/// * `Ω0i Q12`: `+(−1)^i Q0j`, `j ≠ i`
/// * `Ω0i Q0j`: `−Q_ij` (zero for `i = j`)
/// * `Ω12 Q0i`: `−(−1)^i Q0j`, `j ≠ i`
/// * `Q0` is invariant, and so is `Q12` under `Ω12`.
pub fn lemma_extra(z: VectorField, form: Form, phi: &PolyExpr, psi: &PolyExpr) -> PolyExpr {
    let sign = |i: Axis| if i == Axis::X1 { -1 } else { 1 };
    match (z.boost_axis(), form) {
        (_, Form::Q0) => PolyExpr::zero(),
        (None, Form::Q12) => PolyExpr::zero(),
        (Some(i), Form::Q12) => q_of(form_0j(i.other()), phi, psi).scale_int(sign(i)),
        (Some(i), Form::Q01 | Form::Q02) => {
            let j = if form == Form::Q01 { Axis::X1 } else { Axis::X2 };
            if i == j {
                PolyExpr::zero()
            } else {
                // Q_ij = φ_i ψ_j − φ_j ψ_i; Q_12 for (1,2), −Q_12 for (2,1)
                let q = q_of(Form::Q12, phi, psi);
                if i == Axis::X1 {
                    -q
                } else {
                    q
                }
            }
        }
        (None, Form::Q01 | Form::Q02) => {
            let i = if form == Form::Q01 { Axis::X1 } else { Axis::X2 };
            q_of(form_0j(i.other()), phi, psi).scale_int(-sign(i))
        }
    }
}

/// Residual of the commutator lemma for `(z, form)`; zero polynomial when it
/// holds. Rejects inputs above the default degree bound.
pub fn commutator_check(z: VectorField, form: Form, phi: &PolyExpr, psi: &PolyExpr) -> Result<PolyExpr> {
    phi.check_degree(DEFAULT_DEGREE_BOUND)?;
    psi.check_degree(DEFAULT_DEGREE_BOUND)?;
    let lhs = z_poly(z, &q_of(form, phi, psi));
    let rhs = &(&q_of(form, &z_poly(z, phi), psi) + &q_of(form, phi, &z_poly(z, psi)))
        + &lemma_extra(z, form, phi, psi);
    let res = &lhs - &rhs;
    res.check_degree(DEFAULT_DEGREE_BOUND)?;
    Ok(res)
}

/// Expected value of `[Z, ∂_d] p`.
fn commutator_expected(z: VectorField, d: Var, p: &PolyExpr) -> PolyExpr {
    match (z.boost_axis(), d) {
        (Some(i), Var::T) => -p.deriv(axis_var(i)),
        (Some(i), d) => {
            if axis_var(i) == d {
                -p.deriv(Var::T)
            } else {
                PolyExpr::zero()
            }
        }
        (None, Var::T) => PolyExpr::zero(),
        (None, Var::X1) => p.deriv(Var::X2),
        (None, Var::X2) => -p.deriv(Var::X1),
    }
}

fn axis_var(a: Axis) -> Var {
    match a {
        Axis::X1 => Var::X1,
        Axis::X2 => Var::X2,
    }
}

fn var_name(v: Var) -> &'static str {
    match v {
        Var::T => "d_t",
        Var::X1 => "d_1",
        Var::X2 => "d_2",
    }
}

/// `g(t − ω·x)` where `g(τ) = p(τ, 0, 0)`, `ω = (a/c, b/c)` with `a²+b²=c²`.
fn plane_wave(p: &PolyExpr, omega: (i64, i64, i64)) -> PolyExpr {
    let (a, b, c) = omega;
    let s = &(&PolyExpr::t() - &PolyExpr::x1().scale(&rat(a, c))) - &PolyExpr::x2().scale(&rat(b, c));
    let mut out = PolyExpr::zero();
    for (e, k) in p.terms() {
        if e[1] == 0 && e[2] == 0 {
            out = &out + &s.pow(e[0]).scale(k);
        }
    }
    out
}

impl Identity {
    fn new(name: String, family: Family, kind: Kind) -> Self {
        Identity { name, family, kind, mutated: false }
    }

    /// Residual for inputs `(φ, ψ)`; unary identities ignore `ψ`.
    pub fn residual(&self, phi: &PolyExpr, psi: &PolyExpr) -> Result<SurdPoly> {
        phi.check_degree(DEFAULT_DEGREE_BOUND)?;
        psi.check_degree(DEFAULT_DEGREE_BOUND)?;
        let flip = if self.mutated { -1 } else { 1 };
        let res = match &self.kind {
            Kind::Lemma { z, form } => {
                let lhs = z_poly(*z, &q_of(*form, phi, psi));
                let extra = lemma_extra(*z, *form, phi, psi);
                let extra = if self.mutated && extra.is_zero() {
                    q_of(Form::Q0, phi, psi)
                } else {
                    extra.scale_int(flip)
                };
                let rhs = &(&q_of(*form, &z_poly(*z, phi), psi) + &q_of(*form, phi, &z_poly(*z, psi))) + &extra;
                SurdPoly::poly(&lhs - &rhs)
            }
            Kind::Commutator { z, d } => {
                let lhs = &z_poly(*z, &phi.deriv(*d)) - &z_poly(*z, phi).deriv(*d);
                let expected = commutator_expected(*z, *d, phi);
                let expected = if self.mutated && expected.is_zero() {
                    phi.deriv(Var::T)
                } else {
                    expected.scale_int(flip)
                };
                SurdPoly::poly(&lhs - &expected)
            }
            Kind::Plane { form, omega } => {
                let (a, b) = (plane_wave(phi, *omega), plane_wave(psi, *omega));
                let mut q = q_of(*form, &a, &b);
                if self.mutated {
                    q = &q + &(&a * &b);
                }
                SurdPoly::poly(q)
            }
            Kind::Invariance { z } => {
                let (t, x1, x2) = (PolyExpr::t(), PolyExpr::x1(), PolyExpr::x2());
                let m = &(&(&t * &t) - &(&x1 * &x1)) - &(&x2 * &x2);
                // Z(m·φ) − m·Zφ = φ·Zm must vanish.
                let mut res = &z_poly(*z, &(&m * phi)) - &(&m * &z_poly(*z, phi));
                if self.mutated {
                    res = &res + phi;
                }
                SurdPoly::poly(res)
            }
            Kind::ZTau { z } => {
                let mut res = zt_relation_residual_poly(*z, phi);
                if self.mutated {
                    res = res.add(&SurdPoly::poly(phi.clone()));
                }
                res
            }
            Kind::ChartBox { chart } => {
                let mut res = box_hyperbolic_residual_poly(phi, *chart);
                if self.mutated {
                    res = &res + phi;
                }
                SurdPoly::poly(res)
            }
        };
        res.a.check_degree(DEFAULT_DEGREE_BOUND + 4)?;
        Ok(res)
    }
}

/// The full identity catalog.
pub fn catalog() -> Vec<Identity> {
    let mut out = Vec::new();
    for z in VectorField::ALL {
        for form in Form::ALL {
            out.push(Identity::new(
                format!("{z} {}: commutator lemma", form.name()),
                Family::CommutatorLemma,
                Kind::Lemma { z, form },
            ));
        }
    }
    for z in VectorField::ALL {
        for d in Var::ALL {
            out.push(Identity::new(
                format!("[{z}, {}]", var_name(d)),
                Family::FirstOrderCommutator,
                Kind::Commutator { z, d },
            ));
        }
    }
    for omega in [(1, 0, 1), (3, 4, 5)] {
        for form in Form::ALL {
            out.push(Identity::new(
                format!("{} on plane waves along ({}/{},{}/{})", form.name(), omega.0, omega.2, omega.1, omega.2),
                Family::NullCancellation,
                Kind::Plane { form, omega },
            ));
        }
    }
    for z in VectorField::ALL {
        out.push(Identity::new(
            format!("{z} annihilates t^2-|x|^2"),
            Family::LorentzInvariance,
            Kind::Invariance { z },
        ));
        out.push(Identity::new(format!("{z}: Z-T relation"), Family::ZTauRelation, Kind::ZTau { z }));
    }
    for chart in [Chart::Interior, Chart::Exterior] {
        out.push(Identity::new(
            format!("wave operator in {} hyperbolic chart", chart.name()),
            Family::HyperbolicBox,
            Kind::ChartBox { chart },
        ));
    }
    out
}

/// Catalog with the named identity corrupted (sign of its correction term
/// flipped, or a spurious term added where the correction is zero).
pub fn catalog_with_mutation(name: &str) -> Result<Vec<Identity>> {
    let mut cat = catalog();
    let entry = cat
        .iter_mut()
        .find(|i| i.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("no identity named {name:?}")))?;
    entry.mutated = true;
    Ok(cat)
}

/// Outcome of checking one identity on many random inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub family: Family,
    pub trials: usize,
    pub failures: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Check every identity on `trials` random input pairs of degree ≤ `degree`.
/// Inputs are drawn from a seeded generator so reports are reproducible.
pub fn run_catalog(cat: &[Identity], trials: usize, degree: u32, seed: u64) -> Result<Vec<IdentityReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(PolyExpr, PolyExpr)> = (0..trials)
        .map(|_| (PolyExpr::random(&mut rng, degree, 0.7), PolyExpr::random(&mut rng, degree, 0.7)))
        .collect();
    cat.iter()
        .map(|id| {
            let mut failures = 0;
            for (p, q) in &inputs {
                if !id.residual(p, q)?.is_zero() {
                    failures += 1;
                }
            }
            Ok(IdentityReport { name: id.name.clone(), family: id.family, trials, failures })
        })
        .collect()
}
