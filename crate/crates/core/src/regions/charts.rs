//! Hyperbolic coordinate charts inside and outside the light cone.
//!
//! Interior (`t > |x|`):
//! `t = e^σ cosh φ`, `x = e^σ sinh φ (sin θ, cos θ)`, Jacobian `e^{3σ} sinh φ`,
//! `−□ = e^{−2σ}(−∂σ² + ∂φ² + sinh⁻²φ ∂θ² − ∂σ + coth φ ∂φ)`.
//!
//! Exterior (`|x| > t`):
//! `t = e^σ sinh φ`, `x = e^σ cosh φ (sin θ, cos θ)`, Jacobian `e^{3σ} cosh φ`,
//! `−□ = e^{−2σ}(∂σ² − ∂φ² + cosh⁻²φ ∂θ² + ∂σ − tanh φ ∂φ)`.
//!
//! In both charts `∂σ = t∂t + r∂r`, `∂φ = r∂t + t∂r` and `∂θ = Ω12`.

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::poly::{PolyExpr, Var};
use crate::vectorfields::{scaling_poly, z_poly, VectorField};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    Interior,
    Exterior,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::Interior => "interior",
            Chart::Exterior => "exterior",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperCoords {
    pub sigma: f64,
    pub phi: f64,
    pub theta: f64,
    pub chart: Chart,
}

/// Cartesian `(t, x)` to hyperbolic coordinates of the requested chart.
pub fn to_hyperbolic(t: f64, x: [f64; 2], chart: Chart) -> Result<HyperCoords> {
    let r = x[0].hypot(x[1]);
    let theta = x[0].atan2(x[1]);
    match chart {
        Chart::Interior => {
            if !(t > r) {
                return Err(Error::OffChart(format!("interior chart needs t > |x| (t = {t}, r = {r})")));
            }
            let rho = ((t - r) * (t + r)).sqrt();
            Ok(HyperCoords { sigma: rho.ln(), phi: (r / t).atanh(), theta, chart })
        }
        Chart::Exterior => {
            if !(r > t.abs()) {
                return Err(Error::OffChart(format!("exterior chart needs |x| > |t| (t = {t}, r = {r})")));
            }
            let rho = ((r - t) * (r + t)).sqrt();
            Ok(HyperCoords { sigma: rho.ln(), phi: (t / rho).asinh(), theta, chart })
        }
    }
}

/// Hyperbolic coordinates back to Cartesian `(t, [x1, x2])`.
pub fn from_hyperbolic(hc: &HyperCoords) -> (f64, [f64; 2]) {
    let e = hc.sigma.exp();
    let (s, c) = hc.theta.sin_cos();
    let (radial, t) = match hc.chart {
        Chart::Interior => (e * hc.phi.sinh(), e * hc.phi.cosh()),
        Chart::Exterior => (e * hc.phi.cosh(), e * hc.phi.sinh()),
    };
    (t, [radial * s, radial * c])
}

/// Volume factor of `(σ, φ, θ) ↦ (t, x)`.
pub fn jacobian(hc: &HyperCoords) -> f64 {
    let e3 = (3.0 * hc.sigma).exp();
    match hc.chart {
        Chart::Interior => e3 * hc.phi.sinh(),
        Chart::Exterior => e3 * hc.phi.cosh(),
    }
}

/// `□f = f_tt − f_11 − f_22` from a Cartesian jet evaluation.
pub fn box_cartesian<F>(f: &F, t: f64, x: [f64; 2]) -> f64
where
    F: Fn([Jet2; 3]) -> Jet2,
{
    let j = f([Jet2::variable(t, 0), Jet2::variable(x[0], 1), Jet2::variable(x[1], 2)]);
    j.h[0][0] - j.h[1][1] - j.h[2][2]
}

/// Jet of `f ∘ chart` in the variables `(σ, φ, θ)`.
pub fn chart_jet<F>(f: &F, hc: &HyperCoords) -> Jet2
where
    F: Fn([Jet2; 3]) -> Jet2,
{
    let s = Jet2::variable(hc.sigma, 0);
    let p = Jet2::variable(hc.phi, 1);
    let th = Jet2::variable(hc.theta, 2);
    let e = s.exp();
    let (radial, t) = match hc.chart {
        Chart::Interior => (e * p.sinh(), e * p.cosh()),
        Chart::Exterior => (e * p.cosh(), e * p.sinh()),
    };
    f([t, radial * th.sin(), radial * th.cos()])
}

/// `□f` evaluated through the chart formula at `hc`.
pub fn box_chart<F>(f: &F, hc: &HyperCoords) -> f64
where
    F: Fn([Jet2; 3]) -> Jet2,
{
    let j = chart_jet(f, hc);
    let (fs, fp) = (j.g[0], j.g[1]);
    let (fss, fpp, ftt) = (j.h[0][0], j.h[1][1], j.h[2][2]);
    let w = (-2.0 * hc.sigma).exp();
    let minus_box = match hc.chart {
        Chart::Interior => {
            let (sh, ch) = (hc.phi.sinh(), hc.phi.cosh());
            w * (-fss + fpp + ftt / (sh * sh) - fs + ch / sh * fp)
        }
        Chart::Exterior => {
            let ch = hc.phi.cosh();
            w * (fss - fpp + ftt / (ch * ch) + fs - hc.phi.tanh() * fp)
        }
    };
    -minus_box
}

/// Max over sample points `(t, x1, x2)` of `|□f (Cartesian) − □f (chart)|`.
pub fn box_hyperbolic_residual<F>(f: &F, chart: Chart, samples: &[(f64, f64, f64)]) -> Result<f64>
where
    F: Fn([Jet2; 3]) -> Jet2,
{
    let mut worst = 0.0_f64;
    for &(t, x1, x2) in samples {
        let hc = to_hyperbolic(t, [x1, x2], chart)?;
        let cart = box_cartesian(f, t, [x1, x2]);
        worst = worst.max((cart - box_chart(f, &hc)).abs());
    }
    Ok(worst)
}

/// Exact polynomial form of the chart identity. Multiplying the interior
/// formula by `r²(t² − r²)` and writing `∂σ = S`, `r∂φ = Σ x_i Ω0i`,
/// `∂θ = Ω12` gives the polynomial identity
///
/// `r²(t²−r²)(−□f) = r²(−S²f − Sf) + Σ x_i x_j Ω0i Ω0j f + t Σ x_i Ω0i f + (t²−r²) Ω12² f`,
///
/// and the exterior formula multiplied by `r²(r²−t²)` gives
///
/// `r²(r²−t²)(−□f) = r²(S²f + Sf) − Σ x_i x_j Ω0i Ω0j f − t Σ x_i Ω0i f + (r²−t²) Ω12² f`.
///
/// Returns `LHS − RHS`, the zero polynomial for every `f`.
pub fn box_hyperbolic_residual_poly(f: &PolyExpr, chart: Chart) -> PolyExpr {
    let (t, x1, x2) = (PolyExpr::t(), PolyExpr::x1(), PolyExpr::x2());
    let r2 = &(&x1 * &x1) + &(&x2 * &x2);
    let box_f = &(&f.deriv(Var::T).deriv(Var::T) - &f.deriv(Var::X1).deriv(Var::X1))
        - &f.deriv(Var::X2).deriv(Var::X2);
    let sf = scaling_poly(f);
    let ssf = scaling_poly(&sf);
    let xs = [(x1.clone(), VectorField::Omega01), (x2.clone(), VectorField::Omega02)];
    let mut boosts2 = PolyExpr::zero();
    let mut boosts1 = PolyExpr::zero();
    for (xi, zi) in &xs {
        let zif = z_poly(*zi, f);
        boosts1 = &boosts1 + &(xi * &zif);
        for (xj, zj) in &xs {
            boosts2 = &boosts2 + &(&(xi * xj) * &z_poly(*zi, &z_poly(*zj, f)));
        }
    }
    let rot2 = z_poly(VectorField::Omega12, &z_poly(VectorField::Omega12, f));
    let minkowski = &(&t * &t) - &r2; // t² − r²
    let s_part = &r2 * &(&ssf + &sf); // r²(S²f + Sf)
    let t_boosts1 = &t * &boosts1;
    match chart {
        Chart::Interior => {
            let lhs = -&(&(&r2 * &minkowski) * &box_f);
            let rhs = &(&(&(-&s_part) + &boosts2) + &t_boosts1) + &(&minkowski * &rot2);
            &lhs - &rhs
        }
        Chart::Exterior => {
            let lhs = &(&r2 * &minkowski) * &box_f; // r²(r²−t²)(−□f)
            let rhs = &(&(&s_part - &boosts2) - &t_boosts1) - &(&minkowski * &rot2);
            &lhs - &rhs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_maps_to_unit_time() {
        let hc = HyperCoords { sigma: 0.0, phi: 0.0, theta: 0.3, chart: Chart::Interior };
        let (t, x) = from_hyperbolic(&hc);
        assert!((t - 1.0).abs() < 1e-15 && x[0].abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn wrong_side_rejected() {
        assert!(to_hyperbolic(1.0, [2.0, 0.0], Chart::Interior).is_err());
        assert!(to_hyperbolic(3.0, [2.0, 0.0], Chart::Exterior).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let i = HyperCoords { sigma: 0.0, phi: 1f64.asinh(), theta: 0.0, chart: Chart::Interior };
        assert!((jacobian(&i) - 1.0).abs() < 1e-12);
        let e = HyperCoords { sigma: 0.0, phi: 0.0, theta: 0.0, chart: Chart::Exterior };
        assert!((jacobian(&e) - 1.0).abs() < 1e-12);
    }
}
