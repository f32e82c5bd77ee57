//! Initial-data profiles and the weighted smallness norm of the data.

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Grid, State};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataShape {
    /// `exp(−|x − c|²/w²)`.
    #[default]
    Gaussian,
    /// `exp(1 − 1/(1 − s²))` for `|s| < 1`, `s = (|x − c| − R)/w`; compactly
    /// supported, `R = 0` gives a ball bump.
    AnnularBump,
}

impl fmt::Display for DataShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataShape::Gaussian => "gaussian",
            DataShape::AnnularBump => "annular-bump",
        })
    }
}

impl FromStr for DataShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DataShape::Gaussian),
            "annular-bump" => Ok(DataShape::AnnularBump),
            other => Err(Error::InvalidArgument(format!("unknown data shape `{other}`"))),
        }
    }
}

/// Scalar profile `ε·φ(x)` distributed over `(u₀, u₁, v₀, v₁)` with fixed
/// component weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub shape: DataShape,
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
    /// Annulus radius (ignored for Gaussians).
    pub radius: f64,
    /// Weights of `(u₀, u₁, v₀, v₁)`.
    pub components: [f64; 4],
}

impl Default for DataProfile {
    fn default() -> Self {
        DataProfile {
            shape: DataShape::Gaussian,
            amplitude: 0.05,
            center: [0.0, 0.0],
            width: 1.0,
            radius: 0.0,
            components: [1.0, 0.0, 1.0, 0.0],
        }
    }
}

impl DataProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidArgument(format!("amplitude ε = {} must be ≥ 0", self.amplitude)));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidArgument(format!("width = {} must be > 0", self.width)));
        }
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius = {} must be ≥ 0", self.radius)));
        }
        if self.components.iter().chain(&self.center).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("profile parameters"));
        }
        Ok(())
    }

    /// Unit-amplitude shape function at `x`.
    pub fn shape_at(&self, x1: f64, x2: f64) -> f64 {
        let d = (x1 - self.center[0]).hypot(x2 - self.center[1]);
        match self.shape {
            DataShape::Gaussian => (-(d / self.width).powi(2)).exp(),
            DataShape::AnnularBump => {
                let s = (d - self.radius) / self.width;
                if s.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius around the center beyond which the profile is zero (bumps) or
    /// below `10⁻¹⁶` (Gaussians).
    pub fn support_radius(&self) -> f64 {
        match self.shape {
            DataShape::Gaussian => self.width * (16.0 * std::f64::consts::LN_10).sqrt(),
            DataShape::AnnularBump => self.radius + self.width,
        }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        DataProfile { amplitude, ..*self }
    }
}

/// Cauchy data at `t = 0` for a profile.
pub fn initial_state(grid: &Grid, profile: &DataProfile) -> Result<State> {
    profile.validate()?;
    let phi = grid.field(|x1, x2| profile.shape_at(x1, x2));
    let [a, b, c, d] = profile.components.map(|w| w * profile.amplitude);
    Ok(State { u: phi.scale(a), ut: phi.scale(b), v: phi.scale(c), vt: phi.scale(d), time: 0.0 })
}

/// `‖(u₀, u₁, v₀, v₁)‖²_{H⁰} = ‖∇u₀‖² + ‖u₁‖² + ‖v₀‖²_{H¹} + ‖v₁‖²`.
fn h0_squared(grid: &Grid, d: &[Field; 4]) -> f64 {
    let grad2 = |f: &Field| {
        let (a, b) = (grid.d1(f, Axis::X1), grid.d1(f, Axis::X2));
        grid.integrate(&a.mul(&a), None) + grid.integrate(&b.mul(&b), None)
    };
    let l2 = |f: &Field| grid.integrate(&f.mul(f), None);
    grad2(&d[0]) + l2(&d[1]) + grad2(&d[2]) + l2(&d[2]) + l2(&d[3])
}

fn map_data(d: &[Field; 4], op: impl Fn(&Field) -> Field) -> [Field; 4] {
    [op(&d[0]), op(&d[1]), op(&d[2]), op(&d[3])]
}

/// `Σ_{|α| ≤ n} ‖∂_x^α d‖²_{H⁰}`.
fn hn_squared(grid: &Grid, d: &[Field; 4], n: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        for a1 in 0..=k {
            total += h0_squared(grid, &map_data(d, |f| grid.d_mixed(f, a1, k - a1)));
        }
    }
    total
}

/// Data smallness norm
/// `‖d‖_{H^{2h}} + ‖x∂_x d‖_{H^h} + ‖x²∂_x² d‖_{H⁰}` of the Cauchy data
/// `d = (u₀, u₁, v₀, v₁)`, where `x∂_x` ranges over all `x_i ∂_j` and
/// `x²∂_x²` over all `x_i x_k ∂_j ∂_l` (squared norms summed).
pub fn smallness_norm(grid: &Grid, s: &State, h: usize) -> Result<f64> {
    s.check_shape(grid.n())?;
    let d = [s.u.clone(), s.ut.clone(), s.v.clone(), s.vt.clone()];
    let xs = [grid.x(Axis::X1), grid.x(Axis::X2)];
    let first = hn_squared(grid, &d, 2 * h).sqrt();
    let mut second = 0.0;
    let mut third = 0.0;
    for xi in xs {
        for j in Axis::BOTH {
            let dj = map_data(&d, |f| grid.d1(f, j).mul(xi));
            second += hn_squared(grid, &dj, h);
            for xk in xs {
                for l in Axis::BOTH {
                    let djl = map_data(&d, |f| grid.d1(&grid.d1(f, j), l).mul(xi).mul(xk));
                    third += h0_squared(grid, &djl);
                }
            }
        }
    }
    let total = first + second.sqrt() + third.sqrt();
    if !total.is_finite() {
        return Err(Error::NonFinite("smallness norm"));
    }
    Ok(total)
}
