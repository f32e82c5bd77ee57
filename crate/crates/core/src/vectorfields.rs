//! Klainerman vector fields, the scaling field, tangential derivatives and
//! h-weighted multi-indices.
//!
//! Conventions: `Ω12 = x2 ∂1 − x1 ∂2`, `Ω0i = t ∂i + xi ∂t`,
//! `S = t ∂t + x·∇`, `𝒯_j = ∂_j + ω_j ∂t` with `ω = x/r`.
//!
//! Grid versions act on [`TimeTower`]s so that every time derivative is
//! exact with respect to the equation (no time differencing). Polynomial
//! versions act on [`PolyExpr`] and are used by the exact identity suite.

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Grid};
use crate::poly::{PolyExpr, SurdPoly, Var};
use crate::tower::TimeTower;
use serde::{Deserialize, Serialize};
use std::fmt;

/// One of the three Lorentz generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VectorField {
    Omega12,
    Omega01,
    Omega02,
}

impl VectorField {
    pub const ALL: [VectorField; 3] = [VectorField::Omega12, VectorField::Omega01, VectorField::Omega02];

    pub fn name(self) -> &'static str {
        match self {
            VectorField::Omega12 => "Omega12",
            VectorField::Omega01 => "Omega01",
            VectorField::Omega02 => "Omega02",
        }
    }

    /// Boost axis for `Ω0i`, `None` for the rotation.
    pub fn boost_axis(self) -> Option<Axis> {
        match self {
            VectorField::Omega12 => None,
            VectorField::Omega01 => Some(Axis::X1),
            VectorField::Omega02 => Some(Axis::X2),
        }
    }

    /// Number of time-derivative levels consumed when applied to a tower.
    pub fn depth_cost(self) -> usize {
        usize::from(self.boost_axis().is_some())
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn var_of(axis: Axis) -> Var {
    match axis {
        Axis::X1 => Var::X1,
        Axis::X2 => Var::X2,
    }
}

/// Exact `Z p`.
pub fn z_poly(z: VectorField, p: &PolyExpr) -> PolyExpr {
    match z.boost_axis() {
        None => &(&PolyExpr::x2() * &p.deriv(Var::X1)) - &(&PolyExpr::x1() * &p.deriv(Var::X2)),
        Some(a) => {
            let v = var_of(a);
            &(&PolyExpr::t() * &p.deriv(v)) + &(&PolyExpr::var(v) * &p.deriv(Var::T))
        }
    }
}

/// Exact `S p = t p_t + x1 p_1 + x2 p_2`.
pub fn scaling_poly(p: &PolyExpr) -> PolyExpr {
    let mut out = &PolyExpr::t() * &p.deriv(Var::T);
    out = &out + &(&PolyExpr::x1() * &p.deriv(Var::X1));
    &out + &(&PolyExpr::x2() * &p.deriv(Var::X2))
}

/// Exact `r · 𝒯_j F` for `F = a + r b`.
pub fn r_tau_surd(j: Axis, f: &SurdPoly) -> SurdPoly {
    let xj = PolyExpr::var(var_of(j));
    let ft = SurdPoly { a: f.a.deriv(Var::T), b: f.b.deriv(Var::T) };
    f.r_deriv(var_of(j)).add(&ft.mul_poly(&xj))
}

/// Exact `r · (residual of the Z–𝒯 relation)` applied to `p`:
/// `Ω0j p − [t 𝒯_j p − (t − r) ω_j ∂_t p]` and
/// `Ω12 p − [x2 𝒯_1 p − x1 𝒯_2 p]`. Zero for every polynomial.
pub fn zt_relation_residual_poly(z: VectorField, p: &PolyExpr) -> SurdPoly {
    let fp = SurdPoly::poly(p.clone());
    let r_z = SurdPoly { a: PolyExpr::zero(), b: z_poly(z, p) };
    match z.boost_axis() {
        Some(j) => {
            let xj = PolyExpr::var(var_of(j));
            let t_rtau = r_tau_surd(j, &fp).mul_poly(&PolyExpr::t());
            // (t − r) x_j p_t = t x_j p_t − r x_j p_t
            let xpt = &xj * &p.deriv(Var::T);
            let weight = SurdPoly { a: &PolyExpr::t() * &xpt, b: -&xpt };
            r_z.sub(&t_rtau).add(&weight)
        }
        None => {
            let rhs = r_tau_surd(Axis::X1, &fp)
                .mul_poly(&PolyExpr::x2())
                .sub(&r_tau_surd(Axis::X2, &fp).mul_poly(&PolyExpr::x1()));
            r_z.sub(&rhs)
        }
    }
}

/// `Z f` on a tower. A boost consumes one level.
pub fn apply_z(grid: &Grid, z: VectorField, f: &TimeTower) -> Result<TimeTower> {
    match z.boost_axis() {
        None => {
            let x1 = grid.x(Axis::X1);
            let x2 = grid.x(Axis::X2);
            let levels = f
                .levels()
                .iter()
                .map(|l| {
                    let mut out = grid.d1(l, Axis::X1).mul(x2);
                    out.axpy(-1.0, &grid.d1(l, Axis::X2).mul(x1));
                    out
                })
                .collect();
            TimeTower::new(f.time, levels)
        }
        Some(axis) => {
            let d = f.depth();
            if d == 0 {
                return Err(Error::InsufficientDepth { requested: 1, available: 0 });
            }
            let xi = grid.x(axis);
            let t = f.time;
            let mut levels = Vec::with_capacity(d);
            let grads: Vec<Field> = f.levels()[..d].iter().map(|l| grid.d1(l, axis)).collect();
            for j in 0..d {
                // ∂_t^j (t ∂_i f + x_i ∂_t f) = t ∂_i f_j + j ∂_i f_{j-1} + x_i f_{j+1}
                let mut out = grads[j].scale(t);
                if j > 0 {
                    out.axpy(j as f64, &grads[j - 1]);
                }
                out.axpy(1.0, &f.levels()[j + 1].mul(xi));
                levels.push(out);
            }
            TimeTower::new(t, levels)
        }
    }
}

/// Scaling field `S f = t ∂_t f + x·∇f`; consumes one level.
pub fn apply_scaling(grid: &Grid, f: &TimeTower) -> Result<TimeTower> {
    let d = f.depth();
    if d == 0 {
        return Err(Error::InsufficientDepth { requested: 1, available: 0 });
    }
    let (x1, x2) = (grid.x(Axis::X1), grid.x(Axis::X2));
    let levels = (0..d)
        .map(|j| {
            // ∂_t^j (t f_t) = t f_{j+1} + j f_j
            let l = &f.levels()[j];
            let mut out = f.levels()[j + 1].scale(f.time);
            out.axpy(j as f64, l);
            out.axpy(1.0, &grid.d1(l, Axis::X1).mul(x1));
            out.axpy(1.0, &grid.d1(l, Axis::X2).mul(x2));
            out
        })
        .collect();
    TimeTower::new(f.time, levels)
}

/// `ω_j = x_j / r`, set to zero inside the exclusion disk `r < r_min`.
pub fn omega_field(grid: &Grid, j: Axis) -> Field {
    let r_min = grid.r_min();
    grid.x(j).zip_map(grid.r(), |x, r| if r < r_min { 0.0 } else { x / r })
}

/// Tangential derivative `𝒯_j f = ∂_j f + ω_j ∂_t f`; consumes one level.
/// Points with `r < r_min` are masked to zero.
pub fn apply_tau(grid: &Grid, j: Axis, f: &TimeTower) -> Result<TimeTower> {
    let d = f.depth();
    if d == 0 {
        return Err(Error::InsufficientDepth { requested: 1, available: 0 });
    }
    let omega = omega_field(grid, j);
    let inside = grid.r().map(|r| if r < grid.r_min() { 0.0 } else { 1.0 });
    let levels = (0..d)
        .map(|k| {
            let mut out = grid.d1(&f.levels()[k], j);
            out.axpy(1.0, &f.levels()[k + 1].mul(&omega));
            out.mul(&inside)
        })
        .collect();
    TimeTower::new(f.time, levels)
}

/// Pointwise `Z f − [Z-𝒯 relation]` for the value of `f` at the tower's time;
/// masked to zero inside `r < r_min`.
pub fn zt_relation_residual(grid: &Grid, z: VectorField, f: &TimeTower) -> Result<Field> {
    let zf = apply_z(grid, z, f)?;
    let t = f.time;
    let inside = grid.r().map(|r| if r < grid.r_min() { 0.0 } else { 1.0 });
    let rhs = match z.boost_axis() {
        Some(j) => {
            let tau = apply_tau(grid, j, f)?;
            let omega = omega_field(grid, j);
            let weight = grid.r().map(|r| t - r);
            let mut out = tau.value().scale(t);
            out.axpy(-1.0, &weight.mul(&omega).mul(&f.levels()[1]));
            out
        }
        None => {
            let t1 = apply_tau(grid, Axis::X1, f)?;
            let t2 = apply_tau(grid, Axis::X2, f)?;
            let mut out = t1.value().mul(grid.x(Axis::X2));
            out.axpy(-1.0, &t2.value().mul(grid.x(Axis::X1)));
            out
        }
    };
    Ok(zf.value().sub(&rhs).mul(&inside))
}

/// Multi-index `γ = (α, β)` with `𝒵^γ = ∂_t^{α0} ∂_1^{α1} ∂_2^{α2} Z^{β}`;
/// `Z^β = Z_{β[0]} Z_{β[1]} ⋯` so the last entry acts first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    pub alpha: [usize; 3],
    pub beta: Vec<VectorField>,
    pub h: usize,
}

impl MultiIndex {
    pub fn new(alpha: [usize; 3], beta: Vec<VectorField>, h: usize) -> Self {
        MultiIndex { alpha, beta, h }
    }

    pub fn identity(h: usize) -> Self {
        MultiIndex { alpha: [0; 3], beta: Vec::new(), h }
    }

    /// `|γ| = |α| + h |β|`
    pub fn size(&self) -> usize {
        self.alpha.iter().sum::<usize>() + self.h * self.beta.len()
    }

    /// Time-derivative levels consumed by `𝒵^γ`.
    pub fn depth_cost(&self) -> usize {
        self.alpha[0] + self.beta.iter().map(|z| z.depth_cost()).sum::<usize>()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d({},{},{})", self.alpha[0], self.alpha[1], self.alpha[2])?;
        for z in &self.beta {
            write!(f, "·{z}")?;
        }
        Ok(())
    }
}

/// All multi-indices with `|γ| ≤ cap`, Z-sequences ordered.
pub fn multi_indices(cap: usize, h: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let max_beta = if h == 0 { 0 } else { cap / h };
    let mut betas: Vec<Vec<VectorField>> = vec![Vec::new()];
    let mut frontier = betas.clone();
    for _ in 0..max_beta {
        let mut next = Vec::new();
        for b in &frontier {
            for z in VectorField::ALL {
                let mut nb = b.clone();
                nb.push(z);
                next.push(nb);
            }
        }
        betas.extend(next.iter().cloned());
        frontier = next;
    }
    for beta in betas {
        let rest = cap - h * beta.len();
        for a0 in 0..=rest {
            for a1 in 0..=(rest - a0) {
                for a2 in 0..=(rest - a0 - a1) {
                    out.push(MultiIndex::new([a0, a1, a2], beta.clone(), h));
                }
            }
        }
    }
    out
}

/// `Z^β f` only.
pub fn apply_zbeta(grid: &Grid, beta: &[VectorField], f: &TimeTower) -> Result<TimeTower> {
    let mut g = f.clone();
    for z in beta.iter().rev() {
        g = apply_z(grid, *z, &g)?;
    }
    Ok(g)
}

/// `∂^α` applied to a tower.
pub fn apply_alpha(grid: &Grid, alpha: [usize; 3], f: &TimeTower) -> Result<TimeTower> {
    let mut g = f.clone();
    for _ in 0..alpha[0] {
        g = g.dt()?;
    }
    Ok(g.d_mixed(grid, alpha[1], alpha[2]))
}

/// `𝒵^γ f = ∂^α Z^β f`; rejects `|γ| > cap`.
pub fn apply_zgamma(grid: &Grid, gamma: &MultiIndex, f: &TimeTower, cap: usize) -> Result<TimeTower> {
    if gamma.size() > cap {
        return Err(Error::CapExceeded { size: gamma.size(), cap });
    }
    let g = apply_zbeta(grid, &gamma.beta, f)?;
    apply_alpha(grid, gamma.alpha, &g)
}

/// Exact `𝒵^γ p`.
pub fn apply_zgamma_poly(gamma: &MultiIndex, p: &PolyExpr) -> PolyExpr {
    let mut g = p.clone();
    for z in gamma.beta.iter().rev() {
        g = z_poly(*z, &g);
    }
    for (k, v) in Var::ALL.iter().enumerate() {
        for _ in 0..gamma.alpha[k] {
            g = g.deriv(*v);
        }
    }
    g
}
