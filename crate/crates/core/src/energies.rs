//! Energy functionals and control norms.
//!
//! The base energy is `E(u,v) = ∫ u_t² + |∇u|² + v_t² + |∇v|² + v² dx`
//! (no factor ½ by default; see [`Normalization`]).

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Grid, Mask, State};
use crate::nullforms::{Form, NullFormSpec};
use crate::tower::{build_closure, Closure, TimeTower};
use crate::vectorfields::{apply_zbeta, multi_indices, MultiIndex, VectorField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Energy normalization. `Plain` integrates the density as is; `Half`
/// carries the factor ½ used for the energy density in the quasilinear
/// energy estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[default]
    Plain,
    Half,
}

impl Normalization {
    pub fn factor(self) -> f64 {
        match self {
            Normalization::Plain => 1.0,
            Normalization::Half => 0.5,
        }
    }

    /// Weight of the trilinear corrections in `E^quasi`: chosen so that the
    /// top-order terms of `d/dt E^quasi` cancel.
    pub fn correction_weight(self) -> f64 {
        2.0 * self.factor()
    }
}

/// Pointwise energy density of `(u, v)` given `u_t, ∇u, v_t, ∇v, v`.
fn density(ut: &Field, gu: [&Field; 2], vt: &Field, gv: [&Field; 2], v: &Field) -> Field {
    let n = ut.n();
    let s = [ut, gu[0], gu[1], vt, gv[0], gv[1], v].map(|f| f.as_slice());
    let data: Vec<f64> = (0..n * n).into_par_iter().map(|k| s.iter().map(|a| a[k] * a[k]).sum()).collect();
    Field::from_vec(n, data).expect("finite density")
}

/// Energy density field of `(u, u_t, v, v_t)` (Plain normalization).
pub fn energy_density(grid: &Grid, u: &Field, ut: &Field, v: &Field, vt: &Field) -> Field {
    let (u1, u2) = (grid.d1(u, Axis::X1), grid.d1(u, Axis::X2));
    let (v1, v2) = (grid.d1(v, Axis::X1), grid.d1(v, Axis::X2));
    density(ut, [&u1, &u2], vt, [&v1, &v2], v)
}

/// `E` for explicit fields, optionally restricted to a mask.
pub fn energy_fields(
    grid: &Grid,
    u: &Field,
    ut: &Field,
    v: &Field,
    vt: &Field,
    norm: Normalization,
    mask: Option<&Mask>,
) -> f64 {
    norm.factor() * grid.integrate(&energy_density(grid, u, ut, v, vt), mask)
}

/// `E(t; u, v)` with the default normalization.
pub fn energy_e(grid: &Grid, s: &State) -> f64 {
    energy_e_with(grid, s, Normalization::Plain)
}

pub fn energy_e_with(grid: &Grid, s: &State, norm: Normalization) -> f64 {
    energy_fields(grid, &s.u, &s.ut, &s.v, &s.vt, norm, None)
}

/// Energy of two towers (levels 0 and 1 are used).
pub fn energy_towers(grid: &Grid, u: &TimeTower, v: &TimeTower, norm: Normalization) -> Result<f64> {
    Ok(energy_fields(grid, u.level(0)?, u.level(1)?, v.level(0)?, v.level(1)?, norm, None))
}

fn multi_derivative_energy(
    grid: &Grid,
    c: &Closure,
    alpha: [usize; 3],
    norm: Normalization,
) -> Result<f64> {
    let need = alpha[0] + 1;
    if c.depth() < need {
        return Err(Error::InsufficientDepth { requested: need, available: c.depth() });
    }
    let pick = |tw: &TimeTower| -> Result<(Field, Field)> {
        Ok((
            grid.d_mixed(tw.level(alpha[0])?, alpha[1], alpha[2]),
            grid.d_mixed(tw.level(alpha[0] + 1)?, alpha[1], alpha[2]),
        ))
    };
    let (u, ut) = pick(&c.u)?;
    let (v, vt) = pick(&c.v)?;
    Ok(energy_fields(grid, &u, &ut, &v, &vt, norm, None))
}

/// All multi-indices `α` over `(t, x1, x2)` with `|α| = k`.
fn alphas_of_order(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a0 in 0..=k {
        for a1 in 0..=(k - a0) {
            out.push([a0, a1, k - a0 - a1]);
        }
    }
    out
}

/// `E^n = Σ_{|α| ≤ n} E(∂^α u, ∂^α v)`; needs closure depth `n + 1`.
pub fn energy_en(grid: &Grid, c: &Closure, n: usize, norm: Normalization) -> Result<f64> {
    Ok(energy_en_all(grid, c, n, norm)?[n])
}

/// `[E^0, E^1, …, E^{n_max}]`.
pub fn energy_en_all(grid: &Grid, c: &Closure, n_max: usize, norm: Normalization) -> Result<Vec<f64>> {
    if c.depth() < n_max + 1 {
        return Err(Error::InsufficientDepth { requested: n_max + 1, available: c.depth() });
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    for k in 0..=n_max {
        for alpha in alphas_of_order(k) {
            acc += multi_derivative_energy(grid, c, alpha, norm)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Closure depth needed for `E^[cap]` with weight `h`.
pub fn evf_required_depth(cap: usize, h: usize) -> usize {
    multi_indices(cap, h).iter().map(|g| g.depth_cost() + 1).max().unwrap_or(1)
}

/// `E^[cap] = Σ_{|γ| ≤ cap} E(𝒵^γ u, 𝒵^γ v)`.
pub fn energy_evf(grid: &Grid, c: &Closure, cap: usize, h: usize, norm: Normalization) -> Result<f64> {
    Ok(energy_evf_terms(grid, c, cap, h, norm)?.iter().map(|(_, e)| e).sum())
}

/// Individual terms of `E^[cap]`, in enumeration order.
pub fn energy_evf_terms(
    grid: &Grid,
    c: &Closure,
    cap: usize,
    h: usize,
    norm: Normalization,
) -> Result<Vec<(MultiIndex, f64)>> {
    let need = evf_required_depth(cap, h);
    if c.depth() < need {
        return Err(Error::InsufficientDepth { requested: need, available: c.depth() });
    }
    // Group by β so each Z^β is applied once.
    let mut groups: BTreeMap<Vec<VectorField>, Vec<MultiIndex>> = BTreeMap::new();
    let indices = multi_indices(cap, h);
    for g in &indices {
        groups.entry(g.beta.clone()).or_default().push(g.clone());
    }
    let mut values: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (beta, members) in &groups {
        let max_a0 = members.iter().map(|g| g.alpha[0]).max().unwrap_or(0);
        let depth = max_a0 + 1 + beta.iter().map(|z| z.depth_cost()).sum::<usize>();
        let zu = apply_zbeta(grid, beta, &c.u.truncated(depth)?)?;
        let zv = apply_zbeta(grid, beta, &c.v.truncated(depth)?)?;
        let zc = Closure { u: zu, v: zv };
        for g in members {
            values.insert(g.clone(), multi_derivative_energy(grid, &zc, g.alpha, norm)?);
        }
    }
    Ok(indices.into_iter().map(|g| {
        let e = values[&g];
        (g, e)
    }).collect())
}

/// Gradient triple `(∂_t f, ∂_1 f, ∂_2 f)` of a field with given time derivative.
pub fn gradient(grid: &Grid, f: &Field, ft: &Field) -> [Field; 3] {
    [ft.clone(), grid.d1(f, Axis::X1), grid.d1(f, Axis::X2)]
}

/// Pointwise correction density `b_f(w; U, V)` for a single null form:
///
/// * `Q0`:  `−(w_1 V_1 + w_2 V_2) U_d`
/// * `Q0i`: `w_t V_i U_d`
/// * `Q12`: `(w_1 V_2 − w_2 V_1) U_d`
///
/// where `d` is the spec's derivative axis. Gradients are `(∂_t, ∂_1, ∂_2)`.
#[inline]
pub fn correction_density(form: Form, w: [f64; 3], gu: [f64; 3], gv: [f64; 3], d: Axis) -> f64 {
    let ud = gu[1 + d.index()];
    match form {
        Form::Q0 => -(w[1] * gv[1] + w[2] * gv[2]) * ud,
        Form::Q01 => w[0] * gv[1] * ud,
        Form::Q02 => w[0] * gv[2] * ud,
        Form::Q12 => (w[1] * gv[2] - w[2] * gv[1]) * ud,
    }
}

/// `∫ b_f(w; U, V) dx` for one form.
pub fn correction_b(grid: &Grid, form: Form, w: [&Field; 3], uv: &State, d: Axis) -> f64 {
    let gu = gradient(grid, &uv.u, &uv.ut);
    let gv = gradient(grid, &uv.v, &uv.vt);
    let n = grid.n();
    let at = |f: [&Field; 3], k: usize| [f[0].as_slice()[k], f[1].as_slice()[k], f[2].as_slice()[k]];
    let data: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| correction_density(form, at(w, k), at([&gu[0], &gu[1], &gu[2]], k), at([&gv[0], &gv[1], &gv[2]], k), d))
        .collect();
    grid.integrate(&Field::from_vec(n, data).expect("finite correction"), None)
}

/// Quasilinear energy `E(U,V) + k ∫ B1(v; U, V) + B2(u; U, V)` where `B1`
/// and `B2` are the spec-weighted sums of [`correction_b`].
pub fn energy_quasi(grid: &Grid, background: &State, uv: &State, spec: &NullFormSpec, norm: Normalization) -> f64 {
    let e = energy_e_with(grid, uv, norm);
    if spec.is_zero() {
        return e;
    }
    let gu = gradient(grid, &background.u, &background.ut);
    let gv = gradient(grid, &background.v, &background.vt);
    let mut corr = 0.0;
    for form in Form::ALL {
        let (c1, c2) = (spec.n1_coeffs[form.index()], spec.n2_coeffs[form.index()]);
        if c1 != 0.0 {
            corr += c1 * correction_b(grid, form, [&gv[0], &gv[1], &gv[2]], uv, spec.deriv_axis);
        }
        if c2 != 0.0 {
            corr += c2 * correction_b(grid, form, [&gu[0], &gu[1], &gu[2]], uv, spec.deriv_axis);
        }
    }
    e + norm.correction_weight() * corr
}

/// Ghost-weight exponent profile `A(s) = clamp((s − S)/S, 0, 1)`:
/// nondecreasing, `A' = 1/S` on `[S, 2S]`, constant elsewhere.
pub fn ghost_exponent(s: f64, big_s: f64) -> f64 {
    ((s - big_s) / big_s).clamp(0.0, 1.0)
}

/// Ghost weight `e^{−A(t − r)}` ∈ `[e^{−1}, 1]`.
pub fn ghost_weight(t: f64, r: f64, big_s: f64) -> f64 {
    (-ghost_exponent(t - r, big_s)).exp()
}

/// `∫ e^{−A(t−r)} e(u, v) dx`.
pub fn energy_ghost(grid: &Grid, s: &State, big_s: f64, norm: Normalization) -> f64 {
    let t = s.time;
    let w = grid.r().map(|r| ghost_weight(t, r, big_s));
    let dens = energy_density(grid, &s.u, &s.ut, &s.v, &s.vt);
    norm.factor() * grid.integrate(&dens.mul(&w), None)
}

/// `A = Σ_{|α|=1} ‖∂^α u‖_∞ + ‖∂^α v‖_∞`, optionally over a mask.
pub fn control_a(grid: &Grid, s: &State) -> f64 {
    control_a_masked(grid, s, None)
}

pub fn control_a_masked(grid: &Grid, s: &State, mask: Option<&Mask>) -> f64 {
    let mut a = 0.0;
    for (f, ft) in [(&s.u, &s.ut), (&s.v, &s.vt)] {
        for g in gradient(grid, f, ft) {
            a += g.max_abs_masked(mask);
        }
    }
    a
}

/// `B = Σ_{|α|=2} ‖∂^α u‖_∞ + ‖∂^α v‖_∞`; `∂_t²` comes from the closure.
pub fn control_b(grid: &Grid, c: &Closure) -> Result<f64> {
    control_b_masked(grid, c, None)
}

pub fn control_b_masked(grid: &Grid, c: &Closure, mask: Option<&Mask>) -> Result<f64> {
    let mut b = 0.0;
    for tw in [&c.u, &c.v] {
        let (f, ft, ftt) = (tw.level(0)?, tw.level(1)?, tw.level(2)?);
        let f1 = grid.d1(f, Axis::X1);
        let parts = [
            ftt.clone(),
            grid.d1(ft, Axis::X1),
            grid.d1(ft, Axis::X2),
            grid.d2(f, Axis::X1),
            grid.d1(&f1, Axis::X2),
            grid.d2(f, Axis::X2),
        ];
        b += parts.iter().map(|p| p.max_abs_masked(mask)).sum::<f64>();
    }
    Ok(b)
}

/// Which energies an [`EnergyReport`] carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    /// Highest `n` for `E^n` columns (`E1..En_max`).
    pub n_max: usize,
    /// Cap for `E^[cap]`.
    pub evf_cap: usize,
    /// Vector-field weight `h` in `|γ| = |α| + h|β|`.
    pub h: usize,
    /// Ghost-weight band parameters `S`.
    pub ghost_s: Vec<f64>,
    pub normalization: Normalization,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { n_max: 2, evf_cap: 4, h: 2, ghost_s: vec![1.0, 2.0, 4.0], normalization: Normalization::Plain }
    }
}

impl EnergyConfig {
    /// Closure depth needed to evaluate every column.
    pub fn required_depth(&self) -> usize {
        (self.n_max + 1).max(evf_required_depth(self.evf_cap, self.h)).max(2)
    }
}

/// One time-stamped record of all energies and control norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub time: f64,
    pub e: f64,
    /// `E^1..E^{n_max}`.
    pub en: Vec<f64>,
    pub evf: f64,
    pub equasi: f64,
    /// `(S, ghost-weighted energy)`.
    pub eghost: Vec<(f64, f64)>,
    pub a: f64,
    pub b: f64,
}

/// Evaluate every configured energy of a solution state. The quasilinear
/// energy is that of the state itself with itself as background.
pub fn energy_report(
    grid: &Grid,
    s: &State,
    spec: &NullFormSpec,
    cfg: &EnergyConfig,
    truncation: Option<f64>,
) -> Result<EnergyReport> {
    let c = build_closure(grid, s, spec, cfg.required_depth(), truncation)?;
    let norm = cfg.normalization;
    let en = energy_en_all(grid, &c, cfg.n_max, norm)?;
    Ok(EnergyReport {
        time: s.time,
        e: en[0],
        en: en[1..].to_vec(),
        evf: energy_evf(grid, &c, cfg.evf_cap, cfg.h, norm)?,
        equasi: energy_quasi(grid, s, s, spec, norm),
        eghost: cfg.ghost_s.iter().map(|&gs| (gs, energy_ghost(grid, s, gs, norm))).collect(),
        a: control_a(grid, s),
        b: control_b(grid, &c)?,
    })
}
