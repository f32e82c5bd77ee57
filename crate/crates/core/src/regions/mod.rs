//! Dyadic decomposition of space-time relative to the light cone.
//!
//! Points `(t, x)` with `r = |x|` are tagged, in this order:
//!
//! * `outer` when `t ≤ (1 + r)/4`;
//! * `shell` when `|t − r| < 1`;
//! * `interior` (`t > r`) or `exterior` (`r > t`) otherwise, with
//!   `S = 2^⌊log₂|t − r|⌋`.
//!
//! Every tag carries the time scale `T = 2^max(⌊log₂ t⌋, 0)`. Dyadic scales
//! are stored as integer exponents so tags are exact and hashable.

pub mod charts;
pub mod norms;

use crate::grid::{Axis, Field, Grid, Mask};
use serde::{Deserialize, Serialize};
use std::fmt;

pub use charts::{
    box_cartesian, box_chart, box_hyperbolic_residual, chart_jet, box_hyperbolic_residual_poly, from_hyperbolic, jacobian,
    to_hyperbolic, Chart, HyperCoords,
};
pub use norms::{
    hyperboloid_integral, yt_accumulate, HyperboloidAccumulator, XtAccumulator, XtReport, YtAccumulator,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionKind {
    Interior,
    Exterior,
    Shell,
    Outer,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Interior => "interior",
            RegionKind::Exterior => "exterior",
            RegionKind::Shell => "shell",
            RegionKind::Outer => "outer",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dyadic region tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionId {
    pub kind: RegionKind,
    /// `T = 2^t_exp`.
    pub t_exp: i32,
    /// `S = 2^s_exp`; present for interior and exterior tags.
    pub s_exp: Option<i32>,
}

impl RegionId {
    pub fn t_scale(&self) -> f64 {
        2f64.powi(self.t_exp)
    }

    pub fn s_scale(&self) -> Option<f64> {
        self.s_exp.map(|e| 2f64.powi(e))
    }

    /// The `T`-agnostic cell this tag belongs to.
    pub fn cell(&self) -> Cell {
        Cell { kind: self.kind, s_exp: self.s_exp.unwrap_or(0) }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.s_exp {
            Some(s) => write!(f, "{}(T=2^{}, S=2^{})", self.kind, self.t_exp, s),
            None => write!(f, "{}(T=2^{})", self.kind, self.t_exp),
        }
    }
}

/// A cone-localized cell `C_S` (kind and `S`, any `T`). Shell cells use `s_exp = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub kind: RegionKind,
    pub s_exp: i32,
}

impl Cell {
    pub fn interior(s_exp: i32) -> Self {
        Cell { kind: RegionKind::Interior, s_exp }
    }

    pub fn s_scale(&self) -> f64 {
        2f64.powi(self.s_exp)
    }
}

fn floor_log2(x: f64) -> i32 {
    // exact for powers of two, unlike `log2().floor()` near boundaries
    let mut e = x.log2().floor() as i32;
    if 2f64.powi(e) > x {
        e -= 1;
    } else if 2f64.powi(e + 1) <= x {
        e += 1;
    }
    e
}

/// Tag of the point `(t, r)`.
pub fn classify_tr(t: f64, r: f64) -> RegionId {
    let t_exp = if t >= 1.0 { floor_log2(t) } else { 0 };
    if t <= (1.0 + r) / 4.0 {
        return RegionId { kind: RegionKind::Outer, t_exp, s_exp: None };
    }
    let gap = (t - r).abs();
    if gap < 1.0 {
        return RegionId { kind: RegionKind::Shell, t_exp, s_exp: None };
    }
    let kind = if t > r { RegionKind::Interior } else { RegionKind::Exterior };
    RegionId { kind, t_exp, s_exp: Some(floor_log2(gap)) }
}

/// Tag of the point `(t, x)`.
pub fn classify(t: f64, x: [f64; 2]) -> RegionId {
    classify_tr(t, x[0].hypot(x[1]))
}

/// Grid points whose tag at time `t` equals `id`.
pub fn region_mask(grid: &Grid, t: f64, id: RegionId) -> Mask {
    let r = grid.r();
    Mask::from_bits(grid.n(), r.as_slice().iter().map(|&ri| classify_tr(t, ri) == id).collect()).expect("grid-sized mask")
}

/// Grid points in the cell at time `t` (the `T` component is ignored).
pub fn cell_mask(grid: &Grid, t: f64, cell: Cell) -> Mask {
    let r = grid.r();
    Mask::from_bits(grid.n(), r.as_slice().iter().map(|&ri| classify_tr(t, ri).cell() == cell).collect()).expect("grid-sized mask")
}

/// Per-point cell labels at time `t` (`None` for outer points).
pub fn cell_labels(grid: &Grid, t: f64) -> Vec<Option<Cell>> {
    grid.r()
        .as_slice()
        .iter()
        .map(|&ri| {
            let id = classify_tr(t, ri);
            (id.kind != RegionKind::Outer).then(|| id.cell())
        })
        .collect()
}

/// All tags present at time `t` with their masks, sorted by tag.
pub fn all_region_masks(grid: &Grid, t: f64) -> Vec<(RegionId, Mask)> {
    let r = grid.r();
    let ids: Vec<RegionId> = r.as_slice().iter().map(|&ri| classify_tr(t, ri)).collect();
    let mut uniq: Vec<RegionId> = ids.clone();
    uniq.sort();
    uniq.dedup();
    uniq.into_iter()
        .map(|id| {
            let bits = ids.iter().map(|&x| x == id).collect();
            (id, Mask::from_bits(grid.n(), bits).expect("grid-sized mask"))
        })
        .collect()
}

/// Sup-norms of the gradient and of its hyperbolic substitute
/// `{T⁻¹∂θ, T⁻¹∂φ, S⁻¹(∂σ − ∂φ)}` (with `T⁻¹∂σ` as third member where
/// `φ < 1`) over the interior cell mask at time `t`. Returns
/// `(sup|∇f|, sup|substitute|)`; both are 0 on an empty mask.
pub fn gradient_substitute_sups(grid: &Grid, f: &Field, ft: &Field, t: f64, cell: Cell) -> (f64, f64) {
    let mask = cell_mask(grid, t, cell);
    let t_scale = 2f64.powi(if t >= 1.0 { floor_log2(t) } else { 0 });
    let s_scale = cell.s_scale();
    let f1 = grid.d1(f, Axis::X1);
    let f2 = grid.d1(f, Axis::X2);
    let (x1, x2, r) = (grid.x(Axis::X1), grid.x(Axis::X2), grid.r());
    let (mut g_sup, mut s_sup) = (0.0_f64, 0.0_f64);
    for k in 0..f.as_slice().len() {
        if !mask.bits()[k] {
            continue;
        }
        let (a, b, c) = (ft.as_slice()[k], f1.as_slice()[k], f2.as_slice()[k]);
        let (y1, y2, rr) = (x1.as_slice()[k], x2.as_slice()[k], r.as_slice()[k]);
        g_sup = g_sup.max((a * a + b * b + c * c).sqrt());
        let d_theta = y2 * b - y1 * c; // Ω12 f
        let fr = if rr > 0.0 { (y1 * b + y2 * c) / rr } else { 0.0 };
        let d_phi = rr * a + t * fr;
        let d_sigma = t * a + rr * fr;
        let phi = if t > rr { (rr / t).atanh() } else { f64::INFINITY };
        let third = if phi >= 1.0 { (d_sigma - d_phi) / s_scale } else { d_sigma / t_scale };
        let sub = ((d_theta / t_scale).powi(2) + (d_phi / t_scale).powi(2) + third * third).sqrt();
        s_sup = s_sup.max(sub);
    }
    (g_sup, s_sup)
}
