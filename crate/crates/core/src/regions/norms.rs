//! Dyadic-window norms `X^T` and `Y^T` and hyperboloid integrals.
//!
//! All accumulators are streaming: feed time samples in increasing order,
//! then call `finish`. Time integrals use the trapezoid rule clipped to the
//! window `[T, 2T]`; sample times outside the window only contribute through
//! the interpolated value at the window edge.

use super::{cell_labels, Cell};
use crate::energies::energy_e;
use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Grid, State};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const WINDOW_TOL: f64 = 1e-9;

/// Time window `[T, 2T]` with coverage bookkeeping.
#[derive(Clone, Debug)]
struct Window {
    lo: f64,
    hi: f64,
    seen: Option<(f64, f64)>,
}

impl Window {
    fn new(t_exp: i32) -> Self {
        let lo = 2f64.powi(t_exp);
        Window { lo, hi: 2.0 * lo, seen: None }
    }

    fn tol(&self) -> f64 {
        WINDOW_TOL * self.hi
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.lo - self.tol() && t <= self.hi + self.tol()
    }

    fn record(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::NonFinite("sample time"));
        }
        self.seen = match self.seen {
            None => Some((t, t)),
            Some((a, b)) => {
                if t <= b {
                    return Err(Error::InvalidArgument(format!("sample times must increase ({t} after {b})")));
                }
                Some((a, t))
            }
        };
        Ok(())
    }

    fn check_covered(&self) -> Result<()> {
        let (a, b) = self.seen.unwrap_or((f64::NAN, f64::NAN));
        if !(a <= self.lo + self.tol() && b >= self.hi - self.tol()) {
            return Err(Error::WindowNotCovered { have_lo: a, have_hi: b, need_lo: self.lo, need_hi: self.hi });
        }
        Ok(())
    }

    /// Trapezoid weight of the segment `[ta, tb]` clipped to the window,
    /// returned as the weights applied to the values at `ta` and `tb`.
    fn clipped_weights(&self, ta: f64, tb: f64) -> Option<(f64, f64)> {
        let a = ta.max(self.lo);
        let b = tb.min(self.hi);
        if !(b > a) {
            return None;
        }
        let len = tb - ta;
        // linear interpolant at a and b, in terms of the endpoint values
        let (la, lb) = ((a - ta) / len, (b - ta) / len);
        let half = 0.5 * (b - a);
        Some((half * ((1.0 - la) + (1.0 - lb)), half * (la + lb)))
    }
}

/// Clipped trapezoid integral of per-cell spatial integrals.
#[derive(Clone, Debug)]
struct CellIntegral {
    window: Window,
    prev: Option<(f64, BTreeMap<Cell, f64>)>,
    sums: BTreeMap<Cell, f64>,
}

impl CellIntegral {
    fn new(t_exp: i32) -> Self {
        CellIntegral { window: Window::new(t_exp), prev: None, sums: BTreeMap::new() }
    }

    fn push(&mut self, t: f64, values: BTreeMap<Cell, f64>) -> Result<()> {
        self.window.record(t)?;
        if let Some((tp, vp)) = &self.prev {
            if let Some((wa, wb)) = self.window.clipped_weights(*tp, t) {
                for (cell, &x) in vp {
                    *self.sums.entry(*cell).or_insert(0.0) += wa * x;
                }
                for (cell, &x) in &values {
                    *self.sums.entry(*cell).or_insert(0.0) += wb * x;
                }
            }
        }
        self.prev = Some((t, values));
        Ok(())
    }
}

/// `Σ_k dx² · density_k` grouped by the cell label of each grid point.
fn per_cell_integrals(grid: &Grid, t: f64, density: &Field) -> BTreeMap<Cell, f64> {
    let labels = cell_labels(grid, t);
    let dx2 = grid.dx() * grid.dx();
    let mut out = BTreeMap::new();
    for (label, &d) in labels.iter().zip(density.as_slice()) {
        if let Some(c) = label {
            *out.entry(*c).or_insert(0.0) += d * dx2;
        }
    }
    out
}

/// Integral over `H_ρ ∩ {T ≤ t ≤ 2T}` (measure `dx`) of a field sampled at
/// discrete times; the value at each grid point is linearly interpolated in
/// time to `t(x) = √(ρ² + |x|²)`.
#[derive(Clone, Debug)]
pub struct HyperboloidAccumulator {
    rho2: f64,
    window: Window,
    t_of_x: Vec<f64>,
    dx2: f64,
    prev: Option<(f64, Field)>,
    sum: f64,
}

impl HyperboloidAccumulator {
    /// Admissible band `T/2 ≤ ρ² < 4T²`; the piece of `H_ρ` below `t = 2T`
    /// must fit inside the computational box.
    pub fn new(grid: &Grid, t_exp: i32, rho2: f64) -> Result<Self> {
        let window = Window::new(t_exp);
        let big_t = window.lo;
        let (lo, hi) = (0.5 * big_t, 4.0 * big_t * big_t);
        if !(rho2 >= lo && rho2 < hi) {
            return Err(Error::RhoOutOfBand { rho2, lo, hi });
        }
        let reach = (hi - rho2).sqrt();
        if reach > grid.spec().half_width {
            return Err(Error::InvalidArgument(format!(
                "hyperboloid ρ² = {rho2} reaches |x| = {reach:.3} beyond the box half-width {}",
                grid.spec().half_width
            )));
        }
        let t_of_x = grid.r().as_slice().iter().map(|&r| (rho2 + r * r).sqrt()).collect();
        Ok(HyperboloidAccumulator { rho2, window, t_of_x, dx2: grid.dx() * grid.dx(), prev: None, sum: 0.0 })
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    /// Feed the integrand sampled at time `t`.
    pub fn push(&mut self, t: f64, integrand: &Field) -> Result<()> {
        self.window.record(t)?;
        if integrand.as_slice().len() != self.t_of_x.len() {
            return Err(Error::ShapeMismatch { expected: self.t_of_x.len(), got: integrand.as_slice().len() });
        }
        if let Some((tp, fp)) = &self.prev {
            let (lo, hi) = (self.window.lo, self.window.hi);
            let len = t - tp;
            let mut acc = 0.0;
            for ((&tx, &a), &b) in self.t_of_x.iter().zip(fp.as_slice()).zip(integrand.as_slice()) {
                if tx >= *tp && tx < t && tx >= lo && tx <= hi {
                    let th = (tx - tp) / len;
                    acc += (1.0 - th) * a + th * b;
                }
            }
            self.sum += acc * self.dx2;
        }
        self.prev = Some((t, integrand.clone()));
        Ok(())
    }

    pub fn finish(&self) -> Result<f64> {
        self.window.check_covered()?;
        Ok(self.sum)
    }
}

/// One-shot hyperboloid integral over stored `(t, integrand)` samples.
pub fn hyperboloid_integral(grid: &Grid, t_exp: i32, rho2: f64, samples: &[(f64, Field)]) -> Result<f64> {
    let mut acc = HyperboloidAccumulator::new(grid, t_exp, rho2)?;
    for (t, f) in samples {
        acc.push(*t, f)?;
    }
    acc.finish()
}

/// Default hyperboloid list `ρ² = T·2^k ≤ T²` (at least `ρ² = T`).
pub fn default_rho2_list(t_exp: i32) -> Vec<f64> {
    let big_t = 2f64.powi(t_exp);
    let mut out = vec![big_t];
    let mut r = 2.0 * big_t;
    while r <= big_t * big_t {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Components of `‖(U, V)‖²_{X^T}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XtReport {
    pub t_exp: i32,
    /// `sup_{[T,2T]} E(U, V)`.
    pub energy_sup: f64,
    /// `(1/S) ∫∫_{C_TS} (𝒯U)² + (𝒯V)² + V²` per cell.
    pub cells: Vec<(Cell, f64)>,
    /// Hyperboloid integrals per `ρ²`.
    pub hyperboloids: Vec<(f64, f64)>,
}

impl XtReport {
    pub fn cell_sup(&self) -> f64 {
        self.cells.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn hyperboloid_sup(&self) -> f64 {
        self.hyperboloids.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn cell(&self, cell: Cell) -> Option<f64> {
        self.cells.iter().find(|c| c.0 == cell).map(|c| c.1)
    }

    /// `sup E + sup_S (cone term) + sup_ρ (hyperboloid term)`.
    pub fn total(&self) -> f64 {
        self.energy_sup + self.cell_sup() + self.hyperboloid_sup()
    }
}

/// Streaming `X^T` accumulator for a perturbation `(U, V)`.
#[derive(Clone, Debug)]
pub struct XtAccumulator<'g> {
    grid: &'g Grid,
    t_exp: i32,
    energy_sup: f64,
    cone: CellIntegral,
    hyper: Vec<HyperboloidAccumulator>,
}

impl<'g> XtAccumulator<'g> {
    /// `rho2_list = None` selects [`default_rho2_list`].
    pub fn new(grid: &'g Grid, t_exp: i32, rho2_list: Option<Vec<f64>>) -> Result<Self> {
        let list = rho2_list.unwrap_or_else(|| default_rho2_list(t_exp));
        let hyper = list.iter().map(|&r2| HyperboloidAccumulator::new(grid, t_exp, r2)).collect::<Result<_>>()?;
        Ok(XtAccumulator { grid, t_exp, energy_sup: 0.0, cone: CellIntegral::new(t_exp), hyper })
    }

    pub fn push(&mut self, uv: &State) -> Result<()> {
        uv.check_shape(self.grid.n())?;
        let grid = self.grid;
        let t = uv.time;
        let big_t = 2f64.powi(self.t_exp);
        if self.cone.window.contains(t) {
            self.energy_sup = self.energy_sup.max(energy_e(grid, uv));
        }
        let (u1, u2) = (grid.d1(&uv.u, Axis::X1), grid.d1(&uv.u, Axis::X2));
        let (v1, v2) = (grid.d1(&uv.v, Axis::X1), grid.d1(&uv.v, Axis::X2));
        let (x1, x2, r) = (grid.x(Axis::X1).as_slice(), grid.x(Axis::X2).as_slice(), grid.r().as_slice());
        let r_min = grid.r_min();
        let len = r.len();
        let mut cone_density = vec![0.0; len];
        let mut hyper_a = vec![0.0; len];
        let mut hyper_b = vec![0.0; len];
        for k in 0..len {
            let (ut, vt, v) = (uv.ut.as_slice()[k], uv.vt.as_slice()[k], uv.v.as_slice()[k]);
            let (a1, a2, b1, b2) = (u1.as_slice()[k], u2.as_slice()[k], v1.as_slice()[k], v2.as_slice()[k]);
            // tangential derivatives 𝒯_j f = ∂_j f + ω_j f_t, dropped inside r_min
            let tau = if r[k] >= r_min {
                let (w1, w2) = (x1[k] / r[k], x2[k] / r[k]);
                let (tu1, tu2) = (a1 + w1 * ut, a2 + w2 * ut);
                let (tv1, tv2) = (b1 + w1 * vt, b2 + w2 * vt);
                tu1 * tu1 + tu2 * tu2 + tv1 * tv1 + tv2 * tv2
            } else {
                0.0
            };
            cone_density[k] = tau + v * v;
            // Z fields: Ω12 = x2∂1 − x1∂2, Ω0i = t∂i + x_i∂t
            let zu = [x2[k] * a1 - x1[k] * a2, t * a1 + x1[k] * ut, t * a2 + x2[k] * ut];
            let zv = [x2[k] * b1 - x1[k] * b2, t * b1 + x1[k] * vt, t * b2 + x2[k] * vt];
            let z2: f64 = zu.iter().chain(&zv).map(|z| z * z).sum();
            hyper_a[k] = z2 / (big_t * big_t) + v * v;
            hyper_b[k] = (ut * ut + a1 * a1 + a2 * a2 + vt * vt + b1 * b1 + b2 * b2) / (big_t * big_t);
        }
        let n = grid.n();
        let cone_density = Field::from_vec(n, cone_density)?;
        self.cone.push(t, per_cell_integrals(grid, t, &cone_density))?;
        for h in &mut self.hyper {
            let rho2 = h.rho2();
            let integrand: Vec<f64> = hyper_a.iter().zip(&hyper_b).map(|(a, b)| a + rho2 * b).collect();
            h.push(t, &Field::from_vec(n, integrand)?)?;
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<XtReport> {
        self.cone.window.check_covered()?;
        let cells = self
            .cone
            .sums
            .iter()
            .map(|(c, &v)| (*c, v / c.s_scale()))
            .collect();
        let hyperboloids = self.hyper.iter().map(|h| Ok((h.rho2(), h.finish()?))).collect::<Result<_>>()?;
        Ok(XtReport { t_exp: self.t_exp, energy_sup: self.energy_sup, cells, hyperboloids })
    }
}

/// Streaming `Y^T` accumulator: `sup_S T^{1/2} ‖(F, G)‖_{L²(C_TS)}`.
#[derive(Clone, Debug)]
pub struct YtAccumulator<'g> {
    grid: &'g Grid,
    t_exp: i32,
    cone: CellIntegral,
}

impl<'g> YtAccumulator<'g> {
    pub fn new(grid: &'g Grid, t_exp: i32) -> Self {
        YtAccumulator { grid, t_exp, cone: CellIntegral::new(t_exp) }
    }

    pub fn push(&mut self, t: f64, f: &Field, g: &Field) -> Result<()> {
        let density = f.zip_map(g, |a, b| a * a + b * b);
        self.cone.push(t, per_cell_integrals(self.grid, t, &density))
    }

    /// Per-cell values `T^{1/2} ‖(F, G)‖_{L²(C_TS)}`.
    pub fn cells(&self) -> Result<Vec<(Cell, f64)>> {
        self.cone.window.check_covered()?;
        let sqrt_t = 2f64.powi(self.t_exp).sqrt();
        Ok(self.cone.sums.iter().map(|(c, &v)| (*c, sqrt_t * v.max(0.0).sqrt())).collect())
    }

    pub fn finish(&self) -> Result<f64> {
        Ok(self.cells()?.iter().map(|c| c.1).fold(0.0, f64::max))
    }
}

/// One-shot `Y^T` over stored `(t, F, G)` samples.
pub fn yt_accumulate(grid: &Grid, t_exp: i32, samples: &[(f64, Field, Field)]) -> Result<f64> {
    let mut acc = YtAccumulator::new(grid, t_exp);
    for (t, f, g) in samples {
        acc.push(*t, f, g)?;
    }
    acc.finish()
}
