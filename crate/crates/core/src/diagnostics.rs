//! Exponent fits, pointwise bootstrap-bound monitoring, finite-speed checks
//! and lifespan sweeps.

use crate::data::{initial_state, DataProfile};
use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig, ExitReason, NonlinearSystem, Stepper};
use crate::grid::{Axis, Field, Grid, Mask, State};
use crate::tower::Closure;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Least-squares fit `amplitude ≈ e^c · T^{a_T} · S^{a_S}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a_t: f64,
    pub a_s: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(T, S, amplitude)`.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Solve the normal equations of `y ≈ X β` (columns of `X` given as rows of
/// `cols`) by Gaussian elimination with partial pivoting.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let p = cols.len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = cols[i].iter().zip(&cols[j]).map(|(x, z)| x * z).sum();
        }
        a[i][p] = cols[i].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    let scale = (0..p).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap_or(c);
        if !(a[piv][c].abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::DegenerateFit("design matrix is singular".into()));
        }
        a.swap(c, piv);
        for i in 0..p {
            if i != c {
                let f = a[i][c] / a[c][c];
                for k in c..=p {
                    a[i][k] -= f * a[c][k];
                }
            }
        }
    }
    Ok((0..p).map(|i| a[i][p] / a[i][i]).collect())
}

fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted).map(|(v, f)| (v - f).powi(2)).sum();
    if ss_tot <= 1e-28 * y.len() as f64 {
        return if ss_res <= 1e-20 * y.len() as f64 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

/// Fit `amplitude ~ T^{a_T} S^{a_S}` on log-log data. Needs at least four
/// distinct `(T, S)` cells spanning two values of each scale.
pub fn decay_fit(samples: &[(f64, f64, f64)]) -> Result<DecayFit> {
    let cells: BTreeSet<(u64, u64)> = samples.iter().map(|s| (s.0.to_bits(), s.1.to_bits())).collect();
    if cells.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} distinct cells, need ≥ 4", cells.len())));
    }
    if samples.iter().any(|s| !(s.0 > 0.0 && s.1 > 0.0 && s.2 > 0.0 && s.2.is_finite())) {
        return Err(Error::DegenerateFit("scales and amplitudes must be positive".into()));
    }
    let ones = vec![1.0; samples.len()];
    let lt: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ls: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.2.ln()).collect();
    let beta = least_squares(&[ones, lt.clone(), ls.clone()], &y)?;
    let fitted: Vec<f64> = lt.iter().zip(&ls).map(|(a, b)| beta[0] + beta[1] * a + beta[2] * b).collect();
    Ok(DecayFit { a_t: beta[1], a_s: beta[2], intercept: beta[0], r2: r_squared(&y, &fitted), samples: samples.to_vec() })
}

/// One-variable power law `y ≈ e^c x^p`; returns `(p, c, r²)`.
pub fn power_fit(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if samples.len() < 2 || samples.iter().any(|s| !(s.0 > 0.0 && s.1 > 0.0 && s.1.is_finite())) {
        return Err(Error::DegenerateFit("need ≥ 2 positive samples".into()));
    }
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let beta = least_squares(&[vec![1.0; samples.len()], lx.clone()], &y)?;
    let fitted: Vec<f64> = lx.iter().map(|a| beta[0] + beta[1] * a).collect();
    Ok((beta[1], beta[0], r_squared(&y, &fitted)))
}

/// Growth exponent `p` with `E(t) ≈ E(t₀)(t/t₀)^p`: least-squares slope of
/// `log E` against `log t`. The series must span two octaves.
pub fn growth_exponent(series: &[(f64, f64)]) -> Result<f64> {
    if series.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::InvalidArgument("energies must be positive".into()));
    }
    if series.iter().any(|s| !(s.0 > 0.0)) {
        return Err(Error::InvalidArgument("times must be positive".into()));
    }
    let (lo, hi) = series.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), s| (a.min(s.0), b.max(s.0)));
    if !(hi >= 4.0 * lo * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!("time range [{lo}, {hi}] spans less than two octaves")));
    }
    Ok(power_fit(series)?.0)
}

/// Pointwise decay bounds assumed in the bootstrap, in the form
/// `|·| ≤ Cε × weight(t, r)` with `⟨x⟩ = √(1 + x²)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bound {
    /// `|Zu| ≤ Cε⟨t−r⟩^δ`.
    VectorFieldU,
    /// `|∂u| ≤ Cε⟨t+r⟩^{−1/2}⟨t−r⟩^{−1/2+δ}`.
    GradientU,
    /// `|Z∂^j u| ≤ Cε`, `j = 1, 2`.
    VectorFieldDerivU,
    /// `|∂^{j+1}u| ≤ Cε⟨t+r⟩^{−1/2}⟨t−r⟩^{−1/2−δ}`, `j = 1, 2`.
    HigherDerivU,
    /// `|∂^j v| ≤ Cε⟨t+r⟩^{−1}`, `j = 1, 2, 3`.
    DerivV,
}

impl Bound {
    pub const ALL: [Bound; 5] =
        [Bound::VectorFieldU, Bound::GradientU, Bound::VectorFieldDerivU, Bound::HigherDerivU, Bound::DerivV];

    pub fn name(self) -> &'static str {
        match self {
            Bound::VectorFieldU => "Zu",
            Bound::GradientU => "du",
            Bound::VectorFieldDerivU => "Zd^j u",
            Bound::HigherDerivU => "d^(j+1) u",
            Bound::DerivV => "d^j v",
        }
    }

    /// Largest closure depth index (`∂_t` order) needed.
    pub const REQUIRED_CLOSURE: usize = 3;

    pub fn weight(self, t: f64, r: f64, delta: f64) -> f64 {
        let jp = (1.0 + (t + r).powi(2)).sqrt();
        let jm = (1.0 + (t - r).powi(2)).sqrt();
        match self {
            Bound::VectorFieldU => jm.powf(delta),
            Bound::GradientU => jp.powf(-0.5) * jm.powf(-0.5 + delta),
            Bound::VectorFieldDerivU => 1.0,
            Bound::HigherDerivU => jp.powf(-0.5) * jm.powf(-0.5 - delta),
            Bound::DerivV => 1.0 / jp,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub c: f64,
    pub delta: f64,
    pub which: Vec<Bound>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { c: 10.0, delta: 0.05, which: Bound::ALL.to_vec() }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidArgument(format!("need C > 0 and 0 < δ < 1/2 (C = {}, δ = {})", self.c, self.delta)));
        }
        Ok(())
    }
}

/// Worst point of one bound at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub bound: Bound,
    pub time: f64,
    pub x: [f64; 2],
    pub value: f64,
    pub threshold: f64,
}

impl Violation {
    pub fn ratio(&self) -> f64 {
        self.value / self.threshold
    }
}

/// All space-time derivatives `∂^α f`, `|α| ≤ order`, keyed by
/// `(a_t, a_1, a_2)`.
fn all_derivatives(grid: &Grid, levels: &[Field], order: usize) -> BTreeMap<[usize; 3], Field> {
    let mut out = BTreeMap::new();
    for k in 0..=order {
        for at in 0..=k {
            for a1 in 0..=(k - at) {
                let a2 = k - at - a1;
                out.insert([at, a1, a2], grid.d_mixed(&levels[at], a1, a2));
            }
        }
    }
    out
}

fn orders(k: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..=k).flat_map(move |at| (0..=(k - at)).map(move |a1| [at, a1, k - at - a1]))
}

fn bump(mut a: [usize; 3], i: usize) -> [usize; 3] {
    a[i] += 1;
    a
}

/// Pointwise magnitudes of each bound's quantity (max over components).
fn bound_magnitudes(grid: &Grid, c: &Closure, which: &[Bound]) -> Result<Vec<(Bound, Vec<f64>)>> {
    let depth = Bound::REQUIRED_CLOSURE + 1;
    if c.depth() < depth {
        return Err(Error::InsufficientDepth { requested: depth, available: c.depth() });
    }
    let t = c.time();
    let du = all_derivatives(grid, &c.u.levels()[..depth], 3);
    let dv = all_derivatives(grid, &c.v.levels()[..depth], 3);
    let (x1, x2) = (grid.x(Axis::X1).as_slice(), grid.x(Axis::X2).as_slice());
    let len = x1.len();
    // |Z g| for g = ∂^α u with first derivatives available in `du`
    let z_mag = |alpha: [usize; 3], k: usize| -> f64 {
        let (gt, g1, g2) = (
            du[&bump(alpha, 0)].as_slice()[k],
            du[&bump(alpha, 1)].as_slice()[k],
            du[&bump(alpha, 2)].as_slice()[k],
        );
        let rot = x2[k] * g1 - x1[k] * g2;
        let b1 = t * g1 + x1[k] * gt;
        let b2 = t * g2 + x2[k] * gt;
        rot.abs().max(b1.abs()).max(b2.abs())
    };
    let max_over = |map: &BTreeMap<[usize; 3], Field>, ks: &[usize], k: usize| -> f64 {
        ks.iter().flat_map(|&o| orders(o)).map(|a| map[&a].as_slice()[k].abs()).fold(0.0, f64::max)
    };
    let mut out = Vec::new();
    for &b in which {
        let vals: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|k| match b {
                Bound::VectorFieldU => z_mag([0, 0, 0], k),
                Bound::GradientU => max_over(&du, &[1], k),
                Bound::VectorFieldDerivU => {
                    orders(1).chain(orders(2)).map(|a| z_mag(a, k)).fold(0.0, f64::max)
                }
                Bound::HigherDerivU => max_over(&du, &[2, 3], k),
                Bound::DerivV => max_over(&dv, &[1, 2, 3], k),
            })
            .collect();
        out.push((b, vals));
    }
    Ok(out)
}

/// Per-bound scan: largest ratio `value/threshold` and the worst violating point.
fn scan(
    grid: &Grid,
    c: &Closure,
    eps: f64,
    cfg: &BootstrapConfig,
    mask: Option<&Mask>,
) -> Result<Vec<(Bound, f64, Option<Violation>)>> {
    cfg.validate()?;
    let t = c.time();
    let r = grid.r().as_slice();
    let (x1, x2) = (grid.x(Axis::X1).as_slice(), grid.x(Axis::X2).as_slice());
    let mut out = Vec::new();
    for (b, vals) in bound_magnitudes(grid, c, &cfg.which)? {
        let mut max_ratio = 0.0_f64;
        let mut worst: Option<(f64, usize, f64)> = None;
        for (k, &v) in vals.iter().enumerate() {
            if mask.is_some_and(|m| !m.bits()[k]) {
                continue;
            }
            let thr = cfg.c * eps * b.weight(t, r[k], cfg.delta);
            if v > thr {
                // zero thresholds give an infinite ratio, which always dominates
                let ratio = v / thr;
                max_ratio = max_ratio.max(ratio);
                if worst.map_or(true, |(wr, wk, _)| ratio > wr || (ratio == wr && v > vals[wk])) {
                    worst = Some((ratio, k, thr));
                }
            } else if thr > 0.0 {
                max_ratio = max_ratio.max(v / thr);
            }
        }
        let violation = worst.map(|(_, k, thr)| Violation {
            bound: b,
            time: t,
            x: [x1[k], x2[k]],
            value: vals[k],
            threshold: thr,
        });
        out.push((b, max_ratio, violation));
    }
    Ok(out)
}

/// Bounds violated at the closure's time (worst point of each), for data of
/// size `eps`. `mask` restricts the check (e.g. away from the periodic edge).
pub fn bootstrap_check(
    grid: &Grid,
    c: &Closure,
    eps: f64,
    cfg: &BootstrapConfig,
    mask: Option<&Mask>,
) -> Result<Vec<Violation>> {
    Ok(scan(grid, c, eps, cfg, mask)?.into_iter().filter_map(|x| x.2).collect())
}

/// Time-stream monitor keeping the first violation of each bound and the
/// largest observed ratio `value/threshold`.
#[derive(Clone, Debug)]
pub struct BootstrapMonitor {
    pub cfg: BootstrapConfig,
    pub eps: f64,
    first: BTreeMap<Bound, Violation>,
    max_ratio: BTreeMap<Bound, f64>,
}

impl BootstrapMonitor {
    pub fn new(cfg: BootstrapConfig, eps: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(BootstrapMonitor { cfg, eps, first: BTreeMap::new(), max_ratio: BTreeMap::new() })
    }

    pub fn observe(&mut self, grid: &Grid, c: &Closure, mask: Option<&Mask>) -> Result<()> {
        for (b, ratio, violation) in scan(grid, c, self.eps, &self.cfg, mask)? {
            let e = self.max_ratio.entry(b).or_insert(0.0);
            *e = e.max(ratio);
            if let Some(v) = violation {
                self.first.entry(b).or_insert(v);
            }
        }
        Ok(())
    }

    /// First violation of each bound, in bound order.
    pub fn violations(&self) -> Vec<Violation> {
        self.first.values().cloned().collect()
    }

    /// Largest `value / (Cε·weight)` seen per bound.
    pub fn max_ratios(&self) -> Vec<(Bound, f64)> {
        self.max_ratio.iter().map(|(b, r)| (*b, *r)).collect()
    }
}

/// Result of [`finite_speed_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpeedReport {
    /// `sup` over the cone `{2t + |x − x₀| < R}` of `|a − b|` (all four fields).
    pub max_difference: f64,
    /// `sup |a|, |b|` over the whole run (all fields, whole grid).
    pub reference: f64,
    /// Time horizon actually checked.
    pub horizon: f64,
}

impl FiniteSpeedReport {
    pub fn relative(&self) -> f64 {
        if self.reference > 0.0 {
            self.max_difference / self.reference
        } else {
            self.max_difference
        }
    }
}

/// Evolve two data sets in lockstep and measure their difference inside the
/// cone `{2t + |x − x₀| < R}` after every step. The horizon is capped at
/// `R/2`, where the cone closes.
pub fn finite_speed_check(
    grid: &Grid,
    data_a: &State,
    data_b: &State,
    x0: [f64; 2],
    big_r: f64,
    cfg: &EvolutionConfig,
) -> Result<FiniteSpeedReport> {
    cfg.validate()?;
    data_a.check_shape(grid.n())?;
    data_b.check_shape(grid.n())?;
    if !(big_r > 0.0) {
        return Err(Error::InvalidArgument(format!("R = {big_r}")));
    }
    let horizon = cfg.horizon.min(0.5 * big_r);
    let run_cfg = EvolutionConfig { horizon, ..cfg.clone() };
    let (nsteps, dt) = run_cfg.steps(grid);
    let dist = grid.field(|a, b| (a - x0[0]).hypot(b - x0[1]));
    let sys = NonlinearSystem { grid, spec: cfg.spec, truncation_t0: cfg.truncation_t0 };
    let mut sa = Stepper::new(&sys, cfg.scheme, cfg.kick_iterations);
    let mut sb = Stepper::new(&sys, cfg.scheme, cfg.kick_iterations);
    let pack = |s: &State| (vec![s.u.clone(), s.v.clone()], vec![s.ut.clone(), s.vt.clone()]);
    let (mut qa, mut pa) = pack(data_a);
    let (mut qb, mut pb) = pack(data_b);
    let mut max_diff = 0.0_f64;
    let mut reference = data_a.max_abs().max(data_b.max_abs());
    let measure = |t: f64, qa: &[Field], pa: &[Field], qb: &[Field], pb: &[Field]| -> f64 {
        let mut m = 0.0_f64;
        for (fa, fb) in qa.iter().chain(pa).zip(qb.iter().chain(pb)) {
            for ((a, b), d) in fa.as_slice().iter().zip(fb.as_slice()).zip(dist.as_slice()) {
                if 2.0 * t + d < big_r {
                    m = m.max((a - b).abs());
                }
            }
        }
        m
    };
    max_diff = max_diff.max(measure(data_a.time, &qa, &pa, &qb, &pb));
    for k in 1..=nsteps {
        let t = data_a.time + (k - 1) as f64 * dt;
        let (qa1, pa1) = sa.step(t, &qa, &pa, dt)?;
        let (qb1, pb1) = sb.step(t, &qb, &pb, dt)?;
        (qa, pa, qb, pb) = (qa1, pa1, qb1, pb1);
        let t1 = data_a.time + k as f64 * dt;
        max_diff = max_diff.max(measure(t1, &qa, &pa, &qb, &pb));
        for f in qa.iter().chain(&pa).chain(&qb).chain(&pb) {
            reference = reference.max(f.max_abs());
        }
    }
    Ok(FiniteSpeedReport { max_difference: max_diff, reference, horizon })
}

/// One row of a lifespan sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanRow {
    pub eps: f64,
    /// Last healthy time.
    pub t_star: f64,
    pub reason: ExitReason,
    /// `(t, E)` at every stride.
    pub energy: Vec<(f64, f64)>,
}

/// Run each amplitude to the horizon or to blow-up (independent jobs, run in
/// parallel; rows keep the input order).
pub fn lifespan_sweep(
    grid: &Grid,
    eps_list: &[f64],
    profile: &DataProfile,
    cfg: &EvolutionConfig,
) -> Result<Vec<LifespanRow>> {
    if eps_list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidArgument("amplitudes must be finite and ≥ 0".into()));
    }
    eps_list
        .par_iter()
        .map(|&eps| {
            let data = initial_state(grid, &profile.with_amplitude(eps))?;
            let mut energy = Vec::new();
            let mut obs = |g: &Grid, s: &State| -> Result<()> {
                energy.push((s.time, crate::energies::energy_e(g, s)));
                Ok(())
            };
            let traj = evolve(grid, &data, cfg, &mut [&mut obs])?;
            Ok(LifespanRow { eps, t_star: traj.t_final(), reason: traj.reason, energy })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let mut s = Vec::new();
        for &t in &[8.0, 16.0, 32.0] {
            for &sc in &[1.0, 2.0, 4.0, 8.0] {
                s.push((t, sc, 3.0 * f64::powf(t, -0.5) * f64::powf(sc, -0.5)));
            }
        }
        let f = decay_fit(&s).unwrap();
        assert!((f.a_t + 0.5).abs() < 1e-12 && (f.a_s + 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_fit_flat() {
        let s: Vec<_> = [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0)].iter().map(|&(a, b)| (a, b, 0.7)).collect();
        let f = decay_fit(&s).unwrap();
        assert!(f.a_t.abs() < 1e-12 && f.a_s.abs() < 1e-12 && f.r2 == 1.0);
    }

    #[test]
    fn degenerate_designs_rejected() {
        let s = vec![(1.0, 1.0, 1.0), (2.0, 1.0, 0.5), (4.0, 1.0, 0.2), (8.0, 1.0, 0.1)];
        assert!(matches!(decay_fit(&s), Err(Error::DegenerateFit(_))));
        assert!(decay_fit(&s[..3]).is_err());
    }

    #[test]
    fn growth_examples() {
        let c: Vec<_> = (0..6).map(|k| (2f64.powi(k), 5.0)).collect();
        assert!(growth_exponent(&c).unwrap().abs() < 1e-12);
        let p: Vec<_> = (0..6).map(|k| (2f64.powi(k), 2f64.powi(k).powf(0.3))).collect();
        assert!((growth_exponent(&p).unwrap() - 0.3).abs() < 1e-12);
        assert!(growth_exponent(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(growth_exponent(&[(1.0, 1.0), (8.0, 0.0)]).is_err());
    }

    #[test]
    fn bound_weights_at_origin() {
        assert_eq!(Bound::VectorFieldDerivU.weight(3.0, 1.0, 0.05), 1.0);
        assert!((Bound::DerivV.weight(0.0, 0.0, 0.05) - 1.0).abs() < 1e-15);
    }
}
