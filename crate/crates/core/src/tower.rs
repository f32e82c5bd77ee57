//! Towers of time derivatives and the closure that produces them.
//!
//! A [`TimeTower`] stores `∂_t^j f` for `j = 0..=depth` at one instant.
//! Only `f` and `∂_t f` are evolved; higher time derivatives come from the
//! equations themselves (differentiated in time as often as needed), which is
//! what [`time_deriv_closure`] computes.

use crate::error::{Error, Result};
use crate::evolution::cutoff_derivatives;
use crate::grid::{Axis, Field, Grid, State};
use crate::nullforms::NullFormSpec;
use crate::sources::coupled_sources_acc;

/// Default cap on the closure order. Depth 5 is needed for `E^[4]`
/// (a pure `∂_t^4` plus one more time derivative for the energy density).
pub const DEFAULT_K_MAX: usize = 6;

/// `∂_t^j f` for `j = 0..=depth` at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeTower {
    pub time: f64,
    levels: Vec<Field>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl TimeTower {
    pub fn new(time: f64, levels: Vec<Field>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("a tower needs at least one level".into()));
        }
        let n = levels[0].n();
        for l in &levels {
            if l.n() != n {
                return Err(Error::ShapeMismatch { expected: n, got: l.n() });
            }
        }
        Ok(TimeTower { time, levels })
    }

    /// Tower of a function and its first time derivative.
    pub fn from_pair(time: f64, f: Field, ft: Field) -> Self {
        TimeTower { time, levels: vec![f, ft] }
    }

    pub fn n(&self) -> usize {
        self.levels[0].n()
    }

    /// Highest available time-derivative order.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Field] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> Result<&Field> {
        self.levels.get(j).ok_or(Error::InsufficientDepth { requested: j, available: self.depth() })
    }

    /// The function itself.
    pub fn value(&self) -> &Field {
        &self.levels[0]
    }

    /// Keep only levels `0..=depth`.
    pub fn truncated(&self, depth: usize) -> Result<TimeTower> {
        if depth > self.depth() {
            return Err(Error::InsufficientDepth { requested: depth, available: self.depth() });
        }
        Ok(TimeTower { time: self.time, levels: self.levels[..=depth].to_vec() })
    }

    /// `∂_t f`: shifts the tower down by one level.
    pub fn dt(&self) -> Result<TimeTower> {
        if self.depth() == 0 {
            return Err(Error::InsufficientDepth { requested: 1, available: 0 });
        }
        Ok(TimeTower { time: self.time, levels: self.levels[1..].to_vec() })
    }

    /// Spatial derivative applied levelwise.
    pub fn dx(&self, grid: &Grid, axis: Axis) -> TimeTower {
        self.map_levels(|f| grid.d1(f, axis))
    }

    /// `∂_1^{a1} ∂_2^{a2}` applied levelwise.
    pub fn d_mixed(&self, grid: &Grid, a1: usize, a2: usize) -> TimeTower {
        if a1 == 0 && a2 == 0 {
            return self.clone();
        }
        self.map_levels(|f| grid.d_mixed(f, a1, a2))
    }

    pub fn map_levels<F: Fn(&Field) -> Field>(&self, f: F) -> TimeTower {
        TimeTower { time: self.time, levels: self.levels.iter().map(f).collect() }
    }

    /// Multiplication by a time-independent weight.
    pub fn mul_field(&self, w: &Field) -> TimeTower {
        self.map_levels(|f| f.mul(w))
    }

    /// Multiplication by `t`: `(t f)^{(j)} = t f_j + j f_{j-1}`.
    pub fn mul_t(&self) -> TimeTower {
        let mut levels = Vec::with_capacity(self.levels.len());
        for (j, f) in self.levels.iter().enumerate() {
            let mut g = f.scale(self.time);
            if j > 0 {
                g.axpy(j as f64, &self.levels[j - 1]);
            }
            levels.push(g);
        }
        TimeTower { time: self.time, levels }
    }

    /// Levelwise sum of two towers, truncated to the smaller depth.
    pub fn add(&self, o: &TimeTower) -> TimeTower {
        let d = self.depth().min(o.depth());
        TimeTower {
            time: self.time,
            levels: (0..=d).map(|j| self.levels[j].add(&o.levels[j])).collect(),
        }
    }

    pub fn sub(&self, o: &TimeTower) -> TimeTower {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> TimeTower {
        self.map_levels(|f| f.scale(c))
    }
}

/// Time-derivative towers of both unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct Closure {
    pub u: TimeTower,
    pub v: TimeTower,
}

impl Closure {
    /// Depth-1 towers read straight from the state (no equation used).
    pub fn from_state(s: &State) -> Self {
        Closure {
            u: TimeTower::from_pair(s.time, s.u.clone(), s.ut.clone()),
            v: TimeTower::from_pair(s.time, s.v.clone(), s.vt.clone()),
        }
    }

    pub fn depth(&self) -> usize {
        self.u.depth().min(self.v.depth())
    }

    pub fn time(&self) -> f64 {
        self.u.time
    }

    /// Drop to a common depth.
    pub fn truncated(&self, depth: usize) -> Result<Closure> {
        Ok(Closure { u: self.u.truncated(depth)?, v: self.v.truncated(depth)? })
    }
}

/// Spatial derivatives of one tower level that the source terms need.
struct LevelCache {
    /// `∂_1 f_q, ∂_2 f_q`
    g: [Field; 2],
    /// `∂_1 ∂_d f_q, ∂_2 ∂_d f_q`
    gd: [Field; 2],
}

impl LevelCache {
    fn new(grid: &Grid, f: &Field, d: Axis) -> Self {
        let g1 = grid.d1(f, Axis::X1);
        let g2 = grid.d1(f, Axis::X2);
        let gd = match d {
            Axis::X1 => [grid.d2(f, Axis::X1), grid.d1(&g1, Axis::X2)],
            Axis::X2 => [grid.d1(&g2, Axis::X1), grid.d2(f, Axis::X2)],
        };
        LevelCache { g: [g1, g2], gd }
    }

    fn gd_slot(&self, d: Axis) -> &Field {
        &self.g[d.index()]
    }
}

/// `∂_t^j u` and `∂_t^j v` for `j ≤ k` (default cap [`DEFAULT_K_MAX`]).
pub fn time_deriv_closure(grid: &Grid, s: &State, spec: &NullFormSpec, k: usize) -> Result<Closure> {
    time_deriv_closure_with(grid, s, spec, k, DEFAULT_K_MAX, None)
}

/// Closure with an explicit order cap and optional truncation time `T0`
/// (the nonlinearity is then multiplied by the cutoff `χ_{T0}(t)`).
pub fn time_deriv_closure_with(
    grid: &Grid,
    s: &State,
    spec: &NullFormSpec,
    k: usize,
    k_max: usize,
    truncation: Option<f64>,
) -> Result<Closure> {
    if k < 2 || k > k_max {
        return Err(Error::ClosureOrder { k, k_max });
    }
    s.check_shape(grid.n())?;
    if !s.is_finite() {
        return Err(Error::NonFinite("closure input state"));
    }
    build_closure(grid, s, spec, k, truncation)
}

pub(crate) fn build_closure(
    grid: &Grid,
    s: &State,
    spec: &NullFormSpec,
    k: usize,
    truncation: Option<f64>,
) -> Result<Closure> {
    let n = grid.n();
    let d = spec.deriv_axis;
    let mut u: Vec<Field> = vec![s.u.clone(), s.ut.clone()];
    let mut v: Vec<Field> = vec![s.v.clone(), s.vt.clone()];
    let nonlinear = !spec.is_zero();
    let chi: Vec<f64> = match truncation {
        Some(t0) => cutoff_derivatives(s.time, t0, k.saturating_sub(2)),
        None => {
            let mut c = vec![0.0; k.saturating_sub(1).max(1)];
            c[0] = 1.0;
            c
        }
    };
    let mut cu: Vec<LevelCache> = Vec::new();
    let mut cv: Vec<LevelCache> = Vec::new();
    for j in 2..=k {
        let m = j - 2;
        // Caches for levels ≤ j-1 are needed.
        if nonlinear {
            while cu.len() < j {
                let q = cu.len();
                cu.push(LevelCache::new(grid, &u[q], d));
                cv.push(LevelCache::new(grid, &v[q], d));
            }
        }
        let mut uj = grid.laplacian(&u[m]);
        let mut vj = grid.laplacian(&v[m]);
        vj.axpy(-1.0, &v[m]);
        if nonlinear {
            let mut fu = Field::zeros(n);
            let mut fv = Field::zeros(n);
            // ∂_t^m (χ F) = Σ_l C(m,l) χ^{(l)} F^{(m-l)},
            // F^{(p)} = Σ_i C(p,i) S(w^{(i)}, ∂_d Φ^{(p-i)}).
            for l in 0..=m {
                let cl = binomial(m, l) * chi.get(l).copied().unwrap_or(0.0);
                if cl == 0.0 {
                    continue;
                }
                let p = m - l;
                for i in 0..=p {
                    let q = p - i;
                    let c = cl * binomial(p, i);
                    let gu = [&u[i + 1], &cu[i].g[0], &cu[i].g[1]];
                    let gv = [&v[i + 1], &cv[i].g[0], &cv[i].g[1]];
                    let pu = [cu[q + 1].gd_slot(d), &cu[q].gd[0], &cu[q].gd[1]];
                    let pv = [cv[q + 1].gd_slot(d), &cv[q].gd[0], &cv[q].gd[1]];
                    coupled_sources_acc(spec, gu, gv, pu, pv, c, &mut fu, &mut fv)?;
                }
            }
            uj.axpy(1.0, &fu);
            vj.axpy(1.0, &fv);
        }
        if !(uj.is_finite() && vj.is_finite()) {
            return Err(Error::NonFinite("time-derivative closure"));
        }
        u.push(uj);
        v.push(vj);
    }
    Ok(Closure { u: TimeTower { time: s.time, levels: u }, v: TimeTower { time: s.time, levels: v } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> Grid {
        Grid::new(GridSpec::new(32, 4.0, 0.4, 4).unwrap()).unwrap()
    }

    #[test]
    fn kg_mass_term_on_constant() {
        let g = grid();
        let mut s = State::zeros(32, 0.0);
        s.v = Field::constant(32, 3.0);
        let c = time_deriv_closure(&g, &s, &NullFormSpec::zero(), 2).unwrap();
        assert!(c.v.level(2).unwrap().as_slice().iter().all(|&x| (x + 3.0).abs() < 1e-12));
    }

    #[test]
    fn harmonic_u_has_zero_acceleration() {
        let g = grid();
        let mut s = State::zeros(32, 0.0);
        s.u = g.x(Axis::X1).clone();
        let c = time_deriv_closure(&g, &s, &NullFormSpec::zero(), 2).unwrap();
        let a = c.u.level(2).unwrap();
        for j in 0..32 {
            for i in 2..30 {
                assert!(a.get(i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn order_bounds_enforced() {
        let g = grid();
        let s = State::zeros(32, 0.0);
        assert!(time_deriv_closure(&g, &s, &NullFormSpec::zero(), 1).is_err());
        assert!(time_deriv_closure(&g, &s, &NullFormSpec::zero(), DEFAULT_K_MAX + 1).is_err());
        assert!(time_deriv_closure_with(&g, &s, &NullFormSpec::zero(), 4, 4, None).is_ok());
        assert!(time_deriv_closure_with(&g, &s, &NullFormSpec::zero(), 5, 4, None).is_err());
    }

    #[test]
    fn mul_t_leibniz() {
        // f = t^2 at t = 3: levels (9, 6, 2, 0); t f = t^3: (27, 27, 18, 6)
        let n = 16;
        let tw = TimeTower::new(
            3.0,
            vec![Field::constant(n, 9.0), Field::constant(n, 6.0), Field::constant(n, 2.0), Field::zeros(n)],
        )
        .unwrap();
        let m = tw.mul_t();
        let vals: Vec<f64> = m.levels().iter().map(|f| f.get(0, 0)).collect();
        assert_eq!(vals, vec![27.0, 27.0, 18.0, 6.0]);
        assert!(tw.truncated(0).unwrap().dt().is_err());
    }
}
