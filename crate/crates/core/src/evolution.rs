//! Right-hand sides, explicit time stepping, and the Picard local solver.
//!
//! The system is written in second-order form `q'' = a(t, q, q')` with
//! `q = (u, v)`:
//!
//! ```text
//! u_tt = Δu     + χ(t) [N1(v, ∂_d v) + N2(u, ∂_d v)]
//! v_tt = Δv − v + χ(t) [N1(v, ∂_d u) + N2(u, ∂_d u)]
//! ```
//!
//! `Leapfrog` is velocity Verlet. Because the nonlinearity contains `q'`,
//! the closing half kick is implicit; it is resolved by a fixed number of
//! fixed-point sweeps (exact after one sweep when the force does not depend
//! on velocities, so linear runs are plain Verlet and need no start-up step).

use crate::energies::{control_b, energy_e};
use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Grid, State};
use crate::nullforms::NullFormSpec;
use crate::sources::coupled_sources_acc;
use crate::tower::build_closure;
use serde::{Deserialize, Serialize};

/// Time integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    Leapfrog,
    Rk4,
}

/// Evolution parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub spec: NullFormSpec,
    pub scheme: Scheme,
    pub horizon: f64,
    /// Activates the cutoff `χ_{T0}` when present.
    pub truncation_t0: Option<f64>,
    /// Observers and snapshots fire every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    /// Keep the stride snapshots in the returned [`Trajectory`].
    pub store_snapshots: bool,
    /// Fixed-point sweeps for the implicit half kick of the leapfrog scheme.
    pub kick_iterations: usize,
    /// Abort when any field exceeds this multiple of its initial maximum.
    pub blowup_factor: f64,
    /// Abort when `∫ B dt` exceeds this value (`B` sampled at the stride).
    pub b_integral_cap: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            spec: NullFormSpec::zero(),
            scheme: Scheme::Leapfrog,
            horizon: 1.0,
            truncation_t0: None,
            snapshot_stride: 10,
            store_snapshots: false,
            kick_iterations: 2,
            blowup_factor: 1e6,
            b_integral_cap: f64::INFINITY,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon = {}", self.horizon)));
        }
        if let Some(t0) = self.truncation_t0 {
            if !(t0.is_finite() && t0 > 0.0) {
                return Err(Error::InvalidArgument(format!("truncation T0 = {t0}")));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot_stride must be ≥ 1".into()));
        }
        if self.kick_iterations == 0 {
            return Err(Error::InvalidArgument("kick_iterations must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the uniform step actually used (`≤ grid dt`,
    /// landing exactly on the horizon).
    pub fn steps(&self, grid: &Grid) -> (usize, f64) {
        if self.horizon == 0.0 {
            return (0, grid.dt());
        }
        let n = (self.horizon / grid.dt() - 1e-9).ceil().max(1.0) as usize;
        (n, self.horizon / n as f64)
    }
}

/// Quintic smoothstep cutoff: 1 on `[0, T0]`, 0 beyond `2 T0`, `C²` bridge.
pub fn cutoff(t: f64, t0: f64) -> f64 {
    cutoff_derivatives(t, t0, 0)[0]
}

/// `[χ, χ', …, χ^{(order)}]` at `t`.
pub fn cutoff_derivatives(t: f64, t0: f64, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    let x = (t - t0) / t0;
    if x <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x >= 1.0 {
        return out;
    }
    // s(x) = 10x³ − 15x⁴ + 6x⁵ and its derivatives
    let s = [
        x * x * x * (10.0 + x * (-15.0 + 6.0 * x)),
        x * x * (30.0 + x * (-60.0 + 30.0 * x)),
        x * (60.0 + x * (-180.0 + 120.0 * x)),
        60.0 + x * (-360.0 + 360.0 * x),
        -360.0 + 720.0 * x,
        720.0,
    ];
    out[0] = 1.0 - s[0];
    for k in 1..=order {
        out[k] = if k < s.len() { -s[k] / t0.powi(k as i32) } else { 0.0 };
    }
    out
}

/// Gradients needed for the quadratic sources: `(f_t, ∂_1 f, ∂_2 f)` and the
/// gradient of `∂_d f`, i.e. `(∂_d f_t, ∂_1 ∂_d f, ∂_2 ∂_d f)`.
fn slot_gradients(grid: &Grid, f: &Field, ft: &Field, d: Axis) -> ([Field; 3], [Field; 3]) {
    let f1 = grid.d1(f, Axis::X1);
    let f2 = grid.d1(f, Axis::X2);
    let dd = match d {
        Axis::X1 => [grid.d2(f, Axis::X1), grid.d1(&f1, Axis::X2)],
        Axis::X2 => [grid.d1(&f2, Axis::X1), grid.d2(f, Axis::X2)],
    };
    let [d1, d2] = dd;
    let pt = grid.d1(ft, d);
    ([ft.clone(), f1, f2], [pt, d1, d2])
}

fn refs(a: &[Field; 3]) -> [&Field; 3] {
    [&a[0], &a[1], &a[2]]
}

/// `(f_u, f_v) = (N1(v,∂v) + N2(u,∂v), N1(v,∂u) + N2(u,∂u))`.
pub fn rhs(grid: &Grid, s: &State, spec: &NullFormSpec) -> Result<(Field, Field)> {
    s.check_shape(grid.n())?;
    let n = grid.n();
    let mut fu = Field::zeros(n);
    let mut fv = Field::zeros(n);
    if spec.is_zero() {
        return Ok((fu, fv));
    }
    let (gu, pu) = slot_gradients(grid, &s.u, &s.ut, spec.deriv_axis);
    let (gv, pv) = slot_gradients(grid, &s.v, &s.vt, spec.deriv_axis);
    coupled_sources_acc(spec, refs(&gu), refs(&gv), refs(&pu), refs(&pv), 1.0, &mut fu, &mut fv)?;
    if !(fu.is_finite() && fv.is_finite()) {
        return Err(Error::NonFinite("rhs"));
    }
    Ok((fu, fv))
}

/// [`rhs`] multiplied by `χ_{T0}(t)`.
pub fn rhs_truncated(grid: &Grid, s: &State, spec: &NullFormSpec, t0: f64) -> Result<(Field, Field)> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation T0 = {t0}")));
    }
    let chi = cutoff(s.time, t0);
    if chi == 0.0 {
        let n = grid.n();
        return Ok((Field::zeros(n), Field::zeros(n)));
    }
    let (mut fu, mut fv) = rhs(grid, s, spec)?;
    if chi != 1.0 {
        fu.scale_in_place(chi);
        fv.scale_in_place(chi);
    }
    Ok((fu, fv))
}

/// Linearized sources around `background`:
///
/// ```text
/// F_U = N1(v,∂V) + N1(V,∂v) + N2(u,∂V) + N2(U,∂v)
/// F_V = N1(v,∂U) + N1(V,∂u) + N2(u,∂U) + N2(U,∂u)
/// ```
pub fn linearized_rhs(grid: &Grid, background: &State, uv: &State, spec: &NullFormSpec) -> Result<(Field, Field)> {
    background.check_shape(grid.n())?;
    uv.check_shape(grid.n())?;
    let n = grid.n();
    let mut fu = Field::zeros(n);
    let mut fv = Field::zeros(n);
    if spec.is_zero() {
        return Ok((fu, fv));
    }
    let d = spec.deriv_axis;
    let (gu, pu) = slot_gradients(grid, &background.u, &background.ut, d);
    let (gv, pv) = slot_gradients(grid, &background.v, &background.vt, d);
    let (gbu, pbu) = slot_gradients(grid, &uv.u, &uv.ut, d);
    let (gbv, pbv) = slot_gradients(grid, &uv.v, &uv.vt, d);
    coupled_sources_acc(spec, refs(&gu), refs(&gv), refs(&pbu), refs(&pbv), 1.0, &mut fu, &mut fv)?;
    coupled_sources_acc(spec, refs(&gbu), refs(&gbv), refs(&pu), refs(&pv), 1.0, &mut fu, &mut fv)?;
    if !(fu.is_finite() && fv.is_finite()) {
        return Err(Error::NonFinite("linearized rhs"));
    }
    Ok((fu, fv))
}

/// A second-order system `q'' = a(t, q, q')` on grid fields.
pub trait SecondOrderSystem {
    fn accel(&self, t: f64, q: &[Field], p: &[Field]) -> Result<Vec<Field>>;
    /// Whether `a` depends on `q'` (controls the implicit kick).
    fn velocity_dependent(&self) -> bool;
}

/// The full (optionally truncated) quasilinear system; `q = [u, v]`.
pub struct NonlinearSystem<'a> {
    pub grid: &'a Grid,
    pub spec: NullFormSpec,
    pub truncation_t0: Option<f64>,
}

impl SecondOrderSystem for NonlinearSystem<'_> {
    fn accel(&self, t: f64, q: &[Field], p: &[Field]) -> Result<Vec<Field>> {
        let s = State { u: q[0].clone(), ut: p[0].clone(), v: q[1].clone(), vt: p[1].clone(), time: t };
        let (fu, fv) = match self.truncation_t0 {
            Some(t0) => rhs_truncated(self.grid, &s, &self.spec, t0)?,
            None => rhs(self.grid, &s, &self.spec)?,
        };
        Ok(wave_kg_accel(self.grid, &q[0], &q[1], fu, fv))
    }

    fn velocity_dependent(&self) -> bool {
        !self.spec.is_zero()
    }
}

fn wave_kg_accel(grid: &Grid, u: &Field, v: &Field, fu: Field, fv: Field) -> Vec<Field> {
    let mut au = grid.laplacian(u);
    au.axpy(1.0, &fu);
    let mut av = grid.laplacian(v);
    av.axpy(-1.0, v);
    av.axpy(1.0, &fv);
    vec![au, av]
}

/// Background plus linearized perturbation; `q = [u, v, U, V]`.
/// Optional extra sources `(F, G)` are added to the perturbation equations.
pub struct LinearizedSystem<'a> {
    pub grid: &'a Grid,
    pub spec: NullFormSpec,
    #[allow(clippy::type_complexity)]
    pub sources: Option<Box<dyn Fn(f64) -> (Field, Field) + 'a>>,
}

impl SecondOrderSystem for LinearizedSystem<'_> {
    fn accel(&self, t: f64, q: &[Field], p: &[Field]) -> Result<Vec<Field>> {
        let bg = State { u: q[0].clone(), ut: p[0].clone(), v: q[1].clone(), vt: p[1].clone(), time: t };
        let uv = State { u: q[2].clone(), ut: p[2].clone(), v: q[3].clone(), vt: p[3].clone(), time: t };
        let (fu, fv) = rhs(self.grid, &bg, &self.spec)?;
        let (mut gu, mut gv) = linearized_rhs(self.grid, &bg, &uv, &self.spec)?;
        if let Some(src) = &self.sources {
            let (f, g) = src(t);
            gu.axpy(1.0, &f);
            gv.axpy(1.0, &g);
        }
        let mut out = wave_kg_accel(self.grid, &q[0], &q[1], fu, fv);
        out.extend(wave_kg_accel(self.grid, &q[2], &q[3], gu, gv));
        Ok(out)
    }

    fn velocity_dependent(&self) -> bool {
        !self.spec.is_zero()
    }
}

/// Stepper holding the integrator state for one system.
pub struct Stepper<'s, S: SecondOrderSystem + ?Sized> {
    system: &'s S,
    scheme: Scheme,
    kick_iterations: usize,
    cached: Option<(f64, Vec<Field>)>,
}

fn axpy_all(y: &[Field], c: f64, x: &[Field]) -> Vec<Field> {
    y.iter()
        .zip(x)
        .map(|(a, b)| {
            let mut o = a.clone();
            o.axpy(c, b);
            o
        })
        .collect()
}

impl<'s, S: SecondOrderSystem + ?Sized> Stepper<'s, S> {
    pub fn new(system: &'s S, scheme: Scheme, kick_iterations: usize) -> Self {
        Stepper { system, scheme, kick_iterations: kick_iterations.max(1), cached: None }
    }

    /// Advance `(q, p)` from `t` to `t + dt`.
    pub fn step(&mut self, t: f64, q: &[Field], p: &[Field], dt: f64) -> Result<(Vec<Field>, Vec<Field>)> {
        let out = match self.scheme {
            Scheme::Leapfrog => self.verlet(t, q, p, dt),
            Scheme::Rk4 => self.rk4(t, q, p, dt),
        }?;
        if out.0.iter().chain(&out.1).any(|f| !f.is_finite()) {
            return Err(Error::NonFinite("time step"));
        }
        Ok(out)
    }

    fn verlet(&mut self, t: f64, q: &[Field], p: &[Field], dt: f64) -> Result<(Vec<Field>, Vec<Field>)> {
        let a0 = match self.cached.take() {
            Some((tc, a)) if tc == t => a,
            _ => self.system.accel(t, q, p)?,
        };
        let p_half = axpy_all(p, 0.5 * dt, &a0);
        let q1 = axpy_all(q, dt, &p_half);
        let t1 = t + dt;
        let mut a1 = self.system.accel(t1, &q1, &p_half)?;
        let mut p1 = axpy_all(&p_half, 0.5 * dt, &a1);
        if self.system.velocity_dependent() {
            for _ in 1..self.kick_iterations {
                a1 = self.system.accel(t1, &q1, &p1)?;
                p1 = axpy_all(&p_half, 0.5 * dt, &a1);
            }
        } else {
            self.cached = Some((t1, a1));
        }
        Ok((q1, p1))
    }

    fn rk4(&mut self, t: f64, q: &[Field], p: &[Field], dt: f64) -> Result<(Vec<Field>, Vec<Field>)> {
        let sys = self.system;
        let k1q = p.to_vec();
        let k1p = sys.accel(t, q, p)?;
        let q2 = axpy_all(q, 0.5 * dt, &k1q);
        let p2 = axpy_all(p, 0.5 * dt, &k1p);
        let k2p = sys.accel(t + 0.5 * dt, &q2, &p2)?;
        let k2q = p2;
        let q3 = axpy_all(q, 0.5 * dt, &k2q);
        let p3 = axpy_all(p, 0.5 * dt, &k2p);
        let k3p = sys.accel(t + 0.5 * dt, &q3, &p3)?;
        let k3q = p3;
        let q4 = axpy_all(q, dt, &k3q);
        let p4 = axpy_all(p, dt, &k3p);
        let k4p = sys.accel(t + dt, &q4, &p4)?;
        let k4q = p4;
        let comb = |y: &[Field], k1: &[Field], k2: &[Field], k3: &[Field], k4: &[Field]| {
            let mut o = axpy_all(y, dt / 6.0, k1);
            o = axpy_all(&o, dt / 3.0, k2);
            o = axpy_all(&o, dt / 3.0, k3);
            axpy_all(&o, dt / 6.0, k4)
        };
        Ok((comb(q, &k1q, &k2q, &k3q, &k4q), comb(p, &k1p, &k2p, &k3p, &k4p)))
    }
}

/// One step of the configured scheme for the nonlinear system (uses the
/// grid's `dt`).
pub fn step(grid: &Grid, s: &State, cfg: &EvolutionConfig) -> Result<State> {
    let sys = NonlinearSystem { grid, spec: cfg.spec, truncation_t0: cfg.truncation_t0 };
    let mut st = Stepper::new(&sys, cfg.scheme, cfg.kick_iterations);
    let (q, p) = st.step(s.time, &[s.u.clone(), s.v.clone()], &[s.ut.clone(), s.vt.clone()], grid.dt())?;
    let [u, v]: [Field; 2] = q.try_into().expect("two fields");
    let [ut, vt]: [Field; 2] = p.try_into().expect("two fields");
    Ok(State { u, ut, v, vt, time: s.time + grid.dt() })
}

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitReason {
    Horizon,
    FieldBlowup,
    BIntegralCap,
}

impl ExitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitReason::Horizon => "horizon",
            ExitReason::FieldBlowup => "field-blowup",
            ExitReason::BIntegralCap => "B-integral-cap",
        }
    }
}

/// Continuation monitor fed with per-stride samples.
#[derive(Clone, Debug)]
pub struct BlowupDetector {
    pub factor: f64,
    pub b_cap: f64,
    initial_max: Option<f64>,
    b_integral: f64,
    last: Option<(f64, f64)>,
}

impl BlowupDetector {
    pub fn new(factor: f64, b_cap: f64) -> Self {
        BlowupDetector { factor, b_cap, initial_max: None, b_integral: 0.0, last: None }
    }

    pub fn b_integral(&self) -> f64 {
        self.b_integral
    }

    /// Feed the sample `(t, max |fields|, B)`; returns the reason if the run
    /// must stop. The first sample fixes the reference maximum.
    pub fn observe(&mut self, t: f64, max_abs: f64, b: f64) -> Option<ExitReason> {
        if !max_abs.is_finite() || !b.is_finite() {
            return Some(ExitReason::FieldBlowup);
        }
        match self.initial_max {
            None => self.initial_max = Some(max_abs),
            Some(m0) => {
                if m0 > 0.0 && max_abs > self.factor * m0 {
                    return Some(ExitReason::FieldBlowup);
                }
            }
        }
        if let Some((t_prev, b_prev)) = self.last {
            self.b_integral += 0.5 * (t - t_prev) * (b + b_prev);
        }
        self.last = Some((t, b));
        if self.b_integral > self.b_cap {
            return Some(ExitReason::BIntegralCap);
        }
        None
    }
}

/// Callback invoked at every stride (including the initial state).
pub trait Observer {
    fn observe(&mut self, grid: &Grid, state: &State) -> Result<()>;
}

impl<F: FnMut(&Grid, &State) -> Result<()>> Observer for F {
    fn observe(&mut self, grid: &Grid, state: &State) -> Result<()> {
        self(grid, state)
    }
}

/// Result of [`evolve`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Stride snapshots (only when requested; always includes the initial state).
    pub snapshots: Vec<State>,
    pub dt: f64,
    /// Last healthy state.
    pub last: State,
    pub reason: ExitReason,
    /// `∫ B dt` over the run (0 when the cap is infinite).
    pub b_integral: f64,
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        self.last.time
    }
}

/// Evolve `data` to the horizon, calling `observers` every stride.
pub fn evolve(grid: &Grid, data: &State, cfg: &EvolutionConfig, observers: &mut [&mut dyn Observer]) -> Result<Trajectory> {
    cfg.validate()?;
    data.check_shape(grid.n())?;
    if !data.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    let (nsteps, dt) = cfg.steps(grid);
    let sys = NonlinearSystem { grid, spec: cfg.spec, truncation_t0: cfg.truncation_t0 };
    let mut stepper = Stepper::new(&sys, cfg.scheme, cfg.kick_iterations);
    let mut detector = BlowupDetector::new(cfg.blowup_factor, cfg.b_integral_cap);
    let track_b = cfg.b_integral_cap.is_finite();
    let sample_b = |s: &State| -> Result<f64> {
        if !track_b {
            return Ok(0.0);
        }
        let c = build_closure(grid, s, &cfg.spec, 2, cfg.truncation_t0)?;
        control_b(grid, &c)
    };
    let mut cur = data.clone();
    let mut snapshots = Vec::new();
    let emit = |s: &State, snaps: &mut Vec<State>, obs: &mut [&mut dyn Observer]| -> Result<()> {
        for o in obs.iter_mut() {
            o.observe(grid, s)?;
        }
        if cfg.store_snapshots {
            snaps.push(s.clone());
        }
        Ok(())
    };
    detector.observe(cur.time, cur.max_abs(), sample_b(&cur)?);
    emit(&cur, &mut snapshots, observers)?;
    let mut q = vec![cur.u.clone(), cur.v.clone()];
    let mut p = vec![cur.ut.clone(), cur.vt.clone()];
    let t_start = data.time;
    let mut reason = ExitReason::Horizon;
    for k in 1..=nsteps {
        let t = t_start + (k - 1) as f64 * dt;
        let (q1, p1) = match stepper.step(t, &q, &p, dt) {
            Ok(x) => x,
            Err(Error::NonFinite(_)) => {
                reason = ExitReason::FieldBlowup;
                break;
            }
            Err(e) => return Err(e),
        };
        let next = State {
            u: q1[0].clone(),
            ut: p1[0].clone(),
            v: q1[1].clone(),
            vt: p1[1].clone(),
            time: t_start + k as f64 * dt,
        };
        let at_stride = k % cfg.snapshot_stride == 0 || k == nsteps;
        if at_stride {
            let b = match sample_b(&next) {
                Ok(b) => b,
                Err(Error::NonFinite(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            if let Some(r) = detector.observe(next.time, next.max_abs(), b) {
                reason = r;
                break;
            }
        } else if next.max_abs() > cfg.blowup_factor * data.max_abs() && data.max_abs() > 0.0 {
            reason = ExitReason::FieldBlowup;
            break;
        }
        q = q1;
        p = p1;
        cur = next;
        if at_stride {
            emit(&cur, &mut snapshots, observers)?;
        }
    }
    Ok(Trajectory { snapshots, dt, last: cur, reason, b_integral: detector.b_integral() })
}

/// Every-step states of a run (used by the Picard solver and cross-checks).
pub fn evolve_all_steps(grid: &Grid, data: &State, cfg: &EvolutionConfig) -> Result<Vec<State>> {
    let mut cfg = cfg.clone();
    cfg.snapshot_stride = 1;
    cfg.store_snapshots = true;
    let traj = evolve(grid, data, &cfg, &mut [])?;
    if traj.reason != ExitReason::Horizon {
        return Err(Error::NonFinite("evolution ended before the horizon"));
    }
    Ok(traj.snapshots)
}

/// Evolve background and linearized perturbation together; `observe` gets
/// `(background, perturbation)` every stride.
#[allow(clippy::type_complexity)]
pub fn evolve_linearized<'a>(
    grid: &'a Grid,
    background: &State,
    uv: &State,
    cfg: &EvolutionConfig,
    sources: Option<Box<dyn Fn(f64) -> (Field, Field) + 'a>>,
    observe: &mut dyn FnMut(&State, &State) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let (nsteps, dt) = cfg.steps(grid);
    let sys = LinearizedSystem { grid, spec: cfg.spec, sources };
    let mut stepper = Stepper::new(&sys, cfg.scheme, cfg.kick_iterations);
    let mut q = vec![background.u.clone(), background.v.clone(), uv.u.clone(), uv.v.clone()];
    let mut p = vec![background.ut.clone(), background.vt.clone(), uv.ut.clone(), uv.vt.clone()];
    let split = |q: &[Field], p: &[Field], t: f64| {
        (
            State { u: q[0].clone(), ut: p[0].clone(), v: q[1].clone(), vt: p[1].clone(), time: t },
            State { u: q[2].clone(), ut: p[2].clone(), v: q[3].clone(), vt: p[3].clone(), time: t },
        )
    };
    let t0 = background.time;
    let (b, w) = split(&q, &p, t0);
    observe(&b, &w)?;
    for k in 1..=nsteps {
        let t = t0 + (k - 1) as f64 * dt;
        let (q1, p1) = stepper.step(t, &q, &p, dt)?;
        q = q1;
        p = p1;
        if k % cfg.snapshot_stride == 0 || k == nsteps {
            let (b, w) = split(&q, &p, t0 + k as f64 * dt);
            observe(&b, &w)?;
        }
    }
    Ok(())
}

/// Picard iteration system: first null-form slots frozen at iterate `m − 1`,
/// second slots carried by the unknown iterate `m`.
struct PicardSystem<'a> {
    grid: &'a Grid,
    spec: NullFormSpec,
    prev: Option<&'a [State]>,
    t0: f64,
    dt: f64,
}

impl PicardSystem<'_> {
    /// Previous iterate at time `t`, linearly interpolated between steps.
    fn frozen_at(&self, t: f64) -> Option<State> {
        let prev = self.prev?;
        let x = ((t - self.t0) / self.dt).max(0.0);
        let k = (x.floor() as usize).min(prev.len() - 1);
        let th = x - k as f64;
        if k + 1 >= prev.len() || th <= 1e-12 {
            return Some(prev[k].clone());
        }
        let (a, b) = (&prev[k], &prev[k + 1]);
        let lerp = |fa: &Field, fb: &Field| fa.zip_map(fb, |p, q| (1.0 - th) * p + th * q);
        Some(State { u: lerp(&a.u, &b.u), ut: lerp(&a.ut, &b.ut), v: lerp(&a.v, &b.v), vt: lerp(&a.vt, &b.vt), time: t })
    }
}

impl SecondOrderSystem for PicardSystem<'_> {
    fn accel(&self, t: f64, q: &[Field], p: &[Field]) -> Result<Vec<Field>> {
        let n = self.grid.n();
        let mut fu = Field::zeros(n);
        let mut fv = Field::zeros(n);
        if let Some(w) = self.frozen_at(t) {
            let d = self.spec.deriv_axis;
            let gu = [w.ut.clone(), self.grid.d1(&w.u, Axis::X1), self.grid.d1(&w.u, Axis::X2)];
            let gv = [w.vt.clone(), self.grid.d1(&w.v, Axis::X1), self.grid.d1(&w.v, Axis::X2)];
            let (_, pu) = slot_gradients(self.grid, &q[0], &p[0], d);
            let (_, pv) = slot_gradients(self.grid, &q[1], &p[1], d);
            coupled_sources_acc(&self.spec, refs(&gu), refs(&gv), refs(&pu), refs(&pv), 1.0, &mut fu, &mut fv)?;
        }
        Ok(wave_kg_accel(self.grid, &q[0], &q[1], fu, fv))
    }

    fn velocity_dependent(&self) -> bool {
        self.prev.is_some() && !self.spec.is_zero()
    }
}

/// Outcome of [`picard_solve`].
#[derive(Clone, Debug)]
pub struct PicardResult {
    /// Every-step states of the final iterate on `[t_data, t_data + T0]`.
    pub solution: Vec<State>,
    /// `sup_t ‖(u^m − u^{m−1}, v^m − v^{m−1})‖_{H⁰}` for each iterate (`u^{−1} = 0`).
    pub diff_norms: Vec<f64>,
}

/// `sup_k sqrt(E(a_k − b_k))`.
pub fn h0_distance(grid: &Grid, a: &[State], b: &[State]) -> f64 {
    a.iter().zip(b).map(|(x, y)| energy_e(grid, &x.difference(y)).sqrt()).fold(0.0, f64::max)
}

/// Picard iteration on `[t, t + T0]`: each iterate is time stepped with the
/// previous iterate frozen in the first null-form slots. Stops when the
/// successive difference drops below `tol`; a linear spec stops after the
/// first (already exact) iterate.
pub fn picard_solve(
    grid: &Grid,
    data: &State,
    t0: f64,
    spec: &NullFormSpec,
    tol: f64,
    m_max: usize,
    scheme: Scheme,
) -> Result<PicardResult> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidArgument(format!("T0 = {t0}")));
    }
    let cfg = EvolutionConfig { spec: *spec, scheme, horizon: t0, ..EvolutionConfig::default() };
    let (nsteps, dt) = cfg.steps(grid);
    let mut diff_norms = Vec::new();
    let mut prev: Option<Vec<State>> = None;
    for _m in 0..m_max.max(1) {
        let sys = PicardSystem { grid, spec: *spec, prev: prev.as_deref(), t0: data.time, dt };
        let mut stepper = Stepper::new(&sys, scheme, 4);
        let mut q = vec![data.u.clone(), data.v.clone()];
        let mut p = vec![data.ut.clone(), data.vt.clone()];
        let mut states = vec![data.clone()];
        for k in 1..=nsteps {
            let (q1, p1) = stepper.step(data.time + (k - 1) as f64 * dt, &q, &p, dt)?;
            q = q1;
            p = p1;
            states.push(State {
                u: q[0].clone(),
                ut: p[0].clone(),
                v: q[1].clone(),
                vt: p[1].clone(),
                time: data.time + k as f64 * dt,
            });
        }
        let diff = match &prev {
            None => states.iter().map(|s| energy_e(grid, s).sqrt()).fold(0.0, f64::max),
            Some(pv) => h0_distance(grid, &states, pv),
        };
        diff_norms.push(diff);
        if spec.is_zero() || diff < tol {
            return Ok(PicardResult { solution: states, diff_norms });
        }
        prev = Some(states);
    }
    Err(Error::NoConvergence { history: diff_norms })
}
