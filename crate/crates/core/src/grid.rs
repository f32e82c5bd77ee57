//! Uniform periodic Cartesian grid on `[-L, L)^2`, scalar fields and
//! centered finite-difference operators.
//!
//! Storage is row-major: row `j` holds the points with `x2 = -L + j*dx`,
//! column `i` the points with `x1 = -L + i*dx`. The spatial origin is the
//! grid point `(n/2, n/2)`.
//!
//! All operators are pure: inputs are borrowed immutably and a fresh field is
//! returned. Work is split over rows with rayon; reductions are performed
//! row by row and then summed sequentially so results are bitwise
//! reproducible regardless of thread count.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest admissible ratio `dt/dx`.
pub const MAX_CFL: f64 = 0.5;
/// Default ratio `dt/dx`.
pub const DEFAULT_CFL: f64 = 0.4;
/// Default finite-difference accuracy order.
pub const DEFAULT_STENCIL_ORDER: usize = 4;

/// Spatial axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X1, Axis::X2];

    /// 0 for `x1`, 1 for `x2`.
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Axis::X1),
            2 => Ok(Axis::X2),
            _ => Err(Error::InvalidArgument(format!("axis must be 1 or 2, got {i}"))),
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X1 => Axis::X2,
            Axis::X2 => Axis::X1,
        }
    }
}

/// Grid parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub stencil_order: usize,
}

impl GridSpec {
    /// Build a spec with `dt = cfl * dx`.
    pub fn new(n: usize, half_width: f64, cfl: f64, stencil_order: usize) -> Result<Self> {
        let dx = 2.0 * half_width / n as f64;
        Self::with_dt(n, half_width, cfl * dx, stencil_order)
    }

    /// Build a spec with an explicit time step.
    pub fn with_dt(n: usize, half_width: f64, dt: f64, stencil_order: usize) -> Result<Self> {
        let spec = GridSpec { n, half_width, dx: 2.0 * half_width / n as f64, dt, stencil_order };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidGrid(format!("n = {} < 16", self.n)));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half_width = {}", self.half_width)));
        }
        if !(self.dx > 0.0) {
            return Err(Error::InvalidGrid("dx must be positive".into()));
        }
        if self.stencil_order != 2 && self.stencil_order != 4 {
            return Err(Error::InvalidGrid(format!("stencil_order = {}", self.stencil_order)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt = {}", self.dt)));
        }
        if self.dt > MAX_CFL * self.dx * (1.0 + 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "CFL violated: dt = {} > {} * dx = {}",
                self.dt,
                MAX_CFL,
                MAX_CFL * self.dx
            )));
        }
        Ok(())
    }

    /// Coordinate of grid index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }
}

/// A real grid function of shape `n x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    n: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field { n, data: vec![0.0; n * n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field { n, data: vec![c; n * n] }
    }

    /// Wrap raw row-major values; rejects wrong lengths and non-finite entries.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::ShapeMismatch { expected: n, got: (data.len() as f64).sqrt() as usize });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Field::from_vec"));
        }
        Ok(Field { n, data })
    }

    /// Sample `f(x1, x2)` at every grid point.
    pub fn from_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let n = spec.n;
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let x2 = spec.coord(j);
            for (i, out) in row.iter_mut().enumerate() {
                *out = f(spec.coord(i), x2);
            }
        });
        Field { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Value at column `i` (x1 index), row `j` (x2 index).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.n + i] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Sup of `|f|` over the points selected by `mask`.
    pub fn max_abs_masked(&self, mask: Option<&Mask>) -> f64 {
        match mask {
            None => self.max_abs(),
            Some(m) => self
                .data
                .iter()
                .zip(m.bits.iter())
                .filter(|(_, &b)| b)
                .fold(0.0_f64, |acc, (x, _)| acc.max(x.abs())),
        }
    }

    fn check_same(&self, other: &Field) {
        assert_eq!(self.n, other.n, "fields live on different grids");
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Field {
        Field { n: self.n, data: self.data.par_iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &Field, f: F) -> Field {
        self.check_same(other);
        Field {
            n: self.n,
            data: self.data.par_iter().zip(other.data.par_iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|a| c * a)
    }

    /// `self += c * x`
    pub fn axpy(&mut self, c: f64, x: &Field) {
        self.check_same(x);
        self.data.par_iter_mut().zip(x.data.par_iter()).for_each(|(a, &b)| *a += c * b);
    }

    /// `self *= c`
    pub fn scale_in_place(&mut self, c: f64) {
        self.data.par_iter_mut().for_each(|a| *a *= c);
    }

    /// Sum of several fields with coefficients.
    pub fn linear_combination(terms: &[(f64, &Field)]) -> Field {
        let n = terms.first().map(|t| t.1.n).expect("at least one term");
        let mut out = Field::zeros(n);
        for (c, f) in terms {
            out.axpy(*c, f);
        }
        out
    }
}

/// Boolean selection of grid points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    n: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn full(n: usize) -> Self {
        Mask { n, bits: vec![true; n * n] }
    }

    pub fn empty(n: usize) -> Self {
        Mask { n, bits: vec![false; n * n] }
    }

    pub fn from_bits(n: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n * n {
            return Err(Error::ShapeMismatch { expected: n * n, got: bits.len() });
        }
        Ok(Mask { n, bits })
    }

    pub fn from_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> bool + Sync,
    {
        let n = spec.n;
        let mut bits = vec![false; n * n];
        bits.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let x2 = spec.coord(j);
            for (i, out) in row.iter_mut().enumerate() {
                *out = f(spec.coord(i), x2);
            }
        });
        Mask { n, bits }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.n + i]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn and(&self, other: &Mask) -> Mask {
        Mask { n: self.n, bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect() }
    }

    pub fn or(&self, other: &Mask) -> Mask {
        Mask { n: self.n, bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect() }
    }

    pub fn not(&self) -> Mask {
        Mask { n: self.n, bits: self.bits.iter().map(|&a| !a).collect() }
    }
}

/// The four evolved grid functions at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field,
    pub ut: Field,
    pub v: Field,
    pub vt: Field,
    pub time: f64,
}

impl State {
    pub fn zeros(n: usize, time: f64) -> Self {
        State { u: Field::zeros(n), ut: Field::zeros(n), v: Field::zeros(n), vt: Field::zeros(n), time }
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }

    pub fn fields(&self) -> [&Field; 4] {
        [&self.u, &self.ut, &self.v, &self.vt]
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.fields().iter().all(|f| f.is_finite())
    }

    /// Largest absolute value over all four fields.
    pub fn max_abs(&self) -> f64 {
        self.fields().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    /// Multiply every field by `lambda` (time unchanged).
    pub fn scaled(&self, lambda: f64) -> State {
        State {
            u: self.u.scale(lambda),
            ut: self.ut.scale(lambda),
            v: self.v.scale(lambda),
            vt: self.vt.scale(lambda),
            time: self.time,
        }
    }

    /// Fieldwise difference `self - other` (time taken from `self`).
    pub fn difference(&self, other: &State) -> State {
        State {
            u: self.u.sub(&other.u),
            ut: self.ut.sub(&other.ut),
            v: self.v.sub(&other.v),
            vt: self.vt.sub(&other.vt),
            time: self.time,
        }
    }

    pub fn check_shape(&self, n: usize) -> Result<()> {
        for f in self.fields() {
            if f.n() != n {
                return Err(Error::ShapeMismatch { expected: n, got: f.n() });
            }
        }
        Ok(())
    }
}

/// Grid with cached coordinate fields.
#[derive(Clone, Debug)]
pub struct Grid {
    spec: GridSpec,
    x1: Field,
    x2: Field,
    r: Field,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let x1 = Field::from_fn(&spec, |x1, _| x1);
        let x2 = Field::from_fn(&spec, |_, x2| x2);
        let r = Field::from_fn(&spec, |x1, x2| x1.hypot(x2));
        Ok(Grid { spec, x1, x2, r })
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.spec.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.spec.dx
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.spec.dt
    }

    /// Coordinate field `x_axis`.
    pub fn x(&self, axis: Axis) -> &Field {
        match axis {
            Axis::X1 => &self.x1,
            Axis::X2 => &self.x2,
        }
    }

    /// Radius field `|x|`.
    pub fn r(&self) -> &Field {
        &self.r
    }

    /// Exclusion radius around the spatial origin used wherever `x/r` appears.
    pub fn r_min(&self) -> f64 {
        2.0 * self.spec.dx
    }

    pub fn field<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> Field {
        Field::from_fn(&self.spec, f)
    }

    pub fn mask<F: Fn(f64, f64) -> bool + Sync>(&self, f: F) -> Mask {
        Mask::from_fn(&self.spec, f)
    }

    fn first_coeffs(&self) -> &'static [(isize, f64)] {
        match self.spec.stencil_order {
            2 => &[(-1, -0.5), (1, 0.5)],
            _ => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    fn second_coeffs(&self) -> &'static [(isize, f64)] {
        match self.spec.stencil_order {
            2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            _ => &[
                (-2, -1.0 / 12.0),
                (-1, 16.0 / 12.0),
                (0, -30.0 / 12.0),
                (1, 16.0 / 12.0),
                (2, -1.0 / 12.0),
            ],
        }
    }

    fn apply_stencil(&self, f: &Field, axis: Axis, coeffs: &[(isize, f64)], scale: f64) -> Field {
        let n = self.n();
        assert_eq!(f.n(), n, "field does not match grid");
        let src = f.as_slice();
        let wrap = |k: isize| -> usize { k.rem_euclid(n as isize) as usize };
        let mut out = vec![0.0; n * n];
        match axis {
            Axis::X1 => {
                let reach = coeffs.iter().map(|c| c.0.unsigned_abs()).max().unwrap_or(0);
                out.par_chunks_mut(n).enumerate().for_each(|(j, row_out)| {
                    let row = &src[j * n..(j + 1) * n];
                    for i in 0..n {
                        let mut acc = 0.0;
                        if i >= reach && i + reach < n {
                            for &(o, c) in coeffs {
                                acc += c * row[(i as isize + o) as usize];
                            }
                        } else {
                            for &(o, c) in coeffs {
                                acc += c * row[wrap(i as isize + o)];
                            }
                        }
                        row_out[i] = acc * scale;
                    }
                });
            }
            Axis::X2 => {
                out.par_chunks_mut(n).enumerate().for_each(|(j, row_out)| {
                    for &(o, c) in coeffs {
                        let jj = wrap(j as isize + o);
                        let row = &src[jj * n..(jj + 1) * n];
                        for (acc, &x) in row_out.iter_mut().zip(row) {
                            *acc += c * x;
                        }
                    }
                    for acc in row_out.iter_mut() {
                        *acc *= scale;
                    }
                });
            }
        }
        Field { n, data: out }
    }

    /// Centered first derivative along `axis`.
    pub fn d1(&self, f: &Field, axis: Axis) -> Field {
        self.apply_stencil(f, axis, self.first_coeffs(), 1.0 / self.spec.dx)
    }

    /// Centered second derivative along `axis`.
    pub fn d2(&self, f: &Field, axis: Axis) -> Field {
        self.apply_stencil(f, axis, self.second_coeffs(), 1.0 / (self.spec.dx * self.spec.dx))
    }

    /// Checked derivative of order 1 or 2 along `axis`.
    pub fn dx_deriv(&self, f: &Field, axis: Axis, order: usize) -> Result<Field> {
        if f.n() != self.n() {
            return Err(Error::ShapeMismatch { expected: self.n(), got: f.n() });
        }
        if !f.is_finite() {
            return Err(Error::NonFinite("dx_deriv input"));
        }
        match order {
            1 => Ok(self.d1(f, axis)),
            2 => Ok(self.d2(f, axis)),
            _ => Err(Error::InvalidArgument(format!("derivative order {order} not in 1..=2"))),
        }
    }

    /// `∂_1^{a1} ∂_2^{a2} f`, built from second-derivative stencils with at
    /// most one first-derivative stencil per axis.
    pub fn d_mixed(&self, f: &Field, a1: usize, a2: usize) -> Field {
        let mut g = f.clone();
        for (axis, a) in [(Axis::X1, a1), (Axis::X2, a2)] {
            for _ in 0..a / 2 {
                g = self.d2(&g, axis);
            }
            if a % 2 == 1 {
                g = self.d1(&g, axis);
            }
        }
        g
    }

    /// Five/nine-point Laplacian of the grid's stencil order.
    pub fn laplacian(&self, f: &Field) -> Field {
        let mut out = self.d2(f, Axis::X1);
        out.axpy(1.0, &self.d2(f, Axis::X2));
        out
    }

    /// `dx^2`-weighted sum over the (optionally masked) grid.
    pub fn integrate(&self, f: &Field, mask: Option<&Mask>) -> f64 {
        let n = self.n();
        let data = f.as_slice();
        let rows: Vec<f64> = match mask {
            None => data.par_chunks(n).map(|row| row.iter().sum::<f64>()).collect(),
            Some(m) => data
                .par_chunks(n)
                .zip(m.bits().par_chunks(n))
                .map(|(row, bits)| row.iter().zip(bits).filter(|(_, &b)| b).map(|(x, _)| *x).sum::<f64>())
                .collect(),
        };
        rows.iter().sum::<f64>() * self.spec.dx * self.spec.dx
    }

    /// Weighted integral `∫ w f dx` restricted to `mask`.
    pub fn integrate_product(&self, w: &Field, f: &Field, mask: Option<&Mask>) -> f64 {
        self.integrate(&w.mul(f), mask)
    }
}
