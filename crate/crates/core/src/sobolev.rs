//! Grid-based realization of H^s(R) norms, the seminorm family of
//! H^s_loc(I), smooth cutoffs, interval exhaustions and the duality pairing.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * Fourier transform `u^(xi) = integral exp(-2 pi i x xi) u(x) dx`. The
//!   discrete version scales the FFT by `dx` and corrects the phase for a
//!   window that does not start at 0, so `fourier` approximates the integral
//!   transform itself, not a bare DFT.
//! * `hs_norm(u, s)^2 = sum_k (1 + xi_k^2)^s |u^(xi_k)|^2 dxi`, the weighted
//!   Plancherel quadrature on the dual grid.
//! * The pairing is bilinear (no conjugation): `<g, u> = integral g u dx`,
//!   evaluated frequency-side as `sum_k g^(-xi_k) u^(xi_k) dxi`, which equals
//!   the sample-side trapezoid sum exactly.
//! * Grid functions restricted to a grid-aligned interval carry half weight
//!   at the endpoint samples, so plain sample sums realize trapezoid
//!   quadrature over the interval.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::SobolevError;
use crate::jet::smoothstep_jet;
use crate::C64;

const EDGE_BAND: usize = 4;
// Relative slack when deciding whether a coordinate lies on a grid sample.
const SNAP_TOL: f64 = 1e-9;

/// Uniform sample grid on a window `[w_lo, w_hi)`, N a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    w_lo: f64,
    w_hi: f64,
    n: usize,
}

impl Grid {
    pub fn new(w_lo: f64, w_hi: f64, n: usize) -> Result<Self, SobolevError> {
        if !(w_lo.is_finite() && w_hi.is_finite()) || w_lo >= w_hi {
            return Err(SobolevError::InvalidWindow { w_lo, w_hi });
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(SobolevError::InvalidSampleCount { n });
        }
        Ok(Grid { w_lo, w_hi, n })
    }

    /// Window for an interval, padded on each side by `padding_fraction`
    /// of the interval length so null extensions and mollifications never
    /// wrap around the periodic boundary.
    pub fn for_interval(
        interval: (f64, f64),
        padding_fraction: f64,
        n: usize,
    ) -> Result<Self, SobolevError> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(SobolevError::InvalidInterval { lo, hi });
        }
        let pad = padding_fraction * (hi - lo);
        if pad <= 0.0 {
            return Err(SobolevError::WindowTooTight);
        }
        Grid::new(lo - pad, hi + pad, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn window(&self) -> (f64, f64) {
        (self.w_lo, self.w_hi)
    }

    pub fn dx(&self) -> f64 {
        (self.w_hi - self.w_lo) / self.n as f64
    }

    /// Dual grid spacing `1 / (N dx)`.
    pub fn dxi(&self) -> f64 {
        1.0 / (self.n as f64 * self.dx())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.w_lo + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Frequencies in FFT order: `0, dxi, ..., -2 dxi, -dxi`.
    pub fn frequencies(&self) -> Vec<f64> {
        let dxi = self.dxi();
        (0..self.n)
            .map(|k| {
                if k < self.n / 2 {
                    k as f64 * dxi
                } else {
                    (k as i64 - self.n as i64) as f64 * dxi
                }
            })
            .collect()
    }

    /// Smallest sample index with `x(i) >= x`, if any.
    pub fn first_index_at_or_above(&self, x: f64) -> Option<usize> {
        let raw = (x - self.w_lo) / self.dx();
        let i = if (raw - raw.round()).abs() <= SNAP_TOL * raw.abs().max(1.0) {
            raw.round() as i64
        } else {
            raw.ceil() as i64
        };
        let i = i.max(0);
        ((i as usize) < self.n).then_some(i as usize)
    }

    /// Largest sample index with `x(i) <= x`, if any.
    pub fn last_index_at_or_below(&self, x: f64) -> Option<usize> {
        let raw = (x - self.w_lo) / self.dx();
        let i = if (raw - raw.round()).abs() <= SNAP_TOL * raw.abs().max(1.0) {
            raw.round() as i64
        } else {
            raw.floor() as i64
        };
        if i < 0 {
            return None;
        }
        Some((i as usize).min(self.n - 1))
    }

    fn on_sample(&self, x: f64, i: usize) -> bool {
        (x - self.x(i)).abs() <= SNAP_TOL * self.dx().max(x.abs())
    }
}

/// Complex samples on a [`Grid`]: the numeric stand-in for elements of
/// H^s_loc(I), H^s(R) and test functions.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<C64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        let samples = vec![C64::new(0.0, 0.0); grid.len()];
        GridFunction { grid, samples }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let samples = grid.points().map(f).collect();
        GridFunction { grid, samples }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn from_samples(grid: Grid, samples: Vec<C64>) -> Result<Self, SobolevError> {
        if samples.len() != grid.len() {
            return Err(SobolevError::GridMismatch);
        }
        Ok(GridFunction { grid, samples })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let samples = self
            .grid
            .points()
            .zip(&self.samples)
            .map(|(x, &v)| f(x, v))
            .collect();
        GridFunction {
            grid: self.grid.clone(),
            samples,
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, SobolevError> {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, SobolevError> {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn scale(&self, k: C64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| k * v).collect(),
        }
    }

    /// Pointwise product; the multiplication operator `u -> phi u`.
    pub fn pointwise_mul(&self, rhs: &Self) -> Result<Self, SobolevError> {
        self.zip(rhs, |a, b| a * b)
    }

    fn zip(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self, SobolevError> {
        if self.grid != rhs.grid {
            return Err(SobolevError::GridMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&rhs.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            samples,
        })
    }

    /// `L^2` norm of the samples over the whole window.
    pub fn l2_norm(&self) -> f64 {
        let dx = self.grid.dx();
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude over the first and last few samples; the
    /// periodization audit compares this against a tolerance.
    pub fn edge_magnitude(&self) -> f64 {
        let n = self.samples.len();
        let band = EDGE_BAND.min(n / 2);
        self.samples[..band]
            .iter()
            .chain(&self.samples[n - band..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Plain sample sum times `dx`; with half-weighted interval endpoints
    /// this is trapezoid quadrature.
    pub fn integral(&self) -> C64 {
        self.samples.iter().sum::<C64>() * C64::new(self.grid.dx(), 0.0)
    }

    /// CSV rendering `x,re,im`, one sample per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im\n");
        for (x, v) in self.grid.points().zip(&self.samples) {
            out.push_str(&format!("{:.11e},{:.11e},{:.11e}\n", x, v.re, v.im));
        }
        out
    }

    /// JSON envelope with grid metadata.
    pub fn envelope(&self) -> GridFunctionEnvelope {
        GridFunctionEnvelope {
            window: [self.grid.w_lo, self.grid.w_hi],
            samples: self.grid.n,
            dx: self.grid.dx(),
            values: self.samples.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

/// Serializable form of a [`GridFunction`].
#[derive(Debug, Serialize)]
pub struct GridFunctionEnvelope {
    pub window: [f64; 2],
    pub samples: usize,
    pub dx: f64,
    pub values: Vec<[f64; 2]>,
}

/// Sobolev regularity order; any finite real.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self, SobolevError> {
        if s.is_finite() {
            Ok(SobolevIndex(s))
        } else {
            Err(SobolevError::NonFiniteIndex)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<i32> for SobolevIndex {
    fn from(s: i32) -> Self {
        SobolevIndex(s as f64)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Frequency-side samples of a transformed grid function, FFT ordering.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    values: Vec<C64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.frequencies()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.grid
            .frequencies()
            .into_iter()
            .zip(self.values.iter().copied())
    }

    /// Index holding frequency `-xi_k`; the Nyquist bin maps to itself.
    pub fn negated_index(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            self.grid.len() - k
        }
    }
}

/// Forward transform under the `exp(-2 pi i x xi)` convention, scaled so the
/// discrete sum approximates the integral transform.
pub fn fourier(u: &GridFunction) -> Spectrum {
    let n = u.grid.len();
    let dx = u.grid.dx();
    let mut buf = u.samples.clone();
    plan(n, true).process(&mut buf);
    let freqs = u.grid.frequencies();
    for (v, xi) in buf.iter_mut().zip(&freqs) {
        let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * u.grid.w_lo * xi);
        *v *= phase * dx;
    }
    Spectrum {
        grid: u.grid.clone(),
        values: buf,
    }
}

/// Inverse of [`fourier`]; `inverse_fourier(fourier(u)) == u` to rounding.
pub fn inverse_fourier(s: &Spectrum) -> GridFunction {
    let n = s.grid.len();
    let dxi = s.grid.dxi();
    let freqs = s.grid.frequencies();
    let mut buf: Vec<C64> = s
        .values
        .iter()
        .zip(&freqs)
        .map(|(&v, xi)| {
            v * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * s.grid.w_lo * xi)
        })
        .collect();
    plan(n, false).process(&mut buf);
    for v in buf.iter_mut() {
        *v *= dxi;
    }
    GridFunction {
        grid: s.grid.clone(),
        samples: buf,
    }
}

/// `(sum_k (1 + xi_k^2)^s |u^(xi_k)|^2 dxi)^(1/2)`.
pub fn hs_norm(u: &GridFunction, s: SobolevIndex) -> f64 {
    weighted_l2(&fourier(u), s.value())
}

/// k-th derivative by frequency multiplication with `(2 pi i xi)^k`.
pub fn spectral_derivative(u: &GridFunction, order: usize) -> GridFunction {
    let mut spec = fourier(u);
    let freqs = spec.frequencies();
    for (v, xi) in spec.values_mut().iter_mut().zip(&freqs) {
        *v *= C64::new(0.0, 2.0 * std::f64::consts::PI * xi).powu(order as u32);
    }
    inverse_fourier(&spec)
}

/// Unnormalized FFT on a raw buffer; shared by the convolution kernels.
pub(crate) fn raw_fft(buf: &mut [C64], forward: bool) {
    plan(buf.len(), forward).process(buf);
}

fn weighted_l2(spec: &Spectrum, s: f64) -> f64 {
    let dxi = spec.grid.dxi();
    let sum: f64 = spec
        .iter()
        .map(|(xi, v)| (1.0 + xi * xi).powf(s) * v.norm_sqr())
        .sum();
    (sum * dxi).sqrt()
}

/// Bilinear pairing `<g, u> = integral g u dx`, evaluated frequency-side as
/// `sum_k g^(-xi_k) u^(xi_k) dxi`. The Sobolev index is recorded for audit
/// only: the weighted factorization `(1+xi^2)^(-s/2) (1+xi^2)^(s/2)` cancels.
pub fn pairing(g: &GridFunction, u: &GridFunction, _s: SobolevIndex) -> Result<C64, SobolevError> {
    if g.grid != u.grid {
        return Err(SobolevError::GridMismatch);
    }
    let gs = fourier(g);
    let us = fourier(u);
    let dxi = g.grid.dxi();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..g.grid.len() {
        acc += gs.values[gs.negated_index(k)] * us.values[k];
    }
    Ok(acc * C64::new(dxi, 0.0))
}

/// Smooth cutoff equal to 1 on a closed inner interval and 0 outside an open
/// outer interval, built from the exponential smoothstep. Exposes exact
/// derivatives of every order through jet arithmetic.
#[derive(Clone, Debug)]
pub struct Cutoff {
    inner: (f64, f64),
    outer: (f64, f64),
}

impl Cutoff {
    pub fn new(inner: (f64, f64), outer: (f64, f64)) -> Result<Self, SobolevError> {
        let ok = inner.0 <= inner.1 && outer.0 < inner.0 && inner.1 < outer.1;
        if !ok {
            return Err(SobolevError::CutoffNesting);
        }
        Ok(Cutoff { inner, outer })
    }

    pub fn inner(&self) -> (f64, f64) {
        self.inner
    }

    pub fn outer(&self) -> (f64, f64) {
        self.outer
    }

    /// Closed support `[outer.0, outer.1]`.
    pub fn support(&self) -> (f64, f64) {
        self.outer
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// n-th derivative at `x`; exactly `0.0` outside the transition collars
    /// (and exactly `1.0` for n = 0 on the inner plateau).
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        if x <= self.outer.0 || x >= self.outer.1 {
            return 0.0;
        }
        if x >= self.inner.0 && x <= self.inner.1 {
            return if order == 0 { 1.0 } else { 0.0 };
        }
        if x < self.inner.0 {
            let width = self.inner.0 - self.outer.0;
            let t = (x - self.outer.0) / width;
            smoothstep_jet(t, order).derivative(order) / width.powi(order as i32)
        } else {
            let width = self.outer.1 - self.inner.1;
            let t = (self.outer.1 - x) / width;
            let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * smoothstep_jet(t, order).derivative(order) / width.powi(order as i32)
        }
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        GridFunction::from_real_fn(grid.clone(), |x| self.value(x))
    }

    pub fn sample_derivative(&self, order: usize, grid: &Grid) -> GridFunction {
        GridFunction::from_real_fn(grid.clone(), |x| self.derivative(order, x))
    }
}

/// Smooth cutoff sampled on a grid: 1 on `inner`, 0 outside `outer`,
/// values in `[0, 1]`.
pub fn bump(
    inner: (f64, f64),
    outer: (f64, f64),
    grid: &Grid,
) -> Result<GridFunction, SobolevError> {
    Ok(Cutoff::new(inner, outer)?.sample(grid))
}

/// One level of an exhaustion: the inner interval `[a_j, b_j]` (grid
/// aligned), the next interval bounding the cutoff's support, the cutoff
/// itself and the effective distance-rule index.
#[derive(Clone, Debug)]
pub struct ExhaustionLevel {
    pub index: usize,
    /// Index entering the distance and mollifier-width rules; equals `index`
    /// plus the closure-rule offset.
    pub effective_index: usize,
    pub inner: (f64, f64),
    pub outer: (f64, f64),
    pub cutoff: Cutoff,
    cutoff_samples: GridFunction,
}

impl ExhaustionLevel {
    pub fn cutoff_samples(&self) -> &GridFunction {
        &self.cutoff_samples
    }
}

/// Nested intervals `I_j` with cutoffs `phi_j = 1` on `[a_j, b_j]` supported
/// in `I_{j+1}`, defining the seminorm family of H^s_loc(I).
#[derive(Clone, Debug)]
pub struct Exhaustion {
    interval: (f64, f64),
    grid: Grid,
    closure_rule: bool,
    offset: usize,
    levels: Vec<ExhaustionLevel>,
}

impl Exhaustion {
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn closure_rule(&self) -> bool {
        self.closure_rule
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn count(&self) -> usize {
        self.levels.len()
    }

    /// Level `j`, 1-based as in the seminorm family.
    pub fn level(&self, j: usize) -> Result<&ExhaustionLevel, SobolevError> {
        if j == 0 || j > self.levels.len() {
            return Err(SobolevError::LevelOutOfRange {
                index: j,
                count: self.levels.len(),
            });
        }
        Ok(&self.levels[j - 1])
    }

    pub fn levels(&self) -> &[ExhaustionLevel] {
        &self.levels
    }
}

/// Build the nested intervals and cutoffs over `interval`.
///
/// Margins shrink like `l(I) / (2 (j + 1))`; with `closure_flag` set they
/// follow the distance rule `d(I_j, R \ I) >= 2 / j'` with `j' = j + offset`,
/// the offset being the smallest shift making the first interval nonempty.
/// Interval endpoints are snapped inward onto grid samples so that interval
/// quadrature and restriction are grid-exact; the requested depth must stay
/// resolvable, otherwise this errors.
pub fn make_exhaustion(
    grid: &Grid,
    interval: (f64, f64),
    count: usize,
    closure_flag: bool,
) -> Result<Exhaustion, SobolevError> {
    let (b, c) = interval;
    if !(b.is_finite() && c.is_finite()) || b >= c {
        return Err(SobolevError::InvalidInterval { lo: b, hi: c });
    }
    let (w_lo, w_hi) = grid.window();
    if w_lo >= b || w_hi <= c {
        return Err(SobolevError::WindowTooTight);
    }
    if count == 0 {
        return Err(SobolevError::ExhaustionResolution { depth: 0 });
    }
    let length = c - b;
    let offset = if closure_flag {
        // smallest j' with 2 / j' < l(I) / 2
        let j_min = (4.0 / length).floor() as usize + 1;
        j_min - 1
    } else {
        0
    };
    let margin = |j: usize| -> f64 {
        if closure_flag {
            2.0 / (j + offset) as f64
        } else {
            length / (2.0 * (j + 1) as f64)
        }
    };

    let mut endpoints = Vec::with_capacity(count + 1);
    for j in 1..=count + 1 {
        let m = margin(j);
        let a_idx = grid
            .first_index_at_or_above(b + m)
            .ok_or(SobolevError::ExhaustionResolution { depth: count })?;
        let b_idx = grid
            .last_index_at_or_below(c - m)
            .ok_or(SobolevError::ExhaustionResolution { depth: count })?;
        if a_idx >= b_idx {
            return Err(SobolevError::ExhaustionResolution { depth: count });
        }
        endpoints.push((grid.x(a_idx), grid.x(b_idx)));
    }
    for w in endpoints.windows(2) {
        let ((a0, b0), (a1, b1)) = (w[0], w[1]);
        if !(a1 < a0 && b0 < b1) {
            return Err(SobolevError::ExhaustionResolution { depth: count });
        }
    }

    let levels = (1..=count)
        .map(|j| {
            let inner = endpoints[j - 1];
            let outer = endpoints[j];
            let cutoff = Cutoff::new(inner, outer)?;
            let cutoff_samples = cutoff.sample(grid);
            Ok(ExhaustionLevel {
                index: j,
                effective_index: j + offset,
                inner,
                outer,
                cutoff,
                cutoff_samples,
            })
        })
        .collect::<Result<Vec<_>, SobolevError>>()?;

    Ok(Exhaustion {
        interval,
        grid: grid.clone(),
        closure_rule: closure_flag,
        offset,
        levels,
    })
}

/// Seminorm `p_j^(s)(u) = || phi_j u ||_{H^s}`.
pub fn seminorm(
    u: &GridFunction,
    exh: &Exhaustion,
    j: usize,
    s: SobolevIndex,
) -> Result<f64, SobolevError> {
    let level = exh.level(j)?;
    let product = level.cutoff_samples.pointwise_mul(u)?;
    Ok(hs_norm(&product, s))
}

/// Restrict samples of `v` to the grid-aligned interval `[a, b]`, half
/// weighting the endpoint samples. Realizes the characteristic-function
/// product `chi_[a,b] v` under trapezoid semantics.
pub fn restrict_to_interval(v: &GridFunction, interval: (f64, f64)) -> GridFunction {
    let grid = v.grid().clone();
    let samples = grid
        .points()
        .zip(v.samples())
        .enumerate()
        .map(|(i, (x, &val))| {
            if x < interval.0 || x > interval.1 {
                C64::new(0.0, 0.0)
            } else if grid.on_sample(interval.0, i) || grid.on_sample(interval.1, i) {
                val * 0.5
            } else {
                val
            }
        })
        .collect();
    GridFunction { grid, samples }
}

/// Same restriction applied to a closure instead of stored samples.
pub fn sample_on_interval(
    grid: &Grid,
    interval: (f64, f64),
    f: impl Fn(f64) -> C64,
) -> GridFunction {
    let samples = grid
        .points()
        .enumerate()
        .map(|(i, x)| {
            if x < interval.0 || x > interval.1 {
                C64::new(0.0, 0.0)
            } else if grid.on_sample(interval.0, i) || grid.on_sample(interval.1, i) {
                f(x) * 0.5
            } else {
                f(x)
            }
        })
        .collect();
    GridFunction {
        grid: grid.clone(),
        samples,
    }
}

/// Periodization audit: decay of the samples at the window edges.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EdgeAudit {
    pub edge_magnitude: f64,
    pub tolerance: f64,
}

impl EdgeAudit {
    pub fn ok(&self) -> bool {
        self.edge_magnitude <= self.tolerance
    }
}

pub fn periodization_audit(u: &GridFunction, tolerance: f64) -> EdgeAudit {
    EdgeAudit {
        edge_magnitude: u.edge_magnitude(),
        tolerance,
    }
}

/// Smoothness audit for `s >= 1`: fraction of the weighted spectral mass in
/// the top frequency octave. Non-decaying derivative spectra make the H^s
/// quadrature diverge with N, so a large fraction warrants a warning.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmoothnessAudit {
    pub tail_fraction: f64,
    pub threshold: f64,
}

impl SmoothnessAudit {
    pub fn ok(&self) -> bool {
        self.tail_fraction <= self.threshold
    }
}

pub fn smoothness_audit(u: &GridFunction, s: SobolevIndex) -> Option<SmoothnessAudit> {
    if s.value() < 1.0 {
        return None;
    }
    let spec = fourier(u);
    let nyquist = 0.5 / u.grid.dx();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (xi, v) in spec.iter() {
        let w = (1.0 + xi * xi).powf(s.value()) * v.norm_sqr();
        total += w;
        if xi.abs() >= 0.5 * nyquist {
            tail += w;
        }
    }
    let tail_fraction = if total > 0.0 { tail / total } else { 0.0 };
    Some(SmoothnessAudit {
        tail_fraction,
        threshold: 1e-3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_grid() -> Grid {
        Grid::new(-8.0, 8.0, 4096).unwrap()
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(
            Grid::new(1.0, 1.0, 64),
            Err(SobolevError::InvalidWindow { .. })
        ));
        assert!(matches!(
            Grid::new(0.0, 1.0, 60),
            Err(SobolevError::InvalidSampleCount { .. })
        ));
        assert!(matches!(
            Grid::new(0.0, 1.0, 8),
            Err(SobolevError::InvalidSampleCount { .. })
        ));
    }

    #[test]
    fn gaussian_is_self_dual() {
        // F[exp(-pi x^2)] = exp(-pi xi^2) under this convention.
        let u = GridFunction::from_real_fn(gaussian_grid(), |x| (-PI * x * x).exp());
        let spec = fourier(&u);
        let mut sup = 0.0f64;
        for (xi, v) in spec.iter() {
            if xi.abs() <= 4.0 {
                sup = sup.max((v - C64::new((-PI * xi * xi).exp(), 0.0)).norm());
            }
        }
        assert!(sup < 1e-8, "sup error {sup}");
    }

    #[test]
    fn fourier_of_zero_is_zero() {
        let u = GridFunction::zeros(gaussian_grid());
        let spec = fourier(&u);
        assert!(spec.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn fourier_of_indicator_is_sinc() {
        // Indicator of [-1/2, 1/2]: transform sin(pi xi)/(pi xi); non-smooth
        // input, degraded tolerance away from the jump frequencies.
        let u = GridFunction::from_real_fn(gaussian_grid(), |x| {
            if x.abs() < 0.5 {
                1.0
            } else if (x.abs() - 0.5).abs() < 1e-12 {
                0.5
            } else {
                0.0
            }
        });
        let spec = fourier(&u);
        let mut sup = 0.0f64;
        for (xi, v) in spec.iter() {
            if xi.abs() <= 4.0 {
                let expected = if xi.abs() < 1e-12 {
                    1.0
                } else {
                    (PI * xi).sin() / (PI * xi)
                };
                sup = sup.max((v - C64::new(expected, 0.0)).norm());
            }
        }
        assert!(sup < 1e-2, "sup error {sup}");
    }

    #[test]
    fn inverse_fourier_round_trip() {
        let u = GridFunction::from_fn(gaussian_grid(), |x| {
            C64::new((-PI * x * x).exp(), 0.3 * (-x * x).exp())
        });
        let back = inverse_fourier(&fourier(&u));
        let err = u
            .sub(&back)
            .unwrap()
            .samples()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn hs_norm_gaussian_at_zero_order() {
        // ||exp(-pi x^2)||_{L^2} = (integral exp(-2 pi x^2))^(1/2) = 2^(-1/4)
        let u = GridFunction::from_real_fn(gaussian_grid(), |x| (-PI * x * x).exp());
        let value = hs_norm(&u, SobolevIndex::new(0.0).unwrap());
        assert!((value - 2f64.powf(-0.25)).abs() < 1e-6);
    }

    #[test]
    fn hs_norm_zero_function() {
        let u = GridFunction::zeros(gaussian_grid());
        for s in [-1.0, 0.0, 1.5] {
            assert_eq!(hs_norm(&u, SobolevIndex::new(s).unwrap()), 0.0);
        }
    }

    #[test]
    fn hs_norm_gaussian_first_order() {
        // (integral (1 + xi^2) exp(-2 pi xi^2) d xi)^(1/2)
        //   = (2^(-1/2) (1 + 1/(4 pi)))^(1/2) = 0.8737142272770695,
        // frozen from the quadrature oracle.
        let u = GridFunction::from_real_fn(gaussian_grid(), |x| (-PI * x * x).exp());
        let value = hs_norm(&u, SobolevIndex::new(1.0).unwrap());
        assert!((value - 0.8737142272770695).abs() < 1e-6, "got {value}");
    }

    #[test]
    fn parseval_at_zero_order() {
        let u = GridFunction::from_real_fn(gaussian_grid(), |x| (-x * x).exp() * (3.0 * x).cos());
        let direct = u.l2_norm();
        let spectral = hs_norm(&u, SobolevIndex::new(0.0).unwrap());
        assert!((direct - spectral).abs() < 1e-8);
    }

    #[test]
    fn hs_norm_monotone_in_s() {
        let u = GridFunction::from_real_fn(gaussian_grid(), |x| (-PI * x * x).exp());
        let mut prev = 0.0;
        for s in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
            let v = hs_norm(&u, SobolevIndex::new(s).unwrap());
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn pairing_matches_direct_quadrature() {
        let grid = gaussian_grid();
        let g = GridFunction::from_real_fn(grid.clone(), |x| (-PI * x * x).exp());
        let u = GridFunction::from_real_fn(grid.clone(), |x| (-(x - 0.5) * (x - 0.5)).exp());
        let paired = pairing(&g, &u, SobolevIndex::new(0.0).unwrap()).unwrap();
        let direct: C64 = g.pointwise_mul(&u).unwrap().integral();
        assert!((paired - direct).norm() < 1e-6);
    }

    #[test]
    fn pairing_with_zero_vanishes() {
        let grid = gaussian_grid();
        let g = GridFunction::zeros(grid.clone());
        let u = GridFunction::from_real_fn(grid, |x| (-x * x).exp());
        let paired = pairing(&g, &u, SobolevIndex::new(1.0).unwrap()).unwrap();
        assert_eq!(paired, C64::new(0.0, 0.0));
    }

    #[test]
    fn bump_plateau_and_support() {
        let grid = Grid::new(-2.0, 2.0, 1024).unwrap();
        let phi = bump((-0.5, 0.5), (-1.0, 1.0), &grid).unwrap();
        for (x, v) in grid.points().zip(phi.samples()) {
            assert!(v.im == 0.0);
            assert!(v.re >= 0.0 && v.re <= 1.0);
            if (-0.5..=0.5).contains(&x) {
                assert_eq!(v.re, 1.0, "plateau at x = {x}");
            }
            if x <= -1.0 || x >= 1.0 {
                assert_eq!(v.re, 0.0, "support at x = {x}");
            }
        }
    }

    #[test]
    fn bump_symmetric_setup_is_even() {
        let grid = Grid::new(-2.0, 2.0, 1024).unwrap();
        let phi = bump((-0.5, 0.5), (-1.0, 1.0), &grid).unwrap();
        let n = grid.len();
        // x_i mirrors to x_{n-i}; index 0 has no mirror sample.
        for i in 1..n {
            let a = phi.samples()[i].re;
            let b = phi.samples()[n - i].re;
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_rejects_bad_nesting() {
        let grid = Grid::new(-2.0, 2.0, 64).unwrap();
        assert!(matches!(
            bump((-1.0, 1.0), (-0.5, 0.5), &grid),
            Err(SobolevError::CutoffNesting)
        ));
    }

    #[test]
    fn bump_discrete_derivative_bound() {
        // First discrete derivative max <= C / margin with C < 4: the
        // smoothstep slope peaks at 2 and the margin here is 0.5.
        let grid = Grid::new(-2.0, 2.0, 4096).unwrap();
        let phi = bump((-0.5, 0.5), (-1.0, 1.0), &grid).unwrap();
        let dx = grid.dx();
        let mut max_slope = 0.0f64;
        for w in phi.samples().windows(2) {
            max_slope = max_slope.max((w[1].re - w[0].re).abs() / dx);
        }
        let margin = 0.5;
        assert!(max_slope <= 4.0 / margin, "slope {max_slope}");
        // the analytic slope bound 2/margin is nearly attained
        assert!(max_slope > 1.5 / margin);
    }

    #[test]
    fn exhaustion_nesting_and_union() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), 3, false).unwrap();
        assert_eq!(exh.count(), 3);
        for j in 1..exh.count() {
            let cur = exh.level(j).unwrap();
            let next = exh.level(j + 1).unwrap();
            assert!(next.inner.0 < cur.inner.0 && cur.inner.1 < next.inner.1);
            let m_cur = cur.inner.0;
            let m_next = next.inner.0;
            assert!(m_next < m_cur, "margins shrink");
        }
    }

    #[test]
    fn exhaustion_closure_distance_rule() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), 4, true).unwrap();
        for level in exh.levels() {
            let jp = level.effective_index as f64;
            let lower_gap = level.inner.0;
            let upper_gap = PI - level.inner.1;
            assert!(lower_gap >= 2.0 / jp - 1e-12);
            assert!(upper_gap >= 2.0 / jp - 1e-12);
            // snapped endpoints stay within one sample of the nominal rule
            assert!(lower_gap < 2.0 / jp + grid.dx() + 1e-12);
        }
        // the offset index is the smallest with 2/j' < l(I)/2
        let j1 = (1 + exh.offset()) as f64;
        assert!(2.0 / j1 < PI / 2.0);
        if exh.offset() > 0 {
            assert!(2.0 / (j1 - 1.0) >= PI / 2.0);
        }
    }

    #[test]
    fn exhaustion_rejects_unbounded_or_empty() {
        let grid = Grid::new(-8.0, 8.0, 256).unwrap();
        assert!(make_exhaustion(&grid, (1.0, 1.0), 2, false).is_err());
        assert!(make_exhaustion(&grid, (0.0, f64::INFINITY), 2, false).is_err());
    }

    #[test]
    fn seminorm_equals_l2_for_interior_support() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), 4, false).unwrap();
        let (a1, b1) = exh.level(1).unwrap().inner;
        let mid = 0.5 * (a1 + b1);
        let half = 0.25 * (b1 - a1);
        // smooth, supported strictly inside [a_1, b_1]
        let cutoff = Cutoff::new(
            (mid - 0.5 * half, mid + 0.5 * half),
            (mid - half, mid + half),
        )
        .unwrap();
        let u = GridFunction::from_real_fn(grid.clone(), |x| cutoff.value(x) * (2.0 * x).sin());
        let l2 = u.l2_norm();
        for j in 1..=4 {
            let p = seminorm(&u, &exh, j, SobolevIndex::new(0.0).unwrap()).unwrap();
            assert!((p - l2).abs() < 1e-8, "j = {j}: {p} vs {l2}");
        }
    }

    #[test]
    fn seminorm_of_zero_function() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 1024).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), 2, false).unwrap();
        let u = GridFunction::zeros(grid);
        assert_eq!(
            seminorm(&u, &exh, 1, SobolevIndex::new(0.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn seminorms_of_locally_square_integrable_pole_increase() {
        // u = 1/(x (pi - x)) lies in L^2_loc(0, pi) but not in L^2(0, pi):
        // every seminorm is finite and they grow strictly with j.
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), 5, false).unwrap();
        let u = GridFunction::from_real_fn(grid.clone(), |x| {
            if x > 0.0 && x < PI {
                1.0 / (x * (PI - x))
            } else {
                0.0
            }
        });
        let mut prev = 0.0;
        for j in 1..=5 {
            let p = seminorm(&u, &exh, j, SobolevIndex::new(0.0).unwrap()).unwrap();
            assert!(p.is_finite());
            assert!(p > prev, "j = {j}");
            prev = p;
        }
    }

    #[test]
    fn restriction_half_weights_give_trapezoid() {
        let grid = Grid::new(0.0, 4.0, 256).unwrap();
        let a = grid.x(32);
        let b = grid.x(160);
        let v = GridFunction::from_real_fn(grid.clone(), |x| x * x);
        let restricted = restrict_to_interval(&v, (a, b));
        let total = restricted.integral().re;
        let exact = (b.powi(3) - a.powi(3)) / 3.0;
        // trapezoid error for x^2 is (b-a) dx^2 / 6 exactly
        let dx = grid.dx();
        let trap_err = (b - a) * dx * dx / 6.0;
        assert!((total - exact - trap_err).abs() < 1e-10);
    }

    #[test]
    fn csv_and_envelope_serialization() {
        let grid = Grid::new(0.0, 1.0, 16).unwrap();
        let u = GridFunction::from_fn(grid.clone(), |x| C64::new(x, -x));
        let csv = u.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,re,im"));
        assert_eq!(lines.count(), 16);
        let envelope = u.envelope();
        let json = serde_json::to_value(&envelope).unwrap();
        assert_eq!(json["samples"], 16);
        assert_eq!(json["window"][1], 1.0);
        assert_eq!(json["values"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn smoothness_audit_flags_indicator_at_s1() {
        let grid = gaussian_grid();
        let smooth = GridFunction::from_real_fn(grid.clone(), |x| (-PI * x * x).exp());
        let rough = GridFunction::from_real_fn(grid, |x| if x.abs() < 0.5 { 1.0 } else { 0.0 });
        let s = SobolevIndex::new(1.0).unwrap();
        assert!(smoothness_audit(&smooth, s).unwrap().ok());
        assert!(!smoothness_audit(&rough, s).unwrap().ok());
        assert!(smoothness_audit(&rough, SobolevIndex::new(0.0).unwrap()).is_none());
    }

    #[test]
    fn edge_audit_reports_window_leakage() {
        let grid = Grid::new(-1.0, 1.0, 128).unwrap();
        let leaky = GridFunction::from_real_fn(grid.clone(), |x| x);
        let tight = GridFunction::from_real_fn(grid, |x| (-40.0 * x * x).exp());
        assert!(!periodization_audit(&leaky, 1e-8).ok());
        assert!(periodization_audit(&tight, 1e-6).ok());
    }
}
