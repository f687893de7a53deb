//! The closure construction: null extension, truncation to the nested
//! intervals, mollification, and distributional derivatives with endpoint
//! delta terms.
//!
//! For a function u on I = (b, c) the construction forms `g_j = chi_{I_j} u_e`
//! and `u_j = phi_j * g_j` (convolution with a shrinking mollifier). Its
//! distributional derivatives pick up signed delta terms at the interval
//! endpoints:
//!
//! `g_j^(k) = chi_{I_j} u^(k)
//!          + sum_{l=0}^{k-1} ( u^(l)(a_j) delta_{a_j}^(k-1-l)
//!                            - u^(l)(b_j) delta_{b_j}^(k-1-l) )`.
//!
//! Delta terms are never gridded; they stay symbolic and act on test
//! functions through `<delta_p^(r), psi> = (-1)^r psi^(r)(p)`. The module
//! also carries the two numeric convergence checks: seminorm decay of
//! `u - u_j` and the exact vanishing of the mollified boundary terms once
//! their supports leave a fixed cutoff.

use std::ops::RangeInclusive;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::MollifyError;
use crate::jet::bump_profile_jet;
use crate::profiles::SmoothFn;
use crate::sobolev::{
    hs_norm, raw_fft, restrict_to_interval, sample_on_interval, seminorm, Exhaustion, Grid,
    GridFunction, SobolevIndex,
};
use crate::C64;

/// Null extension of a function on I by zero to the whole window.
/// Samples exactly on the boundary of I get 0.
#[derive(Clone, Debug)]
pub struct NullExtension {
    interval: (f64, f64),
    extended: GridFunction,
}

impl NullExtension {
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn extended(&self) -> &GridFunction {
        &self.extended
    }
}

/// Extend `u` on the open interval by zero to the full grid window.
pub fn null_extend(u: impl Fn(f64) -> C64, interval: (f64, f64), grid: &Grid) -> NullExtension {
    let (b, c) = interval;
    let extended = GridFunction::from_fn(grid.clone(), |x| {
        if x > b && x < c {
            u(x)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    NullExtension { interval, extended }
}

// base constant of the unit bump: 1 / integral_{-1}^{1} exp(-1/(1-t^2)) dt
static BASE_CONSTANT: OnceLock<f64> = OnceLock::new();

fn base_constant() -> f64 {
    *BASE_CONSTANT.get_or_init(|| {
        let f = |t: f64| bump_profile_jet(t, 0).value();
        1.0 / adaptive_simpson(&f, -1.0, 1.0, 1e-13, 40)
    })
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// Mollifier `phi_j(x) = j c exp(-1/(1 - (j x)^2))` supported in
/// `(-1/j, 1/j)`, nonnegative with unit mass.
#[derive(Clone, Debug)]
pub struct Mollifier {
    index: usize,
    halfwidth: f64,
    base_constant: f64,
    grid_integral: f64,
}

impl Mollifier {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn base_constant(&self) -> f64 {
        self.base_constant
    }

    /// Trapezoid mass on the sample lattice; the construction guarantees
    /// `|grid_integral - 1| <= 1e-8`.
    pub fn grid_integral(&self) -> f64 {
        self.grid_integral
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// r-th derivative, exactly `0.0` outside the open support.
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        let j = self.index as f64;
        let jet = bump_profile_jet(j * x, order);
        j * self.base_constant * jet.derivative(order) * j.powi(order as i32)
    }

    /// Kernel samples arranged circularly on the offset lattice
    /// `0, dx, ..., -2dx, -dx`, ready for FFT convolution.
    fn wrapped_kernel(&self, grid: &Grid) -> Vec<C64> {
        let n = grid.len();
        let dx = grid.dx();
        let mut kernel = vec![C64::new(0.0, 0.0); n];
        let reach = (self.halfwidth / dx).ceil() as usize;
        for k in 0..=reach.min(n / 2) {
            let v = self.value(k as f64 * dx);
            kernel[k] = C64::new(v, 0.0);
            if k > 0 {
                kernel[n - k] = C64::new(self.value(-(k as f64) * dx), 0.0);
            }
        }
        kernel
    }
}

/// Build the index-`j` mollifier, requiring the grid to resolve its support
/// with at least 32 samples and reproduce unit mass to 1e-8.
pub fn make_mollifier(j: usize, grid: &Grid) -> Result<Mollifier, MollifyError> {
    if j == 0 {
        return Err(MollifyError::Resolution { index: j });
    }
    let halfwidth = 1.0 / j as f64;
    let dx = grid.dx();
    let samples_across = (2.0 * halfwidth / dx).floor() as usize;
    if samples_across < 32 {
        return Err(MollifyError::Resolution { index: j });
    }
    let mut m = Mollifier {
        index: j,
        halfwidth,
        base_constant: base_constant(),
        grid_integral: 0.0,
    };
    // mass on the offset lattice; the profile vanishes at the support ends,
    // so the plain sum is the trapezoid rule
    let reach = (halfwidth / dx).ceil() as i64;
    let mut mass = 0.0;
    for k in -reach..=reach {
        mass += m.value(k as f64 * dx);
    }
    m.grid_integral = mass * dx;
    if (m.grid_integral - 1.0).abs() > 1e-8 {
        return Err(MollifyError::Resolution { index: j });
    }
    Ok(m)
}

/// Circular FFT convolution `dx * sum_m g[m] kernel[(n - m) mod N]`.
/// The caller guarantees the supports cannot wrap across the window.
pub fn convolve(mollifier: &Mollifier, g: &GridFunction) -> GridFunction {
    let grid = g.grid().clone();
    let n = grid.len();
    let mut gh = g.samples().to_vec();
    let mut kh = mollifier.wrapped_kernel(&grid);
    raw_fft(&mut gh, true);
    raw_fft(&mut kh, true);
    let scale = grid.dx() / n as f64;
    for (a, b) in gh.iter_mut().zip(&kh) {
        *a *= b * scale;
    }
    raw_fft(&mut gh, false);
    GridFunction::from_samples(grid, gh).expect("convolution preserves length")
}

/// `u_j = phi_j * (chi_{I_j} u_e)`, by frequency-side multiplication.
///
/// The result is compactly supported in `[a_j - 1/j', b_j + 1/j']`, strictly
/// inside I by the closure distance rule; samples outside that support are
/// set to exact zero (they carry only FFT roundoff).
pub fn mollified_truncation(
    u_e: &NullExtension,
    exh: &Exhaustion,
    j: usize,
) -> Result<GridFunction, MollifyError> {
    if !exh.closure_rule() {
        return Err(MollifyError::ClosureRuleRequired);
    }
    let level = exh.level(j)?;
    let mollifier = make_mollifier(level.effective_index, exh.grid())?;
    let hw = mollifier.halfwidth();
    let (w_lo, w_hi) = exh.grid().window();
    let (b, c) = exh.interval();
    let margin = (b - w_lo).min(w_hi - c);
    if margin <= hw {
        return Err(MollifyError::PaddingTooSmall {
            margin,
            halfwidth: hw,
        });
    }
    let g_j = restrict_to_interval(u_e.extended(), level.inner);
    let mut out = convolve(&mollifier, &g_j);
    let (a_j, b_j) = level.inner;
    let grid = out.grid().clone();
    for (i, x) in grid.points().enumerate() {
        if x <= a_j - hw || x >= b_j + hw {
            out.samples_mut()[i] = C64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

/// A weighted Dirac derivative `weight * delta_point^(order)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaTerm {
    pub point: f64,
    pub order: usize,
    pub weight: C64,
}

/// Distributional derivative of a truncation `g_j`: a regular grid part
/// `chi_{I_j} u^(k)` plus endpoint delta terms.
#[derive(Clone, Debug)]
pub struct DistributionalDerivative {
    pub order: usize,
    pub interval: (f64, f64),
    pub regular: GridFunction,
    pub deltas: Vec<DeltaTerm>,
}

/// Endpoint traces and regular part of `g_j^(k)` per the induction formula.
/// Derivatives come from the profile's analytic closure when present, else
/// from one-sided finite differences pointing into the interval.
pub fn distributional_derivative(
    u: &SmoothFn,
    exh: &Exhaustion,
    j: usize,
    k: usize,
) -> Result<DistributionalDerivative, MollifyError> {
    if k == 0 {
        return Err(MollifyError::ZeroOrder);
    }
    let level = exh.level(j)?;
    let (a_j, b_j) = level.inner;
    let grid = exh.grid();
    let h = grid.dx();

    let regular = sample_on_interval(grid, (a_j, b_j), |x| {
        interior_derivative(u, k, x, a_j, b_j, h)
    });

    let mut deltas = Vec::with_capacity(2 * k);
    for l in 0..k {
        let r = k - 1 - l;
        deltas.push(DeltaTerm {
            point: a_j,
            order: r,
            weight: u.derivative_one_sided(l, a_j, h, 1.0),
        });
        deltas.push(DeltaTerm {
            point: b_j,
            order: r,
            weight: -u.derivative_one_sided(l, b_j, h, -1.0),
        });
    }
    Ok(DistributionalDerivative {
        order: k,
        interval: (a_j, b_j),
        regular,
        deltas,
    })
}

// Derivative of u at an interior sample; the finite-difference fallback
// keeps its stencil inside [a, b].
fn interior_derivative(u: &SmoothFn, k: usize, x: f64, a: f64, b: f64, h: f64) -> C64 {
    if let Some(v) = u.derivative(k, x) {
        return v;
    }
    let span = (k + 4) as f64 * h;
    if x - a < span {
        u.derivative_one_sided(k, x, h, 1.0)
    } else if b - x < span {
        u.derivative_one_sided(k, x, h, -1.0)
    } else {
        // centered stencil
        let nodes: Vec<f64> = (-((k as i64 + 3) / 2)..=((k as i64 + 4) / 2))
            .map(|i| x + i as f64 * h)
            .collect();
        let w = crate::profiles::fornberg_weights(&nodes, x, k);
        nodes
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| u.eval(xi) * C64::new(wi, 0.0))
            .sum()
    }
}

/// Pair a distributional derivative against a smooth test function:
/// quadrature of the regular part plus
/// `sum weight * (-1)^r psi^(r)(point)`. Test-function derivatives are
/// analytic when available, else spectral (the delta points are grid
/// samples by construction).
pub fn pair_distribution(d: &DistributionalDerivative, psi: &SmoothFn) -> C64 {
    let grid = d.regular.grid().clone();
    let psi_grid = GridFunction::from_fn(grid.clone(), |x| psi.eval(x));
    let regular_part = d
        .regular
        .pointwise_mul(&psi_grid)
        .expect("same grid")
        .integral();

    let max_order = d.deltas.iter().map(|t| t.order).max().unwrap_or(0);
    let spectral: Vec<GridFunction> = if psi.has_analytic_derivatives() {
        Vec::new()
    } else {
        (0..=max_order)
            .map(|r| crate::sobolev::spectral_derivative(&psi_grid, r))
            .collect()
    };

    let mut delta_part = C64::new(0.0, 0.0);
    for term in &d.deltas {
        let psi_r = match psi.derivative(term.order, term.point) {
            Some(v) => v,
            None => {
                let idx = grid
                    .first_index_at_or_above(term.point)
                    .expect("delta points are grid samples");
                spectral[term.order].samples()[idx]
            }
        };
        let sign = if term.order % 2 == 0 { 1.0 } else { -1.0 };
        delta_part += term.weight * psi_r * C64::new(sign, 0.0);
    }
    regular_part + delta_part
}

/// Seminorm decay of `u - u_j` over a range of construction indices.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub s: usize,
    pub seminorm_index: usize,
    pub tolerance: f64,
    /// (j, p_k^(s)(u - u_j))
    pub entries: Vec<(usize, f64)>,
    /// First index from which every value stays below tolerance.
    pub first_below: Option<usize>,
    pub pass: bool,
}

/// Evaluate `p_k^(s)(u - u_j)` over `j_range`; passes when the tail falls
/// below `tolerance`.
pub fn verify_closure_convergence(
    u: &SmoothFn,
    exh: &Exhaustion,
    s: usize,
    k: usize,
    j_range: RangeInclusive<usize>,
    tolerance: f64,
) -> Result<ConvergenceReport, MollifyError> {
    let u_e = null_extend(|x| u.eval(x), exh.interval(), exh.grid());
    let s_index = SobolevIndex::new(s as f64).expect("integer index is finite");
    let mut entries = Vec::new();
    for j in j_range {
        let u_j = mollified_truncation(&u_e, exh, j)?;
        let diff = u_e.extended().sub(&u_j)?;
        let value = seminorm(&diff, exh, k, s_index)?;
        entries.push((j, value));
    }
    let first_below = entries
        .iter()
        .position(|(_, v)| *v < tolerance)
        .filter(|&pos| entries[pos..].iter().all(|(_, v)| *v < tolerance))
        .map(|pos| entries[pos].0);
    let pass = first_below.is_some();
    Ok(ConvergenceReport {
        s,
        seminorm_index: k,
        tolerance,
        entries,
        first_below,
        pass,
    })
}

/// Decay record of one mollified boundary-term sequence.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub derivative_order: usize,
    pub trace_order: usize,
    pub s: usize,
    pub fixed_index: usize,
    /// (j, value at a_j-sequence, value at b_j-sequence)
    pub entries: Vec<(usize, f64, f64)>,
    /// First index from which the mollifier balls miss the fixed cutoff's
    /// support; values must be exactly zero from here on.
    pub crossover: Option<usize>,
    pub pass: bool,
}

/// Seminorm `p_fixed^(s)` of the mollified delta-term sequences
/// `u^(l)(a_j) phi_j^(k-1-l)(. - a_j)` (and the b_j mirror) over `j_range`.
/// Past the geometric crossover the supports leave the fixed cutoff and the
/// values vanish exactly.
pub fn verify_boundary_decay(
    u: &SmoothFn,
    exh: &Exhaustion,
    k: usize,
    l: usize,
    s: usize,
    fixed_index: usize,
    j_range: RangeInclusive<usize>,
) -> Result<DecayReport, MollifyError> {
    if k == 0 {
        return Err(MollifyError::ZeroOrder);
    }
    if l >= k {
        return Err(MollifyError::OrderBound {
            order: l,
            bound: k - 1,
        });
    }
    if !exh.closure_rule() {
        return Err(MollifyError::ClosureRuleRequired);
    }
    let r = k - 1 - l;
    let fixed = exh.level(fixed_index)?;
    let support = fixed.cutoff.support();
    let grid = exh.grid();
    let h = grid.dx();
    let s_index = SobolevIndex::new(s as f64).expect("integer index is finite");

    let mut entries = Vec::new();
    let mut crossover = None;
    for j in j_range {
        let level = exh.level(j)?;
        let (a_j, b_j) = level.inner;
        let eff = level.effective_index;
        let hw = 1.0 / eff as f64;
        let mollifier = make_mollifier(eff, grid)?;

        let trace_a = u.derivative_one_sided(l, a_j, h, 1.0);
        let trace_b = u.derivative_one_sided(l, b_j, h, -1.0);
        let term_a =
            GridFunction::from_fn(grid.clone(), |x| trace_a * mollifier.derivative(r, x - a_j));
        let term_b =
            GridFunction::from_fn(grid.clone(), |x| trace_b * mollifier.derivative(r, x - b_j));
        let value_a = hs_norm(&fixed.cutoff_samples().pointwise_mul(&term_a)?, s_index);
        let value_b = hs_norm(&fixed.cutoff_samples().pointwise_mul(&term_b)?, s_index);
        entries.push((j, value_a, value_b));

        // B_{1/j'}(a_j) and B_{1/j'}(b_j) both clear of supp phi_fixed
        let disjoint = a_j + hw <= support.0 && b_j - hw >= support.1;
        if disjoint && crossover.is_none() {
            crossover = Some(j);
        }
    }
    let pass = match crossover {
        Some(j0) => entries
            .iter()
            .filter(|(j, _, _)| *j >= j0)
            .all(|(_, va, vb)| *va == 0.0 && *vb == 0.0),
        None => false,
    };
    Ok(DecayReport {
        derivative_order: k,
        trace_order: l,
        s,
        fixed_index,
        entries,
        crossover,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles;
    use crate::sobolev::{make_exhaustion, spectral_derivative, Grid};
    use std::f64::consts::PI;

    fn setup(n: usize, depth: usize) -> (Grid, Exhaustion) {
        let grid = Grid::for_interval((0.0, PI), 0.25, n).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), depth, true).unwrap();
        (grid, exh)
    }

    #[test]
    fn null_extension_of_one_is_indicator() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 1024).unwrap();
        let ext = null_extend(|_| C64::new(1.0, 0.0), (0.0, PI), &grid);
        for (x, v) in grid.points().zip(ext.extended().samples()) {
            if x > 0.0 && x < PI {
                assert_eq!(v.re, 1.0);
            } else {
                assert_eq!(v.re, 0.0);
            }
        }
        // value left of the interval
        assert_eq!(
            ext.extended().samples()[grid.first_index_at_or_above(-0.5).unwrap()],
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn null_extension_preserves_l2_mass() {
        // ||u_e||_{L^2(window)} = ||u||_{L^2(I)} for u = sin; the right side
        // is integral_0^pi sin^2 = pi/2.
        let grid = Grid::for_interval((0.0, PI), 0.25, 32768).unwrap();
        let ext = null_extend(|x| C64::new(x.sin(), 0.0), (0.0, PI), &grid);
        let lhs = ext.extended().l2_norm();
        let rhs = (PI / 2.0).sqrt();
        assert!((lhs - rhs).abs() < 1e-8, "diff {}", (lhs - rhs).abs());
    }

    #[test]
    fn mollifier_mass_and_support() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let m = make_mollifier(4, &grid).unwrap();
        assert!((m.grid_integral() - 1.0).abs() < 1e-8);
        assert!((m.base_constant() - 2.25228).abs() < 1e-4);
        // exact zeros at and beyond the support boundary
        assert_eq!(m.value(0.25), 0.0);
        assert_eq!(m.value(-0.3), 0.0);
        assert!(m.value(0.0) > 0.0);
        // evenness at mirrored samples
        for k in 1..20 {
            let x = k as f64 * grid.dx();
            assert_eq!(m.value(x), m.value(-x));
        }
        // nonnegativity across the support
        for k in -900..=900 {
            assert!(m.value(k as f64 * grid.dx() * 0.001) >= 0.0);
        }
    }

    #[test]
    fn mollifier_under_resolved_errors() {
        let grid = Grid::new(-4.0, 4.0, 64).unwrap();
        assert!(matches!(
            make_mollifier(10, &grid),
            Err(MollifyError::Resolution { index: 10 })
        ));
    }

    #[test]
    fn convolution_against_direct_sum() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let m = make_mollifier(6, &grid).unwrap();
        let g = GridFunction::from_real_fn(grid.clone(), |x| {
            if (0.8..=2.0).contains(&x) {
                (2.0 * x).cos()
            } else {
                0.0
            }
        });
        let fftc = convolve(&m, &g);
        // direct O(N K) circular convolution at a few probe points
        let n = grid.len();
        let dx = grid.dx();
        for probe in [900usize, 1400, 2000] {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let offset_idx = (probe + n - k) % n;
                let offset = if offset_idx <= n / 2 {
                    offset_idx as f64 * dx
                } else {
                    (offset_idx as i64 - n as i64) as f64 * dx
                };
                acc += g.samples()[k] * m.value(offset);
            }
            acc *= C64::new(dx, 0.0);
            assert!((fftc.samples()[probe] - acc).norm() < 1e-10);
        }
    }

    #[test]
    fn truncation_of_one_is_one_on_shrunk_plateau() {
        let (grid, exh) = setup(4096, 6);
        let ext = null_extend(|_| C64::new(1.0, 0.0), (0.0, PI), &grid);
        let j = 3;
        let u_j = mollified_truncation(&ext, &exh, j).unwrap();
        let level = exh.level(j).unwrap();
        let hw = 1.0 / level.effective_index as f64;
        let (a, b) = level.inner;
        for (x, v) in grid.points().zip(u_j.samples()) {
            if x > a + hw && x < b - hw {
                assert!((v.re - 1.0).abs() < 1e-9, "plateau at {x}: {v}");
            }
        }
    }

    #[test]
    fn truncation_support_strictly_inside_interval() {
        let (grid, exh) = setup(4096, 6);
        let ext = null_extend(|x| C64::new(x.sin(), 0.0), (0.0, PI), &grid);
        for j in 1..=6 {
            let u_j = mollified_truncation(&ext, &exh, j).unwrap();
            let eff = exh.level(j).unwrap().effective_index as f64;
            for (x, v) in grid.points().zip(u_j.samples()) {
                // exact zero within half a mollifier width of the boundary
                if x <= 0.5 / eff || x >= PI - 0.5 / eff {
                    assert_eq!(v.norm(), 0.0, "support leak at {x}, j = {j}");
                }
            }
        }
    }

    #[test]
    fn truncation_support_clamp_removes_only_roundoff() {
        let (grid, exh) = setup(4096, 4);
        let ext = null_extend(|x| C64::new(x.sin(), 0.0), (0.0, PI), &grid);
        let level = exh.level(2).unwrap();
        let mollifier = make_mollifier(level.effective_index, &grid).unwrap();
        let g_j = restrict_to_interval(ext.extended(), level.inner);
        let raw = convolve(&mollifier, &g_j);
        let hw = mollifier.halfwidth();
        let mut residue = 0.0f64;
        for (x, v) in grid.points().zip(raw.samples()) {
            if x <= level.inner.0 - hw || x >= level.inner.1 + hw {
                residue = residue.max(v.norm());
            }
        }
        assert!(residue < 1e-10, "clamped residue {residue}");
    }

    #[test]
    fn truncation_of_zero_is_zero() {
        let (grid, exh) = setup(4096, 3);
        let ext = null_extend(|_| C64::new(0.0, 0.0), (0.0, PI), &grid);
        let u_j = mollified_truncation(&ext, &exh, 2).unwrap();
        assert!(u_j.samples().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn truncation_requires_closure_rule() {
        let grid = Grid::for_interval((0.0, PI), 0.25, 4096).unwrap();
        let exh = make_exhaustion(&grid, (0.0, PI), 3, false).unwrap();
        let ext = null_extend(|_| C64::new(1.0, 0.0), (0.0, PI), &grid);
        assert!(matches!(
            mollified_truncation(&ext, &exh, 1),
            Err(MollifyError::ClosureRuleRequired)
        ));
    }

    #[test]
    fn derivative_of_constant_truncation() {
        // u = 1, k = 1: regular part 0, terms +delta_{a_j} - delta_{b_j}
        let (_, exh) = setup(4096, 4);
        let d = distributional_derivative(&profiles::constant(1.0), &exh, 2, 1).unwrap();
        assert!(d.regular.samples().iter().all(|v| v.norm() == 0.0));
        assert_eq!(d.deltas.len(), 2);
        let (a, b) = d.interval;
        assert_eq!(d.deltas[0].point, a);
        assert_eq!(d.deltas[0].order, 0);
        assert!((d.deltas[0].weight - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(d.deltas[1].point, b);
        assert!((d.deltas[1].weight + C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn derivative_of_linear_truncation() {
        // u = x, k = 1: regular part chi, terms +a delta_a - b delta_b
        let (grid, exh) = setup(4096, 4);
        let d = distributional_derivative(&profiles::linear(), &exh, 2, 1).unwrap();
        let (a, b) = d.interval;
        for (x, v) in grid.points().zip(d.regular.samples()) {
            if x > a + grid.dx() && x < b - grid.dx() {
                assert!((v.re - 1.0).abs() < 1e-12);
            }
        }
        assert!((d.deltas[0].weight - C64::new(a, 0.0)).norm() < 1e-10);
        assert!((d.deltas[1].weight + C64::new(b, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn second_derivative_delta_layout() {
        // k = 2: delta' with weights u(a), -u(b); delta with u'(a), -u'(b)
        let (_, exh) = setup(4096, 4);
        let u = profiles::sine();
        let d = distributional_derivative(&u, &exh, 2, 2).unwrap();
        let (a, b) = d.interval;
        let find = |point: f64, order: usize| {
            d.deltas
                .iter()
                .find(|t| t.point == point && t.order == order)
                .copied()
                .unwrap()
        };
        assert!((find(a, 1).weight - C64::new(a.sin(), 0.0)).norm() < 1e-12);
        assert!((find(b, 1).weight + C64::new(b.sin(), 0.0)).norm() < 1e-12);
        assert!((find(a, 0).weight - C64::new(a.cos(), 0.0)).norm() < 1e-12);
        assert!((find(b, 0).weight + C64::new(b.cos(), 0.0)).norm() < 1e-12);
        assert!(matches!(
            distributional_derivative(&u, &exh, 2, 0),
            Err(MollifyError::ZeroOrder)
        ));
    }

    #[test]
    fn pair_single_delta_prime() {
        // <delta_p', psi> = -psi'(p) with unit weight
        let (grid, exh) = setup(4096, 4);
        let level = exh.level(1).unwrap();
        let p = level.inner.0;
        let d = DistributionalDerivative {
            order: 1,
            interval: level.inner,
            regular: GridFunction::zeros(grid.clone()),
            deltas: vec![DeltaTerm {
                point: p,
                order: 1,
                weight: C64::new(1.0, 0.0),
            }],
        };
        let psi = profiles::sine();
        let v = pair_distribution(&d, &psi);
        assert!((v + C64::new(p.cos(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weak_derivative_identity_for_sine() {
        // <g_j', psi> = -<g_j, psi'> with the right side by direct quadrature
        let (grid, exh) = setup(4096, 4);
        let u = profiles::sine();
        let j = 2;
        let d = distributional_derivative(&u, &exh, j, 1).unwrap();
        let psi = profiles::compact_bump(1.3, 1.4, 1.1);
        let lhs = pair_distribution(&d, &psi);
        let g_j = sample_on_interval(&grid, d.interval, |x| u.eval(x));
        let psi_prime = GridFunction::from_fn(grid.clone(), |x| psi.derivative(1, x).unwrap());
        let rhs = -g_j.pointwise_mul(&psi_prime).unwrap().integral();
        assert!((lhs - rhs).norm() < 1e-6, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn deltas_vanish_for_distant_test_function() {
        let (_, exh) = setup(4096, 4);
        let u = profiles::sine();
        let d = distributional_derivative(&u, &exh, 1, 2).unwrap();
        let (a, b) = d.interval;
        // bump supported well inside (a, b)
        let mid = 0.5 * (a + b);
        let psi = profiles::compact_bump(1.0, mid, 0.25 * (b - a));
        let delta_only: C64 = d
            .deltas
            .iter()
            .map(|t| {
                let sign = if t.order % 2 == 0 { 1.0 } else { -1.0 };
                t.weight * psi.derivative(t.order, t.point).unwrap() * C64::new(sign, 0.0)
            })
            .sum();
        assert_eq!(delta_only, C64::new(0.0, 0.0));
    }

    #[test]
    fn two_route_derivative_of_truncation() {
        // d^k u_j via spectral differentiation equals
        // phi_j * regular + sum weight phi_j^(r)(. - p) within 1e-5.
        // The gap between the routes is the O(dx^2) jump-quadrature error of
        // the frequency-side convolution, so this runs on a fine grid.
        let (grid, exh) = setup(131072, 6);
        let u = profiles::sine();
        let j = 3;
        let k = 2;
        let ext = null_extend(|x| u.eval(x), (0.0, PI), &grid);
        let u_j = mollified_truncation(&ext, &exh, j).unwrap();
        let route1 = spectral_derivative(&u_j, k);

        let d = distributional_derivative(&u, &exh, j, k).unwrap();
        let level = exh.level(j).unwrap();
        let mollifier = make_mollifier(level.effective_index, &grid).unwrap();
        let mut route2 = convolve(&mollifier, &d.regular);
        for t in &d.deltas {
            let shifted = GridFunction::from_fn(grid.clone(), |x| {
                t.weight * mollifier.derivative(t.order, x - t.point)
            });
            route2 = route2.add(&shifted).unwrap();
        }
        let err = route1
            .sub(&route2)
            .unwrap()
            .samples()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "two-route mismatch {err}");
    }

    #[test]
    fn closure_convergence_for_sine() {
        let (_, exh) = setup(4096, 16);
        let u = profiles::sine();
        let report = verify_closure_convergence(&u, &exh, 0, 1, 1..=16, 1e-3).unwrap();
        assert!(report.pass, "entries {:?}", report.entries);
        assert!(report.first_below.unwrap() <= 16);
        // monotone nonincreasing after the crossover index
        let from = report
            .entries
            .iter()
            .position(|(j, _)| Some(*j) == report.first_below)
            .unwrap();
        for w in report.entries[from..].windows(2) {
            assert!(w[1].1 <= w[0].1 * 1.5 + 1e-12);
        }
    }

    #[test]
    fn closure_convergence_of_zero_function() {
        let (_, exh) = setup(4096, 6);
        let report =
            verify_closure_convergence(&profiles::constant(0.0), &exh, 0, 1, 1..=6, 1e-3).unwrap();
        assert!(report.entries.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn closure_convergence_for_locally_integrable_pole() {
        // u = 1/(x (pi - x)) is not in L^2(I), but the local topology only
        // sees phi_k u: the convergence report still decreases below 1e-2.
        let (_, exh) = setup(8192, 12);
        let u = profiles::edge_singular(PI);
        let report = verify_closure_convergence(&u, &exh, 0, 1, 1..=12, 1e-2).unwrap();
        assert!(report.pass, "entries {:?}", report.entries);
    }

    #[test]
    fn boundary_decay_crossover_is_exact() {
        let (_, exh) = setup(4096, 10);
        let u = profiles::sine();
        let report = verify_boundary_decay(&u, &exh, 2, 0, 0, 1, 1..=10).unwrap();
        assert!(report.pass, "report {:?}", report.entries);
        let j0 = report.crossover.unwrap();
        for (j, va, vb) in &report.entries {
            if *j >= j0 {
                assert_eq!(*va, 0.0);
                assert_eq!(*vb, 0.0);
            }
        }
        // pre-crossover values are finite and recorded
        assert!(report
            .entries
            .iter()
            .all(|(_, va, vb)| va.is_finite() && vb.is_finite()));
    }

    #[test]
    fn boundary_decay_with_vanishing_traces_is_identically_zero() {
        // zero endpoint traces make every mollified boundary term vanish
        let (_, exh) = setup(4096, 6);
        let u = profiles::constant(0.0);
        let report = verify_boundary_decay(&u, &exh, 2, 0, 0, 1, 1..=6).unwrap();
        assert!(report
            .entries
            .iter()
            .all(|(_, va, vb)| *va == 0.0 && *vb == 0.0));
    }

    #[test]
    fn boundary_decay_rejects_bad_orders() {
        let (_, exh) = setup(4096, 4);
        let u = profiles::sine();
        assert!(matches!(
            verify_boundary_decay(&u, &exh, 2, 2, 0, 1, 1..=3),
            Err(MollifyError::OrderBound { .. })
        ));
        assert!(matches!(
            verify_boundary_decay(&u, &exh, 0, 0, 0, 1, 1..=3),
            Err(MollifyError::ZeroOrder)
        ));
    }
}
