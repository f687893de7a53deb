//! Polynomial symbols `a(xi) = sum a_k xi^k` of constant-coefficient
//! differential operators and the certificates attached to them.
//!
//! The operator induced by a symbol is `a(D) = sum (2 pi i)^(-k) a_k d^k/dx^k`,
//! so that frequency-side multiplication by `a(xi)` realizes `a(D)` under the
//! transform convention of [`crate::sobolev`]. The formal transpose carries
//! coefficients `(-1)^k a_k`, equivalently the factor `(-2 pi i)^(-k)` in
//! x-space, and drives both `a(D)'` and the dual-side bookkeeping.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::SymbolError;
use crate::sobolev::{fourier, inverse_fourier, GridFunction};
use crate::C64;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Which induced polynomial a computation refers to: the operator itself
/// (`(2 pi i)^(-k) a_k`) or its formal transpose (`(-2 pi i)^(-k) a_k`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorSide {
    Direct,
    Transpose,
}

/// Complex coefficient vector `(a_0, ..., a_m)`, lowest degree first.
/// Serializes as a bare JSON array of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SymbolPoly {
    coeffs: Vec<C64>,
}

impl SymbolPoly {
    /// Coefficients lowest-degree first; for m >= 1 the leading coefficient
    /// must be nonzero (normalized order).
    pub fn new(coeffs: Vec<C64>) -> Result<Self, SymbolError> {
        if coeffs.is_empty() {
            return Err(SymbolError::EmptyCoefficients);
        }
        let m = coeffs.len() - 1;
        if m >= 1 && coeffs[m].norm() == 0.0 {
            return Err(SymbolError::ZeroLeadingCoefficient { order: m });
        }
        Ok(SymbolPoly { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self, SymbolError> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// The Laplacian symbol `a(xi) = -4 pi^2 xi^2`, i.e. `a(D) = d^2/dx^2`.
    pub fn laplacian() -> Self {
        SymbolPoly {
            coeffs: vec![
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-(TAU * TAU), 0.0),
            ],
        }
    }

    /// The symbol `a(xi) = 2 pi i xi`, i.e. `a(D) = d/dx`.
    pub fn first_derivative() -> Self {
        SymbolPoly {
            coeffs: vec![C64::new(0.0, 0.0), C64::new(0.0, TAU)],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Horner evaluation of `sum a_k z^k`.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation of the derivative symbol `a^(n)(z)`.
    pub fn eval_derivative(&self, n: usize, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in (n..self.coeffs.len()).rev() {
            let mut fall = 1.0;
            for i in 0..n {
                fall *= (k - i) as f64;
            }
            acc = acc * z + self.coeffs[k] * C64::new(fall, 0.0);
        }
        acc
    }

    /// Transpose coefficients `(-1)^k a_k`: the symbol whose operator action
    /// is `sum (-2 pi i)^(-k) a_k d^k/dx^k`. An involution.
    pub fn transpose(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
            .collect();
        SymbolPoly { coeffs }
    }

    /// x-space coefficients `c_k` with `a(D) = sum c_k d^k/dx^k` on the
    /// requested side.
    pub fn operator_coeffs(&self, side: OperatorSide) -> Vec<C64> {
        let base = match side {
            OperatorSide::Direct => C64::new(0.0, TAU),
            OperatorSide::Transpose => C64::new(0.0, -TAU),
        };
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| a / base.powu(k as u32))
            .collect()
    }
}

/// Roots of a characteristic polynomial, clustered into multiplicities.
#[derive(Clone, Debug, Serialize)]
pub struct CharacteristicRoots {
    /// (root, multiplicity), multiplicities summing to the degree.
    pub roots: Vec<(C64, usize)>,
    pub degree: usize,
    pub cluster_tolerance: f64,
}

impl CharacteristicRoots {
    pub fn multiplicity_sum(&self) -> usize {
        self.roots.iter().map(|(_, m)| m).sum()
    }

    /// Largest root modulus, 0 for an empty set.
    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|(r, _)| r.norm()).fold(0.0, f64::max)
    }
}

/// All roots of a polynomial given lowest-first coefficients, via the
/// companion-matrix eigenvalues of the monic normalization.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() == 0.0 {
        coeffs.pop();
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    if degree == 1 {
        return vec![-coeffs[0] / lead];
    }
    let mut companion = DMatrix::<C64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let (_, t) = companion.schur().unpack();
    t.diagonal().iter().copied().collect()
}

/// Cluster raw roots within `tol` into (root, multiplicity) pairs.
fn cluster_roots(mut raw: Vec<C64>, tol: f64) -> Vec<(C64, usize)> {
    raw.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for r in raw {
        match clusters
            .iter_mut()
            .find(|(center, _)| (*center - r).norm() <= tol)
        {
            Some((center, mult)) => {
                // running mean keeps the cluster centered
                let m = *mult as f64;
                *center = (*center * C64::new(m, 0.0) + r) / C64::new(m + 1.0, 0.0);
                *mult += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    clusters
}

/// Roots (with multiplicities) of `p_lambda(mu) = lambda - sum c_k mu^k`,
/// the exponents `mu` with `(lambda - a(D)) exp(mu x) = 0`; `side` selects
/// the transpose polynomial for adjoint-side roots.
pub fn characteristic_roots(
    sym: &SymbolPoly,
    lambda: C64,
    side: OperatorSide,
) -> Result<CharacteristicRoots, SymbolError> {
    let m = sym.order();
    if m == 0 {
        return Err(SymbolError::OrderZero);
    }
    let op = sym.operator_coeffs(side);
    let mut coeffs: Vec<C64> = op.iter().map(|c| -c).collect();
    coeffs[0] += lambda;
    let raw = polynomial_roots(&coeffs);
    let tol = 1e-7 * (1.0 + lambda.norm());
    let roots = cluster_roots(raw, tol);
    Ok(CharacteristicRoots {
        roots,
        degree: m,
        cluster_tolerance: tol,
    })
}

/// Ellipticity certificate: `|a(xi)| >= c |xi|^m` for `|xi| >= C`.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub elliptic: bool,
    /// Lower constant `c`.
    pub lower_constant: f64,
    /// Threshold radius `C`.
    pub threshold_radius: f64,
    /// (|xi|, margin `|a(xi)| - c |xi|^m`) on the audit grid.
    pub audit: Vec<(f64, f64)>,
    pub audit_pass: bool,
}

/// One-dimensional constant-coefficient ellipticity: holds exactly when the
/// leading coefficient is nonzero. The constants come from the triangle
/// inequality: `c = |a_m| / 2`, `C = max(1, 2 sum_{k<m} |a_k| / |a_m|)`,
/// audited on `|xi|` in `[C, 10 C]`.
pub fn ellipticity(sym: &SymbolPoly) -> Result<EllipticityReport, SymbolError> {
    let m = sym.order();
    if m == 0 {
        return Err(SymbolError::OrderZero);
    }
    let lead = sym.coeffs()[m].norm();
    let rest: f64 = sym.coeffs()[..m].iter().map(|c| c.norm()).sum();
    let c = lead / 2.0;
    let big_c = (2.0 * rest / lead).max(1.0);
    let mut audit = Vec::with_capacity(128);
    let mut pass = true;
    for i in 0..64 {
        let r = big_c * (1.0 + 9.0 * i as f64 / 63.0);
        for xi in [r, -r] {
            let margin = sym.eval(C64::new(xi, 0.0)).norm() - c * xi.abs().powi(m as i32);
            pass &= margin >= -1e-12 * (1.0 + c * r.powi(m as i32));
            audit.push((xi, margin));
        }
    }
    Ok(EllipticityReport {
        elliptic: lead != 0.0,
        lower_constant: c,
        threshold_radius: big_c,
        audit,
        audit_pass: pass,
    })
}

/// Audit grid for hypoellipticity: log-spaced frequencies up to `xi_max`.
#[derive(Clone, Copy, Debug)]
pub struct FrequencyAuditSpec {
    pub xi_max: f64,
    pub samples: usize,
}

impl Default for FrequencyAuditSpec {
    fn default() -> Self {
        FrequencyAuditSpec {
            xi_max: 1e3,
            samples: 256,
        }
    }
}

/// Hypoellipticity certificate built from the zero set of the symbol.
#[derive(Clone, Debug, Serialize)]
pub struct HypoellipticityReport {
    pub hypoelliptic: bool,
    /// Gain exponent estimate, least-squares slope of log d_P vs log |xi|
    /// over the last decade of the audit grid.
    pub delta: f64,
    pub delta_fit_residual: f64,
    /// Complex zeros of the symbol itself.
    pub zero_set: Vec<C64>,
    /// (xi, d_P(xi)) over the audit grid, d_P the distance from the real
    /// frequency to the zero set.
    pub distance_audit: Vec<(f64, f64)>,
    /// Max over the tail of `|a^(k)(xi)| |xi|^(delta k) / |a(xi)|`.
    pub derivative_ratio_bound: f64,
}

pub fn hypoellipticity(
    sym: &SymbolPoly,
    audit: &FrequencyAuditSpec,
) -> Result<HypoellipticityReport, SymbolError> {
    let m = sym.order();
    if m == 0 {
        return Err(SymbolError::OrderZero);
    }
    if audit.samples < 16 {
        return Err(SymbolError::AuditTooCoarse {
            min: 16,
            got: audit.samples,
        });
    }
    let zero_set = polynomial_roots(sym.coeffs());
    let root_bound = zero_set.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if audit.xi_max <= root_bound {
        return Err(SymbolError::TailTooShort {
            xi_max: audit.xi_max,
            root_bound,
        });
    }

    let xi_lo = (audit.xi_max * 1e-4).max(1e-6);
    let ratio = audit.xi_max / xi_lo;
    let distance_audit: Vec<(f64, f64)> = (0..audit.samples)
        .map(|i| {
            let t = i as f64 / (audit.samples - 1) as f64;
            let xi = xi_lo * ratio.powf(t);
            let d_p = zero_set
                .iter()
                .map(|z| (C64::new(xi, 0.0) - z).norm())
                .fold(f64::INFINITY, f64::min);
            (xi, d_p)
        })
        .collect();

    // delta: slope fit over the last decade, restricted to points past the
    // root bound where d_P is positive
    let tail: Vec<(f64, f64)> = distance_audit
        .iter()
        .filter(|(xi, d)| *xi >= audit.xi_max / 10.0 && *xi > root_bound && *d > 0.0)
        .map(|&(xi, d)| (xi.ln(), d.ln()))
        .collect();
    if tail.len() < 8 {
        return Err(SymbolError::TailTooShort {
            xi_max: audit.xi_max,
            root_bound,
        });
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = tail.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = tail.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let raw_slope = sxy / sxx;
    let delta_fit_residual = tail
        .iter()
        .map(|(x, y)| (y - my - raw_slope * (x - mx)).abs())
        .fold(0.0, f64::max);
    // the gain exponent is capped at 1; fitted excess is regression noise
    let delta = raw_slope.min(1.0);
    let fit_ok = raw_slope > 0.0 && raw_slope <= 1.0 + 0.05 && delta_fit_residual < 0.5;

    // derivative-ratio side of the certificate on the same tail
    let mut ratio_bound = 0.0f64;
    let mut ratios_tail_ok = true;
    let mut prev_ratio = f64::INFINITY;
    for (xi, _) in distance_audit
        .iter()
        .filter(|(xi, _)| *xi >= audit.xi_max / 10.0 && *xi > root_bound)
    {
        let z = C64::new(*xi, 0.0);
        let a_val = sym.eval(z).norm();
        if a_val == 0.0 {
            ratios_tail_ok = false;
            continue;
        }
        let mut worst: f64 = 0.0;
        for k in 1..=m {
            let r = sym.eval_derivative(k, z).norm() * xi.powf(delta * k as f64) / a_val;
            worst = worst.max(r);
        }
        ratio_bound = ratio_bound.max(worst);
        // bounded, non-growing ratios along the tail
        ratios_tail_ok &= worst <= prev_ratio * 1.05 + 1e-9;
        prev_ratio = worst;
    }

    Ok(HypoellipticityReport {
        hypoelliptic: fit_ok && ratios_tail_ok && ratio_bound.is_finite(),
        delta,
        delta_fit_residual,
        zero_set,
        distance_audit,
        derivative_ratio_bound: ratio_bound,
    })
}

/// Apply `a(D)` by frequency-side multiplication with `a(xi)`; exact to
/// spectral accuracy for band-limited input supported inside the window.
pub fn apply_operator(sym: &SymbolPoly, u: &GridFunction) -> GridFunction {
    apply_side(sym, u, OperatorSide::Direct)
}

/// Apply either `a(D)` or its formal transpose frequency-side.
pub fn apply_side(sym: &SymbolPoly, u: &GridFunction, side: OperatorSide) -> GridFunction {
    let effective = match side {
        OperatorSide::Direct => sym.clone(),
        OperatorSide::Transpose => sym.transpose(),
    };
    let mut spec = fourier(u);
    let freqs = spec.frequencies();
    for (v, xi) in spec.values_mut().iter_mut().zip(&freqs) {
        *v *= effective.eval(C64::new(*xi, 0.0));
    }
    inverse_fourier(&spec)
}
