//! Named smooth functions with derivative access.
//!
//! The closure-construction and distribution machinery needs trace values
//! `u^(l)(a_j)` and test functions with derivatives of several orders. A
//! [`SmoothFn`] bundles a value closure with an optional derivative closure;
//! real analytic profiles are built once through jet arithmetic so their
//! derivatives are exact. Missing derivatives fall back to one-sided finite
//! differences (Fornberg weights) where the caller controls the direction.

use std::sync::Arc;

use crate::jet::{bump_profile_jet, Jet};
use crate::C64;

type ValueFn = dyn Fn(f64) -> C64 + Send + Sync;
type DerivFn = dyn Fn(usize, f64) -> C64 + Send + Sync;

/// A scalar function on the line with optional exact derivatives.
#[derive(Clone)]
pub struct SmoothFn {
    name: String,
    value: Arc<ValueFn>,
    derivative: Option<Arc<DerivFn>>,
}

impl std::fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothFn")
            .field("name", &self.name)
            .field("analytic_derivatives", &self.derivative.is_some())
            .finish()
    }
}

impl SmoothFn {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> C64 + Send + Sync + 'static,
        derivative: impl Fn(usize, f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFn {
            name: name.into(),
            value: Arc::new(value),
            derivative: Some(Arc::new(derivative)),
        }
    }

    /// Value-only profile; endpoint traces will use finite differences.
    pub fn values_only(
        name: impl Into<String>,
        value: impl Fn(f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFn {
            name: name.into(),
            value: Arc::new(value),
            derivative: None,
        }
    }

    /// Real profile defined by a jet formula; all derivatives exact.
    pub fn from_real_jet(
        name: impl Into<String>,
        f: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        let f = Arc::new(f);
        let f2 = f.clone();
        SmoothFn {
            name: name.into(),
            value: Arc::new(move |x| C64::new(f(&Jet::variable(x, 0)).value(), 0.0)),
            derivative: Some(Arc::new(move |order, x| {
                C64::new(f2(&Jet::variable(x, order)).derivative(order), 0.0)
            })),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> C64 {
        (self.value)(x)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.derivative.is_some()
    }

    /// Exact derivative if available.
    pub fn derivative(&self, order: usize, x: f64) -> Option<C64> {
        if order == 0 {
            return Some(self.eval(x));
        }
        self.derivative.as_ref().map(|d| d(order, x))
    }

    /// Derivative at `x`, using the analytic closure when present and a
    /// one-sided finite difference of the given step and sign otherwise.
    /// `direction > 0` samples to the right of `x`.
    pub fn derivative_one_sided(&self, order: usize, x: f64, h: f64, direction: f64) -> C64 {
        if let Some(v) = self.derivative(order, x) {
            return v;
        }
        let step = h * direction.signum();
        one_sided_derivative(|y| self.eval(y), order, x, step)
    }
}

/// One-sided finite-difference derivative with 4th-order accuracy, nodes
/// `x, x + step, ..., x + (order + 4) step`.
pub fn one_sided_derivative(f: impl Fn(f64) -> C64, order: usize, x: f64, step: f64) -> C64 {
    let n_nodes = order + 5;
    let nodes: Vec<f64> = (0..n_nodes).map(|i| x + i as f64 * step).collect();
    let w = fornberg_weights(&nodes, x, order);
    nodes
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| f(xi) * C64::new(wi, 0.0))
        .sum()
}

/// Fornberg's algorithm: weights of the `order`-th derivative at `x0` on the
/// given nodes.
pub fn fornberg_weights(nodes: &[f64], x0: f64, order: usize) -> Vec<f64> {
    let n = nodes.len();
    let m = order;
    // w[j][k]: weight of node j for the k-th derivative
    let mut w = vec![vec![0.0; m + 1]; n];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[i][k] = c1 * (k as f64 * w[i - 1][k - 1] - c5 * w[i - 1][k]) / c2;
                }
                w[i][0] = -c1 * c5 * w[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                w[j][k] = (c4 * w[j][k] - k as f64 * w[j][k - 1]) / c3;
            }
            w[j][0] = c4 * w[j][0] / c3;
        }
        c1 = c2;
    }
    w.into_iter().map(|row| row[m]).collect()
}

/// u(x) = 1.
pub fn constant(value: f64) -> SmoothFn {
    SmoothFn::new(
        format!("const({value})"),
        move |_| C64::new(value, 0.0),
        move |order, _| {
            if order == 0 {
                C64::new(value, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        },
    )
}

/// u(x) = x.
pub fn linear() -> SmoothFn {
    SmoothFn::new(
        "x",
        |x| C64::new(x, 0.0),
        |order, x| match order {
            0 => C64::new(x, 0.0),
            1 => C64::new(1.0, 0.0),
            _ => C64::new(0.0, 0.0),
        },
    )
}

/// u(x) = sin x, derivatives cycling through cos, -sin, -cos.
pub fn sine() -> SmoothFn {
    SmoothFn::new(
        "sin",
        |x| C64::new(x.sin(), 0.0),
        |order, x| {
            let v = match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            };
            C64::new(v, 0.0)
        },
    )
}

/// u(x) = exp(xi0 x) for complex xi0; the witness profile.
pub fn complex_exponential(xi0: C64) -> SmoothFn {
    SmoothFn::new(
        format!("exp({xi0} x)"),
        move |x| (xi0 * x).exp(),
        move |order, x| xi0.powu(order as u32) * (xi0 * x).exp(),
    )
}

/// Compactly supported bump `amp * exp(-1/(1 - t^2))`, `t = (x - center)/halfwidth`,
/// supported on `[center - halfwidth, center + halfwidth]`.
pub fn compact_bump(amp: f64, center: f64, halfwidth: f64) -> SmoothFn {
    let name = format!("bump(amp={amp:.3}, c={center:.3}, h={halfwidth:.3})");
    SmoothFn::new(
        name,
        move |x| {
            let t = (x - center) / halfwidth;
            C64::new(amp * bump_profile_jet(t, 0).value(), 0.0)
        },
        move |order, x| {
            let t = (x - center) / halfwidth;
            let jet = bump_profile_jet(t, order);
            C64::new(
                amp * jet.derivative(order) / halfwidth.powi(order as i32),
                0.0,
            )
        },
    )
}

/// u(x) = 1/(x (c - x)): locally square integrable on (0, c) but not square
/// integrable up to the boundary. Values only; the closure checks never need
/// its endpoint traces.
pub fn edge_singular(c: f64) -> SmoothFn {
    SmoothFn::values_only(format!("1/(x({c:.3}-x))"), move |x| {
        if x > 0.0 && x < c {
            C64::new(1.0 / (x * (c - x)), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Look up a profile by the name used in job configurations.
pub fn by_name(name: &str, interval: (f64, f64)) -> Option<SmoothFn> {
    match name {
        "sin" => Some(sine()),
        "one" | "const" => Some(constant(1.0)),
        "x" | "linear" => Some(linear()),
        "edge_singular" => Some(edge_singular(interval.1)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_centered_stencils() {
        // classic 3-point second derivative on -1, 0, 1 scaled by h^2
        let nodes = [-1.0, 0.0, 1.0];
        let w = fornberg_weights(&nodes, 0.0, 2);
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] + 2.0).abs() < 1e-12);
        assert!((w[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_derivative_is_fourth_order() {
        let f = |x: f64| C64::new((1.3 * x).sin(), 0.0);
        let x0 = 0.4;
        let h = 1e-2;
        let d1 = one_sided_derivative(f, 1, x0, h);
        let exact = 1.3 * (1.3 * x0).cos();
        assert!(
            (d1.re - exact).abs() < 1e-9,
            "err {}",
            (d1.re - exact).abs()
        );
        let d2 = one_sided_derivative(f, 2, x0, -h);
        let exact2 = -1.3 * 1.3 * (1.3 * x0).sin();
        assert!((d2.re - exact2).abs() < 1e-7);
    }

    #[test]
    fn one_sided_exact_for_low_degree_polynomials() {
        let f = |x: f64| C64::new(x * x * x, 0.0);
        let d = one_sided_derivative(f, 1, 2.0, 0.05);
        assert!((d.re - 12.0).abs() < 1e-9);
    }

    #[test]
    fn named_profiles_derivatives() {
        let s = sine();
        assert!((s.derivative(2, 0.7).unwrap().re + 0.7f64.sin()).abs() < 1e-15);
        let l = linear();
        assert_eq!(l.derivative(1, 5.0).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(l.derivative(3, 5.0).unwrap(), C64::new(0.0, 0.0));
        let c = constant(1.0);
        assert_eq!(c.derivative(1, 0.3).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn complex_exponential_derivatives() {
        let xi0 = C64::new(0.5, 1.5);
        let u = complex_exponential(xi0);
        let x = 0.9;
        let expected = xi0 * xi0 * (xi0 * x).exp();
        assert!((u.derivative(2, x).unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn compact_bump_support_and_derivative_support() {
        let g = compact_bump(2.0, 1.0, 0.5);
        assert_eq!(g.eval(0.4), C64::new(0.0, 0.0));
        assert_eq!(g.eval(1.6), C64::new(0.0, 0.0));
        assert!(g.eval(1.0).re > 0.0);
        for order in 1..=3 {
            assert_eq!(g.derivative(order, 0.45).unwrap(), C64::new(0.0, 0.0));
            assert_eq!(g.derivative(order, 1.55).unwrap(), C64::new(0.0, 0.0));
        }
        // derivative matches a centered difference inside the support
        let x = 0.8;
        let h = 1e-6;
        let fd = (g.eval(x + h).re - g.eval(x - h).re) / (2.0 * h);
        assert!((g.derivative(1, x).unwrap().re - fd).abs() < 1e-6);
    }

    #[test]
    fn fallback_uses_requested_direction() {
        // values-only profile defined on x >= 0: left-of-point samples poison
        // the stencil, right-direction works
        let f = SmoothFn::values_only("halfline", |x| {
            if x >= 0.0 {
                C64::new(x * x, 0.0)
            } else {
                C64::new(f64::NAN, 0.0)
            }
        });
        let d = f.derivative_one_sided(1, 0.0, 0.01, 1.0);
        assert!((d.re - 0.0).abs() < 1e-10);
        let d2 = f.derivative_one_sided(2, 0.0, 0.01, 1.0);
        assert!((d2.re - 2.0).abs() < 1e-8);
    }
}
