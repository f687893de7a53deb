//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] carries the Taylor coefficients of a function at a point up to a
//! fixed order. Evaluating a formula in jet arithmetic yields every derivative
//! of the formula at machine precision, which is how the smooth cutoffs and
//! mollifiers expose exact derivative samples: a sample that is zero comes out
//! as exactly `0.0`, not as FFT residue.

/// Taylor coefficients `c[i] = f^(i)(x0) / i!` of a scalar function at `x0`.
#[derive(Clone, Debug)]
pub struct Jet {
    coeffs: Vec<f64>,
}

// exp(-1/t) underflows to zero well before t reaches this bound; treating the
// whole jet as zero there avoids inf * 0 in the recurrences.
const EXP_UNDERFLOW_ARG: f64 = 700.0;

impl Jet {
    /// Constant function with the given truncation order.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity function `x` expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = x0;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Jet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Derivative values `f^(i)(x0)` for `i = 0..=order`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if i > 0 {
                    fact *= i as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn derivative(&self, order: usize) -> f64 {
        let mut fact = 1.0;
        for i in 1..=order {
            fact *= i as f64;
        }
        self.coeffs.get(order).copied().unwrap_or(0.0) * fact
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| k * c).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let mut coeffs = vec![0.0; n + 1];
        for (i, out) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.coeffs[k] * rhs.coeffs[i - k];
            }
            *out = acc;
        }
        Jet { coeffs }
    }

    /// Reciprocal; requires a nonzero value at the expansion point.
    pub fn recip(&self) -> Jet {
        let n = self.order();
        let mut coeffs = vec![0.0; n + 1];
        let inv = 1.0 / self.coeffs[0];
        coeffs[0] = inv;
        for i in 1..=n {
            let mut acc = 0.0;
            for k in 1..=i {
                acc += self.coeffs[k] * coeffs[i - k];
            }
            coeffs[i] = -inv * acc;
        }
        Jet { coeffs }
    }

    pub fn div(&self, rhs: &Jet) -> Jet {
        self.mul(&rhs.recip())
    }

    /// `exp` via the standard convolution recurrence.
    pub fn exp(&self) -> Jet {
        let n = self.order();
        let mut coeffs = vec![0.0; n + 1];
        if self.coeffs[0] < -EXP_UNDERFLOW_ARG {
            return Jet { coeffs };
        }
        coeffs[0] = self.coeffs[0].exp();
        for i in 1..=n {
            let mut acc = 0.0;
            for k in 1..=i {
                acc += (k as f64) * self.coeffs[k] * coeffs[i - k];
            }
            coeffs[i] = acc / i as f64;
        }
        Jet { coeffs }
    }

    /// Simultaneous `sin` and `cos`.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.order();
        let mut s = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for i in 1..=n {
            let mut acc_s = 0.0;
            let mut acc_c = 0.0;
            for k in 1..=i {
                acc_s += (k as f64) * self.coeffs[k] * c[i - k];
                acc_c += (k as f64) * self.coeffs[k] * s[i - k];
            }
            s[i] = acc_s / i as f64;
            c[i] = -acc_c / i as f64;
        }
        (Jet { coeffs: s }, Jet { coeffs: c })
    }

    fn zip(&self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let n = self.order().min(rhs.order());
        Jet {
            coeffs: (0..=n).map(|i| f(self.coeffs[i], rhs.coeffs[i])).collect(),
        }
    }
}

/// The C-infinity step profile `S(t) = sigma(t) / (sigma(t) + sigma(1-t))`
/// with `sigma(t) = exp(-1/t)` for `t > 0`: identically 0 for `t <= 0`,
/// identically 1 for `t >= 1`, strictly increasing in between.
pub fn smoothstep(t: f64) -> f64 {
    smoothstep_jet(t, 0).value()
}

/// All derivatives of the step profile at `t`, exact zeros on the flats.
pub fn smoothstep_jet(t: f64, order: usize) -> Jet {
    if t <= 0.0 || t < 1.0 / EXP_UNDERFLOW_ARG {
        return Jet::constant(0.0, order);
    }
    if t >= 1.0 || 1.0 - t < 1.0 / EXP_UNDERFLOW_ARG {
        return Jet::constant(1.0, order);
    }
    let tv = Jet::variable(t, order);
    let sig = tv.recip().neg().exp();
    let sig_mirror = Jet::constant(1.0, order).sub(&tv).recip().neg().exp();
    sig.div(&sig.add(&sig_mirror))
}

/// Derivatives of the unit bump profile `exp(-1/(1 - t^2))` on (-1, 1),
/// exact zeros outside.
pub fn bump_profile_jet(t: f64, order: usize) -> Jet {
    let gap = 1.0 - t * t;
    if gap <= 0.0 || gap < 1.0 / EXP_UNDERFLOW_ARG {
        return Jet::constant(0.0, order);
    }
    let tv = Jet::variable(t, order);
    let gap_jet = Jet::constant(1.0, order).sub(&tv.mul(&tv));
    gap_jet.recip().neg().exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn exp_derivatives_match_closed_form() {
        // f(x) = exp(3x), f^(n)(x) = 3^n exp(3x)
        let x = 0.4;
        let jet = Jet::variable(x, 5).scale(3.0).exp();
        let d = jet.derivatives();
        for (n, dn) in d.iter().enumerate() {
            assert!(close(*dn, 3f64.powi(n as i32) * (3.0 * x).exp(), 1e-13));
        }
    }

    #[test]
    fn reciprocal_derivatives() {
        // f(x) = 1/x, f^(n)(x) = (-1)^n n! x^{-n-1}
        let x = 1.7;
        let jet = Jet::variable(x, 4).recip();
        let d = jet.derivatives();
        let mut fact = 1.0;
        for (n, dn) in d.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = if n % 2 == 0 { 1.0 } else { -1.0 } * fact * x.powi(-(n as i32) - 1);
            assert!(close(*dn, expected, 1e-12), "n = {n}");
        }
    }

    #[test]
    fn sin_cos_derivatives() {
        let x = 0.9;
        let (s, c) = Jet::variable(x, 6).sin_cos();
        assert!(close(s.derivative(1), x.cos(), 1e-14));
        assert!(close(s.derivative(2), -x.sin(), 1e-14));
        assert!(close(s.derivative(3), -x.cos(), 1e-13));
        assert!(close(c.derivative(1), -x.sin(), 1e-14));
    }

    #[test]
    fn smoothstep_flats_are_exact() {
        for order in [0, 1, 3] {
            let lo = smoothstep_jet(-0.2, order);
            let hi = smoothstep_jet(1.3, order);
            assert_eq!(lo.derivatives(), vec![0.0; order + 1]);
            assert_eq!(hi.value(), 1.0);
            for d in &hi.derivatives()[1..] {
                assert_eq!(*d, 0.0);
            }
        }
    }

    #[test]
    fn smoothstep_midpoint_symmetry() {
        // S(t) + S(1-t) = 1 by construction; S'(1/2) = 2 for this profile.
        let t = 0.31;
        assert!(close(smoothstep(t) + smoothstep(1.0 - t), 1.0, 1e-15));
        let mid = smoothstep_jet(0.5, 1);
        assert!(close(mid.derivative(1), 2.0, 1e-13));
    }

    #[test]
    fn smoothstep_derivative_matches_finite_difference() {
        let t = 0.37;
        let h = 1e-6;
        let fd = (smoothstep(t + h) - smoothstep(t - h)) / (2.0 * h);
        let jet = smoothstep_jet(t, 1);
        assert!(close(jet.derivative(1), fd, 1e-8));
    }

    #[test]
    fn bump_profile_support_and_symmetry() {
        assert_eq!(bump_profile_jet(1.0, 3).derivatives(), vec![0.0; 4]);
        assert_eq!(bump_profile_jet(-1.2, 2).value(), 0.0);
        let a = bump_profile_jet(0.4, 2);
        let b = bump_profile_jet(-0.4, 2);
        assert!(close(a.value(), b.value(), 1e-15));
        assert!(close(a.derivative(1), -b.derivative(1), 1e-13));
        assert!(close(a.value(), (-1.0 / (1.0 - 0.16f64)).exp(), 1e-15));
    }
}
