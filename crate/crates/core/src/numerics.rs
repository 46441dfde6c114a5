//! Special functions behind the closed-form rate expressions.
//!
//! The ergodic rate of a unit-mean exponential channel gain is expressed
//! through `φ(x) = e^{1/x} E1(1/x)`; the joint law of two beamformed gains
//! needs the upper incomplete gamma function at non-positive integer order.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Napier's constant, re-exported for formula readability.
pub const E: f64 = std::f64::consts::E;

/// Below this the smallest representable magnitude in Lentz's method.
const LENTZ_FLOOR: f64 = 1e-300;

/// Crossover between the power series and the continued fraction for E1.
const E1_CROSSOVER: f64 = 1.0;

/// Convergence policy shared by the series and continued fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnConfig {
    rel_tolerance: f64,
    max_terms: usize,
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-12,
            max_terms: 200,
        }
    }
}

impl SpecialFnConfig {
    pub fn new(rel_tolerance: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tolerance > 0.0 && rel_tolerance <= 1e-6) {
            return Err(Error::domain(
                "SpecialFnConfig",
                format!("rel_tolerance {rel_tolerance} outside (0, 1e-6]"),
            ));
        }
        if max_terms < 10 {
            return Err(Error::domain(
                "SpecialFnConfig",
                format!("max_terms {max_terms} < 10"),
            ));
        }
        Ok(Self {
            rel_tolerance,
            max_terms,
        })
    }

    pub fn rel_tolerance(&self) -> f64 {
        self.rel_tolerance
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    /// Exponential integral `E1(x) = ∫_1^∞ e^{-xt}/t dt` for `x > 0`.
    pub fn e1(&self, x: f64) -> Result<f64> {
        check_positive("exp_integral_e1", x)?;
        if x <= E1_CROSSOVER {
            self.e1_series(x)
        } else {
            Ok(self.e1_scaled_cf(x)? * (-x).exp())
        }
    }

    /// `e^x E1(x)`, evaluated without forming `e^x` on the continued
    /// fraction branch so that it stays finite for large `x`.
    pub fn e1_scaled(&self, x: f64) -> Result<f64> {
        check_positive("exp_integral_e1", x)?;
        if x <= E1_CROSSOVER {
            Ok(self.e1_series(x)? * x.exp())
        } else {
            self.e1_scaled_cf(x)
        }
    }

    /// `φ(x) = e^{1/x} E1(1/x)`, i.e. `E[ln(1 + xZ)]` for `Z ~ Exp(1)`.
    pub fn phi(&self, x: f64) -> Result<f64> {
        check_positive("phi", x)?;
        self.e1_scaled(1.0 / x)
    }

    /// Upper incomplete gamma `Γ(r, a) = ∫_a^∞ s^{r-1} e^{-s} ds` for integer
    /// order `r` (any sign) and `a > 0`.
    pub fn upper_incomplete_gamma(&self, r: i32, a: f64) -> Result<f64> {
        check_positive("upper_incomplete_gamma", a)?;
        if r >= 1 {
            // (r-1)! e^{-a} Σ_{k<r} a^k / k!
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..r {
                term *= a / k as f64;
                sum += term;
            }
            let factorial: f64 = (1..r).map(|k| k as f64).product();
            return Ok(factorial * (-a).exp() * sum);
        }
        if a > 1.0 {
            // The downward recurrence cancels catastrophically once a^r e^{-a}
            // dominates, so use the continued fraction directly.
            return self.upper_gamma_cf(r as f64, a);
        }
        let mut g = self.e1(a)?;
        let ea = (-a).exp();
        for order in (r..0).rev() {
            g = (g - a.powi(order) * ea) / order as f64;
        }
        Ok(g)
    }

    fn e1_series(&self, x: f64) -> Result<f64> {
        // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
        let mut sum = 0.0;
        let mut power = 1.0;
        for k in 1..=self.max_terms {
            power *= -x / k as f64;
            let term = power / k as f64;
            sum += term;
            if term.abs() <= self.rel_tolerance * 1e-3 * sum.abs().max(f64::MIN_POSITIVE) {
                return Ok(-EULER_GAMMA - x.ln() - sum);
            }
        }
        Err(Error::Convergence {
            func: "exp_integral_e1",
            x,
            terms: self.max_terms,
        })
    }

    fn e1_scaled_cf(&self, x: f64) -> Result<f64> {
        self.lentz_upper_gamma("exp_integral_e1", 0.0, x)
    }

    fn upper_gamma_cf(&self, s: f64, a: f64) -> Result<f64> {
        let h = self.lentz_upper_gamma("upper_incomplete_gamma", s, a)?;
        Ok((s * a.ln() - a).exp() * h)
    }

    /// Modified Lentz evaluation of the continued fraction for
    /// `e^a a^{-s} Γ(s, a)`.
    fn lentz_upper_gamma(&self, func: &'static str, s: f64, a: f64) -> Result<f64> {
        let mut b = a + 1.0 - s;
        let mut c = 1.0 / LENTZ_FLOOR;
        let mut d = 1.0 / b;
        let mut h = d;
        let tol = self.rel_tolerance * 1e-3;
        for i in 1..=self.max_terms {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < LENTZ_FLOOR {
                d = LENTZ_FLOOR;
            }
            c = b + an / c;
            if c.abs() < LENTZ_FLOOR {
                c = LENTZ_FLOOR;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() <= tol {
                return Ok(h);
            }
        }
        Err(Error::Convergence {
            func,
            x: a,
            terms: self.max_terms,
        })
    }
}

fn check_positive(func: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("argument {x} must be positive and finite")))
    }
}

/// `E1(x)` with the default tolerance policy.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    SpecialFnConfig::default().e1(x)
}

/// `φ(x) = e^{1/x} E1(1/x)` with the default tolerance policy.
pub fn phi(x: f64) -> Result<f64> {
    SpecialFnConfig::default().phi(x)
}

/// `Γ(r, a)` at integer order with the default tolerance policy.
pub fn upper_incomplete_gamma(r: i32, a: f64) -> Result<f64> {
    SpecialFnConfig::default().upper_incomplete_gamma(r, a)
}

/// Exact binomial coefficient for `n ≤ 62`.
pub fn binomial(n: u32, k: u32) -> Result<u64> {
    if k > n {
        return Err(Error::domain("binomial", format!("k = {k} > n = {n}")));
    }
    if n > 62 {
        return Err(Error::domain("binomial", format!("n = {n} > 62")));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    Ok(acc as u64)
}

/// `Γ(m) = (m-1)!` for small positive integers, as a float.
pub(crate) fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn e1_matches_quadrature_values() {
        // Oracle values: 0.21938393439552, 0.04890051070806.
        let q1 = oracle::e1(1.0);
        let q2 = oracle::e1(2.0);
        assert!((q1 - 0.219_383_9).abs() < 1e-7);
        assert!((q2 - 0.048_900_5).abs() < 1e-7);
        assert!(rel(exp_integral_e1(1.0).unwrap(), q1) < 1e-11);
        assert!(rel(exp_integral_e1(2.0).unwrap(), q2) < 1e-11);
    }

    #[test]
    fn e1_both_branches_agree_with_quadrature() {
        for &x in &[1e-6, 1e-3, 0.1, 0.5, 0.999, 1.0, 1.001, 1.5, 3.0, 10.0, 40.0] {
            let got = exp_integral_e1(x).unwrap();
            assert!(rel(got, oracle::e1(x)) < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn e1_large_argument_asymptote() {
        let x = 50.0;
        let ratio = exp_integral_e1(x).unwrap() * x * x.exp();
        assert!((ratio - 1.0).abs() < 0.02);
    }

    #[test]
    fn e1_strictly_decreasing() {
        let grid: Vec<f64> = (0..200).map(|i| 10f64.powf(-4.0 + i as f64 * 0.0325)).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| exp_integral_e1(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn e1_rejects_non_positive() {
        assert!(matches!(exp_integral_e1(0.0), Err(Error::Domain { .. })));
        assert!(matches!(exp_integral_e1(-1.0), Err(Error::Domain { .. })));
        assert!(exp_integral_e1(f64::NAN).is_err());
    }

    #[test]
    fn phi_reference_points() {
        // e^2 E1(2) from the quadrature oracle: 0.36132861...
        assert!((oracle::phi(0.5) - 0.361_328).abs() < 1e-6);
        assert!(rel(phi(0.5).unwrap(), oracle::phi(0.5)) < 1e-11);

        let big = phi(1000.0).unwrap();
        let leading = -EULER_GAMMA + 1000f64.ln();
        assert!((leading - 6.330_540).abs() < 1e-6);
        assert!(rel(big, leading) < 2e-3);
        // Next order: E1(u) ≈ -γ - ln u + u and e^u ≈ 1 + u at u = 1/x.
        let u = 1e-3;
        assert!(rel(big, (leading + u) * (1.0 + u)) < 1e-6);

        let x = 1e-4;
        assert!((phi(x).unwrap() / x - 1.0).abs() < 1e-3);
    }

    #[test]
    fn phi_matches_quadrature_on_log_grid() {
        for i in 0..=45 {
            let x = 10f64.powf(-3.0 + i as f64 * 0.2);
            let got = phi(x).unwrap();
            let want = oracle::phi(x);
            assert!(rel(got, want) < 1e-9, "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn phi_finite_for_tiny_arguments() {
        let v = phi(1e-5).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(phi(0.0).is_err());
    }

    #[test]
    fn incomplete_gamma_examples() {
        assert!(rel(upper_incomplete_gamma(1, 2.0).unwrap(), (-2.0f64).exp()) < 1e-14);
        assert!((upper_incomplete_gamma(1, 2.0).unwrap() - 0.135_335).abs() < 1e-6);
        assert_eq!(
            upper_incomplete_gamma(0, 1.0).unwrap(),
            exp_integral_e1(1.0).unwrap()
        );
        // (Γ(0,1) - e^{-1}) / (-1) with E1(1) from quadrature.
        let want = -(oracle::e1(1.0) - (-1.0f64).exp());
        assert!((want - 0.148_496).abs() < 1e-6);
        assert!(rel(upper_incomplete_gamma(-1, 1.0).unwrap(), want) < 1e-11);
    }

    #[test]
    fn incomplete_gamma_against_quadrature() {
        for r in -6..=4 {
            for &a in &[0.05, 0.5, 1.0, 1.5, 2.0, 5.0, 20.0, 50.0] {
                let got = upper_incomplete_gamma(r, a).unwrap();
                let want = oracle::upper_gamma(r as f64, a);
                assert!(rel(got, want) < 1e-9, "r = {r}, a = {a}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn incomplete_gamma_recurrence_consistency() {
        for r in -5..=1 {
            for &a in &[0.5, 1.0, 2.0, 5.0] {
                let lhs = r as f64 * upper_incomplete_gamma(r, a).unwrap()
                    + a.powi(r) * (-a).exp();
                let rhs = upper_incomplete_gamma(r + 1, a).unwrap();
                assert!(rel(lhs, rhs) < 1e-10, "r = {r}, a = {a}");
            }
        }
    }

    #[test]
    fn incomplete_gamma_domain() {
        assert!(upper_incomplete_gamma(-2, 0.0).is_err());
        assert!(upper_incomplete_gamma(3, -1.0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2).unwrap(), 10);
        assert_eq!(binomial(9, 0).unwrap(), 1);
        assert_eq!(binomial(7, 3).unwrap(), 35);
        assert_eq!(binomial(62, 31).unwrap(), 465_428_353_255_261_088);
        assert!(binomial(3, 4).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SpecialFnConfig::new(1e-5, 200).is_err());
        assert!(SpecialFnConfig::new(0.0, 200).is_err());
        assert!(SpecialFnConfig::new(1e-12, 5).is_err());
        let cfg = SpecialFnConfig::new(1e-8, 50).unwrap();
        assert!(rel(cfg.e1(0.3).unwrap(), oracle::e1(0.3)) < 1e-7);
    }

    #[test]
    fn starved_config_reports_non_convergence() {
        let cfg = SpecialFnConfig::new(1e-12, 10).unwrap();
        assert!(matches!(cfg.e1(1.01), Err(Error::Convergence { .. })));
    }
}
