//! Independent reference evaluations used only by tests.
//!
//! Everything here goes through brute-force quadrature, never through the
//! series/continued-fraction/recurrence code paths it is used to check.
//! The file is also pulled into integration tests with `#[path]`, so it
//! must not depend on anything else in the crate.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn apply(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn adaptive(rule: &Rule, f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.apply(f, a, m);
    let right = rule.apply(f, m, b);
    let refined = left + right;
    // Rounding floor: an absolute target below a few ulps of the panel
    // value can never be met and would recurse to full depth.
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || (refined - whole).abs() <= tol.max(floor) {
        return refined;
    }
    adaptive(rule, f, a, m, left, 0.5 * tol, depth - 1)
        + adaptive(rule, f, m, b, right, 0.5 * tol, depth - 1)
}

/// Adaptive 20-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(20);
    let rule = Rule { nodes, weights };
    let whole = rule.apply(&f, a, b);
    adaptive(&rule, &f, a, b, whole, abs_tol, 24)
}

/// E1(x) = ∫_1^∞ e^{-xt}/t dt, evaluated as ∫_0^∞ exp(-x e^v) dv.
pub fn e1(x: f64) -> f64 {
    let upper = (800.0 / x).ln().max(1.0);
    let pieces = 32;
    let step = upper / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = i as f64 * step;
            integrate(|v| (-x * v.exp()).exp(), a, a + step, 1e-17)
        })
        .sum()
}

/// φ(x) = e^{1/x} E1(1/x) = ∫_0^∞ x e^{-u} / (1 + x u) du, in log variable.
pub fn phi(x: f64) -> f64 {
    let lower = (-28.0f64).min(-x.ln() - 28.0);
    let upper = 800.0f64.ln();
    let pieces = 64;
    let step = (upper - lower) / pieces as f64;
    let f = |v: f64| {
        let u = v.exp();
        x * u * (-u).exp() / (1.0 + x * u)
    };
    (0..pieces)
        .map(|i| {
            let a = lower + i as f64 * step;
            integrate(f, a, a + step, 1e-16 * x.min(1.0))
        })
        .sum()
}

/// Γ(r, a) = ∫_a^∞ s^{r-1} e^{-s} ds = a^r ∫_0^∞ e^{rv} exp(-a e^v) dv.
pub fn upper_gamma(r: f64, a: f64) -> f64 {
    let upper = (900.0 / a).ln().max(1.0);
    let pieces = 64;
    let step = upper / pieces as f64;
    let f = |v: f64| (r * v - a * v.exp()).exp();
    let s: f64 = (0..pieces)
        .map(|i| {
            let lo = i as f64 * step;
            integrate(f, lo, lo + step, 1e-18)
        })
        .sum();
    a.powf(r) * s
}

/// Joint CDF of (|h^H w_c|², |h^H w|²) for independent isotropic unit
/// vectors, by conditioning on ‖h‖² ~ Gamma(M, 1).
pub fn joint_cdf(x1: f64, x2: f64, m: usize) -> f64 {
    let mf = m as f64;
    let log_gamma_m: f64 = (1..m).map(|k| (k as f64).ln()).sum();
    let beta_cdf = |b: f64| if b >= 1.0 { 1.0 } else { 1.0 - (1.0 - b).powf(mf - 1.0) };
    let f = |a: f64| {
        if a <= 0.0 {
            return 0.0;
        }
        let density = ((mf - 1.0) * a.ln() - a - log_gamma_m).exp();
        beta_cdf(x1 / a) * beta_cdf(x2 / a) * density
    };
    let lo = x1.min(x2);
    let hi = x1.max(x2);
    let end = hi + 200.0 + 10.0 * mf;
    let mut breaks = vec![0.0, lo, hi];
    let pieces = 200;
    for i in 1..=pieces {
        breaks.push(hi + (end - hi) * i as f64 / pieces as f64);
    }
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate(f, w[0], w[1], 1e-15))
        .sum()
}
