//! Closed-form distribution functions, sum-rate loss bounds and feedback
//! scaling laws.
//!
//! Bounds come in an exact form valid at any SNR and a high-SNR form in
//! which `φ(x) ≈ ln x - γ`; the [`Regime`] argument picks one explicitly.
//! Forms evaluated at a particular split, and looser caps, have their own
//! functions.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binomial, factorial_f64, phi, upper_incomplete_gamma, E, EULER_GAMMA};
use crate::schemes::{power_split_rs, power_split_rs_delta};

pub use crate::schemes::{delta0, interference_scale, threshold_bits_eq, threshold_bits_rs};

/// SNR gain in dB per bps/Hz of rate offset.
pub const DB_PER_BIT: f64 = 3.0;

/// Tolerance band for a cancellation-prone CDF before clamping.
const CDF_BAND: f64 = 1e-8;

/// Which form of a bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Exact,
    HighSnr,
}

/// A bound or law together with what produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub formula: &'static str,
    pub regime: Regime,
}

impl BoundValue {
    fn new(value: f64, formula: &'static str, regime: Regime) -> Result<Self> {
        if value.is_finite() {
            Ok(Self { value, formula, regime })
        } else {
            Err(Error::Precision {
                func: formula,
                raw: value,
                detail: format!("{regime:?} regime produced a non-finite value"),
            })
        }
    }
}

/// SNR and antenna count shared by every bound, with the auxiliary terms
/// `Λ`, `κ`, `ε`, `μ` and `ϱ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub snr: f64,
    pub antennas: usize,
}

impl BoundInputs {
    pub fn new(snr: f64, antennas: usize) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::domain("BoundInputs", format!("P = {snr} must be positive")));
        }
        if antennas < 2 {
            return Err(Error::domain("BoundInputs", format!("M = {antennas} < 2")));
        }
        Ok(Self { snr, antennas })
    }

    fn m1(&self) -> f64 {
        self.antennas as f64 - 1.0
    }

    /// `PM/(2(M-1))`.
    pub fn scale(&self) -> f64 {
        self.snr * self.antennas as f64 / (2.0 * self.m1())
    }

    /// `Λ = PM/(2(M-1)) 2^{-B/(M-1)}`.
    pub fn lambda(&self, bits: f64) -> f64 {
        interference_scale(self.snr, self.antennas, bits)
    }

    /// `κ(t) = (4/(Pt) - 1) φ(Pt/4) - 1 - γ`.
    pub fn kappa(&self, t: f64) -> Result<f64> {
        let pt = self.snr * t;
        Ok((4.0 / pt - 1.0) * phi(pt / 4.0)? - 1.0 - EULER_GAMMA)
    }

    /// `ε(t) = [φ(P/2) - φ(Pt/2)] / ln 2`.
    pub fn epsilon(&self, t: f64) -> Result<f64> {
        Ok((phi(self.snr / 2.0)? - phi(self.snr * t / 2.0)?) / LN_2)
    }

    /// `μ = [2φ(P/2) - φ(Pt_β/2) - φ(Pt_α/2)] / ln 2`.
    pub fn mu(&self, ta: f64, tb: f64) -> Result<f64> {
        let p = self.snr;
        Ok((2.0 * phi(p / 2.0)? - phi(p * tb / 2.0)? - phi(p * ta / 2.0)?) / LN_2)
    }

    /// `ϱ = [φ(Pt_β/2) - φ(Pt_β/4)/2 - φ(Pt_α/2) + φ(Pt_α/4)/2] / ln 2`.
    pub fn varrho(&self, ta: f64, tb: f64) -> Result<f64> {
        let p = self.snr;
        Ok((phi(p * tb / 2.0)? - phi(p * tb / 4.0)? / 2.0 - phi(p * ta / 2.0)?
            + phi(p * ta / 4.0)? / 2.0)
            / LN_2)
    }

    /// `P(1-t)/2 e^{κ(t)}`, the common-message lower-bound SNR.
    fn common_snr(&self, t: f64) -> Result<f64> {
        Ok(self.snr * (1.0 - t) / 2.0 * self.kappa(t)?.exp())
    }
}

fn check_t(func: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(func, format!("t = {t} outside (0, 1]")))
    }
}

fn check_bits(func: &'static str, ba: f64, bb: f64) -> Result<()> {
    if !(ba >= 0.0 && bb >= 0.0) {
        return Err(Error::domain(func, format!("bits ({ba}, {bb}) must be non-negative")));
    }
    if ba > bb {
        return Err(Error::domain(func, format!("B_alpha = {ba} > B_beta = {bb}")));
    }
    Ok(())
}

fn check_delta(func: &'static str, delta: f64) -> Result<()> {
    if delta > 1.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("δ = {delta} must exceed 1")))
    }
}

/// `log₂(1 + 2/(te) - 2/e)`, the high-SNR common-rate term.
fn high_snr_common(t: f64) -> f64 {
    (1.0 + 2.0 / (t * E) - 2.0 / E).log2()
}

// ---------------------------------------------------------------------------
// Distributions

/// Joint CDF of `(|h^H w_c|², |h^H w|²)` for a Rayleigh channel and two
/// independent isotropic unit beams.
pub fn joint_cdf(x1: f64, x2: f64, m: usize) -> Result<f64> {
    if !(x1 >= 0.0 && x2 >= 0.0) {
        return Err(Error::domain("joint_cdf", format!("({x1}, {x2}) must be non-negative")));
    }
    if !(2..=63).contains(&m) {
        return Err(Error::domain("joint_cdf", format!("M = {m} outside [2, 63]")));
    }
    if x1 == 0.0 || x2 == 0.0 {
        return Ok(0.0);
    }
    let n = (m - 1) as u32;
    let hi = x1.max(x2);
    let mut terms = Vec::with_capacity(m * m);
    for i in 0..=n {
        for j in 0..=n {
            let r = (i + j) as i32 + 2 - m as i32;
            let coeff = (binomial(n, i)? * binomial(n, j)?) as f64;
            let term = (-x1).powi((n - i) as i32)
                * (-x2).powi((n - j) as i32)
                * coeff
                * upper_incomplete_gamma(r, hi)?;
            terms.push(term);
        }
    }
    let xi = descending_sum(&mut terms) / factorial_f64(n);
    let raw = descending_sum(&mut [1.0, -(-x1).exp(), -(-x2).exp(), xi]);
    if !(-CDF_BAND..=1.0 + CDF_BAND).contains(&raw) || raw.is_nan() {
        return Err(Error::Precision {
            func: "joint_cdf",
            raw,
            detail: format!("x1 = {x1}, x2 = {x2}, M = {m}"),
        });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Joint CDF under the independence approximation.
pub fn joint_cdf_independent(x1: f64, x2: f64) -> f64 {
    if x1 <= 0.0 || x2 <= 0.0 {
        return 0.0;
    }
    (-x1).exp_m1() * (-x2).exp_m1()
}

/// Neumaier-compensated sum in order of decreasing magnitude.
fn descending_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in terms.iter() {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Approximate CDF of `Y_k = X_1/(1 + X_2 Pt/2)` with independent unit
/// exponentials.
pub fn cdf_yk_approx(y: f64, p: f64, t: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    1.0 - (-y).exp() / (1.0 + p * t / 2.0 * y)
}

/// Approximate upper bound on the CDF of `Y = min(Y_1, Y_2)`.
pub fn cdf_y_upper(y: f64, p: f64, t: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let d = 1.0 + p * t / 2.0 * y;
    1.0 - (-2.0 * y).exp() / (d * d)
}

/// Lower bound on `E[ln Y]` implied by [`cdf_y_upper`].
pub fn expected_ln_y_lower(p: f64, t: f64) -> Result<f64> {
    check_t("expected_ln_y_lower", t)?;
    if !(p > 0.0) {
        return Err(Error::domain("expected_ln_y_lower", format!("P = {p}")));
    }
    let pt = p * t;
    Ok((4.0 / pt - 1.0) * phi(pt / 4.0)? - EULER_GAMMA - std::f64::consts::LN_2 - 1.0)
}

// ---------------------------------------------------------------------------
// Equal feedback budgets

/// Sum-rate loss bound of RS-S relative to perfect-CSIT ZFBF, equal
/// budgets `B`. At `t = 1` this is the ZFBF-with-RVQ bound.
pub fn bound_rs_s_eq(p: f64, m: usize, bits: f64, t: f64, regime: Regime) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_t("bound_rs_s_eq", t)?;
    let lam = inp.lambda(bits);
    let value = match regime {
        Regime::Exact => {
            2.0 * inp.epsilon(t)? + 2.0 * (t * lam).ln_1p() / LN_2
                - inp.common_snr(t)?.ln_1p() / LN_2
        }
        Regime::HighSnr => 2.0 * (1.0 / t + lam).log2() - high_snr_common(t),
    };
    BoundValue::new(value, "rs-s-eq", regime)
}

/// High-SNR loss bound at the closed-form split, `log₂ e + log₂(2Λ + 2 - e)`.
/// Only meaningful below the switching threshold.
pub fn bound_rs_s_eq_at_optimum(p: f64, m: usize, bits: f64) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    let value = E.log2() + (2.0 * inp.lambda(bits) + 2.0 - E).log2();
    BoundValue::new(value, "rs-s-eq-optimum", Regime::HighSnr)
}

/// Feedback bits needed by RS-S at split `t` to keep the loss bound at
/// `log₂ δ`, equal budgets.
pub fn feedback_bits_rs_s_eq(delta: f64, t: f64, p: f64, m: usize, regime: Regime) -> Result<BoundValue> {
    check_delta("feedback_bits_rs_s_eq", delta)?;
    check_t("feedback_bits_rs_s_eq", t)?;
    let inp = BoundInputs::new(p, m)?;
    let m1 = inp.m1();
    let value = match regime {
        Regime::Exact => {
            let arg = (delta * (1.0 + inp.common_snr(t)?)).sqrt() / (t * inp.epsilon(t)?.exp2()) - 1.0 / t;
            if !(arg > 0.0) {
                return Err(Error::Infeasible {
                    law: "feedback_bits_rs_s_eq",
                    term: "sqrt(δ(1+C))/(t 2^ε) - 1/t",
                    value: arg,
                });
            }
            m1 * inp.scale().log2() - m1 * arg.log2()
        }
        Regime::HighSnr => {
            let arg = (delta * (1.0 + 2.0 / (t * E) - 2.0 / E)).sqrt() - 1.0 / t;
            if !(arg > 0.0) {
                return Err(Error::Infeasible {
                    law: "feedback_bits_rs_s_eq",
                    term: "sqrt(δ(1 + 2/(te) - 2/e)) - 1/t",
                    value: arg,
                });
            }
            m1 * p.log2() - m1 * (2.0 * m1 / m as f64).log2() - m1 * arg.log2()
        }
    };
    BoundValue::new(value, "feedback-rs-s-eq", regime)
}

/// High-SNR feedback saving of RS-S over ZFBF at loss target `log₂ δ`.
pub fn overhead_reduction_eq(delta: f64, m: usize) -> Result<f64> {
    if !(delta >= E * E && delta.is_finite()) {
        return Err(Error::domain("overhead_reduction_eq", format!("δ = {delta} < e²")));
    }
    if m < 2 {
        return Err(Error::domain("overhead_reduction_eq", format!("M = {m} < 2")));
    }
    let m1 = m as f64 - 1.0;
    Ok(m1 * ((delta / (2.0 * E) + E / 2.0 - 1.0) / (delta.sqrt() - 1.0)).log2())
}

// ---------------------------------------------------------------------------
// Alternating feedback budgets

/// `Θ = 2^{-τ/(2(M-1))} + 2^{τ/(2(M-1))} + 2`.
pub fn theta(tau: f64, m: usize) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::domain("theta", format!("τ = {tau} must be non-negative")));
    }
    if m < 2 {
        return Err(Error::domain("theta", format!("M = {m} < 2")));
    }
    let x = tau / (2.0 * (m as f64 - 1.0));
    Ok((-x).exp2() + x.exp2() + 2.0)
}

/// Sum-rate loss bound of RS-S with alternating budgets `B_α ≤ B_β`.
pub fn bound_rs_s_rs(
    p: f64,
    m: usize,
    bits_alpha: f64,
    bits_beta: f64,
    t: f64,
    regime: Regime,
) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_t("bound_rs_s_rs", t)?;
    check_bits("bound_rs_s_rs", bits_alpha, bits_beta)?;
    let (la, lb) = (inp.lambda(bits_alpha), inp.lambda(bits_beta));
    let value = match regime {
        Regime::Exact => {
            2.0 * inp.epsilon(t)? + ((t * la).ln_1p() + (t * lb).ln_1p()) / LN_2
                - inp.common_snr(t)?.ln_1p() / LN_2
        }
        Regime::HighSnr => (1.0 / t + la).log2() + (1.0 / t + lb).log2() - high_snr_common(t),
    };
    BoundValue::new(value, "rs-s-rs", regime)
}

/// High-SNR bound at the closed-form split `t_S^rs`, written as
/// `log₂(t(√(Λ_αΛ_β) - 1/t)² + (√Λ_α + √Λ_β)²) - log₂(2/e + (1-2/e)t)`.
pub fn bound_rs_s_rs_at_optimum(p: f64, m: usize, bits_alpha: f64, bits_beta: f64) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_bits("bound_rs_s_rs_at_optimum", bits_alpha, bits_beta)?;
    let t = power_split_rs(p, m, bits_alpha, bits_beta)?;
    let (la, lb) = (inp.lambda(bits_alpha), inp.lambda(bits_beta));
    let eta = (la * lb).sqrt();
    let value = (t * (eta - 1.0 / t).powi(2) + (la.sqrt() + lb.sqrt()).powi(2)).log2()
        - (2.0 / E + (1.0 - 2.0 / E) * t).log2();
    BoundValue::new(value, "rs-s-rs-optimum", Regime::HighSnr)
}

/// The same bound evaluated at the simpler split `1/√(Λ_αΛ_β)`.
pub fn bound_rs_s_rs_relaxed(p: f64, m: usize, bits_alpha: f64, bits_beta: f64) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_bits("bound_rs_s_rs_relaxed", bits_alpha, bits_beta)?;
    let (la, lb) = (inp.lambda(bits_alpha), inp.lambda(bits_beta));
    let t = 1.0 / (la * lb).sqrt();
    let value = (la.sqrt() + lb.sqrt()).powi(2).log2() - (2.0 / E + (1.0 - 2.0 / E) * t).log2();
    BoundValue::new(value, "rs-s-rs-relaxed", Regime::HighSnr)
}

/// Cap `log₂(Λ̄Θ) + log₂(e/2)` with `Λ̄` at the average budget. Exceeds
/// [`bound_rs_s_rs_at_optimum`] by at most `log₂(e/2)`.
pub fn bound_rs_s_rs_cap(p: f64, m: usize, bits_alpha: f64, bits_beta: f64) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_bits("bound_rs_s_rs_cap", bits_alpha, bits_beta)?;
    let avg = 0.5 * (bits_alpha + bits_beta);
    let th = theta(bits_beta - bits_alpha, m)?;
    let value = (inp.lambda(avg) * th).log2() + (E / 2.0).log2();
    BoundValue::new(value, "rs-s-rs-cap", Regime::HighSnr)
}

/// Average feedback bits RS-S needs at split `t` to keep the loss bound at
/// `log₂ δ`, alternating budgets with discrepancy `τ`.
pub fn feedback_bits_rs_s_rs(
    delta: f64,
    t: f64,
    tau: f64,
    p: f64,
    m: usize,
    regime: Regime,
) -> Result<BoundValue> {
    check_delta("feedback_bits_rs_s_rs", delta)?;
    check_t("feedback_bits_rs_s_rs", t)?;
    let inp = BoundInputs::new(p, m)?;
    let th = theta(tau, m)?;
    let m1 = inp.m1();
    let d = th * th - 4.0 * th;
    let k = match regime {
        Regime::Exact => delta * (1.0 + inp.common_snr(t)?) / (t * t * (2.0 * inp.epsilon(t)?).exp2()),
        Regime::HighSnr => delta * (1.0 + 2.0 / (t * E) - 2.0 / E),
    };
    let inner = d / (4.0 * t * t) + k;
    if !(inner >= 0.0) {
        return Err(Error::Infeasible {
            law: "feedback_bits_rs_s_rs",
            term: "(Θ²-4Θ)/(4t²) + δ(1+C)/(t² 2^{2ε})",
            value: inner,
        });
    }
    let eta = inner.sqrt() - (th - 2.0) / (2.0 * t);
    if !(eta > 0.0) {
        return Err(Error::Infeasible {
            law: "feedback_bits_rs_s_rs",
            term: "η = sqrt(...) - (Θ-2)/(2t)",
            value: eta,
        });
    }
    let value = match regime {
        Regime::Exact => m1 * inp.scale().log2() - m1 * eta.log2(),
        Regime::HighSnr => m1 * p.log2() - m1 * (2.0 * m1 / m as f64).log2() - m1 * eta.log2(),
    };
    BoundValue::new(value, "feedback-rs-s-rs", regime)
}

/// Sum-rate loss bound of RS-ST with splits `t_α ≤ t_β`.
pub fn bound_rs_st(
    p: f64,
    m: usize,
    bits_alpha: f64,
    bits_beta: f64,
    t_alpha: f64,
    t_beta: f64,
    regime: Regime,
) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_t("bound_rs_st", t_alpha)?;
    check_t("bound_rs_st", t_beta)?;
    check_bits("bound_rs_st", bits_alpha, bits_beta)?;
    if t_alpha > t_beta {
        return Err(Error::domain("bound_rs_st", format!("t_alpha = {t_alpha} > t_beta = {t_beta}")));
    }
    let (la, lb) = (inp.lambda(bits_alpha), inp.lambda(bits_beta));
    let value = match regime {
        Regime::Exact => {
            inp.mu(t_alpha, t_beta)? - inp.varrho(t_alpha, t_beta)?
                + ((t_alpha * la).ln_1p() + (t_beta * lb).ln_1p()) / LN_2
                - inp.common_snr(t_beta)?.ln_1p() / LN_2
        }
        Regime::HighSnr => {
            (1.0 / t_beta + lb).log2() + (1.0 / t_alpha + la).log2()
                - 0.5 * (t_beta / t_alpha).log2()
                - high_snr_common(t_beta)
        }
    };
    BoundValue::new(value, "rs-st", regime)
}

/// `τ`-free cap `log₂ Λ̄ + 2 + log₂(e/2)` on the high-SNR RS-ST loss.
pub fn bound_rs_st_cap(p: f64, m: usize, bits_alpha: f64, bits_beta: f64) -> Result<BoundValue> {
    let inp = BoundInputs::new(p, m)?;
    check_bits("bound_rs_st_cap", bits_alpha, bits_beta)?;
    let avg = 0.5 * (bits_alpha + bits_beta);
    let value = inp.lambda(avg).log2() + 2.0 + (E / 2.0).log2();
    BoundValue::new(value, "rs-st-cap", Regime::HighSnr)
}

fn half_spread(tau: f64, m: usize) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::domain("st_gain", format!("τ = {tau} must be non-negative")));
    }
    if m < 2 {
        return Err(Error::domain("st_gain", format!("M = {m} < 2")));
    }
    let x = tau / (4.0 * (m as f64 - 1.0));
    Ok((((-x).exp2() + x.exp2()) / 2.0).log2())
}

/// High-SNR gain of RS-ST over RS-S in dB.
pub fn st_gain_db(tau: f64, m: usize) -> Result<f64> {
    Ok(DB_PER_BIT * 2.0 * half_spread(tau, m)?)
}

/// Large-`τ` simplification `3(τ/(2(M-1)) - 2)` of [`st_gain_db`].
pub fn st_gain_db_large_tau(tau: f64, m: usize) -> f64 {
    DB_PER_BIT * (tau / (2.0 * (m as f64 - 1.0)) - 2.0)
}

/// Average-feedback saving of RS-ST over RS-S, `(M-1) log₂(Θ/4)`.
pub fn st_overhead_reduction(tau: f64, m: usize) -> Result<f64> {
    Ok(2.0 * (m as f64 - 1.0) * half_spread(tau, m)?)
}

/// Large-`τ` simplification `τ/2 - 2(M-1)` of [`st_overhead_reduction`].
pub fn st_overhead_reduction_large_tau(tau: f64, m: usize) -> f64 {
    tau / 2.0 - 2.0 * (m as f64 - 1.0)
}

/// Average feedback bits RS-ST needs for loss target `log₂ δ`: the RS-S
/// requirement at its optimal split minus [`st_overhead_reduction`].
pub fn feedback_bits_rs_st(delta: f64, tau: f64, p: f64, m: usize) -> Result<BoundValue> {
    let t = power_split_rs_delta(delta, tau, m)?;
    let rs = feedback_bits_rs_s_rs(delta, t, tau, p, m, Regime::Exact)?;
    BoundValue::new(rs.value - st_overhead_reduction(tau, m)?, "feedback-rs-st", Regime::Exact)
}
