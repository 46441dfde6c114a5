//! Precoders, power allocations, SINRs and instantaneous rates for every
//! transmission scheme, plus the closed-form power splitting ratios.
//!
//! Receivers are indexed `0` and `1` in code; channel uses likewise. Under
//! alternating feedback, use `0` gives receiver `0` the larger budget `B_β`
//! and use `1` gives it to receiver `1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::theta;
use crate::channel::{
    dominant_right_singular, sample_isotropic_unit, sample_unit_in_nullspace,
    zf_pseudoinverse_precoders, CVector, ChannelVector, CsitReport,
};
use crate::error::{Error, Result};
use crate::numerics::E;

/// Smallest private-power fraction ever used; zero is excluded.
pub const MIN_SPLIT: f64 = 1e-9;

/// Clamps a power splitting ratio into `[MIN_SPLIT, 1]`.
pub fn clamp_split(t: f64) -> f64 {
    t.clamp(MIN_SPLIT, 1.0)
}

/// How private and common beamformers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderStrategy {
    /// Private beams drawn uniformly in the other receiver's quantized
    /// null space; common beam isotropic.
    RandomNullspace,
    /// Normalized pseudo-inverse columns for the private beams, dominant
    /// right-singular vector for the common beam.
    PseudoInverseSvd,
}

/// Common and private beamformers of one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub common: CVector,
    /// `private[k]` carries receiver `k`'s private stream.
    pub private: [CVector; 2],
    pub strategy: PrecoderStrategy,
}

impl PrecoderSet {
    /// Builds beamformers from the two fed-back directions.
    pub fn build<R: Rng + ?Sized>(
        strategy: PrecoderStrategy,
        directions: [&CVector; 2],
        rng: &mut R,
    ) -> Result<Self> {
        let [d0, d1] = directions;
        if d0.len() != d1.len() {
            return Err(Error::domain("PrecoderSet::build", "dimension mismatch"));
        }
        match strategy {
            PrecoderStrategy::RandomNullspace => {
                let w0 = sample_unit_in_nullspace(d1, rng);
                let w1 = sample_unit_in_nullspace(d0, rng);
                let common = sample_isotropic_unit(d0.len(), rng);
                Ok(Self {
                    common,
                    private: [w0, w1],
                    strategy,
                })
            }
            PrecoderStrategy::PseudoInverseSvd => {
                let (w0, w1) = zf_pseudoinverse_precoders(d0, d1)?;
                let common = dominant_right_singular(d0, d1)?;
                Ok(Self {
                    common,
                    private: [w0, w1],
                    strategy,
                })
            }
        }
    }

    /// Zero-forcing pair for the given directions, without a common beam
    /// draw. Used for the perfect-CSIT reference.
    pub fn zero_forcing<R: Rng + ?Sized>(
        strategy: PrecoderStrategy,
        directions: [&CVector; 2],
        rng: &mut R,
    ) -> Result<[CVector; 2]> {
        let [d0, d1] = directions;
        match strategy {
            PrecoderStrategy::RandomNullspace => Ok([
                sample_unit_in_nullspace(d1, rng),
                sample_unit_in_nullspace(d0, rng),
            ]),
            PrecoderStrategy::PseudoInverseSvd => {
                let (w0, w1) = zf_pseudoinverse_precoders(d0, d1)?;
                Ok([w0, w1])
            }
        }
    }
}

/// Private-power fraction(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Split {
    /// RS-S: `P_c = P(1-t)`, `P_1 = P_2 = Pt/2`.
    Single(f64),
    /// RS-ST: `0 < t_α ≤ t_β ≤ 1`.
    Pair { alpha: f64, beta: f64 },
}

/// Total transmit power and how it is divided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPolicy {
    total_power: f64,
    split: Split,
}

impl PowerPolicy {
    pub fn single(total_power: f64, t: f64) -> Result<Self> {
        check_power(total_power)?;
        if !t.is_finite() {
            return Err(Error::domain("PowerPolicy", format!("t = {t}")));
        }
        Ok(Self {
            total_power,
            split: Split::Single(clamp_split(t)),
        })
    }

    pub fn pair(total_power: f64, t_alpha: f64, t_beta: f64) -> Result<Self> {
        check_power(total_power)?;
        if !(t_alpha.is_finite() && t_beta.is_finite()) || t_alpha > t_beta {
            return Err(Error::domain(
                "PowerPolicy",
                format!("need t_alpha ≤ t_beta, got {t_alpha} > {t_beta}"),
            ));
        }
        Ok(Self {
            total_power,
            split: Split::Pair {
                alpha: clamp_split(t_alpha),
                beta: clamp_split(t_beta),
            },
        })
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// Per-stream powers of one channel use: `[P_c, P_1, P_2]` for RS-S,
    /// `[P_c, P_0, P_weak, P_strong]` for RS-ST.
    pub fn allocations(&self) -> Vec<f64> {
        let p = self.total_power;
        match self.split {
            Split::Single(t) => vec![p * (1.0 - t), p * t / 2.0, p * t / 2.0],
            Split::Pair { alpha, beta } => vec![
                p * (1.0 - beta),
                p * (beta - alpha) / 2.0,
                p * alpha / 2.0,
                p * beta / 2.0,
            ],
        }
    }
}

fn check_power(p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("PowerPolicy", format!("total power {p}")))
    }
}

/// Beamforming gains seen by one receiver in one channel use.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReceiverGains {
    /// `|h_k^H w_c|²`
    pub common: f64,
    /// `|h_k^H w_k|²`
    pub own: f64,
    /// `|h_k^H w_j|²`, residual interference from the other private beam.
    pub cross: f64,
    /// `|h_k^H w_k,pf|²` with zero forcing on the true channels.
    pub perfect: f64,
    /// `|h_k^H ĥ_k|²`, the single-user beamforming gain.
    pub tdma: f64,
}

/// Gains of both receivers in one channel use. Everything a scheme needs to
/// evaluate its rate at any power and split.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkGains {
    pub rx: [ReceiverGains; 2],
}

impl LinkGains {
    pub fn measure(
        channels: [&ChannelVector; 2],
        csit: [&CsitReport; 2],
        precoders: &PrecoderSet,
        perfect: &[CVector; 2],
    ) -> Self {
        let mut rx = [ReceiverGains::default(); 2];
        for k in 0..2 {
            let h = channels[k];
            rx[k] = ReceiverGains {
                common: h.gain(&precoders.common),
                own: h.gain(&precoders.private[k]),
                cross: h.gain(&precoders.private[1 - k]),
                perfect: h.gain(&perfect[k]),
                tdma: h.gain(&csit[k].direction),
            };
        }
        Self { rx }
    }
}

/// RS-S SINRs of one channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsSSinr {
    /// Common-message SINR at each receiver.
    pub common_at: [f64; 2],
    /// `min` of `common_at`: the common message must be decodable by both.
    pub common: f64,
    pub private: [f64; 2],
}

/// RS-ST SINRs over both channel uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsStSinr {
    /// `c1_at[k]`: SINR of `c_1` at receiver `k` (use 0).
    pub c1_at: [f64; 2],
    /// `c2_at[k]`: SINR of `c_2` at receiver `k` (use 1).
    pub c2_at: [f64; 2],
    /// `c0_at[k]`: SINR of `c_0` at receiver `k`, taken from the use in
    /// which `k` has the larger feedback budget.
    pub c0_at: [f64; 2],
    pub c1: f64,
    pub c2: f64,
    pub c0: f64,
    /// `private[k][l]`: receiver `k`'s private stream in use `l`.
    pub private: [[f64; 2]; 2],
}

/// Tagged SINR set of either rate-splitting scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinrBundle {
    RsS(RsSSinr),
    RsSt(RsStSinr),
}

impl SinrBundle {
    /// Every SINR in the bundle.
    pub fn values(&self) -> Vec<f64> {
        match self {
            SinrBundle::RsS(s) => [&s.common_at[..], &[s.common], &s.private[..]].concat(),
            SinrBundle::RsSt(s) => [
                &s.c1_at[..],
                &s.c2_at[..],
                &s.c0_at[..],
                &[s.c1, s.c2, s.c0],
                &s.private[0][..],
                &s.private[1][..],
            ]
            .concat(),
        }
    }
}

/// RS-S SINRs from measured gains.
pub fn rs_s_sinr_from_gains(g: &LinkGains, p: f64, t: f64) -> RsSSinr {
    let t = clamp_split(t);
    let pc = p * (1.0 - t);
    let pk = p * t / 2.0;
    let mut common_at = [0.0; 2];
    let mut private = [0.0; 2];
    for k in 0..2 {
        let r = &g.rx[k];
        common_at[k] = r.common * pc / (1.0 + pk * (r.own + r.cross));
        private[k] = r.own * pk / (1.0 + r.cross * pk);
    }
    RsSSinr {
        common_at,
        common: common_at[0].min(common_at[1]),
        private,
    }
}

/// RS-S SINRs for explicit channels and beamformers.
pub fn sinr_rs_s(
    channels: [&ChannelVector; 2],
    precoders: &PrecoderSet,
    policy: &PowerPolicy,
) -> Result<RsSSinr> {
    let Split::Single(t) = policy.split() else {
        return Err(Error::domain("sinr_rs_s", "RS-S needs a single split ratio"));
    };
    check_dims("sinr_rs_s", channels, precoders)?;
    let mut g = LinkGains::default();
    for k in 0..2 {
        g.rx[k].common = channels[k].gain(&precoders.common);
        g.rx[k].own = channels[k].gain(&precoders.private[k]);
        g.rx[k].cross = channels[k].gain(&precoders.private[1 - k]);
    }
    Ok(rs_s_sinr_from_gains(&g, policy.total_power(), t))
}

fn check_dims(func: &'static str, channels: [&ChannelVector; 2], p: &PrecoderSet) -> Result<()> {
    let m = channels[0].antennas();
    let ok = channels[1].antennas() == m
        && p.common.len() == m
        && p.private.iter().all(|w| w.len() == m);
    if ok {
        Ok(())
    } else {
        Err(Error::domain(func, "dimension mismatch"))
    }
}

/// RS-ST SINRs from measured gains of the two channel uses.
///
/// In use 0 receiver 0 has the larger budget: its private stream gets the
/// weak power `Pt_α/2` and `c_0` rides on its private beam. Use 1 mirrors
/// this with the receivers swapped.
pub fn rs_st_sinr_from_gains(g: &[LinkGains; 2], p: f64, t_alpha: f64, t_beta: f64) -> RsStSinr {
    let ta = clamp_split(t_alpha);
    let tb = clamp_split(t_beta).max(ta);
    let pc = p * (1.0 - tb);
    let p0 = p * (tb - ta) / 2.0;
    let weak = p * ta / 2.0;
    let strong = p * tb / 2.0;

    // Receiver `s` is the strong-feedback receiver of use `l = s`; it owns
    // the weak private power and the c_0 beam in that use.
    let mut c_at = [[0.0; 2]; 2]; // [use][rx]
    let mut c0_at = [0.0; 2];
    let mut private = [[0.0; 2]; 2];
    for l in 0..2 {
        let s = l;
        let o = 1 - l;
        let rs = &g[l].rx[s];
        let ro = &g[l].rx[o];
        // Receiver s decodes c_l with c_0 still present (c_0 beam = w_s).
        c_at[l][s] = rs.common * pc / (1.0 + rs.own * p0 + rs.own * weak + rs.cross * strong);
        c0_at[s] = rs.own * p0 / (1.0 + rs.own * weak + rs.cross * strong);
        // Receiver o decodes c_l after removing c_0.
        c_at[l][o] = ro.common * pc / (1.0 + ro.own * strong + ro.cross * weak);
        private[s][l] = rs.own * weak / (1.0 + rs.cross * strong);
        private[o][l] = ro.own * strong / (1.0 + ro.cross * weak);
    }
    RsStSinr {
        c1_at: c_at[0],
        c2_at: c_at[1],
        c0_at,
        c1: c_at[0][0].min(c_at[0][1]),
        c2: c_at[1][0].min(c_at[1][1]),
        c0: c0_at[0].min(c0_at[1]),
        private,
    }
}

/// RS-ST SINRs for explicit channels. `channels[l][k]` is receiver `k` in
/// use `l`; `precoders[l]` must satisfy the shared-beam constraint by
/// construction (the `c_0` beam is `precoders[l].private[l]`).
pub fn sinr_rs_st(
    channels: [[&ChannelVector; 2]; 2],
    precoders: [&PrecoderSet; 2],
    policy: &PowerPolicy,
) -> Result<RsStSinr> {
    let Split::Pair { alpha, beta } = policy.split() else {
        return Err(Error::domain("sinr_rs_st", "RS-ST needs a (t_alpha, t_beta) pair"));
    };
    let mut g = [LinkGains::default(); 2];
    for l in 0..2 {
        check_dims("sinr_rs_st", channels[l], precoders[l])?;
        for k in 0..2 {
            let h = channels[l][k];
            g[l].rx[k].common = h.gain(&precoders[l].common);
            g[l].rx[k].own = h.gain(&precoders[l].private[k]);
            g[l].rx[k].cross = h.gain(&precoders[l].private[1 - k]);
        }
    }
    Ok(rs_st_sinr_from_gains(&g, policy.total_power(), alpha, beta))
}

/// Instantaneous rates of one realization, split by message type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub common: f64,
    pub private: [f64; 2],
}

impl RateSample {
    pub fn total(&self) -> f64 {
        self.common + self.private[0] + self.private[1]
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            common: self.common * s,
            private: [self.private[0] * s, self.private[1] * s],
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            common: self.common + o.common,
            private: [self.private[0] + o.private[0], self.private[1] + o.private[1]],
        }
    }
}

#[inline]
fn rate(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// RS-S rates of one channel use.
pub fn rs_s_rates(g: &LinkGains, p: f64, t: f64) -> RateSample {
    let s = rs_s_sinr_from_gains(g, p, t);
    RateSample {
        common: rate(s.common),
        private: [rate(s.private[0]), rate(s.private[1])],
    }
}

/// ZFBF with quantized CSIT and even power split (RS-S at `t = 1`).
pub fn zfbf_rates(g: &LinkGains, p: f64) -> RateSample {
    rs_s_rates(g, p, 1.0)
}

/// ZFBF with perfect CSIT.
pub fn zfbf_perfect_rates(g: &LinkGains, p: f64) -> RateSample {
    RateSample {
        common: 0.0,
        private: [
            rate(g.rx[0].perfect * p / 2.0),
            rate(g.rx[1].perfect * p / 2.0),
        ],
    }
}

/// Full power to the receiver with the larger `|h^H ĥ|²` (ties: receiver 0).
pub fn tdma_rates(g: &LinkGains, p: f64) -> RateSample {
    let k = usize::from(g.rx[1].tdma > g.rx[0].tdma);
    let mut out = RateSample::default();
    out.private[k] = rate(p * g.rx[k].tdma);
    out
}

/// Per-realization choice between ZFBF and TDMA, whichever is larger
/// (ties keep ZFBF).
pub fn sumu_rates(g: &LinkGains, p: f64) -> RateSample {
    let zf = zfbf_rates(g, p);
    let td = tdma_rates(g, p);
    if td.total() > zf.total() {
        td
    } else {
        zf
    }
}

/// RS-ST rates over the two channel uses, halved to a per-use figure.
pub fn rs_st_rates(g: &[LinkGains; 2], p: f64, t_alpha: f64, t_beta: f64) -> RateSample {
    let s = rs_st_sinr_from_gains(g, p, t_alpha, t_beta);
    RateSample {
        common: 0.5 * (rate(s.c1) + rate(s.c2) + rate(s.c0)),
        private: [
            0.5 * (rate(s.private[0][0]) + rate(s.private[0][1])),
            0.5 * (rate(s.private[1][0]) + rate(s.private[1][1])),
        ],
    }
}

/// Average of a per-use rate function over all channel uses.
pub fn average_over_uses(uses: &[LinkGains], f: impl Fn(&LinkGains) -> RateSample) -> RateSample {
    let n = uses.len() as f64;
    uses.iter()
        .map(f)
        .fold(RateSample::default(), RateSample::add)
        .scaled(1.0 / n)
}

/// `log₂(1 + |h_k^H w|² P/2)` for a beam zero-forcing the true other channel.
pub fn rate_zfbf_perfect(h: &ChannelVector, w_perp: &CVector, p: f64) -> f64 {
    rate(h.gain(w_perp) * p / 2.0)
}

/// `log₂(1 + P max_k |h_k^H ĥ_k|²)`.
pub fn rate_tdma(channels: [&ChannelVector; 2], csit: [&CsitReport; 2], p: f64) -> f64 {
    let best = channels[0]
        .gain(&csit[0].direction)
        .max(channels[1].gain(&csit[1].direction));
    rate(p * best)
}

/// `max(TDMA, ZFBF sum)` for one realization.
pub fn rate_sumu(
    channels: [&ChannelVector; 2],
    csit: [&CsitReport; 2],
    precoders: &PrecoderSet,
    p: f64,
) -> Result<f64> {
    let zf = sinr_rs_s(channels, precoders, &PowerPolicy::single(p, 1.0)?)?;
    let zf_sum = rate(zf.private[0]) + rate(zf.private[1]);
    Ok(zf_sum.max(rate_tdma(channels, csit, p)))
}

fn check_split_inputs(func: &'static str, p: f64, m: usize, bits: &[f64]) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(func, format!("P = {p} must be positive")));
    }
    if m < 2 {
        return Err(Error::domain(func, format!("M = {m} < 2")));
    }
    if let Some(b) = bits.iter().find(|b| !(**b >= 0.0) || b.is_nan()) {
        return Err(Error::domain(func, format!("bits = {b}")));
    }
    Ok(())
}

/// `Λ = PM/(2(M-1)) · 2^{-B/(M-1)}`, the residual-interference scale.
/// Infinite `bits` (perfect feedback) gives zero.
pub fn interference_scale(p: f64, m: usize, bits: f64) -> f64 {
    let m1 = m as f64 - 1.0;
    p * m as f64 / (2.0 * m1) * (-bits / m1).exp2()
}

/// Feedback budget above which RS-S switches to ZFBF (`t = 1`), equal
/// budgets.
pub fn threshold_bits_eq(p: f64, m: usize) -> f64 {
    let m1 = m as f64 - 1.0;
    m1 * ((p * m as f64 / (2.0 * m1)).log2() - (E - 1.0).log2())
}

/// High-SNR optimal RS-S split for equal feedback budgets.
pub fn power_split_eq(p: f64, m: usize, bits: f64) -> Result<f64> {
    check_split_inputs("power_split_eq", p, m, &[bits])?;
    if bits > threshold_bits_eq(p, m) {
        return Ok(1.0);
    }
    let t = 1.0 / (interference_scale(p, m, bits) + 2.0 - E);
    Ok(t.min(1.0))
}

/// Split minimizing the high-SNR feedback requirement for loss target `δ`.
pub fn power_split_eq_delta(delta: f64) -> Result<f64> {
    if !(delta > 1.0 && delta.is_finite()) {
        return Err(Error::domain("power_split_eq_delta", format!("δ = {delta} ≤ 1")));
    }
    if delta < E * E {
        return Ok(1.0);
    }
    Ok((1.0 / (delta / (2.0 * E) - E / 2.0 + 1.0)).min(1.0))
}

/// Average-budget threshold above which RS-S switches to ZFBF under
/// alternating feedback with asymmetry `Θ`.
pub fn threshold_bits_rs(p: f64, m: usize, theta: f64) -> f64 {
    let m1 = m as f64 - 1.0;
    let inner = (E * E / 4.0 + (E - 2.0).powi(2) * theta * (theta - 4.0) / 16.0).sqrt()
        + (E - 2.0) / 4.0 * (theta - 2.0);
    m1 * p.log2() - m1 * (2.0 * m1 / m as f64).log2() - m1 * inner.log2()
}

/// High-SNR optimal RS-S split under alternating budgets `B_α ≤ B_β`.
pub fn power_split_rs(p: f64, m: usize, bits_alpha: f64, bits_beta: f64) -> Result<f64> {
    check_split_inputs("power_split_rs", p, m, &[bits_alpha, bits_beta])?;
    if bits_alpha > bits_beta {
        return Err(Error::domain(
            "power_split_rs",
            format!("B_alpha = {bits_alpha} > B_beta = {bits_beta}"),
        ));
    }
    let avg = 0.5 * (bits_alpha + bits_beta);
    let th = theta(bits_beta - bits_alpha, m)?;
    if !avg.is_finite() || avg >= threshold_bits_rs(p, m, th) {
        return Ok(1.0);
    }
    let c = (E - 2.0) / 2.0;
    let la = interference_scale(p, m, bits_alpha);
    let lb = interference_scale(p, m, bits_beta);
    let t = 1.0 / (((la - c) * (lb - c)).sqrt() - c);
    Ok(t.min(1.0))
}

/// Loss target at which the alternating-budget feedback law starts to
/// benefit from splitting; equals `e²` at `Θ = 4`.
pub fn delta0(theta: f64) -> f64 {
    let d = theta * theta - 4.0 * theta;
    let q = E * E / 8.0 * (theta - 2.0).powi(2) * (1.0 - 2.0 / E) + E;
    (E * E / 4.0 * d + q * q).sqrt() + q
}

/// Split minimizing the high-SNR average-feedback requirement under
/// alternating budgets with discrepancy `τ`.
pub fn power_split_rs_delta(delta: f64, tau: f64, m: usize) -> Result<f64> {
    if !(delta > 1.0 && delta.is_finite()) {
        return Err(Error::domain("power_split_rs_delta", format!("δ = {delta} ≤ 1")));
    }
    let th = theta(tau, m)?;
    let d = th * th - 4.0 * th;
    if d <= 0.0 {
        return power_split_eq_delta(delta);
    }
    if delta <= delta0(th) {
        return Ok(1.0);
    }
    let r = (4.0 * (th - 2.0).powi(2) * delta * delta / (E * E * d * d)
        - (th - 2.0).powi(2) * delta * (1.0 - 2.0 / E) / d)
        .sqrt()
        - 4.0 * delta / (E * d);
    Ok((1.0 / r).min(1.0))
}

/// RS-ST splits `(t_α, t_β)` that drown residual interference in noise.
pub fn power_split_st(p: f64, m: usize, bits_alpha: f64, bits_beta: f64) -> Result<(f64, f64)> {
    check_split_inputs("power_split_st", p, m, &[bits_alpha, bits_beta])?;
    if bits_alpha > bits_beta {
        return Err(Error::domain(
            "power_split_st",
            format!("B_alpha = {bits_alpha} > B_beta = {bits_beta}"),
        ));
    }
    let tb = (1.0 / interference_scale(p, m, bits_beta)).min(1.0);
    let ta = (1.0 / interference_scale(p, m, bits_alpha)).min(1.0);
    Ok((ta, tb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{quantize_rvq, sample_channel, QuantizerMode};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn chan(parts: &[(f64, f64)]) -> ChannelVector {
        ChannelVector::new(CVector::from_parts(parts)).unwrap()
    }

    fn set(common: &[(f64, f64)], w0: &[(f64, f64)], w1: &[(f64, f64)]) -> PrecoderSet {
        PrecoderSet {
            common: CVector::from_parts(common),
            private: [CVector::from_parts(w0), CVector::from_parts(w1)],
            strategy: PrecoderStrategy::RandomNullspace,
        }
    }

    #[test]
    fn rs_s_hand_example() {
        let h1 = chan(&[(1.0, 0.0), (0.0, 0.0)]);
        let h2 = chan(&[(0.0, 0.0), (1.0, 0.0)]);
        let prec = set(&[(S, 0.0), (S, 0.0)], &[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]);
        let pol = PowerPolicy::single(10.0, 0.5).unwrap();
        let s = sinr_rs_s([&h1, &h2], &prec, &pol).unwrap();
        assert!((s.common_at[0] - 2.5 / 3.5).abs() < 1e-12);
        assert!((s.private[0] - 2.5).abs() < 1e-12);
        assert_eq!(s.common, s.common_at[0].min(s.common_at[1]));
    }

    #[test]
    fn rs_s_at_full_private_power_is_zfbf() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let h = [sample_channel(4, &mut r).unwrap(), sample_channel(4, &mut r).unwrap()];
        let prec = PrecoderSet::build(
            PrecoderStrategy::RandomNullspace,
            [&h[1].direction().unwrap(), &h[0].direction().unwrap()],
            &mut r,
        )
        .unwrap();
        let s = sinr_rs_s([&h[0], &h[1]], &prec, &PowerPolicy::single(100.0, 1.0).unwrap()).unwrap();
        assert_eq!(s.common, 0.0);
        for k in 0..2 {
            let own = h[k].gain(&prec.private[k]);
            let cross = h[k].gain(&prec.private[1 - k]);
            assert!((s.private[k] - own * 50.0 / (1.0 + cross * 50.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_zero_forcing_has_no_interference() {
        let h1 = chan(&[(1.0, 0.0), (0.0, 0.0)]);
        let h2 = chan(&[(0.0, 0.0), (2.0, 0.0)]);
        let prec = set(&[(S, 0.0), (S, 0.0)], &[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]);
        let s = sinr_rs_s([&h1, &h2], &prec, &PowerPolicy::single(8.0, 0.25).unwrap()).unwrap();
        assert!((s.private[1] - 4.0 * 1.0).abs() < 1e-12);
    }

    #[test]
    fn rs_s_rejects_bad_inputs() {
        let h1 = chan(&[(1.0, 0.0), (0.0, 0.0)]);
        let h3 = chan(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let prec = set(&[(S, 0.0), (S, 0.0)], &[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]);
        let pol = PowerPolicy::single(1.0, 0.5).unwrap();
        assert!(sinr_rs_s([&h1, &h3], &prec, &pol).is_err());
        let pair = PowerPolicy::pair(1.0, 0.2, 0.5).unwrap();
        assert!(sinr_rs_s([&h1, &h1], &prec, &pair).is_err());
        assert!(PowerPolicy::pair(1.0, 0.6, 0.5).is_err());
        assert!(PowerPolicy::single(-1.0, 0.5).is_err());
    }

    #[test]
    fn split_is_clamped() {
        let pol = PowerPolicy::single(1.0, 0.0).unwrap();
        assert_eq!(pol.split(), Split::Single(MIN_SPLIT));
        let pol = PowerPolicy::single(1.0, 3.0).unwrap();
        assert_eq!(pol.split(), Split::Single(1.0));
    }

    /// Orthonormal M = 2 instance where every gain is chosen by hand.
    fn st_instance() -> ([[ChannelVector; 2]; 2], [PrecoderSet; 2]) {
        let e0 = (1.0, 0.0);
        let z = (0.0, 0.0);
        let h = [
            [chan(&[(2.0, 0.0), (1.0, 0.0)]), chan(&[(0.5, 0.0), (1.5, 0.0)])],
            [chan(&[(1.0, 0.0), (3.0, 0.0)]), chan(&[(2.0, 0.0), (0.5, 0.0)])],
        ];
        let p = [
            set(&[(S, 0.0), (S, 0.0)], &[e0, z], &[z, e0]),
            set(&[(S, 0.0), (-S, 0.0)], &[e0, z], &[z, e0]),
        ];
        (h, p)
    }

    #[test]
    fn rs_st_hand_example() {
        let (h, p) = st_instance();
        let (pw, ta, tb) = (20.0, 0.2, 0.6);
        let pol = PowerPolicy::pair(pw, ta, tb).unwrap();
        let s = sinr_rs_st(
            [[&h[0][0], &h[0][1]], [&h[1][0], &h[1][1]]],
            [&p[0], &p[1]],
            &pol,
        )
        .unwrap();
        let pc = pw * (1.0 - tb);
        let p0 = pw * (tb - ta) / 2.0;
        let weak = pw * ta / 2.0;
        let strong = pw * tb / 2.0;
        // Rx1 in use 1: h = [2, 1]; |h^H w_c|² = 4.5, own = 4, cross = 1.
        let c1 = 4.5 * pc / (1.0 + 4.0 * p0 + 4.0 * weak + 1.0 * strong);
        let c0 = 4.0 * p0 / (1.0 + 4.0 * weak + 1.0 * strong);
        let u11 = 4.0 * weak / (1.0 + 1.0 * strong);
        // Rx1 in use 2: h = [1, 3]; |h^H w_c|² = 2, own = 1, cross = 9.
        let c2 = 2.0 * pc / (1.0 + 1.0 * strong + 9.0 * weak);
        let u12 = 1.0 * strong / (1.0 + 9.0 * weak);
        for (got, want) in [
            (s.c1_at[0], c1),
            (s.c0_at[0], c0),
            (s.private[0][0], u11),
            (s.c2_at[0], c2),
            (s.private[0][1], u12),
        ] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Rx2 mirrors Rx1: use 2 h = [2, 0.5]: c_w = 1.125, own = 0.25, cross = 4.
        let c2_rx2 = 1.125 * pc / (1.0 + 0.25 * p0 + 0.25 * weak + 4.0 * strong);
        let c0_rx2 = 0.25 * p0 / (1.0 + 0.25 * weak + 4.0 * strong);
        // use 1 h = [0.5, 1.5]: c_w = 2, own = 2.25, cross = 0.25.
        let c1_rx2 = 2.0 * pc / (1.0 + 2.25 * strong + 0.25 * weak);
        assert!((s.c2_at[1] - c2_rx2).abs() < 1e-12);
        assert!((s.c0_at[1] - c0_rx2).abs() < 1e-12);
        assert!((s.c1_at[1] - c1_rx2).abs() < 1e-12);
        assert_eq!(s.c0, c0.min(c0_rx2));
    }

    #[test]
    fn rs_st_degenerate_splits() {
        let (h, p) = st_instance();
        let hs = [[&h[0][0], &h[0][1]], [&h[1][0], &h[1][1]]];
        let s = sinr_rs_st(hs, [&p[0], &p[1]], &PowerPolicy::pair(5.0, 0.4, 0.4).unwrap()).unwrap();
        assert_eq!(s.c0_at, [0.0, 0.0]);
        let s = sinr_rs_st(hs, [&p[0], &p[1]], &PowerPolicy::pair(5.0, 0.4, 1.0).unwrap()).unwrap();
        assert_eq!((s.c1, s.c2), (0.0, 0.0));
        let single = PowerPolicy::single(5.0, 0.4).unwrap();
        assert!(sinr_rs_st(hs, [&p[0], &p[1]], &single).is_err());
    }

    #[test]
    fn rs_st_c0_matches_shared_beam_form() {
        // With w_01 = w_11 the c_0 numerator gain equals the own-beam gain.
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let h: Vec<ChannelVector> = (0..4).map(|_| sample_channel(3, &mut r).unwrap()).collect();
            let prec: Vec<PrecoderSet> = (0..2)
                .map(|l| {
                    let d0 = h[2 * l].direction().unwrap();
                    let d1 = h[2 * l + 1].direction().unwrap();
                    PrecoderSet::build(PrecoderStrategy::RandomNullspace, [&d0, &d1], &mut r).unwrap()
                })
                .collect();
            let pol = PowerPolicy::pair(50.0, 0.1, 0.7).unwrap();
            let s = sinr_rs_st([[&h[0], &h[1]], [&h[2], &h[3]]], [&prec[0], &prec[1]], &pol).unwrap();
            let w01 = &prec[0].private[0];
            let num = h[0].gain(w01) * 50.0 * 0.3;
            let den = 1.0 + h[0].gain(&prec[0].private[0]) * 2.5 + h[0].gain(&prec[0].private[1]) * 17.5;
            assert!((s.c0_at[0] - num / den).abs() < 1e-10 * (1.0 + num / den));
        }
    }

    #[test]
    fn baseline_rates() {
        let h1 = chan(&[(1.0, 0.0), (0.0, 0.0)]);
        let h2 = chan(&[(1.0, 0.0), (0.0, 0.0)]);
        let c1 = CsitReport {
            direction: CVector::from_parts(&[(0.0, 0.0), (1.0, 0.0)]),
            bits: 1.0,
            sin2_error: 1.0,
        };
        let c2 = CsitReport {
            direction: CVector::from_parts(&[(1.0, 0.0), (0.0, 0.0)]),
            bits: 1.0,
            sin2_error: 0.0,
        };
        assert!((rate_tdma([&h1, &h2], [&c1, &c2], 3.0) - 2.0).abs() < 1e-15);
        assert_eq!(rate_tdma([&h1, &h2], [&c1, &c2], 0.0), 0.0);
        assert!((rate_zfbf_perfect(&h1, &CVector::basis(2, 0), 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(rate_zfbf_perfect(&h1, &CVector::basis(2, 0), 0.0), 0.0);
    }

    #[test]
    fn tdma_with_perfect_directions_uses_channel_norm() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let h1 = sample_channel(4, &mut r).unwrap();
        let h2 = sample_channel(4, &mut r).unwrap();
        let c1 = CsitReport::perfect(&h1).unwrap();
        let c2 = CsitReport::perfect(&h2).unwrap();
        let p = 7.0;
        let best = h1.as_vector().norm_sqr().max(h2.as_vector().norm_sqr());
        assert!((rate_tdma([&h1, &h2], [&c1, &c2], p) - (1.0 + p * best).log2()).abs() < 1e-12);
    }

    #[test]
    fn sumu_is_max_of_branches() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let h1 = sample_channel(4, &mut r).unwrap();
            let h2 = sample_channel(4, &mut r).unwrap();
            let c1 = quantize_rvq(&h1, 4.0, QuantizerMode::Explicit, &mut r).unwrap();
            let c2 = quantize_rvq(&h2, 4.0, QuantizerMode::Explicit, &mut r).unwrap();
            let prec = PrecoderSet::build(
                PrecoderStrategy::PseudoInverseSvd,
                [&c1.direction, &c2.direction],
                &mut r,
            )
            .unwrap();
            let p = 300.0;
            let got = rate_sumu([&h1, &h2], [&c1, &c2], &prec, p).unwrap();
            let zf: f64 = (0..2)
                .map(|k| {
                    let h = [&h1, &h2][k];
                    let own = h.gain(&prec.private[k]);
                    let cross = h.gain(&prec.private[1 - k]);
                    (1.0 + own * p / 2.0 / (1.0 + cross * p / 2.0)).log2()
                })
                .sum();
            let td = (1.0 + p * h1.gain(&c1.direction).max(h2.gain(&c2.direction))).log2();
            assert!((got - zf.max(td)).abs() < 1e-12);

            let perfect = [CVector::basis(4, 0), CVector::basis(4, 1)];
            let g = LinkGains::measure([&h1, &h2], [&c1, &c2], &prec, &perfect);
            assert!((sumu_rates(&g, p).total() - got).abs() < 1e-12);
        }
    }

    #[test]
    fn sumu_prefers_dominant_zfbf() {
        let mut g = LinkGains::default();
        g.rx[0] = ReceiverGains { common: 0.0, own: 5.0, cross: 0.0, perfect: 0.0, tdma: 1.0 };
        g.rx[1] = ReceiverGains { common: 0.0, own: 5.0, cross: 0.0, perfect: 0.0, tdma: 1.0 };
        assert_eq!(sumu_rates(&g, 1e6), zfbf_rates(&g, 1e6));
        assert_eq!(sumu_rates(&g, 0.0).total(), 0.0);
    }

    #[test]
    fn split_eq_examples() {
        let t = power_split_eq(1000.0, 4, 10.0).unwrap();
        assert!((t - 0.01529).abs() < 5e-6, "{t}");
        assert!((threshold_bits_eq(1000.0, 4) - 25.80).abs() < 5e-3);
        assert_eq!(power_split_eq(1000.0, 4, 26.0).unwrap(), 1.0);
        assert_eq!(power_split_eq(1000.0, 4, f64::INFINITY).unwrap(), 1.0);
        // P t tends to (2(M-1)/M) 2^{B/(M-1)}.
        let p = 1e12;
        let limit = 1.5 * 2f64.powf(10.0 / 3.0);
        assert!((p * power_split_eq(p, 4, 10.0).unwrap() / limit - 1.0).abs() < 1e-6);
    }

    #[test]
    fn split_eq_continuity_at_threshold() {
        for &(p, m) in &[(100.0, 2usize), (1e3, 4), (1e4, 6)] {
            let b0 = threshold_bits_eq(p, m);
            let below = 1.0 / (interference_scale(p, m, b0) + 2.0 - E);
            assert!((below - 1.0).abs() < 1e-9);
            assert_eq!(power_split_eq(p, m, b0 + 1e-12).unwrap(), 1.0);
        }
    }

    #[test]
    fn split_eq_delta_examples() {
        assert!((power_split_eq_delta(E * E).unwrap() - 1.0).abs() < 1e-15);
        assert!((power_split_eq_delta(64.0).unwrap() - 0.08762).abs() < 5e-6);
        assert_eq!(power_split_eq_delta(2.0).unwrap(), 1.0);
        assert!(power_split_eq_delta(1.0).is_err());
    }

    #[test]
    fn split_rs_reduces_to_eq() {
        for &p in &[10.0, 100.0, 1e3, 1e4] {
            for m in [2usize, 4, 8] {
                for b in [0.0, 3.0, 10.0, 20.0, 40.0] {
                    let a = power_split_rs(p, m, b, b).unwrap();
                    let e = power_split_eq(p, m, b).unwrap();
                    assert!((a - e).abs() < 1e-12, "P {p} M {m} B {b}");
                }
            }
            assert!((threshold_bits_rs(p, 4, 4.0) - threshold_bits_eq(p, 4)).abs() < 1e-10);
        }
    }

    #[test]
    fn split_rs_closed_form() {
        let (p, m, ba, bb) = (1000.0, 2, 7.0, 13.0);
        let la = 1000.0 * 2f64.powi(-7);
        let lb = 1000.0 * 2f64.powi(-13);
        let c = (E - 2.0) / 2.0;
        let want = 1.0 / (((la - c) * (lb - c)).sqrt() - c);
        let got = power_split_rs(p, m, ba, bb).unwrap();
        assert!((got - want.min(1.0)).abs() < 1e-14);
        assert_eq!(power_split_rs(1000.0, 2, 30.0, 36.0).unwrap(), 1.0);
        assert!(power_split_rs(1000.0, 2, 13.0, 7.0).is_err());
    }

    #[test]
    fn split_rs_delta_examples() {
        assert_eq!(
            power_split_rs_delta(64.0, 0.0, 4).unwrap(),
            power_split_eq_delta(64.0).unwrap()
        );
        assert!((delta0(4.0) - E * E).abs() < 1e-12);
        let th = theta(14.0, 4).unwrap();
        assert_eq!(power_split_rs_delta(delta0(th) * 0.999, 14.0, 4).unwrap(), 1.0);
        // Just past the threshold the closed form is continuous with t = 1.
        let t = power_split_rs_delta(delta0(th) * (1.0 + 1e-9), 14.0, 4).unwrap();
        assert!((t - 1.0).abs() < 1e-6);
        assert!(power_split_rs_delta(0.5, 1.0, 4).is_err());
    }

    /// `η(r) = sqrt(D/4 r² + δ(1 + 2r/e - 2/e)) - (Θ-2)/2 r`, the high-SNR
    /// feedback requirement up to monotone terms, as a function of `r = 1/t`.
    fn eta_derivative(delta: f64, th: f64, r: f64) -> f64 {
        let d = th * th - 4.0 * th;
        let root = (d / 4.0 * r * r + delta * (1.0 + 2.0 * r / E - 2.0 / E)).sqrt();
        (d / 2.0 * r + 2.0 * delta / E) / (2.0 * root) - (th - 2.0) / 2.0
    }

    #[test]
    fn split_rs_delta_matches_root_finder() {
        let (delta, tau, m) = (64.0, 14.0, 4);
        let th = theta(tau, m).unwrap();
        // Bits fall as η grows, so the optimum is the interior maximum of η.
        let (mut lo, mut hi) = (1.0, 1e6);
        assert!(eta_derivative(delta, th, lo) > 0.0 && eta_derivative(delta, th, hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eta_derivative(delta, th, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = power_split_rs_delta(delta, tau, m).unwrap();
        assert!((t - 1.0 / lo).abs() < 1e-10 * (1.0 / lo), "{t} vs {}", 1.0 / lo);
    }

    #[test]
    fn split_st_examples() {
        let (ta, tb) = power_split_st(1000.0, 2, 7.0, 13.0).unwrap();
        assert_eq!(tb, 1.0);
        assert!((1000.0 * 2f64.powi(-13) - 0.12207).abs() < 1e-5);
        assert!((ta - 0.128).abs() < 1e-12);
        let (ta, tb) = power_split_st(1e4, 4, 9.0, 9.0).unwrap();
        assert_eq!(ta, tb);
        assert!(power_split_st(1e4, 4, 10.0, 9.0).is_err());
    }

    #[test]
    fn nullspace_precoders_are_zero_forcing() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let d0 = crate::channel::sample_isotropic_unit(4, &mut r);
            let d1 = crate::channel::sample_isotropic_unit(4, &mut r);
            let p = PrecoderSet::build(PrecoderStrategy::RandomNullspace, [&d0, &d1], &mut r).unwrap();
            assert!(d1.inner(&p.private[0]).norm() < 1e-10);
            assert!(d0.inner(&p.private[1]).norm() < 1e-10);
            for w in [&p.common, &p.private[0], &p.private[1]] {
                assert!((w.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    fn arb_gains() -> impl Strategy<Value = LinkGains> {
        let rx = (0.0f64..10.0, 0.0f64..10.0, 0.0f64..2.0, 0.0f64..10.0, 0.0f64..10.0)
            .prop_map(|(common, own, cross, perfect, tdma)| ReceiverGains { common, own, cross, perfect, tdma });
        (rx.clone(), rx).prop_map(|(a, b)| LinkGains { rx: [a, b] })
    }

    proptest! {
        #[test]
        fn allocations_conserve_power(p in 0.0f64..1e6, ta in 0.0f64..1.0, dt in 0.0f64..1.0) {
            let tb = (ta + dt).min(1.0);
            for pol in [PowerPolicy::single(p, ta).unwrap(), PowerPolicy::pair(p, ta, tb).unwrap()] {
                let total: f64 = pol.allocations().iter().sum();
                prop_assert!((total - p).abs() <= 1e-9 * (1.0 + p));
                prop_assert!(pol.allocations().iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn sinrs_are_finite_and_common_is_min(g in arb_gains(), p in 0.0f64..1e5, t in 0.0f64..1.0) {
            let s = rs_s_sinr_from_gains(&g, p, t);
            let b = SinrBundle::RsS(s);
            prop_assert!(b.values().iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert_eq!(s.common, s.common_at[0].min(s.common_at[1]));
            let r = rs_s_rates(&g, p, t);
            prop_assert!(r.total().is_finite());
        }

        #[test]
        fn rs_st_sinrs_are_finite(g0 in arb_gains(), g1 in arb_gains(), p in 0.0f64..1e5,
                                  ta in 0.0f64..1.0, dt in 0.0f64..1.0) {
            let tb = (ta + dt).min(1.0);
            let s = rs_st_sinr_from_gains(&[g0, g1], p, ta, tb);
            prop_assert!(SinrBundle::RsSt(s).values().iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert_eq!(s.c0, s.c0_at[0].min(s.c0_at[1]));
            // Equal splits put no power on c_0.
            let s = rs_st_sinr_from_gains(&[g0, g1], p, ta, ta);
            prop_assert_eq!(s.c0, 0.0);
        }

        #[test]
        fn split_eq_in_unit_interval(p in 1e-2f64..1e8, m in 2usize..16, b in 0.0f64..80.0) {
            let t = power_split_eq(p, m, b).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
        }

        #[test]
        fn split_rs_in_unit_interval(p in 1e-2f64..1e8, m in 2usize..8, ba in 0.0f64..40.0, tau in 0.0f64..30.0) {
            let t = power_split_rs(p, m, ba, ba + tau).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
            let (a, b) = power_split_st(p, m, ba, ba + tau).unwrap();
            prop_assert!(a > 0.0 && a <= b && b <= 1.0);
        }

        #[test]
        fn split_rs_delta_in_unit_interval(delta in 1.01f64..1e4, tau in 0.0f64..40.0, m in 2usize..8) {
            let t = power_split_rs_delta(delta, tau, m).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
        }
    }

    #[test]
    fn phase_of_common_beam_is_irrelevant() {
        let h1 = chan(&[(1.0, 0.5), (0.2, -0.3)]);
        let h2 = chan(&[(0.1, 0.0), (1.0, 1.0)]);
        let mut prec = set(&[(S, 0.0), (0.0, S)], &[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]);
        let pol = PowerPolicy::single(30.0, 0.3).unwrap();
        let a = sinr_rs_s([&h1, &h2], &prec, &pol).unwrap();
        prec.common = prec.common.scaled(Complex64::from_polar(1.0, 0.7));
        let b = sinr_rs_s([&h1, &h2], &prec, &pol).unwrap();
        assert!((a.common - b.common).abs() < 1e-12);
    }
}
