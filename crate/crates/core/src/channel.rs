//! Complex vectors, Rayleigh channel draws and random vector quantization.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest bit budget for which the automatic quantizer still enumerates an
/// explicit codebook.
pub const EXPLICIT_MAX_BITS: f64 = 14.0;

/// Overlap above which two quantized directions count as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

/// A dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    /// Builds a vector from `(re, im)` pairs.
    pub fn from_parts(parts: &[(f64, f64)]) -> Self {
        Self(parts.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    /// Standard basis vector `e_i` of length `m`.
    pub fn basis(m: usize, i: usize) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        v[i] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `self^H other`.
    pub fn inner(&self, other: &CVector) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|self^H other|²`.
    pub fn gain(&self, other: &CVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn scaled(&self, s: Complex64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    /// `a·x + b·y` for equal-length vectors.
    pub fn combine(a: Complex64, x: &CVector, b: Complex64, y: &CVector) -> CVector {
        CVector(x.0.iter().zip(&y.0).map(|(p, q)| a * p + b * q).collect())
    }

    /// Unit-norm copy, or `None` if the norm is not usable.
    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(CVector(self.0.iter().map(|z| z / n).collect()))
        } else {
            None
        }
    }

    /// Rotates the vector so that its first nonzero entry is real and positive.
    pub fn with_phase_convention(mut self) -> CVector {
        if let Some(first) = self.0.iter().find(|z| z.norm_sqr() > 0.0) {
            let rot = first.conj() / first.norm();
            for z in &mut self.0 {
                *z *= rot;
            }
            // Remove the rounding residue from the pivot so it is exactly real.
            if let Some(p) = self.0.iter_mut().find(|z| z.norm_sqr() > 0.0) {
                *p = Complex64::new(p.norm(), 0.0);
            }
        }
        self
    }

    /// Removes the component along the unit vector `v`.
    fn project_out(&mut self, v: &CVector) {
        let c = v.inner(self);
        for (z, u) in self.0.iter_mut().zip(&v.0) {
            *z -= c * u;
        }
    }

    fn all_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// One receiver's channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(CVector);

impl ChannelVector {
    pub fn new(entries: CVector) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::domain(
                "ChannelVector",
                format!("need at least 2 antennas, got {}", entries.len()),
            ));
        }
        if !entries.all_finite() {
            return Err(Error::domain("ChannelVector", "non-finite entry"));
        }
        Ok(Self(entries))
    }

    pub fn antennas(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    /// `|h^H w|²`.
    pub fn gain(&self, w: &CVector) -> f64 {
        self.0.gain(w)
    }

    /// Channel direction `h / ‖h‖`.
    pub fn direction(&self) -> Result<CVector> {
        self.0
            .normalized()
            .ok_or_else(|| Error::domain("ChannelVector::direction", "zero channel"))
    }
}

/// Which RVQ implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerMode {
    /// Enumerates all `2^B` random codewords.
    Explicit,
    /// Samples the best codeword's error from its closed-form law.
    Statistical,
}

impl QuantizerMode {
    /// Explicit up to [`EXPLICIT_MAX_BITS`] integral bits, statistical otherwise.
    pub fn auto(bits: f64) -> Self {
        if bits <= EXPLICIT_MAX_BITS && bits.fract() == 0.0 {
            QuantizerMode::Explicit
        } else {
            QuantizerMode::Statistical
        }
    }
}

/// Quantized direction fed back by one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CsitReport {
    pub direction: CVector,
    pub bits: f64,
    /// `sin²∠(h, ĥ)`.
    pub sin2_error: f64,
}

impl CsitReport {
    /// Error-free report carrying the true channel direction.
    pub fn perfect(h: &ChannelVector) -> Result<Self> {
        Ok(Self {
            direction: h.direction()?.with_phase_convention(),
            bits: f64::INFINITY,
            sin2_error: 0.0,
        })
    }
}

#[inline]
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn gaussian_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CVector {
    CVector((0..m).map(|_| complex_normal(rng)).collect())
}

fn check_antennas(func: &'static str, m: usize) -> Result<()> {
    if m < 2 {
        Err(Error::domain(func, format!("M = {m} < 2")))
    } else {
        Ok(())
    }
}

/// I.i.d. CN(0,1) channel with `m` entries.
pub fn sample_channel<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<ChannelVector> {
    check_antennas("sample_channel", m)?;
    Ok(ChannelVector(gaussian_vector(m, rng)))
}

/// Uniformly distributed unit vector on the complex sphere.
pub fn sample_isotropic_unit<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CVector {
    loop {
        if let Some(v) = gaussian_vector(m, rng).normalized() {
            return v.with_phase_convention();
        }
    }
}

/// Unit vector orthogonal to the unit vector `v`, isotropic within `v^⊥`.
pub fn sample_unit_in_nullspace<R: Rng + ?Sized>(v: &CVector, rng: &mut R) -> CVector {
    loop {
        let mut g = gaussian_vector(v.len(), rng);
        g.project_out(v);
        // Second pass cleans the rounding left by the first projection.
        g.project_out(v);
        if g.norm() > 1e-12 {
            if let Some(w) = g.normalized() {
                return w.with_phase_convention();
            }
        }
    }
}

/// Random vector quantization of `h` with a `bits`-bit random codebook.
///
/// The explicit mode draws codewords from `rng` one at a time and keeps the
/// best, so memory stays constant in `bits`. It needs an integral budget.
pub fn quantize_rvq<R: Rng + ?Sized>(
    h: &ChannelVector,
    bits: f64,
    mode: QuantizerMode,
    rng: &mut R,
) -> Result<CsitReport> {
    if !(bits >= 0.0 && bits.is_finite()) {
        return Err(Error::domain("quantize_rvq", format!("bits = {bits}")));
    }
    let hbar = h
        .direction()
        .map_err(|_| Error::domain("quantize_rvq", "zero channel vector"))?;
    match mode {
        QuantizerMode::Explicit => {
            if bits.fract() != 0.0 || bits > 62.0 {
                return Err(Error::domain(
                    "quantize_rvq",
                    format!("explicit codebook needs integral bits ≤ 62, got {bits}"),
                ));
            }
            Ok(explicit_rvq(&hbar, bits, rng))
        }
        QuantizerMode::Statistical => Ok(statistical_rvq(&hbar, bits, rng)),
    }
}

fn explicit_rvq<R: Rng + ?Sized>(hbar: &CVector, bits: f64, rng: &mut R) -> CsitReport {
    let m = hbar.len();
    let size = 1u64 << bits as u32;
    let mut g = vec![Complex64::new(0.0, 0.0); m];
    let mut best = g.clone();
    let mut best_ratio = -1.0;
    for _ in 0..size {
        let mut norm = 0.0;
        let mut ip = Complex64::new(0.0, 0.0);
        for (z, hb) in g.iter_mut().zip(hbar.as_slice()) {
            *z = complex_normal(rng);
            norm += z.norm_sqr();
            ip += hb.conj() * *z;
        }
        if norm == 0.0 {
            continue;
        }
        let ratio = ip.norm_sqr() / norm;
        if ratio > best_ratio {
            best_ratio = ratio;
            best.copy_from_slice(&g);
        }
    }
    let direction = CVector(best)
        .normalized()
        .expect("a nonzero codeword is always retained")
        .with_phase_convention();
    let cos2 = hbar.gain(&direction).min(1.0);
    CsitReport {
        direction,
        bits,
        sin2_error: 1.0 - cos2,
    }
}

fn statistical_rvq<R: Rng + ?Sized>(hbar: &CVector, bits: f64, rng: &mut R) -> CsitReport {
    let m = hbar.len();
    let u: f64 = rng.random();
    // P(Z ≤ z) = 1 - (1 - z^{M-1})^{2^B}; invert with log1p/expm1 so that
    // large budgets do not round Z to zero.
    let z_pow = -((-bits).exp2() * (-u).ln_1p()).exp_m1();
    let z = z_pow.clamp(0.0, 1.0).powf(1.0 / (m as f64 - 1.0));
    let e = sample_unit_in_nullspace(hbar, rng);
    let direction = CVector::combine(
        Complex64::new((1.0 - z).sqrt(), 0.0),
        hbar,
        Complex64::new(z.sqrt(), 0.0),
        &e,
    )
    .normalized()
    .expect("combination of orthonormal vectors has unit norm")
    .with_phase_convention();
    CsitReport {
        direction,
        bits,
        sin2_error: z,
    }
}

/// Normalized columns of the pseudo-inverse of `[ĥ1^H; ĥ2^H]`.
///
/// Uses the 2×2 Gram matrix `[[a, b], [b*, d]]`, `b = ĥ1^H ĥ2`, so that
/// `p1 = d ĥ1 - b* ĥ2` and `p2 = a ĥ2 - b ĥ1` up to the common `1/det`.
pub fn zf_pseudoinverse_precoders(h1: &CVector, h2: &CVector) -> Result<(CVector, CVector)> {
    if h1.len() != h2.len() {
        return Err(Error::domain("zf_pseudoinverse_precoders", "length mismatch"));
    }
    let a = h1.norm_sqr();
    let d = h2.norm_sqr();
    let b = h1.inner(h2);
    let overlap = if a > 0.0 && d > 0.0 {
        b.norm() / (a * d).sqrt()
    } else {
        1.0
    };
    if overlap > 1.0 - COLLINEAR_TOL {
        return Err(Error::DegenerateGeometry { overlap });
    }
    let one = Complex64::new(1.0, 0.0);
    let p1 = CVector::combine(d * one, h1, -b.conj(), h2);
    let p2 = CVector::combine(-b, h1, a * one, h2);
    let w1 = p1.normalized().ok_or(Error::DegenerateGeometry { overlap })?;
    let w2 = p2.normalized().ok_or(Error::DegenerateGeometry { overlap })?;
    Ok((w1.with_phase_convention(), w2.with_phase_convention()))
}

/// Top right-singular vector of `[h1^H; h2^H]`.
///
/// Solves the 2×2 Gram eigenproblem and maps the eigenvector back through
/// `H^H`. When the singular values tie the result is `h1`'s direction.
pub fn dominant_right_singular(h1: &CVector, h2: &CVector) -> Result<CVector> {
    if h1.len() != h2.len() {
        return Err(Error::domain("dominant_right_singular", "length mismatch"));
    }
    let a = h1.norm_sqr();
    let d = h2.norm_sqr();
    if a == 0.0 && d == 0.0 {
        return Err(Error::domain("dominant_right_singular", "both inputs are zero"));
    }
    let b = h1.inner(h2);
    let half_gap = 0.5 * (a - d);
    let lambda = 0.5 * (a + d) + (half_gap * half_gap + b.norm_sqr()).sqrt();
    // Two algebraically equivalent null vectors of G - λI; take the better
    // conditioned one.
    let u_row1 = (b, Complex64::new(lambda - a, 0.0));
    let u_row2 = (Complex64::new(lambda - d, 0.0), b.conj());
    let n1 = u_row1.0.norm_sqr() + u_row1.1.norm_sqr();
    let n2 = u_row2.0.norm_sqr() + u_row2.1.norm_sqr();
    let scale = a.max(d);
    let (u1, u2) = if n1.max(n2) <= (1e-15 * scale).powi(2) {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else if n2 >= n1 {
        u_row2
    } else {
        u_row1
    };
    let v = CVector::combine(u1, h1, u2, h2);
    v.normalized()
        .map(CVector::with_phase_convention)
        .ok_or_else(|| Error::domain("dominant_right_singular", "rank-deficient back-mapping"))
}
