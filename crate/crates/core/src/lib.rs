//! Rate-splitting transmission over a two-receiver MISO broadcast channel
//! with random-vector-quantized feedback.
//!
//! The crate has three layers:
//!
//! * [`numerics`], [`channel`] and [`stats`] provide special functions,
//!   complex channel algebra with the RVQ quantizer, and streaming moments.
//! * [`schemes`] turns one channel realization into SINRs and instantaneous
//!   rates for ZFBF, TDMA, SU/MU switching, RS-S and RS-ST, and holds the
//!   closed-form power splits.
//! * [`montecarlo`] estimates ergodic rates with reproducible parallel
//!   trials, and [`analytics`] evaluates the closed-form loss bounds and
//!   feedback scaling laws they are checked against.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod schemes;
pub mod stats;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};

/// Linear SNR from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Decibels from linear SNR.
pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}
