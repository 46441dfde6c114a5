//! Ergodic-rate estimation with reproducible parallel trials.
//!
//! Every random draw comes from a ChaCha8 substream keyed by the master seed,
//! the trial index and a role label (which channel, which codebook, which
//! precoder). Streams never depend on the SNR point, the split or the bit
//! budget, so curves swept over those parameters share common random numbers.
//! Trials run in fixed-size chunks whose statistics are merged in chunk
//! order, which makes every result independent of the worker count.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    quantize_rvq, sample_channel, sample_isotropic_unit, sample_unit_in_nullspace, CsitReport,
    QuantizerMode,
};
use crate::db_to_linear;
use crate::error::{Error, Result};
use crate::schemes::{
    average_over_uses, power_split_eq, power_split_rs, power_split_st, rs_s_rates, rs_st_rates,
    sumu_rates, tdma_rates, zfbf_perfect_rates, zfbf_rates, LinkGains, PrecoderSet,
    PrecoderStrategy, RateSample, Split,
};
use crate::stats::RunningStats;

pub const DEFAULT_TRIALS: u64 = 20_000;

/// Trials per work unit. Fixed so the reduction order never changes.
const CHUNK: u64 = 512;

/// Largest integral budget accepted by the explicit quantizer.
pub const EXPLICIT_LIMIT_BITS: f64 = 24.0;

const MAX_ANTENNAS: usize = 64;

// Role labels for substreams; `use * 2 + rx` is added where relevant.
const ROLE_CHANNEL: u64 = 0x00;
const ROLE_CODEBOOK: u64 = 0x10;
const ROLE_PRECODER: u64 = 0x20;
const ROLE_PERFECT: u64 = 0x30;
const ROLE_AUX: u64 = 0x40;

/// Transmission scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ZfbfPerfect,
    ZfbfRvq,
    Tdma,
    Sumu,
    RsS,
    RsSt,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::ZfbfPerfect,
        Scheme::ZfbfRvq,
        Scheme::Tdma,
        Scheme::Sumu,
        Scheme::RsS,
        Scheme::RsSt,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::ZfbfPerfect => "zfbf-perfect",
            Scheme::ZfbfRvq => "zfbf-rvq",
            Scheme::Tdma => "tdma",
            Scheme::Sumu => "sumu",
            Scheme::RsS => "rs-s",
            Scheme::RsSt => "rs-st",
        }
    }

    /// Whether the scheme has a private-power split.
    pub fn has_split(&self) -> bool {
        matches!(self, Scheme::ZfbfRvq | Scheme::RsS | Scheme::RsSt)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Feedback budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feedback {
    /// Error-free CSIT.
    Perfect,
    /// Both receivers feed back `B` bits in every channel use.
    Equal(f64),
    /// Receiver 0 sends `beta` bits in use 0 and `alpha` in use 1;
    /// receiver 1 does the opposite.
    Alternating { alpha: f64, beta: f64 },
}

impl Feedback {
    /// Channel uses per trial.
    pub fn uses(&self) -> usize {
        match self {
            Feedback::Alternating { .. } => 2,
            _ => 1,
        }
    }

    /// Budget of receiver `rx` in channel use `l`; `None` for perfect CSIT.
    pub fn bits(&self, rx: usize, l: usize) -> Option<f64> {
        match *self {
            Feedback::Perfect => None,
            Feedback::Equal(b) => Some(b),
            Feedback::Alternating { alpha, beta } => Some(if rx == l { beta } else { alpha }),
        }
    }

    /// Average budget per receiver and use.
    pub fn average_bits(&self) -> Option<f64> {
        match *self {
            Feedback::Perfect => None,
            Feedback::Equal(b) => Some(b),
            Feedback::Alternating { alpha, beta } => Some(0.5 * (alpha + beta)),
        }
    }

    fn budgets(&self) -> Vec<f64> {
        match *self {
            Feedback::Perfect => vec![],
            Feedback::Equal(b) => vec![b],
            Feedback::Alternating { alpha, beta } => vec![alpha, beta],
        }
    }
}

/// How the private-power fraction is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPolicy {
    /// Closed-form split for the scheme and feedback.
    Auto,
    Fixed(f64),
    FixedPair { alpha: f64, beta: f64 },
    /// Exhaustive search over `{res, 2 res, ..., 1}` (RS-S only).
    Grid(f64),
}

/// Quantizer selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizerChoice {
    /// Explicit for small integral budgets, statistical otherwise.
    Auto,
    Explicit,
    Statistical,
}

impl QuantizerChoice {
    pub fn mode(&self, bits: f64) -> QuantizerMode {
        match self {
            QuantizerChoice::Auto => QuantizerMode::auto(bits),
            QuantizerChoice::Explicit => QuantizerMode::Explicit,
            QuantizerChoice::Statistical => QuantizerMode::Statistical,
        }
    }
}

/// Full description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scheme: Scheme,
    pub antennas: usize,
    pub snr_db: Vec<f64>,
    pub feedback: Feedback,
    pub split: SplitPolicy,
    pub quantizer: QuantizerChoice,
    pub precoder: PrecoderStrategy,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Spec with automatic split and quantizer, random null-space precoders
    /// and the default trial count.
    pub fn new(scheme: Scheme, antennas: usize, snr_db: Vec<f64>, feedback: Feedback) -> Self {
        Self {
            scheme,
            antennas,
            snr_db,
            feedback,
            split: SplitPolicy::Auto,
            quantizer: QuantizerChoice::Auto,
            precoder: PrecoderStrategy::RandomNullspace,
            trials: DEFAULT_TRIALS,
            seed: 0,
        }
    }

    pub fn with_split(mut self, split: SplitPolicy) -> Self {
        self.split = split;
        self
    }

    pub fn with_quantizer(mut self, quantizer: QuantizerChoice) -> Self {
        self.quantizer = quantizer;
        self
    }

    pub fn with_precoder(mut self, precoder: PrecoderStrategy) -> Self {
        self.precoder = precoder;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if !(2..=MAX_ANTENNAS).contains(&self.antennas) {
            return cfg(format!("M = {} outside [2, {MAX_ANTENNAS}]", self.antennas));
        }
        if self.trials == 0 {
            return cfg("trials must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return cfg("empty SNR grid".into());
        }
        if let Some(x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return cfg(format!("non-finite SNR {x} dB"));
        }
        for b in self.feedback.budgets() {
            if !(b >= 0.0 && b.is_finite()) {
                return cfg(format!("feedback budget {b} must be finite and non-negative"));
            }
            if self.quantizer == QuantizerChoice::Explicit {
                if b.fract() != 0.0 {
                    return cfg(format!("explicit quantizer needs integral bits, got {b}"));
                }
                if b > EXPLICIT_LIMIT_BITS {
                    return cfg(format!("explicit codebook of {b} bits is too large"));
                }
            }
        }
        if let Feedback::Alternating { alpha, beta } = self.feedback {
            if alpha > beta {
                return cfg(format!("B_alpha = {alpha} exceeds B_beta = {beta}"));
            }
        }
        if self.scheme == Scheme::RsSt && !matches!(self.feedback, Feedback::Alternating { .. }) {
            return cfg("rs-st needs alternating budgets B_alpha,B_beta".into());
        }
        match self.split {
            SplitPolicy::Auto => {}
            _ if !matches!(self.scheme, Scheme::RsS | Scheme::RsSt) => {
                return cfg(format!("scheme {} takes no power split", self.scheme));
            }
            SplitPolicy::Fixed(t) => {
                if self.scheme != Scheme::RsS {
                    return cfg("a single fixed split applies to rs-s only".into());
                }
                if !(t > 0.0 && t <= 1.0) {
                    return cfg(format!("split t = {t} outside (0, 1]"));
                }
            }
            SplitPolicy::FixedPair { alpha, beta } => {
                if self.scheme != Scheme::RsSt {
                    return cfg("a split pair applies to rs-st only".into());
                }
                if !(alpha > 0.0 && alpha <= beta && beta <= 1.0) {
                    return cfg(format!("split pair ({alpha}, {beta}) must satisfy 0 < a ≤ b ≤ 1"));
                }
            }
            SplitPolicy::Grid(res) => {
                if self.scheme != Scheme::RsS {
                    return cfg("grid search applies to rs-s only".into());
                }
                if !(res > 0.0 && res <= 0.5) {
                    return cfg(format!("grid resolution {res} outside (0, 0.5]"));
                }
            }
        }
        Ok(())
    }
}

/// Closed-form or fixed split at one SNR point. `None` for schemes without
/// a split. Grid-search policies must be resolved by [`grid_search_t`].
pub fn resolve_split(spec: &ExperimentSpec, snr_db: f64) -> Result<Option<Split>> {
    let p = db_to_linear(snr_db);
    let m = spec.antennas;
    let split = match (spec.scheme, spec.split) {
        (Scheme::ZfbfPerfect | Scheme::Tdma | Scheme::Sumu, _) => return Ok(None),
        (Scheme::ZfbfRvq, _) => Split::Single(1.0),
        (Scheme::RsS, SplitPolicy::Auto) => Split::Single(match spec.feedback {
            Feedback::Perfect => 1.0,
            Feedback::Equal(b) => power_split_eq(p, m, b)?,
            Feedback::Alternating { alpha, beta } => power_split_rs(p, m, alpha, beta)?,
        }),
        (Scheme::RsS, SplitPolicy::Fixed(t)) => Split::Single(t),
        (Scheme::RsSt, SplitPolicy::Auto) => match spec.feedback {
            Feedback::Alternating { alpha, beta } => {
                let (a, b) = power_split_st(p, m, alpha, beta)?;
                Split::Pair { alpha: a, beta: b }
            }
            _ => return Err(Error::Config("rs-st needs alternating budgets".into())),
        },
        (Scheme::RsSt, SplitPolicy::FixedPair { alpha, beta }) => Split::Pair { alpha, beta },
        (_, policy) => {
            return Err(Error::Config(format!(
                "split policy {policy:?} cannot be resolved in closed form for {}",
                spec.scheme
            )))
        }
    };
    Ok(Some(split))
}

/// Worker pool. Results never depend on the number of workers.
pub struct Executor {
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// Dedicated pool with `workers` threads.
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool: Some(pool) })
    }

    /// Uses rayon's global pool.
    pub fn global() -> Self {
        Self { pool: None }
    }

    pub fn workers(&self) -> usize {
        match &self.pool {
            Some(p) => p.current_num_threads(),
            None => rayon::current_num_threads(),
        }
    }

    /// Runs `f(start, end)` on consecutive trial ranges covering `0..n` and
    /// returns the chunk results in order.
    fn chunked<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, u64) -> Result<T> + Sync,
    {
        let chunks = n.div_ceil(CHUNK);
        let run = || {
            (0..chunks)
                .into_par_iter()
                .map(|c| f(c * CHUNK, ((c + 1) * CHUNK).min(n)))
                .collect::<Vec<Result<T>>>()
        };
        let out = match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        out.into_iter().collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::global()
    }
}

/// Derives per-trial, per-role substreams from one master seed.
#[derive(Clone)]
struct Streams {
    master: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            master: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn get(&self, trial: u64, role: u64) -> ChaCha8Rng {
        let mut rng = self.master.clone();
        rng.set_stream((trial << 8) | role);
        rng.set_word_pos(0);
        rng
    }
}

/// Draws the channel realization of one trial and measures every gain the
/// schemes need.
struct Sampler {
    streams: Streams,
    antennas: usize,
    feedback: Feedback,
    /// False when only perfect-CSIT quantities are needed.
    quantize: bool,
    quantizer: QuantizerChoice,
    precoder: PrecoderStrategy,
}

impl Sampler {
    fn new(spec: &ExperimentSpec) -> Self {
        Self {
            streams: Streams::new(spec.seed),
            antennas: spec.antennas,
            feedback: spec.feedback,
            quantize: spec.scheme != Scheme::ZfbfPerfect,
            quantizer: spec.quantizer,
            precoder: spec.precoder,
        }
    }

    fn realization(&self, trial: u64) -> Result<Vec<LinkGains>> {
        (0..self.feedback.uses()).map(|l| self.channel_use(trial, l)).collect()
    }

    fn channel_use(&self, trial: u64, l: usize) -> Result<LinkGains> {
        let lane = |base: u64, k: usize| base + 2 * l as u64 + k as u64;
        let mut channels = Vec::with_capacity(2);
        let mut reports = Vec::with_capacity(2);
        for k in 0..2 {
            let h = sample_channel(self.antennas, &mut self.streams.get(trial, lane(ROLE_CHANNEL, k)))?;
            let report = match self.feedback.bits(k, l).filter(|_| self.quantize) {
                None => CsitReport::perfect(&h)?,
                Some(b) => {
                    let mut rng = self.streams.get(trial, lane(ROLE_CODEBOOK, k));
                    quantize_rvq(&h, b, self.quantizer.mode(b), &mut rng)?
                }
            };
            channels.push(h);
            reports.push(report);
        }
        let mut rng = self.streams.get(trial, ROLE_PRECODER + l as u64);
        let precoders = PrecoderSet::build(
            self.precoder,
            [&reports[0].direction, &reports[1].direction],
            &mut rng,
        )?;
        let (d0, d1) = (channels[0].direction()?, channels[1].direction()?);
        let mut rng = self.streams.get(trial, ROLE_PERFECT + l as u64);
        let perfect = PrecoderSet::zero_forcing(self.precoder, [&d0, &d1], &mut rng)?;
        Ok(LinkGains::measure(
            [&channels[0], &channels[1]],
            [&reports[0], &reports[1]],
            &precoders,
            &perfect,
        ))
    }
}

/// One (scheme, power, split) combination evaluated on every realization.
#[derive(Debug, Clone, Copy)]
struct Cell {
    scheme: Scheme,
    snr: f64,
    split: Option<Split>,
}

// Indices into a cell's accumulator block.
const S_COMMON: usize = 0;
const S_PRIV0: usize = 1;
const S_PRIV1: usize = 2;
const S_TOTAL: usize = 3;
const R_PRIV0: usize = 4;
const R_PRIV1: usize = 5;
const R_TOTAL: usize = 6;
const LOSS: usize = 7;
const N_STATS: usize = 8;

type Block = [RunningStats; N_STATS];

fn scheme_sample(uses: &[LinkGains], cell: &Cell) -> RateSample {
    let p = cell.snr;
    let single = match cell.split {
        Some(Split::Single(t)) => t,
        _ => 1.0,
    };
    match cell.scheme {
        Scheme::ZfbfPerfect => average_over_uses(uses, |g| zfbf_perfect_rates(g, p)),
        Scheme::ZfbfRvq => average_over_uses(uses, |g| zfbf_rates(g, p)),
        Scheme::Tdma => average_over_uses(uses, |g| tdma_rates(g, p)),
        Scheme::Sumu => average_over_uses(uses, |g| sumu_rates(g, p)),
        Scheme::RsS => average_over_uses(uses, |g| rs_s_rates(g, p, single)),
        Scheme::RsSt => {
            let (ta, tb) = match cell.split {
                Some(Split::Pair { alpha, beta }) => (alpha, beta),
                _ => (single, single),
            };
            rs_st_rates(&[uses[0], uses[1]], p, ta, tb)
        }
    }
}

fn accumulate(spec: &ExperimentSpec, cells: &[Cell], exec: &Executor) -> Result<Vec<Block>> {
    let sampler = Sampler::new(spec);
    let chunks = exec.chunked(spec.trials, |start, end| {
        let mut blocks = vec![[RunningStats::new(); N_STATS]; cells.len()];
        for trial in start..end {
            let uses = sampler.realization(trial)?;
            for (cell, block) in cells.iter().zip(blocks.iter_mut()) {
                let s = scheme_sample(&uses, cell);
                let r = average_over_uses(&uses, |g| zfbf_perfect_rates(g, cell.snr));
                let (st, rt) = (s.total(), r.total());
                block[S_COMMON].push(s.common);
                block[S_PRIV0].push(s.private[0]);
                block[S_PRIV1].push(s.private[1]);
                block[S_TOTAL].push(st);
                block[R_PRIV0].push(r.private[0]);
                block[R_PRIV1].push(r.private[1]);
                block[R_TOTAL].push(rt);
                block[LOSS].push(rt - st);
            }
        }
        Ok(blocks)
    })?;
    let mut total = vec![[RunningStats::new(); N_STATS]; cells.len()];
    for blocks in &chunks {
        for (acc, b) in total.iter_mut().zip(blocks) {
            for (a, x) in acc.iter_mut().zip(b) {
                a.merge(x);
            }
        }
    }
    Ok(total)
}

/// Mean rates of the individual messages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub common: f64,
    pub private: [f64; 2],
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.common + self.private[0] + self.private[1]
    }
}

/// Monte Carlo estimate of an ergodic sum rate (or of a rate loss).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    pub breakdown: Breakdown,
}

impl RateEstimate {
    fn scheme(b: &Block, seed: u64) -> Self {
        Self {
            mean: b[S_TOTAL].mean(),
            stderr: b[S_TOTAL].stderr(),
            trials: b[S_TOTAL].count(),
            seed,
            breakdown: Breakdown {
                common: b[S_COMMON].mean(),
                private: [b[S_PRIV0].mean(), b[S_PRIV1].mean()],
            },
        }
    }

    fn reference(b: &Block, seed: u64) -> Self {
        Self {
            mean: b[R_TOTAL].mean(),
            stderr: b[R_TOTAL].stderr(),
            trials: b[R_TOTAL].count(),
            seed,
            breakdown: Breakdown {
                common: 0.0,
                private: [b[R_PRIV0].mean(), b[R_PRIV1].mean()],
            },
        }
    }

    /// Paired loss; the breakdown holds per-message differences.
    fn loss(b: &Block, seed: u64) -> Self {
        Self {
            mean: b[LOSS].mean(),
            stderr: b[LOSS].stderr(),
            trials: b[LOSS].count(),
            seed,
            breakdown: Breakdown {
                common: -b[S_COMMON].mean(),
                private: [
                    b[R_PRIV0].mean() - b[S_PRIV0].mean(),
                    b[R_PRIV1].mean() - b[S_PRIV1].mean(),
                ],
            },
        }
    }
}

/// Paired rate-loss estimate with both underlying rate estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate {
    /// Perfect-CSIT ZFBF sum rate minus the scheme's, averaged per trial.
    pub loss: RateEstimate,
    pub reference: RateEstimate,
    pub scheme: RateEstimate,
}

fn at_point(snr_db: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtPoint {
        snr_db,
        source: Box::new(e),
    }
}

fn split_grid(resolution: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..)
        .map(|i| i as f64 * resolution)
        .take_while(|&t| t < 1.0 - 1e-9)
        .collect();
    grid.push(1.0);
    grid
}

/// Cells of one SNR point: one per candidate split.
fn point_cells(spec: &ExperimentSpec, snr_db: f64) -> Result<Vec<Cell>> {
    let snr = db_to_linear(snr_db);
    match spec.split {
        SplitPolicy::Grid(res) if spec.scheme == Scheme::RsS => Ok(split_grid(res)
            .into_iter()
            .map(|t| Cell {
                scheme: spec.scheme,
                snr,
                split: Some(Split::Single(t)),
            })
            .collect()),
        _ => {
            let split = resolve_split(spec, snr_db).map_err(at_point(snr_db))?;
            Ok(vec![Cell {
                scheme: spec.scheme,
                snr,
                split,
            }])
        }
    }
}

/// Index of the best cell by scheme sum rate; ties keep the earlier one.
fn best_cell(blocks: &[Block]) -> usize {
    let mut best = 0;
    for (i, b) in blocks.iter().enumerate().skip(1) {
        if b[S_TOTAL].mean() > blocks[best][S_TOTAL].mean() {
            best = i;
        }
    }
    best
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub split: Option<Split>,
    pub estimate: RateEstimate,
    pub loss: RateEstimate,
    pub reference: RateEstimate,
}

/// Runs every SNR point of `spec` on one shared set of realizations.
pub fn sweep(spec: &ExperimentSpec, exec: &Executor) -> Result<Vec<SweepRow>> {
    Ok(sweep_many(std::slice::from_ref(spec), exec)?.remove(0))
}

/// Sweeps several specs on the same realizations. The specs may differ in
/// scheme, split policy and SNR grid only; everything that shapes the
/// random draws must match.
pub fn sweep_many(specs: &[ExperimentSpec], exec: &Executor) -> Result<Vec<Vec<SweepRow>>> {
    let Some(first) = specs.first() else {
        return Ok(Vec::new());
    };
    for spec in specs {
        spec.validate()?;
        let same = spec.antennas == first.antennas
            && spec.feedback == first.feedback
            && spec.quantizer == first.quantizer
            && spec.precoder == first.precoder
            && spec.trials == first.trials
            && spec.seed == first.seed;
        if !same {
            return Err(Error::Config(
                "jointly swept specs must share antennas, feedback, quantizer, precoder, trials and seed".into(),
            ));
        }
    }
    let mut cells = Vec::new();
    let mut ranges = Vec::new();
    for spec in specs {
        let mut per_spec = Vec::with_capacity(spec.snr_db.len());
        for &db in &spec.snr_db {
            let c = point_cells(spec, db)?;
            per_spec.push(cells.len()..cells.len() + c.len());
            cells.extend(c);
        }
        ranges.push(per_spec);
    }
    // The perfect-CSIT scheme alone needs no quantization.
    let sampler_spec = specs
        .iter()
        .find(|s| s.scheme != Scheme::ZfbfPerfect)
        .unwrap_or(first);
    let blocks = accumulate(sampler_spec, &cells, exec)?;
    Ok(specs
        .iter()
        .zip(ranges)
        .map(|(spec, per_spec)| {
            spec.snr_db
                .iter()
                .zip(per_spec)
                .map(|(&db, range)| {
                    let i = range.start + best_cell(&blocks[range]);
                    let b = &blocks[i];
                    SweepRow {
                        snr_db: db,
                        split: cells[i].split,
                        estimate: RateEstimate::scheme(b, spec.seed),
                        loss: RateEstimate::loss(b, spec.seed),
                        reference: RateEstimate::reference(b, spec.seed),
                    }
                })
                .collect()
        })
        .collect())
}

fn single_point(spec: &ExperimentSpec, snr_db: f64, exec: &Executor) -> Result<SweepRow> {
    let mut one = spec.clone();
    one.snr_db = vec![snr_db];
    Ok(sweep(&one, exec)?[0])
}

/// Ergodic sum rate of the scheme at one SNR point.
pub fn estimate_ergodic_rates(spec: &ExperimentSpec, snr_db: f64, exec: &Executor) -> Result<RateEstimate> {
    Ok(single_point(spec, snr_db, exec)?.estimate)
}

/// Paired loss against perfect-CSIT ZFBF on the same realizations.
pub fn estimate_rate_loss(spec: &ExperimentSpec, snr_db: f64, exec: &Executor) -> Result<LossEstimate> {
    let row = single_point(spec, snr_db, exec)?;
    Ok(LossEstimate {
        loss: row.loss,
        reference: row.reference,
        scheme: row.estimate,
    })
}

/// Exhaustive RS-S split search over `{res, 2 res, ..., 1}` with common
/// random numbers across candidates; ties go to the smaller `t`.
pub fn grid_search_t(
    spec: &ExperimentSpec,
    snr_db: f64,
    resolution: f64,
    exec: &Executor,
) -> Result<(f64, RateEstimate)> {
    let mut s = spec.clone();
    s.split = SplitPolicy::Grid(resolution);
    s.snr_db = vec![snr_db];
    s.validate()?;
    let row = sweep(&s, exec)?[0];
    match row.split {
        Some(Split::Single(t)) => Ok((t, row.estimate)),
        other => Err(Error::Config(format!("grid search produced split {other:?}"))),
    }
}

/// Sum rate of every candidate split on shared realizations, for curves of
/// rate versus `t`.
pub fn rate_vs_split(
    spec: &ExperimentSpec,
    snr_db: f64,
    splits: &[f64],
    exec: &Executor,
) -> Result<Vec<RateEstimate>> {
    let mut s = spec.clone();
    s.snr_db = vec![snr_db];
    s.split = SplitPolicy::Auto;
    s.validate()?;
    if s.scheme != Scheme::RsS {
        return Err(Error::Config("rate_vs_split applies to rs-s only".into()));
    }
    let snr = db_to_linear(snr_db);
    let cells: Vec<Cell> = splits
        .iter()
        .map(|&t| {
            if t > 0.0 && t <= 1.0 {
                Ok(Cell {
                    scheme: Scheme::RsS,
                    snr,
                    split: Some(Split::Single(t)),
                })
            } else {
                Err(Error::Config(format!("split t = {t} outside (0, 1]")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(accumulate(&s, &cells, exec)?
        .iter()
        .map(|b| RateEstimate::scheme(b, s.seed))
        .collect())
}

/// SNR (dB) at which a rising curve first reaches `rate`, by linear
/// interpolation. `None` if the curve never gets there.
pub fn snr_at_rate(curve: &[(f64, f64)], rate: f64) -> Option<f64> {
    if let Some(&(x, y)) = curve.first() {
        if y >= rate {
            return Some(x);
        }
    }
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 < rate && y1 >= rate {
            Some(x0 + (rate - y0) / (y1 - y0) * (x1 - x0))
        } else {
            None
        }
    })
}

/// Horizontal distance in dB between two rate-vs-SNR curves, measured at
/// the rate `reference` attains at `at_db`: positive when `reference` is
/// ahead of `other`.
pub fn horizontal_gap_db(reference: &[(f64, f64)], other: &[(f64, f64)], at_db: f64) -> Option<f64> {
    let rate = interpolate(reference, at_db)?;
    Some(snr_at_rate(other, rate)? - at_db)
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 <= x && x <= x1 {
            Some(y0 + (x - x0) / (x1 - x0) * (y1 - y0))
        } else {
            None
        }
    })
}

fn check_samples(m: usize, n: u64) -> Result<()> {
    if !(2..=MAX_ANTENNAS).contains(&m) {
        return Err(Error::Config(format!("M = {m} outside [2, {MAX_ANTENNAS}]")));
    }
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    Ok(())
}

fn collect_samples<T, F>(n: u64, exec: &Executor, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let chunks = exec.chunked(n, |start, end| (start..end).map(&f).collect::<Result<Vec<T>>>())?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Samples of `(|h^H w_c|², |h^H w|²)` with two independent isotropic beams.
pub fn sample_joint_gains(m: usize, n: u64, seed: u64, exec: &Executor) -> Result<Vec<(f64, f64)>> {
    check_samples(m, n)?;
    let streams = Streams::new(seed);
    collect_samples(n, exec, |i| {
        let mut rng = streams.get(i, ROLE_AUX);
        let h = sample_channel(m, &mut rng)?;
        let wc = sample_isotropic_unit(m, &mut rng);
        let w = sample_isotropic_unit(m, &mut rng);
        Ok((h.gain(&wc), h.gain(&w)))
    })
}

/// Samples of `[Y_1, Y_2]` with `Y_k = |h_k^H w_c|² / (1 + |h_k^H w_k|² Pt/2)`
/// from full RS-S realizations with `B`-bit feedback.
pub fn sample_common_ratios(
    m: usize,
    bits: f64,
    snr_db: f64,
    t: f64,
    n: u64,
    seed: u64,
    exec: &Executor,
) -> Result<Vec<[f64; 2]>> {
    check_samples(m, n)?;
    let spec = ExperimentSpec::new(Scheme::RsS, m, vec![snr_db], Feedback::Equal(bits))
        .with_split(SplitPolicy::Fixed(t))
        .with_trials(n)
        .with_seed(seed);
    spec.validate()?;
    let sampler = Sampler::new(&spec);
    let scale = db_to_linear(snr_db) * t / 2.0;
    collect_samples(n, exec, |i| {
        let g = sampler.realization(i)?[0];
        Ok([0, 1].map(|k| g.rx[k].common / (1.0 + g.rx[k].own * scale)))
    })
}

/// One RVQ draw: the quantization error and the leakage of a beam chosen
/// in the quantized direction's null space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationSample {
    /// `sin²∠(h, ĥ)`.
    pub sin2_error: f64,
    /// `|h̄^H w|²` for `w` isotropic in `ĥ^⊥`.
    pub leakage: f64,
}

/// Independent RVQ draws with the given quantizer.
pub fn sample_quantization(
    m: usize,
    bits: f64,
    mode: QuantizerMode,
    n: u64,
    seed: u64,
    exec: &Executor,
) -> Result<Vec<QuantizationSample>> {
    check_samples(m, n)?;
    let streams = Streams::new(seed);
    collect_samples(n, exec, |i| {
        let h = sample_channel(m, &mut streams.get(i, ROLE_CHANNEL))?;
        let report = quantize_rvq(&h, bits, mode, &mut streams.get(i, ROLE_CODEBOOK))?;
        let w = sample_unit_in_nullspace(&report.direction, &mut streams.get(i, ROLE_PRECODER));
        Ok(QuantizationSample {
            sin2_error: report.sin2_error,
            leakage: h.direction()?.gain(&w),
        })
    })
}
