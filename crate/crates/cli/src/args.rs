//! Command-line definitions and value parsers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use misobc_core::montecarlo::{Feedback, QuantizerChoice, Scheme, SplitPolicy, DEFAULT_TRIALS};
use misobc_core::schemes::PrecoderStrategy;

use crate::output::{format_float, Format};
use crate::presets::Preset;

#[derive(Debug, Parser)]
#[command(
    name = "misobc",
    version,
    about = "Rate-splitting over a two-receiver MISO broadcast channel with quantized feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo sum rates over an SNR grid.
    Simulate(SimulateArgs),
    /// Tabulate closed-form bounds and feedback laws.
    Bounds(BoundsArgs),
    /// Regenerate a figure's simulated and analytic curves.
    Figure(FigureArgs),
}

/// A list of numbers given as `x`, `a:step:b` or comma-separated mixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub text: String,
    pub values: Vec<f64>,
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let mut values = Vec::new();
    for item in s.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => values.push(parse_number(x)?),
            [a, step, b] => values.extend(expand_range(parse_number(a)?, parse_number(step)?, parse_number(b)?)?),
            _ => return Err(format!("`{item}` is neither a number nor a:step:b")),
        }
    }
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(Grid {
        text: s.to_owned(),
        values,
    })
}

fn parse_number(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// `a, a+step, ...` up to `b`, including `b` when the step divides evenly.
fn expand_range(a: f64, step: f64, b: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0) {
        return Err(format!("range step {step} must be positive"));
    }
    if b < a {
        return Err(format!("range end {b} is below its start {a}"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(format!("range {a}:{step}:{b} has too many points"));
    }
    // Rounding to 12 decimals keeps 0.1-type steps printable.
    Ok((0..=n)
        .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// `perfect`, `B`, or `Ba,Bb`.
#[derive(Debug, Clone, PartialEq)]
pub struct BitsArg(pub Feedback);

pub fn parse_bits(s: &str) -> Result<BitsArg, String> {
    let s = s.trim();
    if s == "perfect" {
        return Ok(BitsArg(Feedback::Perfect));
    }
    let nums: Vec<f64> = s.split(',').map(parse_number).collect::<Result<_, _>>()?;
    match nums.as_slice() {
        [b] => Ok(BitsArg(Feedback::Equal(*b))),
        [a, b] => Ok(BitsArg(Feedback::Alternating { alpha: *a, beta: *b })),
        _ => Err("expected `B`, `Ba,Bb` or `perfect`".into()),
    }
}

impl BitsArg {
    pub fn text(&self) -> String {
        match self.0 {
            Feedback::Perfect => "perfect".into(),
            Feedback::Equal(b) => format_float(b),
            Feedback::Alternating { alpha, beta } => format!("{},{}", format_float(alpha), format_float(beta)),
        }
    }
}

/// `auto`, `fixed=t`, `fixed=ta,tb`, `grid=res`, or a bare `t` / `ta,tb`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitArg(pub SplitPolicy);

pub fn parse_split(s: &str) -> Result<SplitArg, String> {
    let s = s.trim();
    if s == "auto" {
        return Ok(SplitArg(SplitPolicy::Auto));
    }
    if let Some(res) = s.strip_prefix("grid=") {
        return Ok(SplitArg(SplitPolicy::Grid(parse_number(res)?)));
    }
    let fixed = s.strip_prefix("fixed=").unwrap_or(s);
    let nums: Vec<f64> = fixed.split(',').map(parse_number).collect::<Result<_, _>>()?;
    match nums.as_slice() {
        [t] => Ok(SplitArg(SplitPolicy::Fixed(*t))),
        [a, b] => Ok(SplitArg(SplitPolicy::FixedPair { alpha: *a, beta: *b })),
        _ => Err("expected auto, fixed=<t>, fixed=<ta,tb> or grid=<res>".into()),
    }
}

impl SplitArg {
    pub fn text(&self) -> String {
        match self.0 {
            SplitPolicy::Auto => "auto".into(),
            SplitPolicy::Fixed(t) => format!("fixed={}", format_float(t)),
            SplitPolicy::FixedPair { alpha, beta } => {
                format!("fixed={},{}", format_float(alpha), format_float(beta))
            }
            SplitPolicy::Grid(r) => format!("grid={}", format_float(r)),
        }
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|_| {
        let all: Vec<&str> = Scheme::ALL.iter().map(|s| s.tag()).collect();
        format!("unknown scheme `{s}` (expected one of {})", all.join(", "))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantizerArg {
    Auto,
    Explicit,
    Statistical,
}

impl QuantizerArg {
    pub fn choice(self) -> QuantizerChoice {
        match self {
            QuantizerArg::Auto => QuantizerChoice::Auto,
            QuantizerArg::Explicit => QuantizerChoice::Explicit,
            QuantizerArg::Statistical => QuantizerChoice::Statistical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecoderArg {
    RandomNullspace,
    PseudoInverseSvd,
}

impl PrecoderArg {
    pub fn strategy(self) -> PrecoderStrategy {
        match self {
            PrecoderArg::RandomNullspace => PrecoderStrategy::RandomNullspace,
            PrecoderArg::PseudoInverseSvd => PrecoderStrategy::PseudoInverseSvd,
        }
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_owned()).unwrap_or_default()
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Transmit antennas.
    #[arg(long = "M")]
    pub antennas: usize,
    /// SNR points in dB, e.g. `0:5:40` or `10,20,30`.
    #[arg(long = "snr-db", value_parser = parse_grid)]
    pub snr_db: Grid,
    /// Feedback bits: `B`, `Ba,Bb` (alternating) or `perfect`.
    #[arg(long, value_parser = parse_bits)]
    pub bits: BitsArg,
    /// auto, fixed=<t>, fixed=<ta,tb> or grid=<res>.
    #[arg(long, default_value = "auto", value_parser = parse_split)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = QuantizerArg::Auto)]
    pub quantizer: QuantizerArg,
    #[arg(long, value_enum, default_value_t = PrecoderArg::RandomNullspace)]
    pub precoder: PrecoderArg,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub workers: Option<usize>,
}

impl SimulateArgs {
    /// Every flag that affects the output, in a fixed order.
    pub fn canonical(&self) -> String {
        format!(
            "simulate --scheme {} --M {} --snr-db {} --bits {} --split {} --quantizer {} --precoder {} --trials {} --seed {} --format {}",
            self.scheme,
            self.antennas,
            self.snr_db.text,
            self.bits.text(),
            self.split.text(),
            value_name(&self.quantizer),
            value_name(&self.precoder),
            self.trials,
            self.seed,
            self.format.tag(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    Prop1,
    Prop2,
    Prop3,
    Prop4,
    Prop5,
    Theta,
    Delta0,
    StGain,
    Bst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Exact,
    HighSnr,
}

/// Which display of a bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    /// The bound at the given split.
    Standard,
    /// High-SNR form at the closed-form split (prop1, prop3).
    Optimum,
    /// High-SNR form at `t = 1/sqrt(Λα Λβ)` (prop3).
    Relaxed,
    /// Split-free cap (prop3, prop5).
    Cap,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    #[arg(long = "M", default_value_t = 4)]
    pub antennas: usize,
    #[arg(long = "snr-db", value_parser = parse_grid, default_value = "30")]
    pub snr_db: Grid,
    /// `B` or `Ba,Bb`.
    #[arg(long, value_parser = parse_bits)]
    pub bits: Option<BitsArg>,
    /// Loss targets δ (bound value log2 δ).
    #[arg(long, value_parser = parse_grid)]
    pub delta: Option<Grid>,
    /// Budget discrepancies τ = Bβ - Bα.
    #[arg(long, value_parser = parse_grid)]
    pub tau: Option<Grid>,
    /// auto, fixed=<t>, fixed=<ta,tb>, or a bare value.
    #[arg(long, visible_alias = "t", default_value = "auto", value_parser = parse_split)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = RegimeArg::Exact)]
    pub regime: RegimeArg,
    #[arg(long, value_enum, default_value_t = Form::Standard)]
    pub form: Form,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl BoundsArgs {
    pub fn canonical(&self) -> String {
        let mut s = format!(
            "bounds --formula {} --M {} --snr-db {}",
            value_name(&self.formula),
            self.antennas,
            self.snr_db.text
        );
        if let Some(b) = &self.bits {
            s.push_str(&format!(" --bits {}", b.text()));
        }
        if let Some(d) = &self.delta {
            s.push_str(&format!(" --delta {}", d.text));
        }
        if let Some(t) = &self.tau {
            s.push_str(&format!(" --tau {}", t.text));
        }
        s.push_str(&format!(
            " --split {} --regime {} --form {} --format {}",
            self.split.text(),
            value_name(&self.regime),
            value_name(&self.form),
            self.format.tag()
        ));
        s
    }
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    /// Directory receiving `<preset>.csv` and `<preset>.manifest.json`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Trials per simulated point; distribution presets draw five times as
    /// many samples.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Override the preset's average feedback budget.
    #[arg(long)]
    pub bbar: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

impl FigureArgs {
    pub fn canonical(&self) -> String {
        let mut s = format!(
            "figure {} --trials {} --seed {}",
            value_name(&self.preset),
            self.trials,
            self.seed
        );
        if let Some(b) = self.bbar {
            s.push_str(&format!(" --bbar {}", format_float(b)));
        }
        s
    }
}
