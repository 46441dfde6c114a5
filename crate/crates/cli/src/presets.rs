//! `misobc figure`: presets that regenerate a plot's simulated and analytic
//! curves as a long-format CSV plus a JSON manifest.

use std::f64::consts::LN_2;
use std::path::Path;

use clap::ValueEnum;
use misobc_core::analytics::{
    bound_rs_s_eq, bound_rs_s_rs, bound_rs_st, cdf_y_upper, cdf_yk_approx, feedback_bits_rs_s_eq,
    feedback_bits_rs_s_rs, feedback_bits_rs_st, joint_cdf, joint_cdf_independent, overhead_reduction_eq,
    Regime,
};
use misobc_core::montecarlo::{
    sample_common_ratios, sample_joint_gains, sweep, sweep_many, Executor, ExperimentSpec, Feedback, RateEstimate,
    Scheme, SplitPolicy, SweepRow,
};
use misobc_core::numerics::phi;
use misobc_core::schemes::{
    power_split_eq, power_split_eq_delta, power_split_rs, power_split_rs_delta, power_split_st, PrecoderStrategy,
};
use misobc_core::stats::EmpiricalCdf;
use misobc_core::{db_to_linear, Error};
use serde_json::{json, Value as Json};

use crate::args::FigureArgs;
use crate::error::CliError;
use crate::output::{write_atomic, Envelope, Format, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Joint CDF of the common and private beam gains.
    CdfJoint,
    /// CDF of the common-message SINR ratio Y_k and of Y = min(Y_1, Y_2).
    CdfYk,
    /// RS-S and ZFBF-RVQ rate loss against their bounds, equal budgets.
    RatelossEq,
    /// Sum rates with fixed equal budgets.
    SumrateEq,
    /// Feedback needed for a target loss, equal budgets.
    OverheadEq,
    /// Sum rates with budgets scaled by the feedback law, equal budgets.
    SumrateScaledEq,
    /// Feedback needed for a target loss versus the budget discrepancy.
    OverheadVsTau,
    /// RS-S, RS-ST and ZFBF-RVQ rate loss with alternating budgets.
    RatelossRs,
    /// Sum rates with alternating budgets.
    SumrateRs,
    /// Feedback needed for a target loss with RS-ST.
    OverheadSt,
    /// Sum rates with scaled alternating budgets, including RS-ST.
    SumrateScaledSt,
    /// RS-S against SU/MU switching, equal budgets.
    CompareSumuEq,
    /// RS-S and RS-ST against SU/MU switching, alternating budgets.
    CompareSumuRs,
}

impl Preset {
    pub fn tag(&self) -> String {
        self.to_possible_value()
            .map(|p| p.get_name().to_owned())
            .unwrap_or_default()
    }
}

/// Figure parameters, shared with the acceptance suite.
pub mod params {
    /// SNR grid of the fixed-budget equal-feedback figures.
    pub const SNR_DB: [f64; 9] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
    pub const EQ_ANTENNAS: usize = 4;
    pub const EQ_BITS: f64 = 10.0;
    pub const EQ_BITS_HIGH: f64 = 15.0;
    /// Resolution of the exhaustive split search.
    pub const GRID_RESOLUTION: f64 = 0.01;

    pub const JOINT_ANTENNAS: [usize; 3] = [2, 4, 6];
    pub const DIST_ANTENNAS: usize = 4;
    pub const DIST_SNR_DB: f64 = 30.0;
    pub const DIST_SPLIT: f64 = 0.2;
    pub const DIST_BITS: f64 = 10.0;
    /// Distribution presets draw this many samples per simulated trial.
    pub const DIST_OVERSAMPLE: u64 = 5;

    /// Target loss `log2 δ` in bps/Hz.
    pub const LOSS_TARGET_LOG2: f64 = 6.0;
    pub const SCALED_SNR_DB: [f64; 7] = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
    /// Dense grid for analytic overhead curves.
    pub const OVERHEAD_SNR_STEP_DB: f64 = 1.0;
    pub const OVERHEAD_SNR_MAX_DB: f64 = 40.0;

    pub const TAU_ANTENNAS: usize = 4;
    pub const TAU_SNR_DB: f64 = 30.0;
    pub const TAU_MAX: f64 = 20.0;

    pub const RS_ANTENNAS: usize = 2;
    pub const RS_BBAR: f64 = 10.0;
    pub const RS_TAUS: [f64; 2] = [6.0, 10.0];
    /// Extended to 50 dB so RS-S reaches the RS-ST rates of the upper end.
    pub const RS_SNR_DB: [f64; 11] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0];

    pub const ST_ANTENNAS: usize = 4;
    pub const ST_TAU: f64 = 14.0;

    pub const SUMU_ANTENNAS: usize = 4;
    pub const SUMU_BITS: [f64; 2] = [10.0, 15.0];
    pub const SUMU_TAU: f64 = 18.0;
    pub const SUMU_BBAR: f64 = 15.0;

    pub fn loss_target() -> f64 {
        LOSS_TARGET_LOG2.exp2()
    }

    pub fn overhead_snr_db() -> Vec<f64> {
        let n = (OVERHEAD_SNR_MAX_DB / OVERHEAD_SNR_STEP_DB).round() as usize;
        (0..=n).map(|i| i as f64 * OVERHEAD_SNR_STEP_DB).collect()
    }
}

/// A feedback law's value used as a budget; negative laws mean no feedback.
pub fn budget_from_law(bits: f64) -> f64 {
    bits.max(0.0)
}

/// Alternating budgets `B̄ ∓ τ/2`, clipped at zero.
pub fn alternating(bbar: f64, tau: f64) -> Feedback {
    Feedback::Alternating {
        alpha: budget_from_law(bbar - tau / 2.0),
        beta: budget_from_law(bbar + tau / 2.0),
    }
}

/// Perfect-CSIT ZFBF sum rate, `2 φ(P/2) / ln 2`.
pub fn perfect_sum_rate(snr_db: f64) -> Result<f64, Error> {
    Ok(2.0 * phi(db_to_linear(snr_db) / 2.0)? / LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub label: &'static str,
    pub scale: Scale,
}

impl Axis {
    fn linear(label: &'static str) -> Self {
        Self {
            label,
            scale: Scale::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Simulated,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub kind: Kind,
    pub description: String,
    pub points: Vec<Point>,
}

impl Series {
    fn new(name: impl Into<String>, kind: Kind, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind,
            description: description.into(),
            points: Vec::new(),
        }
    }

    fn push(&mut self, x: f64, y: f64, stderr: Option<f64>) {
        self.points.push(Point { x, y, stderr });
    }

    fn push_estimate(&mut self, x: f64, e: &RateEstimate) {
        self.push(x, e.mean, Some(e.stderr));
    }

    /// `(x, y)` pairs, for curve comparisons.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }
}

/// Every curve of one preset plus what is needed to plot it.
#[derive(Debug, Clone)]
pub struct Figure {
    pub preset: Preset,
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
    pub parameters: Json,
}

impl Figure {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["series", "x", "y", "stderr"]);
        for s in &self.series {
            for p in &s.points {
                t.push(vec![
                    ("series", s.name.as_str().into()),
                    ("x", p.x.into()),
                    ("y", p.y.into()),
                    ("stderr", p.stderr.into()),
                ]);
            }
        }
        t
    }

    pub fn manifest(&self, envelope: &Envelope) -> Json {
        let axis = |a: &Axis| {
            json!({
                "label": a.label,
                "scale": match a.scale { Scale::Linear => "linear", Scale::Log => "log" },
            })
        };
        let series: Vec<Json> = self
            .series
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "kind": match s.kind { Kind::Simulated => "simulated", Kind::Analytic => "analytic" },
                    "description": s.description,
                    "points": s.points.len(),
                })
            })
            .collect();
        json!({
            "preset": self.preset.tag(),
            "title": self.title,
            "x": axis(&self.x),
            "y": axis(&self.y),
            "series": series,
            "parameters": self.parameters,
            "header": envelope.json(),
        })
    }
}

/// Run-time knobs of a preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOptions {
    pub trials: u64,
    pub seed: u64,
    /// Overrides the average budget of presets that have one.
    pub bbar: Option<f64>,
}

impl FigureOptions {
    fn spec(&self, scheme: Scheme, m: usize, snr_db: &[f64], feedback: Feedback) -> ExperimentSpec {
        ExperimentSpec::new(scheme, m, snr_db.to_vec(), feedback)
            .with_trials(self.trials)
            .with_seed(self.seed)
    }

}

/// Evaluates `f` over `xs`, leaving out points where the closed form is
/// numerically unavailable (e.g. an infeasible feedback law).
fn analytic(
    name: &str,
    description: &str,
    xs: &[f64],
    f: impl Fn(f64) -> Result<f64, Error>,
) -> Result<Series, CliError> {
    let mut s = Series::new(name, Kind::Analytic, description);
    for &x in xs {
        match f(x) {
            Ok(y) => s.push(x, y, None),
            Err(e) if e.is_numerical() => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(s)
}

fn simulated(name: &str, description: &str, rows: &[SweepRow], pick: impl Fn(&SweepRow) -> &RateEstimate) -> Series {
    let mut s = Series::new(name, Kind::Simulated, description);
    for r in rows {
        s.push_estimate(r.snr_db, pick(r));
    }
    s
}

fn eq_bound(db: f64, m: usize, bits: f64, t: Option<f64>) -> Result<f64, Error> {
    let p = db_to_linear(db);
    let t = match t {
        Some(t) => t,
        None => power_split_eq(p, m, bits)?,
    };
    Ok(bound_rs_s_eq(p, m, bits, t, Regime::Exact)?.value)
}

fn pair(f: Feedback) -> (f64, f64) {
    match f {
        Feedback::Alternating { alpha, beta } => (alpha, beta),
        Feedback::Equal(b) => (b, b),
        Feedback::Perfect => (f64::INFINITY, f64::INFINITY),
    }
}

fn rs_bound(db: f64, m: usize, f: Feedback, t: Option<f64>) -> Result<f64, Error> {
    let p = db_to_linear(db);
    let (a, b) = pair(f);
    let t = match t {
        Some(t) => t,
        None => power_split_rs(p, m, a, b)?,
    };
    Ok(bound_rs_s_rs(p, m, a, b, t, Regime::Exact)?.value)
}

fn st_bound(db: f64, m: usize, f: Feedback) -> Result<f64, Error> {
    let p = db_to_linear(db);
    let (a, b) = pair(f);
    let (ta, tb) = power_split_st(p, m, a, b)?;
    Ok(bound_rs_st(p, m, a, b, ta, tb, Regime::Exact)?.value)
}

fn perfect_curve(xs: &[f64]) -> Result<Series, CliError> {
    analytic("zfbf-perfect-analytic", "perfect-CSIT ZFBF, 2 φ(P/2) / ln 2", xs, perfect_sum_rate)
}

fn target_curve(xs: &[f64]) -> Result<Series, CliError> {
    analytic(
        "loss-target",
        "perfect-CSIT ZFBF sum rate minus the target loss log2 δ",
        xs,
        |db| Ok(perfect_sum_rate(db)? - params::LOSS_TARGET_LOG2),
    )
}

fn bits_tag(b: f64) -> String {
    format!("B{}", crate::output::format_float(b))
}

fn cdf_joint(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let xs: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
    let n = o.trials * params::DIST_OVERSAMPLE;
    let mut series = Vec::new();
    for &m in &params::JOINT_ANTENNAS {
        let samples = sample_joint_gains(m, n, o.seed, exec)?;
        let mut emp = Series::new(
            format!("empirical-M{m}"),
            Kind::Simulated,
            format!("empirical P(X1 ≤ x, X2 ≤ x), M = {m}"),
        );
        for &x in &xs {
            let hits = samples.iter().filter(|&&(a, b)| a <= x && b <= x).count();
            let f = hits as f64 / samples.len() as f64;
            emp.push(x, f, Some((f * (1.0 - f) / samples.len() as f64).sqrt()));
        }
        series.push(emp);
        series.push(analytic(
            &format!("exact-M{m}"),
            &format!("closed-form joint CDF on the diagonal, M = {m}"),
            &xs,
            |x| joint_cdf(x, x, m),
        )?);
    }
    series.push(analytic(
        "independent",
        "product of exponential marginals (1 - e^-x)²",
        &xs,
        |x| Ok(joint_cdf_independent(x, x)),
    )?);
    Ok(Figure {
        preset: Preset::CdfJoint,
        title: "Joint CDF of the common and private beam gains on the diagonal x1 = x2".into(),
        x: Axis::linear("x"),
        y: Axis::linear("F(x, x)"),
        series,
        parameters: json!({ "antennas": params::JOINT_ANTENNAS, "samples": n }),
    })
}

fn cdf_yk(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, db, t, bits) = (params::DIST_ANTENNAS, params::DIST_SNR_DB, params::DIST_SPLIT, params::DIST_BITS);
    let p = db_to_linear(db);
    let ys: Vec<f64> = (0..=18).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let n = o.trials * params::DIST_OVERSAMPLE;
    let samples = sample_common_ratios(m, bits, db, t, n, o.seed, exec)?;
    let pooled = EmpiricalCdf::new(samples.iter().flat_map(|y| *y).collect());
    let minimum = EmpiricalCdf::new(samples.iter().map(|y| y[0].min(y[1])).collect());
    let mut series = Vec::new();
    for (name, description, cdf) in [
        ("empirical-yk", "empirical CDF of Y_k, both receivers pooled", &pooled),
        ("empirical-y", "empirical CDF of Y = min(Y_1, Y_2)", &minimum),
    ] {
        let mut s = Series::new(name, Kind::Simulated, description);
        for &y in &ys {
            let f = cdf.eval(y);
            s.push(y, f, Some((f * (1.0 - f) / cdf.len() as f64).sqrt()));
        }
        series.push(s);
    }
    series.push(analytic(
        "approx-yk",
        "CDF of Y_k under independent exponential gains",
        &ys,
        |y| Ok(cdf_yk_approx(y, p, t)),
    )?);
    series.push(analytic(
        "upper-y",
        "upper bound on the CDF of Y",
        &ys,
        |y| Ok(cdf_y_upper(y, p, t)),
    )?);
    Ok(Figure {
        preset: Preset::CdfYk,
        title: format!("CDF of Y_k at {db} dB, t = {t}, B = {bits}, M = {m}"),
        x: Axis {
            label: "y",
            scale: Scale::Log,
        },
        y: Axis::linear("CDF"),
        series,
        parameters: json!({ "M": m, "snr_db": db, "t": t, "bits": bits, "samples": n }),
    })
}

fn rateloss_eq(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, b, grid) = (params::EQ_ANTENNAS, params::EQ_BITS, &params::SNR_DB);
    let fb = Feedback::Equal(b);
    let rows = sweep_many(
        &[o.spec(Scheme::ZfbfRvq, m, grid, fb), o.spec(Scheme::RsS, m, grid, fb)],
        exec,
    )?;
    let series = vec![
        simulated("zfbf-rvq-sim", "ZFBF with RVQ, paired loss", &rows[0], |r| &r.loss),
        analytic("zfbf-rvq-bound", "loss bound at t = 1", grid, |db| eq_bound(db, m, b, Some(1.0)))?,
        simulated("rs-s-sim", "RS-S at the closed-form split, paired loss", &rows[1], |r| &r.loss),
        analytic("rs-s-bound", "loss bound at the closed-form split", grid, |db| eq_bound(db, m, b, None))?,
    ];
    Ok(Figure {
        preset: Preset::RatelossEq,
        title: format!("Sum rate loss against perfect-CSIT ZFBF, M = {m}, B = {b}"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("rate loss (bps/Hz)"),
        series,
        parameters: json!({ "M": m, "bits": b, "snr_db": grid, "trials": o.trials }),
    })
}

fn sumrate_eq(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, grid) = (params::EQ_ANTENNAS, &params::SNR_DB);
    let mut series = Vec::new();
    for (i, &b) in [params::EQ_BITS, params::EQ_BITS_HIGH].iter().enumerate() {
        let fb = Feedback::Equal(b);
        let rows = sweep_many(
            &[
                o.spec(Scheme::ZfbfRvq, m, grid, fb),
                o.spec(Scheme::RsS, m, grid, fb),
                o.spec(Scheme::RsS, m, grid, fb).with_split(SplitPolicy::Grid(params::GRID_RESOLUTION)),
            ],
            exec,
        )?;
        let tag = bits_tag(b);
        if i == 0 {
            series.push(simulated("zfbf-perfect-sim", "ZFBF with perfect CSIT", &rows[1], |r| &r.reference));
        }
        series.push(simulated(&format!("zfbf-rvq-{tag}"), "ZFBF with RVQ", &rows[0], |r| &r.estimate));
        series.push(simulated(
            &format!("rs-s-{tag}"),
            "RS-S at the closed-form split",
            &rows[1],
            |r| &r.estimate,
        ));
        series.push(simulated(
            &format!("rs-s-grid-{tag}"),
            "RS-S at the best split on a 0.01 grid",
            &rows[2],
            |r| &r.estimate,
        ));
        series.push(analytic(
            &format!("rs-s-lower-{tag}"),
            "perfect-CSIT rate minus the RS-S loss bound",
            grid,
            |db| Ok(perfect_sum_rate(db)? - eq_bound(db, m, b, None)?),
        )?);
    }
    series.push(perfect_curve(grid)?);
    Ok(Figure {
        preset: Preset::SumrateEq,
        title: format!("Ergodic sum rate, M = {m}, equal fixed budgets"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("sum rate (bps/Hz)"),
        series,
        parameters: json!({
            "M": m,
            "bits": [params::EQ_BITS, params::EQ_BITS_HIGH],
            "grid_resolution": params::GRID_RESOLUTION,
            "snr_db": grid,
            "trials": o.trials,
        }),
    })
}

/// `B(δ, 1)` and `B(δ, t2)` with equal budgets.
fn eq_laws(db: f64, m: usize) -> Result<(f64, f64, f64), Error> {
    let (delta, p) = (params::loss_target(), db_to_linear(db));
    let t2 = power_split_eq_delta(delta)?;
    let b1 = feedback_bits_rs_s_eq(delta, 1.0, p, m, Regime::Exact)?.value;
    let b2 = feedback_bits_rs_s_eq(delta, t2, p, m, Regime::Exact)?.value;
    Ok((b1, b2, t2))
}

fn overhead_eq(_: &FigureOptions, _: &Executor) -> Result<Figure, CliError> {
    let m = params::EQ_ANTENNAS;
    let grid = params::overhead_snr_db();
    let delta = params::loss_target();
    let series = vec![
        analytic("zfbf-rvq", "bits for ZFBF with RVQ, B(δ, 1)", &grid, |db| Ok(eq_laws(db, m)?.0))?,
        analytic("rs-s", "bits for RS-S at its scaled-law split", &grid, |db| Ok(eq_laws(db, m)?.1))?,
        analytic("reduction", "difference of the two budgets", &grid, |db| {
            let (b1, b2, _) = eq_laws(db, m)?;
            Ok(b1 - b2)
        })?,
        analytic("reduction-limit", "high-SNR limit of the reduction", &grid, |_| {
            overhead_reduction_eq(delta, m)
        })?,
    ];
    Ok(Figure {
        preset: Preset::OverheadEq,
        title: format!("Feedback bits for at most log2 δ = {} bps/Hz loss, M = {m}", params::LOSS_TARGET_LOG2),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("feedback bits"),
        series,
        parameters: json!({ "M": m, "delta": delta, "regime": "exact" }),
    })
}

/// Sweeps one point per SNR, each with its own feedback and split.
fn scaled_rows(
    o: &FigureOptions,
    exec: &Executor,
    scheme: Scheme,
    m: usize,
    grid: &[f64],
    plan: impl Fn(f64) -> Result<Option<(Feedback, SplitPolicy)>, Error>,
) -> Result<Vec<SweepRow>, CliError> {
    let mut rows = Vec::new();
    for &db in grid {
        let Some((fb, split)) = plan(db)? else {
            continue;
        };
        let spec = o.spec(scheme, m, &[db], fb).with_split(split);
        rows.extend(sweep(&spec, exec)?);
    }
    Ok(rows)
}

/// Skips points whose feedback law is infeasible.
fn feasible<T>(r: Result<T, Error>) -> Result<Option<T>, Error> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(e) if e.is_numerical() => Ok(None),
        Err(e) => Err(e),
    }
}

fn sumrate_scaled_eq(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, grid) = (params::EQ_ANTENNAS, &params::SCALED_SNR_DB);
    let zf = scaled_rows(o, exec, Scheme::ZfbfRvq, m, grid, |db| {
        Ok(feasible(eq_laws(db, m))?.map(|(b1, _, _)| (Feedback::Equal(budget_from_law(b1)), SplitPolicy::Auto)))
    })?;
    let rs = scaled_rows(o, exec, Scheme::RsS, m, grid, |db| {
        Ok(feasible(eq_laws(db, m))?
            .map(|(_, b2, t2)| (Feedback::Equal(budget_from_law(b2)), SplitPolicy::Fixed(t2))))
    })?;
    let series = vec![
        simulated("zfbf-perfect-sim", "ZFBF with perfect CSIT", &zf, |r| &r.reference),
        simulated("zfbf-rvq-sim", "ZFBF with RVQ at B(δ, 1)", &zf, |r| &r.estimate),
        simulated("rs-s-sim", "RS-S at its scaled-law budget and split", &rs, |r| &r.estimate),
        simulated("zfbf-rvq-loss", "paired loss of ZFBF with RVQ", &zf, |r| &r.loss),
        simulated("rs-s-loss", "paired loss of RS-S", &rs, |r| &r.loss),
        target_curve(grid)?,
    ];
    Ok(Figure {
        preset: Preset::SumrateScaledEq,
        title: format!("Sum rate with budgets scaled for log2 δ = {} bps/Hz, M = {m}", params::LOSS_TARGET_LOG2),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("sum rate (bps/Hz)"),
        series,
        parameters: json!({ "M": m, "delta": params::loss_target(), "snr_db": grid, "trials": o.trials }),
    })
}

/// Average budgets `B̄(δ, 1)` and `B̄(δ, t2)` with alternating budgets, and
/// the split `t2`.
fn rs_laws(db: f64, tau: f64, m: usize) -> Result<(f64, f64, f64), Error> {
    let (delta, p) = (params::loss_target(), db_to_linear(db));
    let t2 = power_split_rs_delta(delta, tau, m)?;
    let b1 = feedback_bits_rs_s_rs(delta, 1.0, tau, p, m, Regime::Exact)?.value;
    let b2 = feedback_bits_rs_s_rs(delta, t2, tau, p, m, Regime::Exact)?.value;
    Ok((b1, b2, t2))
}

fn st_law(db: f64, tau: f64, m: usize) -> Result<f64, Error> {
    Ok(feedback_bits_rs_st(params::loss_target(), tau, db_to_linear(db), m)?.value)
}

fn overhead_vs_tau(_: &FigureOptions, _: &Executor) -> Result<Figure, CliError> {
    let (m, db) = (params::TAU_ANTENNAS, params::TAU_SNR_DB);
    let taus: Vec<f64> = (0..=params::TAU_MAX as usize).map(|i| i as f64).collect();
    let series = vec![
        analytic("zfbf-rvq", "average bits for ZFBF with RVQ", &taus, |tau| Ok(rs_laws(db, tau, m)?.0))?,
        analytic("rs-s", "average bits for RS-S at its scaled-law split", &taus, |tau| {
            Ok(rs_laws(db, tau, m)?.1)
        })?,
    ];
    Ok(Figure {
        preset: Preset::OverheadVsTau,
        title: format!("Average feedback bits versus τ, M = {m}, P = {db} dB"),
        x: Axis::linear("τ (bits)"),
        y: Axis::linear("average feedback bits"),
        series,
        parameters: json!({ "M": m, "snr_db": db, "delta": params::loss_target(), "regime": "exact" }),
    })
}

fn rateloss_rs(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, grid, tau) = (params::RS_ANTENNAS, &params::RS_SNR_DB, params::RS_TAUS[0]);
    let bbar = o.bbar.unwrap_or(params::RS_BBAR);
    let fb = alternating(bbar, tau);
    let rows = sweep_many(
        &[
            o.spec(Scheme::ZfbfRvq, m, grid, fb),
            o.spec(Scheme::RsS, m, grid, fb),
            o.spec(Scheme::RsS, m, grid, fb).with_split(SplitPolicy::Grid(params::GRID_RESOLUTION)),
            o.spec(Scheme::RsSt, m, grid, fb),
        ],
        exec,
    )?;
    let series = vec![
        simulated("zfbf-rvq-sim", "ZFBF with RVQ, paired loss", &rows[0], |r| &r.loss),
        analytic("zfbf-rvq-bound", "loss bound at t = 1", grid, |db| rs_bound(db, m, fb, Some(1.0)))?,
        simulated("rs-s-sim", "RS-S at the closed-form split, paired loss", &rows[1], |r| &r.loss),
        simulated("rs-s-grid-sim", "RS-S at the best split on a 0.01 grid", &rows[2], |r| &r.loss),
        analytic("rs-s-bound", "loss bound at the closed-form split", grid, |db| rs_bound(db, m, fb, None))?,
        simulated("rs-st-sim", "RS-ST at the closed-form splits, paired loss", &rows[3], |r| &r.loss),
        analytic("rs-st-bound", "RS-ST loss bound at the closed-form splits", grid, |db| st_bound(db, m, fb))?,
    ];
    Ok(Figure {
        preset: Preset::RatelossRs,
        title: format!("Sum rate loss with alternating budgets, M = {m}, B̄ = {bbar}, τ = {tau}"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("rate loss (bps/Hz)"),
        series,
        parameters: json!({ "M": m, "bbar": bbar, "tau": tau, "snr_db": grid, "trials": o.trials }),
    })
}

fn sumrate_rs(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, grid) = (params::RS_ANTENNAS, &params::RS_SNR_DB);
    let bbar = o.bbar.unwrap_or(params::RS_BBAR);
    let mut series = Vec::new();
    for (i, &tau) in params::RS_TAUS.iter().enumerate() {
        let fb = alternating(bbar, tau);
        let rows = sweep_many(
            &[
                o.spec(Scheme::ZfbfRvq, m, grid, fb),
                o.spec(Scheme::RsS, m, grid, fb),
                o.spec(Scheme::RsSt, m, grid, fb),
            ],
            exec,
        )?;
        if i == 0 {
            series.push(simulated("zfbf-perfect-sim", "ZFBF with perfect CSIT", &rows[0], |r| &r.reference));
        }
        let tag = format!("tau{}", crate::output::format_float(tau));
        series.push(simulated(&format!("zfbf-rvq-{tag}"), "ZFBF with RVQ", &rows[0], |r| &r.estimate));
        series.push(simulated(&format!("rs-s-{tag}"), "RS-S at the closed-form split", &rows[1], |r| &r.estimate));
        series.push(simulated(
            &format!("rs-st-{tag}"),
            "RS-ST at the closed-form splits",
            &rows[2],
            |r| &r.estimate,
        ));
    }
    series.push(perfect_curve(grid)?);
    Ok(Figure {
        preset: Preset::SumrateRs,
        title: format!("Sum rate with alternating budgets, M = {m}, B̄ = {bbar}"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("sum rate (bps/Hz)"),
        series,
        parameters: json!({ "M": m, "bbar": bbar, "tau": params::RS_TAUS, "snr_db": grid, "trials": o.trials }),
    })
}

fn overhead_st(_: &FigureOptions, _: &Executor) -> Result<Figure, CliError> {
    let (m, tau) = (params::ST_ANTENNAS, params::ST_TAU);
    let grid = params::overhead_snr_db();
    let series = vec![
        analytic("zfbf-rvq", "average bits for ZFBF with RVQ", &grid, |db| Ok(rs_laws(db, tau, m)?.0))?,
        analytic("rs-s", "average bits for RS-S at its scaled-law split", &grid, |db| {
            Ok(rs_laws(db, tau, m)?.1)
        })?,
        analytic("rs-st", "average bits for RS-ST", &grid, |db| st_law(db, tau, m))?,
    ];
    Ok(Figure {
        preset: Preset::OverheadSt,
        title: format!("Average feedback bits for at most log2 δ = {} bps/Hz loss, M = {m}, τ = {tau}", params::LOSS_TARGET_LOG2),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("average feedback bits"),
        series,
        parameters: json!({ "M": m, "tau": tau, "delta": params::loss_target(), "regime": "exact" }),
    })
}

fn sumrate_scaled_st(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, tau, grid) = (params::ST_ANTENNAS, params::ST_TAU, &params::SCALED_SNR_DB);
    let zf = scaled_rows(o, exec, Scheme::ZfbfRvq, m, grid, |db| {
        Ok(feasible(rs_laws(db, tau, m))?.map(|(b1, _, _)| (alternating(b1, tau), SplitPolicy::Auto)))
    })?;
    let rs = scaled_rows(o, exec, Scheme::RsS, m, grid, |db| {
        Ok(feasible(rs_laws(db, tau, m))?.map(|(_, b2, t2)| (alternating(b2, tau), SplitPolicy::Fixed(t2))))
    })?;
    let st = scaled_rows(o, exec, Scheme::RsSt, m, grid, |db| {
        Ok(feasible(st_law(db, tau, m))?.map(|b| (alternating(b, tau), SplitPolicy::Auto)))
    })?;
    let series = vec![
        simulated("zfbf-perfect-sim", "ZFBF with perfect CSIT", &zf, |r| &r.reference),
        simulated("zfbf-rvq-sim", "ZFBF with RVQ at B̄(δ, 1)", &zf, |r| &r.estimate),
        simulated("rs-s-sim", "RS-S at its scaled-law budget and split", &rs, |r| &r.estimate),
        simulated("rs-st-sim", "RS-ST at its scaled-law budget", &st, |r| &r.estimate),
        simulated("zfbf-rvq-loss", "paired loss of ZFBF with RVQ", &zf, |r| &r.loss),
        simulated("rs-s-loss", "paired loss of RS-S", &rs, |r| &r.loss),
        simulated("rs-st-loss", "paired loss of RS-ST", &st, |r| &r.loss),
        target_curve(grid)?,
    ];
    Ok(Figure {
        preset: Preset::SumrateScaledSt,
        title: format!("Sum rate with scaled alternating budgets, M = {m}, τ = {tau}"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("sum rate (bps/Hz)"),
        series,
        parameters: json!({
            "M": m,
            "tau": tau,
            "delta": params::loss_target(),
            "snr_db": grid,
            "trials": o.trials,
        }),
    })
}

fn compare_sumu_eq(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, grid) = (params::SUMU_ANTENNAS, &params::SNR_DB);
    let mut series = Vec::new();
    for &b in &params::SUMU_BITS {
        let fb = Feedback::Equal(b);
        let specs = [Scheme::RsS, Scheme::Sumu]
            .map(|s| o.spec(s, m, grid, fb).with_precoder(PrecoderStrategy::PseudoInverseSvd));
        let rows = sweep_many(&specs, exec)?;
        let tag = bits_tag(b);
        series.push(simulated(&format!("rs-s-{tag}"), "RS-S, pseudo-inverse/SVD precoders", &rows[0], |r| &r.estimate));
        series.push(simulated(&format!("sumu-{tag}"), "SU/MU switching", &rows[1], |r| &r.estimate));
    }
    Ok(Figure {
        preset: Preset::CompareSumuEq,
        title: format!("RS-S against SU/MU switching, M = {m}"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("sum rate (bps/Hz)"),
        series,
        parameters: json!({
            "M": m,
            "bits": params::SUMU_BITS,
            "precoder": "pseudo-inverse-svd",
            "snr_db": grid,
            "trials": o.trials,
        }),
    })
}

fn compare_sumu_rs(o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    let (m, tau, grid) = (params::SUMU_ANTENNAS, params::SUMU_TAU, &params::RS_SNR_DB);
    let bbar = o.bbar.unwrap_or(params::SUMU_BBAR);
    let fb = alternating(bbar, tau);
    let specs = [Scheme::RsS, Scheme::RsSt, Scheme::Sumu]
        .map(|s| o.spec(s, m, grid, fb).with_precoder(PrecoderStrategy::PseudoInverseSvd));
    let rows = sweep_many(&specs, exec)?;
    let series = vec![
        simulated("rs-s", "RS-S, pseudo-inverse/SVD precoders", &rows[0], |r| &r.estimate),
        simulated("rs-st", "RS-ST, pseudo-inverse/SVD precoders", &rows[1], |r| &r.estimate),
        simulated("sumu", "SU/MU switching", &rows[2], |r| &r.estimate),
    ];
    Ok(Figure {
        preset: Preset::CompareSumuRs,
        title: format!("RS-S and RS-ST against SU/MU switching, M = {m}, τ = {tau}, B̄ = {bbar}"),
        x: Axis::linear("SNR (dB)"),
        y: Axis::linear("sum rate (bps/Hz)"),
        series,
        parameters: json!({
            "M": m,
            "tau": tau,
            "bbar": bbar,
            "precoder": "pseudo-inverse-svd",
            "snr_db": grid,
            "trials": o.trials,
        }),
    })
}

fn uses_bbar(p: Preset) -> bool {
    matches!(p, Preset::RatelossRs | Preset::SumrateRs | Preset::CompareSumuRs)
}

/// Computes every curve of a preset.
pub fn build(preset: Preset, o: &FigureOptions, exec: &Executor) -> Result<Figure, CliError> {
    if o.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    if let Some(b) = o.bbar {
        if !uses_bbar(preset) {
            return Err(CliError::Config(format!("preset {} has no average budget to override", preset.tag())));
        }
        if !(b.is_finite() && b >= 0.0) {
            return Err(CliError::Config(format!("--bbar {b} must be a non-negative number")));
        }
    }
    match preset {
        Preset::CdfJoint => cdf_joint(o, exec),
        Preset::CdfYk => cdf_yk(o, exec),
        Preset::RatelossEq => rateloss_eq(o, exec),
        Preset::SumrateEq => sumrate_eq(o, exec),
        Preset::OverheadEq => overhead_eq(o, exec),
        Preset::SumrateScaledEq => sumrate_scaled_eq(o, exec),
        Preset::OverheadVsTau => overhead_vs_tau(o, exec),
        Preset::RatelossRs => rateloss_rs(o, exec),
        Preset::SumrateRs => sumrate_rs(o, exec),
        Preset::OverheadSt => overhead_st(o, exec),
        Preset::SumrateScaledSt => sumrate_scaled_st(o, exec),
        Preset::CompareSumuEq => compare_sumu_eq(o, exec),
        Preset::CompareSumuRs => compare_sumu_rs(o, exec),
    }
}

/// Writes `<preset>.csv` and `<preset>.manifest.json` under `dir`.
pub fn write(figure: &Figure, envelope: &Envelope, dir: &Path) -> Result<(), CliError> {
    let tag = figure.preset.tag();
    let csv = figure.table().render(Format::Csv, envelope)?;
    let mut manifest = serde_json::to_vec_pretty(&figure.manifest(envelope))?;
    manifest.push(b'\n');
    write_atomic(Some(&dir.join(format!("{tag}.csv"))), &csv)?;
    write_atomic(Some(&dir.join(format!("{tag}.manifest.json"))), &manifest)
}

pub fn run(args: &FigureArgs) -> Result<(), CliError> {
    let opts = FigureOptions {
        trials: args.trials,
        seed: args.seed,
        bbar: args.bbar,
    };
    let exec = crate::executor(args.workers)?;
    let figure = build(args.preset, &opts, &exec)?;
    write(&figure, &Envelope::new(args.canonical(), Some(args.seed)), &args.out_dir)
}

