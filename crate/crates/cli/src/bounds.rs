//! `misobc bounds`: closed-form bounds and laws over parameter grids.

use misobc_core::analytics::{
    bound_rs_s_eq, bound_rs_s_eq_at_optimum, bound_rs_s_rs, bound_rs_s_rs_at_optimum,
    bound_rs_s_rs_cap, bound_rs_s_rs_relaxed, bound_rs_st, bound_rs_st_cap, delta0,
    feedback_bits_rs_s_eq, feedback_bits_rs_s_rs, feedback_bits_rs_st, st_gain_db,
    st_gain_db_large_tau, st_overhead_reduction, theta, BoundValue, Regime,
};
use misobc_core::montecarlo::{Feedback, SplitPolicy};
use misobc_core::schemes::{power_split_eq, power_split_eq_delta, power_split_rs, power_split_rs_delta, power_split_st};
use misobc_core::{db_to_linear, Error};

use crate::args::{BoundsArgs, Form, Formula, RegimeArg};
use crate::error::CliError;
use crate::output::{write_atomic, Envelope, Table, Value};

pub const COLUMNS: &[&str] = &[
    "formula", "form", "regime", "M", "snr_db", "bits", "bits_alpha", "bits_beta", "delta", "tau",
    "t", "t_alpha", "t_beta", "value", "large_tau", "reduction", "error",
];

type Cells = Vec<(&'static str, Value)>;

/// Evaluated table plus the number of rows that failed, and the first
/// failure for the exit status.
pub struct Outcome {
    pub table: Table,
    pub failed: usize,
    pub first_error: Option<Error>,
}

fn regime_tag(r: Regime) -> &'static str {
    match r {
        Regime::Exact => "exact",
        Regime::HighSnr => "high-snr",
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn formula_tag(f: Formula) -> &'static str {
    match f {
        Formula::Prop1 => "prop1",
        Formula::Prop2 => "prop2",
        Formula::Prop3 => "prop3",
        Formula::Prop4 => "prop4",
        Formula::Prop5 => "prop5",
        Formula::Theta => "theta",
        Formula::Delta0 => "delta0",
        Formula::StGain => "st-gain",
        Formula::Bst => "bst",
    }
}

fn form_tag(f: Form) -> &'static str {
    match f {
        Form::Standard => "standard",
        Form::Optimum => "optimum",
        Form::Relaxed => "relaxed",
        Form::Cap => "cap",
    }
}

fn check_form(args: &BoundsArgs) -> Result<(), CliError> {
    let ok = match args.form {
        Form::Standard => true,
        Form::Optimum => matches!(args.formula, Formula::Prop1 | Formula::Prop3),
        Form::Relaxed => args.formula == Formula::Prop3,
        Form::Cap => matches!(args.formula, Formula::Prop3 | Formula::Prop5),
    };
    if ok {
        Ok(())
    } else {
        Err(config(format!(
            "form `{}` does not apply to {}",
            form_tag(args.form),
            formula_tag(args.formula)
        )))
    }
}

fn need<'a, T>(x: &'a Option<T>, flag: &str, f: Formula) -> Result<&'a T, CliError> {
    x.as_ref()
        .ok_or_else(|| config(format!("{} needs --{flag}", formula_tag(f))))
}

/// Budgets as `(Bα, Bβ)`; equal budgets count as `τ = 0`.
fn pair_bits(args: &BoundsArgs) -> Result<(f64, f64), CliError> {
    match need(&args.bits, "bits", args.formula)?.0 {
        Feedback::Equal(b) => Ok((b, b)),
        Feedback::Alternating { alpha, beta } => Ok((alpha, beta)),
        Feedback::Perfect => Err(config("bounds need finite feedback budgets")),
    }
}

fn fixed_single(args: &BoundsArgs) -> Result<Option<f64>, CliError> {
    match args.split.0 {
        SplitPolicy::Auto => Ok(None),
        SplitPolicy::Fixed(t) => Ok(Some(t)),
        _ => Err(config(format!("{} takes auto or a single split", formula_tag(args.formula)))),
    }
}

fn bound_cells(b: BoundValue) -> Cells {
    vec![("value", b.value.into()), ("regime", regime_tag(b.regime).into())]
}

pub fn evaluate(args: &BoundsArgs) -> Result<Outcome, CliError> {
    check_form(args)?;
    if args.antennas < 2 {
        return Err(config(format!("M = {} < 2", args.antennas)));
    }
    let m = args.antennas;
    let regime = match args.regime {
        RegimeArg::Exact => Regime::Exact,
        RegimeArg::HighSnr => Regime::HighSnr,
    };
    let snrs = &args.snr_db.values;
    let f = args.formula;
    let mut rows: Vec<(Cells, Result<Cells, Error>)> = Vec::new();

    match f {
        Formula::Prop1 => {
            let b = match need(&args.bits, "bits", f)?.0 {
                Feedback::Equal(b) => b,
                _ => return Err(config("prop1 takes a single budget --bits B")),
            };
            let fixed = fixed_single(args)?;
            for &db in snrs {
                let p = db_to_linear(db);
                let key = vec![("snr_db", db.into()), ("bits", b.into())];
                let res = (|| {
                    if args.form == Form::Optimum {
                        let t = power_split_eq(p, m, b)?;
                        let mut c = bound_cells(bound_rs_s_eq_at_optimum(p, m, b)?);
                        c.push(("t", t.into()));
                        return Ok(c);
                    }
                    let t = match fixed {
                        Some(t) => t,
                        None => power_split_eq(p, m, b)?,
                    };
                    let mut c = bound_cells(bound_rs_s_eq(p, m, b, t, regime)?);
                    c.push(("t", t.into()));
                    Ok(c)
                })();
                rows.push((key, res));
            }
        }
        Formula::Prop2 => {
            let deltas = need(&args.delta, "delta", f)?;
            let fixed = fixed_single(args)?;
            for &db in snrs {
                for &delta in &deltas.values {
                    let key = vec![("snr_db", db.into()), ("delta", delta.into())];
                    let res = (|| {
                        let t = match fixed {
                            Some(t) => t,
                            None => power_split_eq_delta(delta)?,
                        };
                        let mut c = bound_cells(feedback_bits_rs_s_eq(delta, t, db_to_linear(db), m, regime)?);
                        c.push(("t", t.into()));
                        Ok(c)
                    })();
                    rows.push((key, res));
                }
            }
        }
        Formula::Prop3 => {
            let (ba, bb) = pair_bits(args)?;
            let fixed = fixed_single(args)?;
            for &db in snrs {
                let p = db_to_linear(db);
                let key = vec![("snr_db", db.into()), ("bits_alpha", ba.into()), ("bits_beta", bb.into())];
                let res = (|| {
                    let t = match fixed {
                        Some(t) => t,
                        None => power_split_rs(p, m, ba, bb)?,
                    };
                    let (bound, t_cell) = match args.form {
                        Form::Standard => (bound_rs_s_rs(p, m, ba, bb, t, regime)?, Some(t)),
                        Form::Optimum => (bound_rs_s_rs_at_optimum(p, m, ba, bb)?, Some(power_split_rs(p, m, ba, bb)?)),
                        Form::Relaxed => (bound_rs_s_rs_relaxed(p, m, ba, bb)?, None),
                        Form::Cap => (bound_rs_s_rs_cap(p, m, ba, bb)?, None),
                    };
                    let mut c = bound_cells(bound);
                    c.push(("t", t_cell.into()));
                    Ok(c)
                })();
                rows.push((key, res));
            }
        }
        Formula::Prop4 => {
            let deltas = need(&args.delta, "delta", f)?;
            let taus = need(&args.tau, "tau", f)?;
            let fixed = fixed_single(args)?;
            for &db in snrs {
                for &tau in &taus.values {
                    for &delta in &deltas.values {
                        let key = vec![("snr_db", db.into()), ("delta", delta.into()), ("tau", tau.into())];
                        let res = (|| {
                            let t = match fixed {
                                Some(t) => t,
                                None => power_split_rs_delta(delta, tau, m)?,
                            };
                            let mut c =
                                bound_cells(feedback_bits_rs_s_rs(delta, t, tau, db_to_linear(db), m, regime)?);
                            c.push(("t", t.into()));
                            Ok(c)
                        })();
                        rows.push((key, res));
                    }
                }
            }
        }
        Formula::Prop5 => {
            let (ba, bb) = pair_bits(args)?;
            let fixed = match args.split.0 {
                SplitPolicy::Auto => None,
                SplitPolicy::FixedPair { alpha, beta } => Some((alpha, beta)),
                _ => return Err(config("prop5 takes auto or fixed=<ta,tb>")),
            };
            for &db in snrs {
                let p = db_to_linear(db);
                let key = vec![("snr_db", db.into()), ("bits_alpha", ba.into()), ("bits_beta", bb.into())];
                let res = (|| {
                    if args.form == Form::Cap {
                        return Ok(bound_cells(bound_rs_st_cap(p, m, ba, bb)?));
                    }
                    let (ta, tb) = match fixed {
                        Some(x) => x,
                        None => power_split_st(p, m, ba, bb)?,
                    };
                    let mut c = bound_cells(bound_rs_st(p, m, ba, bb, ta, tb, regime)?);
                    c.push(("t_alpha", ta.into()));
                    c.push(("t_beta", tb.into()));
                    Ok(c)
                })();
                rows.push((key, res));
            }
        }
        Formula::Theta | Formula::Delta0 | Formula::StGain => {
            let taus = need(&args.tau, "tau", f)?;
            for &tau in &taus.values {
                let key = vec![("tau", tau.into())];
                let res = (|| -> Result<Cells, Error> {
                    Ok(match f {
                        Formula::Theta => vec![("value", theta(tau, m)?.into())],
                        Formula::Delta0 => vec![("value", delta0(theta(tau, m)?).into())],
                        _ => vec![
                            ("value", st_gain_db(tau, m)?.into()),
                            ("large_tau", st_gain_db_large_tau(tau, m).into()),
                        ],
                    })
                })();
                rows.push((key, res));
            }
        }
        Formula::Bst => {
            let deltas = need(&args.delta, "delta", f)?;
            let taus = need(&args.tau, "tau", f)?;
            for &db in snrs {
                for &tau in &taus.values {
                    for &delta in &deltas.values {
                        let key = vec![("snr_db", db.into()), ("delta", delta.into()), ("tau", tau.into())];
                        let res = (|| {
                            let mut c = bound_cells(feedback_bits_rs_st(delta, tau, db_to_linear(db), m)?);
                            c.push(("t", power_split_rs_delta(delta, tau, m)?.into()));
                            c.push(("reduction", st_overhead_reduction(tau, m)?.into()));
                            Ok(c)
                        })();
                        rows.push((key, res));
                    }
                }
            }
        }
    }

    let mut table = Table::new(COLUMNS);
    let mut failed = 0;
    let mut first_error = None;
    for (key, res) in rows {
        let mut cells: Cells = vec![
            ("formula", formula_tag(f).into()),
            ("form", form_tag(args.form).into()),
            ("M", m.into()),
        ];
        cells.extend(key);
        match res {
            Ok(c) => cells.extend(c),
            Err(e) => {
                failed += 1;
                cells.push(("error", e.to_string().into()));
                first_error.get_or_insert(e);
            }
        }
        table.push(cells);
    }
    Ok(Outcome {
        table,
        failed,
        first_error,
    })
}

pub fn run(args: &BoundsArgs) -> Result<(), CliError> {
    let outcome = evaluate(args)?;
    let envelope = Envelope::new(args.canonical(), None);
    let bytes = outcome.table.render(args.format, &envelope)?;
    write_atomic(args.out.as_deref(), &bytes)?;
    match outcome.first_error {
        Some(e) if outcome.failed == outcome.table.len() => Err(CliError::from(e)),
        _ => Ok(()),
    }
}
