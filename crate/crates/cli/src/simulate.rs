//! `misobc simulate`: one Monte Carlo sweep written as a table.

use misobc_core::montecarlo::{sweep, ExperimentSpec, Feedback, SweepRow};
use misobc_core::schemes::Split;

use crate::args::SimulateArgs;
use crate::error::CliError;
use crate::output::{write_atomic, Envelope, Table, Value};

pub const COLUMNS: &[&str] = &[
    "scheme",
    "M",
    "snr_db",
    "bits",
    "bits_alpha",
    "bits_beta",
    "t",
    "t_alpha",
    "t_beta",
    "sum_rate",
    "stderr",
    "rate_common",
    "rate_private_1",
    "rate_private_2",
    "loss",
    "loss_stderr",
    "trials",
    "seed",
];

pub fn spec_from_args(args: &SimulateArgs) -> ExperimentSpec {
    ExperimentSpec::new(args.scheme, args.antennas, args.snr_db.values.clone(), args.bits.0)
        .with_split(args.split.0)
        .with_quantizer(args.quantizer.choice())
        .with_precoder(args.precoder.strategy())
        .with_trials(args.trials)
        .with_seed(args.seed)
}

/// Rows of a sweep in the simulate column layout.
pub fn table(spec: &ExperimentSpec, rows: &[SweepRow]) -> Table {
    let mut t = Table::new(COLUMNS);
    for row in rows {
        let mut cells: Vec<(&'static str, Value)> = vec![
            ("scheme", spec.scheme.tag().into()),
            ("M", spec.antennas.into()),
            ("snr_db", row.snr_db.into()),
        ];
        match spec.feedback {
            Feedback::Perfect => cells.push(("bits", "perfect".into())),
            Feedback::Equal(b) => cells.push(("bits", b.into())),
            Feedback::Alternating { alpha, beta } => {
                cells.push(("bits_alpha", alpha.into()));
                cells.push(("bits_beta", beta.into()));
            }
        }
        match row.split {
            Some(Split::Single(x)) => cells.push(("t", x.into())),
            Some(Split::Pair { alpha, beta }) => {
                cells.push(("t_alpha", alpha.into()));
                cells.push(("t_beta", beta.into()));
            }
            None => {}
        }
        let e = &row.estimate;
        cells.extend([
            ("sum_rate", e.mean.into()),
            ("stderr", e.stderr.into()),
            ("rate_common", e.breakdown.common.into()),
            ("rate_private_1", e.breakdown.private[0].into()),
            ("rate_private_2", e.breakdown.private[1].into()),
            ("loss", row.loss.mean.into()),
            ("loss_stderr", row.loss.stderr.into()),
            ("trials", e.trials.into()),
            ("seed", e.seed.into()),
        ]);
        t.push(cells);
    }
    t
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let spec = spec_from_args(args);
    spec.validate()?;
    let exec = crate::executor(args.workers)?;
    let rows = sweep(&spec, &exec)?;
    let envelope = Envelope::new(args.canonical(), Some(args.seed));
    let bytes = table(&spec, &rows).render(args.format, &envelope)?;
    write_atomic(args.out.as_deref(), &bytes)
}
