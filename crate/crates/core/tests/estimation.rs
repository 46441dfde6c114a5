use misobc_core::analytics::{bound_rs_s_eq, Regime};
use misobc_core::channel::QuantizerMode;
use misobc_core::montecarlo::{
    estimate_ergodic_rates, estimate_rate_loss, sample_quantization, sweep, Executor,
    ExperimentSpec, Feedback, Scheme, SplitPolicy,
};
use misobc_core::schemes::{power_split_eq, Split};
use misobc_core::stats::{ks_two_sample, EmpiricalCdf};
use misobc_core::{db_to_linear, Error};

fn exec() -> Executor {
    Executor::global()
}

#[test]
fn paired_loss_matches_unpaired_difference() {
    let rs = ExperimentSpec::new(Scheme::RsS, 4, vec![20.0], Feedback::Equal(6.0))
        .with_trials(4000)
        .with_seed(101);
    let perfect = ExperimentSpec::new(Scheme::ZfbfPerfect, 4, vec![20.0], Feedback::Perfect)
        .with_trials(4000)
        .with_seed(202);
    let paired = estimate_rate_loss(&rs, 20.0, &exec()).unwrap();
    let a = estimate_ergodic_rates(&perfect, 20.0, &exec()).unwrap();
    let b = estimate_ergodic_rates(&rs, 20.0, &exec()).unwrap();
    let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((paired.loss.mean - (a.mean - b.mean)).abs() < 3.0 * combined);
    // Pairing is the point: the paired error is much smaller.
    assert!(paired.loss.stderr < combined);
}

#[test]
fn stderr_shrinks_as_root_trials() {
    let base = ExperimentSpec::new(Scheme::RsS, 4, vec![20.0], Feedback::Equal(4.0)).with_seed(9);
    let small = estimate_ergodic_rates(&base.clone().with_trials(2000), 20.0, &exec()).unwrap();
    let large = estimate_ergodic_rates(&base.with_trials(8000), 20.0, &exec()).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn rs_s_loss_respects_exact_bound() {
    let (m, bits, db) = (4, 10.0, 30.0);
    let p = db_to_linear(db);
    let t = power_split_eq(p, m, bits).unwrap();
    let spec = ExperimentSpec::new(Scheme::RsS, m, vec![db], Feedback::Equal(bits))
        .with_trials(3000)
        .with_seed(4);
    let loss = estimate_rate_loss(&spec, db, &exec()).unwrap().loss;
    let bound = bound_rs_s_eq(p, m, bits, t, Regime::Exact).unwrap().value;
    assert!(loss.mean <= bound + 2.0 * loss.stderr, "{} > {bound}", loss.mean);
}

#[test]
fn sweep_reports_resolved_splits() {
    let spec = ExperimentSpec::new(Scheme::RsS, 4, vec![0.0, 20.0, 40.0], Feedback::Equal(10.0))
        .with_trials(200)
        .with_seed(1);
    let rows = sweep(&spec, &exec()).unwrap();
    for row in &rows {
        let want = power_split_eq(db_to_linear(row.snr_db), 4, 10.0).unwrap();
        assert_eq!(row.split, Some(Split::Single(want)));
        assert_eq!(row.estimate.trials, 200);
    }
    let rst = ExperimentSpec::new(Scheme::RsSt, 2, vec![30.0], Feedback::Alternating { alpha: 5.0, beta: 15.0 })
        .with_trials(100);
    assert!(matches!(sweep(&rst, &exec()).unwrap()[0].split, Some(Split::Pair { .. })));
    let tdma = ExperimentSpec::new(Scheme::Tdma, 2, vec![30.0], Feedback::Equal(3.0)).with_trials(100);
    assert_eq!(sweep(&tdma, &exec()).unwrap()[0].split, None);
}

#[test]
fn sweep_tags_point_errors() {
    let spec = ExperimentSpec::new(Scheme::RsS, 4, vec![10.0], Feedback::Equal(4.0))
        .with_split(SplitPolicy::Fixed(0.5))
        .with_trials(10);
    assert!(sweep(&spec, &exec()).is_ok());
    let mut bad = spec.clone();
    bad.snr_db = vec![];
    assert!(matches!(sweep(&bad, &exec()), Err(Error::Config(_))));
}

#[test]
fn quantizer_modes_agree_in_distribution() {
    for (m, bits) in [(2usize, 3.0), (3, 5.0)] {
        let n = 20_000;
        let a = sample_quantization(m, bits, QuantizerMode::Explicit, n, 1, &exec()).unwrap();
        let b = sample_quantization(m, bits, QuantizerMode::Statistical, n, 2, &exec()).unwrap();
        let fa = EmpiricalCdf::new(a.iter().map(|s| s.sin2_error).collect());
        let fb = EmpiricalCdf::new(b.iter().map(|s| s.sin2_error).collect());
        // Critical value at 0.1% for two samples of 20k is about 0.0195.
        assert!(ks_two_sample(&fa, &fb) < 0.0195, "M {m} B {bits}");
        let la = EmpiricalCdf::new(a.iter().map(|s| s.leakage).collect());
        let lb = EmpiricalCdf::new(b.iter().map(|s| s.leakage).collect());
        assert!(ks_two_sample(&la, &lb) < 0.0195);
    }
}

#[test]
fn leakage_mean_matches_error_share() {
    // w is isotropic in the (M-1)-dimensional complement of ĥ, so
    // E|h̄^H w|² = E[sin²]/(M-1).
    let (m, bits) = (4, 6.0);
    let s = sample_quantization(m, bits, QuantizerMode::Explicit, 40_000, 3, &exec()).unwrap();
    let n = s.len() as f64;
    let sin2 = s.iter().map(|x| x.sin2_error).sum::<f64>() / n;
    let leak = s.iter().map(|x| x.leakage).sum::<f64>() / n;
    assert!((leak - sin2 / 3.0).abs() < 0.03 * sin2 / 3.0 + 1e-3, "{leak} vs {}", sin2 / 3.0);
}
