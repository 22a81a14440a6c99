use mdi_spdc::decoy::modified_passive3_bounds;
use mdi_spdc::finite::{
    class_counts, failure_probability, finite_modified_passive_bounds, fluctuation_band,
    FluctuationParams,
};
use mdi_spdc::pipeline::evaluate;
use mdi_spdc::presets;
use mdi_spdc::protocol::{BarAssignment, CountMode, ModelOptions, Role};
use mdi_spdc::relay::{build_gain_table, ChannelParams};
use mdi_spdc::Error;
use proptest::prelude::*;

proptest! {
    #[test]
    fn band_brackets_the_value(v in 1e-9..1.0f64, n in 1e6..1e14f64, na in 0.0..10.0f64) {
        let b = fluctuation_band(v, n, na, "q").unwrap();
        prop_assert!(0.0 <= b.lower && b.lower <= b.value && b.value <= b.upper);
        prop_assert!((b.upper - v) >= (v - b.lower) - 1e-15 * v);
    }

    #[test]
    fn band_narrows_with_more_pulses(v in 1e-9..1.0f64, n in 1e6..1e12f64, na in 0.1..10.0f64) {
        let a = fluctuation_band(v, n, na, "q").unwrap();
        let b = fluctuation_band(v, n * 10.0, na, "q").unwrap();
        prop_assert!(b.upper <= a.upper && b.lower >= a.lower);
    }

    #[test]
    fn zero_deviations_leave_values_alone(v in 0.0..1.0f64, n in 0.0..1e14f64) {
        let b = fluctuation_band(v, n, 0.0, "q").unwrap();
        prop_assert_eq!((b.lower, b.upper), (v, v));
    }

    #[test]
    fn failure_probability_falls_with_deviations(a in 0.0..8.0f64, d in 0.01..2.0f64) {
        let (p, q) = (failure_probability(a), failure_probability(a + d));
        prop_assert!(q < p && (0.0..=1.0).contains(&p));
    }
}

#[test]
fn empty_statistics_are_rejected() {
    assert!(matches!(
        fluctuation_band(0.0, 1e10, 5.0, "q"),
        Err(Error::ZeroStatistics { quantity: "q" })
    ));
}

#[test]
fn three_sigma_tail() {
    let p = failure_probability(3.0);
    assert!((p / 2.6997960632601913e-3 - 1.0).abs() < 1e-9, "{p:e}");
    assert_eq!(failure_probability(0.0), 1.0);
}

#[test]
fn efficiency_counts_split_pulses() {
    let cfg = presets::modified_passive();
    let (d, s) = (
        cfg.source(Role::Decoy).unwrap(),
        cfg.source(Role::Signal).unwrap(),
    );
    let c = class_counts(
        &d,
        &s,
        &FluctuationParams::new(5.0, 1e10),
        CountMode::Efficiency,
    );
    assert!((c.t_both - 0.16e10).abs() < 1.0);
    assert!((c.nt_both - 0.36e10).abs() < 1.0);
    assert!(c.t_alice < c.t_both);
}

fn table_at(km: f64) -> mdi_spdc::relay::GainTable {
    let sys = presets::system();
    build_gain_table(
        &presets::modified_passive(),
        &ChannelParams::symmetric(sys.loss_coeff, km),
        &sys.relay,
        &ModelOptions::default(),
    )
    .unwrap()
}

#[test]
fn worst_case_bars_are_conservative() {
    let cfg = presets::modified_passive();
    let (d, s) = (
        cfg.source(Role::Decoy).unwrap(),
        cfg.source(Role::Signal).unwrap(),
    );
    for km in [0.0, 25.0, 50.0] {
        let t = table_at(km);
        let asym = modified_passive3_bounds(&t, &d, &s, 80).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in [1e9, 1e10, 1e11, 1e13] {
            let fl = FluctuationParams::new(5.0, n);
            let b = finite_modified_passive_bounds(
                &t,
                &d,
                &s,
                &fl,
                BarAssignment::WorstCase,
                CountMode::Efficiency,
                80,
            )
            .unwrap();
            assert!(
                b.diagnostics.y11_raw <= asym.diagnostics.y11_raw,
                "{km} km, N = {n:e}"
            );
            assert!(b.e11_upper >= asym.e11_upper);
            assert!(b.diagnostics.y11_raw >= prev);
            prev = b.diagnostics.y11_raw;
        }
    }
}

#[test]
fn no_deviation_reproduces_the_asymptotic_rate() {
    let sys = presets::system();
    let opts = ModelOptions::default();
    let cfg = presets::modified_passive();
    for km in [0.0, 20.0] {
        let a = evaluate(&cfg, km, &sys, &opts, None).unwrap();
        let f = evaluate(
            &cfg,
            km,
            &sys,
            &opts,
            Some(&FluctuationParams::new(0.0, 1e10)),
        )
        .unwrap();
        assert_eq!(a.rate, f.rate);
        assert_eq!(a.bounds.y11_lower, f.bounds.y11_lower);
    }
}

#[test]
fn fluctuations_are_limited_to_the_modified_protocol() {
    let sys = presets::system();
    let fl = FluctuationParams::new(5.0, 1e10);
    let r = evaluate(
        &presets::active3(),
        10.0,
        &sys,
        &ModelOptions::default(),
        Some(&fl),
    );
    assert!(matches!(
        r,
        Err(Error::InvalidParameter {
            name: "fluctuation",
            ..
        })
    ));
}

#[test]
fn invalid_fluctuation_parameters() {
    assert!(FluctuationParams::new(-1.0, 1e10).validate().is_err());
    assert!(FluctuationParams::new(5.0, 0.0).validate().is_err());
    let mut fl = FluctuationParams::new(5.0, 1e10);
    fl.n_pulses_signal = Some(f64::INFINITY);
    assert!(fl.validate().is_err());
}
