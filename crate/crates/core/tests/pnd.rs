use mdi_spdc::pnd::{
    bernoulli_transform, poisson_prob, thermal_prob, PhotonNumberDistribution, SourceSetting,
};
use proptest::prelude::*;

fn source() -> impl Strategy<Value = SourceSetting> {
    (1e-4..1.0f64, 0.05..0.95f64, 0.0..1e-3f64, 0.0..=1.0f64)
        .prop_map(|(mu, eta, d, p)| SourceSetting::new(mu, eta, d, p).unwrap())
}

const N: usize = 200;

proptest! {
    #[test]
    fn heralded_mass_is_one(s in source()) {
        let m: f64 = (0..=N).map(|n| s.heralded_prob(n)).sum();
        prop_assert!((m - 1.0).abs() < 1e-12, "mass {m}");
    }

    #[test]
    fn classes_partition_the_emission(s in source()) {
        // T_n + NT_n is the thermal weight (plus the uncorrelated vacuum at n = 0).
        let vac = s.triggered_prob(0) + s.non_triggered_prob_raw(0);
        prop_assert!((vac - (1.0 - s.p_cor + s.p_cor * thermal_prob(s.mu, 0))).abs() < 1e-14);
        for n in 1..40 {
            let sum = s.triggered_prob(n) + s.non_triggered_prob_raw(n);
            let want = s.p_cor * thermal_prob(s.mu, n);
            prop_assert!((sum - want).abs() <= 1e-14 * want.max(1e-300));
        }
    }

    #[test]
    fn correlated_heralding_is_triggered_over_post_selection(s in source()) {
        let s = SourceSetting { p_cor: 1.0, ..s };
        let post: f64 = (0..=N).map(|n| s.triggered_prob(n)).sum();
        prop_assert!((post - s.post_selection_prob()).abs() < 1e-13);
        for n in 0..10 {
            let r = s.triggered_prob(n) / post;
            prop_assert!((r - s.heralded_prob(n)).abs() < 1e-12 * r.max(1e-12));
        }
    }

    #[test]
    fn loss_is_a_semigroup(s in source(), a in 0.01..1.0f64, b in 0.01..1.0f64) {
        let d = PhotonNumberDistribution::heralded(s).with_n_max(60);
        let two = d.loss_transform(a).unwrap().loss_transform(b).unwrap().to_vec();
        let one = d.loss_transform(a * b).unwrap().to_vec();
        for (x, y) in two.iter().zip(&one) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_preserves_mass(s in source(), eta in 0.0..=1.0f64) {
        let d = PhotonNumberDistribution::triggered(s).with_n_max(N);
        let lost = d.loss_transform(eta).unwrap();
        prop_assert!((lost.total_mass() - d.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn thinned_thermal_stays_thermal(mu in 1e-3..0.5f64, eta in 0.0..=1.0f64) {
        let w: Vec<f64> = (0..=N).map(|n| thermal_prob(mu, n)).collect();
        let thin = bernoulli_transform(&w, eta);
        for (n, t) in thin.iter().take(20).enumerate() {
            prop_assert!((t - thermal_prob(mu * eta, n)).abs() < 1e-13);
        }
    }

    #[test]
    fn poisson_recurrence(mu in 1e-3..5.0f64, n in 0usize..40) {
        let lhs = poisson_prob(mu, n + 1) * (n + 1) as f64;
        let rhs = poisson_prob(mu, n) * mu;
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.max(1e-300));
    }

    #[test]
    fn trigger_ratio_increases_up_to_the_bound(s in source()) {
        prop_assume!(s.p_cor > 0.0);
        let bound = s.non_triggered_validity_bound().unwrap_or(50).min(50);
        let mut prev = 0.0;
        for n in 1..=bound {
            let r = s.trigger_ratio(n).unwrap().r_n;
            prop_assert!(r > prev, "r_{n} = {r} after {prev}");
            prev = r;
        }
    }

    #[test]
    fn non_triggered_clamp_is_nonnegative(s in source(), n in 0usize..300) {
        prop_assert!(s.non_triggered_prob(n) >= 0.0);
        prop_assert!(s.non_triggered_prob(n) >= s.non_triggered_prob_raw(n));
    }
}

#[test]
fn validity_bound_is_the_sign_change() {
    let s = SourceSetting::new(0.5, 0.4, 5e-5, 0.1).unwrap();
    let b = s.non_triggered_validity_bound().unwrap();
    assert!(s.non_triggered_prob_raw(b) > 0.0);
    assert!(s.non_triggered_prob_raw(b + 1) < 0.0);
    assert!(s.trigger_ratio(b + 1).is_err());
}

#[test]
fn rejects_out_of_range_parameters() {
    assert!(SourceSetting::new(-0.1, 0.4, 0.0, 0.5).is_err());
    assert!(SourceSetting::new(0.1, 1.4, 0.0, 0.5).is_err());
    assert!(SourceSetting::new(0.1, 0.4, 1.0, 0.5).is_err());
    assert!(SourceSetting::new(0.1, 0.4, 0.0, f64::NAN).is_err());
}
