//! Four-detector relay under full phase randomization.
//!
//! Detectors r0/r1 and s0/s1 sit behind the relay's beam splitter. Averaging
//! over the relative phase removes every interference term, which leaves
//! closed forms in the coefficient shorthands of [`CoefficientSet`].

mod coefficients;
mod table;
mod zbasis;

pub use coefficients::{CoefficientSet, EventClass};
pub use table::{build_gain_table, required_keys, Basis, GainEntry, GainKey, GainTable, Pairing};
pub use zbasis::{z_basis_gain, ZBasisGain};

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::pnd::SourceSetting;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Fiber links from each sender to the relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Attenuation in dB/km.
    pub loss_coeff: f64,
    pub length_ac: f64,
    pub length_bc: f64,
}

impl ChannelParams {
    /// Relay in the middle of a total Alice-Bob distance.
    pub fn symmetric(loss_coeff: f64, distance_km: f64) -> Self {
        Self {
            loss_coeff,
            length_ac: distance_km / 2.0,
            length_bc: distance_km / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("loss_coeff", self.loss_coeff),
            ("length_ac", self.length_ac),
            ("length_bc", self.length_bc),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and nonnegative",
                });
            }
        }
        Ok(())
    }

    pub fn transmittance(&self, side: Side) -> f64 {
        let l = match side {
            Side::A => self.length_ac,
            Side::B => self.length_bc,
        };
        10f64.powf(-self.loss_coeff * l / 10.0)
    }
}

pub fn transmittance(channel: &ChannelParams, side: Side) -> f64 {
    channel.transmittance(side)
}

/// Relay detectors and error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayParams {
    pub eta_d: f64,
    pub p_dark: f64,
    pub e_misalign: f64,
    #[serde(default = "RelayParams::noise")]
    pub e_noise: f64,
}

impl RelayParams {
    pub const E_NOISE: f64 = 0.5;

    fn noise() -> f64 {
        Self::E_NOISE
    }

    pub fn new(eta_d: f64, p_dark: f64, e_misalign: f64) -> Result<Self> {
        let r = Self {
            eta_d,
            p_dark,
            e_misalign,
            e_noise: Self::E_NOISE,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eta_d", self.eta_d)?;
        if !(self.p_dark.is_finite() && (0.0..1.0).contains(&self.p_dark)) {
            return Err(Error::InvalidParameter {
                name: "p_dark",
                value: self.p_dark,
                reason: "must lie in [0, 1)",
            });
        }
        if !(self.e_misalign.is_finite() && (0.0..=0.5).contains(&self.e_misalign)) {
            return Err(Error::InvalidParameter {
                name: "e_misalign",
                value: self.e_misalign,
                reason: "must lie in [0, 0.5]",
            });
        }
        if self.e_noise != Self::E_NOISE {
            return Err(Error::InvalidParameter {
                name: "e_noise",
                value: self.e_noise,
                reason: "background error is fixed at 0.5",
            });
        }
        Ok(())
    }
}

/// Probability that a relay detector clicks when n photons reach it.
pub fn click_prob_photon(relay: &RelayParams, n: usize) -> f64 {
    relay.p_dark + (1.0 - relay.p_dark) * (1.0 - (1.0 - relay.eta_d).powi(n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub d_r0: f64,
    pub d_r1: f64,
    pub d_s0: f64,
    pub d_s1: f64,
}

/// Choice between the phase-averaged closed form and the printed one.
///
/// The printed signal-signal forms carry extra constants of order p_d that the
/// phase-averaged series does not contain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormVariant {
    #[default]
    PhaseAveraged,
    AsPrinted,
}

impl ClosedFormVariant {
    pub(crate) fn c2(&self, c: &CoefficientSet) -> f64 {
        match self {
            ClosedFormVariant::PhaseAveraged => 0.0,
            ClosedFormVariant::AsPrinted => c.c2_printed,
        }
    }
}

/// Reading of the self-referential misalignment relation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisalignmentReading {
    /// E = E' + e_d(1 - E/e_0) solved for E.
    #[default]
    LinearSolve,
    /// E = E' + e_d(1 - E'/e_0).
    SubstitutedPrime,
}

fn require_symmetric(a: &SourceSetting, b: &SourceSetting, channel: &ChannelParams) -> Result<()> {
    if a != b {
        return Err(Error::AsymmetricConfig(format!(
            "source settings differ: {a:?} vs {b:?}"
        )));
    }
    let (ta, tb) = (
        channel.transmittance(Side::A),
        channel.transmittance(Side::B),
    );
    if (ta - tb).abs() > 1e-12 * ta.max(tb) {
        return Err(Error::AsymmetricConfig(format!(
            "channel transmittances differ: {ta} vs {tb}"
        )));
    }
    Ok(())
}

/// Coefficients at the half transmittance seen by one relay detector pair.
pub(crate) fn arm_coefficients(
    src: &SourceSetting,
    class: EventClass,
    arm_transmittance: f64,
    relay: &RelayParams,
) -> CoefficientSet {
    CoefficientSet::new(
        src,
        class,
        arm_transmittance / 2.0,
        relay.eta_d,
        relay.p_dark,
    )
}

/// Click probabilities when both senders emit the same nonvacuum setting.
pub fn click_probs_signal_signal(
    src_a: &SourceSetting,
    src_b: &SourceSetting,
    channel: &ChannelParams,
    relay: &RelayParams,
    class: EventClass,
    variant: ClosedFormVariant,
) -> Result<ClickProbabilities> {
    require_symmetric(src_a, src_b, channel)?;
    let c = arm_coefficients(src_a, class, channel.transmittance(Side::A), relay);
    Ok(symmetric_clicks(&c, relay.p_dark, variant))
}

pub(crate) fn symmetric_clicks(
    c: &CoefficientSet,
    p_d: f64,
    variant: ClosedFormVariant,
) -> ClickProbabilities {
    let c2 = variant.c2(c);
    let d_r0 = 2.0 * c.a0 * p_d + c.prefactor * (c.c1 + c2);
    let d_r1 = c.prefactor * (c.c1 - c2);
    ClickProbabilities {
        d_r0,
        d_r1,
        d_s0: d_r0,
        d_s1: d_r1,
    }
}

/// Click probabilities when one sender emits vacuum.
pub fn click_probs_vacuum_signal(
    src: &SourceSetting,
    vacuum_side: Side,
    channel: &ChannelParams,
    relay: &RelayParams,
    class: EventClass,
) -> Result<ClickProbabilities> {
    let signal_side = match vacuum_side {
        Side::A => Side::B,
        Side::B => Side::A,
    };
    let c = arm_coefficients(src, class, channel.transmittance(signal_side), relay);
    let p_d = relay.p_dark;
    let root = c.a0.max(0.0).sqrt();
    let photons = c.photon_sum() / 2.0;
    let d_r0 = 0.5 * (1.0 + root).powi(2) * p_d + photons;
    let d_r1 = 0.5 * (1.0 - root).powi(2) * p_d + photons;
    Ok(ClickProbabilities {
        d_r0,
        d_r1,
        d_s0: d_r0,
        d_s1: d_r1,
    })
}

/// Probability of a successful announcement (one click in each detector pair).
pub fn gain_from_clicks(c: &ClickProbabilities) -> f64 {
    let r = c.d_r0 * (1.0 - c.d_r1) + (1.0 - c.d_r0) * c.d_r1;
    let s = c.d_s0 * (1.0 - c.d_s1) + (1.0 - c.d_s0) * c.d_s1;
    r * s
}

/// Expanded symmetric gain in the C0, P, C1, C2 shorthands.
pub fn gain_expanded(c0: f64, p: f64, c1: f64, c2: f64) -> f64 {
    let inner = c0 + 2.0 * p * c1 - 2.0 * c0 * p * (c1 - c2) - 2.0 * p * p * (c1 * c1 - c2 * c2);
    inner * inner
}

/// E'Q: announcements whose bits disagree before misalignment.
pub fn intrinsic_error_gain(c: &ClickProbabilities) -> f64 {
    2.0 * c.d_r0 * (1.0 - c.d_r1) * (1.0 - c.d_s1) * c.d_s0
}

/// Adds relative-phase misalignment to the intrinsic error rate.
pub fn apply_misalignment(e_prime: f64, relay: &RelayParams, reading: MisalignmentReading) -> f64 {
    let e_d = relay.e_misalign;
    let e_0 = relay.e_noise;
    match reading {
        MisalignmentReading::LinearSolve => (e_prime + e_d) / (1.0 + e_d / e_0),
        MisalignmentReading::SubstitutedPrime => e_prime + e_d * (1.0 - e_prime / e_0),
    }
}

/// Gain and QBER from a set of click probabilities; QBER is 0 when the gain is.
pub fn gain_and_qber(
    c: &ClickProbabilities,
    relay: &RelayParams,
    reading: MisalignmentReading,
) -> (f64, f64) {
    let q = gain_from_clicks(c);
    if q <= 0.0 {
        return (q, 0.0);
    }
    let e_prime = intrinsic_error_gain(c) / q;
    (q, apply_misalignment(e_prime, relay, reading))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_relay() -> RelayParams {
        RelayParams::new(0.145, 3e-6, 0.015).unwrap()
    }

    #[test]
    fn transmittance_decades() {
        let ch = ChannelParams {
            loss_coeff: 0.2,
            length_ac: 50.0,
            length_bc: 100.0,
        };
        assert!((ch.transmittance(Side::A) - 0.1).abs() < 1e-15);
        assert!((ch.transmittance(Side::B) - 0.01).abs() < 1e-16);
        assert_eq!(
            ChannelParams::symmetric(0.2, 0.0).transmittance(Side::A),
            1.0
        );
    }

    #[test]
    fn photon_click_examples() {
        let r = table_relay();
        assert_eq!(click_prob_photon(&r, 0), 3e-6);
        let ideal = RelayParams::new(1.0, 3e-6, 0.015).unwrap();
        assert_eq!(click_prob_photon(&ideal, 3), 1.0);
        let expect = 1.0 - (1.0 - 3e-6) * 0.855f64 * 0.855;
        assert!((click_prob_photon(&r, 2) - expect).abs() < 1e-16);
    }

    #[test]
    fn dark_free_vacuum_never_clicks() {
        let relay = RelayParams::new(0.145, 0.0, 0.015).unwrap();
        let src = SourceSetting::new(0.0, 0.4, 5e-5, 0.3).unwrap();
        let ch = ChannelParams::symmetric(0.2, 20.0);
        for class in [
            EventClass::Heralded,
            EventClass::Triggered,
            EventClass::NonTriggered,
        ] {
            let c = click_probs_signal_signal(
                &src,
                &src,
                &ch,
                &relay,
                class,
                ClosedFormVariant::PhaseAveraged,
            )
            .unwrap();
            assert_eq!([c.d_r0, c.d_r1, c.d_s0, c.d_s1], [0.0; 4]);
            let v = click_probs_vacuum_signal(&src, Side::A, &ch, &relay, class).unwrap();
            assert_eq!([v.d_r0, v.d_r1], [0.0; 2]);
        }
    }

    #[test]
    fn vacuum_limit_of_vacuum_signal() {
        let relay = table_relay();
        let ch = ChannelParams::symmetric(0.2, 20.0);
        let dark_only = SourceSetting::new(0.0, 0.4, 5e-5, 0.6).unwrap();
        let c = click_probs_vacuum_signal(&dark_only, Side::A, &ch, &relay, EventClass::Heralded)
            .unwrap();
        assert!((c.d_r0 / 6e-6 - 1.0).abs() < 1e-13);
        assert!(c.d_r1.abs() < 1e-18);

        let src = SourceSetting::new(0.0, 0.4, 0.0, 0.0).unwrap();
        let c =
            click_probs_vacuum_signal(&src, Side::B, &ch, &relay, EventClass::Triggered).unwrap();
        // Triggered vacuum weight is 1/2 here, so b0 = 1/2.
        let b0: f64 = 0.5;
        assert!((c.d_r0 - 0.5 * (1.0 + b0.sqrt()).powi(2) * 3e-6).abs() < 1e-20);
        assert!((c.d_r1 - 0.5 * (1.0 - b0.sqrt()).powi(2) * 3e-6).abs() < 1e-20);
    }

    #[test]
    fn asymmetric_inputs_rejected() {
        let relay = table_relay();
        let a = SourceSetting::new(0.1, 0.4, 5e-5, 0.3).unwrap();
        let b = a.with_mu(0.2);
        let ch = ChannelParams::symmetric(0.2, 20.0);
        let err = click_probs_signal_signal(
            &a,
            &b,
            &ch,
            &relay,
            EventClass::Triggered,
            ClosedFormVariant::PhaseAveraged,
        );
        assert!(matches!(err, Err(Error::AsymmetricConfig(_))));
        let skew = ChannelParams {
            loss_coeff: 0.2,
            length_ac: 10.0,
            length_bc: 11.0,
        };
        let err = click_probs_signal_signal(
            &a,
            &a,
            &skew,
            &relay,
            EventClass::Triggered,
            ClosedFormVariant::PhaseAveraged,
        );
        assert!(matches!(err, Err(Error::AsymmetricConfig(_))));
    }

    #[test]
    fn gain_examples() {
        let zero = ClickProbabilities {
            d_r0: 0.0,
            d_r1: 0.0,
            d_s0: 0.0,
            d_s1: 0.0,
        };
        assert_eq!(gain_from_clicks(&zero), 0.0);
        let perfect = ClickProbabilities {
            d_r0: 1.0,
            d_r1: 0.0,
            d_s0: 1.0,
            d_s1: 0.0,
        };
        assert_eq!(gain_from_clicks(&perfect), 1.0);
        let half = ClickProbabilities {
            d_r0: 0.5,
            d_r1: 0.0,
            d_s0: 0.5,
            d_s1: 0.0,
        };
        assert_eq!(intrinsic_error_gain(&half), 0.5);
        let dark = ClickProbabilities { d_r0: 0.0, ..half };
        assert_eq!(intrinsic_error_gain(&dark), 0.0);
    }

    #[test]
    fn misalignment_examples() {
        let mut r = table_relay();
        assert!(
            (apply_misalignment(0.0, &r, MisalignmentReading::LinearSolve) - 0.015 / 1.03).abs()
                < 1e-17
        );
        assert_eq!(
            apply_misalignment(0.5, &r, MisalignmentReading::SubstitutedPrime),
            0.5
        );
        r.e_misalign = 0.0;
        for reading in [
            MisalignmentReading::LinearSolve,
            MisalignmentReading::SubstitutedPrime,
        ] {
            assert_eq!(apply_misalignment(0.37, &r, reading), 0.37);
        }
    }

    #[test]
    fn relay_validation() {
        assert!(RelayParams::new(0.145, 3e-6, 0.6).is_err());
        let mut r = table_relay();
        r.e_noise = 0.4;
        assert!(r.validate().is_err());
    }
}
