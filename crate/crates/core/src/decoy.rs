//! Single-photon yield and error bounds from decoy-state statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pnd::SourceSetting;
use crate::protocol::{BenchmarkTransmittance, ProtocolConfig, Role};
use crate::relay::{ChannelParams, EventClass, GainEntry, GainTable, Pairing, RelayParams, Side};

/// Error rate of pure background noise.
pub const E00: f64 = 0.5;

/// Relative size below which a denominator counts as zero.
const DEGENERATE_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundDiagnostics {
    pub y11_raw: f64,
    pub e11_raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0_decoy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0_signal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_nt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    /// Lower bound on Y11 (Z basis), clamped to [0, 1].
    pub y11_lower: f64,
    /// Upper bound on e11 (X basis), clamped to [0, 1].
    pub e11_upper: f64,
    pub precondition_ok: bool,
    pub diagnostics: BoundDiagnostics,
}

/// X-basis statistics of one intensity setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyStats {
    /// P_0, P_1, P_2 of the setting's event class.
    pub p: [f64; 3],
    pub q: f64,
    /// Bob sends vacuum.
    pub q_alice: f64,
    /// Alice sends vacuum.
    pub q_bob: f64,
    pub q00: f64,
    pub eq: f64,
    pub eq_alice: f64,
    pub eq_bob: f64,
}

impl DecoyStats {
    pub fn from_table(
        table: &GainTable,
        class: EventClass,
        role: Role,
        src: &SourceSetting,
    ) -> Result<Self> {
        let both = table.x(class, role, Pairing::Both)?;
        let alice = table.x(class, role, Pairing::AliceOnly)?;
        let bob = table.x(class, role, Pairing::BobOnly)?;
        let vac = table.x(class, role, Pairing::Vacuum)?;
        Ok(Self {
            p: [class.prob(src, 0), class.prob(src, 1), class.prob(src, 2)],
            q: both.gain,
            q_alice: alice.gain,
            q_bob: bob.gain,
            q00: vac.gain,
            eq: both.error_gain(),
            eq_alice: alice.error_gain(),
            eq_bob: bob.error_gain(),
        })
    }

    /// Gain of events in which at least one sender emitted vacuum.
    pub fn vacuum_gain(&self) -> f64 {
        self.p[0] * self.q_bob + self.p[0] * self.q_alice - self.q00
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

fn degenerate(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERATE_REL * a.abs().max(b.abs())
}

/// Three-intensity bound with a weaker (`decoy`) and a stronger (`signal`) setting.
pub fn wang_bounds(
    estimator: &'static str,
    decoy: &DecoyStats,
    signal: &DecoyStats,
    y00: f64,
) -> Result<DecoyBounds> {
    let [_, p1, p2] = decoy.p;
    let [_, s1, s2] = signal.p;
    let (t1, t2) = (s2 * p1, p2 * s1);
    if degenerate(t1, t2) || p1 == 0.0 || s1 == 0.0 {
        return Err(Error::DegenerateDenominator { estimator });
    }
    let den = s1 * p1 * (t1 - t2);
    let q0_decoy = decoy.vacuum_gain();
    let q0_signal = signal.vacuum_gain();
    let num = s1 * s2 * (decoy.q - q0_decoy) - p1 * p2 * (signal.q - q0_signal);
    let y11_raw = num / den;
    let y11_lower = clamp_unit(y11_raw);

    let p0 = decoy.p[0];
    let e_num = decoy.eq - p0 * decoy.eq_bob - p0 * decoy.eq_alice + E00 * p0 * p0 * y00;
    let e11_raw = e_num / (p1 * p1 * y11_lower);
    let e11_upper = if y11_lower > 0.0 {
        clamp_unit(e11_raw)
    } else {
        1.0
    };

    Ok(DecoyBounds {
        y11_lower,
        e11_upper,
        precondition_ok: true,
        diagnostics: BoundDiagnostics {
            y11_raw,
            e11_raw,
            q0_decoy: Some(q0_decoy),
            q0_signal: Some(q0_signal),
            denominator: Some(den),
            ..Default::default()
        },
    })
}

/// Active three-intensity bounds from heralded statistics at mu (decoy) and mu' (signal).
pub fn active3_bounds(
    table: &GainTable,
    decoy: &SourceSetting,
    signal: &SourceSetting,
) -> Result<DecoyBounds> {
    if signal.mu < decoy.mu {
        return Err(Error::PreconditionViolated {
            estimator: "active3",
            detail: format!("signal mu' = {} below decoy mu = {}", signal.mu, decoy.mu),
        });
    }
    let d = DecoyStats::from_table(table, EventClass::Heralded, Role::Decoy, decoy)?;
    let s = DecoyStats::from_table(table, EventClass::Heralded, Role::Signal, signal)?;
    wang_bounds("active3", &d, &s, table.y00)
}

/// Ratio families that must be nondecreasing in k for the modified passive bound.
pub fn ratio_chains_hold(
    decoy: &SourceSetting,
    signal: &SourceSetting,
    n_max: usize,
) -> Result<()> {
    let cap = [decoy, signal]
        .iter()
        .filter_map(|s| s.non_triggered_validity_bound())
        .fold(n_max, usize::min);
    let families: [(&str, EventClass, EventClass); 4] = [
        (
            "T(mu')/NT(mu)",
            EventClass::Triggered,
            EventClass::NonTriggered,
        ),
        (
            "NT(mu')/NT(mu)",
            EventClass::NonTriggered,
            EventClass::NonTriggered,
        ),
        ("T(mu')/T(mu)", EventClass::Triggered, EventClass::Triggered),
        (
            "NT(mu')/NT(mu) [B]",
            EventClass::NonTriggered,
            EventClass::NonTriggered,
        ),
    ];
    for (name, num_class, den_class) in families {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=cap {
            let den = den_class.prob_raw(decoy, k);
            let num = num_class.prob_raw(signal, k);
            if !(den > 0.0) {
                return Err(Error::PreconditionViolated {
                    estimator: "modified_passive3",
                    detail: format!("{name}: decoy weight vanishes at k = {k}"),
                });
            }
            let ratio = num / den;
            if ratio < prev * (1.0 - 1e-12) {
                return Err(Error::PreconditionViolated {
                    estimator: "modified_passive3",
                    detail: format!("{name} decreases at k = {k}"),
                });
            }
            prev = ratio;
        }
    }
    Ok(())
}

/// Modified passive three-intensity bounds: triggered events at mu, non-triggered at mu'.
pub fn modified_passive3_bounds(
    table: &GainTable,
    decoy: &SourceSetting,
    signal: &SourceSetting,
    n_max: usize,
) -> Result<DecoyBounds> {
    ratio_chains_hold(decoy, signal, n_max)?;
    let d = DecoyStats::from_table(table, EventClass::Triggered, Role::Decoy, decoy)?;
    let s = DecoyStats::from_table(table, EventClass::NonTriggered, Role::Signal, signal)?;
    wang_bounds("modified_passive3", &d, &s, table.y00)
}

/// Quantities of the passive two-intensity estimator that do not depend on alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassiveTerms {
    pub r00: f64,
    pub r11: f64,
    pub r_min: f64,
    pub q_t: f64,
    pub q_nt: f64,
    pub e_t: f64,
    pub e_nt: f64,
    pub q_delta_t: f64,
    pub q_delta_nt: f64,
    pub e_delta_t: f64,
    pub e_delta_nt: f64,
    /// P^NT_1 of each sender.
    pub p1_nt: f64,
    pub p1_t: f64,
}

impl PassiveTerms {
    pub fn from_table(table: &GainTable, src: &SourceSetting) -> Result<Self> {
        let r0 = src.trigger_ratio(0)?.r_n;
        let r1 = src.trigger_ratio(1)?;
        let r2 = src.trigger_ratio(2)?;
        let r_min = r1.pair(&r2).min(r2.pair(&r1));
        let r11 = r1.r_n * r1.r_n;
        if degenerate(r_min, r11) {
            return Err(Error::DegenerateDenominator {
                estimator: "passive2",
            });
        }
        let t = |p| table.x(EventClass::Triggered, Role::Signal, p);
        let nt = |p| table.x(EventClass::NonTriggered, Role::Signal, p);
        let (tb, ta, tv) = (
            t(Pairing::Both)?,
            t(Pairing::AliceOnly)?,
            t(Pairing::BobOnly)?,
        );
        let (nb, na, nv) = (
            nt(Pairing::Both)?,
            nt(Pairing::AliceOnly)?,
            nt(Pairing::BobOnly)?,
        );
        let p0t = src.triggered_prob(0);
        let p0n = src.non_triggered_prob(0);
        let q_nt = nb.gain;
        if !(q_nt > 0.0) {
            return Err(Error::ZeroStatistics {
                quantity: "non-triggered gain",
            });
        }
        let side_sum =
            |p0: f64, a: GainEntry, b: GainEntry, f: fn(&GainEntry) -> f64| p0 * f(&a) + p0 * f(&b);
        let gain = |e: &GainEntry| e.gain;
        let err = |e: &GainEntry| e.error_gain();
        Ok(Self {
            r00: r0 * r0,
            r11,
            r_min,
            q_t: tb.gain,
            q_nt,
            e_t: tb.qber,
            e_nt: nb.qber,
            q_delta_t: (tb.gain - side_sum(p0t, ta, tv, gain)) / q_nt,
            q_delta_nt: (nb.gain - side_sum(p0n, na, nv, gain)) / q_nt,
            e_delta_t: (tb.error_gain() - side_sum(p0t, ta, tv, err)) / q_nt,
            e_delta_nt: (nb.error_gain() - side_sum(p0n, na, nv, err)) / q_nt,
            p1_nt: src.non_triggered_prob(1),
            p1_t: src.triggered_prob(1),
        })
    }

    /// Upper end of the admissible vacuum-ratio interval.
    pub fn alpha_max(&self) -> f64 {
        (2.0 * self.q_t * self.e_t / (self.r00 * self.q_nt)).min(2.0 * self.e_nt)
    }

    /// Lower bound on Q11^(nt) / Q^(nt).
    pub fn xi(&self, alpha: f64) -> f64 {
        ((self.r_min - self.r00) * alpha + self.r_min * self.q_delta_nt - self.q_delta_t)
            / (self.r_min - self.r11)
    }

    pub fn eps_t(&self, alpha: f64) -> f64 {
        (self.e_delta_t + alpha * self.r00 * E00) / (self.r11 * self.xi(alpha))
    }

    pub fn eps_nt(&self, alpha: f64) -> f64 {
        (self.e_delta_nt + alpha * E00) / self.xi(alpha)
    }

    pub fn eps(&self, alpha: f64) -> f64 {
        self.eps_t(alpha).min(self.eps_nt(alpha))
    }
}

/// Passive two-intensity bounds at a given vacuum ratio alpha.
pub fn passive2_bounds(table: &GainTable, src: &SourceSetting, alpha: f64) -> Result<DecoyBounds> {
    let terms = PassiveTerms::from_table(table, src)?;
    let alpha_max = terms.alpha_max();
    if !(alpha_max >= 0.0) {
        return Err(Error::EmptyAlphaDomain);
    }
    if !(0.0..=alpha_max).contains(&alpha) {
        return Err(Error::PreconditionViolated {
            estimator: "passive2",
            detail: format!("alpha = {alpha} outside [0, {alpha_max}]"),
        });
    }
    let xi = terms.xi(alpha);
    if !(xi > 0.0) {
        return Err(Error::DegenerateDenominator {
            estimator: "passive2",
        });
    }
    let y11_raw = xi * terms.q_nt / (terms.p1_nt * terms.p1_nt);
    let (eps_t, eps_nt) = (terms.eps_t(alpha), terms.eps_nt(alpha));
    let e11_raw = eps_t.min(eps_nt);
    Ok(DecoyBounds {
        y11_lower: clamp_unit(y11_raw),
        e11_upper: clamp_unit(e11_raw),
        precondition_ok: true,
        diagnostics: BoundDiagnostics {
            y11_raw,
            e11_raw,
            xi: Some(xi),
            eps_t: Some(eps_t),
            eps_nt: Some(eps_nt),
            alpha: Some(alpha),
            r_min: Some(terms.r_min),
            ..Default::default()
        },
    })
}

/// Single-photon gain and error of the ideal infinite-decoy protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfiniteDecoy {
    pub q11z: f64,
    pub e11x: f64,
}

pub fn infinite_decoy_bounds(
    p1a: f64,
    p1b: f64,
    channel: &ChannelParams,
    relay: &RelayParams,
    benchmark: BenchmarkTransmittance,
) -> InfiniteDecoy {
    let scale = match benchmark {
        BenchmarkTransmittance::WithRelayDetector => relay.eta_d,
        BenchmarkTransmittance::ChannelOnly => 1.0,
    };
    let ea = scale * channel.transmittance(Side::A);
    let eb = scale * channel.transmittance(Side::B);
    let p_d = relay.p_dark;
    let bracket = ea * eb / 2.0 - (2.0 * ea + 3.0 * eb - 3.0 * ea * eb) * p_d
        + 4.0 * (1.0 - ea) * (1.0 - eb) * p_d * p_d;
    let q11z = (p1a * p1b * (1.0 - p_d).powi(2) * bracket).max(0.0);
    let (e0, ed) = (relay.e_noise, relay.e_misalign);
    let e11x = if q11z > 0.0 {
        clamp_unit(e0 - (e0 - ed) * (1.0 - p_d).powi(2) * p1a * p1b * ea * eb / (2.0 * q11z))
    } else {
        e0
    };
    InfiniteDecoy { q11z, e11x }
}

/// Dispatches to the estimator of the configured protocol (passive2 at alpha = 0).
pub fn bounds_for(config: &ProtocolConfig, table: &GainTable, n_max: usize) -> Result<DecoyBounds> {
    use crate::protocol::Protocol::*;
    match config.protocol {
        Active3 => active3_bounds(
            table,
            &config.source(Role::Decoy)?,
            &config.source(Role::Signal)?,
        ),
        ModifiedPassive3 => modified_passive3_bounds(
            table,
            &config.source(Role::Decoy)?,
            &config.source(Role::Signal)?,
            n_max,
        ),
        Passive2 => passive2_bounds(table, &config.source(Role::Signal)?, 0.0),
        Infinite => Err(Error::PreconditionViolated {
            estimator: "infinite",
            detail: "the infinite-decoy protocol has no estimator".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(p: [f64; 3], q: f64) -> DecoyStats {
        DecoyStats {
            p,
            q,
            q_alice: 0.0,
            q_bob: 0.0,
            q00: 0.0,
            eq: 0.0,
            eq_alice: 0.0,
            eq_bob: 0.0,
        }
    }

    #[test]
    fn equal_settings_are_degenerate() {
        let s = stats([0.6, 0.3, 0.1], 1e-3);
        assert_eq!(
            wang_bounds("t", &s, &s, 0.0),
            Err(Error::DegenerateDenominator { estimator: "t" })
        );
    }

    #[test]
    fn zero_gains_clamp_to_zero() {
        let d = stats([0.9, 0.08, 0.01], 0.0);
        let s = stats([0.7, 0.2, 0.06], 0.0);
        let b = wang_bounds("t", &d, &s, 0.0).unwrap();
        assert_eq!(b.y11_lower, 0.0);
        assert_eq!(b.e11_upper, 1.0);
    }

    #[test]
    fn dropout_of_decoy_terms() {
        // With the decoy gain and both vacuum terms zero only the signal term survives.
        let d = stats([0.9, 0.08, 0.01], 0.0);
        let s = stats([0.7, 0.2, 0.06], 1e-3);
        let b = wang_bounds("t", &d, &s, 0.0).unwrap();
        let expect = -(0.08 * 0.01 * 1e-3) / (0.2 * 0.08 * (0.06 * 0.08 - 0.01 * 0.2));
        assert!((b.diagnostics.y11_raw - expect).abs() < 1e-18);
        assert!(b.diagnostics.y11_raw < 0.0);
    }

    #[test]
    fn infinite_decoy_collapses() {
        let ch = ChannelParams::symmetric(0.2, 40.0);
        let clean = RelayParams::new(0.145, 0.0, 0.0).unwrap();
        let b = infinite_decoy_bounds(0.3, 0.3, &ch, &clean, BenchmarkTransmittance::ChannelOnly);
        assert!(b.e11x.abs() < 1e-15);
        let dark = ChannelParams {
            loss_coeff: f64::INFINITY,
            length_ac: 1.0,
            length_bc: 1.0,
        };
        let b = infinite_decoy_bounds(0.3, 0.3, &dark, &clean, BenchmarkTransmittance::ChannelOnly);
        assert_eq!(b.q11z, 0.0);
    }

    #[test]
    fn reversed_intensities_break_the_chain() {
        let hi = SourceSetting::new(0.6, 0.4, 5e-5, 0.1).unwrap();
        let lo = SourceSetting::new(0.15, 0.4, 5e-5, 0.12).unwrap();
        assert!(ratio_chains_hold(&lo, &hi, 80).is_ok());
        assert!(matches!(
            ratio_chains_hold(&hi, &lo, 80),
            Err(Error::PreconditionViolated { .. })
        ));
    }
}
