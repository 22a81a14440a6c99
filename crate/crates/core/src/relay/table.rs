//! Gain/QBER table for every (basis, class, intensity, pairing) a protocol reads.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    apply_misalignment, click_probs_signal_signal, click_probs_vacuum_signal, gain_from_clicks,
    intrinsic_error_gain, z_basis_gain, ChannelParams, EventClass, RelayParams, Side,
};
use crate::error::{Error, Result};
use crate::protocol::{ModelOptions, Protocol, ProtocolConfig, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

/// Which senders emit light; the others send vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Both,
    AliceOnly,
    BobOnly,
    Vacuum,
}

impl Pairing {
    pub const ALL: [Pairing; 4] = [
        Pairing::Both,
        Pairing::AliceOnly,
        Pairing::BobOnly,
        Pairing::Vacuum,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GainKey {
    pub basis: Basis,
    pub class: EventClass,
    pub role: Role,
    pub pairing: Pairing,
}

impl fmt::Display for GainKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}/{}/{:?}/{:?}",
            self.basis,
            self.class.label(),
            self.role,
            self.pairing
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub gain: f64,
    /// QBER clamped to [0, 1].
    pub qber: f64,
    pub qber_raw: f64,
}

impl GainEntry {
    fn new(gain: f64, qber_raw: f64) -> Self {
        Self {
            gain,
            qber: qber_raw.clamp(0.0, 1.0),
            qber_raw,
        }
    }

    /// E*Q with the clamped QBER.
    pub fn error_gain(&self) -> f64 {
        self.gain * self.qber
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    pub entries: BTreeMap<GainKey, GainEntry>,
    /// Background yield p_d^2.
    pub y00: f64,
}

impl GainTable {
    pub fn get(
        &self,
        basis: Basis,
        class: EventClass,
        role: Role,
        pairing: Pairing,
    ) -> Result<GainEntry> {
        let key = GainKey {
            basis,
            class,
            role,
            pairing,
        };
        self.entries
            .get(&key)
            .copied()
            .ok_or_else(|| Error::MissingEntry(key.to_string()))
    }

    pub fn x(&self, class: EventClass, role: Role, pairing: Pairing) -> Result<GainEntry> {
        self.get(Basis::X, class, role, pairing)
    }

    pub fn z(&self, class: EventClass, role: Role) -> Result<GainEntry> {
        self.get(Basis::Z, class, role, Pairing::Both)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Keys a protocol reads from the table.
pub fn required_keys(protocol: Protocol) -> Vec<GainKey> {
    use EventClass::*;
    let x_rows: &[(EventClass, Role)] = match protocol {
        Protocol::Infinite => &[(Heralded, Role::Signal)],
        Protocol::Active3 => &[(Heralded, Role::Decoy), (Heralded, Role::Signal)],
        Protocol::Passive2 => &[(Triggered, Role::Signal), (NonTriggered, Role::Signal)],
        Protocol::ModifiedPassive3 => &[(Triggered, Role::Decoy), (NonTriggered, Role::Signal)],
    };
    let z_rows: &[(EventClass, Role)] = match protocol {
        Protocol::Infinite | Protocol::Active3 => &[(Heralded, Role::Signal)],
        Protocol::Passive2 | Protocol::ModifiedPassive3 => {
            &[(Triggered, Role::Signal), (NonTriggered, Role::Signal)]
        }
    };
    let mut keys = Vec::new();
    for &(class, role) in x_rows {
        for pairing in Pairing::ALL {
            keys.push(GainKey {
                basis: Basis::X,
                class,
                role,
                pairing,
            });
        }
    }
    for &(class, role) in z_rows {
        keys.push(GainKey {
            basis: Basis::Z,
            class,
            role,
            pairing: Pairing::Both,
        });
    }
    keys
}

fn entry(
    key: &GainKey,
    config: &ProtocolConfig,
    channel: &ChannelParams,
    relay: &RelayParams,
    opts: &ModelOptions,
) -> Result<GainEntry> {
    let src = config.source(key.role)?;
    let xq = |clicks: super::ClickProbabilities| {
        let q = gain_from_clicks(&clicks);
        let e = if q > 0.0 {
            apply_misalignment(intrinsic_error_gain(&clicks) / q, relay, opts.misalignment)
        } else {
            0.0
        };
        GainEntry::new(q, e)
    };
    Ok(match (key.basis, key.pairing) {
        (Basis::Z, _) => {
            let z = z_basis_gain(&src, &src, channel, relay, key.class, opts.closed_form)?;
            GainEntry::new(z.q_z, z.e_z)
        }
        (Basis::X, Pairing::Both) => xq(click_probs_signal_signal(
            &src,
            &src,
            channel,
            relay,
            key.class,
            opts.closed_form,
        )?),
        (Basis::X, Pairing::AliceOnly) => xq(click_probs_vacuum_signal(
            &src,
            Side::B,
            channel,
            relay,
            key.class,
        )?),
        (Basis::X, Pairing::BobOnly) => xq(click_probs_vacuum_signal(
            &src,
            Side::A,
            channel,
            relay,
            key.class,
        )?),
        (Basis::X, Pairing::Vacuum) => {
            let p0 = key.class.prob(&src, 0);
            GainEntry::new(p0 * p0 * relay.p_dark * relay.p_dark, 0.5)
        }
    })
}

/// Evaluates every entry the configured protocol needs.
pub fn build_gain_table(
    config: &ProtocolConfig,
    channel: &ChannelParams,
    relay: &RelayParams,
    opts: &ModelOptions,
) -> Result<GainTable> {
    config.validate_ranges()?;
    channel.validate()?;
    relay.validate()?;
    let keys = required_keys(config.protocol);
    let values: Vec<Result<GainEntry>> = keys
        .par_iter()
        .map(|k| entry(k, config, channel, relay, opts))
        .collect();
    let mut entries = BTreeMap::new();
    for (k, v) in keys.into_iter().zip(values) {
        entries.insert(k, v?);
    }
    Ok(GainTable {
        entries,
        y00: relay.p_dark * relay.p_dark,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn row_counts_per_protocol() {
        assert_eq!(required_keys(Protocol::Infinite).len(), 5);
        assert_eq!(required_keys(Protocol::Active3).len(), 9);
        assert_eq!(required_keys(Protocol::Passive2).len(), 10);
        assert_eq!(required_keys(Protocol::ModifiedPassive3).len(), 10);
        let sys = presets::system();
        let cfg = presets::modified_passive();
        let t = build_gain_table(
            &cfg,
            &ChannelParams::symmetric(sys.loss_coeff, 50.0),
            &sys.relay,
            &ModelOptions::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 2 * 4 + 2);
    }

    #[test]
    fn dark_vacuum_table() {
        let sys = presets::system();
        let mut cfg = presets::active3();
        cfg.signal.mu = 0.0;
        cfg.decoy.as_mut().unwrap().mu = 0.0;
        let t = build_gain_table(
            &cfg,
            &ChannelParams::symmetric(sys.loss_coeff, 0.0),
            &sys.relay,
            &ModelOptions::default(),
        )
        .unwrap();
        let src = cfg.source(Role::Signal).unwrap();
        let p0 = src.heralded_prob(0);
        let q00 = t
            .x(EventClass::Heralded, Role::Signal, Pairing::Vacuum)
            .unwrap();
        assert!((q00.gain / (p0 * p0 * 9e-12) - 1.0).abs() < 1e-14);
        assert_eq!(q00.qber, 0.5);
        for e in t.entries.values() {
            assert!(e.gain <= 1e-10, "{e:?}");
        }
    }
}
