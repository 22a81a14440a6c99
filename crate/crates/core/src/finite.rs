//! Statistical fluctuations of measured gains and the resulting bounds.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::decoy::{ratio_chains_hold, wang_bounds, DecoyBounds, DecoyStats};
use crate::error::{Error, Result};
use crate::oracle::class_mass;
use crate::pnd::SourceSetting;
use crate::protocol::{BarAssignment, CountMode, Role};
use crate::relay::{EventClass, GainTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationParams {
    /// Standard deviations.
    pub n_alpha: f64,
    /// Pulses sent per intensity pairing.
    pub n_pulses: f64,
    /// Separate pulse counts for the decoy and signal pairings (default: both `n_pulses`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pulses_decoy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pulses_signal: Option<f64>,
}

impl FluctuationParams {
    pub fn new(n_alpha: f64, n_pulses: f64) -> Self {
        Self {
            n_alpha,
            n_pulses,
            n_pulses_decoy: None,
            n_pulses_signal: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_alpha.is_finite() && self.n_alpha >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "n_alpha",
                value: self.n_alpha,
                reason: "must be finite and nonnegative",
            });
        }
        for (name, v) in [
            ("n_pulses", Some(self.n_pulses)),
            ("n_pulses_decoy", self.n_pulses_decoy),
            ("n_pulses_signal", self.n_pulses_signal),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter {
                        name,
                        value: v,
                        reason: "pulse count must be positive and finite",
                    });
                }
            }
        }
        Ok(())
    }

    fn pulses(&self, role: Role) -> f64 {
        match role {
            Role::Decoy => self.n_pulses_decoy,
            Role::Signal => self.n_pulses_signal,
        }
        .unwrap_or(self.n_pulses)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// value (1 -+ n_alpha / sqrt(count * value)), lower end floored at zero.
pub fn fluctuation_band(
    value: f64,
    count: f64,
    n_alpha: f64,
    quantity: &'static str,
) -> Result<Band> {
    if n_alpha == 0.0 {
        return Ok(Band {
            lower: value,
            value,
            upper: value,
        });
    }
    let events = count * value;
    if !(events > 0.0) {
        return Err(Error::ZeroStatistics { quantity });
    }
    let beta = n_alpha / events.sqrt();
    Ok(Band {
        lower: (value * (1.0 - beta)).max(0.0),
        value,
        upper: value * (1.0 + beta),
    })
}

/// Two-sided normal tail beyond n_alpha standard deviations.
pub fn failure_probability(n_alpha: f64) -> f64 {
    erfc(n_alpha / std::f64::consts::SQRT_2)
}

/// Detected-class pulse counts for the two sides of the modified passive protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub t_both: f64,
    pub t_alice: f64,
    pub t_bob: f64,
    pub nt_both: f64,
    pub nt_alice: f64,
    pub nt_bob: f64,
}

pub fn class_counts(
    decoy: &SourceSetting,
    signal: &SourceSetting,
    fl: &FluctuationParams,
    mode: CountMode,
) -> ClassCounts {
    let nd = fl.pulses(Role::Decoy);
    let ns = fl.pulses(Role::Signal);
    match mode {
        CountMode::Efficiency => {
            let (eta, d) = (decoy.eta_trigger, decoy.dark);
            let (eta_s, d_s) = (signal.eta_trigger, signal.dark);
            ClassCounts {
                t_both: eta * eta * nd,
                t_alice: eta * d * nd,
                t_bob: d * eta * nd,
                nt_both: (1.0 - eta_s) * (1.0 - eta_s) * ns,
                nt_alice: (1.0 - eta_s) * (1.0 - d_s) * ns,
                nt_bob: (1.0 - d_s) * (1.0 - eta_s) * ns,
            }
        }
        CountMode::ClassMass => {
            let t = class_mass(decoy, EventClass::Triggered);
            let t0 = class_mass(&decoy.with_mu(0.0), EventClass::Triggered);
            let nt = class_mass(signal, EventClass::NonTriggered);
            let nt0 = class_mass(&signal.with_mu(0.0), EventClass::NonTriggered);
            ClassCounts {
                t_both: t * t * nd,
                t_alice: t * t0 * nd,
                t_bob: t0 * t * nd,
                nt_both: nt * nt * ns,
                nt_alice: nt * nt0 * ns,
                nt_bob: nt0 * nt * ns,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dir {
    Up,
    Down,
}

fn pick(b: Band, dir: Dir) -> f64 {
    match dir {
        Dir::Up => b.upper,
        Dir::Down => b.lower,
    }
}

/// Modified passive bounds with every measured gain moved to one end of its band.
pub fn finite_modified_passive_bounds(
    table: &GainTable,
    decoy: &SourceSetting,
    signal: &SourceSetting,
    fl: &FluctuationParams,
    bars: BarAssignment,
    counts: CountMode,
    n_max: usize,
) -> Result<DecoyBounds> {
    fl.validate()?;
    ratio_chains_hold(decoy, signal, n_max)?;
    let d = DecoyStats::from_table(table, EventClass::Triggered, Role::Decoy, decoy)?;
    let s = DecoyStats::from_table(table, EventClass::NonTriggered, Role::Signal, signal)?;
    let c = class_counts(decoy, signal, fl, counts);
    let na = fl.n_alpha;

    // Sign of P1'P1(P2'P1 - P2 P1') decides which end lowers Y11.
    let den = s.p[1] * d.p[1] * (s.p[2] * d.p[1] - d.p[2] * s.p[1]);
    let lower_y11 = match bars {
        BarAssignment::WorstCase => den > 0.0,
        BarAssignment::AsPrinted => false,
    };
    let (dq, dvac, sq, svac) = if lower_y11 {
        (Dir::Down, Dir::Up, Dir::Up, Dir::Down)
    } else {
        (Dir::Up, Dir::Down, Dir::Down, Dir::Up)
    };

    let band = |v, n, q| fluctuation_band(v, n, na, q);
    let mut db = d;
    db.q = pick(band(d.q, c.t_both, "triggered gain Q_mumu")?, dq);
    db.q_alice = pick(band(d.q_alice, c.t_alice, "triggered gain Q_mu0")?, dvac);
    db.q_bob = pick(band(d.q_bob, c.t_bob, "triggered gain Q_0mu")?, dvac);
    db.eq = band(d.eq, c.t_both, "triggered error gain EQ_mumu")?.upper;
    db.eq_alice = band(d.eq_alice, c.t_alice, "triggered error gain EQ_mu0")?.lower;
    db.eq_bob = band(d.eq_bob, c.t_bob, "triggered error gain EQ_0mu")?.lower;

    let mut sb = s;
    sb.q = pick(band(s.q, c.nt_both, "non-triggered gain Q_mu'mu'")?, sq);
    sb.q_alice = pick(
        band(s.q_alice, c.nt_alice, "non-triggered gain Q_mu'0")?,
        svac,
    );
    sb.q_bob = pick(band(s.q_bob, c.nt_bob, "non-triggered gain Q_0mu'")?, svac);

    wang_bounds("modified_passive3", &db, &sb, table.y00)
}
