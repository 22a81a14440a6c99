//! Source settings and a distance in, key rate out.

use serde::{Deserialize, Serialize};

use crate::decoy::{self, DecoyBounds, DecoyStats, PassiveTerms};
use crate::error::Result;
use crate::finite::{finite_modified_passive_bounds, FluctuationParams};
use crate::keyrate::{self, Branch, KeyRateResult, ModifiedPassiveInputs};
use crate::protocol::{
    ActiveRateFormula, ModelOptions, Protocol, ProtocolConfig, Role, SystemParams,
};
use crate::relay::{build_gain_table, ChannelParams, EventClass, GainEntry, GainTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub distance_km: f64,
    pub config: ProtocolConfig,
    pub rate: KeyRateResult,
    pub bounds: DecoyBounds,
    /// Z-basis gain and QBER entering the leakage of the winning branch.
    pub q_z: f64,
    pub e_z: f64,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.rate.rate > 0.0
    }
}

/// Combined Z statistics of the classes a branch uses.
fn branch_z(rate: &KeyRateResult, z_t: GainEntry, z_nt: GainEntry) -> (f64, f64) {
    match rate.branch {
        Some(Branch::Both) => {
            let q = z_t.gain + z_nt.gain;
            let e = if q > 0.0 {
                (z_t.error_gain() + z_nt.error_gain()) / q
            } else {
                0.0
            };
            (q, e)
        }
        _ => (z_t.gain, z_t.qber),
    }
}

/// Key rate of one configuration at one total distance.
pub fn evaluate(
    config: &ProtocolConfig,
    distance_km: f64,
    system: &SystemParams,
    opts: &ModelOptions,
    fluctuation: Option<&FluctuationParams>,
) -> Result<Evaluation> {
    system.validate()?;
    opts.validate()?;
    let channel = ChannelParams::symmetric(system.loss_coeff, distance_km);
    let table = build_gain_table(config, &channel, &system.relay, opts)?;
    evaluate_with_table(config, &table, distance_km, system, opts, fluctuation)
}

pub fn evaluate_with_table(
    config: &ProtocolConfig,
    table: &GainTable,
    distance_km: f64,
    system: &SystemParams,
    opts: &ModelOptions,
    fluctuation: Option<&FluctuationParams>,
) -> Result<Evaluation> {
    let f = system.f_ec;
    let signal = config.source(Role::Signal)?;
    if fluctuation.is_some() && config.protocol != Protocol::ModifiedPassive3 {
        return Err(crate::Error::InvalidParameter {
            name: "fluctuation",
            value: f64::NAN,
            reason: "statistical fluctuations are modeled for modified_passive3 only",
        });
    }
    let eval = |rate: KeyRateResult, bounds, (q_z, e_z)| Evaluation {
        distance_km,
        config: *config,
        rate,
        bounds,
        q_z,
        e_z,
    };
    match config.protocol {
        Protocol::Infinite => {
            let z = table.z(EventClass::Heralded, Role::Signal)?;
            let p1 = signal.heralded_prob(1);
            let channel = ChannelParams::symmetric(system.loss_coeff, distance_km);
            let inf = decoy::infinite_decoy_bounds(p1, p1, &channel, &system.relay, opts.benchmark);
            let q0 = DecoyStats::from_table(table, EventClass::Heralded, Role::Signal, &signal)?
                .vacuum_gain();
            let rate = keyrate::rate_infinite(q0, inf.q11z, inf.e11x, &z, f)?;
            let y11 = if p1 > 0.0 { inf.q11z / (p1 * p1) } else { 0.0 };
            let bounds = DecoyBounds {
                y11_lower: y11,
                e11_upper: inf.e11x,
                precondition_ok: true,
                diagnostics: decoy::BoundDiagnostics {
                    y11_raw: y11,
                    e11_raw: inf.e11x,
                    ..Default::default()
                },
            };
            Ok(eval(rate, bounds, (z.gain, z.qber)))
        }
        Protocol::Active3 => {
            let decoy_src = config.source(Role::Decoy)?;
            let bounds = decoy::active3_bounds(table, &decoy_src, &signal)?;
            let z = table.z(EventClass::Heralded, Role::Signal)?;
            let q0 = match opts.active_rate {
                ActiveRateFormula::WithVacuum => {
                    DecoyStats::from_table(table, EventClass::Heralded, Role::Signal, &signal)?
                        .vacuum_gain()
                }
                ActiveRateFormula::WithoutVacuum => 0.0,
            };
            let rate = keyrate::rate_active3(&bounds, signal.heralded_prob(1), q0, &z, f)?;
            Ok(eval(rate, bounds, (z.gain, z.qber)))
        }
        Protocol::Passive2 => {
            let terms = PassiveTerms::from_table(table, &signal)?;
            let z_t = table.z(EventClass::Triggered, Role::Signal)?;
            let z_nt = table.z(EventClass::NonTriggered, Role::Signal)?;
            let rate = keyrate::rate_passive2(&terms, &z_t, &z_nt, f, opts.alpha_grid)?;
            let alpha = rate.alpha_star.unwrap_or(0.0);
            let bounds = match decoy::passive2_bounds(table, &signal, alpha) {
                Ok(b) => b,
                // xi <= 0 at the minimizer: nothing is known about single photons.
                Err(crate::Error::DegenerateDenominator { .. }) => DecoyBounds {
                    y11_lower: 0.0,
                    e11_upper: 1.0,
                    precondition_ok: true,
                    diagnostics: decoy::BoundDiagnostics {
                        xi: Some(terms.xi(alpha)),
                        alpha: Some(alpha),
                        r_min: Some(terms.r_min),
                        ..Default::default()
                    },
                },
                Err(e) => return Err(e),
            };
            let z = branch_z(&rate, z_t, z_nt);
            Ok(eval(rate, bounds, z))
        }
        Protocol::ModifiedPassive3 => {
            let decoy_src = config.source(Role::Decoy)?;
            let bounds = match fluctuation {
                None => decoy::modified_passive3_bounds(table, &decoy_src, &signal, opts.n_max)?,
                Some(fl) => finite_modified_passive_bounds(
                    table,
                    &decoy_src,
                    &signal,
                    fl,
                    opts.bars,
                    opts.counts,
                    opts.n_max,
                )?,
            };
            let d = DecoyStats::from_table(table, EventClass::Triggered, Role::Decoy, &decoy_src)?;
            let s = DecoyStats::from_table(table, EventClass::NonTriggered, Role::Signal, &signal)?;
            let inp = ModifiedPassiveInputs {
                q0_t: d.vacuum_gain(),
                q0_nt: s.vacuum_gain(),
                p1_t: signal.triggered_prob(1),
                p1_nt: signal.non_triggered_prob(1),
                z_t: table.z(EventClass::Triggered, Role::Signal)?,
                z_nt: table.z(EventClass::NonTriggered, Role::Signal)?,
            };
            let rate = keyrate::rate_modified_passive3(&bounds, &inp, f)?;
            let z = branch_z(&rate, inp.z_t, inp.z_nt);
            Ok(eval(rate, bounds, z))
        }
    }
}
