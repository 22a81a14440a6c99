//! Protocol configurations, hardware constants and model switches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pnd::SourceSetting;
use crate::relay::{ClosedFormVariant, MisalignmentReading, RelayParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Infinite,
    Active3,
    Passive2,
    ModifiedPassive3,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::Infinite => "infinite",
            Protocol::Active3 => "active3",
            Protocol::Passive2 => "passive2",
            Protocol::ModifiedPassive3 => "modified_passive3",
        }
    }

    pub fn needs_decoy(&self) -> bool {
        matches!(self, Protocol::Active3 | Protocol::ModifiedPassive3)
    }
}

/// One intensity setting with its own pair correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intensity {
    pub mu: f64,
    pub p_cor: f64,
}

impl Intensity {
    pub const fn new(mu: f64, p_cor: f64) -> Self {
        Self { mu, p_cor }
    }
}

/// Heralding detector of each sender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceHardware {
    pub eta_trigger: f64,
    pub dark: f64,
}

impl SourceHardware {
    /// eta = 0.4, d = 5e-5.
    pub const fn reference() -> Self {
        Self {
            eta_trigger: 0.4,
            dark: 5e-5,
        }
    }
}

/// Symmetric protocol configuration; both senders use identical settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy: Option<Intensity>,
    pub signal: Intensity,
    pub hardware: SourceHardware,
}

/// Intensity role inside a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Decoy,
    Signal,
}

impl ProtocolConfig {
    pub fn source(&self, role: Role) -> Result<SourceSetting> {
        let i = match role {
            Role::Signal => self.signal,
            Role::Decoy => self.decoy.ok_or(Error::InvalidParameter {
                name: "decoy",
                value: f64::NAN,
                reason: "protocol has no decoy intensity",
            })?,
        };
        SourceSetting::new(i.mu, self.hardware.eta_trigger, self.hardware.dark, i.p_cor)
    }

    /// Checks ranges and the intensity ordering mu' > mu > 0.
    pub fn validate(&self) -> Result<()> {
        self.validate_ranges()?;
        if let Some(decoy) = self.decoy {
            if !(decoy.mu > 0.0 && self.signal.mu > decoy.mu) {
                return Err(Error::InvalidParameter {
                    name: "signal.mu",
                    value: self.signal.mu,
                    reason: "signal intensity must exceed a positive decoy intensity",
                });
            }
        }
        Ok(())
    }

    /// Range checks only; ordering violations are left for the estimators.
    pub fn validate_ranges(&self) -> Result<()> {
        if self.protocol.needs_decoy() && self.decoy.is_none() {
            return Err(Error::InvalidParameter {
                name: "decoy",
                value: f64::NAN,
                reason: "protocol requires a decoy intensity",
            });
        }
        self.source(Role::Signal)?;
        if self.decoy.is_some() {
            self.source(Role::Decoy)?;
        }
        Ok(())
    }
}

/// Channel attenuation, relay and error correction shared by every protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// dB/km.
    pub loss_coeff: f64,
    pub relay: RelayParams,
    /// Error-correction inefficiency.
    pub f_ec: f64,
}

impl SystemParams {
    /// alpha = 0.2 dB/km, f = 1.16, eta_D = 0.145, e_d = 0.015, p_d = 3e-6.
    pub fn reference() -> Self {
        Self {
            loss_coeff: 0.2,
            relay: RelayParams {
                eta_d: 0.145,
                p_dark: 3e-6,
                e_misalign: 0.015,
                e_noise: RelayParams::E_NOISE,
            },
            f_ec: 1.16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loss_coeff.is_finite() && self.loss_coeff >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "loss_coeff",
                value: self.loss_coeff,
                reason: "must be finite and nonnegative",
            });
        }
        if !(self.f_ec.is_finite() && self.f_ec >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "f_ec",
                value: self.f_ec,
                reason: "error-correction inefficiency must be >= 1",
            });
        }
        self.relay.validate()
    }
}

/// Transmittance used in the infinite-decoy single-photon expressions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkTransmittance {
    /// eta_D * eta^c, consistent with the relay model.
    #[default]
    WithRelayDetector,
    /// eta^c alone.
    ChannelOnly,
}

/// Rate formula of the active protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveRateFormula {
    /// Includes the vacuum credit Q_0.
    #[default]
    WithVacuum,
    WithoutVacuum,
}

/// Direction of the finite-size bars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarAssignment {
    /// Each fluctuated quantity moves in the direction that loosens the bound.
    #[default]
    WorstCase,
    AsPrinted,
}

/// How per-class pulse counts are derived from N.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// N^T = eta_A eta_B N and friends.
    #[default]
    Efficiency,
    /// Class masses sum_n P^T_n, sum_n P^NT_n of each sender.
    ClassMass,
}

/// Switches selecting between readings of ambiguous formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub closed_form: ClosedFormVariant,
    pub misalignment: MisalignmentReading,
    pub benchmark: BenchmarkTransmittance,
    pub active_rate: ActiveRateFormula,
    pub bars: BarAssignment,
    pub counts: CountMode,
    /// Points in the vacuum-ratio grid of the passive two-intensity rate.
    pub alpha_grid: usize,
    /// Truncation index for ratio-chain checks and series oracles.
    pub n_max: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            closed_form: ClosedFormVariant::default(),
            misalignment: MisalignmentReading::default(),
            benchmark: BenchmarkTransmittance::default(),
            active_rate: ActiveRateFormula::default(),
            bars: BarAssignment::default(),
            counts: CountMode::default(),
            alpha_grid: 1000,
            n_max: crate::pnd::DEFAULT_N_MAX,
        }
    }
}

impl ModelOptions {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid < 2 {
            return Err(Error::InvalidParameter {
                name: "alpha_grid",
                value: self.alpha_grid as f64,
                reason: "needs at least two points",
            });
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParameter {
                name: "n_max",
                value: self.n_max as f64,
                reason: "needs at least two photon numbers",
            });
        }
        Ok(())
    }
}
