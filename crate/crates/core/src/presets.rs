//! Reference hardware and the figure parameter sets.

use serde::{Deserialize, Serialize};

use crate::finite::FluctuationParams;
use crate::pnd::{poisson_prob, SourceSetting};
use crate::protocol::{Intensity, Protocol, ProtocolConfig, SourceHardware, SystemParams};
use crate::sweep::{IntensityRange, SearchSpace, SweepSpec};

pub const ACTIVE_DECOY: Intensity = Intensity::new(0.577e-3, 0.432837);
pub const ACTIVE_SIGNAL: Intensity = Intensity::new(1.425e-3, 0.405844);
pub const MODIFIED_DECOY: Intensity = Intensity::new(0.147577, 0.12);
pub const MODIFIED_SIGNAL: Intensity = Intensity::new(0.623927, 0.1);
pub const PASSIVE_SIGNAL: Intensity = Intensity::new(0.79, 0.1);
/// Mean photon number of the weak coherent comparison source.
pub const WCS_MEAN: f64 = 0.5;
pub const FINITE_N_ALPHA: f64 = 5.0;
pub const FINITE_PULSES: [f64; 4] = [1e9, 1e10, 1e11, 1e13];
/// Largest photon number in the distribution comparison.
pub const DISTRIBUTION_N_TOP: usize = 10;

pub fn system() -> SystemParams {
    SystemParams::reference()
}

pub fn hardware() -> SourceHardware {
    SourceHardware::reference()
}

fn config(protocol: Protocol, decoy: Option<Intensity>, signal: Intensity) -> ProtocolConfig {
    ProtocolConfig {
        protocol,
        decoy,
        signal,
        hardware: hardware(),
    }
}

pub fn active3() -> ProtocolConfig {
    config(Protocol::Active3, Some(ACTIVE_DECOY), ACTIVE_SIGNAL)
}

pub fn modified_passive() -> ProtocolConfig {
    config(
        Protocol::ModifiedPassive3,
        Some(MODIFIED_DECOY),
        MODIFIED_SIGNAL,
    )
}

pub fn passive2() -> ProtocolConfig {
    config(Protocol::Passive2, None, PASSIVE_SIGNAL)
}

pub fn infinite() -> ProtocolConfig {
    config(Protocol::Infinite, None, ACTIVE_SIGNAL)
}

/// Optimal-intensity search used for the infinite-decoy curve.
pub fn infinite_search() -> SearchSpace {
    SearchSpace {
        decoy: None,
        signal: Some(IntensityRange::Grid {
            min: 1e-4,
            max: 1e-1,
            points: 16,
            log: true,
        }),
    }
}

/// 0, 5, ..., 150 km.
pub fn distances() -> Vec<f64> {
    (0..=30).map(|i| 5.0 * i as f64).collect()
}

/// Heralded source of the single-photon comparison.
pub fn comparison_source() -> SourceSetting {
    let h = hardware();
    SourceSetting::new(ACTIVE_SIGNAL.mu, h.eta_trigger, h.dark, ACTIVE_SIGNAL.p_cor)
        .expect("preset source is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5];

    pub fn label(&self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.label() == s)
    }
}

/// One rate-vs-distance curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub name: String,
    pub spec: SweepSpec,
}

fn fixed(name: &str, cfg: ProtocolConfig) -> Curve {
    Curve {
        name: name.into(),
        spec: SweepSpec::fixed(cfg, distances()),
    }
}

fn optimized_infinite() -> Curve {
    let mut spec = SweepSpec::fixed(infinite(), distances());
    spec.search = infinite_search();
    Curve {
        name: "infinite".into(),
        spec,
    }
}

/// Rate curves of a figure; the photon-number figure has none.
pub fn curves(fig: Figure) -> Vec<Curve> {
    match fig {
        Figure::Fig2 => vec![
            optimized_infinite(),
            fixed("modified_passive3", modified_passive()),
        ],
        Figure::Fig3 => Vec::new(),
        Figure::Fig4 => vec![
            optimized_infinite(),
            fixed("modified_passive3", modified_passive()),
            fixed("active3", active3()),
            fixed("passive2", passive2()),
        ],
        Figure::Fig5 => {
            let mut out = vec![fixed("asymptotic", modified_passive())];
            for n in FINITE_PULSES {
                let mut c = fixed(&format!("n_{n:e}"), modified_passive());
                c.spec.fluctuation = Some(FluctuationParams::new(FINITE_N_ALPHA, n));
                out.push(c);
            }
            out
        }
    }
}

/// Photon-number probabilities of the heralded source and the Poisson reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub n: usize,
    pub spdcs: f64,
    pub poisson: f64,
}

pub fn distribution_rows(n_top: usize) -> Vec<DistributionRow> {
    let src = comparison_source();
    (0..=n_top)
        .map(|n| DistributionRow {
            n,
            spdcs: src.heralded_prob(n),
            poisson: poisson_prob(WCS_MEAN, n),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for c in [active3(), modified_passive(), passive2(), infinite()] {
            c.validate().unwrap();
        }
        system().validate().unwrap();
        assert_eq!(distances().len(), 31);
        assert_eq!(*distances().last().unwrap(), 150.0);
    }

    #[test]
    fn figure_curve_counts() {
        assert_eq!(curves(Figure::Fig2).len(), 2);
        assert!(curves(Figure::Fig3).is_empty());
        assert_eq!(curves(Figure::Fig4).len(), 4);
        assert_eq!(curves(Figure::Fig5).len(), 5);
        assert_eq!(Figure::parse("fig4"), Some(Figure::Fig4));
        assert_eq!(Figure::parse("fig9"), None);
    }
}
