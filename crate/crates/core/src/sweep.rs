//! Distance sweeps with per-distance intensity search.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::FluctuationParams;
use crate::pipeline::{evaluate, Evaluation};
use crate::protocol::{Intensity, ModelOptions, ProtocolConfig, SystemParams};

/// Refinement passes after the coarse grid.
pub const REFINE_PASSES: usize = 2;
/// Span reduction per refinement pass.
pub const REFINE_SHRINK: f64 = 5.0;

/// Values one intensity may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityRange {
    Fixed {
        mu: f64,
    },
    Grid {
        min: f64,
        max: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
    /// mu and p_cor varied together.
    Table {
        entries: Vec<Intensity>,
    },
}

impl IntensityRange {
    pub fn validate(&self, name: &'static str) -> Result<()> {
        let bad = |value, reason| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        match self {
            IntensityRange::Fixed { mu } if !(mu.is_finite() && *mu >= 0.0) => {
                bad(*mu, "intensity must be finite and nonnegative")
            }
            IntensityRange::Grid {
                min,
                max,
                points,
                log,
            } => {
                if !(min.is_finite() && max.is_finite() && *min >= 0.0 && min <= max) {
                    bad(*min, "grid needs 0 <= min <= max")
                } else if *points == 0 {
                    bad(0.0, "grid needs at least one point")
                } else if *log && *min <= 0.0 {
                    bad(*min, "log grid needs min > 0")
                } else {
                    Ok(())
                }
            }
            IntensityRange::Table { entries } if entries.is_empty() => {
                bad(0.0, "intensity table is empty")
            }
            _ => Ok(()),
        }
    }

    fn grid_values(min: f64, max: f64, points: usize, log: bool) -> Vec<f64> {
        if points == 1 || min == max {
            return vec![if log {
                (min * max).sqrt()
            } else {
                (min + max) / 2.0
            }];
        }
        let (a, b) = if log {
            (min.ln(), max.ln())
        } else {
            (min, max)
        };
        (0..points)
            .map(|i| {
                let v = if i + 1 == points {
                    b
                } else {
                    a + (b - a) * i as f64 / (points - 1) as f64
                };
                if log {
                    if i == 0 {
                        min
                    } else if i + 1 == points {
                        max
                    } else {
                        v.exp()
                    }
                } else {
                    v
                }
            })
            .collect()
    }

    /// Candidate settings; `base` supplies p_cor where the range does not.
    fn candidates(&self, base: Intensity) -> Vec<Intensity> {
        match self {
            IntensityRange::Fixed { mu } => vec![Intensity::new(*mu, base.p_cor)],
            IntensityRange::Grid {
                min,
                max,
                points,
                log,
            } => Self::grid_values(*min, *max, *points, *log)
                .into_iter()
                .map(|mu| Intensity::new(mu, base.p_cor))
                .collect(),
            IntensityRange::Table { entries } => entries.clone(),
        }
    }

    /// A grid of the same size with span / REFINE_SHRINK around `center`, clipped.
    fn refined(&self, center: f64) -> Option<Self> {
        match *self {
            IntensityRange::Grid {
                min,
                max,
                points,
                log,
            } if points > 1 && min < max => {
                let (lo, hi, c) = if log {
                    (min.ln(), max.ln(), center.ln())
                } else {
                    (min, max, center)
                };
                let half = (hi - lo) / REFINE_SHRINK / 2.0;
                let (mut a, mut b) = ((c - half).max(lo), (c + half).min(hi));
                if log {
                    a = a.exp();
                    b = b.exp();
                }
                Some(IntensityRange::Grid {
                    min: a.max(min),
                    max: b.min(max),
                    points,
                    log,
                })
            }
            _ => None,
        }
    }
}

/// Ranges for the decoy and signal intensities; `None` keeps the configured value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy: Option<IntensityRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<IntensityRange>,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = &self.decoy {
            r.validate("search.decoy")?;
        }
        if let Some(r) = &self.signal {
            r.validate("search.signal")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Total Alice-Bob distances in km, ascending.
    pub distances: Vec<f64>,
    pub config: ProtocolConfig,
    #[serde(default)]
    pub search: SearchSpace,
    #[serde(default = "yes")]
    pub symmetric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluctuation: Option<FluctuationParams>,
}

fn yes() -> bool {
    true
}

impl SweepSpec {
    pub fn fixed(config: ProtocolConfig, distances: Vec<f64>) -> Self {
        Self {
            distances,
            config,
            search: SearchSpace::default(),
            symmetric: true,
            fluctuation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() {
            return Err(Error::InvalidParameter {
                name: "distances",
                value: 0.0,
                reason: "distance list is empty",
            });
        }
        for w in self.distances.windows(2) {
            if !(w[1] >= w[0]) {
                return Err(Error::InvalidParameter {
                    name: "distances",
                    value: w[1],
                    reason: "distances must be ascending",
                });
            }
        }
        if let Some(&d) = self
            .distances
            .iter()
            .find(|d| !(d.is_finite() && **d >= 0.0))
        {
            return Err(Error::InvalidParameter {
                name: "distances",
                value: d,
                reason: "distances must be finite and nonnegative",
            });
        }
        if !self.symmetric {
            return Err(Error::InvalidParameter {
                name: "symmetric",
                value: 0.0,
                reason: "the closed-form model requires symmetric settings",
            });
        }
        if let Some(fl) = &self.fluctuation {
            fl.validate()?;
        }
        self.search.validate()?;
        self.config.validate_ranges()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub distance_km: f64,
    /// Best evaluation found, including zero-rate ones.
    pub evaluation: Option<Evaluation>,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Higher rate first, then higher raw rate, then smaller mu', then smaller mu.
fn better(a: &Evaluation, b: &Evaluation) -> bool {
    let key = |e: &Evaluation| {
        (
            e.rate.rate,
            e.rate.raw,
            e.config.signal.mu,
            e.config.decoy.map_or(0.0, |d| d.mu),
        )
    };
    let (ka, kb) = (key(a), key(b));
    match ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match kb.2.total_cmp(&ka.2) {
            Ordering::Equal => ka.3 < kb.3,
            o => o == Ordering::Greater,
        },
    }
}

struct Pass<'a> {
    config: &'a ProtocolConfig,
    distance_km: f64,
    system: &'a SystemParams,
    opts: &'a ModelOptions,
    fluctuation: Option<&'a FluctuationParams>,
}

impl Pass<'_> {
    /// Best evaluation over the product of candidates; errors only if every candidate fails.
    fn run(
        &self,
        decoys: &[Option<Intensity>],
        signals: &[Intensity],
        incumbent: Option<Evaluation>,
    ) -> Result<Evaluation> {
        let mut configs = Vec::new();
        for &s in signals {
            for &d in decoys {
                let mut c = *self.config;
                c.signal = s;
                c.decoy = d;
                if c.validate().is_ok() {
                    configs.push(c);
                }
            }
        }
        let results: Vec<Result<Evaluation>> = configs
            .par_iter()
            .map(|c| {
                evaluate(
                    c,
                    self.distance_km,
                    self.system,
                    self.opts,
                    self.fluctuation,
                )
            })
            .collect();
        let mut best = incumbent;
        let mut first_err = None;
        for r in results {
            match r {
                Ok(e) => {
                    if best.as_ref().is_none_or(|b| better(&e, b)) {
                        best = Some(e);
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        best.ok_or_else(|| {
            first_err.unwrap_or(Error::NoFeasibleConfig {
                distance_km: self.distance_km,
            })
        })
    }
}

/// Best evaluation at one distance, including a zero-rate one when nothing yields key.
pub fn search_at_distance(
    config: &ProtocolConfig,
    space: &SearchSpace,
    distance_km: f64,
    system: &SystemParams,
    opts: &ModelOptions,
    fluctuation: Option<&FluctuationParams>,
) -> Result<Evaluation> {
    let pass = Pass {
        config,
        distance_km,
        system,
        opts,
        fluctuation,
    };
    let decoy_cands = |r: &Option<IntensityRange>| -> Vec<Option<Intensity>> {
        match (r, config.decoy) {
            (Some(r), Some(base)) => r.candidates(base).into_iter().map(Some).collect(),
            _ => vec![config.decoy],
        }
    };
    let signal_cands = |r: &Option<IntensityRange>| match r {
        Some(r) => r.candidates(config.signal),
        None => vec![config.signal],
    };
    let (mut dr, mut sr) = (space.decoy.clone(), space.signal.clone());
    let mut best = pass.run(&decoy_cands(&dr), &signal_cands(&sr), None)?;
    for _ in 0..REFINE_PASSES {
        let nd = dr.as_ref().and_then(|r| r.refined(best.config.decoy?.mu));
        let ns = sr.as_ref().and_then(|r| r.refined(best.config.signal.mu));
        if nd.is_none() && ns.is_none() {
            break;
        }
        if nd.is_some() {
            dr = nd;
        }
        if ns.is_some() {
            sr = ns;
        }
        let mut base = *config;
        base.signal = best.config.signal;
        base.decoy = best.config.decoy;
        let pass = Pass {
            config: &base,
            ..pass
        };
        let decoys: Vec<Option<Intensity>> = match (&dr, base.decoy) {
            (Some(r), Some(b)) => r.candidates(b).into_iter().map(Some).collect(),
            _ => vec![base.decoy],
        };
        let signals = match &sr {
            Some(r) => r.candidates(base.signal),
            None => vec![base.signal],
        };
        best = pass.run(&decoys, &signals, Some(best))?;
    }
    Ok(best)
}

/// Like [`search_at_distance`] but a zero rate is an error.
pub fn optimize_at_distance(
    config: &ProtocolConfig,
    space: &SearchSpace,
    distance_km: f64,
    system: &SystemParams,
    opts: &ModelOptions,
    fluctuation: Option<&FluctuationParams>,
) -> Result<Evaluation> {
    let best = search_at_distance(config, space, distance_km, system, opts, fluctuation)?;
    if best.feasible() {
        Ok(best)
    } else {
        Err(Error::NoFeasibleConfig { distance_km })
    }
}

/// Evaluates every distance of the spec; per-distance failures are recorded, not raised.
pub fn sweep(
    spec: &SweepSpec,
    system: &SystemParams,
    opts: &ModelOptions,
) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    system.validate()?;
    opts.validate()?;
    Ok(spec
        .distances
        .par_iter()
        .map(|&distance_km| {
            match search_at_distance(
                &spec.config,
                &spec.search,
                distance_km,
                system,
                opts,
                spec.fluctuation.as_ref(),
            ) {
                Ok(e) => SweepPoint {
                    distance_km,
                    feasible: e.feasible(),
                    error: (!e.feasible())
                        .then(|| Error::NoFeasibleConfig { distance_km }.to_string()),
                    evaluation: Some(e),
                },
                Err(e) => SweepPoint {
                    distance_km,
                    evaluation: None,
                    feasible: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
