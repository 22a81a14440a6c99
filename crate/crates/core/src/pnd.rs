//! Photon-number statistics of a heralded SPDC arm.
//!
//! Each arm emits a thermal state of mean `mu` per mode. A threshold detector on
//! the idler mode splits the signal pulses into triggered and non-triggered
//! classes; the heralded distribution is the triggered class renormalized by the
//! post-selection probability. Losses act as a Bernoulli thinning of the photon
//! number.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Default truncation index for photon-number series.
pub const DEFAULT_N_MAX: usize = 80;

/// Physical parameters of one SPDC arm at one intensity setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSetting {
    /// Mean photon number per mode.
    pub mu: f64,
    /// Efficiency of the heralding detector.
    pub eta_trigger: f64,
    /// Dark count probability of the heralding detector.
    pub dark: f64,
    /// Pair correlation probability.
    pub p_cor: f64,
}

impl SourceSetting {
    pub fn new(mu: f64, eta_trigger: f64, dark: f64, p_cor: f64) -> Result<Self> {
        let s = Self {
            mu,
            eta_trigger,
            dark,
            p_cor,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
                reason: "must be finite and nonnegative",
            });
        }
        check_unit("eta_trigger", self.eta_trigger)?;
        check_unit("p_cor", self.p_cor)?;
        if !(self.dark.is_finite() && (0.0..1.0).contains(&self.dark)) {
            return Err(Error::InvalidParameter {
                name: "dark",
                value: self.dark,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(())
    }

    /// The same hardware with the pump switched off.
    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    /// Probability that the heralding detector fires.
    pub fn post_selection_prob(&self) -> f64 {
        let x = self.mu * self.eta_trigger;
        self.dark + x / (1.0 + x)
    }

    /// (1 - (1-eta)^n + d) / P^post, with the d -> 0 limit taken when P^post vanishes.
    fn herald_factor(&self, n: usize) -> f64 {
        let post = self.post_selection_prob();
        if post <= 0.0 {
            return 1.0;
        }
        (1.0 - (1.0 - self.eta_trigger).powi(n as i32) + self.dark) / post
    }

    /// Heralded photon-number distribution, normalized per trigger.
    pub fn heralded_prob(&self, n: usize) -> f64 {
        let post = self.post_selection_prob();
        if n == 0 {
            let dark_term = if post > 0.0 {
                self.dark * self.p_cor / ((1.0 + self.mu) * post)
            } else {
                self.p_cor / (1.0 + self.mu)
            };
            return 1.0 - self.p_cor + dark_term;
        }
        thermal_prob(self.mu, n) * self.herald_factor(n) * self.p_cor
    }

    /// Joint probability of emitting n photons and triggering.
    pub fn triggered_prob(&self, n: usize) -> f64 {
        if n == 0 {
            return (1.0 - self.p_cor) / 2.0 + self.p_cor * self.dark / (1.0 + self.mu);
        }
        let click = 1.0 - (1.0 - self.eta_trigger).powi(n as i32) + self.dark;
        thermal_prob(self.mu, n) * click * self.p_cor
    }

    /// Joint probability of emitting n photons without a trigger, as printed.
    ///
    /// Negative once (1-eta)^n < d.
    pub fn non_triggered_prob_raw(&self, n: usize) -> f64 {
        if n == 0 {
            return (1.0 - self.p_cor) / 2.0 + self.p_cor * (1.0 - self.dark) / (1.0 + self.mu);
        }
        let silent = (1.0 - self.eta_trigger).powi(n as i32) - self.dark;
        thermal_prob(self.mu, n) * silent * self.p_cor
    }

    /// Non-triggered probability with the negative tail clamped to zero.
    pub fn non_triggered_prob(&self, n: usize) -> f64 {
        self.non_triggered_prob_raw(n).max(0.0)
    }

    /// Largest n for which the printed non-triggered weight is positive.
    ///
    /// `None` when every n qualifies (no dark counts and eta < 1).
    pub fn non_triggered_validity_bound(&self) -> Option<usize> {
        let q = 1.0 - self.eta_trigger;
        let d = self.dark;
        if d <= 0.0 {
            return if q > 0.0 { None } else { Some(0) };
        }
        if q <= d {
            return Some(0);
        }
        let mut n = (d.ln() / q.ln()).floor().max(1.0) as usize;
        while q.powi(n as i32 + 1) > d {
            n += 1;
        }
        while n > 1 && q.powi(n as i32) <= d {
            n -= 1;
        }
        Some(n)
    }

    /// r_n = P^T_n / P^NT_n.
    pub fn trigger_ratio(&self, n: usize) -> Result<TriggerRatio> {
        let nt = self.non_triggered_prob_raw(n);
        if nt <= 0.0 {
            return Err(Error::DomainExceeded {
                n,
                bound: self.non_triggered_validity_bound().unwrap_or(0),
            });
        }
        Ok(TriggerRatio {
            n,
            r_n: self.triggered_prob(n) / nt,
        })
    }

    /// Whether r_0 < r_1; false when uncorrelated vacuum dominates both classes.
    pub fn zero_below_one(&self) -> Result<bool> {
        Ok(self.trigger_ratio(0)?.r_n < self.trigger_ratio(1)?.r_n)
    }
}

/// Ratio of triggered to non-triggered weight at one photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerRatio {
    pub n: usize,
    pub r_n: f64,
}

impl TriggerRatio {
    /// r_nm = r_n * r_m.
    pub fn pair(&self, other: &TriggerRatio) -> f64 {
        self.r_n * other.r_n
    }
}

/// r_min = min{r_12, r_21} for the two arms.
pub fn r_min(a: &SourceSetting, b: &SourceSetting) -> Result<f64> {
    let r12 = a.trigger_ratio(1)?.pair(&b.trigger_ratio(2)?);
    let r21 = a.trigger_ratio(2)?.pair(&b.trigger_ratio(1)?);
    Ok(r12.min(r21))
}

pub fn post_selection_prob(src: &SourceSetting) -> f64 {
    src.post_selection_prob()
}

pub fn heralded_prob(src: &SourceSetting, n: usize) -> f64 {
    src.heralded_prob(n)
}

pub fn triggered_prob(src: &SourceSetting, n: usize) -> f64 {
    src.triggered_prob(n)
}

pub fn non_triggered_prob(src: &SourceSetting, n: usize) -> f64 {
    src.non_triggered_prob(n)
}

pub fn trigger_ratio(src: &SourceSetting, n: usize) -> Result<TriggerRatio> {
    src.trigger_ratio(n)
}

/// Bose-Einstein distribution with the given mean.
pub fn thermal_prob(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (mean / (1.0 + mean)).powi(n as i32) / (1.0 + mean)
}

pub fn poisson_prob(mean: f64, n: usize) -> f64 {
    let mut p = (-mean).exp();
    for k in 1..=n {
        p *= mean / k as f64;
    }
    p
}

/// Family tag of a [`PhotonNumberDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Thermal,
    Heralded,
    Triggered,
    NonTriggered,
    Poisson,
    /// Bernoulli-thinned version of another distribution.
    Attenuated,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Thermal(f64),
    Poisson(f64),
    Heralded(SourceSetting),
    Triggered(SourceSetting),
    NonTriggered(SourceSetting),
    Attenuated {
        base: Box<PhotonNumberDistribution>,
        eta: f64,
    },
}

/// A photon-number distribution evaluator with a truncation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    kind: Kind,
    n_max: usize,
}

impl PhotonNumberDistribution {
    pub fn thermal(mean: f64) -> Self {
        Self::from_kind(Kind::Thermal(mean))
    }

    pub fn poisson(mean: f64) -> Self {
        Self::from_kind(Kind::Poisson(mean))
    }

    pub fn heralded(src: SourceSetting) -> Self {
        Self::from_kind(Kind::Heralded(src))
    }

    pub fn triggered(src: SourceSetting) -> Self {
        Self::from_kind(Kind::Triggered(src))
    }

    pub fn non_triggered(src: SourceSetting) -> Self {
        Self::from_kind(Kind::NonTriggered(src))
    }

    fn from_kind(kind: Kind) -> Self {
        Self {
            kind,
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        if let Kind::Attenuated { base, .. } = &mut self.kind {
            **base = base.as_ref().clone().with_n_max(n_max);
        }
        self
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Thermal(_) => Family::Thermal,
            Kind::Poisson(_) => Family::Poisson,
            Kind::Heralded(_) => Family::Heralded,
            Kind::Triggered(_) => Family::Triggered,
            Kind::NonTriggered(_) => Family::NonTriggered,
            Kind::Attenuated { .. } => Family::Attenuated,
        }
    }

    /// Largest n with a nonnegative printed weight, if the family has one.
    pub fn validity_bound(&self) -> Option<usize> {
        match &self.kind {
            Kind::NonTriggered(s) => s.non_triggered_validity_bound(),
            Kind::Attenuated { base, .. } => base.validity_bound(),
            _ => None,
        }
    }

    pub fn prob(&self, n: usize) -> f64 {
        match &self.kind {
            Kind::Thermal(m) => thermal_prob(*m, n),
            Kind::Poisson(m) => poisson_prob(*m, n),
            Kind::Heralded(s) => s.heralded_prob(n),
            Kind::Triggered(s) => s.triggered_prob(n),
            Kind::NonTriggered(s) => s.non_triggered_prob(n),
            Kind::Attenuated { base, eta } => {
                if n > self.n_max {
                    return 0.0;
                }
                let mut term = eta.powi(n as i32);
                let mut sum = 0.0;
                for m in 0..=(self.n_max - n) {
                    sum += term * base.prob(n + m);
                    term *= (n + m + 1) as f64 / (m + 1) as f64 * (1.0 - eta);
                }
                sum
            }
        }
    }

    /// Probabilities for n = 0..=n_max.
    pub fn to_vec(&self) -> Vec<f64> {
        (0..=self.n_max).map(|n| self.prob(n)).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.to_vec().iter().sum()
    }

    /// Pass the distribution through a channel of transmittance `eta`.
    pub fn loss_transform(&self, eta: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        let kind = match &self.kind {
            Kind::Thermal(m) => Kind::Thermal(m * eta),
            Kind::Poisson(m) => Kind::Poisson(m * eta),
            _ if eta == 1.0 => self.kind.clone(),
            _ => Kind::Attenuated {
                base: Box::new(self.clone()),
                eta,
            },
        };
        Ok(Self {
            kind,
            n_max: self.n_max,
        })
    }
}

/// Bernoulli thinning of an explicit weight vector (truncated at its length).
pub fn bernoulli_transform(weights: &[f64], eta: f64) -> Vec<f64> {
    let len = weights.len();
    (0..len)
        .map(|n| {
            let mut term = eta.powi(n as i32);
            let mut sum = 0.0;
            for m in 0..(len - n) {
                sum += term * weights[n + m];
                term *= (n + m + 1) as f64 / (m + 1) as f64 * (1.0 - eta);
            }
            sum
        })
        .collect()
}
