//! Shorthand coefficients for the post-loss photon-number weights.
//!
//! After a channel of transmittance t every family is a combination of two
//! geometric sequences, x^n/(1+x)^{n+1} and u^n/z^{n+1}, with x = mu*t,
//! u = x(1-eta) and z = 1 + x + mu*eta - x*eta. Summing them against the
//! relay click probability gives the closed forms used by the relay model.

use serde::{Deserialize, Serialize};

use crate::pnd::SourceSetting;

/// Which photon-number distribution an event class draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    /// Heralded (post-selected) distribution, used by the active protocols.
    Heralded,
    Triggered,
    NonTriggered,
}

impl EventClass {
    /// Weight of n photons *before* loss, as printed for the class.
    pub fn prob(&self, src: &SourceSetting, n: usize) -> f64 {
        match self {
            EventClass::Heralded => src.heralded_prob(n),
            EventClass::Triggered => src.triggered_prob(n),
            EventClass::NonTriggered => src.non_triggered_prob(n),
        }
    }

    /// Same as [`EventClass::prob`] but keeps the negative non-triggered tail.
    pub fn prob_raw(&self, src: &SourceSetting, n: usize) -> f64 {
        match self {
            EventClass::NonTriggered => src.non_triggered_prob_raw(n),
            _ => self.prob(src, n),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EventClass::Heralded => "heralded",
            EventClass::Triggered => "triggered",
            EventClass::NonTriggered => "non_triggered",
        }
    }
}

/// Coefficients of one arm after a channel of transmittance `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub class: EventClass,
    pub x: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    /// Post-loss vacuum weight.
    pub a0: f64,
    /// Factor in front of the geometric brackets (P^cor or P^cor/P^post).
    pub prefactor: f64,
    /// Bracket of the photon sum: sum_{n>=1} a_n D_n = prefactor * c1.
    pub c1: f64,
    /// Trailing dark-count constant of the printed closed form.
    pub c2_printed: f64,
    d: f64,
}

impl CoefficientSet {
    pub fn new(src: &SourceSetting, class: EventClass, t: f64, eta_d: f64, p_d: f64) -> Self {
        let mu = src.mu;
        let eta = src.eta_trigger;
        let d = src.dark;
        let p_cor = src.p_cor;
        let x = mu * t;
        let z = 1.0 + x + mu * eta - x * eta;
        let u = x * (1.0 - eta);
        let v = x * (1.0 - eta_d);
        let w = u * (1.0 - eta_d);

        let x_part = x / (1.0 + x) - (1.0 - p_d) * v / ((1.0 + x) * (1.0 + x * eta_d));
        let u_part = u / (z * (z - u)) - (1.0 - p_d) * w / (z * (z - w));
        let (a0, prefactor, c1, c2_printed) = match class {
            EventClass::Heralded | EventClass::Triggered => {
                // (1+d)/(1+x) - 1/z without the cancellation at small mu.
                let f0 = (eta * (mu - x) + d * z) / ((1.0 + x) * z);
                let c2 = p_d / (2.0 * z) - (1.0 + d) * p_d / (2.0 * (1.0 + x));
                let c1 = (1.0 + d) * x_part - u_part;
                if class == EventClass::Heralded {
                    let post = src.post_selection_prob();
                    let pref = if post > 0.0 { p_cor / post } else { 0.0 };
                    (1.0 - p_cor + pref * f0, pref, c1, c2)
                } else {
                    ((1.0 - p_cor) / 2.0 + p_cor * f0, p_cor, c1, c2)
                }
            }
            EventClass::NonTriggered => {
                let a0 = (1.0 - p_cor) / 2.0 + p_cor * (1.0 / z - d / (1.0 + x));
                let c2 = d * p_d / (2.0 * (1.0 + x)) - p_d / (2.0 * z);
                (a0, p_cor, u_part - d * x_part, c2)
            }
        };
        Self {
            class,
            x,
            z,
            u,
            v,
            w,
            a0,
            prefactor,
            c1,
            c2_printed,
            d,
        }
    }

    /// Post-loss weight a_n from the geometric decomposition.
    pub fn weight(&self, n: usize) -> f64 {
        if n == 0 {
            return self.a0;
        }
        let g_x = geometric(self.x, 1.0 + self.x, n);
        let g_u = geometric(self.u, self.z, n);
        match self.class {
            EventClass::NonTriggered => self.prefactor * (g_u - self.d * g_x),
            _ => self.prefactor * ((1.0 + self.d) * g_x - g_u),
        }
    }

    /// sum_{n>=1} a_n D_n.
    pub fn photon_sum(&self) -> f64 {
        self.prefactor * self.c1
    }
}

/// r^n / s^{n+1}.
fn geometric(r: f64, s: f64, n: usize) -> f64 {
    (r / s).powi(n as i32) / s
}
