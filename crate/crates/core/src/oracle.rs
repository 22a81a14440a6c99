//! Brute-force reference for the relay closed forms.
//!
//! Weights come from the printed photon-number distributions pushed through an
//! explicit binomial loss sum. Click probabilities are evaluated as truncated
//! Fock series at each relative phase and averaged with a periodic trapezoid
//! rule. Nothing here reuses the geometric-series shorthands.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::pnd::{bernoulli_transform, SourceSetting, DEFAULT_N_MAX};
use crate::relay::{click_prob_photon, ClickProbabilities, EventClass, RelayParams};

/// Trapezoid nodes over the relative phase.
pub const DEFAULT_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOracle {
    pub n_max: usize,
    pub nodes: usize,
}

impl Default for SeriesOracle {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            nodes: DEFAULT_NODES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleClicks {
    pub clicks: ClickProbabilities,
    /// Largest |phase-averaged imaginary part| among the four detectors.
    pub max_imag: f64,
}

/// Total probability of a class before truncation.
pub fn class_mass(src: &SourceSetting, class: EventClass) -> f64 {
    let post = src.post_selection_prob();
    match class {
        EventClass::Heralded => 1.0,
        EventClass::Triggered => (1.0 - src.p_cor) / 2.0 + src.p_cor * post,
        EventClass::NonTriggered => (1.0 - src.p_cor) / 2.0 + src.p_cor * (1.0 - post),
    }
}

impl SeriesOracle {
    pub fn new(n_max: usize) -> Self {
        Self {
            n_max,
            ..Self::default()
        }
    }

    /// Printed weights for n = 0..=n_max, negative tail retained.
    pub fn source_weights(&self, src: &SourceSetting, class: EventClass) -> Vec<f64> {
        (0..=self.n_max).map(|n| class.prob_raw(src, n)).collect()
    }

    /// Mass beyond n_max.
    pub fn tail_bound(&self, src: &SourceSetting, class: EventClass) -> f64 {
        let kept: f64 = self.source_weights(src, class).iter().sum();
        (class_mass(src, class) - kept).abs()
    }

    /// Weights after a channel of transmittance `t`.
    pub fn lossy_weights(&self, src: &SourceSetting, class: EventClass, t: f64) -> Vec<f64> {
        bernoulli_transform(&self.source_weights(src, class), t)
    }

    pub fn vacuum_weights(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_max + 1];
        v[0] = 1.0;
        v
    }

    /// Exactly one photon per sender.
    pub fn single_photon_weights(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_max + 1];
        v[1] = 1.0;
        v
    }

    /// Phase-averaged click probabilities for arm weights `a`, `b` at the relay.
    ///
    /// `delta_phi` is the encoded phase difference (0 or pi).
    pub fn clicks(
        &self,
        a: &[f64],
        b: &[f64],
        relay: &RelayParams,
        delta_phi: f64,
    ) -> OracleClicks {
        let n_top = a.len().min(b.len());
        let dn: Vec<f64> = (0..n_top).map(|n| click_prob_photon(relay, n)).collect();
        let p_d = relay.p_dark;
        let half_a0 = (a[0] / 2.0).max(0.0).sqrt();
        let half_b0 = (b[0] / 2.0).max(0.0).sqrt();
        let vac_plus = (half_a0 + half_b0).powi(2) * p_d;
        let vac_minus = (half_a0 - half_b0).powi(2) * p_d;

        let mut sums = [0.0f64; 4];
        let mut imag = [0.0f64; 4];
        for k in 0..self.nodes {
            let theta = 2.0 * PI * k as f64 / self.nodes as f64;
            let mut val = [vac_plus, vac_minus, vac_plus, vac_minus];
            let mut im = [0.0; 4];
            // e^{i n theta} and e^{i n (theta + delta_phi)} by repeated rotation.
            let (s1, c1) = theta.sin_cos();
            let (s2, c2) = (theta + delta_phi).sin_cos();
            let (mut sr, mut cr) = (0.0, 1.0);
            let (mut ss, mut cs) = (0.0, 1.0);
            for n in 1..n_top {
                (sr, cr) = (sr * c1 + cr * s1, cr * c1 - sr * s1);
                (ss, cs) = (ss * c2 + cs * s2, cs * c2 - ss * s2);
                let mean = (a[n] + b[n]) / 2.0 * dn[n];
                let cross = (a[n] * b[n]).max(0.0).sqrt() * dn[n];
                val[0] += mean + cross * cr;
                val[1] += mean - cross * cr;
                val[2] += mean + cross * cs;
                val[3] += mean - cross * cs;
                im[0] += cross * sr;
                im[1] -= cross * sr;
                im[2] += cross * ss;
                im[3] -= cross * ss;
            }
            for i in 0..4 {
                sums[i] += val[i];
                imag[i] += im[i];
            }
        }
        let norm = self.nodes as f64;
        OracleClicks {
            clicks: ClickProbabilities {
                d_r0: sums[0] / norm,
                d_r1: sums[1] / norm,
                d_s0: sums[2] / norm,
                d_s1: sums[3] / norm,
            },
            max_imag: imag.iter().map(|v| (v / norm).abs()).fold(0.0, f64::max),
        }
    }

    /// Single-detector-pair click probability without interference.
    pub fn marginal_click(&self, a: &[f64], relay: &RelayParams) -> f64 {
        a.iter()
            .enumerate()
            .map(|(n, w)| w * click_prob_photon(relay, n))
            .sum()
    }

    /// Z-basis correct and erroneous coincidences for symmetric arms.
    ///
    /// `half` are the weights at t/2, `full` at t.
    pub fn z_basis(&self, half: &[f64], full: &[f64], relay: &RelayParams) -> (f64, f64) {
        let d = self.marginal_click(half, relay);
        let q_c = 2.0 * (1.0 - d) * (1.0 - d) * d * d;
        let err = self.clicks(full, full, relay, 0.0).clicks;
        let p_d = relay.p_dark;
        let q_e = 2.0 * p_d * (1.0 - p_d) * err.d_r0 * (1.0 - err.d_r1);
        (q_c, q_e)
    }
}
