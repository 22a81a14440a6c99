//! Secret key rates.

use serde::{Deserialize, Serialize};

use crate::decoy::{DecoyBounds, PassiveTerms};
use crate::error::{Error, Result};
use crate::relay::GainEntry;

/// Error-correction inefficiency used by the reference system.
pub const F_EC: f64 = 1.16;

/// H(x) in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// 1 - H(e), taken as 0 from e = 1/2 upward.
pub fn privacy_factor(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::DomainError(e));
    }
    if e >= 0.5 {
        return Ok(0.0);
    }
    Ok(1.0 - binary_entropy(e)?)
}

/// Q f H(E) of one Z-basis gain.
pub fn leakage(z: &GainEntry, f: f64) -> Result<f64> {
    Ok(z.gain * f * binary_entropy(z.qber)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Key from triggered events only.
    Triggered,
    /// Key from triggered and non-triggered events.
    Both,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Triggered => "triggered",
            Branch::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateComponents {
    /// Q_0 credit.
    pub vacuum: f64,
    /// Single-photon term after privacy amplification.
    pub single_photon: f64,
    /// Error-correction leakage.
    pub leakage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRate {
    pub branch: Branch,
    pub raw: f64,
    pub components: RateComponents,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// max(0, raw).
    pub rate: f64,
    pub raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    pub components: RateComponents,
    /// Both candidates of the two-branch protocols.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchRate>,
}

impl KeyRateResult {
    fn single(components: RateComponents) -> Self {
        let raw = components.vacuum + components.single_photon - components.leakage;
        Self {
            rate: raw.max(0.0),
            raw,
            branch: None,
            alpha_star: None,
            components,
            branches: Vec::new(),
        }
    }

    /// Picks the larger branch; ties go to the triggered one.
    fn best_of(t: BranchRate, b: BranchRate) -> Self {
        let win = if b.raw > t.raw { b } else { t };
        Self {
            rate: win.raw.max(0.0),
            raw: win.raw,
            branch: Some(win.branch),
            alpha_star: win.alpha_star,
            components: win.components,
            branches: vec![t, b],
        }
    }
}

/// R = Q_0 + Q11 (1 - H(e11)) - Q^Z f H(E^Z), floored at zero.
pub fn rate_unified(q0: f64, q11: f64, e11: f64, z: &GainEntry, f: f64) -> Result<KeyRateResult> {
    Ok(KeyRateResult::single(RateComponents {
        vacuum: q0,
        single_photon: q11 * privacy_factor(e11)?,
        leakage: leakage(z, f)?,
    }))
}

/// Infinite-decoy benchmark: exact single-photon quantities plus the vacuum credit.
pub fn rate_infinite(
    q0: f64,
    q11z: f64,
    e11x: f64,
    z: &GainEntry,
    f: f64,
) -> Result<KeyRateResult> {
    rate_unified(q0, q11z, e11x, z, f)
}

/// Active three-intensity rate at the signal intensity.
///
/// `q0` is the signal-intensity vacuum credit; pass 0 for the form without it.
pub fn rate_active3(
    bounds: &DecoyBounds,
    p1_signal: f64,
    q0: f64,
    z: &GainEntry,
    f: f64,
) -> Result<KeyRateResult> {
    rate_unified(
        q0,
        p1_signal * p1_signal * bounds.y11_lower,
        bounds.e11_upper,
        z,
        f,
    )
}

/// Inputs of the modified passive three-intensity rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedPassiveInputs {
    /// Triggered vacuum credit at the decoy intensity.
    pub q0_t: f64,
    /// Non-triggered vacuum credit at the signal intensity.
    pub q0_nt: f64,
    /// P^T_1(mu') and P^NT_1(mu').
    pub p1_t: f64,
    pub p1_nt: f64,
    pub z_t: GainEntry,
    pub z_nt: GainEntry,
}

pub fn rate_modified_passive3(
    bounds: &DecoyBounds,
    inp: &ModifiedPassiveInputs,
    f: f64,
) -> Result<KeyRateResult> {
    let pf = privacy_factor(bounds.e11_upper)?;
    let y = bounds.y11_lower;
    let (leak_t, leak_nt) = (leakage(&inp.z_t, f)?, leakage(&inp.z_nt, f)?);
    let branch = |branch, vacuum: f64, single_photon: f64, leakage: f64| BranchRate {
        branch,
        raw: vacuum + single_photon - leakage,
        components: RateComponents {
            vacuum,
            single_photon,
            leakage,
        },
        alpha_star: None,
    };
    let t = branch(
        Branch::Triggered,
        inp.q0_t,
        inp.p1_t * inp.p1_t * y * pf,
        leak_t,
    );
    let b = branch(
        Branch::Both,
        inp.q0_t + inp.q0_nt,
        (inp.p1_t * inp.p1_t + inp.p1_nt * inp.p1_nt) * y * pf,
        leak_t + leak_nt,
    );
    Ok(KeyRateResult::best_of(t, b))
}

/// Uniform grid on [0, alpha_max] with both endpoints.
pub fn alpha_grid(alpha_max: f64, points: usize) -> Vec<f64> {
    if alpha_max == 0.0 || points < 2 {
        return vec![0.0];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                alpha_max
            } else {
                alpha_max * i as f64 / last
            }
        })
        .collect()
}

/// Passive two-intensity rate, worst case over the vacuum ratio.
pub fn rate_passive2(
    terms: &PassiveTerms,
    z_t: &GainEntry,
    z_nt: &GainEntry,
    f: f64,
    grid_points: usize,
) -> Result<KeyRateResult> {
    let alpha_max = terms.alpha_max();
    if !(alpha_max >= 0.0) {
        return Err(Error::EmptyAlphaDomain);
    }
    let (leak_t, leak_nt) = (leakage(z_t, f)?, leakage(z_nt, f)?);

    // (objective, alpha, vacuum part, single-photon part) minimizing each branch.
    let mut best_t: Option<(f64, f64, f64, f64)> = None;
    let mut best_b: Option<(f64, f64, f64, f64)> = None;
    for alpha in alpha_grid(alpha_max, grid_points) {
        let xi = terms.xi(alpha);
        let photon = if xi > 0.0 {
            xi * privacy_factor(terms.eps(alpha).clamp(0.0, 1.0))?
        } else {
            0.0
        };
        let cand_t = (
            terms.r00 * alpha + terms.r11 * photon,
            alpha,
            terms.r00 * alpha,
            terms.r11 * photon,
        );
        let cand_b = (
            (1.0 + terms.r00) * alpha + (1.0 + terms.r11) * photon,
            alpha,
            (1.0 + terms.r00) * alpha,
            (1.0 + terms.r11) * photon,
        );
        if best_t.is_none_or(|b| cand_t.0 < b.0) {
            best_t = Some(cand_t);
        }
        if best_b.is_none_or(|b| cand_b.0 < b.0) {
            best_b = Some(cand_b);
        }
    }
    let mk = |branch, best: (f64, f64, f64, f64), leakage: f64| {
        let components = RateComponents {
            vacuum: terms.q_nt * best.2,
            single_photon: terms.q_nt * best.3,
            leakage,
        };
        BranchRate {
            branch,
            raw: terms.q_nt * best.0 - leakage,
            components,
            alpha_star: Some(best.1),
        }
    };
    let t = mk(Branch::Triggered, best_t.expect("grid is nonempty"), leak_t);
    let b = mk(
        Branch::Both,
        best_b.expect("grid is nonempty"),
        leak_t + leak_nt,
    );
    Ok(KeyRateResult::best_of(t, b))
}
