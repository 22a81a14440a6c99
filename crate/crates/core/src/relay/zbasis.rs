//! Z-basis gain: the two senders' pulses never interfere, so a coincidence is
//! either a correct pair of marginal clicks or a single arm's light fully
//! reaching one detector pair together with a dark count on the other.

use serde::{Deserialize, Serialize};

use super::{
    arm_coefficients, require_symmetric, symmetric_clicks, ChannelParams, ClosedFormVariant,
    CoefficientSet, EventClass, RelayParams, Side,
};
use crate::error::Result;
use crate::pnd::SourceSetting;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZBasisGain {
    /// Correct coincidences.
    pub q_c: f64,
    /// Erroneous coincidences.
    pub q_e: f64,
    pub q_z: f64,
    pub e_z: f64,
}

/// Z-basis gain and QBER for a symmetric setting.
pub fn z_basis_gain(
    src_a: &SourceSetting,
    src_b: &SourceSetting,
    channel: &ChannelParams,
    relay: &RelayParams,
    class: EventClass,
    variant: ClosedFormVariant,
) -> Result<ZBasisGain> {
    require_symmetric(src_a, src_b, channel)?;
    let t = channel.transmittance(Side::A);
    let p_d = relay.p_dark;

    let half = arm_coefficients(src_a, class, t, relay);
    let d_a = half.a0 * p_d + half.photon_sum();
    let d_b = d_a;
    let q_c = 2.0 * (1.0 - d_a) * (1.0 - d_b) * d_a * d_b;

    let full = CoefficientSet::new(src_a, class, t, relay.eta_d, p_d);
    let err = symmetric_clicks(&full, p_d, variant);
    let q_e = 2.0 * p_d * (1.0 - p_d) * err.d_r0 * (1.0 - err.d_r1);

    let q_z = q_c + q_e;
    let e_z = if q_z > 0.0 {
        (relay.e_misalign * q_c + (1.0 - relay.e_misalign) * q_e) / q_z
    } else {
        0.0
    };
    Ok(ZBasisGain { q_c, q_e, q_z, e_z })
}
