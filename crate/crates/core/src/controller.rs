//! Feedback tracking laws.

use serde::{Deserialize, Serialize};

use crate::algebra::{DualQuaternion, DualVector};
use crate::dynamics::{reference_twist_in_body, DualInertia, DualWrench, TrackingError};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
}

impl Gains {
    pub fn new(kp: f64, kd: f64) -> Result<Self> {
        if !(kp > 0.0 && kp.is_finite()) || !(kd > 0.0 && kd.is_finite()) {
            return Err(Error::Domain(format!("gains must be positive, got kp={kp}, kd={kd}")));
        }
        Ok(Self { kp, kd })
    }
}

/// `P = q̂*(q̂ˢ − 1ˢ)`.
pub fn proportional_error(q: &DualQuaternion) -> DualQuaternion {
    q.conj() * (q.swap() - DualQuaternion::one().swap())
}

/// Damping plus feedforward part shared by both laws:
/// `−kd ω̂ˢ + J⋆(q̂* ω̂̇_D q̂)ˢ + ω̂_D × (J⋆ω̂_Dˢ)`.
fn damping_and_feedforward(
    q: &DualQuaternion,
    w: &DualVector,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    kd: f64,
) -> DualVector {
    let accel_b = reference_twist_in_body(q, ref_accel_d);
    w.swap() * (-kd) + j.star_dv(&accel_b.swap()) + ref_twist_b.cross(&j.star_dv(&ref_twist_b.swap()))
}

/// Proposed law on a raw pose. The proportional term keeps only the vector
/// parts so the wrench scalar slots stay zero.
pub fn feedback_wrench_raw(
    q: &DualQuaternion,
    w: &DualVector,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    g: &Gains,
) -> DualWrench {
    let p = DualVector::project(&proportional_error(q));
    let denom = 1.0 + (*q - DualQuaternion::one()).norm_squared();
    let f = p * (-g.kp / denom) + damping_and_feedforward(q, w, j, ref_twist_b, ref_accel_d, g.kd);
    DualWrench::from_dual_vector(&f)
}

pub fn feedback_wrench(
    x: &TrackingError,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    g: &Gains,
) -> DualWrench {
    feedback_wrench_raw(x.q_err.dq(), &x.w_err, j, ref_twist_b, ref_accel_d, g)
}

/// Asymptotic baseline law: same structure without the normalizing denominator.
pub fn baseline_wrench_raw(
    q: &DualQuaternion,
    w: &DualVector,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    g: &Gains,
) -> DualWrench {
    let p = DualVector::project(&proportional_error(q));
    let f = p * (-g.kp) + damping_and_feedforward(q, w, j, ref_twist_b, ref_accel_d, g.kd);
    DualWrench::from_dual_vector(&f)
}

pub fn baseline_wrench(
    x: &TrackingError,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    g: &Gains,
) -> DualWrench {
    baseline_wrench_raw(x.q_err.dq(), &x.w_err, j, ref_twist_b, ref_accel_d, g)
}
