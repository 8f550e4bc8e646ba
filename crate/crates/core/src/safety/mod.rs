//! Control barrier functions and the force filter.

mod barrier;
mod qp;

pub use barrier::{barrier_eval, BarrierEval, BarrierSpec, CorridorPiece};
pub use qp::{kkt_residual, solve_filter_qp, CbfRow, ForceBox, QpProblem, QpSolution};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::algebra::{DualQuaternion, DualVector, Quaternion};
use crate::dynamics::{reference_twist_in_body, DualInertia, DualWrench, RefSample, TrackingError};
use crate::error::{Error, Result};

/// Coefficients of `λ² + a1 λ + a2`, required to have real negative roots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbfPoles {
    pub a1: f64,
    pub a2: f64,
}

impl CbfPoles {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && a1 * a1 >= 4.0 * a2) {
            return Err(Error::Domain(format!("poles need a1 > 0, a2 > 0 and a1² ≥ 4 a2, got a1={a1}, a2={a2}")));
        }
        Ok(Self { a1, a2 })
    }
}

impl Default for CbfPoles {
    fn default() -> Self {
        Self { a1: 2.0, a2: 1.0 }
    }
}

/// Relative-degree-2 constraint `g·u ≥ rhs ⇔ ḧ + a1 ḣ + a2 h ≥ 0`, with
/// `r̈ = u/m + drift`.
pub fn cbf_constraint(
    spec: &BarrierSpec,
    poles: &CbfPoles,
    r: &Vector3<f64>,
    v: &Vector3<f64>,
    mass: f64,
    drift: &Vector3<f64>,
) -> Result<(CbfRow, BarrierEval)> {
    let e = barrier_eval(spec, r)?;
    let hdot = e.grad.dot(v);
    let curv = v.dot(&(e.hess * v));
    let row = CbfRow { g: e.grad / mass, rhs: -poles.a1 * hdot - poles.a2 * e.h - curv - e.grad.dot(drift) };
    Ok((row, e))
}

/// Position and velocity of the body in the barrier frame, which is taken to
/// be the inertial frame. There `r̈ = R f / m` with no drift term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome {
    pub force: Vector3<f64>,
    pub qp: QpSolution,
    pub h: Vec<f64>,
}

/// Filters an inertial-frame force `u0`.
pub fn filter_force(
    u0: &Vector3<f64>,
    barriers: &[BarrierSpec],
    k: &Kinematics,
    poles: &CbfPoles,
    mass: f64,
    bounds: Option<ForceBox>,
) -> Result<FilterOutcome> {
    let mut rows = Vec::with_capacity(barriers.len());
    let mut h = Vec::with_capacity(barriers.len());
    for b in barriers {
        let (row, e) = cbf_constraint(b, poles, &k.position, &k.velocity, mass, &Vector3::zeros())?;
        rows.push(row);
        h.push(e.h);
    }
    let qp = solve_filter_qp(&QpProblem { u0: *u0, rows, bounds })?;
    Ok(FilterOutcome { force: qp.u, qp, h })
}

/// Inertial kinematics and attitude of the body from its tracking error.
pub fn body_kinematics(q_err: &DualQuaternion, w_err: &DualVector, reference: &RefSample) -> (Kinematics, Quaternion) {
    let pose = *reference.pose.dq() * *q_err;
    let twist = *w_err + reference_twist_in_body(q_err, &reference.twist);
    let q = pose.real;
    let rot = |v: &Vector3<f64>| (q * Quaternion::pure(*v) * q.conj()).vec;
    let position = (pose.dual * q.conj()).vec * 2.0;
    (Kinematics { position, velocity: rot(&twist.dual) }, q)
}

/// Raw-state version of [`safe_wrench`].
#[allow(clippy::too_many_arguments)]
pub fn safe_wrench_raw(
    q_err: &DualQuaternion,
    w_err: &DualVector,
    reference: &RefSample,
    nominal: &DualWrench,
    barriers: &[BarrierSpec],
    poles: &CbfPoles,
    mass: f64,
    bounds: Option<ForceBox>,
) -> Result<(DualWrench, FilterOutcome)> {
    let (k, q) = body_kinematics(q_err, w_err, reference);
    let u0 = (q * Quaternion::pure(nominal.force) * q.conj()).vec;
    let mut out = filter_force(&u0, barriers, &k, poles, mass, bounds)?;
    // Leave the nominal force bit-identical when no constraint was active.
    let force = if out.qp.active.is_empty() { nominal.force } else { (q.conj() * Quaternion::pure(out.force) * q).vec };
    out.force = force;
    Ok((DualWrench::new(force, nominal.torque), out))
}

/// Replaces the nominal force by the filtered one; torque passes through.
/// The box bounds the force expressed in the barrier frame.
pub fn safe_wrench(
    x: &TrackingError,
    reference: &RefSample,
    nominal: &DualWrench,
    barriers: &[BarrierSpec],
    poles: &CbfPoles,
    j: &DualInertia,
    bounds: Option<ForceBox>,
) -> Result<(DualWrench, FilterOutcome)> {
    safe_wrench_raw(x.q_err.dq(), &x.w_err, reference, nominal, barriers, poles, j.mass(), bounds)
}
