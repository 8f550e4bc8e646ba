mod common;

use common::*;
use dqtrack::algebra::{DualQuaternion, DualVector, UnitDualQuaternion, UnitQuaternion};
use dqtrack::controller::{feedback_wrench, Gains};
use dqtrack::dynamics::{
    attitude_reduction, disturbed_derivative, error_derivative, error_state, reference_twist_in_body, BodyState,
    Disturbance, DualWrench, FixedPose, ReferenceTrajectory, ScrewReference, TrackingError,
};
use dqtrack::Error;
use nalgebra::Vector3;
use rand::Rng;

fn screw() -> ScrewReference {
    ScrewReference {
        start: UnitDualQuaternion::from_rotation_translation(
            &UnitQuaternion::from_axis_angle(&Vector3::new(1.0, 2.0, 0.5), 0.7).unwrap(),
            &Vector3::new(0.3, -1.0, 2.0),
        ),
        axis: Vector3::new(0.2, -0.4, 1.0),
        spin: 0.8,
        lead: 0.5,
        rate: 0.3,
        amplitude: 0.4,
        freq: 1.3,
    }
}

#[test]
fn error_state_recovers_body_pose() {
    let mut r = rng(20);
    for _ in 0..1000 {
        let body = BodyState { pose: unit_dq(&mut r), twist: dv(&mut r, 1.0) };
        let s = screw().sample(r.gen_range(0.0..10.0));
        let x = error_state(&body, &s);
        assert!(max_abs8(&(*s.pose.dq() * *x.q_err.dq()), body.pose.dq()) < 1e-12);
        // Adding back the transported desired twist recovers the body twist.
        let back = x.w_err + reference_twist_in_body(x.q_err.dq(), &s.twist);
        assert!((back - body.twist).norm() < 1e-12);
    }
}

#[test]
fn regulation_error_is_body_state() {
    let mut r = rng(21);
    let body = BodyState { pose: unit_dq(&mut r), twist: dv(&mut r, 1.0) };
    let x = error_state(&body, &FixedPose(UnitDualQuaternion::one()).sample(3.0));
    assert_eq!(x.q_err, body.pose);
    assert_eq!(x.w_err, body.twist);
    let same =
        error_state(&BodyState { pose: body.pose, twist: DualVector::zero() }, &FixedPose(body.pose).sample(0.0));
    assert!(max_abs8(same.q_err.dq(), &DualQuaternion::one()) < 1e-15);
}

#[test]
fn transported_twist_is_a_dual_vector() {
    let mut r = rng(22);
    for _ in 0..10_000 {
        let q = unit_dq(&mut r);
        let a = dv(&mut r, 2.0);
        let s = q.dq().conj() * a.to_dq() * *q.dq();
        assert!(s.real.scalar.abs() < 1e-12 && s.dual.scalar.abs() < 1e-12);
    }
}

#[test]
fn screw_reference_is_self_consistent() {
    let s = screw();
    let h = 1e-5;
    for t in [0.0, 0.7, 3.1, 9.4] {
        let (a, b, m) = (s.sample(t - h), s.sample(t + h), s.sample(t));
        let q_dot = (*b.pose.dq() - *a.pose.dq()) * (0.5 / h);
        let want = *m.pose.dq() * m.twist.to_dq() * 0.5;
        assert!(max_abs8(&q_dot, &want) < 1e-8);
        let accel = (b.twist - a.twist) * (0.5 / h);
        assert!((accel - m.accel).norm() < 1e-8);
    }
}

/// Real-part dynamics on attitude-only states agree with the reduced model,
/// and all dual parts of the derivative vanish.
#[test]
fn attitude_reduction_matches_full_dynamics() {
    let mut r = rng(23);
    let j = marco();
    for _ in 0..1000 {
        let q = dqtrack::sim::random_rotation(&mut r);
        let x = TrackingError {
            q_err: UnitDualQuaternion::from_rotation_translation(&q, &Vector3::zeros()),
            w_err: DualVector::new(vec3(&mut r, 1.0), Vector3::zeros()),
        };
        let torque = vec3(&mut r, 0.1);
        let wd = DualVector::new(vec3(&mut r, 0.5), Vector3::zeros());
        let ad = DualVector::new(vec3(&mut r, 0.5), Vector3::zeros());
        let wd_b = reference_twist_in_body(x.q_err.dq(), &wd);
        let full = error_derivative(&x, &DualWrench::new(Vector3::zeros(), torque), &j, &wd_b, &ad);
        let red = attitude_reduction(&x, &torque, &j, &wd_b.real, &ad.real).unwrap();
        assert!((full.q_dot.real.as_vector4() - red.q_dot.as_vector4()).amax() < 1e-12);
        assert!((full.w_dot.real - red.omega_dot).amax() < 1e-12);
        assert!(full.q_dot.dual.norm() < 1e-12 && full.w_dot.dual.amax() < 1e-12);
    }
}

#[test]
fn attitude_reduction_rejects_translation() {
    let mut r = rng(24);
    let x = state(&mut r, 1.0);
    let z = Vector3::zeros();
    assert!(matches!(attitude_reduction(&x, &z, &marco(), &z, &z), Err(Error::Precondition(_))));
    let eq = attitude_reduction(&TrackingError::equilibrium(), &z, &marco(), &z, &z).unwrap();
    assert_eq!(eq.q_dot.norm(), 0.0);
    assert_eq!(eq.omega_dot, z);
}

#[test]
fn disturbance_enters_additively() {
    let mut r = rng(25);
    let j = marco();
    for _ in 0..1000 {
        let x = state(&mut r, 1.0);
        let w = DualWrench::from_dual_vector(&dv(&mut r, 1.0));
        let (tw, ac) = (dv(&mut r, 0.5), dv(&mut r, 0.5));
        let d = Disturbance { d1: dv(&mut r, 1e-2), d2: dv(&mut r, 1e-2) };
        let a = error_derivative(&x, &w, &j, &tw, &ac);
        assert_eq!(disturbed_derivative(&x, &w, &j, &tw, &ac, &Disturbance::zero()), a);
        let b = disturbed_derivative(&x, &w, &j, &tw, &ac, &d);
        assert!(max_abs8(&(b.q_dot - a.q_dot), &d.d1.to_dq()) < 1e-15);
        let dw = (b.w_dot - a.w_dot).swap();
        assert!((dw - j.inv_star_dv(&d.d2)).norm() < 1e-12);
    }
}

/// Along the closed loop `dV₀/dt = −kd ‖ω̂ˢ‖²`, evaluated from the analytic
/// derivative.
#[test]
fn lyapunov_rate_identity_pointwise() {
    let mut r = rng(26);
    let j = marco();
    let g = Gains::new(0.2, 0.3).unwrap();
    let s = screw();
    for _ in 0..10_000 {
        let x = state(&mut r, 1.0);
        let rs = s.sample(r.gen_range(0.0..20.0));
        let tw = reference_twist_in_body(x.q_err.dq(), &rs.twist);
        let f = feedback_wrench(&x, &j, &tw, &rs.accel, &g);
        let rate = error_derivative(&x, &f, &j, &tw, &rs.accel);
        let q = *x.q_err.dq();
        let d = (q - DualQuaternion::one()).norm_squared();
        let ws = x.w_err.swap();
        let v0_dot = g.kp * 2.0 * (q - DualQuaternion::one()).circle(&rate.q_dot) / (1.0 + d)
            + ws.circle(&j.star_dv(&rate.w_dot.swap()));
        let want = -g.kd * ws.norm_squared();
        assert!((v0_dot - want).abs() < 1e-10 * (1.0 + want.abs()), "{v0_dot} vs {want}");
    }
}
