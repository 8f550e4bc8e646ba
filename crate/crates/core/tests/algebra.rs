mod common;

use common::*;
use dqtrack::algebra::{
    pose_from_parts, pose_to_parts, renormalize, DualQuaternion, DualVector, Matrix8, Quaternion, UnitQuaternion,
};
use dqtrack::Error;
use nalgebra::{SMatrix, Vector3};
use proptest::prelude::*;
use rand::Rng;

const N: usize = 10_000;

#[test]
fn quaternion_product_matches_matrix_oracle() {
    let mut r = rng(1);
    for _ in 0..N {
        let (a, b) = (quat(&mut r), quat(&mut r));
        let want = left_matrix(&a) * b.as_vector4();
        assert!(((a * b).as_vector4() - want).amax() < 1e-13);
    }
}

#[test]
fn quaternion_norm_is_multiplicative() {
    let mut r = rng(2);
    for _ in 0..N {
        let (a, b) = (quat(&mut r), quat(&mut r));
        let lhs = (a * b).norm();
        let rhs = a.norm() * b.norm();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }
}

#[test]
fn quaternion_table() {
    let mut r = rng(3);
    for _ in 0..N {
        let (a, b) = (quat(&mut r), quat(&mut r));
        assert_eq!(a.conj().conj(), a);
        // Dot: ½(a*b + b*a) = (0, a·b).
        let d = (a.conj() * b + b.conj() * a) * 0.5;
        assert!(d.vec.amax() < 1e-12 && (d.scalar - a.dot(&b)).abs() < 1e-12);
        // Cross: ½(ab − b*a*) = (b₄ā + a₄b̄ + ā×b̄, 0).
        let c = (a * b - b.conj() * a.conj()) * 0.5;
        assert!((c.as_vector4() - a.cross(&b).as_vector4()).amax() < 1e-12);
        assert_eq!(a.cross(&b).scalar, 0.0);
        // Norm: a a* = a* a = (0, ‖a‖²).
        for n in [a * a.conj(), a.conj() * a] {
            assert!(n.vec.amax() < 1e-12 && (n.scalar - a.norm_squared()).abs() < 1e-12);
        }
        assert_eq!(a.sc() + a.vec_part(), a);
    }
}

#[test]
fn dual_product_matches_matrix_oracle() {
    let mut r = rng(4);
    for _ in 0..N {
        let (a, b) = (dq(&mut r), dq(&mut r));
        let want = left_matrix8(&a) * b.as_vector8();
        assert!(((a * b).as_vector8() - want).amax() < 1e-13);
    }
}

#[test]
fn dual_table() {
    let mut r = rng(5);
    let one = DualQuaternion::one();
    for _ in 0..N {
        let (a, b) = (dq(&mut r), dq(&mut r));
        assert_eq!(one * a, a);
        assert_eq!(a.swap().swap(), a);
        // Dot: ½(a*b + b*a) = a_r·b_r + ε(a_d·b_r + a_r·b_d).
        let d = (a.conj() * b + b.conj() * a) * 0.5;
        let (dr, dd) = a.dot(&b);
        let want = DualQuaternion::new(Quaternion::new(0.0, 0.0, 0.0, dr), Quaternion::new(0.0, 0.0, 0.0, dd));
        assert!(max_abs8(&d, &want) < 1e-12);
        // Dual norm: a a* = a* a.
        let (nr, nd) = a.dual_norm_squared();
        let want = DualQuaternion::new(Quaternion::new(0.0, 0.0, 0.0, nr), Quaternion::new(0.0, 0.0, 0.0, nd));
        assert!(max_abs8(&(a * a.conj()), &want) < 1e-12);
        assert!(max_abs8(&(a.conj() * a), &want) < 1e-12);
        assert!((a.circle(&a) - a.norm_squared()).abs() < 1e-12 && a.circle(&a) >= 0.0);
        assert!((a.circle(&b) - (a.real.dot(&b.real) + a.dual.dot(&b.dual))).abs() < 1e-12);
        assert_eq!(a.sc() + a.vec_part(), a);
    }
}

#[test]
fn dual_cross_matches_definition() {
    let mut r = rng(6);
    for _ in 0..N {
        let (a, b) = (dv(&mut r, 1.0), dv(&mut r, 1.0));
        let (ad, bd) = (a.to_dq(), b.to_dq());
        let half = (ad * bd - bd.conj() * ad.conj()) * 0.5;
        assert!(max_abs8(&half, &a.cross(&b).to_dq()) < 1e-12);
        assert!(max_abs8(&ad.try_cross(&bd).unwrap(), &a.cross(&b).to_dq()) < 1e-15);
    }
}

#[test]
fn property_circle_of_product() {
    let mut r = rng(7);
    for _ in 0..N {
        let (a, b, c) = (dq(&mut r), dq(&mut r), dq(&mut r));
        let lhs = a.circle(&(b * c));
        let mid = b.swap().circle(&(a.swap() * c.conj()));
        let rhs = c.swap().circle(&(b.conj() * a.swap()));
        assert!((lhs - mid).abs() < 1e-12 && (lhs - rhs).abs() < 1e-12, "{lhs} {mid} {rhs}");
    }
}

#[test]
fn property_circle_of_cross() {
    let mut r = rng(8);
    for _ in 0..N {
        let (a, b, c) = (dv(&mut r, 1.0), dv(&mut r, 1.0), dv(&mut r, 1.0));
        let lhs = a.circle(&b.cross(&c));
        let mid = b.swap().circle(&c.cross(&a.swap()));
        let rhs = c.swap().circle(&a.swap().cross(&b));
        assert!((lhs - mid).abs() < 1e-12 && (lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn property_matrix_adjoint() {
    let mut r = rng(9);
    for _ in 0..N {
        let m = Matrix8(SMatrix::<f64, 8, 8>::from_fn(|_, _| r.gen_range(-1.0..=1.0)));
        let (a, b) = (dq(&mut r), dq(&mut r));
        let lhs = m.star(&a).circle(&b);
        let rhs = a.circle(&m.transpose().star(&b));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn property_cross_antisymmetric() {
    let mut r = rng(10);
    for _ in 0..N {
        let (a, b) = (dv(&mut r, 1.0), dv(&mut r, 1.0));
        let s = a.cross(&b) + b.cross(&a);
        assert!(s.norm() < 1e-12);
    }
}

#[test]
fn matrix_star_uses_blocks() {
    let mut r = rng(11);
    let blocks: Vec<_> = (0..4).map(|_| nalgebra::Matrix4::from_fn(|_, _| r.gen_range(-1.0..=1.0))).collect();
    let m = Matrix8::from_blocks(&blocks[0], &blocks[1], &blocks[2], &blocks[3]);
    let a = dq(&mut r);
    let got = m.star(&a);
    let real = Quaternion::star(&blocks[0], &a.real) + Quaternion::star(&blocks[1], &a.dual);
    let dual = Quaternion::star(&blocks[2], &a.real) + Quaternion::star(&blocks[3], &a.dual);
    assert!(max_abs8(&got, &DualQuaternion::new(real, dual)) < 1e-15);
    assert_eq!(m.block(1, 0), blocks[2]);
}

#[test]
fn cross_rejects_non_vectors() {
    let a = DualQuaternion::one();
    let b = DualVector::new(Vector3::x(), Vector3::y()).to_dq();
    assert!(matches!(a.try_cross(&b), Err(Error::ContractViolation(_))));
    assert!(matches!(DualVector::try_from_exact(&a), Err(Error::ContractViolation(_))));
}

#[test]
fn unit_dual_quaternions_compose_to_one() {
    let mut r = rng(12);
    for _ in 0..N {
        let q = unit_dq(&mut r);
        let p = *q.dq() * q.dq().conj();
        assert!(max_abs8(&p, &DualQuaternion::one()) < 1e-9);
    }
}

#[test]
fn pose_examples() {
    let one = pose_from_parts(&Quaternion::identity(), &Vector3::zeros()).unwrap();
    assert_eq!(*one.dq(), DualQuaternion::one());
    let p = pose_from_parts(&Quaternion::identity(), &Vector3::new(2.0, 0.0, 0.0)).unwrap();
    assert_eq!(p.dq().dual, Quaternion::new(1.0, 0.0, 0.0, 0.0));
    assert!(matches!(
        pose_from_parts(&Quaternion::new(0.0, 0.0, 0.0, 1.1), &Vector3::zeros()),
        Err(Error::NotUnit { .. })
    ));
}

#[test]
fn renormalize_examples() {
    let mut r = rng(13);
    let two = DualQuaternion::new(Quaternion::new(0.0, 0.0, 0.0, 2.0), Quaternion::zero());
    assert_eq!(*renormalize(&two).unwrap().dq(), DualQuaternion::one());
    assert!(matches!(renormalize(&DualQuaternion::zero()), Err(Error::DegeneratePose { .. })));
    for _ in 0..1000 {
        let q = unit_dq(&mut r);
        assert!(max_abs8(renormalize(q.dq()).unwrap().dq(), q.dq()) < 1e-15 * 8.0);
        let noisy = *q.dq() + DualQuaternion::new(quat(&mut r), quat(&mut r)) * 1e-6;
        let u = renormalize(&noisy).unwrap().into_inner();
        assert!((u.real.norm_squared() - 1.0).abs() < 1e-14);
        assert!(u.real.dot(&u.dual).abs() < 1e-14);
        assert!(max_abs8(&u, q.dq()) < 1e-4);
    }
}

proptest! {
    #[test]
    fn pose_round_trip(
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in -6.0f64..6.0,
        t in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let axis = Vector3::from(axis);
        prop_assume!(axis.norm() > 1e-3);
        let q = UnitQuaternion::from_axis_angle(&axis, angle).unwrap();
        let p = pose_from_parts(q.quaternion(), &Vector3::from(t)).unwrap();
        let (q2, t2) = pose_to_parts(&p);
        prop_assert!((q2.quaternion().as_vector4() - q.quaternion().as_vector4()).amax() < 1e-12);
        prop_assert!((t2 - Vector3::from(t)).amax() < 1e-12);
    }

    #[test]
    fn swap_and_conj_are_involutions(v in prop::array::uniform8(-10.0f64..10.0)) {
        let a = DualQuaternion::from_array(&v);
        prop_assert_eq!(a.swap().swap(), a);
        prop_assert_eq!(a.conj().conj(), a);
    }
}
