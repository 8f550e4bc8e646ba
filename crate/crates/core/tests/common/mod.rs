#![allow(dead_code)]

use dqtrack::algebra::{pose_from_parts, DualQuaternion, DualVector, Quaternion, UnitDualQuaternion};
use dqtrack::dynamics::{DualInertia, TrackingError};
use dqtrack::safety::{CbfRow, ForceBox, QpProblem};
use dqtrack::sim::config::{MARCO_INERTIA, MARCO_MASS};
use dqtrack::sim::random_rotation;
use nalgebra::{Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec3<R: Rng>(rng: &mut R, s: f64) -> Vector3<f64> {
    Vector3::new(rng.gen_range(-s..=s), rng.gen_range(-s..=s), rng.gen_range(-s..=s))
}

pub fn quat<R: Rng>(rng: &mut R) -> Quaternion {
    Quaternion::from_parts(vec3(rng, 1.0), rng.gen_range(-1.0..=1.0))
}

pub fn dq<R: Rng>(rng: &mut R) -> DualQuaternion {
    DualQuaternion::new(quat(rng), quat(rng))
}

pub fn dv<R: Rng>(rng: &mut R, s: f64) -> DualVector {
    DualVector::new(vec3(rng, s), vec3(rng, s))
}

/// Random rotation composed with a translation in [−5, 5]³.
pub fn unit_dq<R: Rng>(rng: &mut R) -> UnitDualQuaternion {
    let q = random_rotation(rng);
    pose_from_parts(q.quaternion(), &vec3(rng, 5.0)).unwrap()
}

pub fn marco() -> DualInertia {
    DualInertia::from_rows(MARCO_MASS, &MARCO_INERTIA).unwrap()
}

pub fn state<R: Rng>(rng: &mut R, w: f64) -> TrackingError {
    TrackingError { q_err: unit_dq(rng), w_err: dv(rng, w) }
}

/// Left-multiplication matrix of `a` on the (vec, scalar) layout, written out
/// element by element.
pub fn left_matrix(a: &Quaternion) -> Matrix4<f64> {
    let (x, y, z, w) = (a.vec.x, a.vec.y, a.vec.z, a.scalar);
    Matrix4::new(
        w, -z, y, x, //
        z, w, -x, y, //
        -y, x, w, z, //
        -x, -y, -z, w,
    )
}

/// `[[L(a_r), 0], [L(a_d), L(a_r)]]` acting on (real, dual).
pub fn left_matrix8(a: &DualQuaternion) -> nalgebra::SMatrix<f64, 8, 8> {
    let mut m = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    let lr = left_matrix(&a.real);
    let ld = left_matrix(&a.dual);
    m.fixed_view_mut::<4, 4>(0, 0).copy_from(&lr);
    m.fixed_view_mut::<4, 4>(4, 0).copy_from(&ld);
    m.fixed_view_mut::<4, 4>(4, 4).copy_from(&lr);
    m
}

pub fn max_abs8(a: &DualQuaternion, b: &DualQuaternion) -> f64 {
    (a.as_vector8() - b.as_vector8()).amax()
}

/// Enumerates every active set of size ≤ 3, keeps primal- and dual-feasible
/// KKT points, and returns the best objective.
pub fn enumerate(p: &QpProblem) -> Option<(Vector3<f64>, f64)> {
    let cons = p.constraints();
    let n = cons.len();
    let mut best: Option<(Vector3<f64>, f64)> = None;
    let mut sets: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..n {
        sets.push(vec![i]);
        for j in i + 1..n {
            sets.push(vec![i, j]);
            for k in j + 1..n {
                sets.push(vec![i, j, k]);
            }
        }
    }
    for s in sets {
        let m = s.len();
        let a = nalgebra::DMatrix::from_fn(3, m, |r, c| cons[s[c]].0[r]);
        let b = nalgebra::DVector::from_fn(m, |r, _| cons[s[r]].1);
        let u0 = nalgebra::DVector::from_column_slice(p.u0.as_slice());
        let (u, lam) = if m == 0 {
            (p.u0, nalgebra::DVector::zeros(0))
        } else {
            let gram = a.transpose() * &a;
            let Some(inv) = gram.clone().try_inverse() else { continue };
            if gram.determinant().abs() < 1e-12 {
                continue;
            }
            let lam = inv * (&b - a.transpose() * &u0);
            let u = &u0 + &a * &lam;
            (Vector3::new(u[0], u[1], u[2]), lam)
        };
        if lam.iter().any(|&l| l < -1e-9) {
            continue;
        }
        if cons.iter().any(|(g, r)| g.dot(&u) < r - 1e-9 * (1.0 + r.abs())) {
            continue;
        }
        let obj = (u - p.u0).norm_squared();
        if best.is_none_or(|(_, o)| obj < o) {
            best = Some((u, obj));
        }
    }
    best
}

pub fn random_problem<R: Rng>(r: &mut R) -> QpProblem {
    let bounds = r.gen_bool(0.7).then(|| {
        let lo = -vec3(r, 3.0).abs() - Vector3::repeat(0.1);
        let hi = vec3(r, 3.0).abs() + Vector3::repeat(0.1);
        ForceBox::new(lo, hi).unwrap()
    });
    let rows = (0..r.gen_range(1..=2))
        .map(|_| {
            let g = vec3(r, 1.0);
            // Anchor the halfspace near a box point so most instances are feasible.
            let anchor = vec3(r, 2.0);
            CbfRow { g, rhs: g.dot(&anchor) + r.gen_range(-0.5..0.5) }
        })
        .collect();
    QpProblem { u0: vec3(r, 4.0), rows, bounds }
}
