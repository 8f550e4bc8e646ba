//! Quaternion and dual quaternion algebra.
//!
//! Quaternions are stored as `(vec, scalar)` and multiply with the Hamilton
//! convention. Dual quaternions are `real + ε dual` with `ε² = 0`. Whenever a
//! dual quaternion is flattened to an 8-vector the layout is
//! `(real.vec, real.scalar, dual.vec, dual.scalar)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the unit-norm and orthogonality invariants.
pub const UNIT_TOL: f64 = 1e-9;

/// Below this real-part norm a pose cannot be renormalized.
pub const DEGENERATE_NORM: f64 = 1e-9;

pub type Vector8 = SVector<f64, 8>;

// ── Quaternion ──────────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub vec: Vector3<f64>,
    pub scalar: f64,
}

impl Quaternion {
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { vec: Vector3::new(x, y, z), scalar: w }
    }

    pub fn from_parts(vec: Vector3<f64>, scalar: f64) -> Self {
        Self { vec, scalar }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Pure quaternion `(v, 0)`.
    pub fn pure(v: Vector3<f64>) -> Self {
        Self { vec: v, scalar: 0.0 }
    }

    pub fn conj(&self) -> Self {
        Self { vec: -self.vec, scalar: self.scalar }
    }

    /// Scalar value of the quaternion dot product `a·b = (0, a4 b4 + ā·b̄)`.
    pub fn dot(&self, b: &Self) -> f64 {
        self.scalar * b.scalar + self.vec.dot(&b.vec)
    }

    /// `a × b = (b4 ā + a4 b̄ + ā × b̄, 0)`, i.e. the vector part of `ab`.
    pub fn cross(&self, b: &Self) -> Self {
        Self::pure(b.scalar * self.vec + self.scalar * b.vec + self.vec.cross(&b.vec))
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `(0, scalar)`.
    pub fn sc(&self) -> Self {
        Self { vec: Vector3::zeros(), scalar: self.scalar }
    }

    /// `(vec, 0)`.
    pub fn vec_part(&self) -> Self {
        Self::pure(self.vec)
    }

    pub fn as_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.vec.x, self.vec.y, self.vec.z, self.scalar)
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// `M ⋆ q`: the 4×4 matrix acting on `(vec; scalar)`.
    pub fn star(m: &Matrix4<f64>, q: &Self) -> Self {
        Self::from_vector4(&(m * q.as_vector4()))
    }

    pub fn is_finite(&self) -> bool {
        self.vec.iter().all(|x| x.is_finite()) && self.scalar.is_finite()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, b: Quaternion) -> Quaternion {
        Quaternion {
            vec: self.scalar * b.vec + b.scalar * self.vec + self.vec.cross(&b.vec),
            scalar: self.scalar * b.scalar - self.vec.dot(&b.vec),
        }
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;

    fn mul(self, k: f64) -> Quaternion {
        Quaternion { vec: self.vec * k, scalar: self.scalar * k }
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, b: Quaternion) -> Quaternion {
        Quaternion { vec: self.vec + b.vec, scalar: self.scalar + b.scalar }
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, b: Quaternion) -> Quaternion {
        Quaternion { vec: self.vec - b.vec, scalar: self.scalar - b.scalar }
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion { vec: -self.vec, scalar: -self.scalar }
    }
}

// ── UnitQuaternion ──────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Quaternion", into = "Quaternion")]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub fn new(q: Quaternion) -> Result<Self> {
        let n2 = q.norm_squared();
        if (n2 - 1.0).abs() > UNIT_TOL || !n2.is_finite() {
            return Err(Error::NotUnit { deviation: n2 - 1.0 });
        }
        Ok(Self(q))
    }

    pub fn normalize(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !(n >= DEGENERATE_NORM) || !n.is_finite() {
            return Err(Error::DegeneratePose { norm: n });
        }
        Ok(Self(q * (1.0 / n)))
    }

    pub fn identity() -> Self {
        Self(Quaternion::identity())
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) {
            return Err(Error::Domain("rotation axis must be nonzero".into()));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self(Quaternion::from_parts(axis * (s / n), c)))
    }

    pub fn quaternion(&self) -> &Quaternion {
        &self.0
    }

    pub fn into_inner(self) -> Quaternion {
        self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    /// Rotate a vector: `vec(q (v,0) q*)`.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        (self.0 * Quaternion::pure(*v) * self.0.conj()).vec
    }
}

impl TryFrom<Quaternion> for UnitQuaternion {
    type Error = Error;

    fn try_from(q: Quaternion) -> Result<Self> {
        Self::new(q)
    }
}

impl From<UnitQuaternion> for Quaternion {
    fn from(q: UnitQuaternion) -> Quaternion {
        q.0
    }
}

// ── DualQuaternion ──────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DualQuaternion {
    pub real: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub fn new(real: Quaternion, dual: Quaternion) -> Self {
        Self { real, dual }
    }

    /// The multiplicative identity **1**.
    pub fn one() -> Self {
        Self::new(Quaternion::identity(), Quaternion::zero())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.real.conj(), self.dual.conj())
    }

    /// `âˢ = a_d + ε a_r`.
    pub fn swap(&self) -> Self {
        Self::new(self.dual, self.real)
    }

    /// Dual-number dot product `(a_r·b_r) + ε(a_r·b_d + a_d·b_r)`, as (real, dual).
    pub fn dot(&self, b: &Self) -> (f64, f64) {
        (self.real.dot(&b.real), self.real.dot(&b.dual) + self.dual.dot(&b.real))
    }

    /// Circle product `a_r·b_r + a_d·b_d`.
    pub fn circle(&self, b: &Self) -> f64 {
        self.real.dot(&b.real) + self.dual.dot(&b.dual)
    }

    /// `‖â‖² = â∘â`.
    pub fn norm_squared(&self) -> f64 {
        self.circle(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Dual norm squared `â â* = (a_r·a_r) + ε(2 a_r·a_d)`, as (real, dual).
    pub fn dual_norm_squared(&self) -> (f64, f64) {
        (self.real.norm_squared(), 2.0 * self.real.dot(&self.dual))
    }

    pub fn sc(&self) -> Self {
        Self::new(self.real.sc(), self.dual.sc())
    }

    pub fn vec_part(&self) -> Self {
        Self::new(self.real.vec_part(), self.dual.vec_part())
    }

    /// `â × b̂ = a_r×b_r + ε(a_d×b_r + a_r×b_d)`; both arguments must be dual vectors.
    pub fn try_cross(&self, b: &Self) -> Result<Self> {
        let a = DualVector::try_from_exact(self)?;
        let b = DualVector::try_from_exact(b)?;
        Ok(a.cross(&b).to_dq())
    }

    pub fn as_vector8(&self) -> Vector8 {
        let (r, d) = (&self.real, &self.dual);
        Vector8::from_column_slice(&[r.vec.x, r.vec.y, r.vec.z, r.scalar, d.vec.x, d.vec.y, d.vec.z, d.scalar])
    }

    pub fn from_vector8(v: &Vector8) -> Self {
        Self::new(Quaternion::new(v[0], v[1], v[2], v[3]), Quaternion::new(v[4], v[5], v[6], v[7]))
    }

    pub fn to_array(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out.copy_from_slice(self.as_vector8().as_slice());
        out
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        Self::from_vector8(&Vector8::from_column_slice(a))
    }

    pub fn is_finite(&self) -> bool {
        self.real.is_finite() && self.dual.is_finite()
    }
}

impl Mul for DualQuaternion {
    type Output = DualQuaternion;

    fn mul(self, b: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.real * b.real, self.real * b.dual + self.dual * b.real)
    }
}

impl Mul<f64> for DualQuaternion {
    type Output = DualQuaternion;

    fn mul(self, k: f64) -> DualQuaternion {
        DualQuaternion::new(self.real * k, self.dual * k)
    }
}

impl Add for DualQuaternion {
    type Output = DualQuaternion;

    fn add(self, b: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.real + b.real, self.dual + b.dual)
    }
}

impl AddAssign for DualQuaternion {
    fn add_assign(&mut self, b: DualQuaternion) {
        *self = *self + b;
    }
}

impl Sub for DualQuaternion {
    type Output = DualQuaternion;

    fn sub(self, b: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.real - b.real, self.dual - b.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = DualQuaternion;

    fn neg(self) -> DualQuaternion {
        DualQuaternion::new(-self.real, -self.dual)
    }
}

// ── UnitDualQuaternion ──────────────────────────────────────────────────────

/// Dual quaternion with `q̂ q̂* = 1`: unit real part orthogonal to the dual part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DualQuaternion", into = "DualQuaternion")]
pub struct UnitDualQuaternion(DualQuaternion);

impl UnitDualQuaternion {
    pub fn new(q: DualQuaternion) -> Result<Self> {
        let n2 = q.real.norm_squared();
        if !(n2 - 1.0).abs().le(&UNIT_TOL) {
            return Err(Error::NotUnit { deviation: n2 - 1.0 });
        }
        let ortho = q.real.dot(&q.dual);
        if !ortho.abs().le(&UNIT_TOL) {
            return Err(Error::NotUnit { deviation: ortho });
        }
        Ok(Self(q))
    }

    pub fn one() -> Self {
        Self(DualQuaternion::one())
    }

    /// Pose from attitude and body-frame position: `q + ε ½ q (r,0)`.
    pub fn from_rotation_translation(q: &UnitQuaternion, r_body: &Vector3<f64>) -> Self {
        let q = q.0;
        Self(DualQuaternion::new(q, q * Quaternion::pure(*r_body) * 0.5))
    }

    /// Attitude and body-frame position, `r = vec(2 q* q_d)`.
    pub fn to_parts(&self) -> (UnitQuaternion, Vector3<f64>) {
        let r = (self.0.real.conj() * self.0.dual).vec * 2.0;
        (UnitQuaternion(self.0.real), r)
    }

    pub fn rotation(&self) -> UnitQuaternion {
        UnitQuaternion(self.0.real)
    }

    pub fn translation_body(&self) -> Vector3<f64> {
        self.to_parts().1
    }

    pub fn dq(&self) -> &DualQuaternion {
        &self.0
    }

    pub fn into_inner(self) -> DualQuaternion {
        self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    /// Frame transport `q̂* â q̂` of a dual vector.
    pub fn transport(&self, a: &DualVector) -> DualVector {
        DualVector::project(&(self.0.conj() * a.to_dq() * self.0))
    }

    /// `q̂ â q̂*`.
    pub fn transport_inv(&self, a: &DualVector) -> DualVector {
        DualVector::project(&(self.0 * a.to_dq() * self.0.conj()))
    }

    /// `‖q̂ − 1‖²`.
    pub fn dist_to_one_squared(&self) -> f64 {
        (self.0 - DualQuaternion::one()).norm_squared()
    }
}

impl std::ops::Mul for UnitDualQuaternion {
    type Output = UnitDualQuaternion;

    fn mul(self, b: UnitDualQuaternion) -> UnitDualQuaternion {
        UnitDualQuaternion(self.0 * b.0)
    }
}

impl TryFrom<DualQuaternion> for UnitDualQuaternion {
    type Error = Error;

    fn try_from(q: DualQuaternion) -> Result<Self> {
        Self::new(q)
    }
}

impl From<UnitDualQuaternion> for DualQuaternion {
    fn from(q: UnitDualQuaternion) -> DualQuaternion {
        q.0
    }
}

/// Build a pose from an attitude quaternion and body-frame position.
pub fn pose_from_parts(q: &Quaternion, r_body: &Vector3<f64>) -> Result<UnitDualQuaternion> {
    let q = UnitQuaternion::new(*q)?;
    Ok(UnitDualQuaternion::from_rotation_translation(&q, r_body))
}

pub fn pose_to_parts(q: &UnitDualQuaternion) -> (UnitQuaternion, Vector3<f64>) {
    q.to_parts()
}

/// Scale the real part to unit norm and remove the dual component along it.
pub fn renormalize(q: &DualQuaternion) -> Result<UnitDualQuaternion> {
    let n = q.real.norm();
    if !(n >= DEGENERATE_NORM) || !n.is_finite() {
        return Err(Error::DegeneratePose { norm: n });
    }
    let inv = 1.0 / n;
    let real = q.real * inv;
    let dual = q.dual * inv;
    let dual = dual - real * real.dot(&dual);
    Ok(UnitDualQuaternion(DualQuaternion::new(real, dual)))
}

// ── DualVector ──────────────────────────────────────────────────────────────

/// Dual quaternion with both scalar parts identically zero, e.g. a twist
/// `ω + ε v` or a wrench.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DualVector {
    pub real: Vector3<f64>,
    pub dual: Vector3<f64>,
}

impl DualVector {
    pub fn new(real: Vector3<f64>, dual: Vector3<f64>) -> Self {
        Self { real, dual }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Drops the scalar parts (the `vec` operation).
    pub fn project(q: &DualQuaternion) -> Self {
        Self::new(q.real.vec, q.dual.vec)
    }

    /// Accepts only inputs whose scalar parts are exactly zero.
    pub fn try_from_exact(q: &DualQuaternion) -> Result<Self> {
        if q.real.scalar != 0.0 || q.dual.scalar != 0.0 {
            return Err(Error::ContractViolation(format!(
                "expected a dual vector, scalar parts are ({:e}, {:e})",
                q.real.scalar, q.dual.scalar
            )));
        }
        Ok(Self::project(q))
    }

    /// Accepts inputs whose scalar parts are within `tol` of zero, then zeroes them.
    pub fn try_from_tol(q: &DualQuaternion, tol: f64) -> Result<Self> {
        if q.real.scalar.abs() > tol || q.dual.scalar.abs() > tol {
            return Err(Error::ContractViolation(format!(
                "scalar leakage ({:e}, {:e}) exceeds {tol:e}",
                q.real.scalar, q.dual.scalar
            )));
        }
        Ok(Self::project(q))
    }

    pub fn to_dq(&self) -> DualQuaternion {
        DualQuaternion::new(Quaternion::pure(self.real), Quaternion::pure(self.dual))
    }

    pub fn swap(&self) -> Self {
        Self::new(self.dual, self.real)
    }

    /// `a_r×b_r + ε(a_d×b_r + a_r×b_d)`.
    pub fn cross(&self, b: &Self) -> Self {
        Self::new(self.real.cross(&b.real), self.dual.cross(&b.real) + self.real.cross(&b.dual))
    }

    pub fn circle(&self, b: &Self) -> f64 {
        self.real.dot(&b.real) + self.dual.dot(&b.dual)
    }

    pub fn norm_squared(&self) -> f64 {
        self.circle(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.real.x, self.real.y, self.real.z, self.dual.x, self.dual.y, self.dual.z]
    }

    pub fn from_array(a: &[f64; 6]) -> Self {
        Self::new(Vector3::new(a[0], a[1], a[2]), Vector3::new(a[3], a[4], a[5]))
    }

    pub fn is_finite(&self) -> bool {
        self.real.iter().chain(self.dual.iter()).all(|x| x.is_finite())
    }
}

impl Add for DualVector {
    type Output = DualVector;

    fn add(self, b: DualVector) -> DualVector {
        DualVector::new(self.real + b.real, self.dual + b.dual)
    }
}

impl Sub for DualVector {
    type Output = DualVector;

    fn sub(self, b: DualVector) -> DualVector {
        DualVector::new(self.real - b.real, self.dual - b.dual)
    }
}

impl Neg for DualVector {
    type Output = DualVector;

    fn neg(self) -> DualVector {
        DualVector::new(-self.real, -self.dual)
    }
}

impl Mul<f64> for DualVector {
    type Output = DualVector;

    fn mul(self, k: f64) -> DualVector {
        DualVector::new(self.real * k, self.dual * k)
    }
}

// ── Matrix8 ─────────────────────────────────────────────────────────────────

/// 8×8 matrix acting on dual quaternions blockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix8(pub SMatrix<f64, 8, 8>);

impl Matrix8 {
    pub fn identity() -> Self {
        Self(SMatrix::identity())
    }

    pub fn from_blocks(m11: &Matrix4<f64>, m12: &Matrix4<f64>, m21: &Matrix4<f64>, m22: &Matrix4<f64>) -> Self {
        let mut m = SMatrix::<f64, 8, 8>::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(m11);
        m.fixed_view_mut::<4, 4>(0, 4).copy_from(m12);
        m.fixed_view_mut::<4, 4>(4, 0).copy_from(m21);
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(m22);
        Self(m)
    }

    /// Block `(i, j)` with `i, j ∈ {0, 1}`.
    pub fn block(&self, i: usize, j: usize) -> Matrix4<f64> {
        self.0.fixed_view::<4, 4>(4 * i, 4 * j).into_owned()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `M ⋆ q̂ = (M11⋆q_r + M12⋆q_d) + ε(M21⋆q_r + M22⋆q_d)`.
    pub fn star(&self, q: &DualQuaternion) -> DualQuaternion {
        DualQuaternion::from_vector8(&(self.0 * q.as_vector8()))
    }

    pub fn try_inverse(&self) -> Option<Self> {
        self.0.try_inverse().map(Self)
    }
}

/// Block-diagonal 4×4 `diag(a, s)` used for inertia blocks.
pub(crate) fn block_diag4(a: &Matrix3<f64>, s: f64) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(a);
    m[(3, 3)] = s;
    m
}
