//! Rigid-body tracking-error dynamics in dual quaternion form.
//!
//! Twists are `ω + ε v` (angular, linear), body frame. Wrenches are packed the
//! other way round, `(f,0) + ε(τ,0)`, which is why the dynamics work with
//! swapped velocities: `J ⋆ ω̂ˢ = m v + ε Ī ω`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    block_diag4, DualQuaternion, DualVector, Matrix8, Quaternion, UnitDualQuaternion, UnitQuaternion,
};
use crate::error::{Error, Result};

/// Tolerance on inertia-matrix asymmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

// ── DualInertia ─────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq)]
pub struct DualInertia {
    mass: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    j_max: f64,
    j_min: f64,
}

impl DualInertia {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        let asym = (inertia - inertia.transpose()).amax();
        if !(asym <= SYMMETRY_TOL * inertia.amax().max(1.0)) {
            return Err(Error::Domain(format!("inertia is not symmetric (max asymmetry {asym:e})")));
        }
        let eig = SymmetricEigen::new(inertia).eigenvalues;
        if !(eig.min() > 0.0) {
            return Err(Error::Domain(format!("inertia is not positive definite (min eigenvalue {:e})", eig.min())));
        }
        let inertia_inv = inertia.try_inverse().ok_or_else(|| Error::Domain("inertia is singular".into()))?;
        let mut j = Self { mass, inertia, inertia_inv, j_max: 0.0, j_min: 0.0 };
        let full = SymmetricEigen::new(j.matrix().0).eigenvalues;
        j.j_max = full.max();
        j.j_min = full.min();
        Ok(j)
    }

    pub fn from_rows(mass: f64, rows: &[[f64; 3]; 3]) -> Result<Self> {
        Self::new(mass, Matrix3::from_fn(|i, k| rows[i][k]))
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    /// Largest eigenvalue of the 8×8 matrix J.
    pub fn j_max(&self) -> f64 {
        self.j_max
    }

    /// Smallest eigenvalue of the 8×8 matrix J.
    pub fn j_min(&self) -> f64 {
        self.j_min
    }

    /// J = diag(m I₃, 1, Ī, 1).
    pub fn matrix(&self) -> Matrix8 {
        let z = nalgebra::Matrix4::zeros();
        Matrix8::from_blocks(
            &block_diag4(&(Matrix3::identity() * self.mass), 1.0),
            &z,
            &z,
            &block_diag4(&self.inertia, 1.0),
        )
    }

    pub fn star(&self, q: &DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(
            Quaternion::from_parts(q.real.vec * self.mass, q.real.scalar),
            Quaternion::from_parts(self.inertia * q.dual.vec, q.dual.scalar),
        )
    }

    pub fn inv_star(&self, q: &DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(
            Quaternion::from_parts(q.real.vec / self.mass, q.real.scalar),
            Quaternion::from_parts(self.inertia_inv * q.dual.vec, q.dual.scalar),
        )
    }

    /// `J ⋆ a` restricted to dual vectors.
    pub fn star_dv(&self, a: &DualVector) -> DualVector {
        DualVector::new(a.real * self.mass, self.inertia * a.dual)
    }

    pub fn inv_star_dv(&self, a: &DualVector) -> DualVector {
        DualVector::new(a.real / self.mass, self.inertia_inv * a.dual)
    }
}

// ── States ──────────────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub pose: UnitDualQuaternion,
    pub twist: DualVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingError {
    pub q_err: UnitDualQuaternion,
    pub w_err: DualVector,
}

impl TrackingError {
    pub fn equilibrium() -> Self {
        Self { q_err: UnitDualQuaternion::one(), w_err: DualVector::zero() }
    }

    /// `‖q̂ − 1‖² + ‖ω̂‖²`.
    pub fn norm_squared(&self) -> f64 {
        state_norm_squared(self.q_err.dq(), &self.w_err)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }
}

pub fn state_norm_squared(q: &DualQuaternion, w: &DualVector) -> f64 {
    (*q - DualQuaternion::one()).norm_squared() + w.norm_squared()
}

/// Force and torque in the body frame, packed as `(f,0) + ε(τ,0)`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DualWrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl DualWrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn as_dual_vector(&self) -> DualVector {
        DualVector::new(self.force, self.torque)
    }

    pub fn from_dual_vector(v: &DualVector) -> Self {
        Self::new(v.real, v.dual)
    }

    pub fn to_dq(&self) -> DualQuaternion {
        self.as_dual_vector().to_dq()
    }

    /// `‖f̂‖ = sqrt(|f|² + |τ|²)`.
    pub fn norm(&self) -> f64 {
        self.as_dual_vector().norm()
    }
}

/// Values of the two disturbance channels over one step.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    /// Added to the pose-error derivative.
    pub d1: DualVector,
    /// Added inside the bracket, in wrench layout (force-like real, torque-like dual).
    pub d2: DualVector,
}

impl Disturbance {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn max_norm(&self) -> f64 {
        self.d1.norm().max(self.d2.norm())
    }
}

/// Derivative of the error state. `w_dot` is unswapped (`ω̇ + ε v̇`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRate {
    pub q_dot: DualQuaternion,
    pub w_dot: DualVector,
}

// ── Reference trajectories ──────────────────────────────────────────────────

/// Desired pose, twist (D frame) and twist rate (D frame) at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefSample {
    pub pose: UnitDualQuaternion,
    pub twist: DualVector,
    pub accel: DualVector,
}

pub trait ReferenceTrajectory: Send + Sync {
    fn sample(&self, t: f64) -> RefSample;
}

/// Constant desired pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPose(pub UnitDualQuaternion);

impl ReferenceTrajectory for FixedPose {
    fn sample(&self, _t: f64) -> RefSample {
        RefSample { pose: self.0, twist: DualVector::zero(), accel: DualVector::zero() }
    }
}

/// Screw motion about a fixed body axis with coordinate
/// `φ(t) = rate·t + amplitude·sin(freq·t)`: rotation `spin·φ` about `axis`
/// and translation `lead·φ` along it, starting from `start`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScrewReference {
    pub start: UnitDualQuaternion,
    pub axis: Vector3<f64>,
    pub spin: f64,
    pub lead: f64,
    pub rate: f64,
    pub amplitude: f64,
    pub freq: f64,
}

impl ScrewReference {
    fn phi(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.freq * t).sin_cos();
        (
            self.rate * t + self.amplitude * s,
            self.rate + self.amplitude * self.freq * c,
            -self.amplitude * self.freq * self.freq * s,
        )
    }

    fn unit_twist(&self) -> DualVector {
        let u = self.axis.normalize();
        DualVector::new(u * self.spin, u * self.lead)
    }
}

impl ReferenceTrajectory for ScrewReference {
    fn sample(&self, t: f64) -> RefSample {
        let (phi, dphi, ddphi) = self.phi(t);
        let u = self.axis.normalize();
        let rot = UnitQuaternion::from_axis_angle(&u, self.spin * phi).unwrap_or_else(|_| UnitQuaternion::identity());
        let rel = UnitDualQuaternion::from_rotation_translation(&rot, &(u * (self.lead * phi)));
        let s = self.unit_twist();
        RefSample { pose: self.start * rel, twist: s * dphi, accel: s * ddphi }
    }
}

/// Supremum of the reference twist norm over `[0, horizon]`, sampled at
/// `n` points and inflated by 5%.
pub fn reference_twist_bound(r: &dyn ReferenceTrajectory, horizon: f64, n: usize) -> f64 {
    let n = n.max(2);
    let sup = (0..n).map(|i| r.sample(horizon * i as f64 / (n - 1) as f64).twist.norm()).fold(0.0, f64::max);
    1.05 * sup
}

// ── Operations ──────────────────────────────────────────────────────────────

/// `q̂_B/D = q̂*_D/I q̂_B/I`, `ω̂_B/D = ω̂_B/I − q̂*_B/D ω̂^D_D/I q̂_B/D`.
pub fn error_state(body: &BodyState, reference: &RefSample) -> TrackingError {
    let q_err = reference.pose.conj() * body.pose;
    let wd = q_err.transport(&reference.twist);
    TrackingError { q_err, w_err: body.twist - wd }
}

/// Twist of the desired frame expressed in B.
pub fn reference_twist_in_body(q_err: &DualQuaternion, twist_d: &DualVector) -> DualVector {
    DualVector::project(&(q_err.conj() * twist_d.to_dq() * *q_err))
}

/// Error dynamics on a raw (possibly slightly non-unit) pose. Used by the
/// integrator between renormalizations.
pub fn error_rate_raw(
    q: &DualQuaternion,
    w: &DualVector,
    wrench: &DualWrench,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    dist: Option<&Disturbance>,
) -> ErrorRate {
    let mut q_dot = *q * w.to_dq() * 0.5;
    let total = *w + *ref_twist_b;
    let accel_b = reference_twist_in_body(q, ref_accel_d);
    let mut bracket = wrench.as_dual_vector()
        - total.cross(&j.star_dv(&total.swap()))
        - j.star_dv(&accel_b.swap())
        - j.star_dv(&ref_twist_b.cross(w).swap());
    if let Some(d) = dist {
        q_dot += d.d1.to_dq();
        bracket = bracket + d.d2;
    }
    ErrorRate { q_dot, w_dot: j.inv_star_dv(&bracket).swap() }
}

pub fn error_derivative(
    x: &TrackingError,
    wrench: &DualWrench,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
) -> ErrorRate {
    error_rate_raw(x.q_err.dq(), &x.w_err, wrench, j, ref_twist_b, ref_accel_d, None)
}

pub fn disturbed_derivative(
    x: &TrackingError,
    wrench: &DualWrench,
    j: &DualInertia,
    ref_twist_b: &DualVector,
    ref_accel_d: &DualVector,
    dist: &Disturbance,
) -> ErrorRate {
    error_rate_raw(x.q_err.dq(), &x.w_err, wrench, j, ref_twist_b, ref_accel_d, Some(dist))
}

/// Attitude-only derivative `(q̇, ω̇)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeRate {
    pub q_dot: Quaternion,
    pub omega_dot: Vector3<f64>,
}

/// Reduced dynamics for states with no translational error.
pub fn attitude_reduction(
    x: &TrackingError,
    torque: &Vector3<f64>,
    j: &DualInertia,
    ref_omega_b: &Vector3<f64>,
    ref_alpha_d: &Vector3<f64>,
) -> Result<AttitudeRate> {
    let qd = &x.q_err.dq().dual;
    if qd.vec != Vector3::zeros() || qd.scalar != 0.0 || x.w_err.dual != Vector3::zeros() {
        return Err(Error::Precondition("attitude reduction needs zero dual parts".into()));
    }
    let q = x.q_err.dq().real;
    let w = x.w_err.real;
    let ib = j.inertia();
    let total = w + ref_omega_b;
    let alpha_b = (q.conj() * Quaternion::pure(*ref_alpha_d) * q).vec;
    let rhs = torque - total.cross(&(ib * total)) - ib * alpha_b - ib * ref_omega_b.cross(&w);
    Ok(AttitudeRate { q_dot: q * Quaternion::pure(w) * 0.5, omega_dot: j.inertia_inv * rhs })
}
