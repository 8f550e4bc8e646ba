use crate::algebra::{DualQuaternion, DualVector};
use crate::error::{Error, Result};

/// Stacked integrator state: raw pose error and twist error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrState {
    pub q: DualQuaternion,
    pub w: DualVector,
}

impl ErrState {
    /// `self + k·d`.
    pub fn axpy(&self, k: f64, d: &ErrState) -> ErrState {
        ErrState { q: self.q + d.q * k, w: self.w + d.w * k }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.w.is_finite()
    }
}

/// One classical RK4 step. `f(t, x)` returns the time derivative.
pub fn rk4_step<F>(x: &ErrState, t: f64, dt: f64, step: usize, mut f: F) -> Result<ErrState>
where
    F: FnMut(f64, &ErrState) -> Result<ErrState>,
{
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let h2 = 0.5 * dt;
    let k1 = f(t, x)?;
    let k2 = f(t + h2, &x.axpy(h2, &k1))?;
    let k3 = f(t + h2, &x.axpy(h2, &k2))?;
    let k4 = f(t + dt, &x.axpy(dt, &k3))?;
    if !(k1.is_finite() && k2.is_finite() && k3.is_finite() && k4.is_finite()) {
        return Err(Error::Diverged { step });
    }
    let sum = ErrState { q: k1.q + (k2.q + k3.q) * 2.0 + k4.q, w: k1.w + (k2.w + k3.w) * 2.0 + k4.w };
    let out = x.axpy(dt / 6.0, &sum);
    if !out.is_finite() {
        return Err(Error::Diverged { step });
    }
    Ok(out)
}

/// Deviation of a raw pose from the unit constraints: `max(|‖q_r‖² − 1|, |q_r·q_d|)`.
pub fn unit_drift(q: &DualQuaternion) -> f64 {
    (q.real.norm_squared() - 1.0).abs().max(q.real.dot(&q.dual).abs())
}
