//! Lyapunov functions, closed-form stability constants, and trajectory verdicts.

use serde::{Deserialize, Serialize};

use crate::algebra::{DualQuaternion, DualVector, UnitDualQuaternion};
use crate::controller::{proportional_error, Gains};
use crate::dynamics::{DualInertia, TrackingError};
use crate::error::{Error, Result};

/// Margin applied to the lower bound on `c`.
pub const C_MARGIN: f64 = 1.0001;
/// Factor applied to the upper bound on `beta`.
pub const BETA_FACTOR: f64 = 0.999;

// ── Lyapunov functions ──────────────────────────────────────────────────────

pub fn lyapunov_v0_raw(q: &DualQuaternion, w: &DualVector, j: &DualInertia, g: &Gains) -> f64 {
    let d = (*q - DualQuaternion::one()).norm_squared();
    let ws = w.swap();
    g.kp * d.ln_1p() + 0.5 * ws.circle(&j.star_dv(&ws))
}

/// `V₀ = kp ln(1 + ‖q̂ − 1‖²) + ½ ω̂ˢ∘(J⋆ω̂ˢ)`.
pub fn lyapunov_v0(x: &TrackingError, j: &DualInertia, g: &Gains) -> f64 {
    lyapunov_v0_raw(x.q_err.dq(), &x.w_err, j, g)
}

pub fn lyapunov_v_raw(q: &DualQuaternion, w: &DualVector, j: &DualInertia, g: &Gains, c: f64) -> f64 {
    let v0 = lyapunov_v0_raw(q, w, j, g);
    let cross = proportional_error(q).circle(&j.star_dv(&w.swap()).to_dq());
    c * (v0 / g.kp).exp_m1() + cross
}

/// `V = c[exp(V₀/kp) − 1] + q̂*(q̂ˢ − 1ˢ)∘(J⋆ω̂ˢ)`.
pub fn lyapunov_v(x: &TrackingError, j: &DualInertia, g: &Gains, c: f64) -> f64 {
    lyapunov_v_raw(x.q_err.dq(), &x.w_err, j, g, c)
}

/// `‖q̂*(q̂ˢ − 1ˢ)‖² − ‖q̂ − 1‖²/2`, nonnegative for unit `q̂`.
pub fn lemma_gap(q: &UnitDualQuaternion) -> f64 {
    proportional_error(q.dq()).norm_squared() - 0.5 * q.dist_to_one_squared()
}

// ── Envelope ────────────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEnvelope {
    pub r: f64,
    pub delta: f64,
    pub c: f64,
    pub k0: f64,
    pub beta: f64,
    pub alpha: f64,
    /// `ln m(R)`; `m(R)` itself overflows for stiff, heavy bodies.
    pub ln_m_env: f64,
    pub k1: f64,
    pub j_max: f64,
    pub j_min: f64,
}

impl StabilityEnvelope {
    /// `m(R)`, possibly `+inf`.
    pub fn m_env(&self) -> f64 {
        self.ln_m_env.exp()
    }

    /// Nominal decay rate of `V`.
    pub fn v_rate(&self, kd: f64) -> f64 {
        self.beta * kd / self.j_max
    }

    /// Decay rate of `V` with a disturbance active (half the nominal rate).
    pub fn v_rate_disturbed(&self, kd: f64) -> f64 {
        0.5 * self.v_rate(kd)
    }
}

/// Optional overrides for the two free constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOverrides {
    pub c: Option<f64>,
    pub beta: Option<f64>,
}

/// Lower bound on `c`.
pub fn c_lower_bound(r: f64, j: &DualInertia, g: &Gains, k0: f64) -> f64 {
    let jm = j.j_max();
    (4.0 * g.kp * k0 / g.kd).max(0.75 * jm * (1.0 + r).powi(2)).max(jm * g.kp / j.j_min())
}

/// Upper bound on `beta`.
pub fn beta_upper_bound(r: f64, j: &DualInertia, g: &Gains, c: f64) -> f64 {
    let a = c / (2.0 * g.kp);
    let b = g.kp / (2.0 * (1.0 + r) * g.kd * (1.5 * (1.0 + r).powi(2) + c / j.j_max()));
    a.min(b).min(1.0)
}

pub fn make_envelope(r: f64, j: &DualInertia, g: &Gains, delta: f64) -> Result<StabilityEnvelope> {
    make_envelope_with(r, j, g, delta, &EnvelopeOverrides::default())
}

pub fn make_envelope_with(
    r: f64,
    j: &DualInertia,
    g: &Gains,
    delta: f64,
    ov: &EnvelopeOverrides,
) -> Result<StabilityEnvelope> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("ball radius must be positive, got {r}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be nonnegative, got {delta}")));
    }
    let g = Gains::new(g.kp, g.kd)?;
    let (jm, jn) = (j.j_max(), j.j_min());
    let rp = 1.0 + r;

    let k0 = 2.25 * jm * rp + (1.5 * g.kd + 4.5 * jm * delta * rp).powi(2) * rp.powi(3) / g.kp;
    let c_min = c_lower_bound(r, j, &g, k0);
    let c = match ov.c {
        Some(c) if c >= c_min => c,
        Some(c) => return Err(Error::Domain(format!("c = {c} is below its lower bound {c_min}"))),
        None => C_MARGIN * c_min,
    };
    let beta_max = beta_upper_bound(r, j, &g, c);
    let beta = match ov.beta {
        Some(b) if b > 0.0 && b < beta_max => b,
        Some(b) => return Err(Error::Domain(format!("beta = {b} is outside (0, {beta_max})"))),
        None => BETA_FACTOR * beta_max,
    };
    let alpha = beta * g.kd / (2.0 * jm);
    let k1 = (c - 1.5 * (jm / 2.0) * rp * rp).min(c * jn / (2.0 * g.kp) - jm / 2.0);
    if !(k1 > 0.0) {
        return Err(Error::Domain(format!("k1 = {k1} is not positive")));
    }

    // m(R) = sqrt((1+R²) e^a − 1 + b) / (R √k1), evaluated in log space.
    let a = jm * r * r / (2.0 * g.kp);
    let b = 1.5f64.sqrt() * rp * (jm / 2.0) * r * r;
    let s = (1.0 + r * r).ln();
    let inner_ln = a + s + ((b - 1.0) * (-a - s).exp()).ln_1p();
    let ln_m_env = 0.5 * inner_ln - r.ln() - 0.5 * k1.ln();

    Ok(StabilityEnvelope { r, delta, c, k0, beta, alpha, ln_m_env, k1, j_max: jm, j_min: jn })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IssBound {
    pub psi: f64,
    pub d_m: f64,
    pub ball_radius: f64,
}

pub fn psi(r: f64, g: &Gains, beta: f64) -> f64 {
    let a = 4.0 * (1.0 + r).powi(2) * 3f64.sqrt() / (2f64.sqrt() * g.kp);
    let b = 2.0 * (1.0 + g.kp) / ((1.0 - beta) * g.kd);
    a.hypot(b)
}

pub fn make_iss_bound(env: &StabilityEnvelope, g: &Gains, d_m: f64) -> Result<IssBound> {
    if !(d_m >= 0.0) || !d_m.is_finite() {
        return Err(Error::Domain(format!("d_m must be nonnegative, got {d_m}")));
    }
    let psi = psi(env.r, g, env.beta);
    Ok(IssBound { psi, d_m, ball_radius: psi * d_m })
}

// ── Verdicts ────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// Smallest `bound − value` over the checked samples.
    pub margin: f64,
    pub first_violation: Option<usize>,
}

fn validate_series(times: &[f64], norms: &[f64]) -> Result<()> {
    if norms.is_empty() {
        return Err(Error::Domain("empty trajectory".into()));
    }
    if times.len() != norms.len() {
        return Err(Error::Domain(format!(
            "time and norm series differ in length ({} vs {})",
            times.len(),
            norms.len()
        )));
    }
    Ok(())
}

/// Checks `‖x(tᵢ)‖ ≤ m(R) e^{−α(tᵢ − t₀)} ‖x(t₀)‖` at every sample.
pub fn check_envelope(times: &[f64], norms: &[f64], env: &StabilityEnvelope) -> Result<Verdict> {
    validate_series(times, norms)?;
    let x0 = norms[0];
    if !(x0 <= env.r) {
        return Err(Error::Precondition(format!("initial norm {x0} lies outside the ball of radius {}", env.r)));
    }
    let t0 = times[0];
    let mut margin = f64::INFINITY;
    let mut first = None;
    for (i, (&t, &n)) in times.iter().zip(norms).enumerate() {
        let bound = if x0 == 0.0 { 0.0 } else { (env.ln_m_env - env.alpha * (t - t0) + x0.ln()).exp() };
        let m = bound - n;
        // NaN must count as a violation.
        if !(m >= 0.0) && first.is_none() {
            first = Some(i);
        }
        margin = margin.min(if m.is_nan() { f64::NEG_INFINITY } else { m });
    }
    Ok(Verdict { pass: first.is_none(), margin: margin.min(f64::MAX), first_violation: first })
}

/// Checks `‖x(t)‖ ≤ ψ d_m` over the trailing `settle_fraction` of the horizon.
pub fn check_iss(times: &[f64], norms: &[f64], bound: &IssBound, settle_fraction: f64) -> Result<Verdict> {
    validate_series(times, norms)?;
    if !(settle_fraction > 0.0 && settle_fraction <= 1.0) {
        return Err(Error::Domain(format!("settle fraction must lie in (0, 1], got {settle_fraction}")));
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let start = t1 - settle_fraction * (t1 - t0);
    let mut margin = f64::INFINITY;
    let mut first = None;
    for (i, (&t, &n)) in times.iter().zip(norms).enumerate() {
        if t < start {
            continue;
        }
        let m = bound.ball_radius - n;
        if !(m >= 0.0) && first.is_none() {
            first = Some(i);
        }
        margin = margin.min(if m.is_nan() { f64::NEG_INFINITY } else { m });
    }
    Ok(Verdict { pass: first.is_none(), margin, first_violation: first })
}
