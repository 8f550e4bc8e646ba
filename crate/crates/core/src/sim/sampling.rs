use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, StandardNormal};

use crate::algebra::{DualVector, Quaternion, UnitDualQuaternion, UnitQuaternion};
use crate::dynamics::TrackingError;
use crate::error::{Error, Result};

/// Haar-uniform rotation.
pub fn random_rotation<R: Rng>(rng: &mut R) -> UnitQuaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = UnitQuaternion::normalize(Quaternion::new(v[0], v[1], v[2], v[3])) {
            return q;
        }
    }
}

fn unit_sphere<R: Rng, const N: usize>(rng: &mut R) -> [f64; N] {
    loop {
        let g: [f64; N] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return g.map(|x| x / n);
        }
    }
}

/// Uniform point in the unit ball of dimension `N`.
fn unit_ball<R: Rng, const N: usize>(rng: &mut R) -> [f64; N] {
    let mut g: [f64; N] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = rng.gen::<f64>().powf(1.0 / N as f64);
    for x in g.iter_mut() {
        *x *= radius / n;
    }
    g
}

/// `n` states uniformly distributed in `‖q̂ − 1‖² + ‖ω̂‖² ≤ R²`, with the
/// rotation Haar-uniform and translation, angular and linear velocity
/// Lebesgue-uniform.
///
/// Since `‖q̂ − 1‖² = ‖q_r − 1‖² + ¼‖t‖²`, the remaining nine coordinates
/// `(t/2, ω, v)` lie in a 9-ball of radius `ρ = sqrt(R² − s)` with
/// `s = ‖q_r − 1‖² = 2(1 − q₄)`. Under Haar measure `s` has density
/// `∝ sqrt(s(1 − s/4))`, so its marginal inside the ball is
/// `∝ sqrt(s(1 − s/4)) (R² − s)^{9/2}`: a scaled Beta(3/2, 11/2) thinned by
/// `sqrt(1 − s/4)`.
pub fn sample_ball(r: f64, n: usize, seed: u64) -> Result<Vec<TrackingError>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("ball radius must be positive, got {r}")));
    }
    let beta = Beta::new(1.5, 5.5).expect("valid shape parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = r * r * rng.sample(beta);
        let thin = (1.0 - s / 4.0).max(0.0).sqrt();
        if rng.gen::<f64>() >= thin {
            continue;
        }
        let w = 1.0 - s / 2.0;
        let dir: [f64; 3] = unit_sphere(&mut rng);
        let q = Quaternion::from_parts(Vector3::from(dir) * (1.0 - w * w).max(0.0).sqrt(), w);
        let Ok(q) = UnitQuaternion::normalize(q) else { continue };
        let rho = (r * r - s).max(0.0).sqrt();
        let u: [f64; 9] = unit_ball(&mut rng);
        let t = Vector3::new(u[0], u[1], u[2]) * (2.0 * rho);
        let w = DualVector::new(Vector3::new(u[3], u[4], u[5]) * rho, Vector3::new(u[6], u[7], u[8]) * rho);
        let q_err = UnitDualQuaternion::from_rotation_translation(&q, &t);
        let x = TrackingError { q_err, w_err: w };
        // Rounding can push a boundary sample a hair outside.
        if x.norm_squared() <= r * r {
            out.push(x);
        }
    }
    Ok(out)
}

/// Per-component uniform draw in `[−bound, bound]`.
pub fn uniform_dual_vector<R: Rng>(rng: &mut R, bound: f64) -> DualVector {
    if bound == 0.0 {
        return DualVector::zero();
    }
    let a: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-bound..=bound));
    DualVector::from_array(&a)
}
