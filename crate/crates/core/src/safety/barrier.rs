use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Barrier geometry. Positions are in the barrier frame, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSpec {
    /// Docking corridor: cissoid approach cone on `0 ≤ x ≤ r1`, a linking
    /// surface on `r1 < x ≤ r2`, and a keep-out sphere of radius `r3` elsewhere.
    Corridor { r1: f64, r2: f64, r3: f64, theta_deg: f64 },
    /// `h = n·r − offset`.
    HalfSpace { normal: [f64; 3], offset: f64 },
    /// `h = height − z`.
    Ceiling { height: f64 },
    /// `h = ‖r − center‖² − radius²`.
    SphereKeepout { center: [f64; 3], radius: f64 },
}

/// Value, gradient and Hessian of `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierEval {
    pub h: f64,
    pub grad: Vector3<f64>,
    pub hess: Matrix3<f64>,
}

/// Which corridor piece governs a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorridorPiece {
    Cissoid,
    Sphere,
    Link,
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BarrierSpec::Corridor { r1, r2, r3, theta_deg } => {
                if !(0.0 < r1 && r1 < r2 && r2 < r3) {
                    return Err(Error::Domain(format!("corridor needs 0 < r1 < r2 < r3, got {r1}, {r2}, {r3}")));
                }
                if !(theta_deg > 0.0 && theta_deg < 90.0) {
                    return Err(Error::Domain(format!("corridor half-angle must lie in (0, 90) deg, got {theta_deg}")));
                }
                if (PI * r1 / r2).sin() <= 0.0 {
                    return Err(Error::Domain("sin(pi r1 / r2) must be positive".into()));
                }
                Ok(())
            }
            BarrierSpec::HalfSpace { normal, .. } => {
                if Vector3::from(normal).norm() == 0.0 {
                    return Err(Error::Domain("half-space normal must be nonzero".into()));
                }
                Ok(())
            }
            BarrierSpec::Ceiling { height } if !height.is_finite() => {
                Err(Error::Domain("ceiling height must be finite".into()))
            }
            BarrierSpec::SphereKeepout { radius, .. } if !(radius > 0.0) => {
                Err(Error::Domain(format!("keep-out radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// `r* = (r3² − r1²(1 + tan²θ)) / (r1² sin(π r1/r2) tan²θ)`.
    pub fn r_star(&self) -> Option<f64> {
        match *self {
            BarrierSpec::Corridor { r1, r2, r3, theta_deg } => {
                let t2 = theta_deg.to_radians().tan().powi(2);
                Some((r3 * r3 - r1 * r1 * (1.0 + t2)) / (r1 * r1 * (PI * r1 / r2).sin() * t2))
            }
            _ => None,
        }
    }

    /// Piece selection for the corridor. `None` outside the domain `[−r3, r2]`.
    pub fn corridor_piece(&self, r: &Vector3<f64>) -> Option<CorridorPiece> {
        let BarrierSpec::Corridor { r1, r2, r3, .. } = *self else {
            return None;
        };
        let x = r.x;
        if !(x >= -r3 && x <= r2) {
            None
        } else if x > r1 {
            Some(CorridorPiece::Link)
        } else if x >= 0.0 && r.norm_squared() < r3 * r3 {
            Some(CorridorPiece::Cissoid)
        } else {
            Some(CorridorPiece::Sphere)
        }
    }
}

pub fn barrier_eval(spec: &BarrierSpec, r: &Vector3<f64>) -> Result<BarrierEval> {
    match *spec {
        BarrierSpec::Corridor { r1, r2, r3, theta_deg } => {
            let piece = spec.corridor_piece(r).ok_or_else(|| {
                Error::Domain(format!("x = {} lies outside the corridor domain [{}, {}]", r.x, -r3, r2))
            })?;
            let t2 = theta_deg.to_radians().tan().powi(2);
            let (x, y, z) = (r.x, r.y, r.z);
            let rho2 = y * y + z * z;
            Ok(match piece {
                CorridorPiece::Cissoid => {
                    let d = 2.0 * r1 - x;
                    let f = x.powi(3) * t2 / d;
                    let df = 2.0 * t2 * x * x * (3.0 * r1 - x) / (d * d);
                    let ddf = 2.0 * t2 * (12.0 * r1 * r1 * x - 6.0 * r1 * x * x + x.powi(3)) / d.powi(3);
                    BarrierEval {
                        h: f - rho2,
                        grad: Vector3::new(df, -2.0 * y, -2.0 * z),
                        hess: Matrix3::from_diagonal(&Vector3::new(ddf, -2.0, -2.0)),
                    }
                }
                CorridorPiece::Sphere => {
                    BarrierEval { h: r.norm_squared() - r3 * r3, grad: 2.0 * r, hess: Matrix3::identity() * 2.0 }
                }
                CorridorPiece::Link => {
                    let rs = spec.r_star().unwrap_or(0.0);
                    let k = PI / r2;
                    let (s, c) = (k * x).sin_cos();
                    let w = 1.0 + rs * s;
                    let ds = rs * k * c;
                    let dds = -rs * k * k * s;
                    let mut hess = Matrix3::zeros();
                    hess[(0, 0)] = 2.0 + dds * rho2;
                    hess[(0, 1)] = 2.0 * y * ds;
                    hess[(1, 0)] = hess[(0, 1)];
                    hess[(0, 2)] = 2.0 * z * ds;
                    hess[(2, 0)] = hess[(0, 2)];
                    hess[(1, 1)] = 2.0 * w;
                    hess[(2, 2)] = 2.0 * w;
                    BarrierEval {
                        h: x * x + rho2 * w - r3 * r3,
                        grad: Vector3::new(2.0 * x + ds * rho2, 2.0 * y * w, 2.0 * z * w),
                        hess,
                    }
                }
            })
        }
        BarrierSpec::HalfSpace { normal, offset } => {
            let n = Vector3::from(normal);
            Ok(BarrierEval { h: n.dot(r) - offset, grad: n, hess: Matrix3::zeros() })
        }
        BarrierSpec::Ceiling { height } => {
            Ok(BarrierEval { h: height - r.z, grad: -Vector3::z(), hess: Matrix3::zeros() })
        }
        BarrierSpec::SphereKeepout { center, radius } => {
            let d = r - Vector3::from(center);
            Ok(BarrierEval { h: d.norm_squared() - radius * radius, grad: 2.0 * d, hess: Matrix3::identity() * 2.0 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor() -> BarrierSpec {
        BarrierSpec::Corridor { r1: 2.0, r2: 4.0, r3: 5.0, theta_deg: 20.0 }
    }

    #[test]
    fn on_axis_cissoid() {
        let c = corridor();
        let x = 1.2f64;
        let t2 = 20f64.to_radians().tan().powi(2);
        let e = barrier_eval(&c, &Vector3::new(x, 0.0, 0.0)).unwrap();
        assert!((e.h - x.powi(3) * t2 / (4.0 - x)).abs() < 1e-15);
        assert!(e.h > 0.0);
    }

    #[test]
    fn sphere_boundary() {
        let e = barrier_eval(&corridor(), &Vector3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(e.h, 0.0);
    }

    #[test]
    fn out_of_domain() {
        assert!(barrier_eval(&corridor(), &Vector3::new(4.5, 0.0, 0.0)).is_err());
        assert!(barrier_eval(&corridor(), &Vector3::new(-5.5, 0.0, 0.0)).is_err());
    }

    #[test]
    fn zero_set_meets_at_r1() {
        // On the cissoid wall at x = r1 the link piece is zero as well.
        let c = corridor();
        let t2 = 20f64.to_radians().tan().powi(2);
        let rho = (4.0 * t2).sqrt();
        let inside = barrier_eval(&c, &Vector3::new(2.0, rho, 0.0)).unwrap();
        let beyond = barrier_eval(&c, &Vector3::new(2.0 + 1e-12, rho, 0.0)).unwrap();
        assert!(inside.h.abs() < 1e-12);
        assert!(beyond.h.abs() < 1e-9);
    }

    #[test]
    fn link_meets_sphere_at_r2() {
        let c = corridor();
        for &(y, z) in &[(0.0, 0.0), (1.0, 2.0), (-2.5, 0.3)] {
            let a = barrier_eval(&c, &Vector3::new(4.0, y, z)).unwrap();
            let sphere = 16.0 + y * y + z * z - 25.0;
            assert!((a.h - sphere).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(BarrierSpec::Corridor { r1: 3.0, r2: 2.0, r3: 5.0, theta_deg: 20.0 }.validate().is_err());
        assert!(BarrierSpec::SphereKeepout { center: [0.0; 3], radius: 0.0 }.validate().is_err());
        assert!(corridor().validate().is_ok());
    }
}
