//! Projection of a nominal force onto `{u : g_i·u ≥ b_i} ∩ box`.
//!
//! Dual active-set method (Goldfarb–Idnani) specialised to an identity
//! Hessian. It starts from the unconstrained minimizer `u0`, so a feasible
//! nominal force is returned untouched.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack below which a constraint counts as satisfied.
const FEAS_TOL: f64 = 1e-12;

/// One half-space `g·u ≥ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbfRow {
    pub g: Vector3<f64>,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceBox {
    pub lower: Vector3<f64>,
    pub upper: Vector3<f64>,
}

impl ForceBox {
    pub fn symmetric(f_max: f64) -> Result<Self> {
        Self::new(Vector3::repeat(-f_max), Vector3::repeat(f_max))
    }

    pub fn new(lower: Vector3<f64>, upper: Vector3<f64>) -> Result<Self> {
        if !lower.iter().zip(upper.iter()).all(|(l, u)| l <= u) {
            return Err(Error::Domain("force box needs lower ≤ upper componentwise".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Box point maximizing `g·u`.
    pub fn maximizer(&self, g: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| if g[i] >= 0.0 { self.upper[i] } else { self.lower[i] })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpProblem {
    pub u0: Vector3<f64>,
    pub rows: Vec<CbfRow>,
    pub bounds: Option<ForceBox>,
}

impl QpProblem {
    /// All constraints as `(normal, rhs)`: CBF rows first, then box faces
    /// `u_i ≥ l_i` and `−u_i ≥ −h_i` for i = 0..3.
    pub fn constraints(&self) -> Vec<(Vector3<f64>, f64)> {
        let mut out: Vec<_> = self.rows.iter().map(|r| (r.g, r.rhs)).collect();
        if let Some(b) = &self.bounds {
            for i in 0..3 {
                let e = Vector3::ith(i, 1.0);
                out.push((e, b.lower[i]));
                out.push((-e, -b.upper[i]));
            }
        }
        out
    }

    /// Largest achievable `g·u − rhs` for each CBF row on its own, and the
    /// minimum across rows together with the box point attaining it.
    fn best_row_value(&self) -> (f64, Vector3<f64>) {
        let mut best = (f64::INFINITY, self.u0);
        for row in &self.rows {
            let (v, u) = match &self.bounds {
                Some(b) => {
                    let u = b.maximizer(&row.g);
                    (row.g.dot(&u) - row.rhs, u)
                }
                None if row.g.norm_squared() > 0.0 => (f64::INFINITY, self.u0),
                None => (-row.rhs, self.u0),
            };
            if v < best.0 {
                best = (v, u);
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub u: Vector3<f64>,
    /// Indices into [`QpProblem::constraints`].
    pub active: Vec<usize>,
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
}

fn violation_tol(n: &Vector3<f64>, b: f64, u: &Vector3<f64>) -> f64 {
    FEAS_TOL * (1.0 + b.abs() + n.norm() * u.norm())
}

pub fn solve_filter_qp(p: &QpProblem) -> Result<QpSolution> {
    let cons = p.constraints();
    let infeasible = || {
        let (best, u) = p.best_row_value();
        Error::Infeasible { best, fallback: [u.x, u.y, u.z] }
    };
    if p.best_row_value().0 < -violation_tol(&Vector3::zeros(), 0.0, &p.u0) {
        return Err(infeasible());
    }

    let mut x = p.u0;
    let mut active: Vec<usize> = Vec::new();
    let mut lam: Vec<f64> = Vec::new();
    // Every addition strictly increases the objective, so this only guards
    // against roundoff cycling.
    for _ in 0..64 {
        let mut pick = None;
        let mut worst = 0.0;
        for (i, (n, b)) in cons.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let s = n.dot(&x) - b;
            if s < -violation_tol(n, *b, &x) && s < worst {
                worst = s;
                pick = Some(i);
            }
        }
        let Some(pi) = pick else {
            let kkt = kkt_residual(p, &cons, &x, &active, &lam);
            return Ok(QpSolution { u: x, active, multipliers: lam, kkt_residual: kkt });
        };
        let np = cons[pi].0;
        let mut lam_p = 0.0;
        loop {
            let (z, r) = step_directions(&cons, &active, &np);
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 0.0 && lam[k] / rk < t1 {
                    t1 = lam[k] / rk;
                    drop = Some(k);
                }
            }
            let zn = z.dot(&np);
            let t2 = if z.norm_squared() > 1e-24 * np.norm_squared() {
                -(np.dot(&x) - cons[pi].1) / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(infeasible());
            }
            if t2.is_finite() {
                x += z * t;
            }
            for (k, rk) in r.iter().enumerate() {
                lam[k] -= t * rk;
            }
            lam_p += t;
            if t2 <= t1 {
                active.push(pi);
                lam.push(lam_p);
                break;
            }
            let k = drop.expect("finite t1 has an index");
            active.remove(k);
            lam.remove(k);
        }
    }
    Err(Error::Domain("active-set iteration did not terminate".into()))
}

/// Primal direction `z = (I − N N⁺) n_p` and dual direction `r = N⁺ n_p`.
fn step_directions(cons: &[(Vector3<f64>, f64)], active: &[usize], np: &Vector3<f64>) -> (Vector3<f64>, Vec<f64>) {
    if active.is_empty() {
        return (*np, Vec::new());
    }
    let n = DMatrix::from_fn(3, active.len(), |i, k| cons[active[k]].0[i]);
    let gram = n.transpose() * &n;
    let rhs = n.transpose() * DVector::from_column_slice(np.as_slice());
    let npv = DVector::from_column_slice(np.as_slice());
    let (r, full_rank) = match gram.cholesky() {
        Some(c) => (c.solve(&rhs), true),
        None => {
            let r = n.clone().pseudo_inverse(1e-14).map(|p| p * &npv).unwrap_or_else(|_| DVector::zeros(active.len()));
            (r, false)
        }
    };
    // Three independent normals span R³, so nothing is left to move along.
    let z = if full_rank && active.len() >= 3 {
        Vector3::zeros()
    } else {
        np - Vector3::from_column_slice((&n * &r).as_slice())
    };
    (z, r.iter().copied().collect())
}

/// Max of stationarity, primal, dual and complementarity residuals.
pub fn kkt_residual(
    p: &QpProblem,
    cons: &[(Vector3<f64>, f64)],
    u: &Vector3<f64>,
    active: &[usize],
    lam: &[f64],
) -> f64 {
    let mut grad = u - p.u0;
    let mut res: f64 = 0.0;
    for (&i, &l) in active.iter().zip(lam) {
        grad -= cons[i].0 * l;
        res = res.max(-l).max((l * (cons[i].0.dot(u) - cons[i].1)).abs());
    }
    res = res.max(grad.norm());
    for (n, b) in cons {
        res = res.max(b - n.dot(u));
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_nominal_untouched() {
        let p = QpProblem {
            u0: Vector3::new(0.1, 0.2, 0.3),
            rows: vec![CbfRow { g: Vector3::x(), rhs: -1.0 }],
            bounds: Some(ForceBox::symmetric(1.0).unwrap()),
        };
        let s = solve_filter_qp(&p).unwrap();
        assert_eq!(s.u, p.u0);
        assert!(s.active.is_empty());
    }

    #[test]
    fn halfspace_projection() {
        let g = Vector3::new(1.0, 2.0, -1.0);
        let u0 = Vector3::new(0.0, 0.0, 0.0);
        let p = QpProblem { u0, rows: vec![CbfRow { g, rhs: 3.0 }], bounds: None };
        let s = solve_filter_qp(&p).unwrap();
        let expect = u0 + g * ((3.0 - g.dot(&u0)) / g.dot(&g));
        assert!((s.u - expect).norm() < 1e-14);
        assert!(s.kkt_residual < 1e-12);
    }

    #[test]
    fn infeasible_reports_best_value() {
        let p = QpProblem {
            u0: Vector3::zeros(),
            rows: vec![CbfRow { g: Vector3::x(), rhs: 5.0 }],
            bounds: Some(ForceBox::symmetric(1.0).unwrap()),
        };
        match solve_filter_qp(&p) {
            Err(Error::Infeasible { best, fallback }) => {
                assert!((best + 4.0).abs() < 1e-15);
                assert_eq!(fallback[0], 1.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn box_and_row_together() {
        let p = QpProblem {
            u0: Vector3::new(-2.0, 0.0, 0.0),
            rows: vec![CbfRow { g: Vector3::new(1.0, 1.0, 0.0), rhs: 1.5 }],
            bounds: Some(ForceBox::symmetric(1.0).unwrap()),
        };
        let s = solve_filter_qp(&p).unwrap();
        assert!((s.u - Vector3::new(0.5, 1.0, 0.0)).norm() < 1e-12, "{:?}", s.u);
        assert!(s.kkt_residual < 1e-12);
    }
}
