//! Closed-loop simulation and the canned scenarios.

pub mod config;
pub mod fuel;
mod integrate;
pub mod record;
mod sampling;

use std::path::Path;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{InitialConfig, Law, PoseConfig, ReferenceConfig, ScenarioConfig, ScenarioKind};
pub use fuel::{fuel_consumed, FuelModel};
pub use integrate::{rk4_step, unit_drift, ErrState};
pub use record::{
    read_csv, read_csv_file, write_csv, AggregateVerdict, FuelPoint, NamedVerdict, RunSummary, Sample,
    TrajectoryRecord, TrajectorySummary,
};
pub use sampling::{random_rotation, sample_ball, uniform_dual_vector};

use crate::algebra::{renormalize, DualQuaternion, DualVector, Quaternion, UnitDualQuaternion, UnitQuaternion};
use crate::controller::{baseline_wrench_raw, feedback_wrench_raw, Gains};
use crate::dynamics::{
    error_rate_raw, error_state, reference_twist_bound, reference_twist_in_body, state_norm_squared, BodyState,
    Disturbance, DualInertia, DualWrench, FixedPose, RefSample, ReferenceTrajectory, ScrewReference, TrackingError,
};
use crate::error::{Error, Result};
use crate::safety::{barrier_eval, body_kinematics, safe_wrench_raw, BarrierSpec, CbfPoles, ForceBox};
use crate::stability::{
    check_envelope, check_iss, lyapunov_v0_raw, lyapunov_v_raw, make_envelope_with, make_iss_bound, EnvelopeOverrides,
    IssBound, StabilityEnvelope, Verdict,
};

/// Slack for the sampled Lyapunov checks.
pub const LYAPUNOV_SLACK: f64 = 1e-8;
/// Slack on barrier values along filtered trajectories.
pub const BARRIER_SLACK: f64 = 1e-6;
/// Bound on every QP KKT residual.
pub const KKT_TOL: f64 = 1e-8;

// ── Plant ───────────────────────────────────────────────────────────────────

pub struct SafetyFilter {
    pub barriers: Vec<BarrierSpec>,
    pub poles: CbfPoles,
    pub bounds: Option<ForceBox>,
}

/// Body, controller, reference and optional safety filter.
pub struct ClosedLoop {
    pub j: DualInertia,
    pub gains: Gains,
    pub law: Law,
    pub reference: Box<dyn ReferenceTrajectory>,
    pub safety: Option<SafetyFilter>,
}

/// Everything computed at one state.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub wrench: DualWrench,
    pub rate: ErrState,
    pub h_min: f64,
    pub kkt_residual: f64,
    pub infeasible: bool,
}

pub fn pose_from_config(p: &PoseConfig) -> Result<UnitDualQuaternion> {
    let q = UnitQuaternion::from_axis_angle(&Vector3::from(p.axis), p.angle_deg.to_radians())?;
    // Config positions are in the parent frame; the pose stores them in the body frame.
    let r_body = q.conj().rotate(&Vector3::from(p.position));
    Ok(UnitDualQuaternion::from_rotation_translation(&q, &r_body))
}

pub fn reference_from_config(c: &ReferenceConfig) -> Result<Box<dyn ReferenceTrajectory>> {
    Ok(match c {
        ReferenceConfig::Fixed { pose } => Box::new(FixedPose(pose_from_config(pose)?)),
        ReferenceConfig::Screw { start, axis, spin, lead, rate, amplitude, freq } => {
            let axis = Vector3::from(*axis);
            if axis.norm() == 0.0 {
                return Err(Error::Config("screw axis must be nonzero".into()));
            }
            Box::new(ScrewReference {
                start: pose_from_config(start)?,
                axis,
                spin: *spin,
                lead: *lead,
                rate: *rate,
                amplitude: *amplitude,
                freq: *freq,
            })
        }
    })
}

impl ClosedLoop {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let safety = if cfg.barriers.is_empty() {
            None
        } else {
            Some(SafetyFilter {
                barriers: cfg.barriers.clone(),
                poles: CbfPoles::new(cfg.a1, cfg.a2)?,
                bounds: cfg.f_max.map(ForceBox::symmetric).transpose()?,
            })
        };
        Ok(Self {
            j: DualInertia::from_rows(cfg.mass, &cfg.inertia)?,
            gains: Gains::new(cfg.kp, cfg.kd)?,
            law: cfg.law,
            reference: reference_from_config(&cfg.reference)?,
            safety,
        })
    }

    pub fn evaluate(&self, t: f64, x: &ErrState, dist: Option<&Disturbance>) -> Result<Evaluation> {
        let s = self.reference.sample(t);
        self.evaluate_at(&s, x, dist)
    }

    fn evaluate_at(&self, s: &RefSample, x: &ErrState, dist: Option<&Disturbance>) -> Result<Evaluation> {
        let twist_b = reference_twist_in_body(&x.q, &s.twist);
        let law = match self.law {
            Law::Proposed => feedback_wrench_raw,
            Law::Baseline => baseline_wrench_raw,
        };
        let nominal = law(&x.q, &x.w, &self.j, &twist_b, &s.accel, &self.gains);
        let (wrench, h_min, kkt_residual, infeasible) = match &self.safety {
            None => (nominal, f64::NAN, 0.0, false),
            Some(f) => {
                match safe_wrench_raw(&x.q, &x.w, s, &nominal, &f.barriers, &f.poles, self.j.mass(), f.bounds) {
                    Ok((w, out)) => {
                        (w, out.h.iter().copied().fold(f64::INFINITY, f64::min), out.qp.kkt_residual, false)
                    }
                    Err(Error::Infeasible { fallback, .. }) => {
                        // Clamp to the box point that best serves the worst row.
                        let (k, q) = body_kinematics(&x.q, &x.w, s);
                        let u = (q.conj() * Quaternion::pure(Vector3::from(fallback)) * q).vec;
                        let mut h = f64::INFINITY;
                        for b in &f.barriers {
                            h = h.min(barrier_eval(b, &k.position)?.h);
                        }
                        (DualWrench::new(u, nominal.torque), h, 0.0, true)
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        let r = error_rate_raw(&x.q, &x.w, &wrench, &self.j, &twist_b, &s.accel, dist);
        Ok(Evaluation { wrench, rate: ErrState { q: r.q_dot, w: r.w_dot }, h_min, kkt_residual, infeasible })
    }
}

// ── Single trajectory ───────────────────────────────────────────────────────

fn disturbance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Integrates one trajectory from `x0` and records every `record_every` steps
/// plus the final state.
pub fn simulate(
    plant: &ClosedLoop,
    cfg: &ScenarioConfig,
    c: f64,
    x0: &TrackingError,
    index: usize,
) -> Result<TrajectoryRecord> {
    let steps = cfg.steps();
    let model = FuelModel::new(cfg.fuel_c1, cfg.fuel_m0)?;
    let mut rng = disturbance_rng(cfg.seed, index);
    let mut x = ErrState { q: *x0.q_err.dq(), w: x0.w_err };
    let mut rec = TrajectoryRecord::default();
    let mut fuel = model.m0;
    let mut prev_wrench_norm: Option<f64> = None;

    let sample = |t: f64, x: &ErrState, e: &Evaluation, fuel: f64| Sample {
        t,
        q_err: x.q.to_array(),
        w_err: x.w.to_array(),
        norm_x: state_norm_squared(&x.q, &x.w).sqrt(),
        v0: lyapunov_v0_raw(&x.q, &x.w, &plant.j, &plant.gains),
        v: lyapunov_v_raw(&x.q, &x.w, &plant.j, &plant.gains, c),
        force: e.wrench.force.into(),
        torque: e.wrench.torque.into(),
        h_min: e.h_min,
        fuel_kg: fuel,
    };

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let dist = (cfg.d_max > 0.0 && k < steps).then(|| Disturbance {
            d1: uniform_dual_vector(&mut rng, cfg.d_max),
            d2: uniform_dual_vector(&mut rng, cfg.d_max),
        });
        let e0 = plant.evaluate(t, &x, dist.as_ref())?;
        let wn = e0.wrench.norm();
        if let Some(p) = prev_wrench_norm {
            fuel += 0.5 * model.c1 * (p + wn) * cfg.dt;
        }
        prev_wrench_norm = Some(wn);
        rec.max_kkt_residual = rec.max_kkt_residual.max(e0.kkt_residual);
        rec.qp_infeasible += e0.infeasible as usize;
        if k % cfg.record_every == 0 || k == steps {
            rec.samples.push(sample(t, &x, &e0, fuel));
        }
        if k == steps {
            break;
        }

        let mut first = Some(e0.rate);
        let mut stage_kkt: f64 = 0.0;
        let mut stage_infeasible = 0;
        let next = rk4_step(&x, t, cfg.dt, k, |ts, xs| {
            if let Some(r) = first.take() {
                return Ok(r);
            }
            let e = plant.evaluate(ts, xs, dist.as_ref())?;
            stage_kkt = stage_kkt.max(e.kkt_residual);
            stage_infeasible += e.infeasible as usize;
            Ok(e.rate)
        })?;
        rec.max_kkt_residual = rec.max_kkt_residual.max(stage_kkt);
        rec.qp_infeasible += stage_infeasible;
        rec.max_unit_drift = rec.max_unit_drift.max(unit_drift(&next.q));
        x = next;
        if cfg.renormalize_every > 0 && (k + 1) % cfg.renormalize_every == 0 {
            x.q = renormalize(&x.q).map_err(|_| Error::Diverged { step: k })?.into_inner();
        }
    }
    Ok(rec)
}

// ── Scenarios ───────────────────────────────────────────────────────────────

pub struct ScenarioOutput {
    pub summary: RunSummary,
    pub records: Vec<TrajectoryRecord>,
}

pub fn initial_conditions(cfg: &ScenarioConfig, reference: &dyn ReferenceTrajectory) -> Result<Vec<TrackingError>> {
    match &cfg.initial {
        InitialConfig::Ball => sample_ball(cfg.radius, cfg.n, cfg.seed),
        InitialConfig::Body { pose, omega, velocity } => {
            let body = BodyState {
                pose: pose_from_config(pose)?,
                twist: DualVector::new(Vector3::from(*omega), Vector3::from(*velocity)),
            };
            Ok(vec![error_state(&body, &reference.sample(0.0)); cfg.n])
        }
    }
}

pub fn envelope_for(cfg: &ScenarioConfig, plant: &ClosedLoop) -> Result<StabilityEnvelope> {
    let delta = reference_twist_bound(plant.reference.as_ref(), cfg.t_final, 1000);
    make_envelope_with(cfg.radius, &plant.j, &plant.gains, delta, &EnvelopeOverrides { c: cfg.c, beta: cfg.beta })
}

fn clamp_finite(x: f64) -> f64 {
    if x.is_nan() {
        f64::MIN
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

fn verdict_from(margins: impl Iterator<Item = f64>) -> Verdict {
    let mut margin = f64::INFINITY;
    let mut first = None;
    for (i, m) in margins.enumerate() {
        if !(m >= 0.0) && first.is_none() {
            first = Some(i);
        }
        margin = margin.min(if m.is_nan() { f64::NEG_INFINITY } else { m });
    }
    Verdict { pass: first.is_none(), margin: clamp_finite(margin), first_violation: first }
}

/// Which verdicts a scenario carries.
fn checks_for(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::MarcoTrack => &["envelope", "lyapunov_sandwich", "v0_nonincreasing", "fuel_monotone"],
        ScenarioKind::MarcoIss => &["iss", "fuel_monotone"],
        ScenarioKind::ApolloTransposition => &["convergence", "envelope", "v0_nonincreasing", "fuel_monotone"],
        ScenarioKind::ApolloDocking => &["axial_error", "envelope", "v0_nonincreasing", "fuel_monotone"],
        ScenarioKind::ApolloFuel => &["v0_nonincreasing", "fuel_monotone"],
        ScenarioKind::CorridorDock | ScenarioKind::AltitudeAvoid => &["barrier", "kkt", "qp_feasible", "fuel_monotone"],
    }
}

/// Offline-recomputable checks.
pub fn offline_checks(kind: ScenarioKind) -> Vec<String> {
    checks_for(kind).iter().filter(|c| matches!(**c, "envelope" | "iss")).map(|c| c.to_string()).collect()
}

fn trajectory_verdicts(
    cfg: &ScenarioConfig,
    rec: &TrajectoryRecord,
    env: &StabilityEnvelope,
    iss: Option<&IssBound>,
) -> Result<Vec<NamedVerdict>> {
    let times = rec.times();
    let norms = rec.norms();
    let s = &rec.samples;
    let last = s.last().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let mut out = Vec::new();
    for &name in checks_for(cfg.scenario) {
        let v = match name {
            "envelope" => check_envelope(&times, &norms, env)?,
            "iss" => check_iss(&times, &norms, iss.expect("iss bound present"), cfg.settle_fraction)?,
            "lyapunov_sandwich" => {
                let rate = env.v_rate(cfg.kd);
                let v_init = s[0].v;
                verdict_from(s.iter().map(|p| {
                    let lower = p.v - env.k1 * p.norm_x * p.norm_x + LYAPUNOV_SLACK;
                    let upper = v_init * (-rate * (p.t - s[0].t)).exp() + LYAPUNOV_SLACK - p.v;
                    lower.min(upper)
                }))
            }
            "v0_nonincreasing" => verdict_from(s.windows(2).map(|w| w[0].v0 - w[1].v0 + LYAPUNOV_SLACK)),
            "fuel_monotone" => verdict_from(s.windows(2).map(|w| w[1].fuel_kg - w[0].fuel_kg)),
            "convergence" => {
                let q = DualQuaternion::from_array(&last.q_err);
                verdict_from(std::iter::once(cfg.convergence_tol - (q - DualQuaternion::one()).norm()))
            }
            "axial_error" => {
                let q = DualQuaternion::from_array(&last.q_err);
                let axial = ((q.real.conj() * q.dual).vec * 2.0).x;
                verdict_from(std::iter::once(cfg.axial_tolerance - axial.abs()))
            }
            "barrier" => verdict_from(s.iter().map(|p| p.h_min + BARRIER_SLACK)),
            "kkt" => verdict_from(std::iter::once(KKT_TOL - rec.max_kkt_residual)),
            "qp_feasible" => verdict_from(std::iter::once(-(rec.qp_infeasible as f64))),
            _ => unreachable!("unknown check {name}"),
        };
        out.push(NamedVerdict { name: name.to_string(), verdict: Verdict { margin: clamp_finite(v.margin), ..v } });
    }
    Ok(out)
}

pub fn trajectory_file_name(index: usize) -> String {
    format!("traj_{index:03}.csv")
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let plant = ClosedLoop::from_config(cfg)?;
    let env = envelope_for(cfg, &plant)?;
    let iss = if cfg.scenario == ScenarioKind::MarcoIss || cfg.d_max > 0.0 {
        Some(make_iss_bound(&env, &plant.gains, cfg.d_max)?)
    } else {
        None
    };
    let x0s = initial_conditions(cfg, plant.reference.as_ref())?;
    let records: Vec<TrajectoryRecord> =
        x0s.par_iter().enumerate().map(|(i, x0)| simulate(&plant, cfg, env.c, x0, i)).collect::<Result<_>>()?;

    let mut trajectories = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let verdicts = trajectory_verdicts(cfg, rec, &env, iss.as_ref())?;
        let min_h = rec.samples.iter().map(|s| s.h_min).filter(|h| !h.is_nan()).reduce(f64::min);
        let last = rec.samples.last().expect("nonempty");
        trajectories.push(TrajectorySummary {
            index: i,
            file: trajectory_file_name(i),
            x0_norm: rec.samples[0].norm_x,
            final_norm: last.norm_x,
            min_h,
            max_kkt_residual: rec.max_kkt_residual,
            qp_infeasible: rec.qp_infeasible,
            max_unit_drift: rec.max_unit_drift,
            final_fuel_kg: last.fuel_kg,
            verdicts,
        });
    }

    let verdicts: Vec<AggregateVerdict> = checks_for(cfg.scenario)
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let vs: Vec<&Verdict> = trajectories.iter().map(|t| &t.verdicts[k].verdict).collect();
            let passed = vs.iter().filter(|v| v.pass).count();
            AggregateVerdict {
                name: name.to_string(),
                pass: passed == vs.len(),
                passed,
                total: vs.len(),
                worst_margin: vs.iter().map(|v| v.margin).fold(f64::MAX, f64::min),
            }
        })
        .collect();

    let fuel_report = cfg
        .fuel_report_times
        .iter()
        .filter_map(|&t| {
            let s = records[0].samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))?;
            Some(FuelPoint { t: s.t, fuel_kg: s.fuel_kg })
        })
        .collect();

    let all_pass = verdicts.iter().all(|v| v.pass);
    let m_env = Some(env.m_env()).filter(|m| m.is_finite());
    let summary = RunSummary {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        n: cfg.n,
        config: cfg.clone(),
        envelope: env,
        m_env,
        iss,
        offline_checks: offline_checks(cfg.scenario),
        verdicts,
        trajectories,
        fuel_report,
        all_pass,
    };
    Ok(ScenarioOutput { summary, records })
}

/// Writes `summary.json` and one CSV per trajectory into `dir`.
pub fn write_outputs(out: &ScenarioOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (rec, t) in out.records.iter().zip(&out.summary.trajectories) {
        let f = std::io::BufWriter::new(std::fs::File::create(dir.join(&t.file))?);
        write_csv(rec, f)?;
    }
    let json = serde_json::to_string_pretty(&out.summary)?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}
