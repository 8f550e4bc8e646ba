//! C ABI for dqtrack.
//!
//! Every call returns a [`DqStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`dq_last_error_message`]. Array layouts follow the core crate: dual
//! quaternions are 8 doubles `(real.xyz, real.w, dual.xyz, dual.w)`, dual
//! vectors and wrenches are 6 doubles `(real.xyz, dual.xyz)`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dqtrack::algebra::{DualQuaternion, DualVector};
use dqtrack::controller::{baseline_wrench_raw, feedback_wrench_raw, Gains};
use dqtrack::dynamics::{error_rate_raw, Disturbance, DualInertia, DualWrench};
use dqtrack::safety::{solve_filter_qp, CbfRow, ForceBox, QpProblem};
use dqtrack::sim::{run_scenario, write_outputs, ScenarioConfig, ScenarioKind};
use dqtrack::stability::{check_envelope, lyapunov_v0_raw, lyapunov_v_raw, make_envelope, StabilityEnvelope};
use dqtrack::Error;
use nalgebra::{Matrix3, Vector3};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DqStatus {
    Ok = 0,
    NullPointer = 1,
    NotUnit = 2,
    DegeneratePose = 3,
    ContractViolation = 4,
    Precondition = 5,
    Domain = 6,
    Infeasible = 7,
    Diverged = 8,
    Config = 9,
    Parse = 10,
    Io = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

/// Which feedback law a controller evaluates.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DqLaw {
    Proposed = 0,
    Baseline = 1,
}

/// Opaque controller: dual inertia, gains and law.
pub struct DqController {
    j: DualInertia,
    gains: Gains,
    law: DqLaw,
}

/// Opaque stability envelope for one ball radius.
pub struct DqEnvelope {
    env: StabilityEnvelope,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DqEnvelopeConstants {
    pub r: f64,
    pub c: f64,
    pub k0: f64,
    pub beta: f64,
    pub alpha: f64,
    pub k1: f64,
    pub ln_m_env: f64,
    pub j_max: f64,
    pub j_min: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DqVerdict {
    pub pass: bool,
    pub margin: f64,
    /// Index of the first failing sample, or -1.
    pub first_violation: i64,
}

/// One half-space `g·u ≥ rhs` for [`dq_filter_qp`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DqCbfRow {
    pub g: [f64; 3],
    pub rhs: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DqStatus {
    match e {
        Error::NotUnit { .. } => DqStatus::NotUnit,
        Error::DegeneratePose { .. } => DqStatus::DegeneratePose,
        Error::ContractViolation(_) => DqStatus::ContractViolation,
        Error::Precondition(_) => DqStatus::Precondition,
        Error::Domain(_) => DqStatus::Domain,
        Error::Infeasible { .. } => DqStatus::Infeasible,
        Error::Diverged { .. } => DqStatus::Diverged,
        Error::Config(_) => DqStatus::Config,
        Error::Parse(_) => DqStatus::Parse,
        Error::Io(_) => DqStatus::Io,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DqStatus::Ok
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            DqStatus::NullPointer
        }
        Ok(Err(Fail::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            DqStatus::InvalidUtf8
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DqStatus::Panic
        }
    }
}

unsafe fn read<const N: usize>(p: *const f64, what: &'static str) -> Result<[f64; N], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::ptr::read_unaligned(p as *const [f64; N]))
}

unsafe fn read_or_zero<const N: usize>(p: *const f64) -> [f64; N] {
    if p.is_null() {
        [0.0; N]
    } else {
        std::ptr::read_unaligned(p as *const [f64; N])
    }
}

unsafe fn write<const N: usize>(p: *mut f64, v: [f64; N], what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    std::ptr::write_unaligned(p as *mut [f64; N], v);
    Ok(())
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

fn wrench_array(w: &DualWrench) -> [f64; 6] {
    w.as_dual_vector().to_array()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or 0
/// if the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a controller. `inertia` is 9 doubles, row-major, kg m².
///
/// # Safety
/// `inertia` must point to 9 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dq_controller_new(
    mass: f64,
    inertia: *const f64,
    kp: f64,
    kd: f64,
    law: DqLaw,
    out_handle: *mut *mut DqController,
) -> DqStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let i: [f64; 9] = read(inertia, "inertia")?;
        let j = DualInertia::new(mass, Matrix3::from_row_slice(&i))?;
        let gains = Gains::new(kp, kd)?;
        *slot = Box::into_raw(Box::new(DqController { j, gains, law }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`dq_controller_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dq_controller_free(handle: *mut DqController) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Control wrench `(force, torque)` for error pose `q` (8) and error twist
/// `w` (6). `ref_twist_body` and `ref_accel` (6 each) may be null for a
/// fixed reference.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn dq_controller_wrench(
    handle: *const DqController,
    q: *const f64,
    w: *const f64,
    ref_twist_body: *const f64,
    ref_accel: *const f64,
    wrench_out: *mut f64,
) -> DqStatus {
    guard(|| {
        let c = deref(handle, "handle")?;
        let q = DualQuaternion::from_array(&read::<8>(q, "q")?);
        let w = DualVector::from_array(&read::<6>(w, "w")?);
        let tw = DualVector::from_array(&read_or_zero::<6>(ref_twist_body));
        let acc = DualVector::from_array(&read_or_zero::<6>(ref_accel));
        let law = match c.law {
            DqLaw::Proposed => feedback_wrench_raw,
            DqLaw::Baseline => baseline_wrench_raw,
        };
        write(wrench_out, wrench_array(&law(&q, &w, &c.j, &tw, &acc, &c.gains)), "wrench_out")
    })
}

/// Error-state derivative under `wrench` (6). `d1`, `d2` (6 each) are the
/// optional kinematic and dynamic disturbances. Writes `q_dot` (8) and the
/// unswapped `w_dot` (6).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn dq_controller_error_rate(
    handle: *const DqController,
    q: *const f64,
    w: *const f64,
    wrench: *const f64,
    ref_twist_body: *const f64,
    ref_accel: *const f64,
    d1: *const f64,
    d2: *const f64,
    q_dot_out: *mut f64,
    w_dot_out: *mut f64,
) -> DqStatus {
    guard(|| {
        let c = deref(handle, "handle")?;
        let q = DualQuaternion::from_array(&read::<8>(q, "q")?);
        let w = DualVector::from_array(&read::<6>(w, "w")?);
        let f = DualWrench::from_dual_vector(&DualVector::from_array(&read::<6>(wrench, "wrench")?));
        let tw = DualVector::from_array(&read_or_zero::<6>(ref_twist_body));
        let acc = DualVector::from_array(&read_or_zero::<6>(ref_accel));
        let dist = (!d1.is_null() || !d2.is_null()).then(|| Disturbance {
            d1: DualVector::from_array(&read_or_zero::<6>(d1)),
            d2: DualVector::from_array(&read_or_zero::<6>(d2)),
        });
        let r = error_rate_raw(&q, &w, &f, &c.j, &tw, &acc, dist.as_ref());
        write(q_dot_out, r.q_dot.to_array(), "q_dot_out")?;
        write(w_dot_out, r.w_dot.to_array(), "w_dot_out")
    })
}

/// `V₀` and the cross-term Lyapunov function `V` with constant `c`.
///
/// # Safety
/// `q` (8) and `w` (6) must be readable; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn dq_controller_lyapunov(
    handle: *const DqController,
    q: *const f64,
    w: *const f64,
    c: f64,
    v0_out: *mut f64,
    v_out: *mut f64,
) -> DqStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let q = DualQuaternion::from_array(&read::<8>(q, "q")?);
        let w = DualVector::from_array(&read::<6>(w, "w")?);
        *out(v0_out, "v0_out")? = lyapunov_v0_raw(&q, &w, &h.j, &h.gains);
        *out(v_out, "v_out")? = lyapunov_v_raw(&q, &w, &h.j, &h.gains, c);
        Ok(())
    })
}

/// Envelope constants for initial conditions in the ball of radius `r`,
/// with reference twist-rate bound `delta`.
///
/// # Safety
/// `controller` must be a live handle; `out_handle` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_envelope_new(
    controller: *const DqController,
    r: f64,
    delta: f64,
    out_handle: *mut *mut DqEnvelope,
) -> DqStatus {
    guard(|| {
        let c = deref(controller, "controller")?;
        let slot = out(out_handle, "out_handle")?;
        let env = make_envelope(r, &c.j, &c.gains, delta)?;
        *slot = Box::into_raw(Box::new(DqEnvelope { env }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`dq_envelope_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dq_envelope_free(handle: *mut DqEnvelope) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be live; `out_constants` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_envelope_constants(
    handle: *const DqEnvelope,
    out_constants: *mut DqEnvelopeConstants,
) -> DqStatus {
    guard(|| {
        let e = &deref(handle, "handle")?.env;
        *out(out_constants, "out_constants")? = DqEnvelopeConstants {
            r: e.r,
            c: e.c,
            k0: e.k0,
            beta: e.beta,
            alpha: e.alpha,
            k1: e.k1,
            ln_m_env: e.ln_m_env,
            j_max: e.j_max,
            j_min: e.j_min,
        };
        Ok(())
    })
}

/// Checks a sampled norm series against the envelope.
///
/// # Safety
/// `times` and `norms` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn dq_envelope_check(
    handle: *const DqEnvelope,
    times: *const f64,
    norms: *const f64,
    n: usize,
    out_verdict: *mut DqVerdict,
) -> DqStatus {
    guard(|| {
        let e = &deref(handle, "handle")?.env;
        let slot = out(out_verdict, "out_verdict")?;
        if n > 0 && (times.is_null() || norms.is_null()) {
            return Err(Fail::Null("times/norms"));
        }
        let (t, x) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(times, n), std::slice::from_raw_parts(norms, n))
        };
        let v = check_envelope(t, x, e)?;
        *slot =
            DqVerdict { pass: v.pass, margin: v.margin, first_violation: v.first_violation.map_or(-1, |i| i as i64) };
        Ok(())
    })
}

/// Minimum-norm correction of `u0` (3) subject to `rows` and, if both
/// `lower` and `upper` (3 each) are non-null, a force box. On
/// `DQ_STATUS_INFEASIBLE`, `u_out` holds the box point that best serves the
/// worst row.
///
/// # Safety
/// `rows` must hold `n_rows` entries; vectors hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn dq_filter_qp(
    u0: *const f64,
    rows: *const DqCbfRow,
    n_rows: usize,
    lower: *const f64,
    upper: *const f64,
    u_out: *mut f64,
    kkt_residual_out: *mut f64,
) -> DqStatus {
    guard(|| {
        let u0 = Vector3::from(read::<3>(u0, "u0")?);
        if n_rows > 0 && rows.is_null() {
            return Err(Fail::Null("rows"));
        }
        let rows: Vec<CbfRow> = (0..n_rows)
            .map(|i| {
                let r = std::ptr::read_unaligned(rows.add(i));
                CbfRow { g: Vector3::from(r.g), rhs: r.rhs }
            })
            .collect();
        let bounds = if lower.is_null() || upper.is_null() {
            None
        } else {
            Some(ForceBox::new(Vector3::from(read::<3>(lower, "lower")?), Vector3::from(read::<3>(upper, "upper")?))?)
        };
        match solve_filter_qp(&QpProblem { u0, rows, bounds }) {
            Ok(sol) => {
                write(u_out, sol.u.into(), "u_out")?;
                if let Some(k) = kkt_residual_out.as_mut() {
                    *k = sol.kkt_residual;
                }
                Ok(())
            }
            Err(e @ Error::Infeasible { fallback, .. }) => {
                write(u_out, fallback, "u_out")?;
                Err(e.into())
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Runs a scenario and writes its CSV and JSON files into `out_dir`.
/// `config_path` (TOML) takes precedence over `scenario` when non-null.
/// `all_pass_out` receives whether every verdict passed.
///
/// # Safety
/// Strings must be NUL-terminated; `all_pass_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn dq_run_scenario(
    scenario: *const c_char,
    config_path: *const c_char,
    seed: u64,
    out_dir: *const c_char,
    all_pass_out: *mut bool,
) -> DqStatus {
    guard(|| {
        let dir = string(out_dir, "out_dir")?;
        let mut cfg = if !config_path.is_null() {
            ScenarioConfig::load(Path::new(string(config_path, "config_path")?), None)?
        } else {
            ScenarioConfig::defaults(string(scenario, "scenario")?.parse::<ScenarioKind>()?)
        };
        cfg.seed = seed;
        let result = run_scenario(&cfg)?;
        write_outputs(&result, Path::new(dir))?;
        if let Some(p) = all_pass_out.as_mut() {
            *p = result.summary.all_pass;
        }
        Ok(())
    })
}
