use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use dqtrack::algebra::{DualQuaternion, DualVector, UnitDualQuaternion, UnitQuaternion};
use dqtrack::controller::{feedback_wrench_raw, Gains};
use dqtrack::dynamics::{error_rate_raw, DualInertia, DualWrench};
use dqtrack::sim::config::{MARCO_INERTIA, MARCO_MASS};
use dqtrack::stability::make_envelope;
use dqtrack_ffi::*;
use nalgebra::Vector3;

fn marco() -> *mut DqController {
    let flat: Vec<f64> = MARCO_INERTIA.iter().flatten().copied().collect();
    let mut h = ptr::null_mut();
    let s = unsafe { dq_controller_new(MARCO_MASS, flat.as_ptr(), 0.2, 0.3, DqLaw::Proposed, &mut h) };
    assert_eq!(s, DqStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { dq_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(511)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn sample_state() -> (DualQuaternion, DualVector) {
    let q = UnitQuaternion::from_axis_angle(&Vector3::new(1.0, -2.0, 0.5), 1.1).unwrap();
    let p = UnitDualQuaternion::from_rotation_translation(&q, &Vector3::new(0.4, -1.2, 2.0));
    let w = DualVector::new(Vector3::new(0.1, -0.3, 0.2), Vector3::new(-0.5, 0.25, 0.05));
    (*p.dq(), w)
}

#[test]
fn wrench_and_rate_match_core() {
    let h = marco();
    let (q, w) = sample_state();
    let tw = DualVector::new(Vector3::new(0.0, 0.0, 0.1), Vector3::new(0.2, 0.0, 0.0));
    let acc = DualVector::new(Vector3::new(0.01, 0.0, 0.0), Vector3::zeros());
    let j = DualInertia::from_rows(MARCO_MASS, &MARCO_INERTIA).unwrap();
    let g = Gains::new(0.2, 0.3).unwrap();
    let want = feedback_wrench_raw(&q, &w, &j, &tw, &acc, &g);

    let mut f = [0.0; 6];
    let s = unsafe {
        dq_controller_wrench(
            h,
            q.to_array().as_ptr(),
            w.to_array().as_ptr(),
            tw.to_array().as_ptr(),
            acc.to_array().as_ptr(),
            f.as_mut_ptr(),
        )
    };
    assert_eq!(s, DqStatus::Ok);
    assert_eq!(f, want.as_dual_vector().to_array());

    let d2 = [0.0, 0.0, 0.0, 1e-2, 0.0, 0.0];
    let (mut qd, mut wd) = ([0.0; 8], [0.0; 6]);
    let s = unsafe {
        dq_controller_error_rate(
            h,
            q.to_array().as_ptr(),
            w.to_array().as_ptr(),
            f.as_ptr(),
            tw.to_array().as_ptr(),
            acc.to_array().as_ptr(),
            ptr::null(),
            d2.as_ptr(),
            qd.as_mut_ptr(),
            wd.as_mut_ptr(),
        )
    };
    assert_eq!(s, DqStatus::Ok);
    let dist = dqtrack::dynamics::Disturbance { d1: DualVector::zero(), d2: DualVector::from_array(&d2) };
    let r =
        error_rate_raw(&q, &w, &DualWrench::from_dual_vector(&DualVector::from_array(&f)), &j, &tw, &acc, Some(&dist));
    assert_eq!(qd, r.q_dot.to_array());
    assert_eq!(wd, r.w_dot.to_array());

    let (mut v0, mut v) = (0.0, 0.0);
    assert_eq!(
        unsafe { dq_controller_lyapunov(h, q.to_array().as_ptr(), w.to_array().as_ptr(), 10.0, &mut v0, &mut v) },
        DqStatus::Ok
    );
    assert!(v0 > 0.0 && v.is_finite());
    unsafe { dq_controller_free(h) };
}

#[test]
fn envelope_handle_round_trip() {
    let h = marco();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { dq_envelope_new(h, 2.5, 0.0, &mut e) }, DqStatus::Ok);
    let mut c = DqEnvelopeConstants::default();
    assert_eq!(unsafe { dq_envelope_constants(e, &mut c) }, DqStatus::Ok);
    let j = DualInertia::from_rows(MARCO_MASS, &MARCO_INERTIA).unwrap();
    let want = make_envelope(2.5, &j, &Gains::new(0.2, 0.3).unwrap(), 0.0).unwrap();
    assert_eq!((c.alpha, c.beta, c.ln_m_env, c.k1), (want.alpha, want.beta, want.ln_m_env, want.k1));

    let times = [0.0, 1.0, 2.0];
    let ok = [2.0, 1.0, 0.5];
    let mut v = DqVerdict::default();
    assert_eq!(unsafe { dq_envelope_check(e, times.as_ptr(), ok.as_ptr(), 3, &mut v) }, DqStatus::Ok);
    assert!(v.pass && v.first_violation == -1);
    let bad = [2.0, 1.0, 1e300];
    assert_eq!(unsafe { dq_envelope_check(e, times.as_ptr(), bad.as_ptr(), 3, &mut v) }, DqStatus::Ok);
    assert!(!v.pass && v.first_violation == 2);
    assert_eq!(unsafe { dq_envelope_check(e, times.as_ptr(), bad.as_ptr(), 0, &mut v) }, DqStatus::Domain);
    unsafe {
        dq_envelope_free(e);
        dq_controller_free(h);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut h = ptr::null_mut();
    let flat = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    assert_eq!(unsafe { dq_controller_new(1.0, flat.as_ptr(), -1.0, 1.0, DqLaw::Baseline, &mut h) }, DqStatus::Domain);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { dq_controller_new(1.0, ptr::null(), 1.0, 1.0, DqLaw::Baseline, &mut h) },
        DqStatus::NullPointer
    );
    assert!(last_error().contains("inertia"));

    let c = marco();
    assert_eq!(unsafe { dq_last_error_message(ptr::null_mut(), 0) }, 0);
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { dq_envelope_new(c, -1.0, 0.0, &mut e) }, DqStatus::Domain);
    let n = unsafe { dq_last_error_message(ptr::null_mut(), 0) };
    let mut small = [0 as c_char; 8];
    assert_eq!(unsafe { dq_last_error_message(small.as_mut_ptr(), small.len()) }, n);
    assert_eq!(small[7], 0);
    unsafe {
        dq_controller_free(c);
        dq_controller_free(ptr::null_mut());
        dq_envelope_free(ptr::null_mut());
    }
}

#[test]
fn qp_reports_solution_and_infeasibility() {
    let rows = [DqCbfRow { g: [1.0, 2.0, -1.0], rhs: 3.0 }];
    let u0 = [0.0; 3];
    let (mut u, mut kkt) = ([0.0; 3], 1.0);
    let s = unsafe { dq_filter_qp(u0.as_ptr(), rows.as_ptr(), 1, ptr::null(), ptr::null(), u.as_mut_ptr(), &mut kkt) };
    assert_eq!(s, DqStatus::Ok);
    assert!((u[0] - 0.5).abs() < 1e-14 && (u[1] - 1.0).abs() < 1e-14 && (u[2] + 0.5).abs() < 1e-14);
    assert!(kkt < 1e-12);

    let rows = [DqCbfRow { g: [1.0, 0.0, 0.0], rhs: 5.0 }];
    let (lo, hi) = ([-1.0; 3], [1.0; 3]);
    let s = unsafe {
        dq_filter_qp(u0.as_ptr(), rows.as_ptr(), 1, lo.as_ptr(), hi.as_ptr(), u.as_mut_ptr(), ptr::null_mut())
    };
    assert_eq!(s, DqStatus::Infeasible);
    assert_eq!(u[0], 1.0);
}

#[test]
fn scenario_run_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let mut c = dqtrack::sim::ScenarioConfig::defaults(dqtrack::sim::ScenarioKind::ApolloDocking);
    c.n = 2;
    c.t_final = 50.0;
    std::fs::write(&cfg, c.to_toml().unwrap()).unwrap();
    let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    let mut pass = false;
    let s = unsafe { dq_run_scenario(ptr::null(), path.as_ptr(), 3, out.as_ptr(), &mut pass) };
    assert_eq!(s, DqStatus::Ok, "{}", last_error());
    assert!(dir.path().join("run/summary.json").exists());
    assert!(dir.path().join("run/traj_001.csv").exists());

    let bogus = CString::new("warp_drive").unwrap();
    let s = unsafe { dq_run_scenario(bogus.as_ptr(), ptr::null(), 3, out.as_ptr(), ptr::null_mut()) };
    assert_eq!(s, DqStatus::Config);
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/dqtrack.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["dq_controller_new", "dq_filter_qp", "dq_run_scenario", "DQ_STATUS_INFEASIBLE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let lib = target_dir().join("libdqtrack_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let st = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
