use std::ffi::{CStr, CString};
use std::ptr;

use bhcluster_ffi::*;

fn last_error() -> String {
    let p = bh_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn pair_model(j: f64, beta: f64) -> *mut BhModel {
    let dims = [2usize];
    let mut m = ptr::null_mut();
    let s = unsafe { bh_model_finite_range(dims.as_ptr(), 1, false, j, 1, 1.0, 0.0, beta, &mut m) };
    assert_eq!(s, BhStatus::Ok);
    m
}

#[test]
fn version_strings() {
    let v = unsafe { CStr::from_ptr(bh_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    assert_eq!(bh_schema_version(), 1);
}

#[test]
fn expansion_and_oracle_agree_on_pair() {
    let (j, beta) = (0.5, 0.4);
    let model = pair_model(j, beta);
    assert_eq!(unsafe { bh_model_num_sites(model) }, 2);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { bh_approximate(model, 6, 1, 2, &mut report) }, BhStatus::Ok);
    let mut v = BhReportValues::default();
    assert_eq!(unsafe { bh_report_values(report, &mut v) }, BhStatus::Ok);
    let closed = (2.0 + 2.0 * (beta * j).cosh()).ln();
    assert!((v.f_beta - closed).abs() < 1e-9);
    assert_eq!((v.m, v.q, v.polymer_count), (6, 1, 1));
    let mut first = 0.0;
    assert_eq!(unsafe { bh_report_order(report, 1, &mut first) }, BhStatus::Ok);
    assert!((first - ((beta * j).cosh() - 1.0) / 2.0).abs() < 1e-14);
    assert_eq!(unsafe { bh_report_order(report, 7, &mut first) }, BhStatus::Config);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { bh_report_to_json(report, &mut json) }, BhStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"per_order\""));
    unsafe { bh_string_free(json) };

    let mut state = ptr::null_mut();
    assert_eq!(unsafe { bh_thermalize(model, 1, 100, &mut state) }, BhStatus::Ok);
    let mut log_z = 0.0;
    assert_eq!(unsafe { bh_state_log_z(state, &mut log_z) }, BhStatus::Ok);
    assert!((log_z - closed).abs() < 1e-13);
    let mut p = [0.0; 2];
    assert_eq!(unsafe { bh_state_occupation(state, 0, p.as_mut_ptr(), 2) }, BhStatus::Ok);
    assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { bh_state_occupation(state, 0, p.as_mut_ptr(), 1) }, BhStatus::Config);
    let mut c = 0.0;
    assert_eq!(unsafe { bh_state_hopping_correlation(state, 0, 1, &mut c) }, BhStatus::Ok);
    assert!((c - (beta * j).sinh() / (2.0 + 2.0 * (beta * j).cosh())).abs() < 1e-13);
    let (a, b) = ([0usize], [1usize]);
    let mut mi = -1.0;
    assert_eq!(
        unsafe { bh_state_mutual_information(state, a.as_ptr(), 1, b.as_ptr(), 1, 100, &mut mi) },
        BhStatus::Ok
    );
    assert!(mi > 0.0);
    let mut n2 = 0.0;
    assert_eq!(unsafe { bh_state_moment(state, 1, 2, &mut n2) }, BhStatus::Ok);
    assert!((n2 - 0.5).abs() < 1e-12);

    unsafe {
        bh_state_free(state);
        bh_report_free(report);
        bh_model_free(model);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dims = [3usize];
    let mut m = ptr::null_mut();
    let s = unsafe { bh_model_long_range(dims.as_ptr(), 1, false, 0.1, 0.5, 1.0, 0.0, 0.1, &mut m) };
    assert_eq!(s, BhStatus::Config);
    assert!(last_error().contains("alpha"), "{}", last_error());
    assert!(m.is_null());

    let s = unsafe { bh_model_finite_range(ptr::null(), 1, false, 0.1, 1, 1.0, 0.0, 0.1, &mut m) };
    assert_eq!(s, BhStatus::NullPointer);
    assert!(last_error().contains("dims"));

    let model = pair_model(0.3, 0.2);
    let mut state = ptr::null_mut();
    assert_eq!(unsafe { bh_thermalize(model, 3, 10, &mut state) }, BhStatus::ResourceCap);
    assert!(last_error().contains("16") && last_error().contains("10"), "{}", last_error());
    assert_eq!(unsafe { bh_approximate(model, 2, 1, 1, ptr::null_mut()) }, BhStatus::NullPointer);
    assert_eq!(unsafe { bh_approximate(ptr::null(), 2, 1, 1, ptr::null_mut()) }, BhStatus::NullPointer);

    let mut ok = ptr::null_mut();
    assert_eq!(unsafe { bh_approximate(model, 2, 1, 1, &mut ok) }, BhStatus::Ok);
    assert!(bh_last_error().is_null());
    unsafe {
        bh_report_free(ok);
        bh_model_free(model);
        bh_model_free(ptr::null_mut());
        bh_string_free(ptr::null_mut());
    }
}

#[test]
fn explicit_and_toml_models() {
    let matrix = [0.0, 0.4, 0.4, 0.0];
    let (u, mu) = ([1.0, 1.0], [0.0, 0.0]);
    let mut a = ptr::null_mut();
    assert_eq!(
        unsafe { bh_model_explicit(2, matrix.as_ptr(), u.as_ptr(), mu.as_ptr(), 0.3, &mut a) },
        BhStatus::Ok
    );
    let toml = CString::new("[model]\ndims = [2]\ncoupling = \"finite_range\"\ng = 0.4\ncutoff = 1\nbeta = 0.3\n").unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { bh_model_from_toml(toml.as_ptr(), &mut b) }, BhStatus::Ok);
    let log_z = |m: *const BhModel| {
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { bh_thermalize(m, 2, 100, &mut s) }, BhStatus::Ok);
        let mut z = 0.0;
        unsafe {
            bh_state_log_z(s, &mut z);
            bh_state_free(s);
        }
        z
    };
    assert_eq!(log_z(a), log_z(b));
    let asym = [0.0, 0.4, 0.3, 0.0];
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { bh_model_explicit(2, asym.as_ptr(), u.as_ptr(), mu.as_ptr(), 0.3, &mut c) },
        BhStatus::Config
    );
    let bad = CString::new("[model]\ndims = [2]\n").unwrap();
    assert_eq!(unsafe { bh_model_from_toml(bad.as_ptr(), &mut c) }, BhStatus::Config);
    assert!(last_error().contains("model.beta"));
    unsafe {
        bh_model_free(a);
        bh_model_free(b);
    }
}

#[test]
fn run_command_renders_documents() {
    let cfg = CString::new(
        "[model]\ndims = [3]\ncoupling = \"finite_range\"\ng = 0.2\ncutoff = 1\nbeta = 0.1\n\n[expansion]\nm = 3\nq = 2\n\n[output]\nformat = \"csv\"\n",
    )
    .unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { bh_run(BhCommand::Kp, cfg.as_ptr(), &mut out) }, BhStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { bh_string_free(out) };
    assert!(text.starts_with("# schema: bhcluster.kp/1\nsite,lhs,rhs,satisfied\n"), "{text}");
    assert_eq!(text.lines().count(), 5);
    let bad = CString::new("[model]\n").unwrap();
    assert_eq!(unsafe { bh_run(BhCommand::Approx, bad.as_ptr(), &mut out) }, BhStatus::Config);
    let invalid = [0xffu8, 0];
    assert_eq!(unsafe { bh_run(BhCommand::Approx, invalid.as_ptr().cast(), &mut out) }, BhStatus::InvalidUtf8);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bhcluster.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
