use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hyprel_ffi::*;

fn last_error() -> String {
    let n = hyprel_last_error_length();
    let mut buf = vec![0 as std::ffi::c_char; n + 1];
    let full = unsafe { hyprel_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(full, n);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

const ENDPOINTS: [f64; 4] = [0.0, 1.0, 2.0, 4.0];
const FIRST: [usize; 4] = [0, 1, 2, 3];
const SECOND: [usize; 4] = [0, 2, 1, 3];

#[test]
fn exact_and_numeric_entropy() {
    let mut v = 0.0;
    let s = unsafe { hyprel_entropy_exact(ENDPOINTS.as_ptr(), 4, FIRST.as_ptr(), SECOND.as_ptr(), &mut v) };
    assert_eq!(s, HyprelStatus::Ok);
    assert!((v + 2.197_224_577_336_219_6).abs() < 1e-14);

    let tilted = HyprelDefining { kind: HyprelDefiningKind::Tilted, center: 0.0, alpha: 0.0, beta: 0.3 };
    let (mut n, mut err) = (0.0, 0.0);
    let s = unsafe {
        hyprel_entropy_numeric(ENDPOINTS.as_ptr(), 4, FIRST.as_ptr(), SECOND.as_ptr(), &tilted, 0.01, 1e-4, 0.5, 1e-11, &mut n, &mut err)
    };
    assert_eq!(s, HyprelStatus::Ok, "{}", last_error());
    assert!((n - v).abs() < 1e-6, "{n} vs {v}");
}

#[test]
fn errors_are_reported_per_thread() {
    let bad = [0usize, 0, 2, 3];
    let mut v = 0.0;
    let s = unsafe { hyprel_entropy_exact(ENDPOINTS.as_ptr(), 4, bad.as_ptr(), SECOND.as_ptr(), &mut v) };
    assert_eq!(s, HyprelStatus::InvalidArgument);
    assert!(last_error().contains("bad pair"), "{}", last_error());
    let other = std::thread::spawn(|| hyprel_last_error_length()).join().unwrap();
    assert_eq!(other, 0);

    let s = unsafe { hyprel_entropy_exact(ptr::null(), 4, FIRST.as_ptr(), SECOND.as_ptr(), &mut v) };
    assert_eq!(s, HyprelStatus::NullPointer);
    let s = unsafe { hyprel_entropy_exact(ENDPOINTS.as_ptr(), 4, FIRST.as_ptr(), SECOND.as_ptr(), ptr::null_mut()) };
    assert_eq!(s, HyprelStatus::NullPointer);

    let mut small = [0i8; 4];
    let full = unsafe { hyprel_last_error_message(small.as_mut_ptr().cast(), small.len()) };
    assert!(full > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn catenoid_handle() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hyprel_catenoid_shoot(1.0, 2.0, &mut h) }, HyprelStatus::Ok);
    let mut count = 0;
    assert_eq!(unsafe { hyprel_catenoid_count(h, &mut count) }, HyprelStatus::Ok);
    assert_eq!(count, 2);
    let mut a3 = 0.0;
    assert_eq!(unsafe { hyprel_catenoid_a3(h, 0, &mut a3) }, HyprelStatus::Ok);
    assert!((a3 - 0.052968).abs() < 1e-5);
    let (mut c2, mut unc) = (0.0, 0.0);
    assert_eq!(unsafe { hyprel_catenoid_renormalized_area(h, 1, &mut c2, &mut unc) }, HyprelStatus::Ok);
    assert!((c2 + 14.719724).abs() < 1e-4, "{c2}");
    assert_eq!(unsafe { hyprel_catenoid_a3(h, 2, &mut a3) }, HyprelStatus::InvalidArgument);
    unsafe { hyprel_catenoid_free(h) };
    unsafe { hyprel_catenoid_free(ptr::null_mut()) };
    assert_eq!(unsafe { hyprel_catenoid_shoot(1.0, 5.0, &mut h) }, HyprelStatus::InvalidArgument);
}

#[test]
fn flow_handle() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hyprel_flow_new(0.0, 1.0, 64, 0.1, &mut h) }, HyprelStatus::Ok);
    let mut n = 0;
    unsafe { hyprel_flow_nodes(h, &mut n) };
    assert_eq!(n, 64);
    let (mut e0, mut e1, mut err) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { hyprel_flow_entropy(h, &mut e0, &mut err) }, HyprelStatus::Ok);
    assert_eq!(unsafe { hyprel_flow_advance(h, 0.2, 0.25) }, HyprelStatus::Ok);
    unsafe { hyprel_flow_entropy(h, &mut e1, &mut err) };
    assert!(e1 < e0);
    let mut t = 0.0;
    unsafe { hyprel_flow_time(h, &mut t) };
    assert!((t - 0.2).abs() < 1e-12);
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { hyprel_flow_values(h, buf.as_mut_ptr(), 3) }, HyprelStatus::BufferTooSmall);
    assert_eq!(unsafe { hyprel_flow_values(h, buf.as_mut_ptr(), n) }, HyprelStatus::Ok);
    assert!(buf.iter().all(|r| *r > 1.0 && *r < 1.1));
    let mut hmax = 0.0;
    assert_eq!(unsafe { hyprel_flow_max_curvature(h, &mut hmax) }, HyprelStatus::Ok);
    unsafe { hyprel_flow_free(h) };

    assert_eq!(unsafe { hyprel_flow_new(0.0, 1.0, 100, 0.5, &mut h) }, HyprelStatus::Ok);
    assert_eq!(unsafe { hyprel_flow_step(h, 50.0) }, HyprelStatus::StepRejected);
    assert!(last_error().contains("retry"), "{}", last_error());
    let mut t0 = -1.0;
    unsafe { hyprel_flow_time(h, &mut t0) };
    assert_eq!(t0, 0.0);
    unsafe { hyprel_flow_free(h) };
}

#[test]
fn run_command_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let cmd = CString::new("geodesic-entropy").unwrap();
    let mut code = -1;
    assert_eq!(unsafe { hyprel_run(cmd.as_ptr(), ptr::null(), out.as_ptr(), &mut code) }, HyprelStatus::Ok);
    assert_eq!(code, 0);
    assert!(dir.path().join("summary.json").exists());

    let cfg = CString::new(r#"{"parameters":{"bogus":1}}"#).unwrap();
    assert_eq!(unsafe { hyprel_run(cmd.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut code) }, HyprelStatus::Config);
    assert_eq!(code, 4);
    let strict = CString::new(r#"{"parameters":{"tolerance":0.0}}"#).unwrap();
    assert_eq!(unsafe { hyprel_run(cmd.as_ptr(), strict.as_ptr(), out.as_ptr(), &mut code) }, HyprelStatus::Ok);
    assert_eq!(code, 2);
    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { hyprel_run(unknown.as_ptr(), ptr::null(), out.as_ptr(), &mut code) }, HyprelStatus::Config);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(hyprel_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compile and run a C program against the generated header and the
/// static library.
#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libhyprel_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("cc");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
