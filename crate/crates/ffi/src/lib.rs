//! C ABI for `hyprel`.
//!
//! Every function returns a [`HyprelStatus`]; on failure the message is
//! kept per thread and read with [`hyprel_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_shoot` and released by `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hyprel::expansion::{entropy_limit, geometric_grid, Sample};
use hyprel::flow::{flow_entropy, RadialCurveState};
use hyprel::geodesics::{relative_entropy_exact, GeodesicConfig};
use hyprel::halfspace::DefiningFunction;
use hyprel::minimal::{renormalized_area_fit, shoot_catenoid, RevolutionSurface, ShootingControls};
use hyprel::quadrature::{truncated_differences, ImmersionUnion, UnitWeight};
use hyprel::runner::{self, Command, RunConfig};
use hyprel::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyprelStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotInHalfSpace = 3,
    Incomparable = 4,
    QuadratureBudget = 5,
    IllConditioned = 6,
    Divergence = 7,
    Geometry = 8,
    Integrator = 9,
    InvalidState = 10,
    StepRejected = 11,
    Domain = 12,
    Config = 13,
    Io = 14,
    BufferTooSmall = 15,
    Panic = 99,
}

impl From<&Error> for HyprelStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::EmptyTruncation { .. } | Error::MappedToInfinity(_) => HyprelStatus::InvalidArgument,
            Error::NotInHalfSpace(_) => HyprelStatus::NotInHalfSpace,
            Error::IncomparableConfigs(_) => HyprelStatus::Incomparable,
            Error::BudgetExceeded { .. } => HyprelStatus::QuadratureBudget,
            Error::IllConditionedFit { .. } => HyprelStatus::IllConditioned,
            Error::NonCancellingDivergence { .. } | Error::Diagnostics(_) => HyprelStatus::Divergence,
            Error::Geometry(_) => HyprelStatus::Geometry,
            Error::Integrator(_) => HyprelStatus::Integrator,
            Error::InvalidState(_) => HyprelStatus::InvalidState,
            Error::StepRejected { .. } => HyprelStatus::StepRejected,
            Error::Domain(_) | Error::UndefinedProjection => HyprelStatus::Domain,
            Error::Config(_) => HyprelStatus::Config,
            Error::Io(_) => HyprelStatus::Io,
        }
    }
}

/// Which defining function truncates the surfaces.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyprelDefiningKind {
    Height = 0,
    Scaled = 1,
    Tilted = 2,
}

/// `Scaled` uses `center` and `alpha`, `Tilted` uses `beta`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HyprelDefining {
    pub kind: HyprelDefiningKind,
    pub center: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Minimal annuli bounded by two concentric circles.
pub struct HyprelCatenoid {
    surfaces: Vec<RevolutionSurface>,
}

/// A polar curve evolving by curve shortening flow.
pub struct HyprelFlow {
    state: RadialCurveState,
}

type Failure = (HyprelStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(e: Error) -> Failure {
    (HyprelStatus::from(&e), e.to_string())
}

fn null(name: &str) -> Failure {
    (HyprelStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HyprelStatus {
    set_last_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HyprelStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            HyprelStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, name: &str, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    unsafe { out.write(v) };
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (HyprelStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null("handle"))
}

unsafe fn configs(endpoints: *const f64, count: usize, first: *const usize, second: *const usize) -> Result<(GeodesicConfig, GeodesicConfig), Failure> {
    let e = unsafe { slice(endpoints, count, "endpoints") }?.to_vec();
    let pairs = |p: &[usize]| p.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
    let a = unsafe { slice(first, count, "first") }?;
    let b = unsafe { slice(second, count, "second") }?;
    let c1 = GeodesicConfig::new(e.clone(), pairs(a)).map_err(fail)?;
    let c2 = GeodesicConfig::new(e, pairs(b)).map_err(fail)?;
    Ok((c1, c2))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hyprel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the last error message of this thread, without the
/// terminating NUL.
#[no_mangle]
pub extern "C" fn hyprel_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copy the last error message of this thread into `buf` (truncated to
/// `len − 1` bytes, always NUL-terminated when `len > 0`). Returns the
/// full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hyprel_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Closed-form relative entropy of two geodesic configurations on the same
/// `count` endpoints. `first` and `second` hold `count` endpoint indices,
/// read as consecutive pairs.
///
/// # Safety
/// `endpoints`, `first` and `second` must point to `count` readable values.
#[no_mangle]
pub unsafe extern "C" fn hyprel_entropy_exact(
    endpoints: *const f64,
    count: usize,
    first: *const usize,
    second: *const usize,
    out: *mut f64,
) -> HyprelStatus {
    guard(|| {
        let (c1, c2) = unsafe { configs(endpoints, count, first, second) }?;
        let v = relative_entropy_exact(&c1, &c2).map_err(fail)?;
        unsafe { write(out, "out", v) }
    })
}

/// Relative entropy of two geodesic configurations by quadrature of the
/// truncated lengths on the grid `eps_hi, eps_hi·ratio, …, ≥ eps_lo` and
/// extrapolation. `defining` may be null for the height function.
///
/// # Safety
/// As [`hyprel_entropy_exact`]; `defining` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn hyprel_entropy_numeric(
    endpoints: *const f64,
    count: usize,
    first: *const usize,
    second: *const usize,
    defining: *const HyprelDefining,
    eps_hi: f64,
    eps_lo: f64,
    ratio: f64,
    tol: f64,
    out_value: *mut f64,
    out_error: *mut f64,
) -> HyprelStatus {
    guard(|| {
        let (c1, c2) = unsafe { configs(endpoints, count, first, second) }?;
        let r = match unsafe { defining.as_ref() } {
            None => DefiningFunction::Height,
            Some(d) => match d.kind {
                HyprelDefiningKind::Height => DefiningFunction::Height,
                HyprelDefiningKind::Scaled => DefiningFunction::scaled(&[d.center], d.alpha).map_err(fail)?,
                HyprelDefiningKind::Tilted => DefiningFunction::tilted(d.beta).map_err(fail)?,
            },
        };
        if !(tol > 0.0) {
            return Err((HyprelStatus::InvalidArgument, format!("tol must be positive, got {tol}")));
        }
        let grid = geometric_grid(eps_hi, eps_lo, ratio).map_err(fail)?;
        let (u1, u2) = (ImmersionUnion::from_config(&c1), ImmersionUnion::from_config(&c2));
        let samples: Vec<Sample> = truncated_differences(&u1, &u2, &r, &UnitWeight, &grid, tol)
            .map_err(fail)?
            .into_iter()
            .map(Into::into)
            .collect();
        let e = entropy_limit(&samples).map_err(fail)?;
        unsafe { write(out_value, "out_value", e.value) }?;
        unsafe { write(out_error, "out_error", e.error_bar) }
    })
}

/// Shoot the minimal annuli bounded by circles of radii `r1 ≤ r2 ≤ 4 r1`.
/// On success `*out` owns a handle, possibly with zero surfaces.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hyprel_catenoid_shoot(r1: f64, r2: f64, out: *mut *mut HyprelCatenoid) -> HyprelStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let shot = shoot_catenoid(r1, r2, &ShootingControls::default()).map_err(fail)?;
        let h = Box::new(HyprelCatenoid { surfaces: shot.surfaces });
        unsafe { out.write(Box::into_raw(h)) };
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_catenoid_count(h: *const HyprelCatenoid, out: *mut usize) -> HyprelStatus {
    guard(|| {
        let h = unsafe { handle(h) }?;
        unsafe { write(out, "out", h.surfaces.len()) }
    })
}

fn surface(h: &HyprelCatenoid, index: usize) -> Result<&RevolutionSurface, Failure> {
    h.surfaces
        .get(index)
        .ok_or_else(|| (HyprelStatus::InvalidArgument, format!("surface {index} of {}", h.surfaces.len())))
}

/// Free parameter `a3` of the boundary expansion of surface `index`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_catenoid_a3(h: *const HyprelCatenoid, index: usize, out: *mut f64) -> HyprelStatus {
    guard(|| {
        let s = surface(unsafe { handle(h) }?, index)?;
        let a3 = s.a3().ok_or_else(|| (HyprelStatus::Geometry, "surface has no boundary expansion".to_string()))?;
        unsafe { write(out, "out", a3) }
    })
}

/// Renormalized area of surface `index` from a fit of the truncated areas.
///
/// # Safety
/// `h` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_catenoid_renormalized_area(
    h: *const HyprelCatenoid,
    index: usize,
    out_value: *mut f64,
    out_uncertainty: *mut f64,
) -> HyprelStatus {
    guard(|| {
        let s = surface(unsafe { handle(h) }?, index)?;
        let grid = geometric_grid((0.25 * s.max_height()).min(0.3), 1e-3, 0.8).map_err(fail)?;
        let fit = renormalized_area_fit(s, &DefiningFunction::Height, &grid, 4, 1e-9).map_err(fail)?;
        unsafe { write(out_value, "out_value", fit.fit.constant_term) }?;
        unsafe { write(out_uncertainty, "out_uncertainty", fit.uncertainty) }
    })
}

/// # Safety
/// `h` must be null or a handle from [`hyprel_catenoid_shoot`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn hyprel_catenoid_free(h: *mut HyprelCatenoid) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Curve `R(θ) = r0 (1 + amplitude·sin²θ)` about `center` on `nodes`
/// interior angles.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_new(center: f64, r0: f64, nodes: usize, amplitude: f64, out: *mut *mut HyprelFlow) -> HyprelStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = RadialCurveState::perturbed(center, r0, nodes, amplitude).map_err(fail)?;
        unsafe { out.write(Box::into_raw(Box::new(HyprelFlow { state }))) };
        Ok(())
    })
}

/// One time step of size `dt`. A rejected step leaves the state unchanged.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_step(h: *mut HyprelFlow, dt: f64) -> HyprelStatus {
    guard(|| {
        let h = unsafe { h.as_mut() }.ok_or_else(|| null("handle"))?;
        h.state = h.state.step(dt).map_err(fail)?;
        Ok(())
    })
}

/// Advance by `duration` with equal steps no longer than
/// `dt_factor·Δθ²`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_advance(h: *mut HyprelFlow, duration: f64, dt_factor: f64) -> HyprelStatus {
    guard(|| {
        let h = unsafe { h.as_mut() }.ok_or_else(|| null("handle"))?;
        if !(duration >= 0.0 && duration.is_finite() && dt_factor > 0.0) {
            return Err((HyprelStatus::InvalidArgument, "need duration ≥ 0 and dt_factor > 0".into()));
        }
        let dt_max = dt_factor * h.state.dtheta().powi(2);
        let steps = (duration / dt_max).ceil() as usize;
        let mut s = h.state.clone();
        for _ in 0..steps {
            s = s.step(duration / steps as f64).map_err(fail)?;
        }
        h.state = s;
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_time(h: *const HyprelFlow, out: *mut f64) -> HyprelStatus {
    guard(|| {
        let h = unsafe { handle(h) }?;
        unsafe { write(out, "out", h.state.t) }
    })
}

/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_nodes(h: *const HyprelFlow, out: *mut usize) -> HyprelStatus {
    guard(|| {
        let h = unsafe { handle(h) }?;
        unsafe { write(out, "out", h.state.nodes()) }
    })
}

/// Copy the nodal radii into `buf`, which must hold at least
/// `hyprel_flow_nodes` values.
///
/// # Safety
/// `h` must be a live handle; `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_values(h: *const HyprelFlow, buf: *mut f64, len: usize) -> HyprelStatus {
    guard(|| {
        let h = unsafe { handle(h) }?;
        let v = &h.state.values;
        if len < v.len() {
            return Err((HyprelStatus::BufferTooSmall, format!("need {} values, got {len}", v.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len()) };
        Ok(())
    })
}

/// Relative entropy of the curve against the semicircle of radius `r0`.
///
/// # Safety
/// `h` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_entropy(h: *const HyprelFlow, out_value: *mut f64, out_error: *mut f64) -> HyprelStatus {
    guard(|| {
        let h = unsafe { handle(h) }?;
        let e = flow_entropy(&h.state).map_err(fail)?;
        unsafe { write(out_value, "out_value", e.value) }?;
        unsafe { write(out_error, "out_error", e.error_bar) }
    })
}

/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_max_curvature(h: *const HyprelFlow, out: *mut f64) -> HyprelStatus {
    guard(|| {
        let h = unsafe { handle(h) }?;
        let v = h.state.max_curvature().map_err(fail)?;
        unsafe { write(out, "out", v) }
    })
}

/// # Safety
/// `h` must be null or a handle from [`hyprel_flow_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hyprel_flow_free(h: *mut HyprelFlow) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Run a command of the command line tool. `config_json` may be null.
/// `*out_exit_code` receives the process exit status the tool would use
/// (also when the run itself fails).
///
/// # Safety
/// Strings must be NUL-terminated; `out_exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyprel_run(
    command: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    out_exit_code: *mut i32,
) -> HyprelStatus {
    guard(|| {
        if out_exit_code.is_null() {
            return Err(null("out_exit_code"));
        }
        let attempt = || -> Result<i32, Failure> {
            let cmd: Command = unsafe { string(command, "command") }?.parse().map_err(fail)?;
            let config = if config_json.is_null() {
                RunConfig::default()
            } else {
                RunConfig::from_json(unsafe { string(config_json, "config_json") }?).map_err(fail)?
            };
            let dir = unsafe { string(out_dir, "out_dir") }?;
            let (cmd, dir) = runner::resolve(&config, Some(cmd), Some(Path::new(dir))).map_err(fail)?;
            match runner::run(&config, cmd, &dir) {
                Ok(report) => Ok(report.exit_code()),
                Err(e) => {
                    unsafe { out_exit_code.write(runner::error_exit_code(&e)) };
                    Err(fail(e))
                }
            }
        };
        match attempt() {
            Ok(code) => unsafe { write(out_exit_code, "out_exit_code", code) },
            Err(f) => {
                if f.0 == HyprelStatus::Config || f.0 == HyprelStatus::InvalidArgument || f.0 == HyprelStatus::NullPointer {
                    unsafe { out_exit_code.write(runner::EXIT_CONFIG_ERROR) };
                }
                Err(f)
            }
        }
    })
}
