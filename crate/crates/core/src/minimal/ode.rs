//! Dormand–Prince 5(4) integrator for small autonomous systems.

use crate::error::{Error, Result};

pub(crate) const DIM: usize = 3;
pub(crate) type State = [f64; DIM];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: fifth-order solution and error estimate.
pub(crate) fn dp_step<F: Fn(&State) -> State>(f: &F, u: &State, h: f64) -> (State, State) {
    let mut k = [[0.0; DIM]; 7];
    k[0] = f(u);
    for i in 1..7 {
        let mut v = *u;
        for (j, kj) in k.iter().enumerate().take(i) {
            let a = A[i][j];
            if a != 0.0 {
                for d in 0..DIM {
                    v[d] += h * a * kj[d];
                }
            }
        }
        k[i] = f(&v);
    }
    let mut hi = *u;
    let mut err = [0.0; DIM];
    for i in 0..7 {
        for d in 0..DIM {
            hi[d] += h * B5[i] * k[i][d];
            err[d] += h * (B5[i] - B4[i]) * k[i][d];
        }
    }
    (hi, err)
}

/// Tolerances of the adaptive stepper.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

/// What the caller's monitor wants after an accepted step.
pub(crate) enum Control {
    Continue,
    Stop,
}

/// Adaptive integration from `(s0, u0)`. After every accepted step the
/// monitor sees `(s, u)`; it stops the run by returning `Control::Stop`.
/// `scale(u)` is a local length scale bounding the step size.
pub(crate) fn integrate<F, M, S>(f: &F, s0: f64, u0: State, h0: f64, tol: Tolerances, scale: S, mut monitor: M) -> Result<()>
where
    F: Fn(&State) -> State,
    M: FnMut(f64, &State, f64) -> Control,
    S: Fn(&State) -> f64,
{
    let mut s = s0;
    let mut u = u0;
    let mut h = h0;
    let mut steps = 0usize;
    loop {
        if steps >= tol.max_steps {
            return Err(Error::Integrator(format!("step limit {} reached at s = {s}", tol.max_steps)));
        }
        let hmax = 0.1 * scale(&u);
        if !(hmax > 0.0 && hmax.is_finite()) {
            return Err(Error::Integrator(format!("degenerate state at s = {s}")));
        }
        h = h.min(hmax);
        let (next, err) = dp_step(f, &u, h);
        let mut e = 0.0f64;
        for d in 0..DIM {
            let sc = tol.atol + tol.rtol * u[d].abs().max(next[d].abs());
            e = e.max((err[d] / sc).abs());
        }
        if !e.is_finite() || next.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            if h < 1e-14 * (1.0 + s.abs()) {
                return Err(Error::Integrator(format!("non-finite state near s = {s}")));
            }
            continue;
        }
        if e <= 1.0 {
            steps += 1;
            let h_taken = h;
            s += h;
            u = next;
            let grow = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h *= grow;
            if let Control::Stop = monitor(s, &u, h_taken) {
                return Ok(());
            }
        } else {
            h *= (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * (1.0 + s.abs()) {
                return Err(Error::Integrator(format!("step size underflow at s = {s}")));
            }
        }
    }
}
