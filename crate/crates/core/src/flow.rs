//! Curve shortening in the hyperbolic plane for polar graphs over a geodesic
//! semicircle, entropy along the flow, and the near-boundary graph model.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::error::{invalid, Error, Result};
use crate::expansion::{entropy_limit, geometric_grid, EntropyEstimate, Sample};
use crate::halfspace::DefiningFunction;
use crate::quadrature::{truncated_differences, Boundary, GeodesicArc, Immersion, Node, NodeWeight, UnitWeight};
use crate::weights::{QuadraticField, ScalarField, Weight};

/// Solve a tridiagonal system; `lower[0]` and `upper[n-1]` are ignored.
pub(crate) fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = diag[0];
    c[0] = upper[0] / m;
    d[0] = rhs[0] / m;
    for i in 1..n {
        m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// A curve `θ ↦ c + R(θ)e^{iθ}` sampled at `θ_i = iπ/(N+1)`, `i = 1…N`,
/// pinned to `R0` at `θ = 0, π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialCurveState {
    pub center: f64,
    pub r0: f64,
    pub values: Vec<f64>,
    pub t: f64,
}

/// Lagged derivatives at an interior node.
struct Local {
    r: f64,
    d1: f64,
    d2: f64,
    s: f64,
    sin: f64,
    cos: f64,
}

impl RadialCurveState {
    pub fn new(center: f64, r0: f64, values: Vec<f64>) -> Result<Self> {
        let s = Self {
            center,
            r0,
            values,
            t: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Samples of `R(θ)` at the interior nodes.
    pub fn from_fn(center: f64, r0: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes < 3 {
            return invalid(format!("need at least 3 interior nodes, got {nodes}"));
        }
        let h = PI / (nodes + 1) as f64;
        Self::new(center, r0, (1..=nodes).map(|i| f(i as f64 * h)).collect())
    }

    /// The background geodesic itself.
    pub fn stationary(center: f64, r0: f64, nodes: usize) -> Result<Self> {
        Self::from_fn(center, r0, nodes, |_| r0)
    }

    /// `R = R0(1 + δ sin²θ)`.
    pub fn perturbed(center: f64, r0: f64, nodes: usize, amplitude: f64) -> Result<Self> {
        Self::from_fn(center, r0, nodes, |th| r0 * (1.0 + amplitude * th.sin().powi(2)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite() && self.center.is_finite()) {
            return invalid(format!("background radius must be positive, got {}", self.r0));
        }
        if self.values.len() < 3 {
            return Err(Error::InvalidState(format!("only {} interior nodes", self.values.len())));
        }
        if let Some((i, r)) = self.values.iter().enumerate().find(|(_, r)| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidState(format!("R[{i}] = {r} is not positive")));
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn dtheta(&self) -> f64 {
        PI / (self.values.len() + 1) as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dtheta()
    }

    /// `R` with the pinned ends, indices `0…N+1`.
    fn extended(&self) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.values.len() + 2);
        r.push(self.r0);
        r.extend_from_slice(&self.values);
        r.push(self.r0);
        r
    }

    fn local(&self, ext: &[f64], i: usize) -> Local {
        let h = self.dtheta();
        let (rm, r, rp) = (ext[i], ext[i + 1], ext[i + 2]);
        let d1 = (rp - rm) / (2.0 * h);
        let d2 = (rp - 2.0 * r + rm) / (h * h);
        let (sin, cos) = self.theta(i).sin_cos();
        Local {
            r,
            d1,
            d2,
            s: d1.hypot(r),
            sin,
            cos,
        }
    }

    /// `max |R − R0|`.
    pub fn band(&self) -> f64 {
        self.values.iter().map(|r| (r - self.r0).abs()).fold(0.0, f64::max)
    }

    /// Geodesic curvature at the nodes, signed as the normal speed that
    /// decreases length (outward positive).
    pub fn curvature(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let ext = self.extended();
        Ok((0..self.nodes())
            .map(|i| {
                let l = self.local(&ext, i);
                l.r * l.sin * (l.r * l.d2 - l.d1 * l.d1) / l.s.powi(3) - l.d1 * l.cos / l.s
            })
            .collect())
    }

    /// `∫ f H² dμ` by the trapezoid rule in `θ`; the integrand vanishes at
    /// the pinned ends.
    pub fn weighted_dissipation(&self, f: &dyn Fn(f64, f64) -> f64) -> Result<f64> {
        let h = self.curvature()?;
        let ext = self.extended();
        let sum: f64 = (0..self.nodes())
            .map(|i| {
                let l = self.local(&ext, i);
                let x = self.center + l.r * l.cos;
                let y = l.r * l.sin;
                f(x, y) * h[i] * h[i] * l.s / y
            })
            .sum();
        Ok(sum * self.dtheta())
    }

    /// `∫ H² dμ`.
    pub fn dissipation(&self) -> Result<f64> {
        self.weighted_dissipation(&|_, _| 1.0)
    }

    pub fn max_curvature(&self) -> Result<f64> {
        Ok(self.curvature()?.iter().map(|h| h.abs()).fold(0.0, f64::max))
    }

    /// Renormalized length difference against the background from the
    /// nodal values, `∫ (S/(R sinθ) − 1/sinθ) dθ`, by the trapezoid rule.
    pub fn nodal_entropy(&self) -> f64 {
        let ext = self.extended();
        let sum: f64 = (0..self.nodes())
            .map(|i| {
                let l = self.local(&ext, i);
                (l.s / l.r - 1.0) / l.sin
            })
            .sum();
        sum * self.dtheta()
    }

    /// One semi-implicit step: `∂_t R = a R'' + b R'` with the coefficients
    /// `a = R² sin²θ/S²`, `b = −(RR' sin²θ/S² + sinθ cosθ)` taken from the
    /// current state, central differences (upwinded where they would break
    /// the M-matrix property) and pinned ends.
    pub fn step(&self, dt: f64) -> Result<Self> {
        self.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("time step must be positive, got {dt}"));
        }
        let n = self.nodes();
        let h = self.dtheta();
        let ext = self.extended();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = self.values.clone();
        for i in 0..n {
            let l = self.local(&ext, i);
            let s2 = l.s * l.s;
            let a = l.r * l.r * l.sin * l.sin / s2;
            let b = -(l.r * l.d1 * l.sin * l.sin / s2 + l.sin * l.cos);
            let diff = a / (h * h);
            let (mut lo, mut up) = (diff - b / (2.0 * h), diff + b / (2.0 * h));
            if lo < 0.0 || up < 0.0 {
                lo = diff + (-b).max(0.0) / h;
                up = diff + b.max(0.0) / h;
            }
            lower[i] = -dt * lo;
            upper[i] = -dt * up;
            diag[i] = 1.0 + dt * (lo + up);
        }
        rhs[0] -= lower[0] * self.r0;
        rhs[n - 1] -= upper[n - 1] * self.r0;
        let next = thomas(&lower, &diag, &upper, &rhs);
        let max_update = next.iter().zip(&self.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let limit = MAX_RELATIVE_UPDATE * self.r0;
        if !max_update.is_finite() || max_update > limit || next.iter().any(|r| !(*r > 0.0)) {
            let suggested_dt = if max_update.is_finite() && max_update > 0.0 {
                0.5 * dt * (limit / max_update).min(1.0)
            } else {
                0.1 * dt
            };
            return Err(Error::StepRejected { max_update, suggested_dt });
        }
        Ok(Self {
            center: self.center,
            r0: self.r0,
            values: next,
            t: self.t + dt,
        })
    }

    /// Interpolating curve through the nodes and pinned ends.
    pub fn spline(&self) -> RadialSpline {
        RadialSpline::new(self)
    }
}

/// Largest accepted `max |ΔR| / R0` in one step.
const MAX_RELATIVE_UPDATE: f64 = 0.1;

/// Clamped cubic spline of `R(θ)` with `R' = 0` at both ends, as a curve
/// in the half-plane.
#[derive(Debug, Clone)]
pub struct RadialSpline {
    center: f64,
    r0: f64,
    h: f64,
    values: Vec<f64>,
    moments: Vec<f64>,
}

impl RadialSpline {
    fn new(state: &RadialCurveState) -> Self {
        let values = state.extended();
        let h = state.dtheta();
        let m = values.len();
        let mut lower = vec![h; m];
        let mut diag = vec![4.0 * h; m];
        let upper = vec![h; m];
        let mut rhs = vec![0.0; m];
        diag[0] = 2.0 * h;
        diag[m - 1] = 2.0 * h;
        lower[0] = 0.0;
        rhs[0] = 6.0 * (values[1] - values[0]) / h;
        rhs[m - 1] = -6.0 * (values[m - 1] - values[m - 2]) / h;
        for j in 1..m - 1 {
            rhs[j] = 6.0 * (values[j + 1] - 2.0 * values[j] + values[j - 1]) / h;
        }
        let moments = thomas(&lower, &diag, &upper, &rhs);
        Self {
            center: state.center,
            r0: state.r0,
            h,
            values,
            moments,
        }
    }

    /// `(R, R')` at `θ`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let h = self.h;
        let last = self.values.len() - 2;
        let j = ((theta / h).floor().max(0.0) as usize).min(last);
        let u = (j + 1) as f64 * h - theta;
        let w = theta - j as f64 * h;
        let (mj, mk) = (self.moments[j], self.moments[j + 1]);
        let a = self.values[j] - mj * h * h / 6.0;
        let b = self.values[j + 1] - mk * h * h / 6.0;
        let r = (mj * u * u * u + mk * w * w * w) / (6.0 * h) + (a * u + b * w) / h;
        let dr = (mk * w * w - mj * u * u) / (2.0 * h) + (b - a) / h;
        (r, dr)
    }
}

impl Immersion for RadialSpline {
    fn dimension(&self) -> usize {
        1
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, PI)
    }

    fn node(&self, t: f64, _phi: f64) -> Node {
        let (r, dr) = self.eval(t);
        let (s, c) = t.sin_cos();
        let tx = dr * c - r * s;
        let ty = dr * s + r * c;
        let speed = tx.hypot(ty);
        Node {
            x: smallvec![self.center + r * c],
            y: r * s,
            normal: smallvec![ty / speed, -tx / speed],
            jacobian: speed,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..self.values.len() - 1).map(|j| j as f64 * self.h).collect()
    }

    fn boundary(&self) -> Boundary {
        Boundary::Points(vec![self.center - self.r0, self.center + self.r0])
    }
}

/// Truncation grid and tolerance for entropies along the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropySettings {
    pub eps_hi: f64,
    pub eps_lo: f64,
    pub eps_ratio: f64,
    pub tol: f64,
}

impl Default for EntropySettings {
    fn default() -> Self {
        Self {
            eps_hi: 0.05,
            eps_lo: 1e-3,
            eps_ratio: 0.5,
            tol: 1e-11,
        }
    }
}

impl EntropySettings {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.tol > 0.0) {
            return invalid("quadrature tolerance must be positive");
        }
        geometric_grid(self.eps_hi, self.eps_lo, self.eps_ratio)
    }
}

/// `E_rel[Σ; f]` of the interpolated curve against the background geodesic.
pub fn weighted_flow_entropy(state: &RadialCurveState, f: &dyn NodeWeight, settings: &EntropySettings) -> Result<EntropyEstimate> {
    state.validate()?;
    let curve = state.spline();
    let geodesic = GeodesicArc {
        center: state.center,
        radius: state.r0,
    };
    let rows = truncated_differences(&curve, &geodesic, &DefiningFunction::Height, f, &settings.grid()?, settings.tol)?;
    let samples: Vec<Sample> = rows.into_iter().map(Into::into).collect();
    entropy_limit(&samples)
}

/// `E_rel[Σ_t, Σ]` against the background geodesic.
pub fn flow_entropy(state: &RadialCurveState) -> Result<EntropyEstimate> {
    flow_entropy_with(state, &EntropySettings::default())
}

pub fn flow_entropy_with(state: &RadialCurveState, settings: &EntropySettings) -> Result<EntropyEstimate> {
    weighted_flow_entropy(state, &UnitWeight, settings)
}

/// Run parameters of a curve flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: f64,
    /// Time step as a multiple of `Δθ²`.
    pub dt_factor: f64,
    /// Spacing of recorded rows.
    pub record_interval: f64,
    pub entropy: EntropySettings,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 2.0,
            dt_factor: 0.25,
            record_interval: 0.01,
            entropy: EntropySettings::default(),
            max_steps: 10_000_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return invalid(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return invalid(format!("dt_factor must be positive, got {}", self.dt_factor));
        }
        if !(self.record_interval > 0.0) {
            return invalid("record_interval must be positive");
        }
        self.entropy.grid()?;
        Ok(())
    }
}

/// One recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub t: f64,
    pub e_rel: f64,
    pub e_rel_error: f64,
    pub dissipation: f64,
    pub max_h: f64,
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMeta {
    pub nodes: usize,
    pub dt: f64,
    pub steps: usize,
    pub scheme: String,
    pub eps_grid: Vec<f64>,
    pub tol: f64,
    /// Largest per-step increase of the band (≤ 0 when trapped).
    pub max_band_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub rows: Vec<FlowRow>,
    pub snapshots: Vec<RadialCurveState>,
    pub meta: FlowMeta,
    pub settings: EntropySettings,
}

/// Advance `initial` to `t_end`, recording a row every `record_interval`.
pub fn run_flow(initial: &RadialCurveState, config: &FlowConfig) -> Result<FlowTrajectory> {
    config.validate()?;
    initial.validate()?;
    let h = initial.dtheta();
    let dt = config.dt_factor * h * h;
    let t0 = initial.t;
    let t_end = t0 + config.t_end;
    let mut snapshots = vec![initial.clone()];
    let mut state = initial.clone();
    let mut steps = 0usize;
    let mut max_band_growth = f64::NEG_INFINITY;
    let mut k = 1usize;
    loop {
        let target = (t0 + k as f64 * config.record_interval).min(t_end);
        if target <= state.t {
            break;
        }
        while state.t < target {
            if steps >= config.max_steps {
                return Err(Error::Integrator(format!("step limit {} reached at t = {}", config.max_steps, state.t)));
            }
            let remaining = target - state.t;
            let tau = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
            let band = state.band();
            let mut next = state.step(tau)?;
            if tau == remaining {
                next.t = target;
            }
            max_band_growth = max_band_growth.max(next.band() - band);
            state = next;
            steps += 1;
        }
        snapshots.push(state.clone());
        if target >= t_end {
            break;
        }
        k += 1;
    }
    log::debug!("flow: {steps} steps to t = {}", state.t);
    let rows = snapshots
        .par_iter()
        .map(|s| {
            let e = flow_entropy_with(s, &config.entropy)?;
            Ok(FlowRow {
                t: s.t,
                e_rel: e.value,
                e_rel_error: e.error_bar,
                dissipation: s.dissipation()?,
                max_h: s.max_curvature()?,
                band: s.band(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowTrajectory {
        rows,
        snapshots,
        meta: FlowMeta {
            nodes: initial.nodes(),
            dt,
            steps,
            scheme: "semi-implicit central differences, lagged coefficients, pinned ends".into(),
            eps_grid: config.entropy.grid()?,
            tol: config.entropy.tol,
            max_band_growth: if steps == 0 { 0.0 } else { max_band_growth },
        },
        settings: config.entropy.clone(),
    })
}

impl FlowTrajectory {
    /// Largest increase of `E_rel` between consecutive rows.
    pub fn max_entropy_increase(&self) -> f64 {
        self.rows.windows(2).map(|w| w[1].e_rel - w[0].e_rel).fold(f64::NEG_INFINITY, f64::max)
    }

    fn nearest_row(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, r) in self.rows.iter().enumerate() {
            if (r.t - t).abs() < (self.rows[best].t - t).abs() {
                best = i;
            }
        }
        best
    }

    fn span(&self, t: f64, s: f64) -> (usize, usize) {
        let (i, j) = (self.nearest_row(t), self.nearest_row(s));
        (i.min(j), i.max(j))
    }
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Terms of the entropy identity between two recorded times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub t: f64,
    pub s: f64,
    /// `E(t) − E(s)`.
    pub entropy_drop: f64,
    /// `∫_t^s ∫ f H² dμ dr`.
    pub dissipated: f64,
    /// `∫_t^s E_rel[Σ_r, Σ; ∂_t f − Δf + ⟨∇_n∇f, n⟩] dr`.
    pub evolution_term: f64,
    /// `E(t) − E(s) − dissipated + evolution_term`.
    pub residual: f64,
    /// `|residual| / dissipated`.
    pub relative: f64,
}

fn identity(t: f64, s: f64, drop: f64, times: &[f64], diss: &[f64], evolution: &[f64]) -> IdentityResidual {
    let dissipated = trapezoid(times, diss);
    let evolution_term = trapezoid(times, evolution);
    let residual = drop - dissipated + evolution_term;
    let relative = if dissipated > 0.0 { residual.abs() / dissipated } else { residual.abs() };
    IdentityResidual {
        t,
        s,
        entropy_drop: drop,
        dissipated,
        evolution_term,
        residual,
        relative,
    }
}

/// The unweighted identity between the recorded rows nearest to `t` and `s`,
/// with the time integral by the trapezoid rule over the stored rows.
pub fn monotonicity_check(traj: &FlowTrajectory, t: f64, s: f64) -> IdentityResidual {
    let (i, j) = traj.span(t, s);
    let rows = &traj.rows[i..=j];
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let diss: Vec<f64> = rows.iter().map(|r| r.dissipation).collect();
    let zero = vec![0.0; rows.len()];
    identity(rows[0].t, rows[rows.len() - 1].t, rows[0].e_rel - rows[rows.len() - 1].e_rel, &times, &diss, &zero)
}

/// A non-negative weight `f(x, y, t)` with finite-difference derivatives.
#[derive(Clone)]
pub struct SpaceTimeWeight {
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    exact: Option<Arc<dyn Fn(f64, f64, f64) -> WeightDerivatives + Send + Sync>>,
    time_dependent: bool,
    label: String,
}

impl fmt::Debug for SpaceTimeWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceTimeWeight").field("label", &self.label).finish()
    }
}

/// Gradient and Hessian in `(x, y)` plus the time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDerivatives {
    pub dt: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl SpaceTimeWeight {
    pub fn new(label: impl Into<String>, time_dependent: bool, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            exact: None,
            time_dependent,
            label: label.into(),
        }
    }

    /// Replace the finite differences by closed-form derivatives.
    pub fn with_derivatives(mut self, d: impl Fn(f64, f64, f64) -> WeightDerivatives + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(d));
        self
    }

    pub fn has_exact_derivatives(&self) -> bool {
        self.exact.is_some()
    }

    pub fn unit() -> Self {
        Self::new("1", false, |_, _, _| 1.0)
    }

    /// `exp(−((x − x0)/w)²)`.
    pub fn bump(x0: f64, width: f64) -> Self {
        Self::new(format!("bump(x0={x0}, w={width})"), false, move |x, _, _| (-((x - x0) / width).powi(2)).exp()).with_derivatives(
            move |x, _, _| {
                let z = (x - x0) / width;
                let g = (-z * z).exp();
                let gx = -2.0 * z * g / width;
                let gxx = (4.0 * z * z - 2.0) * g / (width * width);
                WeightDerivatives {
                    dt: 0.0,
                    grad: [gx, 0.0],
                    hess: [[gxx, 0.0], [0.0, 0.0]],
                }
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.f)(x, y, t)
    }

    /// Closed-form derivatives when supplied, otherwise central differences
    /// with step `1e-4·min(y, 1)` in space and `1e-5` in time.
    pub fn derivatives(&self, x: f64, y: f64, t: f64) -> WeightDerivatives {
        if let Some(d) = &self.exact {
            return d(x, y, t);
        }
        let f = |x: f64, y: f64| (self.f)(x, y, t);
        let h = 1e-4 * y.min(1.0);
        let f0 = f(x, y);
        let (fxp, fxm, fyp, fym) = (f(x + h, y), f(x - h, y), f(x, y + h), f(x, y - h));
        let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        let dt = if self.time_dependent {
            let k = 1e-5;
            ((self.f)(x, y, t + k) - (self.f)(x, y, t - k)) / (2.0 * k)
        } else {
            0.0
        };
        WeightDerivatives {
            dt,
            grad: [(fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h)],
            hess: [
                [(fxp - 2.0 * f0 + fxm) / (h * h), fxy],
                [fxy, (fyp - 2.0 * f0 + fym) / (h * h)],
            ],
        }
    }

    /// `∂_t f − Δf + ⟨∇_n∇f, n⟩` as a weight on positions and Euclidean
    /// unit normals, with hyperbolic Laplacian and Hessian.
    pub fn evolution_weight(&self, t: f64) -> Result<Weight> {
        let (a, b) = (self.clone(), self.clone());
        let base: ScalarField = Arc::new(move |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            let d = a.derivatives(x, y, t);
            d.dt - y * y * (d.hess[0][0] + d.hess[1][1])
        });
        let quadratic: QuadraticField = Arc::new(move |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            let d = b.derivatives(x, y, t);
            let mut q = Matrix3::zeros();
            for i in 0..2 {
                for j in 0..2 {
                    q[(i, j)] = y * y * d.hess[i][j];
                }
            }
            // y(e_y ⊗ ∇f + ∇f ⊗ e_y) − y f_y I
            q[(0, 1)] += y * d.grad[0];
            q[(1, 0)] += y * d.grad[0];
            q[(1, 1)] += 2.0 * y * d.grad[1];
            q[(0, 0)] -= y * d.grad[1];
            q[(1, 1)] -= y * d.grad[1];
            q
        });
        Weight::new(2, format!("evolution[{}]", self.label), Some(base), Some(quadratic))
    }

    /// Sampled `Σ_{i ≤ 2} sup |(y∇)^i f| + sup |∂_t f|` over a log band of
    /// heights and the given `x` range. A necessary-condition check only.
    pub fn scaled_derivative_bound(&self, x_range: (f64, f64), y_range: (f64, f64), t: f64) -> f64 {
        let mut terms = [0.0f64; 4];
        for i in 0..=16 {
            let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / 16.0;
            for j in 0..=16 {
                let y = (y_range.0.ln() + (y_range.1.ln() - y_range.0.ln()) * j as f64 / 16.0).exp();
                let d = self.derivatives(x, y, t);
                terms[0] = terms[0].max(self.value(x, y, t).abs());
                terms[1] = terms[1].max(y * d.grad[0].hypot(d.grad[1]));
                let hn = d.hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                terms[2] = terms[2].max(y * y * hn);
                terms[3] = terms[3].max(d.dt.abs());
            }
        }
        terms.iter().sum()
    }
}

struct AtTime<'a> {
    f: &'a SpaceTimeWeight,
    t: f64,
}

impl NodeWeight for AtTime<'_> {
    fn eval(&self, x: &[f64], y: f64, _normal: &[f64]) -> f64 {
        self.f.value(x[0], y, self.t)
    }
}

/// Quadrature tolerance for evolution weights built from finite differences,
/// whose round-off sits near `1e-8`.
const FD_WEIGHT_TOL: f64 = 1e-7;

/// The full weighted identity between the recorded rows nearest to `t` and
/// `s`, from the stored snapshots. With `f ≡ 1` this reproduces
/// `monotonicity_check`.
pub fn weighted_monotonicity_check(traj: &FlowTrajectory, f: &SpaceTimeWeight, t: f64, s: f64) -> Result<IdentityResidual> {
    let (i, j) = traj.span(t, s);
    let snaps = &traj.snapshots[i..=j];
    let settings = &traj.settings;
    let evolution_settings = EntropySettings {
        tol: if f.has_exact_derivatives() { settings.tol } else { settings.tol.max(FD_WEIGHT_TOL) },
        ..settings.clone()
    };
    let terms = snaps
        .par_iter()
        .map(|st| {
            let diss = st.weighted_dissipation(&|x, y| f.value(x, y, st.t))?;
            let evo = weighted_flow_entropy(st, &f.evolution_weight(st.t)?, &evolution_settings)?.value;
            Ok((diss, evo))
        })
        .collect::<Result<Vec<_>>>()?;
    let (first, last) = (&snaps[0], &snaps[snaps.len() - 1]);
    let e_t = weighted_flow_entropy(first, &AtTime { f, t: first.t }, settings)?.value;
    let e_s = weighted_flow_entropy(last, &AtTime { f, t: last.t }, settings)?.value;
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let diss: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let evo: Vec<f64> = terms.iter().map(|t| t.1).collect();
    Ok(identity(first.t, last.t, e_t - e_s, &times, &diss, &evo))
}

/// Write the trajectory as CSV with header
/// `t,E_rel,E_rel_error,dissipation,maxH,band`.
pub fn write_trajectory<W: Write>(out: W, traj: &FlowTrajectory) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["t", "E_rel", "E_rel_error", "dissipation", "maxH", "band"])?;
    for r in &traj.rows {
        w.write_record(
            [r.t, r.e_rel, r.e_rel_error, r.dissipation, r.max_h, r.band]
                .iter()
                .map(|v| format!("{v:.16e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Graph `u(t, y)` over `(0, Y]` for `∂_t u = y²u_yy/(1 + u_y²) − y u_y`,
/// with `u(0) = a` and `u(Y)` held at its initial value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearBoundaryGraph {
    /// Nodes `y_j = jΔy`, `j = 1…M`; the last one is the top.
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub a: f64,
    pub t: f64,
}

impl NearBoundaryGraph {
    /// `u = a + c·y²` on `m` nodes up to `top`.
    pub fn quadratic(a: f64, c: f64, top: f64, m: usize) -> Result<Self> {
        if m < 3 || !(top > 0.0 && top.is_finite()) {
            return invalid(format!("need m ≥ 3 nodes and a positive top, got m={m}, top={top}"));
        }
        let y: Vec<f64> = (1..=m).map(|j| top * j as f64 / m as f64).collect();
        let u = y.iter().map(|y| a + c * y * y).collect();
        Ok(Self { y, u, a, t: 0.0 })
    }

    pub fn spacing(&self) -> f64 {
        self.y[0]
    }

    /// `max_j |u_j − a| / y_j²`.
    pub fn barrier_constant(&self) -> f64 {
        self.y.iter().zip(&self.u).map(|(y, u)| (u - self.a).abs() / (y * y)).fold(0.0, f64::max)
    }

    /// `(1/λ) u(λ·)` on the grid `y/λ`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self {
            y: self.y.iter().map(|y| y / lambda).collect(),
            u: self.u.iter().map(|u| u / lambda).collect(),
            a: self.a / lambda,
            t: self.t,
        }
    }

    /// Semi-implicit step: diffusion coefficient lagged, transport implicit.
    pub fn step(&self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("time step must be positive, got {dt}"));
        }
        let m = self.y.len();
        let n = m - 1;
        let h = self.spacing();
        let at = |j: isize| if j < 0 { self.a } else { self.u[j as usize] };
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = self.u[..n].to_vec();
        for j in 0..n {
            let y = self.y[j];
            let p = (at(j as isize + 1) - at(j as isize - 1)) / (2.0 * h);
            let diff = y * y / (1.0 + p * p) / (h * h);
            let b = -y;
            let (mut lo, mut up) = (diff - b / (2.0 * h), diff + b / (2.0 * h));
            if lo < 0.0 || up < 0.0 {
                lo = diff + (-b).max(0.0) / h;
                up = diff + b.max(0.0) / h;
            }
            lower[j] = -dt * lo;
            upper[j] = -dt * up;
            diag[j] = 1.0 + dt * (lo + up);
        }
        rhs[0] -= lower[0] * self.a;
        rhs[n - 1] -= upper[n - 1] * self.u[m - 1];
        let mut next = thomas(&lower, &diag, &upper, &rhs);
        let scale = self.u.iter().map(|u| u.abs()).fold(self.a.abs(), f64::max).max(self.y[m - 1]);
        let max_update = next.iter().zip(&self.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !max_update.is_finite() || max_update > MAX_RELATIVE_UPDATE * scale {
            let suggested_dt = if max_update.is_finite() { 0.5 * dt * MAX_RELATIVE_UPDATE * scale / max_update } else { 0.1 * dt };
            return Err(Error::StepRejected { max_update, suggested_dt });
        }
        next.push(self.u[m - 1]);
        Ok(Self {
            y: self.y.clone(),
            u: next,
            a: self.a,
            t: self.t + dt,
        })
    }

    /// Advance to `t + duration` with steps of at most `dt`, returning the
    /// final graph and the largest barrier constant seen.
    pub fn evolve(&self, duration: f64, dt: f64) -> Result<(Self, f64)> {
        let mut g = self.clone();
        let mut barrier = g.barrier_constant();
        let steps = (duration / dt).ceil().max(0.0) as usize;
        for _ in 0..steps {
            g = g.step(duration / steps as f64)?;
            barrier = barrier.max(g.barrier_constant());
        }
        Ok((g, barrier))
    }
}

/// Outcome of the scaling comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphScaling {
    pub lambda: f64,
    /// `max_j |(1/λ) u(t, y_j) − u_λ(t, y_j/λ)|`.
    pub sup_difference: f64,
    pub barrier_initial: f64,
    /// Largest barrier constant of `u` along the run.
    pub barrier_max: f64,
    pub steps: usize,
}

/// Evolve `g` and its rescaling `(1/λ) g(λ·)` independently for `duration`
/// and compare them on matched grids.
pub fn graph_scaling_test(g: &NearBoundaryGraph, lambda: f64, duration: f64, dt: f64) -> Result<GraphScaling> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return invalid(format!("lambda must lie in (0, 1], got {lambda}"));
    }
    if !(dt > 0.0 && duration >= 0.0) {
        return invalid("need dt > 0 and a non-negative duration");
    }
    let scaled = g.rescaled(lambda);
    let (ru, rv) = rayon::join(|| g.evolve(duration, dt), || scaled.evolve(duration, dt));
    let (u, barrier_max) = ru?;
    let (v, _) = rv?;
    let sup_difference = u.u.iter().zip(&v.u).map(|(a, b)| (a / lambda - b).abs()).fold(0.0, f64::max);
    Ok(GraphScaling {
        lambda,
        sup_difference,
        barrier_initial: g.barrier_constant(),
        barrier_max,
        steps: (duration / dt).ceil() as usize,
    })
}
