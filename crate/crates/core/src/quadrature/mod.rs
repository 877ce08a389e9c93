//! Truncated hyperbolic areas `Vol_ε(Σ; r)` of parametrized hypersurfaces,
//! their weighted variants and smooth-cutoff versions.
//!
//! The truncated region `{r ≥ ε}` is located along each parameter line by
//! sampling `r` and bisecting every sign change of `r − ε` to machine
//! precision; the integrand is then smooth on every retained interval.

mod adaptive;
mod gauss;
mod immersion;

use std::f64::consts::TAU;

use rayon::prelude::*;

pub use adaptive::{integrate, Estimate};
pub use gauss::{gauss_legendre, CELL_ORDER};
pub use immersion::{
    Boundary, GeodesicArc, HemisphereProfile, Immersion, ImmersionUnion, Node, Profile, ProfilePoint, Revolution,
};

use crate::error::{invalid, Error, Result};
use crate::halfspace::DefiningFunction;

/// Default node budget of a single quadrature call.
pub const DEFAULT_BUDGET: usize = 1 << 20;

const LEVEL_SAMPLES: usize = 256;

/// Pointwise factor multiplying the hyperbolic area element.
pub trait NodeWeight: Sync {
    fn eval(&self, x: &[f64], y: f64, normal: &[f64]) -> f64;

    /// True if the weight is unchanged by rotations about the vertical
    /// line through `axis` (normals rotated along).
    fn rotation_invariant_about(&self, _axis: &[f64]) -> bool {
        false
    }
}

/// The constant weight 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeight;

impl NodeWeight for UnitWeight {
    fn eval(&self, _x: &[f64], _y: f64, _normal: &[f64]) -> f64 {
        1.0
    }

    fn rotation_invariant_about(&self, _axis: &[f64]) -> bool {
        true
    }
}

impl<F> NodeWeight for F
where
    F: Fn(&[f64], f64, &[f64]) -> f64 + Sync,
{
    fn eval(&self, x: &[f64], y: f64, normal: &[f64]) -> f64 {
        self(x, y, normal)
    }
}

/// Quintic smootherstep on `[0, 1]`, clamped outside.
#[inline]
pub fn smootherstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// Derivative of [`smootherstep`].
#[inline]
pub fn smootherstep_derivative(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (s - 1.0) * (s - 1.0)
}

/// Smooth cutoff `φ_{t1,t2,δ}`: 0 below `t1 − δ`, smootherstep up to 1 on
/// `[t1 − δ, t1]`, 1 on `[t1, t2]`, back down to 0 on `[t2, t2 + δ]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffProfile {
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
}

impl CutoffProfile {
    pub fn new(t1: f64, t2: f64, delta: f64) -> Result<Self> {
        let c = Self { t1, t2, delta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { t1, t2, delta } = *self;
        if !(delta > 0.0 && t1 - delta > 0.0 && t1 <= t2 && t2.is_finite()) {
            return invalid(format!("cutoff needs 0 < t1 - delta, t1 <= t2 and delta > 0 (got t1={t1}, t2={t2}, delta={delta})"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.t1 {
            smootherstep((t - (self.t1 - self.delta)) / self.delta)
        } else if t <= self.t2 {
            1.0
        } else {
            smootherstep((self.t2 + self.delta - t) / self.delta)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= self.t1 {
            smootherstep_derivative((t - (self.t1 - self.delta)) / self.delta) / self.delta
        } else if t <= self.t2 {
            0.0
        } else {
            -smootherstep_derivative((self.t2 + self.delta - t) / self.delta) / self.delta
        }
    }

    fn levels(&self) -> [f64; 4] {
        [self.t1 - self.delta, self.t1, self.t2, self.t2 + self.delta]
    }
}

/// Sharp truncation `{r ≥ ε}` or a smooth cutoff of `r`.
#[derive(Clone, Copy)]
enum Window<'a> {
    Sharp(f64),
    Smooth(&'a CutoffProfile),
}

impl Window<'_> {
    fn levels(&self) -> Vec<f64> {
        match self {
            Window::Sharp(eps) => vec![*eps],
            Window::Smooth(c) => c.levels().to_vec(),
        }
    }

    fn keeps(&self, r: f64) -> bool {
        match self {
            Window::Sharp(eps) => r >= *eps,
            Window::Smooth(c) => r > c.t1 - c.delta && r < c.t2 + c.delta,
        }
    }

    fn factor(&self, r: f64) -> f64 {
        match self {
            Window::Sharp(_) => 1.0,
            Window::Smooth(c) => c.value(r),
        }
    }
}

fn r_at(s: &dyn Immersion, r: &DefiningFunction, ideal: &[f64], t: f64, phi: f64) -> f64 {
    if ideal.iter().any(|&q| q == t) {
        return 0.0;
    }
    let n = s.node(t, phi);
    r.eval_xy(&n.x, n.y)
}

fn bisect_level(s: &dyn Immersion, r: &DefiningFunction, ideal: &[f64], phi: f64, level: f64, mut lo: f64, mut hi: f64) -> f64 {
    let below_lo = r_at(s, r, ideal, lo, phi) < level;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if (r_at(s, r, ideal, mid, phi) < level) == below_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integral along the parameter line at azimuth `phi` of
/// `window(r)·w·jacobian / y^dim` over the window's support.
fn line_integral(
    s: &dyn Immersion,
    r: &DefiningFunction,
    window: Window<'_>,
    w: &dyn NodeWeight,
    phi: f64,
    tol: f64,
    budget: usize,
) -> Result<Estimate> {
    let (a, b) = s.domain();
    let ideal = s.ideal_params();
    let breaks: Vec<f64> = s.breakpoints().into_iter().filter(|t| *t > a && *t < b).collect();

    let mut grid: Vec<f64> = (0..=LEVEL_SAMPLES)
        .map(|i| a + (b - a) * i as f64 / LEVEL_SAMPLES as f64)
        .chain(breaks.iter().copied())
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&t| r_at(s, r, &ideal, t, phi)).collect();

    let mut cuts = vec![a, b];
    cuts.extend(breaks.iter().copied());
    for level in window.levels() {
        for i in 0..grid.len() - 1 {
            if (values[i] < level) != (values[i + 1] < level) {
                cuts.push(bisect_level(s, r, &ideal, phi, level, grid[i], grid[i + 1]));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // maximal runs of retained intervals
    let mut runs: Vec<Vec<f64>> = Vec::new();
    let mut open = false;
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if !(hi > lo) {
            continue;
        }
        let kept = window.keeps(r_at(s, r, &ideal, 0.5 * (lo + hi), phi));
        if kept {
            if open {
                runs.last_mut().expect("open run").push(hi);
            } else {
                runs.push(vec![lo, hi]);
                open = true;
            }
        } else {
            open = false;
        }
    }
    if runs.is_empty() {
        return Ok(Estimate::ZERO);
    }

    let dim = s.dimension() as i32;
    let mut f = |t: f64| {
        let n = s.node(t, phi);
        let rv = r.eval_xy(&n.x, n.y);
        window.factor(rv) * w.eval(&n.x, n.y, &n.normal) * n.jacobian / n.y.powi(dim)
    };
    let share = tol / runs.len() as f64;
    let mut total = Estimate::ZERO;
    for run in &runs {
        let remaining = budget.saturating_sub(total.nodes);
        match integrate(&mut f, run, share, remaining) {
            Ok(e) => total = total.add(e),
            Err(Error::BudgetExceeded { value, error, nodes, .. }) => {
                return Err(Error::BudgetExceeded {
                    value: total.value + value,
                    error: total.error_bound + error,
                    tol,
                    nodes: total.nodes + nodes,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(total)
}

fn windowed(
    s: &dyn Immersion,
    r: &DefiningFunction,
    window: Window<'_>,
    w: &dyn NodeWeight,
    tol: f64,
    budget: usize,
) -> Result<Estimate> {
    r.validate()?;
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    match s.dimension() {
        1 => line_integral(s, r, window, w, 0.0, tol, budget),
        2 => {
            let axis = s.rotation_axis();
            let symmetric = axis.is_some_and(|ax| r.is_rotation_invariant_about(&ax) && w.rotation_invariant_about(&ax));
            if symmetric {
                let e = line_integral(s, r, window, w, 0.0, tol / TAU, budget)?;
                return Ok(Estimate {
                    value: TAU * e.value,
                    error_bound: TAU * e.error_bound,
                    nodes: e.nodes,
                });
            }
            let inner_tol = 0.25 * tol / TAU;
            let mut nodes = 0usize;
            let mut inner_err = 0.0f64;
            let mut failure: Option<Error> = None;
            let mut outer = |phi: f64| -> f64 {
                if failure.is_some() {
                    return 0.0;
                }
                match line_integral(s, r, window, w, phi, inner_tol, budget.saturating_sub(nodes)) {
                    Ok(e) => {
                        nodes += e.nodes;
                        inner_err = inner_err.max(e.error_bound);
                        e.value
                    }
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            };
            let e = integrate(&mut outer, &[0.0, 0.25 * TAU, 0.5 * TAU, 0.75 * TAU, TAU], 0.75 * tol, usize::MAX)?;
            if let Some(err) = failure {
                return Err(err);
            }
            Ok(Estimate {
                value: e.value,
                error_bound: e.error_bound + TAU * inner_err,
                nodes,
            })
        }
        d => invalid(format!("unsupported immersion dimension {d}")),
    }
}

/// Truncated hyperbolic area (length for curves) of `s ∩ {r ≥ ε}`.
///
/// Returns zero when the truncated set is empty.
pub fn vol_eps(s: &dyn Immersion, r: &DefiningFunction, eps: f64, tol: f64) -> Result<Estimate> {
    vol_eps_with_budget(s, r, eps, tol, DEFAULT_BUDGET)
}

pub fn vol_eps_with_budget(s: &dyn Immersion, r: &DefiningFunction, eps: f64, tol: f64, budget: usize) -> Result<Estimate> {
    check_eps(eps)?;
    windowed(s, r, Window::Sharp(eps), &UnitWeight, tol, budget)
}

/// `∫_{s ∩ {r ≥ ε}} ψ(p, v) dμ_H` with `v` the Euclidean unit normal.
pub fn weighted_vol_eps(s: &dyn Immersion, r: &DefiningFunction, eps: f64, psi: &dyn NodeWeight, tol: f64) -> Result<Estimate> {
    check_eps(eps)?;
    windowed(s, r, Window::Sharp(eps), psi, tol, DEFAULT_BUDGET)
}

/// `∫_s φ(r) dμ_H` for a smooth cutoff profile `φ`.
pub fn cutoff_vol(s: &dyn Immersion, r: &DefiningFunction, c: &CutoffProfile, tol: f64) -> Result<Estimate> {
    c.validate()?;
    windowed(s, r, Window::Smooth(c), &UnitWeight, tol, DEFAULT_BUDGET)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("truncation level must be positive, got {eps}"));
    }
    Ok(())
}

/// Truncated differences `Vol_ε(s1) − Vol_ε(s2)` over a grid of `ε`,
/// evaluated in parallel. Rows are `(ε, Δ, error bound)` in grid order.
pub fn truncated_differences(
    s1: &dyn Immersion,
    s2: &dyn Immersion,
    r: &DefiningFunction,
    psi: &dyn NodeWeight,
    eps: &[f64],
    tol: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if !s1.boundary().matches(&s2.boundary()) {
        return Err(Error::IncomparableConfigs(format!(
            "ideal boundaries differ: {:?} vs {:?}",
            s1.boundary(),
            s2.boundary()
        )));
    }
    eps.par_iter()
        .map(|&e| {
            let a = weighted_vol_eps(s1, r, e, psi, 0.5 * tol)?;
            let b = weighted_vol_eps(s2, r, e, psi, 0.5 * tol)?;
            Ok((e, a.value - b.value, a.error_bound + b.error_bound))
        })
        .collect()
}

/// `Vol_ε` over a grid of `ε`, evaluated in parallel, in grid order.
pub fn vol_eps_sweep(s: &dyn Immersion, r: &DefiningFunction, eps: &[f64], tol: f64) -> Result<Vec<Estimate>> {
    eps.par_iter().map(|&e| vol_eps(s, r, e, tol)).collect()
}
