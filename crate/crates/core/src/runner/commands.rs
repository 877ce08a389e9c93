//! The eight experiments.

use std::f64::consts::TAU;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_parameters, to_value, Check, Outcome};
use crate::error::{Error, Result};
use crate::expansion::{entropy_limit, fit_expansion_with_tail, geometric_grid, write_samples, EntropyEstimate, Sample, Term};
use crate::flow::{
    graph_scaling_test, monotonicity_check, run_flow, weighted_monotonicity_check, write_trajectory, FlowConfig, NearBoundaryGraph,
    RadialCurveState, SpaceTimeWeight,
};
use crate::geodesics::{relative_entropy_exact, GeodesicConfig};
use crate::halfspace::{log_spaced, normal_field_rates, DefiningFunction, MobiusMap, NormalField};
use crate::minimal::{
    alexakis_mazzeo_area, mean_curvature_defect, profile_ode_residual, renormalized_area_fit, separation_rate, shoot_catenoid,
    write_landing_trace, write_profile, RevolutionSurface, Separation, ShootingControls,
};
use crate::quadrature::{truncated_differences, vol_eps_sweep, HemisphereProfile, ImmersionUnion, Revolution, UnitWeight};
use crate::weights::{
    basis_decomposition_defect, polarization_defect, quadratic_reduction, weighted_entropy, SampleSpec, Weight, WeightedEntropy,
};

/// Geometric truncation grid `hi, hi·ratio, …` down to `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub hi: f64,
    pub lo: f64,
    pub ratio: f64,
}

impl GridSpec {
    pub fn grid(&self, scale: f64) -> Result<Vec<f64>> {
        geometric_grid(self.hi * scale, self.lo * scale, self.ratio)
    }
}

/// `count` log-spaced values in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn buffer(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    f(&mut out)?;
    Ok(out)
}

fn default_endpoints() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 4.0]
}

fn default_first() -> Vec<[usize; 2]> {
    vec![[0, 1], [2, 3]]
}

fn default_second() -> Vec<[usize; 2]> {
    vec![[0, 2], [1, 3]]
}

fn configs(endpoints: &[f64], first: &[[usize; 2]], second: &[[usize; 2]]) -> Result<(GeodesicConfig, GeodesicConfig)> {
    let pairs = |p: &[[usize; 2]]| p.iter().map(|q| (q[0], q[1])).collect::<Vec<_>>();
    let a = GeodesicConfig::new(endpoints.to_vec(), pairs(first))?;
    let b = GeodesicConfig::new(endpoints.to_vec(), pairs(second))?;
    Ok((a, b))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

/// Richardson limit of the truncated length differences of two geodesic
/// configurations.
fn numeric_entropy(c1: &GeodesicConfig, c2: &GeodesicConfig, r: &DefiningFunction, eps: &[f64], tol: f64) -> Result<(EntropyEstimate, Vec<Sample>)> {
    let (u1, u2) = (ImmersionUnion::from_config(c1), ImmersionUnion::from_config(c2));
    let samples: Vec<Sample> = truncated_differences(&u1, &u2, r, &UnitWeight, eps, tol)?.into_iter().map(Into::into).collect();
    Ok((entropy_limit(&samples)?, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicEntropyParams {
    pub endpoints: Vec<f64>,
    pub first: Vec<[usize; 2]>,
    pub second: Vec<[usize; 2]>,
    pub defining: DefiningFunction,
    pub grid: GridSpec,
    pub tol: f64,
    pub tolerance: f64,
    pub time_limit: f64,
}

impl Default for GeodesicEntropyParams {
    fn default() -> Self {
        Self {
            endpoints: default_endpoints(),
            first: default_first(),
            second: default_second(),
            defining: DefiningFunction::Height,
            grid: GridSpec { hi: 0.3, lo: 1e-3, ratio: 0.8 },
            tol: 1e-11,
            tolerance: 1e-6,
            time_limit: 5.0,
        }
    }
}

pub(crate) fn geodesic_entropy(raw: Option<&Value>) -> Result<Outcome> {
    let p: GeodesicEntropyParams = parse_parameters(raw)?;
    p.defining.validate()?;
    positive("tol", p.tol)?;
    let start = Instant::now();
    let (c1, c2) = configs(&p.endpoints, &p.first, &p.second)?;
    let exact = relative_entropy_exact(&c1, &c2)?;
    let (estimate, samples) = numeric_entropy(&c1, &c2, &p.defining, &p.grid.grid(1.0)?, p.tol)?;
    let elapsed = start.elapsed().as_secs_f64();
    let deviation = (estimate.value - exact).abs();
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks: vec![
            Check::at_most("entropy_matches_closed_form", deviation, p.tolerance),
            Check::timed("runtime_seconds", elapsed, p.time_limit),
        ],
        results: json!({ "exact": exact, "estimate": estimate, "deviation": deviation }),
        files: vec![("differences.csv".into(), buffer(|b| write_samples(b, &samples))?)],
        timings: vec![("entropy".into(), elapsed)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceParams {
    pub endpoints: Vec<f64>,
    pub first: Vec<[usize; 2]>,
    pub second: Vec<[usize; 2]>,
    pub alpha: f64,
    pub beta: f64,
    /// Center of the scaled defining function; the midpoint of the
    /// endpoints if absent.
    pub scaled_center: Option<f64>,
    /// Truncation grid in units of the smallest geodesic radius.
    pub relative_grid: GridSpec,
    /// Möbius maps `(a, b, c, d)`, `x ↦ (ax + b)/(cx + d)`.
    pub maps: Vec<[f64; 4]>,
    pub tol: f64,
    pub defining_tolerance: f64,
    pub mobius_tolerance: f64,
}

impl Default for InvarianceParams {
    fn default() -> Self {
        Self {
            endpoints: default_endpoints(),
            first: default_first(),
            second: default_second(),
            alpha: 1.0,
            beta: 0.3,
            scaled_center: None,
            relative_grid: GridSpec { hi: 0.02, lo: 2e-4, ratio: 0.5 },
            maps: vec![
                [2.0, 1.0, 0.0, 1.0],
                [1.0, -3.0, 0.0, 1.0],
                [1.0, 0.0, 0.1, 1.0],
                [1.0, 0.0, -0.2, 1.0],
                [0.0, -1.0, 1.0, 5.0],
                [3.0, 1.0, 1.0, 2.0],
                [1.0, 2.0, -0.1, 1.0],
                [0.5, 0.0, 0.0, 2.0],
                [2.0, -1.0, 1.0, 3.0],
                [1.0, 0.5, 0.05, 1.5],
            ],
            tol: 1e-11,
            defining_tolerance: 1e-4,
            mobius_tolerance: 1e-6,
        }
    }
}

fn relative_entropy(c1: &GeodesicConfig, c2: &GeodesicConfig, r: &DefiningFunction, grid: &GridSpec, tol: f64) -> Result<EntropyEstimate> {
    let scale = c1.min_radius().min(c2.min_radius());
    Ok(numeric_entropy(c1, c2, r, &grid.grid(scale)?, tol)?.0)
}

pub(crate) fn invariance(raw: Option<&Value>) -> Result<Outcome> {
    let p: InvarianceParams = parse_parameters(raw)?;
    positive("tol", p.tol)?;
    let (c1, c2) = configs(&p.endpoints, &p.first, &p.second)?;
    let exact = relative_entropy_exact(&c1, &c2)?;
    let mid = 0.5 * (p.endpoints[0] + p.endpoints[p.endpoints.len() - 1]);
    let family = [
        DefiningFunction::Height,
        DefiningFunction::scaled(&[p.scaled_center.unwrap_or(mid)], p.alpha)?,
        DefiningFunction::tilted(p.beta)?,
    ];
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for r in &family {
        let e = relative_entropy(&c1, &c2, r, &p.relative_grid, p.tol)?;
        rows.push(vec!["defining".into(), r.label(), num(e.value), num(e.error_bar), num(exact)]);
        estimates.push(e.value);
    }
    let mut pairwise = 0.0f64;
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            pairwise = pairwise.max((estimates[i] - estimates[j]).abs());
        }
    }
    let from_exact = estimates.iter().map(|e| (e - exact).abs()).fold(0.0, f64::max);

    let base = estimates[0];
    let mut mobius = 0.0f64;
    let mut mobius_exact = 0.0f64;
    for m in &p.maps {
        let map = MobiusMap::new(m[0], m[1], m[2], m[3]).map_err(|e| Error::Config(format!("map {m:?}: {e}")))?;
        let (t1, t2) = (c1.transformed(&map)?, c2.transformed(&map)?);
        let e = relative_entropy(&t1, &t2, &DefiningFunction::Height, &p.relative_grid, p.tol)?;
        let ex = relative_entropy_exact(&t1, &t2)?;
        mobius = mobius.max((e.value - base).abs());
        mobius_exact = mobius_exact.max((ex - exact).abs());
        let label = format!("{} {} {} {}", m[0], m[1], m[2], m[3]);
        rows.push(vec!["mobius".into(), label, num(e.value), num(e.error_bar), num(ex)]);
    }
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks: vec![
            Check::at_most("defining_functions_agree", pairwise, p.defining_tolerance),
            Check::at_most("defining_functions_match_closed_form", from_exact, p.defining_tolerance),
            Check::at_most("mobius_invariance", mobius, p.mobius_tolerance),
            Check::at_most("mobius_invariance_closed_form", mobius_exact, p.mobius_tolerance),
        ],
        results: json!({
            "exact": exact,
            "estimates": estimates,
            "max_pairwise_deviation": pairwise,
            "max_deviation_from_exact": from_exact,
            "maps": p.maps.len(),
            "max_mobius_deviation": mobius,
        }),
        files: vec![("invariance.csv".into(), csv_bytes(&["kind", "label", "entropy", "error_bar", "exact"], &rows)?)],
        timings: vec![],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HemisphereParams {
    pub radius: f64,
    /// Truncation grid in units of the radius.
    pub relative_grid: GridSpec,
    pub tail: u32,
    pub tol: f64,
    /// Relative tolerance on the `1/ε` coefficient.
    pub c0_tolerance: f64,
    pub c2_tolerance: f64,
}

impl Default for HemisphereParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            relative_grid: GridSpec { hi: 0.3, lo: 1e-3, ratio: 0.8 },
            tail: 2,
            tol: 1e-11,
            c0_tolerance: 1e-6,
            c2_tolerance: 1e-3,
        }
    }
}

pub(crate) fn hemisphere(raw: Option<&Value>) -> Result<Outcome> {
    let p: HemisphereParams = parse_parameters(raw)?;
    positive("radius", p.radius)?;
    positive("tol", p.tol)?;
    let surface = Revolution::new(HemisphereProfile { radius: p.radius });
    let eps = p.relative_grid.grid(p.radius)?;
    let samples: Vec<Sample> = vol_eps_sweep(&surface, &DefiningFunction::Height, &eps, p.tol)?
        .into_iter()
        .zip(&eps)
        .map(|(v, &e)| Sample::new(e, v.value, v.error_bound))
        .collect();
    let fit = fit_expansion_with_tail(&samples, 2, p.tail)?;
    let c0 = fit.coefficient(Term::InversePower(1)).unwrap_or(f64::NAN);
    let c2 = fit.constant_term;
    let c0_rel = (c0 - TAU * p.radius).abs() / (TAU * p.radius);
    let c2_dev = (c2 + TAU).abs();
    let closed_form = samples
        .iter()
        .map(|s| (s.value - TAU * (p.radius / s.eps - 1.0)).abs())
        .fold(0.0, f64::max);
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks: vec![
            Check::at_most("c0_relative_error", c0_rel, p.c0_tolerance),
            Check::at_most("renormalized_area_error", c2_dev, p.c2_tolerance),
        ],
        results: json!({ "c0": c0, "c2": c2, "fit": fit, "max_closed_form_deviation": closed_form }),
        files: vec![("area_samples.csv".into(), buffer(|b| write_samples(b, &samples))?)],
        timings: vec![],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatenoidParams {
    pub r1: f64,
    pub r2: f64,
    pub controls: ShootingControls,
    pub tail: u32,
    /// The grid starts at `min(grid_hi_cap, grid_hi_fraction · height)`
    /// with `height` the lowest apex of the surfaces found.
    pub grid_hi_fraction: f64,
    pub grid_hi_cap: f64,
    pub grid_lo: f64,
    pub grid_ratio: f64,
    pub tol: f64,
    pub profile_samples: usize,
    /// Relative tolerance of the fit against the curvature identity.
    pub area_tolerance: f64,
    pub c0_tolerance: f64,
    pub ode_tolerance: f64,
    pub curvature_tolerance: f64,
}

impl Default for CatenoidParams {
    fn default() -> Self {
        Self {
            r1: 1.0,
            r2: 2.0,
            controls: ShootingControls::default(),
            tail: 4,
            grid_hi_fraction: 0.25,
            grid_hi_cap: 0.3,
            grid_lo: 1e-3,
            grid_ratio: 0.8,
            tol: 1e-9,
            profile_samples: 200,
            area_tolerance: 1e-2,
            c0_tolerance: 1e-6,
            ode_tolerance: 1e-8,
            curvature_tolerance: 1e-6,
        }
    }
}

fn catenoid_grid(p: &CatenoidParams, surfaces: &[RevolutionSurface]) -> Result<Vec<f64>> {
    let h = surfaces.iter().map(|s| s.max_height()).fold(f64::INFINITY, f64::min);
    geometric_grid((p.grid_hi_fraction * h).min(p.grid_hi_cap), p.grid_lo, p.grid_ratio)
}

pub(crate) fn catenoid(raw: Option<&Value>) -> Result<Outcome> {
    let p: CatenoidParams = parse_parameters(raw)?;
    p.controls.validate()?;
    positive("tol", p.tol)?;
    let shot = shoot_catenoid(p.r1, p.r2, &p.controls)?;
    let mut checks = Vec::new();
    let mut files = vec![("landing_trace.csv".to_string(), buffer(|b| write_landing_trace(b, &shot.trace))?)];
    let mut per_surface = Vec::new();
    let mut c2 = Vec::new();
    let mut unc = Vec::new();
    let grid = if shot.surfaces.is_empty() { Vec::new() } else { catenoid_grid(&p, &shot.surfaces)? };
    let c0_want = TAU * (p.r1 + p.r2);
    for (k, s) in shot.surfaces.iter().enumerate() {
        let ode = profile_ode_residual(s, p.profile_samples);
        let mc = mean_curvature_defect(s, p.profile_samples);
        let am = alexakis_mazzeo_area(s)?;
        let fit = renormalized_area_fit(s, &DefiningFunction::Height, &grid, p.tail, p.tol)?;
        let c0 = fit.fit.coefficient(Term::InversePower(1)).unwrap_or(f64::NAN);
        let rel = (fit.fit.constant_term - am.area).abs() / am.area.abs();
        checks.push(Check::at_most(format!("surface_{k}_ode_residual"), ode, p.ode_tolerance));
        checks.push(Check::at_most(format!("surface_{k}_mean_curvature"), mc, p.curvature_tolerance));
        checks.push(Check::at_most(format!("surface_{k}_c0_relative_error"), (c0 - c0_want).abs() / c0_want, p.c0_tolerance));
        checks.push(Check::at_most(format!("surface_{k}_area_identity"), rel, p.area_tolerance));
        files.push((format!("profile_{k}.csv"), buffer(|b| write_profile(b, &s.profile_samples(p.profile_samples)))?));
        files.push((format!("area_samples_{k}.csv"), buffer(|b| write_samples(b, &fit.samples))?));
        per_surface.push(json!({
            "a3": s.a3(),
            "max_height": s.max_height(),
            "c0": c0,
            "c2": fit.fit.constant_term,
            "uncertainty": fit.uncertainty,
            "curvature_identity_area": am.area,
            "euler_characteristic": am.euler_characteristic,
            "ode_residual": ode,
            "mean_curvature_defect": mc,
        }));
        c2.push(fit.fit.constant_term);
        unc.push(fit.uncertainty);
    }
    let mut pair = Value::Null;
    if shot.surfaces.len() == 2 {
        let (a, b) = (&shot.surfaces[0], &shot.surfaces[1]);
        let samples: Vec<Sample> = truncated_differences(a, b, &DefiningFunction::Height, &UnitWeight, &grid, p.tol)?
            .into_iter()
            .map(Into::into)
            .collect();
        let e = entropy_limit(&samples)?;
        let gap = (e.value - (c2[0] - c2[1])).abs();
        let bar = e.error_bar + unc[0] + unc[1];
        checks.push(Check::at_most("pair_entropy_matches_area_difference", gap, bar));
        files.push(("differences.csv".into(), buffer(|b| write_samples(b, &samples))?));
        pair = json!({ "entropy": e, "area_difference": c2[0] - c2[1], "deviation": gap, "combined_error_bar": bar });
    }
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks,
        results: json!({ "surfaces": per_surface, "pair": pair, "scan_half_width": shot.half_width }),
        files,
        timings: vec![],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationParams {
    pub r1: f64,
    pub r2: f64,
    pub controls: ShootingControls,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for SeparationParams {
    fn default() -> Self {
        Self {
            r1: 1.0,
            r2: 2.0,
            controls: ShootingControls::default(),
            slope_min: 2.7,
            slope_max: 3.3,
        }
    }
}

pub(crate) fn separation(raw: Option<&Value>) -> Result<Outcome> {
    let p: SeparationParams = parse_parameters(raw)?;
    p.controls.validate()?;
    let shot = shoot_catenoid(p.r1, p.r2, &p.controls)?;
    if shot.surfaces.len() != 2 {
        return Err(Error::Config(format!(
            "radii {} and {} bound {} minimal annuli, need two",
            p.r1,
            p.r2,
            shot.surfaces.len()
        )));
    }
    let sep = separation_rate(&shot.surfaces[0], &shot.surfaces[1])?;
    let (check, rows) = match &sep {
        Separation::Exponent { slope, heights, gaps } => (
            Check::within("separation_slope", *slope, p.slope_min, p.slope_max),
            heights.iter().zip(gaps).map(|(h, g)| vec![num(*h), num(*g)]).collect::<Vec<_>>(),
        ),
        Separation::ExactCoincidence => (Check::within("separation_slope", f64::INFINITY, p.slope_min, p.slope_max), Vec::new()),
    };
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks: vec![check],
        results: json!({ "separation": sep }),
        files: vec![("separation.csv".into(), csv_bytes(&["height", "gap"], &rows)?)],
        timings: vec![],
    })
}

/// A bump weight `f(x) = exp(−(x − x0)²/width²)` for the weighted identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub x0: f64,
    pub width: f64,
    /// The identity is checked on `[0, until]`.
    pub until: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McfParams {
    pub center: f64,
    pub r0: f64,
    pub nodes: usize,
    pub amplitude: f64,
    pub flow: FlowConfig,
    pub stationary_steps: usize,
    pub weight: Option<BumpSpec>,
    pub monotonicity_tolerance: f64,
    pub identity_tolerance: f64,
    pub weighted_identity_tolerance: f64,
    pub stationary_tolerance: f64,
    pub band_tolerance: f64,
    pub time_limit: f64,
}

impl Default for McfParams {
    fn default() -> Self {
        Self {
            center: 0.0,
            r0: 1.0,
            nodes: 400,
            amplitude: 0.1,
            flow: FlowConfig::default(),
            stationary_steps: 1000,
            weight: Some(BumpSpec { x0: 0.3, width: 0.6, until: 0.5 }),
            monotonicity_tolerance: 1e-8,
            identity_tolerance: 1e-2,
            weighted_identity_tolerance: 5e-2,
            stationary_tolerance: 1e-12,
            band_tolerance: 1e-15,
            time_limit: 60.0,
        }
    }
}

pub(crate) fn mcf(raw: Option<&Value>) -> Result<Outcome> {
    let p: McfParams = parse_parameters(raw)?;
    p.flow.validate()?;
    let start = Instant::now();
    let initial = RadialCurveState::perturbed(p.center, p.r0, p.nodes, p.amplitude)?;
    let traj = run_flow(&initial, &p.flow)?;
    let elapsed = start.elapsed().as_secs_f64();
    let t_end = traj.rows.last().map_or(0.0, |r| r.t);
    let identity = monotonicity_check(&traj, 0.0, t_end);

    let mut fixed = RadialCurveState::stationary(p.center, p.r0, p.nodes)?;
    let dt = p.flow.dt_factor * fixed.dtheta().powi(2);
    for _ in 0..p.stationary_steps {
        fixed = fixed.step(dt)?;
    }
    let drift = fixed.band();

    let mut checks = vec![
        Check::at_most("entropy_nonincreasing", traj.max_entropy_increase(), p.monotonicity_tolerance),
        Check::at_most("identity_relative_residual", identity.relative, p.identity_tolerance),
        Check::at_most("band_growth", traj.meta.max_band_growth, p.band_tolerance),
        Check::at_most("stationary_drift", drift, p.stationary_tolerance),
        Check::timed("runtime_seconds", elapsed, p.time_limit),
    ];
    let mut weighted = Value::Null;
    if let Some(b) = p.weight {
        positive("weight.width", b.width)?;
        let f = SpaceTimeWeight::bump(b.x0, b.width);
        let r = weighted_monotonicity_check(&traj, &f, 0.0, b.until.min(t_end))?;
        checks.push(Check::at_most("weighted_identity_relative_residual", r.relative, p.weighted_identity_tolerance));
        weighted = to_value(&r)?;
    }
    let first = traj.rows.first().map(|r| r.e_rel);
    let last = traj.rows.last().map(|r| r.e_rel);
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks,
        results: json!({
            "meta": traj.meta,
            "initial_entropy": first,
            "final_entropy": last,
            "identity": identity,
            "weighted_identity": weighted,
            "stationary_band": drift,
        }),
        files: vec![("trajectory.csv".into(), buffer(|b| write_trajectory(b, &traj))?)],
        timings: vec![("flow".into(), elapsed)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingParams {
    /// Boundary value `u(0)`.
    pub a: f64,
    /// Initial data `u = a + c·y²`.
    pub c: f64,
    pub top: f64,
    pub nodes: usize,
    pub lambda: f64,
    pub duration: f64,
    pub dt: f64,
    pub tolerance: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 1.5,
            top: 1.0,
            nodes: 200,
            lambda: 0.5,
            duration: 0.2,
            dt: 1e-3,
            tolerance: 1e-6,
        }
    }
}

pub(crate) fn scaling_test(raw: Option<&Value>) -> Result<Outcome> {
    let p: ScalingParams = parse_parameters(raw)?;
    let g = NearBoundaryGraph::quadratic(p.a, p.c, p.top, p.nodes)?;
    let s = graph_scaling_test(&g, p.lambda, p.duration, p.dt)?;
    let (u, _) = g.evolve(p.duration, p.dt)?;
    let (v, _) = g.rescaled(p.lambda).evolve(p.duration, p.dt)?;
    let rows: Vec<Vec<String>> = (0..g.y.len())
        .map(|j| vec![num(g.y[j]), num(g.u[j]), num(u.u[j]), num(v.y[j]), num(v.u[j])])
        .collect();
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks: vec![
            Check::at_most("scaling_sup_difference", s.sup_difference, p.tolerance),
            Check::at_most("barrier_constant", s.barrier_max, s.barrier_initial * (1.0 + 1e-12)),
        ],
        results: to_value(&s)?,
        files: vec![("graphs.csv".into(), csv_bytes(&["y", "u_initial", "u_final", "y_scaled", "u_scaled_final"], &rows)?)],
        timings: vec![],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightedParams {
    pub endpoints: Vec<f64>,
    pub first: Vec<[usize; 2]>,
    pub second: Vec<[usize; 2]>,
    pub grid: GridSpec,
    pub tol: f64,
    pub samples: SampleSpec,
    /// Background semicircle `(center, radius)`; the first geodesic of
    /// `first` if absent.
    pub background: Option<[f64; 2]>,
    pub reduction_eps: f64,
    /// Coefficients of the linear combination of the two test weights.
    pub linearity: [f64; 2],
    pub normal_heights: LogRange,
    pub linearity_tolerance: f64,
    pub reduction_tolerance: f64,
    pub identity_tolerance: f64,
    pub tail_slope_min: f64,
    pub height_slope_min: f64,
    pub divergence_slope_min: f64,
}

impl Default for WeightedParams {
    fn default() -> Self {
        Self {
            endpoints: default_endpoints(),
            first: default_first(),
            second: default_second(),
            grid: GridSpec { hi: 0.05, lo: 1e-3, ratio: 0.5 },
            tol: 1e-11,
            samples: SampleSpec::default(),
            background: None,
            reduction_eps: crate::weights::DEFAULT_REDUCTION_EPS,
            linearity: [2.0, -0.5],
            normal_heights: LogRange { lo: 1e-6, hi: 1e-1, count: 11 },
            linearity_tolerance: 1e-8,
            reduction_tolerance: 1e-10,
            identity_tolerance: 1e-12,
            tail_slope_min: 1.0,
            height_slope_min: 1.9,
            divergence_slope_min: 0.9,
        }
    }
}

fn entropy_rows(label: &str, w: &WeightedEntropy, rows: &mut Vec<Vec<String>>) {
    for s in &w.samples {
        rows.push(vec![label.to_string(), num(s.eps), num(s.value), num(s.error_bound)]);
    }
}

pub(crate) fn weighted(raw: Option<&Value>) -> Result<Outcome> {
    let p: WeightedParams = parse_parameters(raw)?;
    p.samples.validate()?;
    positive("tol", p.tol)?;
    let (c1, c2) = configs(&p.endpoints, &p.first, &p.second)?;
    let (u1, u2) = (ImmersionUnion::from_config(&c1), ImmersionUnion::from_config(&c2));
    let eps = p.grid.grid(1.0)?;
    let r = DefiningFunction::Height;

    let unit = Weight::unit(2)?;
    let w1 = Weight::vertical_square(2)?;
    let w2 = Weight::height(2)?;
    let [a, b] = p.linearity;
    let combo = w1.combine(a, &w2, b)?;
    let e_unit = weighted_entropy(&u1, &u2, &unit, &r, &eps, p.tol)?;
    let e1 = weighted_entropy(&u1, &u2, &w1, &r, &eps, p.tol)?;
    let e2 = weighted_entropy(&u1, &u2, &w2, &r, &eps, p.tol)?;
    let e12 = weighted_entropy(&u1, &u2, &combo, &r, &eps, p.tol)?;
    let reduction = (e_unit.estimate.value - e_unit.unweighted.value).abs();
    let linearity = (e12.estimate.value - a * e1.estimate.value - b * e2.estimate.value).abs();
    let tail = e1.tail_slope.unwrap_or(f64::NAN);

    let g = c1.geodesics()[0];
    let [center, radius] = p.background.unwrap_or([g.center(), g.radius()]);
    let background = NormalField::new(center, radius)?;
    let points: Vec<Vec<f64>> = p
        .samples
        .points(2)
        .into_iter()
        .filter(|q| q[1] < 0.5 * p.reduction_eps && (q[0] - center).hypot(q[1]) > 0.0)
        .collect();
    let mut gradient = 0.0f64;
    let mut polarization = 0.0f64;
    for w in [&w1, &w2, &combo] {
        let red = quadratic_reduction(w, &background, p.reduction_eps)?;
        for q in &points {
            gradient = gradient.max(red.reduced_gradient(q)?);
            let (y, n) = (red.y_psi(q)?, red.background_normal(q)?);
            for v in p.samples.directions(2) {
                polarization = polarization.max(polarization_defect(&y, &n, &v).abs());
            }
        }
    }
    let basis = p
        .samples
        .directions(2)
        .iter()
        .map(|v| basis_decomposition_defect(1.7, v).abs())
        .fold(0.0, f64::max);

    let hr = &p.normal_heights;
    let rates = normal_field_rates(&background, &log_spaced(hr.lo, hr.hi, hr.count)?)?;

    let mut rows = Vec::new();
    for (label, e) in [("unit", &e_unit), ("vertical_square", &e1), ("height", &e2), ("combination", &e12)] {
        entropy_rows(label, e, &mut rows);
    }
    let field_rows: Vec<Vec<String>> = (0..rates.heights.len())
        .map(|k| vec![num(rates.heights[k]), num(rates.height_components[k]), num(rates.divergences[k])])
        .collect();
    let summary = |e: &WeightedEntropy| {
        json!({ "estimate": e.estimate.value, "error_bar": e.estimate.error_bar, "x_norm": e.x_norm, "ratio": e.ratio, "tail_slope": e.tail_slope })
    };
    Ok(Outcome {
        parameters: to_value(&p)?,
        checks: vec![
            Check::at_most("unit_weight_reduces", reduction, 0.0),
            Check::at_most("linearity", linearity, p.linearity_tolerance),
            Check::at_most("reduced_gradient", gradient, p.reduction_tolerance),
            Check::at_least("tail_slope", tail, p.tail_slope_min),
            Check::at_most("polarization_identity", polarization, p.identity_tolerance),
            Check::at_most("basis_identity", basis, p.identity_tolerance),
            Check::at_least("normal_height_slope", rates.height_slope, p.height_slope_min),
            Check::at_least("normal_divergence_slope", rates.divergence_slope, p.divergence_slope_min),
        ],
        results: json!({
            "unweighted": e_unit.unweighted.value,
            "unit": summary(&e_unit),
            "vertical_square": summary(&e1),
            "height": summary(&e2),
            "combination": summary(&e12),
            "reduction_points": points.len(),
            "normal_field": { "height_slope": rates.height_slope, "divergence_slope": rates.divergence_slope },
        }),
        files: vec![
            ("weighted_samples.csv".into(), csv_bytes(&["weight", "eps", "value", "error_bound"], &rows)?),
            ("normal_field.csv".into(), csv_bytes(&["y", "height_component", "divergence"], &field_rows)?),
        ],
        timings: vec![],
    })
}
