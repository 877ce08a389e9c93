//! Minimal surfaces of revolution in hyperbolic 3-space: hemispheres in
//! closed form, annuli ("catenoids") by shooting from a boundary series,
//! the Alexakis–Mazzeo area formula and the boundary separation rate.

mod ode;
mod series;
mod shoot;
mod surface;

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use series::{boundary_taylor, BoundaryTaylor, MAX_ORDER};
pub use shoot::{LandingPoint, LandingStatus, ShootingControls};
pub use surface::{ProfileSample, RevolutionSurface, Topology};

use crate::error::{invalid, Error, Result};
use crate::expansion::{fit_expansion_with_tail, loglog_slope, ExpansionFit, Sample};
use crate::halfspace::DefiningFunction;
use crate::quadrature::{integrate, vol_eps, DEFAULT_BUDGET};

/// Result of a catenoid search.
#[derive(Debug, Clone)]
pub struct CatenoidShooting {
    /// Surfaces found, sorted by `a3`.
    pub surfaces: Vec<RevolutionSurface>,
    /// Landing map `a3 ↦ landing radius`, sorted by `a3`.
    pub trace: Vec<LandingPoint>,
    /// Half width of the final `a3` scan window.
    pub half_width: f64,
}

/// Find the minimal annuli bounded by the concentric circles `r1 < r2`.
pub fn shoot_catenoid(r1: f64, r2: f64, controls: &ShootingControls) -> Result<CatenoidShooting> {
    if !(r1 > 0.0 && r1.is_finite()) {
        return invalid(format!("inner radius must be positive, got {r1}"));
    }
    let ratio = r2 / r1;
    if !(ratio >= 1.0 && ratio <= 4.0) {
        return invalid(format!("radius ratio r2/r1 must lie in [1, 4], got {ratio}"));
    }
    let (roots, trace, half_width) = shoot::scan_roots(r1, r2, controls)?;
    let surfaces = roots
        .iter()
        .map(|&a3| {
            let shot = shoot::shoot(r1, a3, controls, true)?;
            RevolutionSurface::from_shot(shot, r2)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CatenoidShooting {
        surfaces,
        trace,
        half_width,
    })
}

/// Landing radius for a single shooting parameter.
pub fn landing_radius(r1: f64, a3: f64, controls: &ShootingControls) -> Result<LandingPoint> {
    controls.validate()?;
    Ok(shoot::landing_point(r1, a3, controls))
}

/// A single integrated annulus for the given `a3`, whether or not it lands
/// on any particular circle; its outer radius is the landing radius.
pub fn shoot_profile(r1: f64, a3: f64, controls: &ShootingControls) -> Result<RevolutionSurface> {
    controls.validate()?;
    let shot = shoot::shoot(r1, a3, controls, true)?;
    let target = shot
        .end
        .as_ref()
        .map(|t| t.r0)
        .ok_or_else(|| Error::Geometry(format!("shot a3 = {a3} did not land ({:?})", shot.status)))?;
    RevolutionSurface::from_shot(shot, target)
}

/// `Vol_ε` of the hemisphere of radius `R` under `r = y`: `2π(R/ε − 1)`.
pub fn hemisphere_vol_eps(radius: f64, eps: f64) -> Result<f64> {
    if !(radius > 0.0) || !(eps > 0.0) {
        return invalid(format!("need positive radius and eps (got {radius}, {eps})"));
    }
    if eps >= radius {
        return Err(Error::EmptyTruncation { eps, apex: radius });
    }
    Ok(TAU * (radius / eps - 1.0))
}

/// The two sides of the Alexakis–Mazzeo formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaIdentity {
    /// `−2πχ − ½∫|Â|²`.
    pub area: f64,
    /// `∫|Â|² dμ_H`.
    pub curvature_integral: f64,
    pub error_bound: f64,
    pub euler_characteristic: i32,
    /// Part of the curvature integral coming from the boundary caps.
    pub cap_contribution: f64,
}

/// Renormalized area from `A = −2πχ − ½∫|Â|² dμ_H`.
///
/// For surfaces of revolution the traceless second fundamental form is
/// conformally invariant, so `|Â|² dμ_H = ½(κ1 − κ2)² dA` with Euclidean
/// principal curvatures.
pub fn alexakis_mazzeo_area(s: &RevolutionSurface) -> Result<AreaIdentity> {
    let mut f = |t: f64| {
        let (gap, density, speed) = s.curvature_gap(t);
        0.5 * gap * gap * density * speed
    };
    let pieces = s.pieces();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut caps = 0.0;
    let last = pieces.len() - 1;
    for (i, cuts) in pieces.iter().enumerate() {
        let e = integrate(&mut f, cuts, 1e-11, DEFAULT_BUDGET)?;
        total += e.value;
        err += e.error_bound;
        if pieces.len() > 1 && (i == 0 || i == last) {
            caps += e.value;
        }
    }
    if !total.is_finite() || caps.abs() > 1e-4 * total.abs() + 1e-10 {
        return Err(Error::Diagnostics(format!(
            "boundary caps carry {caps:e} of a curvature integral {total:e}"
        )));
    }
    let chi = s.euler_characteristic();
    Ok(AreaIdentity {
        area: -TAU * chi as f64 - 0.5 * total,
        curvature_integral: total,
        error_bound: 0.5 * err,
        euler_characteristic: chi,
        cap_contribution: caps,
    })
}

/// Outcome of a separation measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Separation {
    /// Fitted exponent `k` in `|ρ1 − ρ2| ≈ C y^k`.
    Exponent {
        slope: f64,
        heights: Vec<f64>,
        gaps: Vec<f64>,
    },
    /// The profiles coincide at every sampled height.
    ExactCoincidence,
}

/// Log-log slope of `|ρ1(y) − ρ2(y)|` near the first boundary circle, on 25
/// log-spaced heights in `[1e-3, 1e-1]·r1`.
pub fn separation_rate(s1: &RevolutionSurface, s2: &RevolutionSurface) -> Result<Separation> {
    let (b1, b2) = (s1.radii(), s2.radii());
    if b1 != b2 {
        return Err(Error::Geometry(format!("asymptotic circles differ: {b1:?} vs {b2:?}")));
    }
    let r1 = b1[0];
    let count = 25;
    let heights: Vec<f64> = (0..count)
        .map(|i| r1 * 10f64.powf(-3.0 + 2.0 * i as f64 / (count - 1) as f64))
        .collect();
    let gaps = heights
        .iter()
        .map(|&y| Ok((s1.rho_near_first_circle(y)? - s2.rho_near_first_circle(y)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    if gaps.iter().all(|g| *g == 0.0) {
        return Ok(Separation::ExactCoincidence);
    }
    let slope = loglog_slope(&heights, &gaps)?;
    Ok(Separation::Exponent { slope, heights, gaps })
}

fn central_derivatives(f: impl Fn(f64) -> [f64; 3], s: f64, h: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (m2, m1, z, p1, p2) = (f(s - 2.0 * h), f(s - h), f(s), f(s + h), f(s + 2.0 * h));
    let mut d1 = [0.0; 3];
    let mut d2 = [0.0; 3];
    for i in 0..3 {
        d1[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
        d2[i] = (-m2[i] + 16.0 * m1[i] - 30.0 * z[i] + 16.0 * p1[i] - p2[i]) / (12.0 * h * h);
    }
    (z, d1, d2)
}

/// Interior arclength samples used by the plug-in checks.
fn check_points(s: &RevolutionSurface, count: usize) -> Vec<(usize, f64, f64)> {
    let Some(shot) = s.shot() else {
        return Vec::new();
    };
    let len = shot.arclength();
    (1..count)
        .filter_map(|i| {
            let t = len * i as f64 / count as f64;
            let u = shot.state(t);
            let h = 2e-3 * u[0].min(u[1]);
            let k = shot.node_below(t - 2.0 * h);
            (t - 2.0 * h > 0.0 && t + 2.0 * h < len).then_some((k, t, h))
        })
        .collect()
}

/// Largest scaled residual `min(ρ, y)·|α' + sin α/ρ + 2 cos α/y|` of the
/// meridian equation at `count − 1` interior points, with `α'` from finite
/// differences of the stored solution.
pub fn profile_ode_residual(s: &RevolutionSurface, count: usize) -> f64 {
    let Some(shot) = s.shot() else {
        return 0.0;
    };
    check_points(s, count)
        .into_iter()
        .map(|(k, t, h)| {
            let (u, d, _) = central_derivatives(|x| shot.state_from(k, x), t, h);
            let r = d[2] + u[2].sin() / u[0] + 2.0 * u[2].cos() / u[1];
            (r * u[0].min(u[1])).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest hyperbolic mean curvature at `count − 1` interior points, with
/// the curvature of the meridian taken from finite differences of its
/// position only.
pub fn mean_curvature_defect(s: &RevolutionSurface, count: usize) -> f64 {
    let Some(shot) = s.shot() else {
        return 0.0;
    };
    check_points(s, count)
        .into_iter()
        .map(|(k, t, h)| {
            let (p, d1, d2) = central_derivatives(|x| shot.state_from(k, x), t, h);
            let speed = d1[0].hypot(d1[1]);
            let (tr, ty) = (d1[0] / speed, d1[1] / speed);
            let k1 = (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3);
            let k2 = ty / p[0];
            (p[1] * (k1 + k2) + 2.0 * tr).abs()
        })
        .fold(0.0, f64::max)
}

/// Fitted renormalized area of a surface of revolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaFit {
    pub fit: ExpansionFit,
    pub samples: Vec<Sample>,
    /// Spread of the constant term between tail orders plus the held-out
    /// residual.
    pub uncertainty: f64,
}

/// Sample `Vol_ε` on `eps` and fit `c0/ε + c2 + Σ_{k≤tail} b_k ε^k`.
pub fn renormalized_area_fit(s: &RevolutionSurface, r: &DefiningFunction, eps: &[f64], tail: u32, tol: f64) -> Result<AreaFit> {
    use rayon::prelude::*;
    let samples = eps
        .par_iter()
        .map(|&e| {
            let v = vol_eps(s, r, e, tol)?;
            Ok(Sample::new(e, v.value, v.error_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_expansion_with_tail(&samples, 2, tail)?;
    let spread = if tail > 0 {
        (fit_expansion_with_tail(&samples, 2, tail - 1)?.constant_term - fit.constant_term).abs()
    } else {
        0.0
    };
    let uncertainty = spread + fit.residual_norm;
    Ok(AreaFit { fit, samples, uncertainty })
}

/// Write a landing-map trace as CSV (`a3,landing_radius,status`).
pub fn write_landing_trace<W: Write>(out: W, trace: &[LandingPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["a3", "landing_radius", "status"])?;
    for p in trace {
        let status = match p.status {
            LandingStatus::Landed => "landed",
            LandingStatus::HitAxis => "hit_axis",
            LandingStatus::Escaped => "escaped",
            LandingStatus::Diverged => "diverged",
        };
        let radius = p.landing_radius.map_or_else(String::new, |r| format!("{r:.16e}"));
        w.write_record([format!("{:.16e}", p.a3), radius, status.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write profile samples as CSV (`s,rho,y`).
pub fn write_profile<W: Write>(out: W, samples: &[ProfileSample]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["s", "rho", "y"])?;
    for p in samples {
        w.write_record([format!("{:.16e}", p.s), format!("{:.16e}", p.rho), format!("{:.16e}", p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// `−2π`, the renormalized area of a totally geodesic disk.
pub const HEMISPHERE_AREA: f64 = -2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemisphere_closed_form() {
        assert!((hemisphere_vol_eps(1.0, 0.1).unwrap() - 18.0 * PI).abs() < 1e-12);
        assert!(matches!(hemisphere_vol_eps(2.0, 2.0), Err(Error::EmptyTruncation { .. })));
    }

    #[test]
    fn hemisphere_area_identity() {
        let h = RevolutionSurface::hemisphere(1.5).unwrap();
        let a = alexakis_mazzeo_area(&h).unwrap();
        assert!((a.area - HEMISPHERE_AREA).abs() < 1e-12);
        assert_eq!(a.euler_characteristic, 1);
    }

    #[test]
    fn separation_rejects_mismatched_boundaries() {
        let h = RevolutionSurface::hemisphere(1.0).unwrap();
        let c = shoot_profile(1.0, 1.0, &ShootingControls::default()).unwrap();
        assert!(matches!(separation_rate(&h, &c), Err(Error::Geometry(_))));
        assert_eq!(separation_rate(&c, &c).unwrap(), Separation::ExactCoincidence);
    }

    #[test]
    fn ratio_outside_scan_range_is_rejected() {
        assert!(shoot_catenoid(1.0, 5.0, &ShootingControls::default()).is_err());
        assert!(shoot_catenoid(1.0, 0.5, &ShootingControls::default()).is_err());
    }
}
