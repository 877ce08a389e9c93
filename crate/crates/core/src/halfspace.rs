//! Points, boundary defining functions, Möbius isometries and the normal
//! extension field of a geodesic in the upper half-space model.
//!
//! The model is `{(x, y) : x ∈ ℝⁿ, y > 0}` with metric `(1/y²)·g_euclid`.
//! Everything here is a pure function of value types.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

/// Boundary coordinates; inline storage covers the n ≤ 2 cases used here.
pub type Coords = SmallVec<[f64; 2]>;

/// A point of the open upper half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    x: Coords,
    y: f64,
}

impl HalfSpacePoint {
    pub fn new(x: &[f64], y: f64) -> Result<Self> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::NotInHalfSpace(y));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite boundary coordinate");
        }
        Ok(Self {
            x: Coords::from_slice(x),
            y,
        })
    }

    /// Point of the hyperbolic plane (n = 1).
    pub fn planar(x: f64, y: f64) -> Result<Self> {
        Self::new(&[x], y)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Boundary dimension n.
    pub fn boundary_dim(&self) -> usize {
        self.x.len()
    }

    /// Conformal factor `1/y²` of the hyperbolic metric.
    pub fn conformal_factor(&self) -> f64 {
        1.0 / (self.y * self.y)
    }

    /// Hyperbolic distance, `cosh d = 1 + |p − q|² / (2 y_p y_q)`.
    pub fn distance(&self, other: &HalfSpacePoint) -> Result<f64> {
        if self.x.len() != other.x.len() {
            return invalid("points live in different dimensions");
        }
        let dx2: f64 = self
            .x
            .iter()
            .zip(other.x.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let dy = self.y - other.y;
        let q = (dx2 + dy * dy) / (2.0 * self.y * other.y);
        // acosh(1 + q) without cancellation for small q
        Ok((q + (q * (q + 2.0)).sqrt()).ln_1p())
    }
}

/// Conformal factor `1/y²` at `p`.
pub fn conformal_factor(p: &HalfSpacePoint) -> f64 {
    p.conformal_factor()
}

/// A boundary defining function `r`, used in place of `y` to truncate
/// divergent areas.
///
/// * `Height`: `r = y`
/// * `Scaled`: `r = y / (1 + α|x − c|² + α y²)`
/// * `Tilted`: `r = y (1 + β y)`, `|β| < 1`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DefiningFunction {
    Height,
    Scaled {
        #[serde(default)]
        center: Vec<f64>,
        alpha: f64,
    },
    Tilted {
        beta: f64,
    },
}

impl DefiningFunction {
    pub fn scaled(center: &[f64], alpha: f64) -> Result<Self> {
        let r = DefiningFunction::Scaled {
            center: center.to_vec(),
            alpha,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn tilted(beta: f64) -> Result<Self> {
        let r = DefiningFunction::Tilted { beta };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DefiningFunction::Height => Ok(()),
            DefiningFunction::Scaled { center, alpha } => {
                if !(*alpha >= 0.0) || !alpha.is_finite() {
                    return invalid(format!("scaled defining function needs alpha >= 0, got {alpha}"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return invalid("non-finite center");
                }
                Ok(())
            }
            DefiningFunction::Tilted { beta } => {
                if !(beta.abs() < 1.0) {
                    return invalid(format!("tilted defining function needs |beta| < 1, got {beta}"));
                }
                Ok(())
            }
        }
    }

    /// Value of `r` at a point.
    pub fn eval(&self, p: &HalfSpacePoint) -> f64 {
        self.eval_xy(p.x(), p.y())
    }

    /// Same as [`eval`](Self::eval) on raw coordinates; `y` may be zero.
    /// A `Scaled` center shorter than `x` is padded with zeros.
    #[inline]
    pub fn eval_xy(&self, x: &[f64], y: f64) -> f64 {
        y * self.height_ratio(x, y)
    }

    /// `r / y`, smooth up to and including `y = 0`.
    #[inline]
    pub fn height_ratio(&self, x: &[f64], y: f64) -> f64 {
        match self {
            DefiningFunction::Height => 1.0,
            DefiningFunction::Scaled { center, alpha } => {
                let d2: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, xi)| {
                        let d = xi - center.get(i).copied().unwrap_or(0.0);
                        d * d
                    })
                    .sum();
                1.0 / (1.0 + alpha * d2 + alpha * y * y)
            }
            DefiningFunction::Tilted { beta } => 1.0 + beta * y,
        }
    }

    /// True when `r` depends on `x` only through `|x − axis|`, i.e. it is
    /// invariant under rotations about the vertical line through `axis`.
    pub fn is_rotation_invariant_about(&self, axis: &[f64]) -> bool {
        match self {
            DefiningFunction::Height | DefiningFunction::Tilted { .. } => true,
            DefiningFunction::Scaled { center, alpha } => {
                *alpha == 0.0
                    || (0..axis.len().max(center.len())).all(|i| {
                        center.get(i).copied().unwrap_or(0.0) == axis.get(i).copied().unwrap_or(0.0)
                    })
            }
        }
    }

    /// Short label used in output files.
    pub fn label(&self) -> String {
        match self {
            DefiningFunction::Height => "height".into(),
            DefiningFunction::Scaled { alpha, .. } => format!("scaled(alpha={alpha})"),
            DefiningFunction::Tilted { beta } => format!("tilted(beta={beta})"),
        }
    }
}

/// Evaluate a defining function at a point.
pub fn eval_defining(r: &DefiningFunction, p: &HalfSpacePoint) -> f64 {
    r.eval(p)
}

/// Orientation-preserving isometry of the hyperbolic plane,
/// `z ↦ (a z + b)/(c z + d)` with `ad − bc > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return invalid(format!("Möbius map needs ad - bc > 0, got {det}"));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn translation(t: f64) -> Self {
        Self { a: 1.0, b: t, c: 0.0, d: 1.0 }
    }

    pub fn dilation(k: f64) -> Result<Self> {
        Self::new(k, 0.0, 0.0, 1.0)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Boundary point the map sends to infinity, if any.
    pub fn pole(&self) -> Option<f64> {
        (self.c != 0.0).then(|| -self.d / self.c)
    }

    /// Action on an ideal boundary point.
    pub fn apply_boundary(&self, x: f64) -> Result<f64> {
        let den = self.c * x + self.d;
        if den == 0.0 {
            return Err(Error::MappedToInfinity(x));
        }
        Ok((self.a * x + self.b) / den)
    }

    /// Derivative of the boundary action, `det / (c x + d)²`.
    pub fn boundary_derivative(&self, x: f64) -> f64 {
        let den = self.c * x + self.d;
        self.determinant() / (den * den)
    }

    /// Action on a point of the hyperbolic plane.
    pub fn apply_point(&self, p: &HalfSpacePoint) -> Result<HalfSpacePoint> {
        if p.boundary_dim() != 1 {
            return invalid("Möbius action is only implemented on the hyperbolic plane");
        }
        let (x, y) = (p.x()[0], p.y());
        let nr = self.a * x + self.b;
        let dr = self.c * x + self.d;
        let di = self.c * y;
        let den = dr * dr + di * di;
        let u = (nr * dr + self.a * self.c * y * y) / den;
        let v = y * self.determinant() / den;
        HalfSpacePoint::planar(u, v)
    }
}

/// Either kind of input accepted by [`mobius_apply`].
#[derive(Debug, Clone, PartialEq)]
pub enum MobiusInput {
    Interior(HalfSpacePoint),
    Boundary(f64),
}

pub fn mobius_apply(m: &MobiusMap, input: &MobiusInput) -> Result<MobiusInput> {
    match input {
        MobiusInput::Interior(p) => m.apply_point(p).map(MobiusInput::Interior),
        MobiusInput::Boundary(x) => m.apply_boundary(*x).map(MobiusInput::Boundary),
    }
}

/// Extension of the hyperbolic unit normal of a geodesic semicircle to a
/// neighbourhood: `X(q) = y(Π(q)) · (q − c)/|q − c|` with `Π` the radial
/// projection onto the semicircle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalField {
    center: f64,
    radius: f64,
}

/// `X(q)` together with the two quantities whose decay rates matter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFieldSample {
    pub vector: [f64; 2],
    /// `X · e_y`, equal to `y(Π(q))² / R`.
    pub height_component: f64,
    /// Hyperbolic divergence of `X` by central differences.
    pub divergence_estimate: f64,
}

impl NormalField {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.is_finite() || !radius.is_finite() {
            return invalid(format!("background circle needs a positive radius, got {radius}"));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn offset(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let dx = x - self.center;
        let rho = dx.hypot(y);
        if rho == 0.0 {
            return Err(Error::UndefinedProjection);
        }
        Ok((dx, y, rho))
    }

    /// Euclidean unit normal of the semicircle at `Π(q)`.
    pub fn unit_normal(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (dx, dy, rho) = self.offset(x, y)?;
        Ok([dx / rho, dy / rho])
    }

    /// Radial projection `Π(q)` onto the semicircle, as `(x, y)`.
    pub fn project(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (dx, dy, rho) = self.offset(x, y)?;
        Ok((self.center + self.radius * dx / rho, self.radius * dy / rho))
    }

    fn vector_xy(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (dx, dy, rho) = self.offset(x, y)?;
        let yp = self.radius * dy / rho;
        Ok([yp * dx / rho, yp * dy / rho])
    }

    pub fn eval(&self, q: &HalfSpacePoint) -> Result<NormalFieldSample> {
        if q.boundary_dim() != 1 {
            return invalid("normal field is defined on the hyperbolic plane only");
        }
        let (x, y) = (q.x()[0], q.y());
        let vector = self.vector_xy(x, y)?;
        let (_, yp) = self.project(x, y)?;
        let height_component = yp * yp / self.radius;

        let h = 1e-5 * y;
        let xp = self.vector_xy(x + h, y)?;
        let xm = self.vector_xy(x - h, y)?;
        let yp_ = self.vector_xy(x, y + h)?;
        let ym = self.vector_xy(x, y - h)?;
        let euclid_div = (xp[0] - xm[0]) / (2.0 * h) + (yp_[1] - ym[1]) / (2.0 * h);
        // div_g X = y² ∂_i(y⁻² Xⁱ) in two dimensions
        let divergence_estimate = euclid_div - 2.0 * vector[1] / y;

        Ok(NormalFieldSample {
            vector,
            height_component,
            divergence_estimate,
        })
    }
}

/// Log-log decay rates of `X · e_y` and `|div X|` as `y → 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFieldRates {
    pub heights: Vec<f64>,
    pub height_components: Vec<f64>,
    pub divergences: Vec<f64>,
    pub height_slope: f64,
    pub divergence_slope: f64,
}

/// Samples the field on the right half of the semicircle at the given
/// heights, which must lie in `(0, R)`.
pub fn normal_field_rates(f: &NormalField, heights: &[f64]) -> Result<NormalFieldRates> {
    if heights.len() < 2 {
        return invalid("need at least two heights");
    }
    let mut hc = Vec::with_capacity(heights.len());
    let mut dv = Vec::with_capacity(heights.len());
    for &y in heights {
        if !(y > 0.0 && y < f.radius) {
            return invalid(format!("height {y} is not in (0, {})", f.radius));
        }
        let x = f.center + (f.radius * f.radius - y * y).sqrt();
        let s = f.eval(&HalfSpacePoint::planar(x, y)?)?;
        hc.push(s.height_component);
        dv.push(s.divergence_estimate.abs());
    }
    Ok(NormalFieldRates {
        height_slope: crate::expansion::loglog_slope(heights, &hc)?,
        divergence_slope: crate::expansion::loglog_slope(heights, &dv)?,
        heights: heights.to_vec(),
        height_components: hc,
        divergences: dv,
    })
}

/// `count` heights spaced evenly in `log y` over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return invalid(format!("bad log range [{lo}, {hi}] with {count} points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect())
}

pub fn normal_projection_field(f: &NormalField, q: &HalfSpacePoint) -> Result<NormalFieldSample> {
    f.eval(q)
}
