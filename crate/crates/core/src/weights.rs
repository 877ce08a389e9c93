//! Weights `ψ(p, v) = f0(p) + v·Q(p)v` on positions and unit normals, their
//! admissibility norm, and the near-boundary quadratic reduction.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::expansion::{entropy_limit, tail_slope, EntropyEstimate, Sample};
use crate::halfspace::{DefiningFunction, NormalField};
use crate::quadrature::{smootherstep, truncated_differences, Immersion, NodeWeight, UnitWeight};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type QuadraticField = Arc<dyn Fn(&[f64]) -> Matrix3<f64> + Send + Sync>;

/// Default `ε` of the reduction cutoff.
pub const DEFAULT_REDUCTION_EPS: f64 = 0.2;

/// A weight of the quadratic family. Points are `[x…, y]` with ambient
/// dimension 2 or 3; matrices act on the first `dim` coordinates and are
/// zero elsewhere.
#[derive(Clone)]
pub struct Weight {
    dim: usize,
    base: Option<ScalarField>,
    quadratic: Option<QuadraticField>,
    label: String,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        invalid(format!("ambient dimension must be 2 or 3, got {dim}"))
    }
}

fn vec3(v: &[f64]) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for (o, x) in out.iter_mut().zip(v) {
        *o = *x;
    }
    out
}

fn symmetrize(m: Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

impl Weight {
    pub fn new(dim: usize, label: impl Into<String>, base: Option<ScalarField>, quadratic: Option<QuadraticField>) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            base,
            quadratic,
            label: label.into(),
        })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::constant(dim, 1.0)
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        Self::new(dim, format!("{c}"), Some(Arc::new(move |_: &[f64]| c)), None)
    }

    /// `ψ = f0(p)`.
    pub fn scalar(dim: usize, label: impl Into<String>, f0: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::new(dim, label, Some(Arc::new(f0)), None)
    }

    /// `ψ = y`.
    pub fn height(dim: usize) -> Result<Self> {
        Self::scalar(dim, "y", |p: &[f64]| p[p.len() - 1])
    }

    /// `ψ = v·Q v` for a constant matrix (symmetrized).
    pub fn constant_form(dim: usize, q: Matrix3<f64>) -> Result<Self> {
        let q = symmetrize(q);
        Self::new(dim, "v.Qv", None, Some(Arc::new(move |_: &[f64]| q)))
    }

    /// `ψ = (Y·v)²`.
    pub fn outer(y: &[f64]) -> Result<Self> {
        let v = vec3(y);
        let mut w = Self::constant_form(y.len(), v * v.transpose())?;
        w.label = format!("(Y.v)^2, Y={y:?}");
        Ok(w)
    }

    /// `ψ = (Y1·v)(Y2·v)`.
    pub fn product(y1: &[f64], y2: &[f64]) -> Result<Self> {
        if y1.len() != y2.len() {
            return invalid("vectors of different dimension");
        }
        let (a, b) = (vec3(y1), vec3(y2));
        let mut w = Self::constant_form(y1.len(), a * b.transpose())?;
        w.label = format!("(Y1.v)(Y2.v), Y1={y1:?}, Y2={y2:?}");
        Ok(w)
    }

    /// `ψ = (e_y·v)²`.
    pub fn vertical_square(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut e = vec![0.0; dim];
        e[dim - 1] = 1.0;
        Self::outer(&e)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Weight, b: f64) -> Result<Self> {
        if self.dim != other.dim {
            return invalid("weights of different dimension");
        }
        let base = match (self.base.clone(), other.base.clone()) {
            (None, None) => None,
            (f, g) => Some(Arc::new(move |p: &[f64]| {
                f.as_ref().map_or(0.0, |f| a * f(p)) + g.as_ref().map_or(0.0, |g| b * g(p))
            }) as ScalarField),
        };
        let quadratic = match (self.quadratic.clone(), other.quadratic.clone()) {
            (None, None) => None,
            (f, g) => Some(Arc::new(move |p: &[f64]| {
                f.as_ref().map_or(Matrix3::zeros(), |f| f(p) * a) + g.as_ref().map_or(Matrix3::zeros(), |g| g(p) * b)
            }) as QuadraticField),
        };
        Self::new(self.dim, format!("{a}*[{}] + {b}*[{}]", self.label, other.label), base, quadratic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_v_independent(&self) -> bool {
        self.quadratic.is_none()
    }

    pub fn base_value(&self, p: &[f64]) -> f64 {
        self.base.as_ref().map_or(0.0, |f| f(p))
    }

    pub fn matrix(&self, p: &[f64]) -> Matrix3<f64> {
        self.quadratic.as_ref().map_or(Matrix3::zeros(), |q| q(p))
    }

    pub fn eval(&self, p: &[f64], v: &[f64]) -> f64 {
        let f0 = self.base_value(p);
        match &self.quadratic {
            None => f0,
            Some(q) => {
                let v = vec3(v);
                f0 + v.dot(&(q(p) * v))
            }
        }
    }

    fn tangent_projection(&self, v: &Vector3<f64>) -> Matrix3<f64> {
        let mut p = -v * v.transpose();
        for i in 0..self.dim {
            p[(i, i)] += 1.0;
        }
        p
    }

    /// Gradient on the unit sphere at `v`: `2(Qv − (v·Qv)v)`.
    pub fn sphere_gradient(&self, p: &[f64], v: &[f64]) -> Vector3<f64> {
        let Some(q) = &self.quadratic else {
            return Vector3::zeros();
        };
        let v = vec3(v);
        let qv = q(p) * v;
        (qv - v * v.dot(&qv)) * 2.0
    }

    /// Covariant Hessian on the unit sphere at `v`:
    /// `P(2Q − 2(v·Qv)I)P` with `P` the tangential projection.
    pub fn sphere_hessian(&self, p: &[f64], v: &[f64]) -> Matrix3<f64> {
        let Some(q) = &self.quadratic else {
            return Matrix3::zeros();
        };
        let v = vec3(v);
        let m = q(p);
        let proj = self.tangent_projection(&v);
        let vqv = v.dot(&(m * v));
        proj * (m * 2.0 - Matrix3::identity() * (2.0 * vqv)) * proj
    }
}

impl NodeWeight for Weight {
    fn eval(&self, x: &[f64], y: f64, normal: &[f64]) -> f64 {
        let mut p: SmallVec<[f64; 3]> = SmallVec::from_slice(x);
        p.push(y);
        Weight::eval(self, &p, normal)
    }
}

/// Sample layout for the admissibility norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub x_count: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub y_count: usize,
    pub sphere_count: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            x_min: -2.0,
            x_max: 2.0,
            x_count: 9,
            y_min: 1e-4,
            y_max: 1.0,
            y_count: 25,
            sphere_count: 64,
        }
    }
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_min > 0.0 && self.y_max > self.y_min && self.x_max >= self.x_min) {
            return invalid("sample band must satisfy 0 < y_min < y_max and x_min ≤ x_max");
        }
        if self.x_count == 0 || self.y_count < 2 || self.sphere_count < 2 {
            return invalid("sample counts too small");
        }
        Ok(())
    }

    fn linspace(&self) -> Vec<f64> {
        if self.x_count == 1 {
            return vec![0.5 * (self.x_min + self.x_max)];
        }
        (0..self.x_count)
            .map(|i| self.x_min + (self.x_max - self.x_min) * i as f64 / (self.x_count - 1) as f64)
            .collect()
    }

    fn heights(&self) -> Vec<f64> {
        let (a, b) = (self.y_min.ln(), self.y_max.ln());
        (0..self.y_count).map(|i| (a + (b - a) * i as f64 / (self.y_count - 1) as f64).exp()).collect()
    }

    /// Sample points `[x…, y]`.
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let xs = self.linspace();
        let mut out = Vec::new();
        for &y in &self.heights() {
            if dim == 2 {
                out.extend(xs.iter().map(|&x| vec![x, y]));
            } else {
                for &x1 in &xs {
                    out.extend(xs.iter().map(|&x2| vec![x1, x2, y]));
                }
            }
        }
        out
    }

    /// Unit vectors: a uniform circle for `dim = 2`, a Fibonacci sphere for
    /// `dim = 3`.
    pub fn directions(&self, dim: usize) -> Vec<Vec<f64>> {
        let n = self.sphere_count;
        if dim == 2 {
            return (0..n)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / n as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect();
        }
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * k as f64;
                vec![r * a.cos(), r * a.sin(), z]
            })
            .collect()
    }
}

/// The five sup terms of the admissibility norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XNormTerms {
    pub value: f64,
    pub sphere_gradient: f64,
    pub sphere_hessian: f64,
    pub scaled_gradient: f64,
    pub scaled_mixed: f64,
}

impl XNormTerms {
    pub fn total(&self) -> f64 {
        self.value + self.sphere_gradient + self.sphere_hessian + self.scaled_gradient + self.scaled_mixed
    }
}

/// Sampled sup of each norm term. Ambient derivatives are central
/// differences with step `1e-5·y`; matrix norms are Frobenius.
pub fn x_norm_terms(w: &Weight, spec: &SampleSpec) -> Result<XNormTerms> {
    spec.validate()?;
    let dirs = spec.directions(w.dim);
    let mut t = XNormTerms {
        value: 0.0,
        sphere_gradient: 0.0,
        sphere_hessian: 0.0,
        scaled_gradient: 0.0,
        scaled_mixed: 0.0,
    };
    for p in spec.points(w.dim) {
        let y = p[w.dim - 1];
        let h = 1e-5 * y;
        for v in &dirs {
            t.value = t.value.max(w.eval(&p, v).abs());
            t.sphere_gradient = t.sphere_gradient.max(w.sphere_gradient(&p, v).norm());
            t.sphere_hessian = t.sphere_hessian.max(w.sphere_hessian(&p, v).norm());
            let mut grad2 = 0.0;
            let mut mixed2 = 0.0;
            for i in 0..w.dim {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp[i] += h;
                pm[i] -= h;
                let d = (w.eval(&pp, v) - w.eval(&pm, v)) / (2.0 * h);
                grad2 += (y * d).powi(2);
                let dg = (w.sphere_gradient(&pp, v) - w.sphere_gradient(&pm, v)) / (2.0 * h);
                mixed2 += (dg * y).norm_squared();
            }
            t.scaled_gradient = t.scaled_gradient.max(grad2.sqrt());
            t.scaled_mixed = t.scaled_mixed.max(mixed2.sqrt());
        }
    }
    Ok(t)
}

/// Lower-bound estimate of the admissibility norm from samples.
pub fn x_norm_estimate(w: &Weight, spec: &SampleSpec) -> Result<f64> {
    Ok(x_norm_terms(w, spec)?.total())
}

/// `Y_ψ` and `ψ̄` built from a weight and a background normal field `X̄`.
#[derive(Debug, Clone)]
pub struct QuadraticReduction {
    weight: Weight,
    background: NormalField,
    eps: f64,
    psi_bar: Weight,
}

fn ramp(y: f64, eps: f64) -> f64 {
    smootherstep((y - 0.5 * eps) / (0.5 * eps))
}

fn background_normal(bg: &NormalField, p: &[f64]) -> Result<Vector3<f64>> {
    let (x, y) = (p[0], p[1]);
    if !(y > 0.0 && y.is_finite() && x.is_finite()) {
        return Err(Error::Domain(format!("({x}, {y}) is outside the half-plane")));
    }
    let n = bg.unit_normal(x, y)?;
    Ok(Vector3::new(n[0], n[1], 0.0))
}

/// Build `ψ̄ = ψ − (1 − φ)(Y_ψ·v)(X̄·v)` with `φ` the smootherstep ramp
/// from `ε/2` to `ε` in the height.
pub fn quadratic_reduction(w: &Weight, background: &NormalField, eps: f64) -> Result<QuadraticReduction> {
    if w.dim != 2 {
        return invalid("the background normal field lives in the hyperbolic plane");
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("cutoff scale must be positive, got {eps}"));
    }
    let (inner, bg) = (w.clone(), *background);
    let q: QuadraticField = Arc::new(move |p: &[f64]| {
        let m = inner.matrix(p);
        let cut = 1.0 - ramp(p[1], eps);
        if cut == 0.0 {
            return m;
        }
        let Ok(xb) = background_normal(&bg, p) else {
            return m;
        };
        let qx = m * xb;
        let y = (qx - xb * xb.dot(&qx)) * 2.0;
        m - (y * xb.transpose() + xb * y.transpose()) * (0.5 * cut)
    });
    let psi_bar = Weight {
        dim: 2,
        base: w.base.clone(),
        quadratic: Some(q),
        label: format!("reduced[{}]", w.label),
    };
    Ok(QuadraticReduction {
        weight: w.clone(),
        background: *background,
        eps,
        psi_bar,
    })
}

impl QuadraticReduction {
    /// `Y_ψ(p)`, the sphere gradient of `ψ` at `v = X̄(p)`.
    pub fn y_psi(&self, p: &[f64]) -> Result<[f64; 2]> {
        let xb = background_normal(&self.background, p)?;
        let g = self.weight.sphere_gradient(p, xb.as_slice());
        Ok([g[0], g[1]])
    }

    /// `X̄(p)`.
    pub fn background_normal(&self, p: &[f64]) -> Result<[f64; 2]> {
        let n = background_normal(&self.background, p)?;
        Ok([n[0], n[1]])
    }

    pub fn psi_bar(&self) -> &Weight {
        &self.psi_bar
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Cutoff `φ` at height `y`.
    pub fn cutoff(&self, y: f64) -> f64 {
        ramp(y, self.eps)
    }

    /// `|∇_S ψ̄(p, X̄(p))|`; zero where `y ≤ ε/2`.
    pub fn reduced_gradient(&self, p: &[f64]) -> Result<f64> {
        let xb = background_normal(&self.background, p)?;
        Ok(self.psi_bar.sphere_gradient(p, xb.as_slice()).norm())
    }
}

/// A weighted entropy with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEntropy {
    pub estimate: EntropyEstimate,
    pub unweighted: EntropyEstimate,
    pub samples: Vec<Sample>,
    pub x_norm: f64,
    /// `|E_w| / ((|E| + 1)·‖ψ‖)`.
    pub ratio: f64,
    /// Log-log slope of the Cauchy tail, when enough differences are
    /// above round-off.
    pub tail_slope: Option<f64>,
}

/// Differences rounded away below this are ignored by the tail slope.
const TAIL_FLOOR: f64 = 1e-13;

/// Weighted relative entropy of `s1` against `s2`.
pub fn weighted_entropy(
    s1: &dyn Immersion,
    s2: &dyn Immersion,
    w: &Weight,
    r: &DefiningFunction,
    eps: &[f64],
    tol: f64,
) -> Result<WeightedEntropy> {
    if s1.dimension() + 1 != w.dim {
        return invalid(format!("weight of ambient dimension {} on hypersurfaces of dimension {}", w.dim, s1.dimension()));
    }
    let plain: Vec<Sample> = truncated_differences(s1, s2, r, &UnitWeight, eps, tol)?.into_iter().map(Into::into).collect();
    let unweighted = entropy_limit(&plain)?;
    let samples: Vec<Sample> = truncated_differences(s1, s2, r, w, eps, tol)?.into_iter().map(Into::into).collect();
    let estimate = entropy_limit(&samples)?;
    let x_norm = x_norm_estimate(w, &SampleSpec::default())?;
    let ratio = if x_norm > 0.0 {
        estimate.value.abs() / ((unweighted.value.abs() + 1.0) * x_norm)
    } else {
        0.0
    };
    let tail_slope = tail_slope(&samples, TAIL_FLOOR).ok();
    Ok(WeightedEntropy {
        estimate,
        unweighted,
        samples,
        x_norm,
        ratio,
        tail_slope,
    })
}

/// `(Y1·v)(Y2·v) − [((Y1+Y2)/2·v)² − ((Y1−Y2)/2·v)²]`.
pub fn polarization_defect(y1: &[f64], y2: &[f64], v: &[f64]) -> f64 {
    let (a, b, v) = (vec3(y1), vec3(y2), vec3(v));
    let plus = ((a + b) * 0.5).dot(&v);
    let minus = ((a - b) * 0.5).dot(&v);
    a.dot(&v) * b.dot(&v) - (plus * plus - minus * minus)
}

/// `Σ_m ((c·ē_m)·v)² − c²` over the standard basis, for a unit `v`.
pub fn basis_decomposition_defect(c: f64, v: &[f64]) -> f64 {
    v.iter().map(|vm| (c * vm).powi(2)).sum::<f64>() - c * c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weight_norm_is_one() {
        let w = Weight::unit(2).unwrap();
        assert_eq!(x_norm_estimate(&w, &SampleSpec::default()).unwrap(), 1.0);
    }

    #[test]
    fn vertical_square_norm_terms() {
        let w = Weight::vertical_square(2).unwrap();
        let t = x_norm_terms(&w, &SampleSpec::default()).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12);
        assert!((t.sphere_gradient - 1.0).abs() < 1e-12);
        assert!((t.sphere_hessian - 2.0).abs() < 1e-12);
        assert_eq!(t.scaled_gradient, 0.0);
        assert_eq!(t.scaled_mixed, 0.0);
    }

    #[test]
    fn height_weight_scaled_gradient_bounded_by_band_top() {
        let w = Weight::height(2).unwrap();
        let t = x_norm_terms(&w, &SampleSpec::default()).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12);
        assert!((t.scaled_gradient - 1.0).abs() < 1e-9);
    }

    #[test]
    fn evenness() {
        let w = Weight::product(&[0.3, -1.2], &[2.0, 0.7]).unwrap();
        let p = [0.4, 0.2];
        for k in 0..20 {
            let a = k as f64 * 0.37;
            let v = [a.cos(), a.sin()];
            assert_eq!(w.eval(&p, &v), w.eval(&p, &[-v[0], -v[1]]));
        }
    }

    #[test]
    fn sphere_gradient_matches_angular_derivative() {
        let w = Weight::product(&[0.3, -1.2], &[2.0, 0.7]).unwrap();
        let p = [0.0, 0.5];
        let a = 0.81f64;
        let h = 1e-6;
        let f = |a: f64| w.eval(&p, &[a.cos(), a.sin()]);
        let d = (f(a + h) - f(a - h)) / (2.0 * h);
        let g = w.sphere_gradient(&p, &[a.cos(), a.sin()]);
        let tangent = Vector3::new(-a.sin(), a.cos(), 0.0);
        assert!((g.dot(&tangent) - d).abs() < 1e-8);
        assert!(g.dot(&Vector3::new(a.cos(), a.sin(), 0.0)).abs() < 1e-15);
    }

    #[test]
    fn v_independent_weight_reduces_to_itself() {
        let w = Weight::height(2).unwrap();
        let red = quadratic_reduction(&w, &NormalField::new(0.0, 1.0).unwrap(), 0.2).unwrap();
        let p = [0.9, 0.05];
        assert_eq!(red.y_psi(&p).unwrap(), [0.0, 0.0]);
        let v = [0.6, 0.8];
        assert_eq!(red.psi_bar().eval(&p, &v), w.eval(&p, &v));
    }

    #[test]
    fn y_parallel_to_normal_has_no_tangential_part() {
        let bg = NormalField::new(0.0, 1.0).unwrap();
        let p = [0.8, 0.3];
        let n = bg.unit_normal(p[0], p[1]).unwrap();
        let w = Weight::product(&[2.0 * n[0], 2.0 * n[1]], &n).unwrap();
        let red = quadratic_reduction(&w, &bg, 0.2).unwrap();
        let y = red.y_psi(&p).unwrap();
        assert!(y[0].hypot(y[1]) < 1e-15);
    }

    #[test]
    fn reduced_gradient_vanishes_below_half_eps() {
        let bg = NormalField::new(0.5, 2.0).unwrap();
        let w = Weight::product(&[0.3, 1.0], &[1.0, -0.4]).unwrap().combine(1.0, &Weight::vertical_square(2).unwrap(), 0.7).unwrap();
        let red = quadratic_reduction(&w, &bg, 0.2).unwrap();
        for &y in &[1e-4, 1e-3, 0.01, 0.05, 0.0999] {
            for &x in &[-1.4, 0.0, 2.5, 3.0] {
                assert!(red.reduced_gradient(&[x, y]).unwrap() <= 1e-10);
            }
        }
        let above: f64 = [[0.0, 0.5], [2.0, 0.6], [-1.0, 0.3]].iter().map(|p| red.reduced_gradient(p).unwrap()).fold(0.0, f64::max);
        assert!(above > 1e-3, "{above}");
    }

    #[test]
    fn reduction_rejects_points_off_the_plane() {
        let red = quadratic_reduction(&Weight::vertical_square(2).unwrap(), &NormalField::new(0.0, 1.0).unwrap(), 0.2).unwrap();
        assert!(matches!(red.y_psi(&[0.0, -1.0]), Err(Error::Domain(_))));
        assert!(quadratic_reduction(&Weight::vertical_square(3).unwrap(), &NormalField::new(0.0, 1.0).unwrap(), 0.2).is_err());
    }
}
