//! Parametrized curves and surfaces of revolution, evaluated node by node.

use std::f64::consts::PI;

use smallvec::{smallvec, SmallVec};

use crate::geodesics::{GeodesicConfig, GeodesicH2};

/// Geometry at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Boundary coordinates `x` (length n).
    pub x: SmallVec<[f64; 2]>,
    /// Height `y > 0`.
    pub y: f64,
    /// Euclidean unit normal, `n + 1` components (height last).
    pub normal: SmallVec<[f64; 3]>,
    /// Euclidean area element per unit parameter measure.
    pub jacobian: f64,
}

/// Ideal boundary of an immersion, used to decide comparability.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Endpoints of a union of curves in the hyperbolic plane, sorted.
    Points(Vec<f64>),
    /// Concentric circles in the boundary plane, radii sorted.
    Circles { center: [f64; 2], radii: Vec<f64> },
}

impl Boundary {
    /// Equality of the boundary sets up to a few ulps, so that endpoints
    /// rebuilt from a center and a radius still match.
    pub fn matches(&self, other: &Boundary) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 8.0 * f64::EPSILON * x.abs().max(y.abs()).max(1.0))
        };
        match (self, other) {
            (Boundary::Points(a), Boundary::Points(b)) => close(a, b),
            (Boundary::Circles { center: c1, radii: r1 }, Boundary::Circles { center: c2, radii: r2 }) => c1 == c2 && close(r1, r2),
            _ => false,
        }
    }
}

/// A hypersurface of dimension 1 (curve in the hyperbolic plane) or 2
/// (surface of revolution in hyperbolic 3-space), given by an evaluator on
/// a parameter domain.
///
/// For dimension 2 the domain is the strip `[t0, t1] × [0, 2π)` and
/// `phi` is the azimuth; curves ignore `phi`.
pub trait Immersion: Send + Sync {
    fn dimension(&self) -> usize;

    /// Range of the profile/curve parameter `t`.
    fn domain(&self) -> (f64, f64);

    /// Geometry at `(t, phi)`. Only called where the height is positive.
    fn node(&self, t: f64, phi: f64) -> Node;

    /// Parameters where the immersion reaches the ideal boundary.
    fn ideal_params(&self) -> Vec<f64> {
        let (a, b) = self.domain();
        vec![a, b]
    }

    /// Parameters where the evaluator is only piecewise smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Axis of rotational symmetry (surfaces of revolution only).
    fn rotation_axis(&self) -> Option<[f64; 2]> {
        None
    }

    fn boundary(&self) -> Boundary;
}

/// Geodesic semicircle parametrized by the angle `θ ∈ (0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicArc {
    pub center: f64,
    pub radius: f64,
}

impl From<GeodesicH2> for GeodesicArc {
    fn from(g: GeodesicH2) -> Self {
        Self {
            center: g.center(),
            radius: g.radius(),
        }
    }
}

impl Immersion for GeodesicArc {
    fn dimension(&self) -> usize {
        1
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, PI)
    }

    fn node(&self, t: f64, _phi: f64) -> Node {
        let (s, c) = t.sin_cos();
        Node {
            x: smallvec![self.center + self.radius * c],
            y: self.radius * s,
            normal: smallvec![c, s],
            jacobian: self.radius,
        }
    }

    fn boundary(&self) -> Boundary {
        Boundary::Points(vec![self.center - self.radius, self.center + self.radius])
    }
}

/// Disjoint union of immersions of the same dimension; component `i`
/// occupies the parameter range `[i, i + 1]`.
pub struct ImmersionUnion {
    parts: Vec<Box<dyn Immersion>>,
}

impl ImmersionUnion {
    pub fn new(parts: Vec<Box<dyn Immersion>>) -> Self {
        assert!(!parts.is_empty(), "empty union");
        let d = parts[0].dimension();
        assert!(parts.iter().all(|p| p.dimension() == d), "mixed dimensions");
        Self { parts }
    }

    /// The union of geodesic arcs of a configuration.
    pub fn from_config(config: &GeodesicConfig) -> Self {
        Self::new(
            config
                .geodesics()
                .into_iter()
                .map(|g| Box::new(GeodesicArc::from(g)) as Box<dyn Immersion>)
                .collect(),
        )
    }

    pub fn parts(&self) -> &[Box<dyn Immersion>] {
        &self.parts
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let k = self.parts.len();
        let i = (t.floor().max(0.0) as usize).min(k - 1);
        let (a, b) = self.parts[i].domain();
        (i, a + (t - i as f64) * (b - a))
    }

    fn to_union(&self, i: usize, local: f64) -> f64 {
        let (a, b) = self.parts[i].domain();
        i as f64 + (local - a) / (b - a)
    }
}

impl Immersion for ImmersionUnion {
    fn dimension(&self) -> usize {
        self.parts[0].dimension()
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.parts.len() as f64)
    }

    fn node(&self, t: f64, phi: f64) -> Node {
        let (i, local) = self.locate(t);
        let (a, b) = self.parts[i].domain();
        let mut n = self.parts[i].node(local, phi);
        n.jacobian *= b - a;
        n
    }

    fn ideal_params(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .parts
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.ideal_params().into_iter().map(move |s| (i, s)))
            .map(|(i, s)| self.to_union(i, s))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (1..self.parts.len()).map(|i| i as f64).collect();
        for (i, p) in self.parts.iter().enumerate() {
            out.extend(p.breakpoints().into_iter().map(|s| self.to_union(i, s)));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn rotation_axis(&self) -> Option<[f64; 2]> {
        let first = self.parts[0].rotation_axis()?;
        self.parts
            .iter()
            .all(|p| p.rotation_axis() == Some(first))
            .then_some(first)
    }

    fn boundary(&self) -> Boundary {
        let mut pts = Vec::new();
        let mut circles: Option<([f64; 2], Vec<f64>)> = None;
        for p in &self.parts {
            match p.boundary() {
                Boundary::Points(v) => pts.extend(v),
                Boundary::Circles { center, radii } => {
                    let entry = circles.get_or_insert((center, Vec::new()));
                    entry.1.extend(radii);
                }
            }
        }
        match circles {
            Some((center, mut radii)) => {
                radii.sort_by(f64::total_cmp);
                Boundary::Circles { center, radii }
            }
            None => {
                pts.sort_by(f64::total_cmp);
                Boundary::Points(pts)
            }
        }
    }
}

/// Profile point of a meridian curve `t ↦ (ρ(t), y(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub rho: f64,
    pub y: f64,
    pub drho: f64,
    pub dy: f64,
}

/// Meridian of a surface of revolution about the vertical axis.
pub trait Profile: Send + Sync {
    fn domain(&self) -> (f64, f64);
    fn eval(&self, t: f64) -> ProfilePoint;
    fn ideal_params(&self) -> Vec<f64>;
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Radii of the boundary circles, sorted.
    fn boundary_radii(&self) -> Vec<f64>;
}

/// Surface of revolution of a profile about the vertical line through
/// `center`.
pub struct Revolution<P> {
    pub profile: P,
    pub center: [f64; 2],
}

impl<P: Profile> Revolution<P> {
    pub fn new(profile: P) -> Self {
        Self {
            profile,
            center: [0.0, 0.0],
        }
    }
}

impl<P: Profile> Immersion for Revolution<P> {
    fn dimension(&self) -> usize {
        2
    }

    fn domain(&self) -> (f64, f64) {
        self.profile.domain()
    }

    fn node(&self, t: f64, phi: f64) -> Node {
        let p = self.profile.eval(t);
        let speed = p.drho.hypot(p.dy);
        let (s, c) = phi.sin_cos();
        let (nr, ny) = (p.dy / speed, -p.drho / speed);
        Node {
            x: smallvec![self.center[0] + p.rho * c, self.center[1] + p.rho * s],
            y: p.y,
            normal: smallvec![nr * c, nr * s, ny],
            jacobian: p.rho * speed,
        }
    }

    fn ideal_params(&self) -> Vec<f64> {
        self.profile.ideal_params()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }

    fn rotation_axis(&self) -> Option<[f64; 2]> {
        Some(self.center)
    }

    fn boundary(&self) -> Boundary {
        Boundary::Circles {
            center: self.center,
            radii: self.profile.boundary_radii(),
        }
    }
}

/// Totally geodesic hemisphere of radius `R`: `t ∈ [0, π/2]` is the
/// elevation angle, `t = 0` on the ideal boundary and `t = π/2` at the top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemisphereProfile {
    pub radius: f64,
}

impl Profile for HemisphereProfile {
    fn domain(&self) -> (f64, f64) {
        (0.0, 0.5 * PI)
    }

    fn eval(&self, t: f64) -> ProfilePoint {
        let (s, c) = t.sin_cos();
        ProfilePoint {
            rho: self.radius * c,
            y: self.radius * s,
            drho: -self.radius * s,
            dy: self.radius * c,
        }
    }

    fn ideal_params(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn boundary_radii(&self) -> Vec<f64> {
        vec![self.radius]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn unit_normals() {
        let arc = GeodesicArc { center: 0.4, radius: 1.3 };
        let hemi = Revolution::new(HemisphereProfile { radius: 2.0 });
        for k in 1..50 {
            let t = k as f64 / 50.0;
            assert!((norm(&arc.node(t * PI, 0.0).normal) - 1.0).abs() < 1e-12);
            for j in 0..8 {
                let n = hemi.node(t * 0.5 * PI, j as f64);
                assert!((norm(&n.normal) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn union_maps_parameters() {
        let c = GeodesicConfig::from_pairs(&[(0.0, 1.0), (2.0, 4.0)]).unwrap();
        let u = ImmersionUnion::from_config(&c);
        assert_eq!(u.domain(), (0.0, 2.0));
        assert_eq!(u.ideal_params(), vec![0.0, 1.0, 2.0]);
        let n = u.node(1.5, 0.0);
        assert!((n.x[0] - 3.0).abs() < 1e-15 && (n.y - 1.0).abs() < 1e-15);
        assert_eq!(u.boundary(), Boundary::Points(vec![0.0, 1.0, 2.0, 4.0]));
    }
}
