//! Minimal surfaces of revolution as immersions.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::series::BoundaryTaylor;
use super::shoot::{rhs, Shot};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{Boundary, HemisphereProfile, Immersion, Node, Profile, ProfilePoint, Revolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Disk,
    Annulus,
}

/// Meridian of a shot annulus: series cap `[0, y0]` rising from `r1`, the
/// integrated arc, and a series cap descending to the landing circle.
#[derive(Debug, Clone)]
pub(crate) struct ShotProfile {
    shot: Shot,
    end: BoundaryTaylor,
    target: f64,
}

impl ShotProfile {
    fn split(&self) -> (f64, f64, f64) {
        let y0 = self.shot.y_start;
        let len = self.shot.arclength();
        (y0, y0 + len, 2.0 * y0 + len)
    }
}

/// Which piece of the meridian a parameter lies on.
enum Piece {
    Start(f64),
    Arc(f64),
    End(f64),
}

impl ShotProfile {
    fn piece(&self, t: f64) -> Piece {
        let (a, b, total) = self.split();
        if t <= a {
            Piece::Start(t)
        } else if t < b {
            Piece::Arc(t - a)
        } else {
            Piece::End((total - t).max(0.0))
        }
    }
}

impl Profile for ShotProfile {
    fn domain(&self) -> (f64, f64) {
        (0.0, self.split().2)
    }

    fn eval(&self, t: f64) -> ProfilePoint {
        match self.piece(t) {
            Piece::Start(y) => {
                let (rho, d, _) = self.shot.start.eval(y);
                ProfilePoint { rho, y, drho: d, dy: 1.0 }
            }
            Piece::Arc(s) => {
                let u = self.shot.state(s);
                ProfilePoint {
                    rho: u[0],
                    y: u[1],
                    drho: u[2].cos(),
                    dy: u[2].sin(),
                }
            }
            Piece::End(y) => {
                let (rho, d, _) = self.end.eval(y);
                ProfilePoint {
                    rho,
                    y,
                    drho: -d,
                    dy: -1.0,
                }
            }
        }
    }

    fn ideal_params(&self) -> Vec<f64> {
        vec![0.0, self.split().2]
    }

    fn breakpoints(&self) -> Vec<f64> {
        let y0 = self.shot.y_start;
        self.shot.nodes.iter().map(|n| y0 + n.0).collect()
    }

    fn boundary_radii(&self) -> Vec<f64> {
        vec![self.shot.r1, self.target]
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Hemisphere(HemisphereProfile),
    Shot(Box<ShotProfile>),
}

/// A rotationally symmetric minimal surface in hyperbolic 3-space, about
/// the vertical axis through the origin.
#[derive(Debug, Clone)]
pub struct RevolutionSurface {
    shape: Shape,
}

/// One profile sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    /// Euclidean arclength from the first boundary circle.
    pub s: f64,
    pub rho: f64,
    pub y: f64,
}

impl RevolutionSurface {
    /// The totally geodesic hemisphere of radius `radius`.
    pub fn hemisphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return invalid(format!("hemisphere radius must be positive, got {radius}"));
        }
        Ok(Self {
            shape: Shape::Hemisphere(HemisphereProfile { radius }),
        })
    }

    pub(crate) fn from_shot(shot: Shot, target: f64) -> Result<Self> {
        let end = shot
            .end
            .clone()
            .ok_or_else(|| Error::Geometry(format!("shot a3 = {} did not land", shot.a3)))?;
        Ok(Self {
            shape: Shape::Shot(Box::new(ShotProfile { shot, end, target })),
        })
    }

    pub fn topology(&self) -> Topology {
        match self.shape {
            Shape::Hemisphere(_) => Topology::Disk,
            Shape::Shot(_) => Topology::Annulus,
        }
    }

    pub fn euler_characteristic(&self) -> i32 {
        match self.topology() {
            Topology::Disk => 1,
            Topology::Annulus => 0,
        }
    }

    /// Radii of the asymptotic circles, smallest first. For a shot annulus
    /// the outer radius is the requested one; the landing circle matches it
    /// to the root tolerance (see [`landing_radius`](Self::landing_radius)).
    pub fn radii(&self) -> Vec<f64> {
        self.profile().boundary_radii()
    }

    /// Radius of the circle where the integrated meridian actually lands.
    pub fn landing_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Hemisphere(_) => None,
            Shape::Shot(p) => Some(p.end.r0),
        }
    }

    /// Shooting parameter of an annulus.
    pub fn a3(&self) -> Option<f64> {
        match &self.shape {
            Shape::Hemisphere(_) => None,
            Shape::Shot(p) => Some(p.shot.a3),
        }
    }

    pub(crate) fn profile(&self) -> &dyn Profile {
        match &self.shape {
            Shape::Hemisphere(h) => h,
            Shape::Shot(p) => p.as_ref(),
        }
    }

    /// The surface as an immersion for quadrature.
    pub fn immersion(&self) -> Revolution<&RevolutionSurface> {
        Revolution::new(self)
    }

    /// Highest point of the meridian.
    pub fn max_height(&self) -> f64 {
        match &self.shape {
            Shape::Hemisphere(h) => h.radius,
            Shape::Shot(p) => p.shot.nodes.iter().map(|n| n.1[1]).fold(p.shot.y_start, f64::max),
        }
    }

    /// Euclidean length of the meridian.
    pub fn meridian_length(&self) -> f64 {
        match &self.shape {
            Shape::Hemisphere(h) => FRAC_PI_2 * h.radius,
            Shape::Shot(p) => p.shot.arclength() + cap_length(&p.shot.start, p.shot.y_start) + cap_length(&p.end, p.shot.y_start),
        }
    }

    /// Samples `(s, ρ, y)` at `count` parameter values evenly spread over the
    /// meridian, endpoints included.
    pub fn profile_samples(&self, count: usize) -> Vec<ProfileSample> {
        let count = count.max(2);
        match &self.shape {
            Shape::Hemisphere(h) => (0..count)
                .map(|i| {
                    let t = FRAC_PI_2 * i as f64 / (count - 1) as f64;
                    let p = h.eval(t);
                    ProfileSample {
                        s: h.radius * t,
                        rho: p.rho,
                        y: p.y,
                    }
                })
                .collect(),
            Shape::Shot(p) => {
                let (a, b, total) = p.split();
                let start_len = cap_length(&p.shot.start, a);
                (0..count)
                    .map(|i| {
                        let t = total * i as f64 / (count - 1) as f64;
                        let q = p.eval(t);
                        let s = match p.piece(t) {
                            Piece::Start(y) => cap_length(&p.shot.start, y),
                            Piece::Arc(s) => start_len + s,
                            Piece::End(y) => {
                                start_len + (b - a) + cap_length(&p.end, a) - cap_length(&p.end, y)
                            }
                        };
                        ProfileSample { s, rho: q.rho, y: q.y }
                    })
                    .collect()
            }
        }
    }

    /// Radius `ρ(y)` of the branch leaving the first (smallest) circle, for
    /// heights where that branch is still a graph over `y`.
    pub fn rho_near_first_circle(&self, y: f64) -> Result<f64> {
        match &self.shape {
            Shape::Hemisphere(h) => {
                if !(y >= 0.0 && y < h.radius) {
                    return Err(Error::Geometry(format!("height {y} outside the hemisphere")));
                }
                Ok((h.radius * h.radius - y * y).sqrt())
            }
            Shape::Shot(p) => {
                let shot = &p.shot;
                if y <= shot.y_start {
                    return Ok(shot.start.eval(y).0);
                }
                let mut prev = shot.nodes[0];
                for &node in &shot.nodes[1..] {
                    if node.1[2].sin() <= 0.0 {
                        break;
                    }
                    if node.1[1] >= y {
                        let (mut lo, mut hi) = (prev.0, node.0);
                        for _ in 0..200 {
                            let mid = 0.5 * (lo + hi);
                            if !(mid > lo && mid < hi) {
                                break;
                            }
                            if shot.state(mid)[1] < y {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        return Ok(shot.state(0.5 * (lo + hi))[0]);
                    }
                    prev = node;
                }
                Err(Error::Geometry(format!(
                    "meridian is not a graph over y up to height {y}"
                )))
            }
        }
    }

    /// Principal curvature difference `κ1 − κ2` (Euclidean, about the
    /// meridian normal), the area density `2πρ` and the parameter speed at `t`.
    pub(crate) fn curvature_gap(&self, t: f64) -> (f64, f64, f64) {
        match &self.shape {
            Shape::Hemisphere(h) => {
                let p = h.eval(t);
                let speed = p.drho.hypot(p.dy);
                let k1 = 1.0 / h.radius;
                let k2 = p.dy / (speed * p.rho);
                (k1 - k2, 2.0 * PI * p.rho, speed)
            }
            Shape::Shot(p) => match p.piece(t) {
                Piece::Start(y) => {
                    let (rho, d1, d2) = p.shot.start.eval(y);
                    let w = (1.0 + d1 * d1).sqrt();
                    (-d2 / (w * w * w) - 1.0 / (w * rho), 2.0 * PI * rho, w)
                }
                Piece::Arc(s) => {
                    let u = p.shot.state(s);
                    let k1 = rhs(&u)[2];
                    let k2 = u[2].sin() / u[0];
                    (k1 - k2, 2.0 * PI * u[0], 1.0)
                }
                Piece::End(y) => {
                    let (rho, d1, d2) = p.end.eval(y);
                    let w = (1.0 + d1 * d1).sqrt();
                    (d2 / (w * w * w) + 1.0 / (w * rho), 2.0 * PI * rho, w)
                }
            },
        }
    }

    /// Parameter intervals of the meridian pieces and their breakpoints.
    pub(crate) fn pieces(&self) -> Vec<Vec<f64>> {
        match &self.shape {
            Shape::Hemisphere(_) => vec![vec![0.0, FRAC_PI_2]],
            Shape::Shot(p) => {
                let (a, b, total) = p.split();
                let mut arc = vec![a];
                arc.extend(p.breakpoints().into_iter().filter(|t| *t > a && *t < b));
                arc.push(b);
                vec![vec![0.0, a], arc, vec![b, total]]
            }
        }
    }

    pub(crate) fn shot(&self) -> Option<&Shot> {
        match &self.shape {
            Shape::Hemisphere(_) => None,
            Shape::Shot(p) => Some(&p.shot),
        }
    }
}

fn cap_length(t: &BoundaryTaylor, y: f64) -> f64 {
    let (nodes, weights) = crate::quadrature::gauss_legendre(16);
    let half = 0.5 * y;
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| {
            let d = t.eval(half * (1.0 + x)).1;
            w * (1.0 + d * d).sqrt()
        })
        .sum::<f64>()
        * half
}

impl Profile for RevolutionSurface {
    fn domain(&self) -> (f64, f64) {
        self.profile().domain()
    }

    fn eval(&self, t: f64) -> ProfilePoint {
        self.profile().eval(t)
    }

    fn ideal_params(&self) -> Vec<f64> {
        self.profile().ideal_params()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.profile().breakpoints()
    }

    fn boundary_radii(&self) -> Vec<f64> {
        self.profile().boundary_radii()
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }

    fn eval(&self, t: f64) -> ProfilePoint {
        (**self).eval(t)
    }

    fn ideal_params(&self) -> Vec<f64> {
        (**self).ideal_params()
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }

    fn boundary_radii(&self) -> Vec<f64> {
        (**self).boundary_radii()
    }
}

impl Immersion for RevolutionSurface {
    fn dimension(&self) -> usize {
        2
    }

    fn domain(&self) -> (f64, f64) {
        Profile::domain(self)
    }

    fn node(&self, t: f64, phi: f64) -> Node {
        self.immersion().node(t, phi)
    }

    fn ideal_params(&self) -> Vec<f64> {
        Profile::ideal_params(self)
    }

    fn breakpoints(&self) -> Vec<f64> {
        Profile::breakpoints(self)
    }

    fn rotation_axis(&self) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }

    fn boundary(&self) -> Boundary {
        self.immersion().boundary()
    }
}
