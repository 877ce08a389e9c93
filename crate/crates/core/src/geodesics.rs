//! Closed forms for geodesics of the hyperbolic plane: truncated lengths,
//! cross ratios and the relative entropy of endpoint pairings.
//!
//! A geodesic with ideal endpoints `a < b` is the semicircle
//! `y² + (x − a)(x − b) = 0`. Its hyperbolic length above height `ε` is
//! `2 ln((b − a + √((b − a)² − 4ε²)) / (2ε))`, so differences over
//! configurations sharing their endpoints converge as `ε → 0`.


use crate::error::{invalid, Error, Result};
use crate::halfspace::MobiusMap;

/// Geodesic semicircle between two ideal points `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicH2 {
    a: f64,
    b: f64,
}

impl GeodesicH2 {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return invalid(format!("geodesic endpoints must satisfy a < b, got ({a}, {b})"));
        }
        Ok(Self { a, b })
    }

    pub fn endpoints(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    /// Point at angle `θ ∈ [0, π]` measured from the right endpoint.
    pub fn point(&self, theta: f64) -> (f64, f64) {
        let r = self.radius();
        (self.center() + r * theta.cos(), r * theta.sin())
    }

    /// `y² + (x − a)(x − b)`, zero on the geodesic.
    pub fn implicit(&self, x: f64, y: f64) -> f64 {
        y * y + (x - self.a) * (x - self.b)
    }

    /// Hyperbolic length of the part above height `eps`.
    pub fn truncated_length(&self, eps: f64) -> Result<f64> {
        truncated_length_exact(self, eps)
    }
}

/// `2 ln((b − a + √((b − a)² − 4ε²)) / (2ε))` for `0 < ε < (b − a)/2`.
pub fn truncated_length_exact(g: &GeodesicH2, eps: f64) -> Result<f64> {
    let w = g.b - g.a;
    if !(eps > 0.0) {
        return invalid(format!("truncation height must be positive, got {eps}"));
    }
    if eps >= 0.5 * w {
        return Err(Error::EmptyTruncation {
            eps,
            apex: 0.5 * w,
        });
    }
    let s = ((w - 2.0 * eps) * (w + 2.0 * eps)).sqrt();
    Ok(2.0 * ((w + s) / (2.0 * eps)).ln())
}

/// Cross ratio `((a2 − a1)(a4 − a3)) / ((a3 − a1)(a4 − a2))` of four
/// increasing points; it lies in `(0, 1)`.
pub fn cross_ratio(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<f64> {
    let pts = [a1, a2, a3, a4];
    if pts.iter().any(|v| !v.is_finite()) || !(a1 < a2 && a2 < a3 && a3 < a4) {
        return invalid(format!("cross ratio needs a1 < a2 < a3 < a4, got {pts:?}"));
    }
    Ok(((a2 - a1) * (a4 - a3)) / ((a3 - a1) * (a4 - a2)))
}

/// A finite union of geodesics given by a perfect matching on sorted
/// ideal endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicConfig {
    endpoints: Vec<f64>,
    pairing: Vec<(usize, usize)>,
}

impl GeodesicConfig {
    /// `endpoints` must be strictly increasing; `pairing` indexes into it
    /// and must use every endpoint exactly once.
    pub fn new(endpoints: Vec<f64>, pairing: Vec<(usize, usize)>) -> Result<Self> {
        if endpoints.is_empty() || endpoints.len() % 2 != 0 {
            return invalid("a configuration needs a positive even number of endpoints");
        }
        if endpoints.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite endpoint");
        }
        if endpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("endpoints must be strictly increasing and distinct");
        }
        if pairing.len() * 2 != endpoints.len() {
            return invalid("pairing must have one pair per two endpoints");
        }
        let mut used = vec![false; endpoints.len()];
        let mut normalized = Vec::with_capacity(pairing.len());
        for &(i, j) in &pairing {
            if i >= endpoints.len() || j >= endpoints.len() || i == j {
                return invalid(format!("bad pair ({i}, {j})"));
            }
            for k in [i, j] {
                if used[k] {
                    return invalid(format!("endpoint {k} is used twice"));
                }
                used[k] = true;
            }
            normalized.push((i.min(j), i.max(j)));
        }
        normalized.sort_unstable();
        Ok(Self {
            endpoints,
            pairing: normalized,
        })
    }

    /// Build from explicit endpoint pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut endpoints: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        endpoints.sort_by(f64::total_cmp);
        let index = |v: f64| endpoints.iter().position(|&e| e == v).unwrap();
        let pairing = pairs.iter().map(|&(a, b)| (index(a), index(b))).collect();
        Self::new(endpoints.clone(), pairing)
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    pub fn geodesics(&self) -> Vec<GeodesicH2> {
        self.pairing
            .iter()
            .map(|&(i, j)| GeodesicH2 {
                a: self.endpoints[i],
                b: self.endpoints[j],
            })
            .collect()
    }

    /// Two configurations can be compared iff they share their endpoints
    /// exactly.
    pub fn comparable(&self, other: &GeodesicConfig) -> bool {
        self.endpoints == other.endpoints
    }

    /// Sum of the truncated lengths of the components.
    pub fn truncated_length(&self, eps: f64) -> Result<f64> {
        self.geodesics()
            .iter()
            .map(|g| truncated_length_exact(g, eps))
            .sum()
    }

    pub fn min_radius(&self) -> f64 {
        self.geodesics()
            .iter()
            .map(GeodesicH2::radius)
            .fold(f64::INFINITY, f64::min)
    }

    /// Image under a Möbius map; fails if an endpoint is sent to infinity.
    pub fn transformed(&self, m: &MobiusMap) -> Result<GeodesicConfig> {
        let pairs = self
            .pairing
            .iter()
            .map(|&(i, j)| {
                let u = m.apply_boundary(self.endpoints[i])?;
                let v = m.apply_boundary(self.endpoints[j])?;
                Ok((u.min(v), u.max(v)))
            })
            .collect::<Result<Vec<_>>>()?;
        GeodesicConfig::from_pairs(&pairs)
    }

    fn log_gap_sum(&self) -> f64 {
        self.pairing
            .iter()
            .map(|&(i, j)| (self.endpoints[j] - self.endpoints[i]).ln())
            .sum()
    }
}

/// Exact relative entropy `2 Σ ln|gaps of c1| − 2 Σ ln|gaps of c2|`.
pub fn relative_entropy_exact(c1: &GeodesicConfig, c2: &GeodesicConfig) -> Result<f64> {
    if !c1.comparable(c2) {
        return Err(Error::IncomparableConfigs(format!(
            "endpoint sets differ: {:?} vs {:?}",
            c1.endpoints, c2.endpoints
        )));
    }
    Ok(2.0 * (c1.log_gap_sum() - c2.log_gap_sum()))
}

/// The three matchings of four ideal points and their pairwise entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingTable {
    /// `{(a1,a2),(a3,a4)}`, `{(a1,a3),(a2,a4)}`, `{(a1,a4),(a2,a3)}`.
    pub configs: [GeodesicConfig; 3],
    /// `table[i][j] = E_rel[configs[i], configs[j]]`.
    pub table: [[f64; 3]; 3],
}

pub fn enumerate_pairings(endpoints: [f64; 4]) -> Result<PairingTable> {
    cross_ratio(endpoints[0], endpoints[1], endpoints[2], endpoints[3])?;
    let e = endpoints.to_vec();
    let configs = [
        GeodesicConfig::new(e.clone(), vec![(0, 1), (2, 3)])?,
        GeodesicConfig::new(e.clone(), vec![(0, 2), (1, 3)])?,
        GeodesicConfig::new(e, vec![(0, 3), (1, 2)])?,
    ];
    let mut table = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                table[i][j] = relative_entropy_exact(&configs[i], &configs[j])?;
            }
        }
    }
    Ok(PairingTable { configs, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Length of the part above `eps` by brute-force midpoint summation of
    /// `(1/y)·ds` in the angle parametrization.
    fn brute_force_length(g: &GeodesicH2, eps: f64, cells: usize) -> f64 {
        let r = g.radius();
        let t0 = (eps / r).asin();
        let t1 = PI - t0;
        let h = (t1 - t0) / cells as f64;
        (0..cells)
            .map(|k| {
                let t = t0 + (k as f64 + 0.5) * h;
                r / (r * t.sin()) * h
            })
            .sum()
    }

    #[test]
    fn truncated_length_examples() {
        let g = GeodesicH2::new(0.0, 1.0).unwrap();
        let len = truncated_length_exact(&g, 0.1).unwrap();
        assert_relative_eq!(len, 4.584_863_339_122_355, epsilon = 1e-12);
        assert_relative_eq!(len, brute_force_length(&g, 0.1, 200_000), epsilon = 1e-8);
        assert!(truncated_length_exact(&g, 0.5 - 1e-12).unwrap() < 1e-5);
        assert!(matches!(
            truncated_length_exact(&g, 0.5),
            Err(Error::EmptyTruncation { .. })
        ));
        let g2 = GeodesicH2::new(0.0, 2.0).unwrap();
        let d = truncated_length_exact(&g2, 1e-6).unwrap() - truncated_length_exact(&g, 1e-6).unwrap();
        assert_relative_eq!(d, 2.0 * 2f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn truncated_length_is_decreasing_and_renormalizes() {
        let g = GeodesicH2::new(-0.3, 1.7).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let eps = k as f64 * 0.0099;
            let v = truncated_length_exact(&g, eps).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let renorm = truncated_length_exact(&g, 1e-7).unwrap() - 2.0 * (1e7f64).ln();
        assert_relative_eq!(renorm, 2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn implicit_equation_holds_on_the_parametrization() {
        let g = GeodesicH2::new(-1.0, 3.0).unwrap();
        for t in (1..=50).map(|k| k as f64 * PI / 51.0) {
            let (x, y) = g.point(t);
            assert!(g.implicit(x, y).abs() < 1e-13);
        }
        assert!(GeodesicH2::new(1.0, 1.0).is_err());
    }

    #[test]
    fn cross_ratio_examples() {
        assert_relative_eq!(cross_ratio(0.0, 1.0, 2.0, 4.0).unwrap(), 1.0 / 3.0);
        assert_relative_eq!(cross_ratio(0.0, 1.0, 2.0, 3.0).unwrap(), 0.25);
        assert!(cross_ratio(0.0, 2.0, 1.0, 3.0).is_err());
        assert!(cross_ratio(0.0, 1.0, 1.0, 3.0).is_err());
        let m = MobiusMap::new(2.0, 1.0, 0.1, 1.0).unwrap();
        let img: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
            .iter()
            .map(|&x| m.apply_boundary(x).unwrap())
            .collect();
        assert_relative_eq!(
            cross_ratio(img[0], img[1], img[2], img[3]).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn relative_entropy_examples() {
        let e = vec![0.0, 1.0, 2.0, 4.0];
        let c1 = GeodesicConfig::new(e.clone(), vec![(0, 1), (2, 3)]).unwrap();
        let c2 = GeodesicConfig::new(e.clone(), vec![(0, 2), (1, 3)]).unwrap();
        let c3 = GeodesicConfig::new(e, vec![(0, 3), (1, 2)]).unwrap();
        let v = relative_entropy_exact(&c1, &c2).unwrap();
        assert_relative_eq!(v, 2.0 * (1.0f64 / 3.0).ln(), epsilon = 1e-14);
        assert_relative_eq!(v, -2.197_224_577_336_219_6, epsilon = 1e-14);
        assert_eq!(relative_entropy_exact(&c1, &c1).unwrap(), 0.0);
        let cyc = relative_entropy_exact(&c1, &c2).unwrap()
            + relative_entropy_exact(&c2, &c3).unwrap()
            + relative_entropy_exact(&c3, &c1).unwrap();
        assert!(cyc.abs() < 1e-14);
    }

    #[test]
    fn limit_of_closed_form_matches_entropy() {
        let e = vec![0.0, 1.0, 2.0, 4.0];
        let c1 = GeodesicConfig::new(e.clone(), vec![(0, 1), (2, 3)]).unwrap();
        let c2 = GeodesicConfig::new(e, vec![(0, 2), (1, 3)]).unwrap();
        let d = c1.truncated_length(1e-7).unwrap() - c2.truncated_length(1e-7).unwrap();
        assert_relative_eq!(d, relative_entropy_exact(&c1, &c2).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn incomparable_configs() {
        let c1 = GeodesicConfig::from_pairs(&[(0.0, 1.0)]).unwrap();
        let c2 = GeodesicConfig::from_pairs(&[(0.0, 2.0)]).unwrap();
        assert!(matches!(
            relative_entropy_exact(&c1, &c2),
            Err(Error::IncomparableConfigs(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(GeodesicConfig::new(vec![0.0, 1.0, 1.0, 2.0], vec![(0, 1), (2, 3)]).is_err());
        assert!(GeodesicConfig::new(vec![0.0, 1.0, 2.0, 3.0], vec![(0, 1), (1, 3)]).is_err());
        assert!(GeodesicConfig::new(vec![0.0, 1.0, 2.0], vec![(0, 1)]).is_err());
        let c = GeodesicConfig::from_pairs(&[(2.0, 4.0), (0.0, 1.0)]).unwrap();
        assert_eq!(c.pairing(), &[(0, 1), (2, 3)]);
    }

    #[test]
    fn pairing_table() {
        let t = enumerate_pairings([0.0, 1.0, 2.0, 4.0]).unwrap();
        let l = (1.0f64 / 3.0).ln();
        assert_relative_eq!(t.table[0][1], 2.0 * l, epsilon = 1e-14);
        assert_relative_eq!(t.table[1][0], -2.0 * l, epsilon = 1e-14);
        for i in 0..3 {
            assert_eq!(t.table[i][i], 0.0);
            for j in 0..3 {
                assert!((t.table[i][j] + t.table[j][i]).abs() < 1e-14);
            }
        }
        let cycle = t.table[0][1] + t.table[1][2] + t.table[2][0];
        assert!(cycle.abs() < 1e-14);
        // every off-diagonal entry is 2 ln |permuted cross ratio|
        let (a1, a2, a3, a4) = (0.0f64, 1.0f64, 2.0f64, 4.0f64);
        let lambda = cross_ratio(a1, a2, a3, a4).unwrap();
        let perms = [lambda, 1.0 - lambda, 1.0 / lambda, 1.0 / (1.0 - lambda), lambda / (lambda - 1.0), (lambda - 1.0) / lambda];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let v = (t.table[i][j] / 2.0).exp();
                    assert!(perms.iter().any(|p| (p.abs() - v).abs() < 1e-12), "{v}");
                }
            }
        }
    }

    #[test]
    fn mobius_invariance_of_exact_entropy() {
        let e = vec![-0.5, 0.2, 1.1, 3.0];
        let c1 = GeodesicConfig::new(e.clone(), vec![(0, 1), (2, 3)]).unwrap();
        let c2 = GeodesicConfig::new(e, vec![(0, 3), (1, 2)]).unwrap();
        let base = relative_entropy_exact(&c1, &c2).unwrap();
        for m in [
            MobiusMap::new(2.0, 1.0, 0.0, 1.0).unwrap(),
            MobiusMap::new(1.0, 0.0, 0.2, 1.0).unwrap(),
            MobiusMap::new(0.0, -1.0, 1.0, 5.0).unwrap(),
            // pole inside the hull: endpoints wrap around
            MobiusMap::new(0.0, -1.0, 1.0, -0.7).unwrap(),
        ] {
            let v = relative_entropy_exact(&c1.transformed(&m).unwrap(), &c2.transformed(&m).unwrap()).unwrap();
            assert_relative_eq!(v, base, epsilon = 1e-10);
        }
    }
}
