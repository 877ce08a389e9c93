//! Boundary power series of a rotationally symmetric minimal profile
//! `ρ(y) = a_0 + a_1 y + a_2 y² + …` meeting `{y = 0}` orthogonally.
//!
//! The profile equation `y ρ ρ'' = (1 + ρ'²)(y + 2ρρ')` fixes every
//! coefficient except `a_3`: matching the `y^{k-1}` terms gives
//! `a_0 k(k-3) a_k = (terms in a_0 … a_{k-1})`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Highest supported series order.
pub const MAX_ORDER: usize = 6;

/// Truncated series coefficients at one boundary circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTaylor {
    pub r0: f64,
    pub a3: f64,
    pub order: usize,
    /// `a_0 … a_order`
    pub coefficients: Vec<f64>,
}

fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, x) in a.iter().enumerate().take(n + 1) {
        for (j, y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn derivative(a: &[f64]) -> Vec<f64> {
    (1..a.len()).map(|k| k as f64 * a[k]).chain(std::iter::once(0.0)).collect()
}

/// Coefficient of `y^d` in `(1 + ρ'²)(y + 2ρρ') − yρρ''`.
fn defect(a: &[f64], d: usize) -> f64 {
    let n = d + 1;
    let rho: Vec<f64> = a.iter().copied().chain(std::iter::repeat(0.0)).take(n + 1).collect();
    let d1 = derivative(&rho);
    let d2 = derivative(&d1);
    let mut y = vec![0.0; n + 1];
    y[1] = 1.0;
    let mut one_plus = mul(&d1, &d1, n);
    one_plus[0] += 1.0;
    let rr1 = mul(&rho, &d1, n);
    let inner: Vec<f64> = y.iter().zip(&rr1).map(|(a, b)| a + 2.0 * b).collect();
    let rhs = mul(&one_plus, &inner, n);
    let lhs = mul(&y, &mul(&rho, &d2, n), n);
    rhs[d] - lhs[d]
}

impl BoundaryTaylor {
    /// Series of order `order` (2 ≤ order ≤ 6) with boundary radius `r0`
    /// and free third coefficient `a3`.
    pub fn new(r0: f64, a3: f64, order: usize) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return invalid(format!("boundary radius must be positive, got {r0}"));
        }
        if !a3.is_finite() {
            return invalid("a3 must be finite");
        }
        if !(2..=MAX_ORDER).contains(&order) {
            return invalid(format!("series order must be in 2..={MAX_ORDER}, got {order}"));
        }
        let mut a = vec![r0, 0.0, -0.5 / r0];
        for k in 3..=order {
            if k == 3 {
                a.push(a3);
                continue;
            }
            a.push(0.0);
            let rest = defect(&a, k - 1);
            a[k] = rest / (r0 * (k * (k - 3)) as f64);
        }
        Ok(Self {
            r0,
            a3,
            order,
            coefficients: a,
        })
    }

    pub fn a(&self, k: usize) -> f64 {
        self.coefficients.get(k).copied().unwrap_or(0.0)
    }

    /// `(ρ, ρ', ρ'')` at height `y`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (k, c) in self.coefficients.iter().enumerate().rev() {
            let kf = k as f64;
            v = v * y + c;
            if k >= 1 {
                d1 = d1 * y + kf * c;
            }
            if k >= 2 {
                d2 = d2 * y + kf * (kf - 1.0) * c;
            }
        }
        (v, d1, d2)
    }

    /// Residual of `y ρ ρ'' − (1 + ρ'²)(y + 2ρρ')` at `y`; of order
    /// `y^order` for a consistent series.
    pub fn residual(&self, y: f64) -> f64 {
        let (r, d1, d2) = self.eval(y);
        y * r * d2 - (1.0 + d1 * d1) * (y + 2.0 * r * d1)
    }
}

/// Boundary series of the profile with radius `r0` and parameter `a3`.
pub fn boundary_taylor(r0: f64, a3: f64, order: usize) -> Result<BoundaryTaylor> {
    BoundaryTaylor::new(r0, a3, order)
}
