//! Gauss–Legendre nodes and weights on `[-1, 1]`.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Order of the per-cell rule used by the adaptive integrator.
pub const CELL_ORDER: usize = 8;

/// Nodes and weights of the `n`-point rule, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub(crate) fn cell_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(CELL_ORDER))
}

/// Fixed-order rule on `[a, b]`.
#[inline]
pub(crate) fn fixed<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = cell_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_eight_table() {
        let (x, w) = gauss_legendre(8);
        let xs = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
        let ws = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
        for k in 0..4 {
            assert!((x[4 + k] - xs[k]).abs() < 1e-15);
            assert!((x[3 - k] + xs[k]).abs() < 1e-15);
            assert!((w[4 + k] - ws[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_for_degree_fifteen() {
        let mut f = |x: f64| x.powi(14) + 3.0 * x.powi(15) - x.powi(3);
        let v = fixed(&mut f, -1.0, 2.0);
        let exact = (2f64.powi(15) + 1.0) / 15.0 + 3.0 * (2f64.powi(16) - 1.0) / 16.0 - (16.0 - 1.0) / 4.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn odd_rules_contain_zero() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
