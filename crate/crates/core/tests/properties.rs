use proptest::prelude::*;

use hyprel::expansion::{entropy_limit, fit_expansion_with_tail, geometric_grid, Sample};
use hyprel::flow::{graph_scaling_test, NearBoundaryGraph, RadialCurveState};
use hyprel::geodesics::{cross_ratio, relative_entropy_exact, truncated_length_exact, GeodesicConfig, GeodesicH2};
use hyprel::halfspace::{HalfSpacePoint, MobiusMap};
use hyprel::weights::{basis_decomposition_defect, polarization_defect};

/// Four increasing endpoints with gaps bounded away from zero.
fn endpoints() -> impl Strategy<Value = Vec<f64>> {
    (-5.0..5.0f64, prop::array::uniform3(0.1..3.0f64)).prop_map(|(a, g)| vec![a, a + g[0], a + g[0] + g[1], a + g[0] + g[1] + g[2]])
}

/// Orientation-preserving maps with `ad − bc = 1`.
fn mobius() -> impl Strategy<Value = MobiusMap> {
    (0.2..3.0f64, -3.0..3.0f64, -0.05..0.05f64).prop_map(|(a, b, c)| {
        let d = (1.0 + b * c) / a;
        MobiusMap::new(a, b, c, d).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_entropy_is_antisymmetric_and_additive(e in endpoints()) {
        let c = [
            GeodesicConfig::new(e.clone(), vec![(0, 1), (2, 3)]).unwrap(),
            GeodesicConfig::new(e.clone(), vec![(0, 2), (1, 3)]).unwrap(),
            GeodesicConfig::new(e, vec![(0, 3), (1, 2)]).unwrap(),
        ];
        let ent = |i: usize, j: usize| relative_entropy_exact(&c[i], &c[j]).unwrap();
        prop_assert!((ent(0, 1) + ent(1, 0)).abs() < 1e-12);
        prop_assert!((ent(0, 1) + ent(1, 2) + ent(2, 0)).abs() < 1e-12);
    }

    #[test]
    fn exact_entropy_is_mobius_invariant(e in endpoints(), m in mobius()) {
        let c1 = GeodesicConfig::new(e.clone(), vec![(0, 1), (2, 3)]).unwrap();
        let c2 = GeodesicConfig::new(e.clone(), vec![(0, 2), (1, 3)]).unwrap();
        prop_assume!(m.pole().map_or(true, |p| p < e[0] - 0.5 || p > e[3] + 0.5));
        let before = relative_entropy_exact(&c1, &c2).unwrap();
        let after = relative_entropy_exact(&c1.transformed(&m).unwrap(), &c2.transformed(&m).unwrap()).unwrap();
        prop_assert!((before - after).abs() < 1e-9 * (1.0 + before.abs()), "{} vs {}", before, after);
        let x: Vec<f64> = e.iter().map(|&v| m.apply_boundary(v).unwrap()).collect();
        let cr = cross_ratio(e[0], e[1], e[2], e[3]).unwrap();
        prop_assert!((cross_ratio(x[0], x[1], x[2], x[3]).unwrap() - cr).abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_distance_is_mobius_invariant(x1 in -3.0..3.0f64, y1 in 0.05..3.0f64, x2 in -3.0..3.0f64, y2 in 0.05..3.0f64, m in mobius()) {
        let p = HalfSpacePoint::planar(x1, y1).unwrap();
        let q = HalfSpacePoint::planar(x2, y2).unwrap();
        let d = p.distance(&q).unwrap();
        let d2 = m.apply_point(&p).unwrap().distance(&m.apply_point(&q).unwrap()).unwrap();
        prop_assert!((d - d2).abs() < 1e-8 * (1.0 + d), "{} vs {}", d, d2);
    }

    #[test]
    fn truncated_length_decreases_with_eps(a in -3.0..3.0f64, w in 0.1..4.0f64, s in 1e-3..0.3f64, f in 1.1..3.0f64) {
        let g = GeodesicH2::new(a, a + w).unwrap();
        let e1 = s * g.radius() / f;
        let small = truncated_length_exact(&g, e1).unwrap();
        let large = truncated_length_exact(&g, e1 * f).unwrap();
        prop_assert!(small > large);
    }

    #[test]
    fn grids_are_decreasing_and_bounded(hi in 0.01..1.0f64, decades in 1.0..4.0f64, ratio in 0.3..0.95f64) {
        let lo = hi * 10f64.powf(-decades);
        let g = geometric_grid(hi, lo, ratio).unwrap();
        prop_assert_eq!(g[0], hi);
        prop_assert!(g.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(*g.last().unwrap() >= lo * (1.0 - 1e-12));
        prop_assert!(g.last().unwrap() * ratio < lo);
    }

    #[test]
    fn fit_recovers_synthetic_expansion(c0 in 0.5..10.0f64, c2 in -10.0..10.0f64, b1 in -2.0..2.0f64, b2 in -2.0..2.0f64) {
        let samples: Vec<Sample> = geometric_grid(0.3, 1e-3, 0.8)
            .unwrap()
            .into_iter()
            .map(|e| Sample::new(e, c0 / e + c2 + b1 * e + b2 * e * e, 0.0))
            .collect();
        let fit = fit_expansion_with_tail(&samples, 2, 2).unwrap();
        prop_assert!((fit.constant_term - c2).abs() < 1e-8, "{} vs {}", fit.constant_term, c2);
    }

    #[test]
    fn richardson_is_exact_on_quadratic_tails(e in -5.0..5.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let samples: Vec<Sample> = geometric_grid(0.1, 1e-3, 0.5)
            .unwrap()
            .into_iter()
            .map(|x| Sample::new(x, e + a * x + b * x * x, 0.0))
            .collect();
        let l = entropy_limit(&samples).unwrap();
        prop_assert!((l.value - e).abs() < 1e-11);
    }

    #[test]
    fn quadratic_form_identities(y1 in prop::array::uniform3(-3.0..3.0f64), y2 in prop::array::uniform3(-3.0..3.0f64), t in 0.0..6.3f64, z in -1.0..1.0f64, c in -5.0..5.0f64) {
        let r = (1.0 - z * z).sqrt();
        let v = [r * t.cos(), r * t.sin(), z];
        prop_assert!(polarization_defect(&y1, &y2, &v).abs() < 1e-12);
        prop_assert!(basis_decomposition_defect(c, &v).abs() < 1e-12);
    }

    #[test]
    fn stationary_curve_stays_put(center in -2.0..2.0f64, r0 in 0.3..3.0f64, nodes in 20usize..80) {
        let mut s = RadialCurveState::stationary(center, r0, nodes).unwrap();
        let dt = 0.25 * s.dtheta().powi(2);
        for _ in 0..50 {
            s = s.step(dt).unwrap();
        }
        prop_assert!(s.band() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dyadic_graph_rescaling_is_exact(a in -0.5..0.5f64, c in -2.0..2.0f64, k in 1i32..4) {
        let g = NearBoundaryGraph::quadratic(a, c, 1.0, 40).unwrap();
        let s = graph_scaling_test(&g, 2f64.powi(-k), 0.05, 1e-3).unwrap();
        prop_assert!(s.sup_difference <= 1e-12, "{:?}", s);
    }
}
