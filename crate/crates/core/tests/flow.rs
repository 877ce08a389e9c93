use std::time::Instant;

use hyprel::flow::*;

// ∫_0^π (√(R'² + R²)/R − 1)/sinθ dθ for R = 1 + δ sin²θ, 30-digit quadrature.
const ENTROPY_DELTA_0_1: f64 = 0.012_331_428_529_181_355;
const ENTROPY_DELTA_0_05: f64 = 0.003_204_162_869_361_695_5;

#[test]
fn entropy_of_perturbed_curve_matches_oracle() {
    for (delta, want) in [(0.1, ENTROPY_DELTA_0_1), (0.05, ENTROPY_DELTA_0_05)] {
        let s = RadialCurveState::perturbed(0.0, 1.0, 400, delta).unwrap();
        let e = flow_entropy(&s).unwrap();
        assert!((e.value - want).abs() < 1e-6, "{delta}: {} vs {want}", e.value);
        assert!(e.error_bar >= (e.value - want).abs());
        assert!((s.nodal_entropy() - want).abs() < 1e-5);
    }
}

#[test]
fn stationary_state_has_zero_entropy_and_curvature() {
    let s = RadialCurveState::stationary(0.3, 1.7, 200).unwrap();
    assert!(flow_entropy(&s).unwrap().value.abs() < 1e-10);
    assert!(s.max_curvature().unwrap() < 1e-12);
}

#[test]
fn stationary_state_is_a_fixed_point() {
    let mut s = RadialCurveState::stationary(0.0, 1.0, 400).unwrap();
    let dt = 0.25 * s.dtheta().powi(2);
    for _ in 0..1000 {
        s = s.step(dt).unwrap();
    }
    assert!(s.band() <= 1e-12, "{}", s.band());
}

/// Hyperbolic length of the polar curve, trapezoid rule with exact ends.
fn length(center_free: &[f64], h: f64) -> f64 {
    let n = center_free.len();
    let mut ext = vec![1.0];
    ext.extend_from_slice(center_free);
    ext.push(1.0);
    (1..=n)
        .map(|i| {
            let d1 = (ext[i + 1] - ext[i - 1]) / (2.0 * h);
            let th = i as f64 * h;
            (d1.hypot(ext[i]) / ext[i] - 1.0) / th.sin() * h
        })
        .sum()
}

#[test]
fn curvature_is_the_length_gradient() {
    // dL/dR_i ≈ −H_i · (speed conversion), so H and −∇L share signs at the apex
    let s = RadialCurveState::perturbed(0.0, 1.0, 200, 0.05).unwrap();
    let h = s.curvature().unwrap();
    let apex = 99;
    assert!(h[apex] < 0.0);
    let mut up = s.values.clone();
    let mut dn = s.values.clone();
    up[apex] += 1e-6;
    dn[apex] -= 1e-6;
    let grad = (length(&up, s.dtheta()) - length(&dn, s.dtheta())) / 2e-6;
    assert!(grad > 0.0);
}

#[test]
fn curvature_converges_at_second_order() {
    let sample = |n: usize| {
        let s = RadialCurveState::perturbed(0.0, 1.0, n, 0.1).unwrap();
        let h = s.curvature().unwrap();
        h[(n - 1) / 2]
    };
    // apex value with N = 2^k − 1 so that π/2 is a node
    let (a, b, c) = (sample(63), sample(127), sample(255));
    let order = ((a - b) / (b - c)).abs().log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn rejects_nonpositive_radius() {
    let mut s = RadialCurveState::stationary(0.0, 1.0, 10).unwrap();
    s.values[3] = -0.1;
    assert!(matches!(s.curvature(), Err(hyprel::Error::InvalidState(_))));
}

#[test]
fn oversized_step_is_rejected_with_a_suggestion() {
    let s = RadialCurveState::perturbed(0.0, 1.0, 100, 0.5).unwrap();
    match s.step(50.0) {
        Err(hyprel::Error::StepRejected { suggested_dt, .. }) => assert!(suggested_dt < 50.0),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn reference_run_is_monotone_and_satisfies_the_identity() {
    let start = Instant::now();
    let s = RadialCurveState::perturbed(0.0, 1.0, 400, 0.1).unwrap();
    let traj = run_flow(&s, &FlowConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "{elapsed} s");
    assert!((traj.rows.last().unwrap().t - 2.0).abs() < 1e-12);
    assert!(traj.max_entropy_increase() <= 1e-8, "{}", traj.max_entropy_increase());
    assert!(traj.meta.max_band_growth <= 1e-15);
    let r = monotonicity_check(&traj, 0.0, 2.0);
    assert!(r.relative <= 0.01, "{r:?}");
    let first = traj.rows[0];
    for row in &traj.rows {
        assert!(row.e_rel >= first.e_rel - r.dissipated - row.e_rel_error - 1e-12);
        assert!(row.e_rel > 0.0);
    }
    let unit = weighted_monotonicity_check(&traj, &SpaceTimeWeight::unit(), 0.0, 0.5).unwrap();
    let plain = monotonicity_check(&traj, 0.0, 0.5);
    assert_eq!(unit.residual, plain.residual);
    assert_eq!(unit.evolution_term, 0.0);
}

#[test]
fn weighted_identity_with_a_bump() {
    let s = RadialCurveState::perturbed(0.0, 1.0, 200, 0.1).unwrap();
    let cfg = FlowConfig {
        t_end: 0.5,
        record_interval: 0.01,
        ..Default::default()
    };
    let traj = run_flow(&s, &cfg).unwrap();
    let f = SpaceTimeWeight::bump(0.3, 0.6);
    let r = weighted_monotonicity_check(&traj, &f, 0.0, 0.5).unwrap();
    assert!(r.relative <= 0.05, "{r:?}");
    assert!(r.evolution_term != 0.0);
}

#[test]
fn bump_on_stationary_trajectory_has_vanishing_terms() {
    let s = RadialCurveState::stationary(0.0, 1.0, 100).unwrap();
    let cfg = FlowConfig {
        t_end: 0.05,
        record_interval: 0.025,
        ..Default::default()
    };
    let traj = run_flow(&s, &cfg).unwrap();
    let r = weighted_monotonicity_check(&traj, &SpaceTimeWeight::bump(0.0, 0.5), 0.0, 0.05).unwrap();
    assert!(r.entropy_drop.abs() < 1e-10 && r.dissipated.abs() < 1e-20 && r.evolution_term.abs() < 1e-10, "{r:?}");
}

#[test]
fn trajectory_csv_has_the_expected_columns() {
    let s = RadialCurveState::perturbed(0.0, 1.0, 50, 0.1).unwrap();
    let traj = run_flow(&s, &FlowConfig { t_end: 0.02, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &traj).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,E_rel,E_rel_error,dissipation,maxH,band\n"));
    assert_eq!(text.lines().count(), traj.rows.len() + 1);
}

#[test]
fn graph_scaling_on_matched_grids() {
    let g = NearBoundaryGraph::quadratic(0.2, 1.5, 1.0, 200).unwrap();
    let one = graph_scaling_test(&g, 1.0, 0.2, 1e-3).unwrap();
    assert_eq!(one.sup_difference, 0.0);
    let half = graph_scaling_test(&g, 0.5, 0.2, 1e-3).unwrap();
    assert!(half.sup_difference <= 1e-6, "{half:?}");
    assert!(half.barrier_max <= half.barrier_initial * (1.0 + 1e-12), "{half:?}");
    let third = graph_scaling_test(&g, 1.0 / 3.0, 0.2, 1e-3).unwrap();
    assert!(third.sup_difference <= 1e-6, "{third:?}");
}

#[test]
fn graph_rejects_bad_lambda() {
    let g = NearBoundaryGraph::quadratic(0.0, 1.0, 1.0, 20).unwrap();
    assert!(graph_scaling_test(&g, 0.0, 0.1, 1e-3).is_err());
    assert!(graph_scaling_test(&g, 1.5, 0.1, 1e-3).is_err());
}

#[test]
fn long_run_approaches_the_geodesic() {
    let s = RadialCurveState::perturbed(0.0, 1.0, 100, 0.1).unwrap();
    let traj = run_flow(&s, &FlowConfig { t_end: 8.0, record_interval: 1.0, ..Default::default() }).unwrap();
    let last = traj.rows.last().unwrap();
    assert!(last.e_rel < 1e-3 * traj.rows[0].e_rel, "{last:?}");
}
