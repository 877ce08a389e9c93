//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! on stderr, outside the test harness capture.

use std::f64::consts::TAU;
use std::io::Write;
use std::time::Instant;

use serde_json::{json, Value};

use hyprel::expansion::{entropy_limit, fit_expansion_with_tail, geometric_grid, Sample, Term};
use hyprel::geodesics::{relative_entropy_exact, GeodesicConfig};
use hyprel::halfspace::{log_spaced, normal_field_rates, DefiningFunction, MobiusMap, NormalField};
use hyprel::quadrature::{truncated_differences, vol_eps_sweep, HemisphereProfile, ImmersionUnion, Revolution, UnitWeight};
use hyprel::runner::{run, Command, RunConfig, Summary};

const GEODESIC_ENTROPY: f64 = -2.197_224_577;

fn report(n: u32, what: &str, pass: bool, detail: String) {
    let line = format!("criterion {n:>2}: {} {what} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn run_command(command: Command, params: Value) -> Summary {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::for_command(command).with_parameters(params);
    run(&config, command, dir.path()).unwrap().summary
}

fn value(s: &Summary, check: &str) -> f64 {
    s.check(check).unwrap_or_else(|| panic!("no check {check}")).value.unwrap()
}

fn numeric(c1: &GeodesicConfig, c2: &GeodesicConfig, r: &DefiningFunction) -> f64 {
    let scale = c1.min_radius().min(c2.min_radius());
    let grid = geometric_grid(0.02 * scale, 2e-4 * scale, 0.5).unwrap();
    let (u1, u2) = (ImmersionUnion::from_config(c1), ImmersionUnion::from_config(c2));
    let samples: Vec<Sample> = truncated_differences(&u1, &u2, r, &UnitWeight, &grid, 1e-11)
        .unwrap()
        .into_iter()
        .map(Into::into)
        .collect();
    entropy_limit(&samples).unwrap().value
}

#[test]
fn criterion_01_geodesic_entropy() {
    let start = Instant::now();
    let s = run_command(Command::GeodesicEntropy, json!({}));
    let elapsed = start.elapsed().as_secs_f64();
    let est = s.results["estimate"]["value"].as_f64().unwrap();
    let dev = (est - GEODESIC_ENTROPY).abs();
    let pass = dev <= 1e-6 && elapsed < 5.0;
    report(1, "geodesic entropy of (0,1,2,4)", pass, format!("value {est:.12}, deviation {dev:.2e}, {elapsed:.2} s"));
    assert!(pass);
}

#[test]
fn criterion_02_defining_function_independence() {
    let s = run_command(Command::Invariance, json!({}));
    let mut worst_pair = value(&s, "defining_functions_agree");
    let mut worst_exact = value(&s, "defining_functions_match_closed_form");
    let family = [
        DefiningFunction::Height,
        DefiningFunction::scaled(&[0.0], 1.0).unwrap(),
        DefiningFunction::tilted(0.3).unwrap(),
    ];
    let e = vec![-1.0, 0.5, 3.0, 3.7];
    let pairings = [vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(0, 3), (1, 2)]];
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let c1 = GeodesicConfig::new(e.clone(), pairings[i].clone()).unwrap();
        let c2 = GeodesicConfig::new(e.clone(), pairings[j].clone()).unwrap();
        let exact = relative_entropy_exact(&c1, &c2).unwrap();
        let vals: Vec<f64> = family.iter().map(|r| numeric(&c1, &c2, r)).collect();
        for a in 0..3 {
            worst_exact = worst_exact.max((vals[a] - exact).abs());
            for b in a + 1..3 {
                worst_pair = worst_pair.max((vals[a] - vals[b]).abs());
            }
        }
    }
    let pass = worst_pair <= 1e-4 && worst_exact <= 1e-4;
    report(2, "height, scaled and tilted agree", pass, format!("pairwise {worst_pair:.2e}, vs exact {worst_exact:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_03_mobius_invariance() {
    let s = run_command(Command::Invariance, json!({}));
    let maps = s.results["maps"].as_u64().unwrap();
    let dev = value(&s, "mobius_invariance");
    let pass = maps >= 10 && dev <= 1e-6;
    report(3, "Möbius invariance", pass, format!("{maps} maps, max deviation {dev:.2e}"));
    assert!(pass);
    let c1 = GeodesicConfig::new(vec![0.0, 1.0, 2.0, 4.0], vec![(0, 1), (2, 3)]).unwrap();
    let c2 = GeodesicConfig::new(vec![0.0, 1.0, 2.0, 4.0], vec![(0, 2), (1, 3)]).unwrap();
    let m = MobiusMap::new(1.0, 0.0, 0.1, 1.0).unwrap();
    let base = numeric(&c1, &c2, &DefiningFunction::Height);
    let moved = numeric(&c1.transformed(&m).unwrap(), &c2.transformed(&m).unwrap(), &DefiningFunction::Height);
    assert!((base - moved).abs() <= 1e-6);
}

#[test]
fn criterion_04_hemisphere_expansion() {
    let mut worst_c0 = 0.0f64;
    let mut worst_c2 = 0.0f64;
    for radius in [1.0, 2.5] {
        let surface = Revolution::new(HemisphereProfile { radius });
        let eps = geometric_grid(0.3, 1e-3, 0.8).unwrap();
        let samples: Vec<Sample> = vol_eps_sweep(&surface, &DefiningFunction::Height, &eps, 1e-11)
            .unwrap()
            .into_iter()
            .zip(&eps)
            .map(|(v, &e)| Sample::new(e, v.value, v.error_bound))
            .collect();
        let fit = fit_expansion_with_tail(&samples, 2, 2).unwrap();
        let c0 = fit.coefficient(Term::InversePower(1)).unwrap();
        worst_c0 = worst_c0.max((c0 - TAU * radius).abs() / (TAU * radius));
        worst_c2 = worst_c2.max((fit.constant_term + TAU).abs());
    }
    let s = run_command(Command::Hemisphere, json!({}));
    worst_c0 = worst_c0.max(value(&s, "c0_relative_error"));
    worst_c2 = worst_c2.max(value(&s, "renormalized_area_error"));
    let pass = worst_c0 <= 1e-6 && worst_c2 <= 1e-3;
    report(4, "hemisphere c0 = 2πR and c2 = −2π", pass, format!("c0 rel {worst_c0:.2e}, c2 {worst_c2:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_05_catenoid_renormalized_area() {
    let s = run_command(Command::Catenoid, json!({ "r1": 1.0, "r2": 2.0 }));
    let surfaces = s.results["surfaces"].as_array().unwrap();
    let mut worst = 0.0f64;
    for (k, surf) in surfaces.iter().enumerate() {
        let c2 = surf["c2"].as_f64().unwrap();
        let am = surf["curvature_identity_area"].as_f64().unwrap();
        worst = worst.max((c2 - am).abs() / am.abs());
        assert!(value(&s, &format!("surface_{k}_ode_residual")) <= 1e-8);
        assert!(value(&s, &format!("surface_{k}_mean_curvature")) <= 1e-6);
    }
    let pair = &s.results["pair"];
    let gap = pair["deviation"].as_f64().unwrap();
    let bar = pair["combined_error_bar"].as_f64().unwrap();
    let pass = surfaces.len() == 2 && worst <= 1e-2 && gap <= bar;
    report(5, "catenoid c2 against the curvature identity", pass, format!("rel {worst:.2e}, pair gap {gap:.2e} ≤ {bar:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_06_separation_rate() {
    let s = run_command(Command::Separation, json!({}));
    let slope = value(&s, "separation_slope");
    let pass = (2.7..=3.3).contains(&slope);
    report(6, "catenoid separation slope", pass, format!("slope {slope:.4}"));
    assert!(pass);
}

#[test]
fn criterion_07_flow_reference_run() {
    let start = Instant::now();
    let s = run_command(Command::Mcf, json!({}));
    let elapsed = start.elapsed().as_secs_f64();
    let inc = value(&s, "entropy_nonincreasing");
    let res = value(&s, "identity_relative_residual");
    let drift = value(&s, "stationary_drift");
    let steps = s.results["meta"]["steps"].as_u64().unwrap();
    let pass = inc <= 1e-8 && res <= 1e-2 && drift <= 1e-12 && elapsed < 60.0;
    report(
        7,
        "flow monotonicity, identity and fixed point",
        pass,
        format!("max increase {inc:.2e}, residual {res:.2e}, drift {drift:.2e}, {steps} steps, {elapsed:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_graph_scaling() {
    let s = run_command(Command::ScalingTest, json!({ "lambda": 0.5 }));
    let sup = value(&s, "scaling_sup_difference");
    let barrier = s.check("barrier_constant").unwrap().passed;
    let pass = sup <= 1e-6 && barrier;
    report(8, "graph scaling with λ = 1/2", pass, format!("sup difference {sup:.2e}, barrier kept {barrier}"));
    assert!(pass);
}

#[test]
fn criterion_09_weighted_entropy() {
    let s = run_command(Command::Weighted, json!({}));
    let unit = value(&s, "unit_weight_reduces");
    let lin = value(&s, "linearity");
    let grad = value(&s, "reduced_gradient");
    let tail = value(&s, "tail_slope");
    let pass = unit == 0.0 && lin <= 1e-8 && grad <= 1e-10 && tail >= 1.0;
    report(
        9,
        "weighted entropy",
        pass,
        format!("unit {unit:.1e}, linearity {lin:.2e}, gradient {grad:.2e}, tail slope {tail:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_normal_field_decay() {
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for (c, r) in [(0.0, 1.0), (1.5, 0.5), (-2.0, 3.0)] {
        let f = NormalField::new(c, r).unwrap();
        let ys = log_spaced(1e-6 * r, 0.1 * r, 11).unwrap();
        let rates = normal_field_rates(&f, &ys).unwrap();
        worst = (worst.0.min(rates.height_slope), worst.1.min(rates.divergence_slope));
    }
    let pass = worst.0 >= 1.9 && worst.1 >= 0.9;
    report(10, "normal field decay", pass, format!("height slope {:.4}, divergence slope {:.4}", worst.0, worst.1));
    assert!(pass);
    assert!((worst.0 - 2.0).abs() < 1e-3 && (worst.1 - 1.0).abs() < 1e-3, "{worst:?}");
}
