//! Optimiser behaviour on the real models.

use qrl_core::optimize::{find_crossover, maximise, scan_landscape, OptimConfig};
use qrl_core::{AnalyticEvaluator, Error, ModelSpec, OracleConfig, OracleEvaluator};

fn cfg() -> OptimConfig {
    OptimConfig::default()
}

#[test]
fn four_level_crossover_near_2_069() {
    let template = ModelSpec::four_level(8, 2.0, 1.0).unwrap();
    let r = find_crossover(&template, (1.95, 2.2), &cfg()).unwrap();
    assert!(r.epsilon_star > 2.06 && r.epsilon_star < 2.08, "{}", r.epsilon_star);
    assert!(r.separation > 0.2, "{}", r.separation);
    assert!((r.j_low - r.j_high).abs() < 1e-4);
    assert!(r.bracket.1 - r.bracket.0 <= cfg().tol_eps);

    let fine = OptimConfig { tol_eps: cfg().tol_eps / 2.0, ..cfg() };
    let r2 = find_crossover(&template, (1.95, 2.2), &fine).unwrap();
    assert!(r2.bracket.0 >= r.bracket.0 - 1e-12 && r2.bracket.1 <= r.bracket.1 + 1e-12);
}

#[test]
fn four_level_drift_is_not_a_crossover() {
    let template = ModelSpec::four_level(8, 2.4, 1.0).unwrap();
    match find_crossover(&template, (2.40, 2.55), &cfg()) {
        Err(Error::NoCrossover(_)) => {}
        other => panic!("expected NoCrossover, got {other:?}"),
    }
}

#[test]
fn maximiser_beats_every_grid_sample() {
    for spec in [
        ModelSpec::qubit_closed(6).unwrap(),
        ModelSpec::qubit_antiperiodic(5).unwrap(),
        ModelSpec::four_level(6, 0.7, 0.3).unwrap(),
    ] {
        let ev = AnalyticEvaluator::for_spec(spec).unwrap();
        let r = maximise(&ev, &cfg()).unwrap();
        let g = scan_landscape(&ev, 101).unwrap();
        let tol = 1e-9 * r.j_max.abs().max(1.0);
        for v in &g.values {
            assert!(r.j_max >= v - tol);
        }
        for v in &r.values {
            assert!((v - r.j_max).abs() <= tol);
        }
    }
}

#[test]
fn analytic_and_oracle_argmax_agree() {
    let spec = ModelSpec::four_level(5, 0.5, 0.5).unwrap();
    let a = maximise(&AnalyticEvaluator::for_spec(spec.clone()).unwrap(), &cfg()).unwrap();
    let o = maximise(&OracleEvaluator::new(spec, 2, OracleConfig::default()).unwrap(), &cfg())
        .unwrap();
    assert_eq!(a.maximisers.len(), o.maximisers.len());
    assert!(a.best().distance(o.best()) < 1e-6);
    assert!((a.j_max - o.j_max).abs() < 1e-12);
}

#[test]
fn qutrit_three_argmax_mirrors_under_energy_swap() {
    let lo = AnalyticEvaluator::new(ModelSpec::qutrit(5, 0.3).unwrap(), 3).unwrap();
    let hi = AnalyticEvaluator::new(ModelSpec::qutrit(5, 0.7).unwrap(), 3).unwrap();
    let a = maximise(&lo, &cfg()).unwrap();
    let b = maximise(&hi, &cfg()).unwrap();
    let (p, q) = (a.best().coords(), b.best().coords());
    assert!((p[0] - q[1]).abs() < 1e-5 && (p[1] - q[0]).abs() < 1e-5 && (p[2] - q[2]).abs() < 1e-5);
    assert!((a.j_max - b.j_max).abs() < 1e-12);
}

#[test]
fn qutrit_three_high_energy_saturates() {
    let mut prev_x = f64::INFINITY;
    for n in [4, 6, 8] {
        let ev = AnalyticEvaluator::new(ModelSpec::qutrit(n, 2.0).unwrap(), 3).unwrap();
        let r = maximise(&ev, &cfg()).unwrap();
        let c = r.best().coords();
        assert!(c[1] > 1.0 - 1e-6, "N={n} {c:?}");
        assert!(c[2] < 1e-6, "N={n} {c:?}");
        assert!(c[0] < prev_x);
        prev_x = c[0];
    }
}

#[test]
fn closed_chain_argmax_falls_with_horizon() {
    let mut prev = f64::INFINITY;
    for n in [3, 5, 7, 9] {
        let ev = AnalyticEvaluator::for_spec(ModelSpec::qubit_closed(n).unwrap()).unwrap();
        let r = maximise(&ev, &cfg()).unwrap();
        let x = r.best().coords()[0];
        assert!(x < prev, "N={n}");
        prev = x;
    }
}

#[test]
fn antiperiodic_odd_horizons_saturate() {
    for n in [3, 5, 7] {
        let ev = AnalyticEvaluator::for_spec(ModelSpec::qubit_antiperiodic(n).unwrap()).unwrap();
        let r = maximise(&ev, &cfg()).unwrap();
        let c = r.best().coords();
        assert!(c[0] > 1.0 - 1e-6, "N={n} {c:?}");
    }
}
