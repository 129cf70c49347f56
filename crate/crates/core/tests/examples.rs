//! Worked examples for each operation. Reference values come from hand
//! enumeration or from the brute-force oracle, never from the closed forms.

use qrl_core::analytic::{
    j_fourlevel, j_qubit_antiperiodic, j_qubit_closed, j_qutrit_common, j_qutrit_three,
};
use qrl_core::combinatorics::{
    enumerate_classes, qubit_closed_multiplicity, reconstruct_counts, total_trajectories,
    ClassParams, TransitionCounts,
};
use qrl_core::optimize::{scan_landscape, FnObjective, Objective};
use qrl_core::oracle::{oracle_enumerate, oracle_return};
use qrl_core::{build_transition_matrices, AnalyticEvaluator, ModelKind, ModelSpec, PolicyPoint};

fn pt(c: &[f64]) -> PolicyPoint {
    PolicyPoint::from_slice(c).unwrap()
}

fn oracle(kind: ModelKind, n: u32, eps: f64, eps_p: f64, policy: &[f64]) -> f64 {
    oracle_return(&ModelSpec::new(kind, n, eps, eps_p).unwrap(), &pt(policy)).unwrap()
}

#[test]
fn transition_matrix_examples() {
    let q = ModelSpec::qutrit(4, 0.3).unwrap();
    let id = build_transition_matrices(&q, &pt(&[0.0, 0.0, 0.0])).unwrap();
    let cyc = build_transition_matrices(&q, &pt(&[1.0, 1.0, 1.0])).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(id.prob(i, j), (i == j) as u8 as f64);
            assert_eq!(cyc.prob(i, j), (j == (i + 1) % 3) as u8 as f64);
        }
    }
    assert!((cyc.reward(0, 0) + 0.3).abs() < 1e-15);
    assert_eq!(cyc.reward(0, 1), 0.0);
    assert_eq!(cyc.reward(1, 2), 0.0);
    assert_eq!(cyc.reward(2, 0), 0.0);

    let f = ModelSpec::four_level(4, 0.5, 0.5).unwrap();
    let tm = build_transition_matrices(&f, &pt(&[0.5, 0.25])).unwrap();
    assert_eq!(tm.prob_rows()[0], vec![0.25, 0.25, 0.5, 0.0]);
    assert_eq!(tm.prob_rows()[2], vec![0.0, 0.0, 0.75, 0.25]);
}

#[test]
fn class_enumeration_examples() {
    let q = enumerate_classes(&ModelSpec::qutrit(2, 0.5).unwrap()).unwrap();
    assert_eq!(q.len(), 1);
    assert_eq!(q[0].occupations(), &[1, 1, 1]);

    // +,+,+ and +,-,+ are the only closed paths of length 2
    let c = enumerate_classes(&ModelSpec::qubit_closed(2).unwrap()).unwrap();
    let mut got: Vec<ClassParams> = c.iter().map(|k| k.params()).collect();
    got.sort_by_key(|p| match p {
        ClassParams::Qubit { p, c } => (*p, *c),
        _ => unreachable!(),
    });
    assert_eq!(got, vec![ClassParams::Qubit { p: 2, c: 1 }, ClassParams::Qubit { p: 3, c: 0 }]);
}

#[test]
fn multiplicity_and_reconstruction_examples() {
    assert_eq!(qubit_closed_multiplicity(10, 6, 3).unwrap(), 60);

    let q = ModelSpec::qutrit(5, 0.5).unwrap();
    let t = reconstruct_counts(&q, &ClassParams::Qutrit { n0: 2, n2: 2, c: 1 }).unwrap();
    let want = TransitionCounts::from_sequence(3, &[0, 1, 2, 0, 1, 2]);
    assert_eq!(t, want);

    let f = ModelSpec::four_level(3, 0.5, 0.5).unwrap();
    let t = reconstruct_counts(
        &f,
        &ClassParams::FourLevel { n0: 1, n1: 1, n2: 2, c01: 1, c01p: 0 },
    )
    .unwrap();
    assert_eq!(t, TransitionCounts::from_sequence(4, &[0, 1, 3, 3]));
}

#[test]
fn four_level_n5_counts_against_enumeration() {
    let spec = ModelSpec::four_level(5, 0.4, 0.6).unwrap();
    let live: Vec<Vec<usize>> = oracle_enumerate(&spec, &pt(&[0.4, 0.6]))
        .unwrap()
        .filter(|t| t.probability > 0.0)
        .map(|t| t.states)
        .collect();
    let classes = enumerate_classes(&spec).unwrap();
    assert_eq!(total_trajectories(&classes).unwrap(), live.len() as u128);
    assert_eq!(live.len(), 24);
    let mut distinct: Vec<TransitionCounts> = live
        .iter()
        .map(|s| TransitionCounts::from_sequence(4, s))
        .collect();
    distinct.sort_by_key(|t| format!("{t:?}"));
    distinct.dedup();
    assert_eq!(distinct.len(), classes.len());
}

#[test]
fn qubit_closed_examples() {
    for xm in [0.0, 0.4, 1.0] {
        assert_eq!(j_qubit_closed(6, 0.0, xm).unwrap().j, 0.0);
    }
    let (xp, xm) = (0.35, 0.8);
    let hand = 2.0 * xp * (1.0 - xp) * (1.0 - xp) + xp * xm * (xp - xm);
    assert!((j_qubit_closed(2, xp, xm).unwrap().j - hand).abs() < 1e-15);
    let o = oracle(ModelKind::QubitClosed, 5, 0.5, 0.5, &[0.2, 0.3]);
    assert!((j_qubit_closed(5, 0.2, 0.3).unwrap().j - o).abs() < 1e-12);
    assert!((oracle(ModelKind::QubitClosed, 2, 0.5, 0.5, &[0.5, 0.5]) - 0.25).abs() < 1e-15);
}

#[test]
fn qubit_antiperiodic_examples() {
    for xp in [0.1, 0.6] {
        assert!((j_qubit_antiperiodic(1, xp, 0.3).unwrap().j - xp * (xp - 1.0)).abs() < 1e-15);
    }
    let o = oracle(ModelKind::QubitAntiperiodic, 4, 0.5, 0.5, &[0.7, 0.6]);
    assert!((j_qubit_antiperiodic(4, 0.7, 0.6).unwrap().j - o).abs() < 1e-12);

    // At x+ = 1 only the p = c classes survive.
    for n in 2..=9u32 {
        for xm in [0.2, 0.5, 0.9] {
            let mut restricted = 0.0;
            for p in 1..=n {
                let c = p;
                if c > n + 1 - p {
                    continue;
                }
                let m = (qrl_core::combinatorics::binomial((n - p) as u64, (c - 1) as u64).unwrap()) as f64;
                restricted += m * (p as f64 - 1.0 - (n - p) as f64 * xm)
                    * xm.powi(c as i32 - 1)
                    * (1.0 - xm).powi((n + 1 - p - c) as i32);
            }
            let full = j_qubit_antiperiodic(n, 1.0, xm).unwrap().j;
            assert!((full - restricted).abs() < 1e-12, "N={n}");
        }
    }
}

#[test]
fn qutrit_examples() {
    for n in 2..=10 {
        assert_eq!(j_qutrit_common(n, 0.0).unwrap().j, 0.0);
    }
    for x in [0.2, 0.7] {
        assert!((j_qutrit_common(2, x).unwrap().j - x * x * (1.0 - x)).abs() < 1e-15);
    }
    let a = j_qutrit_common(6, 0.35).unwrap().j;
    for eps in [0.1, 0.5, 0.9] {
        let o = oracle(ModelKind::QutritLadder, 6, eps, 0.5, &[0.35]);
        assert!((a - o).abs() < 1e-12);
    }
    for eps in [-0.5, 0.3, 1.7] {
        let t = j_qutrit_three(7, eps, 0.45, 0.45, 0.45).unwrap().j;
        assert!((t - j_qutrit_common(7, 0.45).unwrap().j).abs() < 1e-12);
    }
    let o = oracle(ModelKind::QutritLadder, 4, 0.75, 0.5, &[0.3, 0.8, 0.1]);
    assert!((j_qutrit_three(4, 0.75, 0.3, 0.8, 0.1).unwrap().j - o).abs() < 1e-12);
    let a = j_qutrit_three(6, 0.2, 0.3, 0.8, 0.1).unwrap().j;
    let b = j_qutrit_three(6, 0.8, 0.8, 0.3, 0.1).unwrap().j;
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn qutrit_oracle_small_cases() {
    let spec = ModelSpec::qutrit(3, 0.5).unwrap();
    let live: Vec<Vec<usize>> = oracle_enumerate(&spec, &pt(&[0.2, 0.5, 0.7]))
        .unwrap()
        .filter(|t| t.probability > 0.0)
        .map(|t| t.states)
        .collect();
    assert_eq!(live, vec![vec![0, 0, 1, 2], vec![0, 1, 1, 2], vec![0, 1, 2, 2]]);
    assert_eq!(
        oracle_enumerate(&ModelSpec::qubit_closed(3).unwrap(), &pt(&[0.2, 0.5]))
            .unwrap()
            .count(),
        4
    );
}

#[test]
fn four_level_examples() {
    let o = oracle(ModelKind::FourLevel, 5, 0.5, 0.5, &[0.4, 0.6]);
    let a = j_fourlevel(5, 0.5, 0.5, 0.4, 0.6).unwrap();
    assert!((a.j - o).abs() < 1e-12);
    assert_eq!(a.evaluations, 23);
    let o = oracle(ModelKind::FourLevel, 3, 0.2, 0.9, &[0.3, 0.75]);
    assert!((j_fourlevel(3, 0.2, 0.9, 0.3, 0.75).unwrap().j - o).abs() < 1e-14);
}

#[test]
fn landscape_examples() {
    let ev = AnalyticEvaluator::for_spec(ModelSpec::qubit_closed(2).unwrap()).unwrap();
    let g = scan_landscape(&ev, 3).unwrap();
    assert_eq!(g.len(), 9);
    assert!(g.values[..3].iter().all(|&v| v == 0.0));

    let ev = AnalyticEvaluator::new(ModelSpec::qutrit(2, 0.5).unwrap(), 1).unwrap();
    let g = scan_landscape(&ev, 5).unwrap();
    for (i, v) in g.values.iter().enumerate() {
        let x = i as f64 * 0.25;
        assert!((v - x * x * (1.0 - x)).abs() < 1e-15);
    }

    let ev = AnalyticEvaluator::for_spec(ModelSpec::four_level(5, 0.5, 0.5).unwrap()).unwrap();
    let g = scan_landscape(&ev, 101).unwrap();
    assert!(g.values.iter().all(|v| v.is_finite()));
    let p = g.point(g.argmax().0);
    assert!(p.iter().all(|&c| c > 0.0 && c < 1.0), "{p:?}");
}

#[test]
fn fn_objective_is_usable_as_trait_object() {
    let f = FnObjective::new(2, |x: &[f64]| x[0] + x[1]);
    let obj: &dyn Objective = &f;
    assert_eq!(obj.eval(&[0.25, 0.5]).unwrap(), 0.75);
}
