mod common;

use common::{brute_j1, random_step_path};
use heavytail::cadlag::{
    fattening_distance, j1_distance, m1prime_bounds, m1prime_lower_pointgap, m1prime_upper, Metric, StepPath,
    DEFAULT_J1_TOL,
};
use heavytail::rng::stream;

fn ind(t: f64, s: f64) -> StepPath {
    StepPath::indicator(t, s).unwrap()
}

#[test]
fn j1_examples_agree_with_brute_force() {
    let cases = [
        (ind(0.5, 1.0), ind(0.6, 1.0), 0.1),
        (StepPath::constant(1.0), ind(0.1, 1.0), 1.0),
        (ind(0.5, 1.0), StepPath::zero(), 1.0),
        (ind(0.5, 1.0), ind(0.5, 2.0), 1.0),
    ];
    for (p, q, want) in cases {
        let fast = j1_distance(&p, &q, DEFAULT_J1_TOL).unwrap();
        let slow = brute_j1(&p, &q);
        assert!((fast - want).abs() < 1e-5, "{fast} vs {want}");
        assert!((fast - slow).abs() < 1e-5, "{fast} vs brute {slow}");
    }
}

#[test]
fn j1_matches_brute_force_on_random_pairs() {
    let mut rng = stream(11, 0);
    for _ in 0..60 {
        let p = random_step_path(&mut rng, 3);
        let q = random_step_path(&mut rng, 3);
        let fast = j1_distance(&p, &q, DEFAULT_J1_TOL).unwrap();
        let slow = brute_j1(&p, &q);
        assert!((fast - slow).abs() <= 2e-3, "{p:?} {q:?}: {fast} vs {slow}");
    }
}

#[test]
fn m1prime_examples() {
    let d = 1e-3;
    let up = m1prime_upper(&StepPath::constant(1.0), &ind(0.1, 1.0), d).unwrap();
    assert!(up <= 0.1 + d);
    let b = m1prime_bounds(&StepPath::zero(), &ind(0.5, 1.0), d).unwrap();
    assert!((b.upper - 1.0).abs() <= d && (b.lower - 1.0).abs() <= d);
    assert!(m1prime_lower_pointgap(&ind(0.5, 1.0), &ind(0.8, 1.0), d).unwrap() >= 0.3 - d);
}

#[test]
fn fattening_matches_single_pair() {
    let p = ind(0.5, 1.0);
    let fam = [ind(0.6, 1.0), ind(0.5, 3.0)];
    let d = fattening_distance(&p, &fam, Metric::J1, DEFAULT_J1_TOL).unwrap();
    assert!((d - 0.1).abs() < 1e-5);
    assert_eq!(fattening_distance(&p, &[p.clone()], Metric::J1, DEFAULT_J1_TOL).unwrap(), 0.0);
}
