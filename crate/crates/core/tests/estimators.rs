use heavytail::jump_sim::{sample_k_jump_sizes, tail_moments, LevyConfig, MomentCache};
use heavytail::rare_event::{
    estimate_big_jump_conditioned, estimate_plain, exact_jump_vector_prob, ldp_slope_check, EventKind, EventSpec,
    Interval, McSettings, Method, SlopeSettings,
};
use heavytail::rng::stream;
use heavytail::stats::clopper_pearson;
use heavytail::tail::TailParams;
use rand::Rng;

fn setup(tail: TailParams) -> (LevyConfig, MomentCache) {
    (LevyConfig::new(tail, 0.0, 0.0, None).unwrap(), tail_moments(&tail).unwrap())
}

#[test]
fn conditioned_and_plain_agree() {
    let (cfg, m) = setup(TailParams::reference());
    let cases = [
        (EventKind::KthJumpAtLeast { k: 1, x: 0.8 }, 1),
        (EventKind::KthJumpAtLeast { k: 2, x: 0.5 }, 2),
        (EventKind::BoundaryCrossing { level: 1.5, max_jump: 1.0 }, 2),
    ];
    for (kind, j) in cases {
        let ev = EventSpec::new("e", kind).unwrap();
        let plain = estimate_plain(&ev, &cfg, &m, 30, McSettings::new(200_000, 1)).unwrap();
        let cond = estimate_big_jump_conditioned(&ev, &cfg, &m, 30, j, McSettings::new(20_000, 2)).unwrap();
        assert!(
            plain.ci_low <= cond.ci_high && cond.ci_low <= plain.ci_high,
            "{}: plain [{}, {}] vs conditioned [{}, {}]",
            ev.name,
            plain.ci_low,
            plain.ci_high,
            cond.ci_low,
            cond.ci_high
        );
    }
}

#[test]
fn exact_rectangles_match_monte_carlo() {
    let tail = TailParams::reference();
    let (n, k, trials) = (50.0, 3, 100_000);
    let mut rng = stream(21, 0);
    let draws: Vec<Vec<f64>> = (0..trials).map(|_| sample_k_jump_sizes(&tail, n, k, &mut rng).unwrap().sizes).collect();
    for _ in 0..20 {
        let rect: Vec<Interval> = (0..k)
            .map(|_| {
                let lo = rng.random_range(0.0..0.25);
                if rng.random_bool(0.5) {
                    Interval::at_least(lo)
                } else {
                    Interval::new(lo, lo + rng.random_range(0.02..0.4))
                }
            })
            .collect();
        let p = exact_jump_vector_prob(&tail, n, &rect).unwrap();
        let hits = draws.iter().filter(|s| s.iter().zip(&rect).all(|(x, r)| r.contains(*x))).count() as u64;
        let (lo, hi) = clopper_pearson(hits, trials as u64, 0.999);
        assert!(lo <= p && p <= hi, "{rect:?}: exact {p}, MC {hits}/{trials}");
    }
}

#[test]
fn estimates_decrease_along_nested_events() {
    let (cfg, m) = setup(TailParams::reference());
    let mut last = f64::INFINITY;
    for x in [0.2, 0.4, 0.6, 1.0] {
        let ev = EventSpec::new("e", EventKind::KthJumpAtLeast { k: 1, x }).unwrap();
        let r = estimate_plain(&ev, &cfg, &m, 40, McSettings::new(20_000, 7)).unwrap();
        assert!(r.p_hat <= last);
        last = r.p_hat;
    }
}

#[test]
fn verdict_invariant_under_beta_and_c() {
    let grid = [100, 10_000, 1_000_000, 100_000_000];
    let ev = EventSpec::new("e", EventKind::KthJumpAtLeast { k: 2, x: 1.0 }).unwrap();
    let verdicts: Vec<_> = [TailParams::reference(), TailParams::new(2.0, -1.0, 1.0, 2.0).unwrap()]
        .into_iter()
        .map(|t| {
            let (cfg, m) = setup(t);
            ldp_slope_check(&ev, &cfg, &m, &grid, Method::Exact, &SlopeSettings::default()).unwrap().verdict
        })
        .collect();
    assert_eq!(verdicts[0], verdicts[1]);
}
