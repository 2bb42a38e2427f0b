//! Oracles shared by the integration suites.

#![allow(dead_code)]

use heavytail::cadlag::StepPath;
use rand::Rng;

/// Offset used to place a jump just before or after another one.
const NUDGE: f64 = 1e-6;
const COARSE: usize = 20;

fn eval(initial: f64, jumps: &[(f64, f64)], t: f64) -> f64 {
    initial + jumps.iter().filter(|j| j.0 <= t).map(|j| j.1).sum::<f64>()
}

fn sup_gap(p0: f64, p: &[(f64, f64)], q0: f64, q: &[(f64, f64)]) -> f64 {
    let mut ts = vec![0.0];
    ts.extend(p.iter().map(|j| j.0));
    ts.extend(q.iter().map(|j| j.0));
    ts.iter().map(|&t| (eval(p0, p, t) - eval(q0, q, t)).abs()).fold(0.0, f64::max)
}

/// J1 distance by enumerating piecewise-linear time changes. Each jump of
/// `p` is sent to a candidate time drawn from its own time, the jump times
/// of `q` shifted by small multiples of `NUDGE`, and a coarse uniform grid.
/// Accurate to a few `NUDGE`s for paths with a handful of jumps.
pub fn brute_j1(p: &StepPath, q: &StepPath) -> f64 {
    let pj: Vec<(f64, f64)> = p.jumps().iter().map(|j| (j.time, j.size)).collect();
    let qj: Vec<(f64, f64)> = q.jumps().iter().map(|j| (j.time, j.size)).collect();
    let cands: Vec<Vec<f64>> = pj
        .iter()
        .map(|&(t, _)| {
            if t == 1.0 {
                return vec![1.0];
            }
            let mut c = vec![t];
            for m in 1..=4 {
                c.push(t - m as f64 * NUDGE);
                c.push(t + m as f64 * NUDGE);
            }
            for &(s, _) in &qj {
                for m in -4i32..=4 {
                    c.push(s + m as f64 * NUDGE);
                }
            }
            c.extend((1..COARSE).map(|k| k as f64 / COARSE as f64));
            c.retain(|&u| u > 0.0 && u < 1.0);
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let mut best = sup_gap(p.initial(), &pj, q.initial(), &qj);
    let mut u = vec![0.0; pj.len()];
    search(0, 0.0, 0.0, &pj, &qj, p.initial(), q.initial(), &cands, &mut u, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn search(
    i: usize,
    prev: f64,
    time_cost: f64,
    pj: &[(f64, f64)],
    qj: &[(f64, f64)],
    p0: f64,
    q0: f64,
    cands: &[Vec<f64>],
    u: &mut Vec<f64>,
    best: &mut f64,
) {
    if time_cost >= *best {
        return;
    }
    if i == pj.len() {
        let moved: Vec<(f64, f64)> = pj.iter().zip(u.iter()).map(|(j, &t)| (t, j.1)).collect();
        let v = time_cost.max(sup_gap(p0, &moved, q0, qj));
        if v < *best {
            *best = v;
        }
        return;
    }
    for &c in &cands[i] {
        if c <= prev {
            continue;
        }
        u[i] = c;
        search(i + 1, c, time_cost.max((c - pj[i].0).abs()), pj, qj, p0, q0, cands, u, best);
    }
}

/// Step path with up to `max_jumps` jumps of either sign; a quarter of the
/// time one jump sits at 1, and the start is occasionally nonzero.
pub fn random_step_path<R: Rng + ?Sized>(rng: &mut R, max_jumps: usize) -> StepPath {
    let k = rng.random_range(0..=max_jumps);
    let mut jumps: Vec<(f64, f64)> = (0..k)
        .map(|_| {
            let s: f64 = rng.random_range(0.1..2.0);
            (rng.random_range(0.01..0.99), if rng.random_bool(0.8) { s } else { -s })
        })
        .collect();
    if k > 0 && rng.random_bool(0.25) {
        jumps[0].0 = 1.0;
    }
    let initial = if rng.random_bool(0.2) { rng.random_range(-1.0..1.0) } else { 0.0 };
    StepPath::new(initial, jumps).unwrap()
}
