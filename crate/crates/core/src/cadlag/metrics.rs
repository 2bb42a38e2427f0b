//! Uniform and Skorokhod J1 distances between step paths.

use serde::{Deserialize, Serialize};

use super::m1prime::m1prime_upper;
use super::path::{AsStep, StepPath};
use crate::error::{invalid, Result};

pub const DEFAULT_J1_TOL: f64 = 1e-6;

/// Exact `sup_t |p(t) - q(t)|`.
pub fn uniform_distance<P: AsStep + ?Sized, Q: AsStep + ?Sized>(p: &P, q: &Q) -> f64 {
    let (p, q) = (p.as_step(), q.as_step());
    let (pj, qj) = (p.jumps(), q.jumps());
    let (mut vp, mut vq) = (p.initial(), q.initial());
    let mut best = (vp - vq).abs();
    let (mut i, mut j) = (0, 0);
    while i < pj.len() || j < qj.len() {
        let t = match (pj.get(i), qj.get(j)) {
            (Some(a), Some(b)) => a.time.min(b.time),
            (Some(a), None) => a.time,
            (None, Some(b)) => b.time,
            (None, None) => unreachable!(),
        };
        while i < pj.len() && pj[i].time == t {
            vp += pj[i].size;
            i += 1;
        }
        while j < qj.len() && qj[j].time == t {
            vq += qj[j].size;
            j += 1;
        }
        best = best.max((vp - vq).abs());
    }
    best
}

/// Interior jump times, interior levels and terminal level of a path,
/// with a jump at `t = 1` kept apart because it cannot move.
struct Split {
    times: Vec<f64>,
    levels: Vec<f64>,
    terminal: f64,
}

impl Split {
    fn of(p: &StepPath) -> Self {
        let mut times = Vec::new();
        let mut levels = vec![p.initial()];
        let mut v = p.initial();
        let mut terminal = v;
        for j in p.jumps() {
            if j.time < 1.0 {
                v += j.size;
                times.push(j.time);
                levels.push(v);
                terminal = v;
            } else {
                terminal = v + j.size;
            }
        }
        Self { times, levels, terminal }
    }
}

// Slack for comparisons of times reconstructed from candidate values.
const TIME_SLACK: f64 = 1e-12;

/// Is there a time change `lambda` with `|lambda - e| <= eps` and
/// `|p o lambda - q| <= eps`?
///
/// DP over `(i, j)` = jumps of `p` and `q` consumed so far, storing the
/// earliest time at which that state can be reached. Every visited state
/// must keep the level gap within `eps`.
fn j1_feasible(p: &Split, q: &Split, eps: f64) -> bool {
    let (m, l) = (p.times.len(), q.times.len());
    if (p.levels[0] - q.levels[0]).abs() > eps || (p.terminal - q.terminal).abs() > eps {
        return false;
    }
    let w = l + 1;
    let mut reach = vec![f64::INFINITY; (m + 1) * w];
    reach[0] = 0.0;
    let ok = |i: usize, j: usize| (p.levels[i] - q.levels[j]).abs() <= eps;
    let e = eps + TIME_SLACK;
    for i in 0..=m {
        for j in 0..=l {
            let t = reach[i * w + j];
            if !t.is_finite() {
                continue;
            }
            if j < l {
                let s = q.times[j];
                if s + TIME_SLACK >= t && ok(i, j + 1) {
                    let cell = &mut reach[i * w + j + 1];
                    *cell = cell.min(s.max(t));
                }
            }
            if i < m {
                let tau = p.times[i];
                let sigma = t.max(tau - eps);
                if sigma <= tau + e && ok(i + 1, j) {
                    let cell = &mut reach[(i + 1) * w + j];
                    *cell = cell.min(sigma);
                }
                if j < l {
                    let s = q.times[j];
                    if (tau - s).abs() <= e && s + TIME_SLACK >= t && ok(i + 1, j + 1) {
                        let cell = &mut reach[(i + 1) * w + j + 1];
                        *cell = cell.min(s.max(t));
                    }
                }
            }
        }
    }
    reach[m * w + l].is_finite()
}

/// Skorokhod J1 distance. The optimum is attained at one of finitely many
/// candidate values (level gaps and time gaps), so the search over the
/// sorted candidates is exact; `tol` only bounds the reported error.
pub fn j1_distance<P: AsStep + ?Sized, Q: AsStep + ?Sized>(p: &P, q: &Q, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let (p, q) = (p.as_step(), q.as_step());
    let (sp, sq) = (Split::of(&p), Split::of(&q));
    let mut cand = Vec::with_capacity(sp.levels.len() * sq.levels.len() * 2 + 2);
    cand.push(0.0);
    cand.push((sp.terminal - sq.terminal).abs());
    for a in &sp.levels {
        for b in &sq.levels {
            cand.push((a - b).abs());
        }
    }
    for a in &sp.times {
        for b in &sq.times {
            cand.push((a - b).abs());
        }
    }
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let (mut lo, mut hi) = (0usize, cand.len() - 1);
    debug_assert!(j1_feasible(&sp, &sq, cand[hi]));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if j1_feasible(&sp, &sq, cand[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cand[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    J1,
    M1Prime,
    Uniform,
}

/// `inf` over `family` of the chosen distance; the M1' variant uses the
/// certified upper bound.
pub fn fattening_distance(p: &StepPath, family: &[StepPath], metric: Metric, resolution: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(invalid("family", "must be nonempty"));
    }
    let mut best = f64::INFINITY;
    for f in family {
        let d = match metric {
            Metric::J1 => j1_distance(p, f, resolution)?,
            Metric::M1Prime => m1prime_upper(p, f, resolution)?,
            Metric::Uniform => uniform_distance(p, f),
        };
        best = best.min(d);
        if best == 0.0 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(t: f64, s: f64) -> StepPath {
        StepPath::indicator(t, s).unwrap()
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_distance(&ind(0.5, 1.0), &ind(0.5, 1.0)), 0.0);
        assert_eq!(uniform_distance(&ind(0.5, 1.0), &StepPath::zero()), 1.0);
        assert_eq!(uniform_distance(&ind(0.5, 1.0), &ind(0.5, 2.0)), 1.0);
    }

    #[test]
    fn j1_examples() {
        let tol = DEFAULT_J1_TOL;
        assert_eq!(j1_distance(&ind(0.5, 1.0), &ind(0.5, 1.0), tol).unwrap(), 0.0);
        let d = j1_distance(&ind(0.5, 1.0), &ind(0.6, 1.0), tol).unwrap();
        assert!((d - 0.1).abs() < tol);
        let d = j1_distance(&ind(0.0, 1.0), &ind(0.1, 1.0), tol).unwrap();
        assert!((d - 1.0).abs() < tol);
    }

    #[test]
    fn j1_terminal_jump_cannot_move() {
        // A jump at 1 stays at 1, so the interior jump cannot be matched.
        let d = j1_distance(&ind(1.0, 1.0), &ind(0.99, 1.0), 1e-9).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let d = j1_distance(&ind(1.0, 1.0), &ind(1.0, 0.7), 1e-9).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn j1_two_jumps_merge() {
        // Two close jumps of q against one jump of p: either match one and
        // leave a level gap of 0.5, or pay the time shift.
        let p = ind(0.5, 1.0);
        let q = StepPath::new(0.0, [(0.5, 0.5), (0.52, 0.5)]).unwrap();
        let d = j1_distance(&p, &q, 1e-9).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "{d}");
    }

    #[test]
    fn fattening_examples() {
        let p = ind(0.5, 1.0);
        let fam = vec![ind(0.6, 1.0)];
        let d = fattening_distance(&p, &fam, Metric::J1, 1e-6).unwrap();
        assert!((d - 0.1).abs() < 1e-6);
        let fam2 = vec![ind(0.6, 1.0), p.clone()];
        assert_eq!(fattening_distance(&p, &fam2, Metric::J1, 1e-6).unwrap(), 0.0);
        assert!(fattening_distance(&p, &[], Metric::J1, 1e-6).is_err());
    }
}
