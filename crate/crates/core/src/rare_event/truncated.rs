//! Tails of sums of truncated increments `Y_i^n = Z_i 1{Z_i <= n delta}`:
//! `max_{j <= M n} P(sum_{i <= j} (Y_i^n - E Z) > n eps)` should decay
//! faster than `exp(-(eps / 2 delta) r(log n))`, and the reversed sum faster
//! than any multiple of `r(log n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quad::{integrate_to_inf, QuadOptions};
use crate::rng::{open01, stream};
use crate::special::log_add_exp;
use crate::tail::TailParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSettings {
    pub delta: f64,
    pub epsilon: f64,
    pub m: u64,
    /// Log-spaced cells on `[1, n delta]` for the MGF bound and the proposal.
    pub cells: usize,
    /// Importance-sampling trials per n; 0 skips sampling.
    pub trials: u64,
    pub seed: u64,
}

impl TruncatedSettings {
    pub fn new(delta: f64, epsilon: f64, m: u64) -> Self {
        Self { delta, epsilon, m, cells: 1000, trials: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPoint {
    pub n: u64,
    pub speed: f64,
    /// Chernoff bound valid for every `j <= M n` at once, over `r(log n)`.
    pub chernoff_ratio: f64,
    /// Largest per-j optimised Chernoff bound over the j-grid, over `r(log n)`.
    pub chernoff_grid_ratio: f64,
    pub worst_j: u64,
    /// Importance-sampling estimate of the largest probability on the j-grid.
    pub is_ratio: Option<f64>,
    pub is_rel_se: Option<f64>,
    /// Bernstein bound for the reversed sum, over `r(log n)`.
    pub reversed_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedReport {
    pub settings: TruncatedSettings,
    /// `-eps / (2 delta)`.
    pub target: f64,
    pub points: Vec<TruncatedPoint>,
    /// Certified bound below the target at the largest n.
    pub holds_at_largest: bool,
}

/// `eps / (2 delta)`, the decay rate the bound asserts.
pub fn decay_rate(delta: f64, epsilon: f64) -> f64 {
    epsilon / (2.0 * delta)
}

struct Cells {
    edges: Vec<f64>,
    /// `F(edge)` for the normalised tail, per edge.
    sf: Vec<f64>,
    ln_p: Vec<f64>,
    ln_atom: f64,
}

impl Cells {
    fn new(tail: &TailParams, cap: f64, count: usize) -> Result<Self> {
        let top = cap.ln();
        let edges: Vec<f64> = (0..=count).map(|i| (top * i as f64 / count as f64).exp()).collect();
        let sf: Vec<f64> = edges.iter().map(|&x| tail.ln_tail_normalized(x).map(f64::exp)).collect::<Result<_>>()?;
        let ln_p = sf.windows(2).map(|w| (w[0] - w[1]).ln()).collect();
        let ln_atom = tail.ln_tail_normalized(cap)?;
        Ok(Self { edges, sf, ln_p, ln_atom })
    }

    /// Upper bound on `log E e^{sY}`: every cell rounded up to its right edge.
    fn ln_mgf(&self, s: f64) -> f64 {
        self.ln_p.iter().enumerate().fold(self.ln_atom, |acc, (c, &lp)| log_add_exp(acc, lp + s * self.edges[c + 1]))
    }
}

/// Minimum of a convex function on `[0, inf)`.
fn convex_min(f: impl Fn(f64) -> f64, scale: f64) -> (f64, f64) {
    let mut hi = scale;
    while f(2.0 * hi) < f(hi) && hi < 1e12 {
        hi *= 2.0;
    }
    hi *= 2.0;
    let (mut a, mut b) = (0.0, hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    (s, f(s))
}

fn j_grid(max_j: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..=64).map(|i| (max_j as f64).powf(i as f64 / 64.0).round() as u64).collect();
    v.push(max_j);
    v.retain(|&j| j >= 1);
    v.sort_unstable();
    v.dedup();
    v
}

/// `E[Z^p; Z > x]` for the normalised tail law, `x >= 1`.
pub fn tail_partial_moment(tail: &TailParams, p: f64, x: f64) -> Result<f64> {
    let a = x.ln();
    let ln_c = tail.c.ln();
    let opts = QuadOptions { rel_tol: 1e-10, ..QuadOptions::default() };
    let (v, _) = integrate_to_inf(|u| (p * u - tail.r(u) - ln_c).exp(), a, opts)?;
    Ok(x.powf(p) * tail.ln_tail_normalized(x)?.exp() + p * v)
}

pub fn truncated_sum_tail_check(tail: &TailParams, n_grid: &[u64], st: &TruncatedSettings) -> Result<TruncatedReport> {
    if !(st.delta > 0.0 && st.epsilon > 0.0) || st.m == 0 || st.cells < 2 {
        return Err(invalid("delta", "need delta, eps > 0, M >= 1 and at least two cells"));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 2 {
        return Err(invalid("n_grid", "must be strictly increasing from 2"));
    }
    let mu = tail.mu1()?;
    let ez2 = tail.moment(2.0)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let nf = n as f64;
        let speed = tail.speed(nf)?;
        let cap = nf * st.delta;
        let big_j = st.m * n;
        let level = nf * st.epsilon;
        let reversed_ratio = reversed_bernstein(tail, mu, ez2, cap, big_j, level)? / speed;
        if cap < 1.0 || (big_j as f64) * (cap - mu) <= level {
            // Every partial sum stays below the level.
            points.push(TruncatedPoint {
                n,
                speed,
                chernoff_ratio: f64::NEG_INFINITY,
                chernoff_grid_ratio: f64::NEG_INFINITY,
                worst_j: big_j,
                is_ratio: None,
                is_rel_se: None,
                reversed_ratio,
            });
            continue;
        }
        let cells = Cells::new(tail, cap, st.cells)?;
        let jf_max = big_j as f64;
        let kappa = |s: f64| cells.ln_mgf(s) - s * mu;
        let (_, uniform) = convex_min(|s| -s * level + (jf_max * kappa(s)).max(kappa(s)), 1.0 / cap);

        let mut worst = (f64::NEG_INFINITY, 1u64, 0.0);
        for j in j_grid(big_j) {
            let jf = j as f64;
            if jf * (cap - mu) <= level {
                continue;
            }
            let (s, v) = convex_min(|s| -s * (level + jf * mu) + jf * cells.ln_mgf(s), 1.0 / cap);
            if v > worst.0 {
                worst = (v, j, s);
            }
        }
        let (is_ln, is_se) = if st.trials > 0 && worst.0 > f64::NEG_INFINITY {
            importance_sample(tail, &cells, mu, level, big_j, worst.2, st.trials, st.seed ^ n)
        } else {
            (None, None)
        };
        points.push(TruncatedPoint {
            n,
            speed,
            chernoff_ratio: uniform.min(0.0) / speed,
            chernoff_grid_ratio: worst.0.min(0.0) / speed,
            worst_j: worst.1,
            is_ratio: is_ln.map(|l| l / speed),
            is_rel_se: is_se,
            reversed_ratio,
        });
    }
    let target = -decay_rate(st.delta, st.epsilon);
    let holds_at_largest = points.last().is_some_and(|p| p.chernoff_ratio < target);
    Ok(TruncatedReport { settings: *st, target, points, holds_at_largest })
}

/// Exponentially tilted proposal on the cells (exact within each cell), with
/// exact likelihood ratios. Returns the log of the largest estimate over the
/// j-grid and its relative standard error.
#[allow(clippy::too_many_arguments)]
fn importance_sample(
    tail: &TailParams,
    cells: &Cells,
    mu: f64,
    level: f64,
    big_j: u64,
    s: f64,
    trials: u64,
    seed: u64,
) -> (Option<f64>, Option<f64>) {
    let ln_m = cells.ln_mgf(s);
    // Index 0 is the atom at zero; index c + 1 is cell c.
    let mut cdf = Vec::with_capacity(cells.ln_p.len() + 1);
    let mut acc = (cells.ln_atom - ln_m).exp();
    cdf.push(acc);
    for (c, &lp) in cells.ln_p.iter().enumerate() {
        acc += (lp + s * cells.edges[c + 1] - ln_m).exp();
        cdf.push(acc);
    }
    let total = acc;
    let grid = j_grid(big_j);
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t);
            let mut out = vec![f64::NEG_INFINITY; grid.len()];
            let (mut sum, mut tilt) = (0.0, 0.0);
            let mut gi = 0;
            for j in 1..=big_j {
                let u = open01(&mut rng) * total;
                let idx = cdf.partition_point(|&x| x < u).min(cdf.len() - 1);
                if idx > 0 {
                    let c = idx - 1;
                    let (hi_sf, lo_sf) = (cells.sf[c], cells.sf[c + 1]);
                    let v = lo_sf + open01(&mut rng) * (hi_sf - lo_sf);
                    let z = tail.normalized_inverse(v).clamp(cells.edges[c], cells.edges[c + 1]);
                    sum += z;
                    tilt += cells.edges[c + 1];
                }
                if grid[gi] == j {
                    let excess = sum - j as f64 * mu;
                    if excess > level {
                        out[gi] = j as f64 * ln_m - s * tilt;
                    }
                    gi += 1;
                    if gi == grid.len() {
                        break;
                    }
                }
            }
            out
        })
        .collect();
    let tf = trials as f64;
    let mut best: Option<(f64, f64)> = None;
    for g in 0..grid.len() {
        let lw: Vec<f64> = per_trial.iter().map(|r| r[g]).filter(|x| x.is_finite()).collect();
        if lw.is_empty() {
            continue;
        }
        let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s1: f64 = lw.iter().map(|x| (x - top).exp()).sum::<f64>() / tf;
        let s2: f64 = lw.iter().map(|x| (2.0 * (x - top)).exp()).sum::<f64>() / tf;
        let ln_p = top + s1.ln();
        let rel = ((s2 - s1 * s1).max(0.0) / tf).sqrt() / s1;
        if best.is_none_or(|(b, _)| ln_p > b) {
            best = Some((ln_p, rel));
        }
    }
    match best {
        Some((l, r)) => (Some(l), Some(r)),
        None => (None, None),
    }
}

/// `log` of the Bernstein bound on `max_j P(sum_{i <= j} (E Z - Y_i) > level)`.
/// With `X_i = E Y - Y_i <= E Y` and `t_j = level - j E[Z; Z > cap]`, the
/// bound `exp(-t^2 / (2 (j Var Y + E Y t / 3)))` grows with `j`, so `j = M n`.
fn reversed_bernstein(tail: &TailParams, mu: f64, ez2: f64, cap: f64, big_j: u64, level: f64) -> Result<f64> {
    let (m1_tail, m2_tail) = if cap < 1.0 {
        (mu, ez2)
    } else {
        (tail_partial_moment(tail, 1.0, cap)?, tail_partial_moment(tail, 2.0, cap)?)
    };
    let ey = mu - m1_tail;
    let var = (ez2 - m2_tail) - ey * ey;
    let jf = big_j as f64;
    let t = level - jf * m1_tail;
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(-t * t / (2.0 * (jf * var.max(0.0) + ey.max(0.0) * t / 3.0)))
}
