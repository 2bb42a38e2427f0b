//! Empirical checks of the Etemadi and Bernstein inequalities.

use serde::{Deserialize, Serialize};

use super::estimate::CONFIDENCE;
use crate::error::{invalid, Error, Result};
use crate::stats::clopper_pearson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    /// Empirical probability on the small side of the inequality.
    pub lhs: f64,
    pub lhs_ci: (f64, f64),
    /// Bound it must not exceed (empirical for Etemadi, analytic for Bernstein).
    pub rhs: f64,
    /// Whether the lower confidence limit of `lhs` is at most the upper
    /// confidence limit of `rhs`.
    pub holds: bool,
}

fn rows_ok(rows: &[Vec<f64>]) -> Result<usize> {
    let len = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || len == 0 || rows.iter().any(|r| r.len() != len) {
        return Err(invalid("samples", "need equally long, nonempty rows"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("samples", "values must be finite"));
    }
    Ok(len)
}

/// `P(max_k |S_k| >= 3x) <= 3 max_k P(|S_k| >= x)`; each row holds the
/// partial sums `S_1, ..., S_n` of one trial.
pub fn etemadi_oracle(partial_sums: &[Vec<f64>], x: f64) -> Result<OracleOutcome> {
    let len = rows_ok(partial_sums)?;
    if !(x > 0.0) {
        return Err(invalid("x", "must be positive"));
    }
    let trials = partial_sums.len() as u64;
    let lhs_hits = partial_sums.iter().filter(|r| r.iter().any(|s| s.abs() >= 3.0 * x)).count() as u64;
    let mut best = (0u64, 0.0f64);
    for k in 0..len {
        let h = partial_sums.iter().filter(|r| r[k].abs() >= x).count() as u64;
        let hi = clopper_pearson(h, trials, CONFIDENCE).1;
        if hi > best.1 {
            best = (h, hi);
        }
    }
    let lhs_ci = clopper_pearson(lhs_hits, trials, CONFIDENCE);
    let rhs = 3.0 * best.0 as f64 / trials as f64;
    Ok(OracleOutcome { lhs: lhs_hits as f64 / trials as f64, lhs_ci, rhs, holds: lhs_ci.0 <= 3.0 * best.1 })
}

/// `exp(-t^2 / (2 (v + b t / 3)))`.
pub fn bernstein_bound(t: f64, v: f64, b: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (-t * t / (2.0 * (v + b * t / 3.0))).exp()
}

/// `P(sum_i (X_i - mean) > t) <= bernstein_bound(t, m variance, b)` for
/// independent `X_i` with `X_i - mean <= b`. Each row holds the `m`
/// increments of one trial.
pub fn bernstein_oracle(samples: &[Vec<f64>], mean: f64, variance: f64, b: f64, t: f64) -> Result<OracleOutcome> {
    let m = rows_ok(samples)?;
    if !(b > 0.0) || !(variance >= 0.0) || !(t >= 0.0) {
        return Err(invalid("b", "need b > 0, variance >= 0 and t >= 0"));
    }
    if let Some(v) = samples.iter().flatten().find(|v| **v - mean > b) {
        return Err(Error::HypothesisViolation(format!("increment {v} exceeds mean + b = {}", mean + b)));
    }
    let trials = samples.len() as u64;
    let hits = samples.iter().filter(|r| r.iter().map(|v| v - mean).sum::<f64>() > t).count() as u64;
    let bound = bernstein_bound(t, m as f64 * variance, b);
    let lhs_ci = clopper_pearson(hits, trials, CONFIDENCE);
    Ok(OracleOutcome { lhs: hits as f64 / trials as f64, lhs_ci, rhs: bound, holds: lhs_ci.0 <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn rademacher_rows(trials: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, 0);
        (0..trials)
            .map(|_| (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect())
            .collect()
    }

    #[test]
    fn etemadi_on_coin_flips() {
        let rows: Vec<Vec<f64>> = rademacher_rows(10_000, 50, 1)
            .into_iter()
            .map(|r| {
                r.iter()
                    .scan(0.0, |s, v| {
                        *s += v;
                        Some(*s)
                    })
                    .collect()
            })
            .collect();
        let o = etemadi_oracle(&rows, 2.0).unwrap();
        assert!(o.holds, "{o:?}");
    }

    #[test]
    fn bernstein_on_coin_flips() {
        let rows = rademacher_rows(10_000, 100, 2);
        let o = bernstein_oracle(&rows, 0.0, 1.0, 1.0, 10.0).unwrap();
        assert!(o.holds && o.rhs >= o.lhs, "{o:?}");
        assert_eq!(bernstein_bound(0.0, 3.0, 1.0), 1.0);
        assert!(matches!(bernstein_oracle(&rows, 0.0, 1.0, 0.5, 1.0), Err(Error::HypothesisViolation(_))));
    }
}
