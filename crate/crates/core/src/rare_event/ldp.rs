//! Log-ratio trajectories `log P(A_n) / r(log n)` over an n-grid, compared
//! with the band `[-inner, -outer]` the extended LDP predicts.

use serde::{Deserialize, Serialize};

use super::estimate::{estimate_big_jump_conditioned, estimate_plain, results_to_csv, EstimateResult, McSettings};
use super::event::EventSpec;
use super::exact::ln_exact_jump_vector_prob;
use crate::cadlag::{rate_multi, ProcessKind, RateValue, StepPath};
use crate::error::{invalid, Error, Result};
use crate::jump_sim::{LevyConfig, MomentCache};
use crate::stats::linear_fit;
use crate::tail::TailParams;

pub const DEFAULT_TOLERANCE: f64 = 0.5;
/// Allowed backtracking of the distance to the band between grid points.
pub const DEFAULT_APPROACH_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Exact,
    Plain { trials: u64 },
    Conditioned { j: usize, trials: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    /// Some grid point had no hits; nothing is claimed.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeSettings {
    pub tolerance: f64,
    pub approach_slack: f64,
    pub seed: u64,
    pub resolution: usize,
}

impl Default for SlopeSettings {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            approach_slack: DEFAULT_APPROACH_SLACK,
            seed: 0,
            resolution: crate::jump_sim::DEFAULT_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub event: String,
    pub inner_rate: Option<RateValue>,
    pub outer_rate: Option<RateValue>,
    /// `(-inner, -outer)`.
    pub band: (f64, f64),
    pub points: Vec<EstimateResult>,
    pub terminal_log_ratio: Option<f64>,
    /// Intercept of a fit of the log-ratio against `1 / log n`.
    pub fitted_limit: Option<f64>,
    pub monotone_approach: bool,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl LdpReport {
    pub fn to_csv(&self) -> String {
        results_to_csv(&self.points)
    }

    /// Builds the summary fields from the points.
    pub fn assemble(
        event: String,
        inner: Option<RateValue>,
        outer: Option<RateValue>,
        band: (f64, f64),
        points: Vec<EstimateResult>,
        settings: &SlopeSettings,
    ) -> Self {
        let ratios: Option<Vec<f64>> = points.iter().map(|p| p.log_ratio).collect();
        let dist = |x: f64| (band.0 - x).max(x - band.1).max(0.0);
        let (terminal, fitted, monotone, verdict) = match ratios {
            None => (points.last().and_then(|p| p.log_ratio), None, false, Verdict::Inconclusive),
            Some(r) if r.is_empty() => (None, None, false, Verdict::Inconclusive),
            Some(r) => {
                let last = *r.last().expect("nonempty");
                let monotone = r.windows(2).all(|w| dist(w[1]) <= dist(w[0]) + settings.approach_slack);
                let fitted = if r.len() >= 3 {
                    let x: Vec<f64> = points.iter().map(|p| 1.0 / (p.n as f64).ln()).collect();
                    linear_fit(&x, &r).map(|(a, _)| a)
                } else {
                    None
                };
                let ok = dist(last) <= settings.tolerance && monotone;
                (Some(last), fitted, monotone, if ok { Verdict::Consistent } else { Verdict::Inconsistent })
            }
        };
        Self {
            event,
            inner_rate: inner,
            outer_rate: outer,
            band,
            points,
            terminal_log_ratio: terminal,
            fitted_limit: fitted,
            monotone_approach: monotone,
            tolerance: settings.tolerance,
            verdict,
        }
    }
}

fn check_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 2 {
        return Err(invalid("n_grid", "must be nonempty, strictly increasing and start at 2 or more"));
    }
    Ok(())
}

pub fn ldp_slope_check(
    event: &EventSpec,
    cfg: &LevyConfig,
    moments: &MomentCache,
    n_grid: &[u64],
    method: Method,
    settings: &SlopeSettings,
) -> Result<LdpReport> {
    check_grid(n_grid)?;
    let (inner, outer) = match (event.analytic_inner_rate, event.analytic_outer_rate) {
        (Some(i), Some(o)) => (i, o),
        _ => return Err(invalid("event", "analytic inner and outer rates are required")),
    };
    let band = (-inner.as_f64(), -outer.as_f64());
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let mc = |trials| McSettings { trials, seed: settings.seed, resolution: settings.resolution };
        let p = match method {
            Method::Exact => {
                let rect = event.rectangle().ok_or_else(|| {
                    Error::Unsupported(format!("event '{}' is not a jump-size box; use a Monte Carlo method", event.name))
                })?;
                let ln_p = ln_exact_jump_vector_prob(&cfg.tail, n as f64, &rect)?;
                EstimateResult::exact(n, ln_p, cfg.tail.speed(n as f64)?)
            }
            Method::Plain { trials } => estimate_plain(event, cfg, moments, n, mc(trials))?,
            Method::Conditioned { j, trials } => estimate_big_jump_conditioned(event, cfg, moments, n, j, mc(trials))?,
        };
        points.push(p);
    }
    Ok(LdpReport::assemble(event.name.clone(), Some(inner), Some(outer), band, points, settings))
}

/// A rate minimiser for a jump-size box: one jump per coordinate with a
/// positive lower bound, at distinct interior times.
fn minimiser(rect: &[super::event::Interval]) -> Result<StepPath> {
    let k = rect.len() as f64;
    StepPath::new(
        0.0,
        rect.iter()
            .enumerate()
            .filter(|(_, iv)| iv.lo > 0.0)
            .map(|(i, iv)| ((i as f64 + 1.0) / (k + 1.0), iv.lo)),
    )
}

/// Two independent coordinates with tails of common `gamma` and their own
/// `lambda`. The product speed is `(log n)^gamma`, so the weighted rate is
/// `sum_i lambda_i I(xi_i)`, evaluated with `rate_multi` on a minimiser of
/// each coordinate event. Only box events have exact coordinate factors.
pub fn product_ldp_check(
    tails: &[TailParams; 2],
    events: &[EventSpec; 2],
    n_grid: &[u64],
    settings: &SlopeSettings,
) -> Result<LdpReport> {
    check_grid(n_grid)?;
    let gamma = tails[0].gamma;
    if (tails[1].gamma - gamma).abs() > 0.0 {
        return Err(invalid("tails", "both coordinates need the same gamma"));
    }
    let mut rects = Vec::with_capacity(2);
    let mut paths = Vec::with_capacity(2);
    for e in events {
        let rect = match &e.kind {
            super::event::EventKind::Always => None,
            _ => Some(e.rectangle().ok_or_else(|| {
                Error::Unsupported(format!("event '{}' has no exact coordinate probability", e.name))
            })?),
        };
        paths.push(rect.as_deref().map_or_else(|| Ok(StepPath::zero()), minimiser)?);
        rects.push(rect);
    }
    let lambdas = [tails[0].lambda, tails[1].lambda];
    let target = rate_multi(&paths, &lambdas, ProcessKind::Levy)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let nf = n as f64;
        let mut ln_p = 0.0;
        for (t, r) in tails.iter().zip(&rects) {
            if let Some(r) = r {
                ln_p += ln_exact_jump_vector_prob(t, nf, r)?;
            }
        }
        points.push(EstimateResult::exact(n, ln_p, nf.ln().powf(gamma)));
    }
    let rate = RateValue::Finite(target.round() as u64);
    let name = format!("{} x {}", events[0].name, events[1].name);
    Ok(LdpReport::assemble(name, Some(rate), Some(rate), (-target, -target), points, settings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump_sim::moments;
    use crate::rare_event::event::EventKind;

    #[test]
    fn exact_slopes_approach_jump_counts() {
        let cfg = LevyConfig::default();
        let m = moments(&cfg).unwrap();
        let grid = [100, 10_000, 1_000_000, 100_000_000];
        for k in [1usize, 2] {
            let e = EventSpec::new("k", EventKind::KthJumpAtLeast { k, x: 1.0 }).unwrap();
            let r = ldp_slope_check(&e, &cfg, &m, &grid, Method::Exact, &SlopeSettings::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Consistent, "{r:?}");
            let last = r.terminal_log_ratio.unwrap();
            assert!((last + k as f64).abs() < 0.06 * k as f64, "{last}");
        }
    }

    #[test]
    fn product_targets() {
        let e = EventSpec::new("s1", EventKind::KthJumpAtLeast { k: 1, x: 1.0 }).unwrap();
        let t1 = TailParams::reference();
        let t2 = TailParams::new(1.0, 0.0, 2.0, 2.0).unwrap();
        let grid = [1000, 1_000_000, 100_000_000];
        let r = product_ldp_check(&[t1, t1], &[e.clone(), e.clone()], &grid, &SlopeSettings::default()).unwrap();
        assert_eq!(r.band, (-2.0, -2.0));
        assert_eq!(r.verdict, Verdict::Consistent);
        let r = product_ldp_check(&[t1, t2], &[e.clone(), e.clone()], &grid, &SlopeSettings::default()).unwrap();
        assert_eq!(r.band, (-3.0, -3.0));
        assert!((r.terminal_log_ratio.unwrap() + 3.0).abs() < 0.5);
        let always = EventSpec::new("t", EventKind::Always).unwrap();
        let r = product_ldp_check(&[t1, t1], &[e, always], &grid, &SlopeSettings::default()).unwrap();
        assert_eq!(r.band, (-1.0, -1.0));
    }

    #[test]
    fn zero_hits_are_inconclusive() {
        let cfg = LevyConfig::default();
        let m = moments(&cfg).unwrap();
        let e = EventSpec::new("never", EventKind::Never).unwrap();
        let r = ldp_slope_check(&e, &cfg, &m, &[10, 20], Method::Plain { trials: 1000 }, &SlopeSettings::default())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(ldp_slope_check(&e, &cfg, &m, &[20, 10], Method::Exact, &SlopeSettings::default()).is_err());
    }
}
