//! Indicator Monte Carlo: plain, and stratified on the j-th Poisson arrival.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::event::EventSpec;
use crate::error::{invalid, Error, Result};
use crate::jump_sim::{sample_x_bar, sample_x_bar_with_prefix, LevyConfig, MomentCache};
use crate::rng::{derive_seed, open01, stream, StreamRng};
use crate::special::{ln_erlang_cdf, ln_erlang_sf, log_add_exp};
use crate::stats::clopper_pearson;

/// Two-sided level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;
pub const MIN_TRIALS: u64 = 1000;
/// Share of the budget spent on the stratum `Gamma_j > q`.
pub const COMPLEMENT_SHARE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plain,
    Conditioned,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub n: u64,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    /// `log p_hat`, kept separately so that tiny exact probabilities do not
    /// underflow. `None` when nothing was observed.
    pub ln_p_hat: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub speed: f64,
    pub log_ratio: Option<f64>,
    pub estimator: Estimator,
}

impl EstimateResult {
    pub fn exact(n: u64, ln_p: f64, speed: f64) -> Self {
        let p = ln_p.exp();
        let ln = (ln_p > f64::NEG_INFINITY).then_some(ln_p);
        Self {
            n,
            trials: 0,
            hits: 0,
            p_hat: p,
            ln_p_hat: ln,
            ci_low: p,
            ci_high: p,
            speed,
            log_ratio: ln.map(|l| l / speed),
            estimator: Estimator::Exact,
        }
    }

    pub fn csv_header() -> &'static str {
        "n,p_hat,ci_low,ci_high,log_ratio"
    }

    pub fn csv_row(&self) -> String {
        let lr = self.log_ratio.map_or_else(String::new, |v| format!("{v}"));
        format!("{},{:e},{:e},{:e},{}", self.n, self.p_hat, self.ci_low, self.ci_high, lr)
    }
}

pub fn results_to_csv(rows: &[EstimateResult]) -> String {
    let mut s = String::from(EstimateResult::csv_header());
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(invalid("trials", format!("need at least {MIN_TRIALS}")));
    }
    Ok(())
}

/// Counts hits of `f` over `trials` independent streams. Trial `i` always
/// uses stream `i`, so the count is the same for every thread layout and
/// runs at different `n` share random numbers.
pub fn count_hits<F>(trials: u64, seed: u64, f: F) -> u64
where
    F: Fn(&mut StreamRng) -> bool + Sync,
{
    (0..trials).into_par_iter().filter(|&i| f(&mut stream(seed, i))).count() as u64
}

/// Plain estimator from a hit count.
pub fn plain_result(n: u64, trials: u64, hits: u64, speed: f64) -> EstimateResult {
    let p = hits as f64 / trials as f64;
    let (lo, hi) = clopper_pearson(hits, trials, CONFIDENCE);
    let ln = (hits > 0).then(|| p.ln());
    EstimateResult {
        n,
        trials,
        hits,
        p_hat: p,
        ln_p_hat: ln,
        ci_low: lo,
        ci_high: hi,
        speed,
        log_ratio: ln.map(|l| l / speed),
        estimator: Estimator::Plain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// Grid used for the diffusive part; ignored for pure-jump models.
    pub resolution: usize,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, resolution: crate::jump_sim::DEFAULT_RESOLUTION }
    }
}

pub fn estimate_plain(
    event: &EventSpec,
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    mc: McSettings,
) -> Result<EstimateResult> {
    check_trials(mc.trials)?;
    let speed = cfg.tail.speed(n as f64)?;
    let k = event.required_k();
    // Validate the arguments once before going parallel.
    sample_x_bar(cfg, moments, n, k, mc.resolution, &mut stream(mc.seed, u64::MAX))?;
    let hits = count_hits(mc.trials, mc.seed, |rng| {
        let s = sample_x_bar(cfg, moments, n, k, mc.resolution, rng).expect("validated");
        event.holds(&s)
    });
    Ok(plain_result(n, mc.trials, hits, speed))
}

/// `Gamma_j` conditioned on `Gamma_j <= q`, by inversion of the Erlang CDF.
pub fn sample_erlang_below<R: rand::Rng + ?Sized>(j: u64, q: f64, ln_mass: f64, rng: &mut R) -> f64 {
    let target = open01(rng).ln() + ln_mass;
    let (mut lo, mut hi) = (0.0, q);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_erlang_cdf(j, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Gamma_j` conditioned on `Gamma_j > q`.
pub fn sample_erlang_above<R: rand::Rng + ?Sized>(j: u64, q: f64, ln_mass: f64, rng: &mut R) -> f64 {
    let target = open01(rng).ln() + ln_mass;
    let mut hi = (2.0 * q).max(q + j as f64 + 1.0);
    while ln_erlang_sf(j, hi) > target {
        hi *= 2.0;
    }
    let mut lo = q;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_erlang_sf(j, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Gamma_1 < ... < Gamma_j` given `Gamma_j = g`: sorted uniforms on (0, g).
pub fn arrivals_given_last<R: rand::Rng + ?Sized>(j: usize, g: f64, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (1..j).map(|_| g * open01(rng)).collect();
    v.sort_by(f64::total_cmp);
    v.push(g);
    v
}

/// Stratifies on `{Gamma_j <= q}` with `q = Q_n(n theta)`, samples both
/// strata exactly and weights by their Erlang probabilities. Unbiased for
/// `P(event)`; nearly all of the budget goes to the stratum where the `j`
/// largest jumps exceed `theta`.
pub fn estimate_big_jump_conditioned(
    event: &EventSpec,
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    j: usize,
    mc: McSettings,
) -> Result<EstimateResult> {
    if j == 0 {
        return estimate_plain(event, cfg, moments, n, mc);
    }
    check_trials(mc.trials)?;
    let theta = event.conditioning_threshold(j).ok_or_else(|| {
        Error::Unsupported(format!(
            "event '{}' has no size threshold for conditioning on {j} jumps; use estimate_plain",
            event.name
        ))
    })?;
    let nf = n as f64;
    if nf * theta <= 1.0 {
        // Every arrival already qualifies; there is nothing to condition on.
        return estimate_plain(event, cfg, moments, n, mc);
    }
    let speed = cfg.tail.speed(nf)?;
    let q = cfg.tail.q_n(nf, nf * theta)?;
    let ja = j as u64;
    let ln_pa = ln_erlang_cdf(ja, q);
    let ln_pb = ln_erlang_sf(ja, q);
    let k = event.required_k().max(j);
    sample_x_bar(cfg, moments, n, k, mc.resolution, &mut stream(mc.seed, u64::MAX))?;

    let trials_b = ((mc.trials as f64 * COMPLEMENT_SHARE) as u64).max(1);
    let trials_a = mc.trials - trials_b;
    let run = |below: bool, rng: &mut StreamRng| {
        let g = if below {
            sample_erlang_below(ja, q, ln_pa, rng)
        } else {
            sample_erlang_above(ja, q, ln_pb, rng)
        };
        let prefix = arrivals_given_last(j, g, rng);
        let s = sample_x_bar_with_prefix(cfg, moments, n, prefix, k, mc.resolution, rng).expect("validated");
        event.holds(&s)
    };
    let hits_a = count_hits(trials_a, mc.seed, |rng| run(true, rng));
    let hits_b = count_hits(trials_b, derive_seed(mc.seed, "complement"), |rng| run(false, rng));

    // Each stratum's interval at 1 - alpha/2, so the sum covers at 1 - alpha.
    let level = 1.0 - (1.0 - CONFIDENCE) / 2.0;
    let (lo_a, hi_a) = clopper_pearson(hits_a, trials_a, level);
    let (lo_b, hi_b) = clopper_pearson(hits_b, trials_b, level);
    let (pa, pb) = (ln_pa.exp(), ln_pb.exp());
    let term = |ln_w: f64, h: u64, t: u64| {
        if h == 0 {
            f64::NEG_INFINITY
        } else {
            ln_w + (h as f64 / t as f64).ln()
        }
    };
    let ln_p = log_add_exp(term(ln_pa, hits_a, trials_a), term(ln_pb, hits_b, trials_b));
    let ln = (ln_p > f64::NEG_INFINITY).then_some(ln_p);
    let p_hat = ln_p.exp();
    Ok(EstimateResult {
        n,
        trials: mc.trials,
        hits: hits_a + hits_b,
        p_hat,
        ln_p_hat: ln,
        ci_low: (pa * lo_a + pb * lo_b).min(p_hat),
        ci_high: (pa * hi_a + pb * hi_b).max(p_hat),
        speed,
        log_ratio: ln.map(|l| l / speed),
        estimator: Estimator::Conditioned,
    })
}
