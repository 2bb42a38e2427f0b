//! The one-big-jump ratio `P(X(n) > x) / (n P(X(1) > x))` for the centred
//! (unscaled) Lévy process, by Monte Carlo and by Panjer lattice brackets.

use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::estimate::{count_hits, plain_result, EstimateResult};
use crate::error::{invalid, Error, Result};
use crate::jump_sim::{LevyConfig, MomentCache};
use crate::rng::{derive_seed, open01};
use crate::tail::TailParams;

/// `X(t) - t E X(1)`.
pub fn sample_centered_x<R: rand::Rng + ?Sized>(cfg: &LevyConfig, moments: &MomentCache, t: f64, rng: &mut R) -> f64 {
    let mean = t * moments.nu1;
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
    let mut s = -mean * moments.mu1;
    for _ in 0..count {
        s += cfg.tail.sample(rng);
    }
    if cfg.a > 0.0 {
        s += Normal::new(0.0, cfg.a * t.sqrt()).expect("finite sd").sample(rng);
    }
    if let Some(sj) = &cfg.small_jump {
        let m = t * sj.mass();
        if m > 0.0 {
            let c = Poisson::new(m).expect("positive mean").sample(rng) as u64;
            for _ in 0..c {
                s += sj.draw(open01(rng));
            }
        }
        s -= t * sj.first_moment();
    }
    s
}

/// Standard deviation of `X(n)`.
pub fn sd_x(cfg: &LevyConfig, moments: &MomentCache, n: f64) -> Result<f64> {
    let ez2 = cfg.tail.moment(2.0)?;
    let small = match &cfg.small_jump {
        Some(sj) => sj.second_moment()?,
        None => 0.0,
    };
    Ok((n * (moments.nu1 * ez2 + cfg.a * cfg.a + small)).sqrt())
}

/// Ratio is only expected near 1 when `x` is this many standard
/// deviations of `X(n)` out.
pub const REGIME_SDS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneBigJumpPoint {
    pub n: u64,
    pub x: f64,
    pub p_n: EstimateResult,
    pub p_1: EstimateResult,
    pub ratio: Option<f64>,
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub sd_n: f64,
    pub in_regime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneBigJumpReport {
    pub x: f64,
    pub trials: u64,
    pub points: Vec<OneBigJumpPoint>,
}

impl OneBigJumpReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,x,p_n,p_1,ratio,ratio_low,ratio_high,in_regime\n");
        for p in &self.points {
            let r = p.ratio.map_or_else(String::new, |v| format!("{v}"));
            s.push_str(&format!(
                "{},{},{:e},{:e},{},{},{},{}\n",
                p.n, p.x, p.p_n.p_hat, p.p_1.p_hat, r, p.ratio_low, p.ratio_high, p.in_regime
            ));
        }
        s
    }
}

pub fn one_big_jump_check(
    cfg: &LevyConfig,
    moments: &MomentCache,
    x: f64,
    n_grid: &[u64],
    trials: u64,
    seed: u64,
) -> Result<OneBigJumpReport> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < 2) {
        return Err(invalid("n_grid", "need n >= 2"));
    }
    if trials == 0 || !x.is_finite() {
        return Err(invalid("trials", "need trials > 0 and finite x"));
    }
    let hits_1 = count_hits(trials, derive_seed(seed, "one"), |rng| sample_centered_x(cfg, moments, 1.0, rng) > x);
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let nf = n as f64;
        let speed = cfg.tail.speed(nf)?;
        let hits_n = count_hits(trials, derive_seed(seed, "n"), |rng| sample_centered_x(cfg, moments, nf, rng) > x);
        let p_n = plain_result(n, trials, hits_n, speed);
        let p_1 = plain_result(n, trials, hits_1, speed);
        let ratio = (hits_1 > 0).then(|| p_n.p_hat / (nf * p_1.p_hat));
        let ratio_low = p_n.ci_low / (nf * p_1.ci_high);
        let ratio_high = if p_1.ci_low > 0.0 { p_n.ci_high / (nf * p_1.ci_low) } else { f64::INFINITY };
        let sd_n = sd_x(cfg, moments, nf)?;
        points.push(OneBigJumpPoint {
            n,
            x,
            p_n,
            p_1,
            ratio,
            ratio_low,
            ratio_high,
            sd_n,
            in_regime: x > REGIME_SDS * sd_n,
        });
    }
    Ok(OneBigJumpReport { x, trials, points })
}

/// Law of a compound-Poisson sum of lattice-rounded jumps on `{0, h, 2h, ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    pub h: f64,
    pub probs: Vec<f64>,
}

impl LatticeLaw {
    /// `P(y < S <= s_max h)`, summed directly so that tiny tails keep
    /// their relative accuracy. Mass beyond the last cell is not included.
    pub fn sf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return self.probs.iter().sum();
        }
        let idx = (y / self.h).floor() as usize;
        self.probs.iter().skip(idx + 1).sum()
    }
}

/// Panjer recursion for `Poisson(rate)` many copies of `Z` rounded up
/// (`upper = true`) or down to the lattice `hZ`, up to `s_max` cells.
pub fn panjer(tail: &TailParams, rate: f64, h: f64, s_max: usize, upper: bool) -> Result<LatticeLaw> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(invalid("h", "lattice step must lie in (0, 1]"));
    }
    let sf = |x: f64| -> f64 {
        if x < 1.0 {
            1.0
        } else {
            tail.ln_tail_normalized(x).map(f64::exp).unwrap_or(0.0)
        }
    };
    // f[j] = P(rounded Z = j h); Z is continuous so open and closed ends agree.
    let f: Vec<f64> = (0..=s_max)
        .map(|j| {
            let jf = j as f64;
            if upper {
                if j == 0 {
                    0.0
                } else {
                    sf((jf - 1.0) * h) - sf(jf * h)
                }
            } else {
                sf(jf * h) - sf((jf + 1.0) * h)
            }
        })
        .collect();
    let exponent = rate * (1.0 - f[0]);
    if exponent > 700.0 {
        return Err(Error::Unsupported(format!("Panjer start e^-{exponent} underflows; use a smaller rate")));
    }
    let mut g = vec![0.0; s_max + 1];
    g[0] = (-exponent).exp();
    for s in 1..=s_max {
        let mut acc = 0.0;
        for j in 1..=s {
            acc += j as f64 * f[j] * g[s - j];
        }
        g[s] = rate / s as f64 * acc;
    }
    Ok(LatticeLaw { h, probs: g })
}

pub const LATTICE_SPAN: f64 = 4.0;

/// Lower and upper bounds on `P(X(t) - t E X(1) > x)` for each `x`, for a
/// pure-jump configuration, from the down- and up-rounded lattice laws.
pub fn centered_tail_bounds(
    cfg: &LevyConfig,
    moments: &MomentCache,
    t: f64,
    xs: &[f64],
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    if cfg.has_diffusion() {
        return Err(Error::Unsupported("lattice tails need a pure-jump configuration".into()));
    }
    let shift = t * moments.nu1 * moments.mu1;
    let y_max = xs.iter().copied().fold(0.0f64, f64::max) + shift;
    // Mass beyond 4 y is dropped; for these tails P(S > 4y) / P(S > y) is
    // far below the lattice error.
    let s_max = (LATTICE_SPAN * y_max / h).ceil() as usize + 2;
    let rate = t * moments.nu1;
    let lo = panjer(&cfg.tail, rate, h, s_max, false)?;
    let hi = panjer(&cfg.tail, rate, h, s_max, true)?;
    Ok(xs.iter().map(|&x| (lo.sf(x + shift), hi.sf(x + shift))).collect())
}

/// Smallest lattice point `x` with upper-bound tail `P(X(1) - E X(1) > x) <= p`.
pub fn centered_tail_quantile(cfg: &LevyConfig, moments: &MomentCache, p: f64, h: f64, x_max: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", "must lie in (0, 1)"));
    }
    let shift = moments.nu1 * moments.mu1;
    let s_max = ((x_max + shift) / h).ceil() as usize + 2;
    let law = panjer(&cfg.tail, moments.nu1, h, s_max, true)?;
    let mut below = 0.0;
    for (s, g) in law.probs.iter().enumerate() {
        below += g;
        if 1.0 - below <= p {
            return Ok(s as f64 * h - shift);
        }
    }
    Err(Error::Numerical(format!("tail {p} not reached below x_max = {x_max}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRatioPoint {
    pub n: u64,
    pub x: f64,
    pub ratio_low: f64,
    pub ratio_high: f64,
}

/// Bracketed ratio over an x-grid at fixed `n`; for a subexponential tail
/// it tends to 1 as `x` grows.
pub fn one_big_jump_exact(
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    x_grid: &[f64],
    h: f64,
) -> Result<Vec<ExactRatioPoint>> {
    let nf = n as f64;
    let at_n = centered_tail_bounds(cfg, moments, nf, x_grid, h)?;
    let at_1 = centered_tail_bounds(cfg, moments, 1.0, x_grid, h)?;
    x_grid
        .iter()
        .zip(at_n.iter().zip(&at_1))
        .map(|(&x, (&(lo_n, hi_n), &(lo_1, hi_1)))| {
            if !(lo_1 > 0.0) {
                return Err(Error::Numerical(format!("lower lattice tail of X(1) vanishes at x = {x}")));
            }
            Ok(ExactRatioPoint { n, x, ratio_low: lo_n / (nf * hi_1), ratio_high: hi_n / (nf * lo_1) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump_sim::moments;
    use crate::rng::stream;

    #[test]
    fn panjer_brackets_mc() {
        let cfg = LevyConfig::default();
        let m = moments(&cfg).unwrap();
        let (lo, hi) = centered_tail_bounds(&cfg, &m, 1.0, &[3.0], 0.01).unwrap()[0];
        assert!(lo < hi && hi - lo < 0.01);
        let trials = 200_000;
        let mut rng = stream(9, 0);
        let hits = (0..trials).filter(|_| sample_centered_x(&cfg, &m, 1.0, &mut rng) > 3.0).count();
        let p = hits as f64 / trials as f64;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(p > lo - 4.0 * sd && p < hi + 4.0 * sd, "{lo} {p} {hi}");
    }

    #[test]
    fn panjer_mass_and_mean() {
        let t = TailParams::reference();
        let law = panjer(&t, 2.0, 0.05, 4000, true).unwrap();
        let total: f64 = law.probs.iter().sum();
        assert!(total > 0.999 && total <= 1.0 + 1e-12);
        assert!((law.probs[0] - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn centered_mean_is_zero() {
        let cfg = LevyConfig::default();
        let m = moments(&cfg).unwrap();
        let mut rng = stream(10, 0);
        let reps = 100_000;
        let xs: Vec<f64> = (0..reps).map(|_| sample_centered_x(&cfg, &m, 5.0, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let sd = sd_x(&cfg, &m, 5.0).unwrap();
        assert!(mean.abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean}");
    }
}
