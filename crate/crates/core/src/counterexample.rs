//! The sets behind the failure of the standard LDP under M1'.
//!
//! `A_n` holds two-jump paths with a jump of size at least `log n` in
//! `(1/4, 1/2]` followed by one of size at least `n^{-1/3}` in `(3/4, 1]`;
//! `B_n` is its preimage under the two-largest-jumps map `pi`; `C_n` is the
//! uniform ball of radius `n^{-1/3} / 3` around `t -> -mu_1 nu_1 t`; and
//! `F_n = B_n + C_n`. The closure of `F = U_{n >= N} F_n` misses the one-jump
//! paths, yet `P(X_n in F)` decays at rate below 2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cadlag::{m1prime_lower_flatjump, m1prime_lower_pointgap, DriftStepPath, GridPath, StepPath};
use crate::error::{invalid, Result};
use crate::jump_sim::{sample_diffusion, tail_moments, LevyConfig, MomentCache};
use crate::rare_event::{count_hits, plain_result, EstimateResult};
use crate::rng::{derive_seed, open01, stream};
use crate::special::{ln_1m_exp, log_sub_exp};
use crate::tail::TailParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub tail: TailParams,
    pub moments: MomentCache,
    /// Smallest `N` with `log N - nu_1 mu_1 / 2 - N^{-1/3} / 3 > 1`.
    pub n_min: u64,
}

impl CounterexampleParams {
    pub fn new(tail: TailParams) -> Result<Self> {
        let moments = tail_moments(&tail)?;
        Ok(Self { tail, moments, n_min: n_threshold(moments.nu1 * moments.mu1) })
    }

    fn drift(&self) -> f64 {
        -self.moments.nu1 * self.moments.mu1
    }
}

/// Upward scan for the smallest `N >= 1` with
/// `log N - m / 2 - N^{-1/3} / 3 > 1`, where `m = nu_1 mu_1`. The left side
/// increases in `N`, so the scan stops.
pub fn n_threshold(nu1_mu1: f64) -> u64 {
    let ok = |n: u64| {
        let nf = n as f64;
        nf.ln() - 0.5 * nu1_mu1 - nf.powf(-1.0 / 3.0) / 3.0 > 1.0
    };
    let mut n = 1;
    while !ok(n) {
        n += 1;
    }
    n
}

/// Keeps the two largest jumps (earliest on ties) of a nondecreasing step
/// path; a positive initial value is a jump at time 0.
pub fn pi_two_largest(p: &StepPath) -> Result<StepPath> {
    if p.initial() < 0.0 || p.jumps().iter().any(|j| j.size < 0.0) {
        return Err(invalid("p", "pi is defined on nondecreasing paths starting at a nonnegative value"));
    }
    let mut all: Vec<(f64, f64)> = Vec::with_capacity(p.n_jumps() + 1);
    if p.initial() > 0.0 {
        all.push((0.0, p.initial()));
    }
    all.extend(p.jumps().iter().map(|j| (j.time, j.size)));
    if all.len() <= 2 {
        return Ok(p.clone());
    }
    // Jumps are already in time order, so a stable sort keeps earliest first.
    all.sort_by(|a, b| b.1.total_cmp(&a.1));
    all.truncate(2);
    let initial: f64 = all.iter().filter(|(t, _)| *t == 0.0).map(|(_, s)| s).sum();
    StepPath::new(initial, all.into_iter().filter(|(t, _)| *t > 0.0))
}

pub fn in_a_n(p: &StepPath, n: f64) -> bool {
    if p.initial() != 0.0 || p.n_jumps() != 2 {
        return false;
    }
    let (a, b) = (p.jumps()[0], p.jumps()[1]);
    a.size >= n.ln()
        && b.size >= n.powf(-1.0 / 3.0)
        && a.size >= b.size
        && a.time > 0.25
        && a.time <= 0.5
        && b.time > 0.75
        && b.time <= 1.0
}

/// `pi(p) in A_n`; paths outside the domain of `pi` are not in `B_n`.
pub fn in_b_n(p: &StepPath, n: f64) -> bool {
    pi_two_largest(p).is_ok_and(|q| in_a_n(&q, n))
}

pub fn c_n_radius(n: f64) -> f64 {
    n.powf(-1.0 / 3.0) / 3.0
}

/// Exact test for a step path plus drift.
pub fn in_c_n(p: &DriftStepPath, n: f64, moments: &MomentCache) -> bool {
    p.sup_distance_to_line(-moments.nu1 * moments.mu1) <= c_n_radius(n)
}

/// Test on the grid points of a sampled path.
pub fn in_c_n_grid(p: &GridPath, n: f64, moments: &MomentCache) -> bool {
    let slope = -moments.nu1 * moments.mu1;
    let r = c_n_radius(n);
    p.values().iter().enumerate().all(|(k, v)| (v - slope * p.time(k)).abs() <= r)
}

/// Membership of `j + h` in `F_n`, judged on the decomposition itself.
pub fn in_f(n_used: u64, j: &StepPath, h: &GridPath, params: &CounterexampleParams) -> Result<bool> {
    if n_used < params.n_min {
        return Err(invalid("n_used", format!("F only contains F_n for n >= N = {}", params.n_min)));
    }
    let n = n_used as f64;
    Ok(in_b_n(j, n) && in_c_n_grid(h, n, &params.moments))
}

/// `-mu_1 nu_1 t` as a staircase inside `C_n`: equal down-steps at `k/K`.
pub fn drift_staircase(n: f64, params: &CounterexampleParams) -> Result<StepPath> {
    let m = -params.drift();
    let k = (m / c_n_radius(n)).ceil().max(1.0) as usize + 1;
    StepPath::new(0.0, (1..=k).map(|i| (i as f64 / k as f64, -m / k as f64)))
}

/// A member of `F_n`: `z1 1[v1,1] + z2 1[v2,1]` plus smaller extra jumps,
/// plus the drift staircase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FMember {
    pub big: StepPath,
    pub drift: StepPath,
}

impl FMember {
    pub fn path(&self) -> StepPath {
        self.big.add(&self.drift)
    }
}

pub fn canonical_f_member(n: f64, params: &CounterexampleParams) -> Result<FMember> {
    let big = StepPath::new(0.0, [(0.5, n.ln()), (1.0, n.powf(-1.0 / 3.0))])?;
    Ok(FMember { big, drift: drift_staircase(n, params)? })
}

pub fn random_f_member<R: rand::Rng + ?Sized>(n: f64, params: &CounterexampleParams, rng: &mut R) -> Result<FMember> {
    let ln = n.ln();
    let small = n.powf(-1.0 / 3.0);
    let z1 = ln * (1.0 + open01(rng));
    let z2 = small + (z1 - small) * open01(rng) * 0.5;
    let v1 = 0.25 + 0.25 * open01(rng);
    let v2 = 0.75 + 0.25 * open01(rng);
    let extra = (3.0 * open01(rng)) as usize;
    let mut jumps = vec![(v1, z1), (v2, z2)];
    for _ in 0..extra {
        jumps.push((open01(rng), z2 * open01(rng)));
    }
    let big = StepPath::new(0.0, jumps)?;
    debug_assert!(in_b_n(&big, n));
    Ok(FMember { big, drift: drift_staircase(n, params)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma31Settings {
    /// Number of `v` points in `[0, 1]`.
    pub v_points: usize,
    /// Number of log-spaced positive `z` values (0 is always included).
    pub z_points: usize,
    /// Sampling density for the point-gap bound.
    pub density: f64,
    /// Random members of `F_n` per `n`, besides the canonical one.
    pub samples: usize,
    pub seed: u64,
}

impl Default for Lemma31Settings {
    fn default() -> Self {
        Self { v_points: 200, z_points: 24, density: 1e-2, samples: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Row {
    pub n: u64,
    pub v_points: usize,
    /// Minimum certified M1' lower bound over `eta` with jump time `v > 1/2`.
    pub min_late: f64,
    /// Same over `v <= 1/2` (including `v = 0`, i.e. a constant).
    pub min_early: f64,
    pub worst_late: (f64, f64),
    pub worst_early: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Report {
    pub settings: Lemma31Settings,
    pub rows: Vec<Lemma31Row>,
    /// Rows at twice the `v` resolution.
    pub refined: Vec<Lemma31Row>,
    pub all_positive: bool,
    /// Refined minima stay above half the coarse ones.
    pub grid_stable: bool,
}

fn lemma31_row(n: u64, params: &CounterexampleParams, st: &Lemma31Settings, v_points: usize) -> Result<Lemma31Row> {
    let nf = n as f64;
    let mut members = vec![canonical_f_member(nf, params)?];
    let mut rng = stream(derive_seed(st.seed, "lemma31"), n);
    for _ in 0..st.samples {
        members.push(random_f_member(nf, params, &mut rng)?);
    }
    let z_top = 2.0 * members.iter().map(|m| m.path().sup_abs()).fold(0.0, f64::max);
    let z_lo = 1e-3f64;
    let mut zs = vec![0.0];
    zs.extend((0..st.z_points).map(|i| z_lo * (z_top / z_lo).powf(i as f64 / (st.z_points - 1).max(1) as f64)));
    let vs: Vec<f64> = (0..=v_points).map(|k| k as f64 / v_points as f64).collect();
    let pairs: Vec<(f64, f64)> = vs.iter().flat_map(|&v| zs.iter().map(move |&z| (v, z))).collect();
    let paths: Vec<StepPath> = members.iter().map(FMember::path).collect();
    let bounds: Vec<Result<(f64, f64, f64)>> = pairs
        .par_iter()
        .map(|&(v, z)| {
            let eta = if v == 0.0 { StepPath::constant(z) } else { StepPath::indicator(v, z)? };
            let mut worst = f64::INFINITY;
            for xi in &paths {
                let lb = m1prime_lower_pointgap(xi, &eta, st.density)?.max(m1prime_lower_flatjump(xi, &eta));
                worst = worst.min(lb);
            }
            Ok((v, z, worst))
        })
        .collect();
    let mut late = (f64::INFINITY, (0.0, 0.0));
    let mut early = (f64::INFINITY, (0.0, 0.0));
    for b in bounds {
        let (v, z, lb) = b?;
        let slot = if v > 0.5 { &mut late } else { &mut early };
        if lb < slot.0 {
            *slot = (lb, (v, z));
        }
    }
    Ok(Lemma31Row { n, v_points, min_late: late.0, min_early: early.0, worst_late: late.1, worst_early: early.1 })
}

/// Certified lower bounds on `d_M1'(xi, eta)` for members `xi` of `F_n` and
/// a grid of one-jump paths `eta = z 1[v,1]`, reported per regime.
pub fn lemma31_evidence(params: &CounterexampleParams, n_list: &[u64], st: &Lemma31Settings) -> Result<Lemma31Report> {
    if n_list.iter().any(|&n| n < params.n_min) {
        return Err(invalid("n_list", format!("every n must be at least N = {}", params.n_min)));
    }
    if st.v_points < 2 || st.z_points < 2 || !(st.density > 0.0) {
        return Err(invalid("settings", "need at least two v and z points and a positive density"));
    }
    let rows = n_list.iter().map(|&n| lemma31_row(n, params, st, st.v_points)).collect::<Result<Vec<_>>>()?;
    let refined = n_list.iter().map(|&n| lemma31_row(n, params, st, 2 * st.v_points)).collect::<Result<Vec<_>>>()?;
    let all_positive = rows.iter().chain(&refined).all(|r| r.min_late > 0.0 && r.min_early > 0.0);
    let grid_stable = rows
        .iter()
        .zip(&refined)
        .all(|(a, b)| b.min_late >= 0.5 * a.min_late && b.min_early >= 0.5 * a.min_early);
    Ok(Lemma31Report { settings: *st, rows, refined, all_positive, grid_stable })
}

/// The three limit terms of the lower bound for `log P(J_n in B_n) / r(log n)`
/// and the uniform-time constant, all at real `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JFactor {
    pub n: f64,
    pub speed: f64,
    /// `-Q_n(n log n) / r(log n)`, tends to 0.
    pub term_iii: f64,
    /// `log(Q_n(n log n) - Q_n(2 n log n)) / r(log n)`, tends to -1.
    pub term_iv: f64,
    /// `log(1 - exp(-(Q_n(n^{2/3}) - Q_n(n log n)))) / r(log n)`, tends to `-(2/3)^gamma`.
    pub term_v: f64,
    /// `log(1/16) / r(log n)` from the two uniform jump times.
    pub uniform: f64,
    /// Exact `log` of the product of the two exponential-box probabilities
    /// and `1/16`, over `r(log n)`. At least the sum of the terms.
    pub exact: f64,
}

impl JFactor {
    pub fn sum_of_terms(&self) -> f64 {
        self.term_iii + self.term_iv + self.term_v + self.uniform
    }
}

pub fn j_factor(tail: &TailParams, n: f64) -> Result<JFactor> {
    if !(n >= 3.0) {
        return Err(invalid("n", "need n >= 3 so that log n >= 1"));
    }
    let speed = tail.speed(n)?;
    let ln_n = n.ln();
    let a_hi = tail.ln_q_n(n, n * ln_n)?; // log Q_n(n log n)
    let a_lo = tail.ln_q_n(n, 2.0 * n * ln_n)?; // log Q_n(2 n log n)
    let b = tail.ln_q_n(n, n.powf(2.0 / 3.0))?; // log Q_n(n^{2/3})
    let q_hi = a_hi.exp();
    let gap_iv = log_sub_exp(a_hi, a_lo);
    let gap_v = log_sub_exp(b, a_hi); // log(Q_n(n^{2/3}) - Q_n(n log n))
    let term_v = ln_1m_exp(gap_v.exp());
    let uniform = (1.0f64 / 16.0).ln();
    // P(Y_1 in (Q(2 n log n), Q(n log n)]) = e^{-Q(2n log n)} (1 - e^{-(Q(n log n) - Q(2n log n))}).
    let ln_y1 = -a_lo.exp() + ln_1m_exp(gap_iv.exp());
    let ln_y2 = term_v;
    Ok(JFactor {
        n,
        speed,
        term_iii: -q_hi / speed,
        term_iv: gap_iv / speed,
        term_v: term_v / speed,
        uniform: uniform / speed,
        exact: (ln_y1 + ln_y2 + uniform) / speed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma32Point {
    pub j: JFactor,
    /// Monte Carlo `P(H_n in C_n)` when the configuration has a diffusive
    /// part; `None` when `H_n` is the deterministic drift (probability 1).
    pub h_in_c: Option<EstimateResult>,
    /// Doob bound `1 - 9 sigma^2 / n^{1/3}` on `P(H_n in C_n)`.
    pub h_doob_lower: f64,
    /// `exact + log P(H_n in C_n) / r(log n)`.
    pub combined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma32Report {
    /// `-1 - (2/3)^gamma`.
    pub target: f64,
    pub points: Vec<Lemma32Point>,
    pub terminal_combined: Option<f64>,
    pub above_minus_two: bool,
}

/// Exact J-factor over real `n`, plus Monte Carlo for `H_n` at `round(n)`
/// under `cfg` (its tail must match `params`).
pub fn lemma32_experiment(
    params: &CounterexampleParams,
    cfg: &LevyConfig,
    n_grid: &[f64],
    trials: u64,
    resolution: usize,
    seed: u64,
) -> Result<Lemma32Report> {
    if cfg.tail != params.tail {
        return Err(invalid("cfg", "configuration tail differs from the counterexample tail"));
    }
    if n_grid.iter().any(|&n| n < params.n_min as f64) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_grid", format!("must increase and stay at or above N = {}", params.n_min)));
    }
    let var = cfg.a * cfg.a
        + match &cfg.small_jump {
            Some(s) => s.second_moment()?,
            None => 0.0,
        };
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let j = j_factor(&params.tail, n)?;
        let n_int = n.round() as u64;
        let h_in_c = if cfg.has_diffusion() {
            if trials == 0 {
                return Err(invalid("trials", "a diffusive configuration needs Monte Carlo trials"));
            }
            let hits = count_hits(trials, derive_seed(seed, "h_in_c"), |rng| {
                let g = sample_diffusion(cfg, n_int, resolution, rng).expect("diffusive");
                // H_n = diffusive part - t nu_1 mu_1, so H_n in C_n iff the
                // diffusive part stays within the radius of 0.
                g.values().iter().all(|v| v.abs() <= c_n_radius(n))
            });
            Some(plain_result(n_int, trials, hits, j.speed))
        } else {
            None
        };
        let ln_h = match &h_in_c {
            None => Some(0.0),
            Some(r) => r.ln_p_hat,
        };
        points.push(Lemma32Point {
            j,
            h_in_c,
            h_doob_lower: 1.0 - 9.0 * var / n.cbrt(),
            combined: ln_h.map(|l| j.exact + l / j.speed),
        });
    }
    let target = -1.0 - (2.0f64 / 3.0).powf(params.tail.gamma);
    let terminal_combined = points.last().and_then(|p| p.combined);
    let above_minus_two = terminal_combined.is_some_and(|c| c > -2.0);
    Ok(Lemma32Report { target, points, terminal_combined, above_minus_two })
}

/// Drift of the counterexample in the form expected by [`in_c_n`].
pub fn drift_path(params: &CounterexampleParams) -> DriftStepPath {
    DriftStepPath::new(StepPath::zero(), params.drift())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CounterexampleParams {
        CounterexampleParams::new(TailParams::reference()).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(params().n_min, 13);
        assert_eq!(n_threshold(0.0), 4);
        assert_eq!(n_threshold(1e-12), 4);
    }

    #[test]
    fn pi_examples() {
        let p = StepPath::new(0.0, [(0.2, 3.0), (0.5, 2.0), (0.8, 1.0)]).unwrap();
        assert_eq!(pi_two_largest(&p).unwrap(), StepPath::new(0.0, [(0.2, 3.0), (0.5, 2.0)]).unwrap());
        let p = StepPath::new(0.0, [(0.3, 1.0), (0.6, 1.0), (0.9, 1.0)]).unwrap();
        assert_eq!(pi_two_largest(&p).unwrap(), StepPath::new(0.0, [(0.3, 1.0), (0.6, 1.0)]).unwrap());
        let p = StepPath::new(0.0, [(0.3, 1.0), (0.6, 2.0)]).unwrap();
        assert_eq!(pi_two_largest(&p).unwrap(), p);
        assert!(pi_two_largest(&StepPath::new(0.0, [(0.3, -1.0)]).unwrap()).is_err());
        let p = StepPath::new(5.0, [(0.3, 1.0), (0.6, 2.0)]).unwrap();
        assert_eq!(pi_two_largest(&p).unwrap(), StepPath::new(5.0, [(0.6, 2.0)]).unwrap());
    }

    #[test]
    fn set_membership_examples() {
        let p = StepPath::new(0.0, [(0.3, 5.0), (0.8, 0.5)]).unwrap();
        assert!(in_a_n(&p, 100.0));
        let q = StepPath::new(0.0, [(0.1, 0.01), (0.3, 5.0), (0.8, 0.5)]).unwrap();
        assert!(!in_a_n(&q, 100.0) && in_b_n(&q, 100.0));
        let pr = params();
        assert!(in_c_n(&drift_path(&pr), 100.0, &pr.moments));
        assert!(in_c_n(&DriftStepPath::new(drift_staircase(100.0, &pr).unwrap(), 0.0), 100.0, &pr.moments));
        let h = drift_path(&pr).to_grid(64);
        assert!(in_f(100, &p, &h, &pr).unwrap());
        assert!(in_f(10, &p, &h, &pr).is_err());
    }

    #[test]
    fn j_factor_terms() {
        let j = j_factor(&TailParams::reference(), 12f64.exp()).unwrap();
        assert!(j.term_iii.abs() < 1e-6);
        assert!((j.term_v + 52.0 / 144.0).abs() < 1e-3, "{}", j.term_v);
        assert!(j.exact >= j.sum_of_terms() - 1e-12);
    }

    #[test]
    fn lemma31_regime_bounds() {
        let pr = params();
        let n = 100.0;
        let xi = canonical_f_member(n, &pr).unwrap().path();
        assert!(xi.value(0.5) > 1.0);
        let zero = StepPath::zero();
        assert!(m1prime_lower_pointgap(&xi, &zero, 1e-2).unwrap().max(m1prime_lower_flatjump(&xi, &zero)) > 0.0);
        for z in [0.1, 1.0, 5.0, 50.0] {
            let eta = StepPath::indicator(0.9, z).unwrap();
            assert!(m1prime_lower_pointgap(&xi, &eta, 1e-2).unwrap() >= 0.4 - 2e-2, "z = {z}");
        }
        let eta = StepPath::indicator(0.5, n.ln()).unwrap();
        assert!(m1prime_lower_flatjump(&xi, &eta) >= n.powf(-1.0 / 3.0) / 6.0 - 1e-12);
    }

    #[test]
    fn lemma32_without_diffusion_is_exact() {
        let pr = params();
        let cfg = LevyConfig::new(pr.tail, 0.0, 0.0, None).unwrap();
        let r = lemma32_experiment(&pr, &cfg, &[20.0, 12f64.exp()], 0, 64, 0).unwrap();
        assert!((r.target + 1.0 + 4.0 / 9.0).abs() < 1e-12);
        assert!(r.points.iter().all(|p| p.h_in_c.is_none() && p.combined == Some(p.j.exact)));
        assert!(r.above_minus_two);
        assert!(lemma32_experiment(&pr, &cfg, &[10.0], 0, 64, 0).is_err());
    }
}
