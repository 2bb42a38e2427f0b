//! Scaled, centred random walks with i.i.d. increments from the normalised
//! tail law, in both the lattice-time form `W_bar` and the uniform-time form
//! `S_bar` used for the extended LDP.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::coupling::JumpVector;
use crate::cadlag::StepPath;
use crate::error::{invalid, Result};
use crate::rng::{exp1, open01};
use crate::tail::TailParams;

fn check_n(n: u64) -> Result<()> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    Ok(())
}

/// `W_bar_n(t) = (1/n) sum_{i <= nt} (Z_i - mu_1)`.
pub fn sample_w_bar<R: rand::Rng + ?Sized>(n: u64, tail: &TailParams, mu1: f64, rng: &mut R) -> Result<StepPath> {
    check_n(n)?;
    let nf = n as f64;
    StepPath::new(0.0, (1..=n).map(|i| (i as f64 / nf, (tail.sample(rng) - mu1) / nf)))
}

/// `S_bar_n`: the first `n - 1` centred increments at i.i.d. uniform times,
/// the last one at time 1.
pub fn sample_s_bar<R: rand::Rng + ?Sized>(n: u64, tail: &TailParams, mu1: f64, rng: &mut R) -> Result<StepPath> {
    check_n(n)?;
    let nf = n as f64;
    let mut jumps = Vec::with_capacity(n as usize);
    for _ in 1..n {
        let z = tail.sample(rng);
        jumps.push((open01(rng), (z - mu1) / nf));
    }
    jumps.push((1.0, (tail.sample(rng) - mu1) / nf));
    StepPath::new(0.0, jumps)
}

/// `W_bar_n` and `S_bar_n` built from the same increments: the increment
/// placed at the i-th smallest uniform in `S_bar` sits at `i/n` in `W_bar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledWalks {
    pub w_bar: StepPath,
    pub s_bar: StepPath,
    /// `max_i |i/n - U_(i)|`, a J1 bound for the pair.
    pub time_gap: f64,
}

pub fn sample_coupled_walks<R: rand::Rng + ?Sized>(
    n: u64,
    tail: &TailParams,
    mu1: f64,
    rng: &mut R,
) -> Result<CoupledWalks> {
    check_n(n)?;
    let nf = n as f64;
    let mut u: Vec<f64> = (1..n).map(|_| open01(rng)).collect();
    u.sort_by(f64::total_cmp);
    let z: Vec<f64> = (0..n).map(|_| (tail.sample(rng) - mu1) / nf).collect();
    let time_gap = u.iter().enumerate().map(|(i, &t)| ((i + 1) as f64 / nf - t).abs()).fold(0.0, f64::max);
    let w_bar = StepPath::new(0.0, z.iter().enumerate().map(|(i, &s)| ((i + 1) as f64 / nf, s)))?;
    let s_bar = StepPath::new(0.0, u.iter().copied().chain(std::iter::once(1.0)).zip(z.iter().copied()))?;
    Ok(CoupledWalks { w_bar, s_bar, time_gap })
}

/// Ascending order statistics `V_(1) < ... < V_(k)` of `n - 1` uniforms,
/// via `Gamma_i / Gamma_n`.
pub fn uniform_order_statistics<R: rand::Rng + ?Sized>(n: u64, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_n(n)?;
    if k == 0 || k as u64 > n - 1 {
        return Err(invalid("k", format!("need 1 <= k <= n - 1 = {}", n - 1)));
    }
    let mut g = 0.0;
    let mut gammas = Vec::with_capacity(k);
    for _ in 0..k {
        g += exp1(rng);
        gammas.push(g);
    }
    let rest = (n as usize - k) as f64;
    let total = g + Gamma::new(rest, 1.0).expect("positive shape").sample(rng);
    Ok(gammas.into_iter().map(|x| x / total).collect())
}

/// The `k` largest scaled increments among the `n - 1` uniform-time jumps
/// of `S_bar`, uncentred: `Q~^<-(V_(i)) / n`. Times are i.i.d. uniform.
pub fn sample_k_jump_sizes_rw<R: rand::Rng + ?Sized>(tail: &TailParams, n: u64, k: usize, rng: &mut R) -> Result<JumpVector> {
    let v = uniform_order_statistics(n, k, rng)?;
    let nf = n as f64;
    let sizes = v.iter().map(|&x| tail.normalized_inverse(x) / nf).collect();
    let times = (0..k).map(|_| open01(rng)).collect();
    JumpVector::new(sizes, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cadlag::j1_distance;
    use crate::rng::stream;

    #[test]
    fn w_bar_lattice() {
        let tail = TailParams::reference();
        let w = sample_w_bar(7, &tail, 2.7, &mut stream(1, 0)).unwrap();
        let times: Vec<f64> = w.jumps().iter().map(|j| j.time).collect();
        let want: Vec<f64> = (1..=7).map(|i| i as f64 / 7.0).collect();
        assert_eq!(times, want);
    }

    #[test]
    fn s_bar_terminal_jump() {
        let tail = TailParams::reference();
        let s = sample_s_bar(5, &tail, 2.7, &mut stream(2, 0)).unwrap();
        assert_eq!(s.jumps().last().unwrap().time, 1.0);
        assert_eq!(s.n_jumps(), 5);
    }

    #[test]
    fn coupled_pair_within_bound() {
        let tail = TailParams::reference();
        let mut rng = stream(3, 0);
        for _ in 0..20 {
            let c = sample_coupled_walks(12, &tail, 2.7, &mut rng).unwrap();
            let d = j1_distance(&c.w_bar, &c.s_bar, 1e-9).unwrap();
            assert!(d <= c.time_gap + 1e-9, "{d} > {}", c.time_gap);
            assert!((c.w_bar.terminal() - c.s_bar.terminal()).abs() < 1e-12);
        }
    }

    #[test]
    fn order_statistics_moments() {
        let mut rng = stream(4, 0);
        let (n, k, reps) = (20u64, 3usize, 40_000);
        let mut sums = vec![0.0; k];
        for _ in 0..reps {
            let v = uniform_order_statistics(n, k, &mut rng).unwrap();
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            for i in 0..k {
                sums[i] += v[i];
            }
        }
        for (i, s) in sums.iter().enumerate() {
            // Beta(i + 1, n - i - 1) has mean (i + 1) / n.
            let mean = (i + 1) as f64 / n as f64;
            let var = mean * (1.0 - mean) / (n as f64 + 1.0);
            let sd = (var / reps as f64).sqrt();
            assert!((s / reps as f64 - mean).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn rw_sizes_nonincreasing() {
        let tail = TailParams::reference();
        let mut rng = stream(5, 0);
        for _ in 0..100 {
            let j = sample_k_jump_sizes_rw(&tail, 10, 9, &mut rng).unwrap();
            assert!(j.sizes.windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(sample_k_jump_sizes_rw(&tail, 10, 10, &mut rng).is_err());
    }
}
