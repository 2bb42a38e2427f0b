//! The Poisson-point-process coupling: arrival times `Gamma_i` of a unit
//! Poisson process and independent uniform jump times `U_i`. The i-th
//! largest jump of the scaled process has size `Q_n^<-(Gamma_i) / n`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{exp1, open01};
use crate::tail::TailParams;

/// `k` arrival times and `k` uniforms.
pub fn sample_gamma_uniform<R: rand::Rng + ?Sized>(k: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut g = 0.0;
    let mut gammas = Vec::with_capacity(k);
    let mut uniforms = Vec::with_capacity(k);
    for _ in 0..k {
        g += exp1(rng);
        gammas.push(g);
        uniforms.push(open01(rng));
    }
    (gammas, uniforms)
}

/// One coupled draw at scale `n`: all arrivals up to the first one beyond
/// `Q_n(1) = n nu_1`, and at least `k_min` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonDraw {
    pub n: f64,
    pub gammas: Vec<f64>,
    pub uniforms: Vec<f64>,
    /// Raw sizes `Q_n^<-(Gamma_i)`, clamped to 1 past `n nu_1`.
    pub raw: Vec<f64>,
    /// Number of arrivals with raw size at least 1; Poisson(`n nu_1`).
    pub n_big: usize,
}

impl PoissonDraw {
    pub fn sample<R: rand::Rng + ?Sized>(tail: &TailParams, n: f64, k_min: usize, rng: &mut R) -> Self {
        Self::extend(tail, n, Vec::new(), k_min, rng)
    }

    /// Continues a draw whose first arrivals are already fixed (e.g. by a
    /// conditioning step). Uniforms for the prefix are drawn here.
    pub fn extend<R: rand::Rng + ?Sized>(
        tail: &TailParams,
        n: f64,
        prefix: Vec<f64>,
        k_min: usize,
        rng: &mut R,
    ) -> Self {
        let limit = n * tail.nu1();
        let mut gammas = prefix;
        let mut uniforms: Vec<f64> = (0..gammas.len()).map(|_| open01(rng)).collect();
        let mut g = gammas.last().copied().unwrap_or(0.0);
        while gammas.len() < k_min || g <= limit {
            g += exp1(rng);
            gammas.push(g);
            uniforms.push(open01(rng));
        }
        let n_big = gammas.partition_point(|&x| x <= limit);
        let raw = gammas.iter().map(|&x| tail.q_n_inverse(n, x)).collect();
        Self { n, gammas, uniforms, raw, n_big }
    }

    /// Scaled size of the i-th largest jump (0-based).
    pub fn size(&self, i: usize) -> f64 {
        self.raw.get(i).copied().unwrap_or(1.0) / self.n
    }
}

/// Sizes of the `k` largest scaled jumps (nonincreasing) and their times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpVector {
    pub k: usize,
    pub sizes: Vec<f64>,
    pub times: Vec<f64>,
}

impl JumpVector {
    pub fn new(sizes: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        if sizes.len() != times.len() || sizes.is_empty() {
            return Err(invalid("sizes", "need k >= 1 sizes with matching times"));
        }
        if sizes.windows(2).any(|w| w[0] < w[1]) || sizes.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("sizes", "must be nonnegative and nonincreasing"));
        }
        Ok(Self { k: sizes.len(), sizes, times })
    }
}

/// `(Q_n^<-(Gamma_i) / n)_{i <= k}` with the coupled uniform times.
pub fn sample_k_jump_sizes<R: rand::Rng + ?Sized>(tail: &TailParams, n: f64, k: usize, rng: &mut R) -> Result<JumpVector> {
    if k == 0 {
        return Err(invalid("k", "must be positive"));
    }
    let (g, u) = sample_gamma_uniform(k, rng);
    let sizes = g.iter().map(|&x| tail.q_n_inverse(n, x) / n).collect();
    JumpVector::new(sizes, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn gammas_increase_and_have_unit_mean_spacing() {
        let mut rng = stream(1, 0);
        let draws = 100_000;
        let mut sums = [0.0f64; 3];
        let mut below = 0;
        for _ in 0..draws {
            let (g, u) = sample_gamma_uniform(3, &mut rng);
            assert!(g.windows(2).all(|w| w[0] < w[1]));
            assert!(u.iter().all(|x| *x > 0.0 && *x < 1.0));
            for i in 0..3 {
                sums[i] += g[i];
            }
            below += usize::from(g[0] <= 1.0);
        }
        for (i, s) in sums.iter().enumerate() {
            let mean = s / draws as f64;
            let sd = ((i + 1) as f64 / draws as f64).sqrt();
            assert!((mean - (i + 1) as f64).abs() < 4.0 * sd, "E Gamma_{} = {mean}", i + 1);
        }
        let p = 1.0 - (-1f64).exp();
        let f = below as f64 / draws as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / draws as f64).sqrt());
    }

    #[test]
    fn draw_counts_big_jumps() {
        let tail = TailParams::reference();
        let mut rng = stream(2, 0);
        for _ in 0..100 {
            let d = PoissonDraw::sample(&tail, 50.0, 3, &mut rng);
            assert!(d.gammas.len() >= 3);
            assert!(d.raw[..d.n_big].iter().all(|r| *r >= 1.0));
            assert!(d.raw[d.n_big..].iter().all(|r| *r == 1.0));
            assert!(d.raw.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
