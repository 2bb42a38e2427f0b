//! The centred, scaled Lévy process `X_n(t) = (X(nt) - nt E X(1)) / n` and
//! its decomposition `J_hat + J_check + H_bar + R_bar` around the k largest
//! jumps.

use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{LevyConfig, MomentCache};
use super::coupling::{JumpVector, PoissonDraw};
use crate::cadlag::{DriftStepPath, GridPath, StepPath};
use crate::error::{invalid, Result};
use crate::rng::open01;

pub const DEFAULT_RESOLUTION: usize = 1 << 10;
pub const MIN_RESOLUTION: usize = 16;

/// One coupled sample of the scaled process.
#[derive(Debug, Clone, PartialEq)]
pub struct LevySample {
    pub n: u64,
    pub draw: PoissonDraw,
    pub moments: MomentCache,
    /// `a B(nt)/n` plus the compensated small jumps on the grid, when the
    /// configuration has them.
    pub diffusion: Option<GridPath>,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub k: usize,
    pub j_hat: StepPath,
    pub j_check: StepPath,
    pub h_bar: StepPath,
    pub r_bar: GridPath,
    pub total: GridPath,
}

impl LevySample {
    fn need(&self, k: usize) -> Result<()> {
        if k > self.draw.gammas.len() {
            return Err(invalid(
                "k",
                format!("draw holds {} arrivals, cannot split at k = {k}", self.draw.gammas.len()),
            ));
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// The k largest jumps, including those clamped to raw size 1.
    pub fn j_hat(&self, k: usize) -> Result<StepPath> {
        self.need(k)?;
        let d = &self.draw;
        StepPath::new(0.0, (0..k).map(|i| (d.uniforms[i], d.raw[i] / self.nf())))
    }

    /// Cancels the jumps of `j_hat` that are not real big jumps.
    pub fn j_check(&self, k: usize) -> Result<StepPath> {
        self.need(k)?;
        let d = &self.draw;
        StepPath::new(0.0, (d.n_big..k).map(|i| (d.uniforms[i], -d.raw[i] / self.nf())))
    }

    /// Big jumps outside the top k, each centred by `mu_1`.
    pub fn h_bar(&self, k: usize) -> Result<StepPath> {
        self.need(k)?;
        let d = &self.draw;
        let mu1 = self.moments.mu1;
        StepPath::new(
            0.0,
            (0..d.n_big).map(|i| {
                let z = if i < k { 0.0 } else { d.raw[i] };
                (d.uniforms[i], (z - mu1) / self.nf())
            }),
        )
    }

    /// `mu_1 N(nt) / n`, the counting part of `R_bar`.
    pub fn r_bar_counts(&self) -> StepPath {
        let d = &self.draw;
        let step = self.moments.mu1 / self.nf();
        StepPath::new(0.0, (0..d.n_big).map(|i| (d.uniforms[i], step))).expect("valid jumps")
    }

    fn drift(&self) -> f64 {
        -self.moments.nu1 * self.moments.mu1
    }

    /// `R_bar` on the grid: counts, drift and the diffusive part.
    pub fn r_bar(&self, m: usize) -> Result<GridPath> {
        let counts = DriftStepPath::new(self.r_bar_counts(), self.drift()).to_grid(m);
        match &self.diffusion {
            None => Ok(counts),
            Some(g) if g.resolution() == m => counts.add(g),
            Some(g) => Err(invalid("resolution", format!("diffusion sampled at {}, asked for {m}", g.resolution()))),
        }
    }

    /// All four components on a common grid, and their sum.
    pub fn components(&self, k: usize) -> Result<Components> {
        let m = self.resolution;
        let j_hat = self.j_hat(k)?;
        let j_check = self.j_check(k)?;
        let h_bar = self.h_bar(k)?;
        let r_bar = self.r_bar(m)?;
        let total = j_hat.to_grid(m).add(&j_check.to_grid(m))?.add(&h_bar.to_grid(m))?.add(&r_bar)?;
        Ok(Components { k, j_hat, j_check, h_bar, r_bar, total })
    }

    /// All big jumps, uncentred.
    pub fn big_jumps(&self) -> StepPath {
        let d = &self.draw;
        StepPath::new(0.0, (0..d.n_big).map(|i| (d.uniforms[i], d.raw[i] / self.nf()))).expect("valid jumps")
    }

    /// Everything except the big jumps: `-t nu_1 mu_1` plus the diffusive part.
    pub fn small_part(&self) -> GridPath {
        let line = DriftStepPath::new(StepPath::zero(), self.drift()).to_grid(self.resolution);
        match &self.diffusion {
            None => line,
            Some(g) => line.add(g).expect("same resolution"),
        }
    }

    /// Exact path when there is no diffusive part.
    pub fn exact_total(&self) -> Option<DriftStepPath> {
        if self.diffusion.is_some() {
            return None;
        }
        Some(DriftStepPath::new(self.big_jumps(), self.drift()))
    }

    pub fn total_grid(&self) -> GridPath {
        self.big_jumps().to_grid(self.resolution).add(&self.small_part()).expect("same resolution")
    }

    /// `X_n(1)`.
    pub fn terminal(&self) -> f64 {
        let d = &self.draw;
        let jumps: f64 = d.raw[..d.n_big].iter().sum::<f64>() / self.nf();
        let diff = self.diffusion.as_ref().map_or(0.0, |g| *g.values().last().expect("nonempty"));
        jumps + self.drift() + diff
    }

    /// `(sup_t X_n(t), largest jump)`; exact without a diffusive part,
    /// otherwise on the grid.
    pub fn phi(&self) -> (f64, f64) {
        let largest = if self.draw.n_big > 0 { self.draw.raw[0] / self.nf() } else { 0.0 };
        match self.exact_total() {
            Some(p) => p.phi(),
            None => {
                let g = self.total_grid();
                let sup = g.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (sup, largest.max(1.0 / self.nf()))
            }
        }
    }

    /// Largest scaled jump.
    pub fn largest(&self) -> f64 {
        if self.draw.n_big > 0 {
            self.draw.raw[0] / self.nf()
        } else {
            0.0
        }
    }

    pub fn jump_vector(&self, k: usize) -> Result<JumpVector> {
        self.need(k)?;
        let d = &self.draw;
        JumpVector::new(
            (0..k).map(|i| d.raw[i] / self.nf()).collect(),
            d.uniforms[..k].to_vec(),
        )
    }
}

/// Brownian part and compensated small jumps, scaled, on `m + 1` points.
pub fn sample_diffusion<R: rand::Rng + ?Sized>(cfg: &LevyConfig, n: u64, m: usize, rng: &mut R) -> Option<GridPath> {
    if !cfg.has_diffusion() {
        return None;
    }
    let nf = n as f64;
    let dt = 1.0 / m as f64;
    let mut incr = vec![0.0; m + 1];
    if cfg.a > 0.0 {
        let sd = cfg.a * (dt / nf).sqrt();
        for v in incr.iter_mut().skip(1) {
            let z: f64 = StandardNormal.sample(rng);
            *v += sd * z;
        }
    }
    if let Some(sj) = &cfg.small_jump {
        let mean = nf * sj.mass();
        let count = if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(rng) as u64
        } else {
            0
        };
        for _ in 0..count {
            let t = open01(rng);
            let x = sj.draw(open01(rng));
            let bin = ((t * m as f64).ceil() as usize).clamp(1, m);
            incr[bin] += x / nf;
        }
        let comp = sj.first_moment() * dt;
        for v in incr.iter_mut().skip(1) {
            *v -= comp;
        }
    }
    let mut acc = 0.0;
    let values = incr
        .into_iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect();
    Some(GridPath::new(values).expect("finite values"))
}

/// Samples the scaled process with enough arrivals to split at any
/// `k <= k_max`.
pub fn sample_x_bar<R: rand::Rng + ?Sized>(
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    k_max: usize,
    resolution: usize,
    rng: &mut R,
) -> Result<LevySample> {
    let draw = PoissonDraw::sample(&cfg.tail, n as f64, k_max, rng);
    finish(cfg, moments, n, draw, resolution, rng)
}

/// Same, with the leading arrivals fixed by the caller.
pub fn sample_x_bar_with_prefix<R: rand::Rng + ?Sized>(
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    prefix: Vec<f64>,
    k_max: usize,
    resolution: usize,
    rng: &mut R,
) -> Result<LevySample> {
    let draw = PoissonDraw::extend(&cfg.tail, n as f64, prefix, k_max, rng);
    finish(cfg, moments, n, draw, resolution, rng)
}

fn finish<R: rand::Rng + ?Sized>(
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    draw: PoissonDraw,
    resolution: usize,
    rng: &mut R,
) -> Result<LevySample> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    if resolution < MIN_RESOLUTION {
        return Err(invalid("resolution", format!("must be at least {MIN_RESOLUTION}")));
    }
    let diffusion = sample_diffusion(cfg, n, resolution, rng);
    Ok(LevySample { n, draw, moments: *moments, diffusion, resolution })
}

/// `R_bar` alone, from a fresh draw.
pub fn sample_r_bar<R: rand::Rng + ?Sized>(
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    resolution: usize,
    rng: &mut R,
) -> Result<GridPath> {
    sample_x_bar(cfg, moments, n, 0, resolution, rng)?.r_bar(resolution)
}

/// Direct compound-Poisson construction of `Y_n = J_bar^{<=k} + H_bar^{<=k}`
/// without the arrival-time coupling: `N ~ Poisson(n nu_1)` i.i.d. tail
/// variables, ranked by decreasing size with ties to the smaller index.
pub fn sample_y_bar_split<R: rand::Rng + ?Sized>(
    cfg: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    k: usize,
    rng: &mut R,
) -> (StepPath, StepPath) {
    let nf = n as f64;
    let count = Poisson::new(nf * moments.nu1).expect("positive mean").sample(rng) as usize;
    let z: Vec<f64> = (0..count).map(|_| cfg.tail.sample(rng)).collect();
    let t: Vec<f64> = (0..count).map(|_| open01(rng)).collect();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; count];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let big = StepPath::new(0.0, (0..count).filter(|&i| rank[i] < k).map(|i| (t[i], z[i] / nf))).expect("valid");
    let rest = StepPath::new(
        0.0,
        (0..count).map(|i| {
            let zi = if rank[i] < k { 0.0 } else { z[i] };
            (t[i], (zi - moments.mu1) / nf)
        }),
    )
    .expect("valid");
    (big, rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump_sim::config::moments;
    use crate::rng::stream;

    fn setup() -> (LevyConfig, MomentCache) {
        let cfg = LevyConfig::default();
        let m = moments(&cfg).unwrap();
        (cfg, m)
    }

    #[test]
    fn components_sum_to_total() {
        let (cfg, m) = setup();
        let mut rng = stream(3, 0);
        for _ in 0..50 {
            let s = sample_x_bar(&cfg, &m, 50, 5, 256, &mut rng).unwrap();
            for k in [0, 2, 5] {
                let c = s.components(k).unwrap();
                let exact = s.exact_total().unwrap().to_grid(256);
                for (a, b) in c.total.values().iter().zip(exact.values()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coupling_exactness() {
        let (cfg, m) = setup();
        let mut rng = stream(4, 0);
        for _ in 0..200 {
            let s = sample_x_bar(&cfg, &m, 3, 4, 64, &mut rng).unwrap();
            let both = s.j_hat(4).unwrap().add(&s.j_check(4).unwrap());
            assert!(both.jumps().iter().all(|j| j.size * 3.0 >= 1.0 - 1e-12));
            assert_eq!(both.n_jumps(), s.draw.n_big.min(4));
            if s.draw.n_big >= 4 {
                assert_eq!(s.j_check(4).unwrap(), StepPath::zero());
            }
        }
    }

    #[test]
    fn h_bar_all_removed_is_counts() {
        let (cfg, m) = setup();
        let mut rng = stream(5, 0);
        let s = sample_x_bar(&cfg, &m, 5, 40, 64, &mut rng).unwrap();
        assert!(s.draw.n_big <= 40);
        assert_eq!(s.h_bar(40).unwrap(), s.r_bar_counts().negate());
    }

    #[test]
    fn diffusion_is_small_at_large_n() {
        let cfg = LevyConfig::new(crate::tail::TailParams::reference(), 1.0, 0.0, None).unwrap();
        let mut rng = stream(6, 0);
        let mut big = 0;
        for _ in 0..1000 {
            let g = sample_diffusion(&cfg, 10_000, 256, &mut rng).unwrap();
            if g.values().iter().any(|v| v.abs() > 0.1) {
                big += 1;
            }
        }
        assert!(big < 10, "{big}");
    }

    #[test]
    fn resolution_floor() {
        let (cfg, m) = setup();
        assert!(sample_x_bar(&cfg, &m, 10, 1, 8, &mut stream(0, 0)).is_err());
        assert!(sample_x_bar(&cfg, &m, 1, 1, 64, &mut stream(0, 0)).is_err());
    }
}
