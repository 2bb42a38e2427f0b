use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::tail::TailParams;

/// Small-jump Lévy density `intensity * x^(-1-alpha)` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSmallJumps {
    pub intensity: f64,
    pub alpha: f64,
}

/// Dropped second moment below the truncation point when the small-jump
/// measure has infinite mass.
pub const SMALL_JUMP_CUTOFF: f64 = 1e-6;

impl PowerSmallJumps {
    pub fn new(intensity: f64, alpha: f64) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(invalid("small_jump.intensity", "must be positive and finite"));
        }
        if !(alpha.is_finite() && alpha < 2.0) {
            return Err(invalid("small_jump.alpha", "need alpha < 2 for a finite second moment"));
        }
        let s = Self { intensity, alpha };
        let m2 = s.second_moment()?;
        if !m2.is_finite() {
            return Err(invalid("small_jump", "second moment is not finite"));
        }
        Ok(s)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.intensity * x.powf(-1.0 - self.alpha)
    }

    /// `int_0^1 x^2 nu(dx)` by quadrature.
    pub fn second_moment(&self) -> Result<f64> {
        let (v, _) = integrate(|x| x * x * self.density(x), 0.0, 1.0, QuadOptions::default())?;
        Ok(v)
    }

    /// Lower truncation point: zero when the mass is finite, otherwise the
    /// point below which the second moment is `SMALL_JUMP_CUTOFF`.
    pub fn truncation(&self) -> f64 {
        if self.alpha < 0.0 {
            0.0
        } else {
            let e = 2.0 - self.alpha;
            (SMALL_JUMP_CUTOFF * e / self.intensity).powf(1.0 / e).min(0.5)
        }
    }

    /// Mass of `[x_c, 1)`.
    pub fn mass(&self) -> f64 {
        let xc = self.truncation();
        if self.alpha == 0.0 {
            self.intensity * (1.0 / xc).ln()
        } else {
            self.intensity * (xc.powf(-self.alpha) - 1.0) / self.alpha
        }
    }

    /// `int_{[x_c, 1)} x nu(dx)`.
    pub fn first_moment(&self) -> f64 {
        let xc = self.truncation();
        let e = 1.0 - self.alpha;
        if e == 0.0 {
            self.intensity * (1.0 / xc).ln()
        } else {
            self.intensity * (1.0 - xc.powf(e)) / e
        }
    }

    /// Inverse-CDF draw from the normalised density on `[x_c, 1)`.
    pub fn draw(&self, u: f64) -> f64 {
        let xc = self.truncation();
        if self.alpha == 0.0 {
            xc.powf(1.0 - u)
        } else {
            let a = xc.powf(-self.alpha);
            (a - u * (a - 1.0)).powf(-1.0 / self.alpha)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLevy")]
pub struct LevyConfig {
    pub tail: TailParams,
    /// Brownian coefficient.
    pub a: f64,
    /// Drift; it cancels in the centred process.
    pub b: f64,
    pub small_jump: Option<PowerSmallJumps>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevy {
    #[serde(default)]
    tail: TailParams,
    #[serde(default)]
    a: f64,
    #[serde(default)]
    b: f64,
    #[serde(default)]
    small_jump: Option<PowerSmallJumps>,
}

impl TryFrom<RawLevy> for LevyConfig {
    type Error = Error;

    fn try_from(r: RawLevy) -> Result<Self> {
        let sj = r.small_jump.map(|s| PowerSmallJumps::new(s.intensity, s.alpha)).transpose()?;
        LevyConfig::new(r.tail, r.a, r.b, sj)
    }
}

impl LevyConfig {
    pub fn new(tail: TailParams, a: f64, b: f64, small_jump: Option<PowerSmallJumps>) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(invalid("a", "must be nonnegative and finite"));
        }
        if !b.is_finite() {
            return Err(invalid("b", "must be finite"));
        }
        Ok(Self { tail, a, b, small_jump })
    }

    /// Compound Poisson with the given tail, no Brownian part, no small jumps.
    pub fn pure_jump(tail: TailParams) -> Self {
        Self { tail, a: 0.0, b: 0.0, small_jump: None }
    }

    pub fn has_diffusion(&self) -> bool {
        self.a > 0.0 || self.small_jump.is_some()
    }
}

impl Default for LevyConfig {
    fn default() -> Self {
        Self::pure_jump(TailParams::reference())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCache {
    /// `nu[1, inf)`.
    pub nu1: f64,
    /// Mean of the normalised tail law on `[1, inf)`.
    pub mu1: f64,
}

pub fn moments(cfg: &LevyConfig) -> Result<MomentCache> {
    tail_moments(&cfg.tail)
}

pub fn tail_moments(tail: &TailParams) -> Result<MomentCache> {
    let mu1 = tail.mu1()?;
    if !mu1.is_finite() || mu1 < 1.0 {
        return Err(Error::Numerical(format!("mean of the tail law is {mu1}")));
    }
    Ok(MomentCache { nu1: tail.nu1(), mu1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_examples() {
        let m = moments(&LevyConfig::default()).unwrap();
        assert_eq!(m.nu1, 1.0);
        assert!((m.mu1 - 2.7302).abs() < 1e-4);
        let t2 = TailParams::new(2.0, 0.0, 1.0, 2.0).unwrap();
        let m2 = tail_moments(&t2).unwrap();
        assert_eq!(m2.nu1, 2.0);
        assert!((m2.mu1 - m.mu1).abs() < 1e-10);
    }

    #[test]
    fn small_jump_measure() {
        let s = PowerSmallJumps::new(2.0, 0.5).unwrap();
        assert!((s.second_moment().unwrap() - 2.0 / 1.5).abs() < 1e-8);
        let xc = s.truncation();
        assert!((2.0 * xc.powf(1.5) / 1.5 - SMALL_JUMP_CUTOFF).abs() < 1e-15);
        assert!(s.draw(0.0) >= xc * (1.0 - 1e-12) && s.draw(1.0) <= 1.0 + 1e-12);
        assert!(PowerSmallJumps::new(1.0, 2.0).is_err());
        let finite = PowerSmallJumps::new(1.0, -1.0).unwrap();
        assert_eq!(finite.truncation(), 0.0);
        assert!((finite.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_json() {
        let c: LevyConfig = serde_json::from_str(r#"{"tail":{"c":1,"beta":0,"lambda":1,"gamma":2},"a":0.5}"#).unwrap();
        assert_eq!(c.a, 0.5);
        assert!(serde_json::from_str::<LevyConfig>(r#"{"a":-1}"#).is_err());
    }
}
