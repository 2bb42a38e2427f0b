use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Pure-jump càdlàg path on `[0, 1]` in canonical form: jump times strictly
/// increasing in `(0, 1]`, sizes nonzero. A jump requested at time 0 is
/// folded into `initial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepPath", into = "RawStepPath")]
pub struct StepPath {
    initial: f64,
    jumps: Vec<Jump>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepPath {
    initial: f64,
    #[serde(default)]
    jumps: Vec<(f64, f64)>,
}

impl TryFrom<RawStepPath> for StepPath {
    type Error = Error;

    fn try_from(r: RawStepPath) -> Result<Self> {
        StepPath::new(r.initial, r.jumps)
    }
}

impl From<StepPath> for RawStepPath {
    fn from(p: StepPath) -> Self {
        RawStepPath {
            initial: p.initial,
            jumps: p.jumps.iter().map(|j| (j.time, j.size)).collect(),
        }
    }
}

impl StepPath {
    /// Canonicalising constructor: sorts, merges equal times, folds time-0
    /// jumps into the initial value and drops zero sizes.
    pub fn new(initial: f64, jumps: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        if !initial.is_finite() {
            return Err(Error::InvalidPath("initial value must be finite".into()));
        }
        let mut raw: Vec<(f64, f64)> = jumps.into_iter().collect();
        for &(t, s) in &raw {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidPath(format!("jump time {t} outside [0, 1]")));
            }
            if !s.is_finite() {
                return Err(Error::InvalidPath(format!("jump size {s} at {t} is not finite")));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut initial = initial;
        let mut out: Vec<Jump> = Vec::with_capacity(raw.len());
        for (t, s) in raw {
            if t == 0.0 {
                initial += s;
                continue;
            }
            match out.last_mut() {
                Some(last) if last.time == t => last.size += s,
                _ => out.push(Jump { time: t, size: s }),
            }
        }
        out.retain(|j| j.size != 0.0);
        Ok(Self { initial, jumps: out })
    }

    pub fn zero() -> Self {
        Self { initial: 0.0, jumps: Vec::new() }
    }

    pub fn constant(v: f64) -> Self {
        Self { initial: v, jumps: Vec::new() }
    }

    /// `size * 1_{[t, 1]}`.
    pub fn indicator(t: f64, size: f64) -> Result<Self> {
        Self::new(0.0, [(t, size)])
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    /// `xi(t)`, right-continuous.
    pub fn value(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|j| j.time <= t);
        self.initial + self.jumps[..k].iter().map(|j| j.size).sum::<f64>()
    }

    /// `xi(t-)`, with `xi(0-) = 0`.
    pub fn left_limit(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k = self.jumps.partition_point(|j| j.time < t);
        self.initial + self.jumps[..k].iter().map(|j| j.size).sum::<f64>()
    }

    /// Levels `P_0 = initial, P_i = value after the i-th jump`.
    pub fn levels(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.jumps.len() + 1);
        let mut v = self.initial;
        out.push(v);
        for j in &self.jumps {
            v += j.size;
            out.push(v);
        }
        out
    }

    pub fn terminal(&self) -> f64 {
        *self.levels().last().expect("nonempty")
    }

    pub fn add(&self, other: &StepPath) -> StepPath {
        let jumps = self
            .jumps
            .iter()
            .chain(&other.jumps)
            .map(|j| (j.time, j.size));
        StepPath::new(self.initial + other.initial, jumps).expect("sum of valid paths is valid")
    }

    pub fn scale(&self, a: f64) -> StepPath {
        StepPath::new(self.initial * a, self.jumps.iter().map(|j| (j.time, j.size * a)))
            .expect("scaled valid path is valid")
    }

    pub fn negate(&self) -> StepPath {
        self.scale(-1.0)
    }

    /// Values at `t = k / m` for `k = 0..=m`.
    pub fn to_grid(&self, m: usize) -> GridPath {
        assert!(m >= 1);
        let mut values = Vec::with_capacity(m + 1);
        let mut idx = 0;
        let mut v = self.initial;
        for k in 0..=m {
            let t = k as f64 / m as f64;
            while idx < self.jumps.len() && self.jumps[idx].time <= t {
                v += self.jumps[idx].size;
                idx += 1;
            }
            values.push(v);
        }
        GridPath { values }
    }

    pub fn sup(&self) -> f64 {
        self.levels().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.levels().into_iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Path sampled at `t = k/m`, `k = 0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridPath")]
pub struct GridPath {
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGridPath {
    values: Vec<f64>,
}

impl TryFrom<RawGridPath> for GridPath {
    type Error = Error;

    fn try_from(r: RawGridPath) -> Result<Self> {
        GridPath::new(r.values)
    }
}

impl GridPath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidPath("grid path needs at least two values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("grid values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn resolution(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.resolution() as f64
    }

    /// Piecewise-constant reading of the grid as a step path.
    pub fn to_step_path(&self) -> StepPath {
        let m = self.resolution() as f64;
        let jumps = self
            .values
            .windows(2)
            .enumerate()
            .map(|(k, w)| ((k + 1) as f64 / m, w[1] - w[0]));
        StepPath::new(self.values[0], jumps).expect("grid values are finite")
    }

    pub fn add(&self, other: &GridPath) -> Result<GridPath> {
        if self.values.len() != other.values.len() {
            return Err(Error::InvalidPath("grid resolutions differ".into()));
        }
        Ok(GridPath {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }

    /// CSV with columns `t,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (k, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{v}\n", self.time(k)));
        }
        s
    }
}

/// Step path plus a linear drift: `xi(t) = steps(t) + slope * t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStepPath {
    pub steps: StepPath,
    pub slope: f64,
}

impl DriftStepPath {
    pub fn new(steps: StepPath, slope: f64) -> Self {
        Self { steps, slope }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.steps.value(t) + self.slope * t
    }

    pub fn to_grid(&self, m: usize) -> GridPath {
        let mut g = self.steps.to_grid(m);
        for (k, v) in g.values.iter_mut().enumerate() {
            *v += self.slope * k as f64 / m as f64;
        }
        g
    }

    /// Exact `sup_t |xi(t) - line(t)|` against `line(t) = slope_ref * t`.
    pub fn sup_distance_to_line(&self, slope_ref: f64) -> f64 {
        let d = self.slope - slope_ref;
        let mut best = self.steps.initial().abs();
        let mut level = self.steps.initial();
        for j in self.steps.jumps() {
            best = best.max((level + d * j.time).abs());
            level += j.size;
            best = best.max((level + d * j.time).abs());
        }
        best.max((level + d).abs())
    }

    /// `(sup_t xi(t), sup_t |xi(t) - xi(t-)|)`.
    pub fn phi(&self) -> (f64, f64) {
        let mut sup = self.steps.initial();
        let mut level = self.steps.initial();
        let mut max_jump: f64 = 0.0;
        for j in self.steps.jumps() {
            sup = sup.max(level + self.slope * j.time);
            level += j.size;
            sup = sup.max(level + self.slope * j.time);
            max_jump = max_jump.max(j.size.abs());
        }
        (sup.max(level + self.slope), max_jump)
    }
}

/// Anything readable as a step path; grids are read piecewise constant.
pub trait AsStep {
    fn as_step(&self) -> Cow<'_, StepPath>;
}

impl AsStep for StepPath {
    fn as_step(&self) -> Cow<'_, StepPath> {
        Cow::Borrowed(self)
    }
}

impl AsStep for GridPath {
    fn as_step(&self) -> Cow<'_, StepPath> {
        Cow::Owned(self.to_step_path())
    }
}
