//! Subspace membership and the jump-counting rate functions.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::path::{AsStep, GridPath, StepPath};
use crate::error::{invalid, Error, Result};

/// Extended natural number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RateValue {
    Finite(u64),
    Infinite,
}

impl RateValue {
    pub fn is_finite(self) -> bool {
        matches!(self, RateValue::Finite(_))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            RateValue::Finite(k) => k as f64,
            RateValue::Infinite => f64::INFINITY,
        }
    }

    fn from_count(c: Option<usize>) -> Self {
        c.map_or(RateValue::Infinite, |k| RateValue::Finite(k as u64))
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateValue::Finite(k) => write!(f, "{k}"),
            RateValue::Infinite => write!(f, "inf"),
        }
    }
}

// JSON has no infinity: finite rates are integers, the infinite one is "inf".
impl Serialize for RateValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RateValue::Finite(k) => s.serialize_u64(*k),
            RateValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for RateValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(k) => Ok(RateValue::Finite(k)),
            Raw::S(s) if s == "inf" => Ok(RateValue::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("expected integer or \"inf\", got {s:?}"))),
        }
    }
}

/// Membership of a step path in the nondecreasing pure-jump subspaces.
/// Each `Option` holds the jump count when the path belongs to the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// Nondecreasing (all jumps positive).
    pub nondecreasing: bool,
    /// `xi(0) = 0`, continuous at 1.
    pub d: Option<usize>,
    /// `xi(0) = 0`, a jump at 1 allowed.
    pub d_tilde: Option<usize>,
    /// `xi(0) >= 0`; a positive start counts as a jump at time 0.
    pub d_hat: Option<usize>,
}

impl Classification {
    pub fn in_d_eq(&self, j: usize) -> bool {
        self.d == Some(j)
    }

    pub fn in_d_le(&self, j: usize) -> bool {
        self.d.is_some_and(|k| k <= j)
    }

    pub fn in_d_tilde_eq(&self, j: usize) -> bool {
        self.d_tilde == Some(j)
    }

    pub fn in_d_tilde_le(&self, j: usize) -> bool {
        self.d_tilde.is_some_and(|k| k <= j)
    }

    pub fn in_d_hat_eq(&self, j: usize) -> bool {
        self.d_hat == Some(j)
    }

    pub fn in_d_hat_le(&self, j: usize) -> bool {
        self.d_hat.is_some_and(|k| k <= j)
    }
}

pub fn classify(p: &StepPath) -> Classification {
    let nondecreasing = p.jumps().iter().all(|j| j.size > 0.0);
    let n = p.n_jumps();
    let jump_at_one = p.jumps().last().is_some_and(|j| j.time == 1.0);
    let start_zero = p.initial() == 0.0;
    Classification {
        nondecreasing,
        d: (nondecreasing && start_zero && !jump_at_one).then_some(n),
        d_tilde: (nondecreasing && start_zero).then_some(n),
        d_hat: (nondecreasing && p.initial() >= 0.0).then_some(n + usize::from(p.initial() > 0.0)),
    }
}

/// Rate functions accept step paths exactly; a grid path is a step path only
/// when it is constant, and is otherwise outside every finite level set.
pub trait RateInput {
    fn step_view(&self) -> Option<StepPath>;
}

impl RateInput for StepPath {
    fn step_view(&self) -> Option<StepPath> {
        Some(self.clone())
    }
}

impl RateInput for GridPath {
    fn step_view(&self) -> Option<StepPath> {
        self.is_constant().then(|| StepPath::constant(self.values()[0]))
    }
}

/// Rate for the Lévy process under J1: jump count on `D_{<inf}`.
pub fn rate_j1<P: RateInput + ?Sized>(p: &P) -> RateValue {
    RateValue::from_count(p.step_view().and_then(|s| classify(&s).d))
}

/// Rate for the Lévy process under M1'.
pub fn rate_m1prime<P: RateInput + ?Sized>(p: &P) -> RateValue {
    RateValue::from_count(p.step_view().and_then(|s| classify(&s).d_hat))
}

/// Rate for the random walk under J1.
pub fn rate_rw<P: RateInput + ?Sized>(p: &P) -> RateValue {
    RateValue::from_count(p.step_view().and_then(|s| classify(&s).d_tilde))
}

/// Number of nonzero coordinates of a nonincreasing, nonnegative vector.
pub fn rate_k_vector(x: &[f64]) -> Result<RateValue> {
    if x.iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("x", "coordinates must be nonnegative"));
    }
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(invalid("x", "coordinates must be nonincreasing"));
    }
    Ok(RateValue::Finite(x.iter().filter(|v| **v != 0.0).count() as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Levy,
    Rw,
}

/// `sum_i lambda_i * (jump count of xi_i)`, infinite if any coordinate is
/// outside the finite level sets.
pub fn rate_multi(paths: &[StepPath], lambdas: &[f64], kind: ProcessKind) -> Result<f64> {
    if paths.len() != lambdas.len() || paths.is_empty() {
        return Err(invalid("paths", "need one positive weight per coordinate"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("lambdas", "weights must be positive"));
    }
    let mut total = 0.0;
    for (p, l) in paths.iter().zip(lambdas) {
        let r = match kind {
            ProcessKind::Levy => rate_j1(p),
            ProcessKind::Rw => rate_rw(p),
        };
        total += l * r.as_f64();
    }
    Ok(total)
}

/// `(sup_t xi(t), sup_t |xi(t) - xi(t-)|)`; jumps at time 0 are not counted.
pub fn phi<P: AsStep + ?Sized>(p: &P) -> (f64, f64) {
    let p = p.as_step();
    let max_jump = p.jumps().iter().fold(0.0f64, |m, j| m.max(j.size.abs()));
    (p.sup(), max_jump)
}

/// Cost of reaching level `x` with jumps of size at most `y`: `ceil(x / y)`.
pub fn rate_phi(x: f64, y: f64) -> Result<RateValue> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(invalid("y", "must be positive and finite"));
    }
    if x.is_nan() {
        return Err(Error::Domain("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(RateValue::Finite(0));
    }
    let r = (x / y).ceil();
    if !r.is_finite() {
        return Ok(RateValue::Infinite);
    }
    Ok(RateValue::Finite(r as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(initial: f64, jumps: &[(f64, f64)]) -> StepPath {
        StepPath::new(initial, jumps.iter().copied()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = classify(&path(0.0, &[(0.3, 1.0), (0.7, 2.0)]));
        assert!(c.in_d_eq(2) && c.in_d_tilde_eq(2) && c.in_d_hat_eq(2));
        let c = classify(&path(0.0, &[(1.0, 1.0)]));
        assert!(c.in_d_tilde_eq(1) && c.d.is_none());
        let c = classify(&path(0.5, &[]));
        assert!(c.in_d_hat_eq(1) && c.d_tilde.is_none() && c.d.is_none());
    }

    #[test]
    fn rate_examples() {
        let p = path(0.0, &[(0.2, 1.0), (0.4, 0.5), (0.9, 3.0)]);
        assert_eq!(rate_j1(&p), RateValue::Finite(3));
        let q = path(0.0, &[(1.0, 1.0)]);
        assert_eq!(rate_j1(&q), RateValue::Infinite);
        assert_eq!(rate_rw(&q), RateValue::Finite(1));
        let neg = path(0.0, &[(0.5, -1.0)]);
        for r in [rate_j1(&neg), rate_rw(&neg), rate_m1prime(&neg)] {
            assert_eq!(r, RateValue::Infinite);
        }
        let ramp = GridPath::new((0..=16).map(|k| k as f64 / 16.0).collect()).unwrap();
        assert_eq!(rate_j1(&ramp), RateValue::Infinite);
        let flat = GridPath::new(vec![0.0; 17]).unwrap();
        assert_eq!(rate_j1(&flat), RateValue::Finite(0));
    }

    #[test]
    fn k_vector_examples() {
        assert_eq!(rate_k_vector(&[0.0, 0.0, 0.0]).unwrap(), RateValue::Finite(0));
        assert_eq!(rate_k_vector(&[3.2, 1.1, 0.0, 0.0]).unwrap(), RateValue::Finite(2));
        assert_eq!(rate_k_vector(&[3.0, 2.0, 1.0]).unwrap(), RateValue::Finite(3));
        assert!(rate_k_vector(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn multi_examples() {
        let one = path(0.0, &[(0.5, 1.0)]);
        assert_eq!(rate_multi(&[one.clone(), one.clone()], &[1.0, 1.0], ProcessKind::Levy).unwrap(), 2.0);
        let three = path(0.0, &[(0.2, 1.0), (0.4, 1.0), (0.6, 1.0)]);
        assert_eq!(rate_multi(&[StepPath::zero(), three], &[1.0, 2.0], ProcessKind::Levy).unwrap(), 6.0);
        let neg = path(0.0, &[(0.5, -1.0)]);
        assert!(rate_multi(&[one, neg], &[1.0, 1.0], ProcessKind::Rw).unwrap().is_infinite());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(rate_phi(2.5, 1.0).unwrap(), RateValue::Finite(3));
        assert_eq!(rate_phi(1.0, 1.0).unwrap(), RateValue::Finite(1));
        assert_eq!(rate_phi(-1.0, 1.0).unwrap(), RateValue::Finite(0));
        assert!(rate_phi(1.0, 0.0).is_err());
        assert_eq!(phi(&path(0.0, &[(0.3, 2.0), (0.6, 1.0)])), (3.0, 2.0));
    }

    #[test]
    fn rate_value_json() {
        assert_eq!(serde_json::to_string(&RateValue::Finite(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&RateValue::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<RateValue>("\"inf\"").unwrap(), RateValue::Infinite);
        assert!(RateValue::Finite(100) < RateValue::Infinite);
    }
}
