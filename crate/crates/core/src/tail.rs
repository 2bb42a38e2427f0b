//! Lognormal-type tail model `nu[x, inf) = c x^beta exp(-lambda (log x)^gamma)`
//! for `x >= 1`, written as `exp(-r(log x))` with
//! `r(u) = lambda u^gamma - beta u - log c`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::quad::{integrate_to_inf, QuadOptions};
use crate::rng::open01;
use crate::special::{ln_binomial_sf, ln_erlang_cdf, log_add_exp, log_sub_exp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTail")]
pub struct TailParams {
    pub c: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTail {
    c: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
}

impl TryFrom<RawTail> for TailParams {
    type Error = Error;

    fn try_from(r: RawTail) -> Result<Self> {
        TailParams::new(r.c, r.beta, r.lambda, r.gamma)
    }
}

impl TailParams {
    /// Validated constructor. The tail must be nonincreasing on `[1, inf)`;
    /// since `d/du log tail = beta - lambda gamma u^(gamma-1)` vanishes
    /// its second term at `u = 0`, this forces `beta <= 0`.
    pub fn new(c: f64, beta: f64, lambda: f64, gamma: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("c", format!("must be positive and finite, got {c}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(invalid("gamma", format!("must exceed 1, got {gamma}")));
        }
        if !beta.is_finite() {
            return Err(invalid("beta", "must be finite"));
        }
        if beta > 0.0 {
            return Err(invalid(
                "beta",
                format!("tail increases on [1, exp({:.4})]; need beta <= 0", (beta / (lambda * gamma)).powf(1.0 / (gamma - 1.0))),
            ));
        }
        Ok(Self { c, beta, lambda, gamma })
    }

    /// `(c, beta, lambda, gamma) = (1, 0, 1, 2)`.
    pub fn reference() -> Self {
        Self { c: 1.0, beta: 0.0, lambda: 1.0, gamma: 2.0 }
    }

    pub fn r(&self, u: f64) -> f64 {
        self.lambda * u.powf(self.gamma) - self.beta * u - self.c.ln()
    }

    /// `log tail(x)` for `x >= 1`.
    pub fn ln_tail(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(domain(format!("tail evaluated at x = {x} < 1")));
        }
        Ok(-self.r(x.ln()))
    }

    pub fn tail(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(domain(format!("tail evaluated at x = {x} < 1")));
        }
        let u = x.ln();
        Ok(self.c * (self.beta * u - self.lambda * u.powf(self.gamma)).exp())
    }

    /// `nu_1 = nu[1, inf)`.
    pub fn nu1(&self) -> f64 {
        self.c
    }

    /// `ln P(Z >= x)` for the normalised tail variable.
    pub fn ln_tail_normalized(&self, x: f64) -> Result<f64> {
        Ok(self.ln_tail(x)? - self.c.ln())
    }

    /// `r(log n)`, the normaliser of every log-probability ratio.
    pub fn speed(&self, n: f64) -> Result<f64> {
        if !(n >= 2.0) {
            return Err(domain(format!("speed needs n >= 2, got {n}")));
        }
        let s = self.r(n.ln());
        if s <= 0.0 {
            return Err(domain(format!("speed r(log {n}) = {s} is not positive")));
        }
        Ok(s)
    }

    /// `Q_n(x) = n tail(x)`.
    pub fn q_n(&self, n: f64, x: f64) -> Result<f64> {
        if !(n > 0.0) {
            return Err(domain(format!("n must be positive, got {n}")));
        }
        Ok(n * self.tail(x)?)
    }

    pub fn ln_q_n(&self, n: f64, x: f64) -> Result<f64> {
        if !(n > 0.0) {
            return Err(domain(format!("n must be positive, got {n}")));
        }
        Ok(n.ln() + self.ln_tail(x)?)
    }

    /// Generalised inverse `inf{s : Q_n(s) < y}`, clamped to 1 for
    /// `y >= Q_n(1)`.
    pub fn q_n_inverse(&self, n: f64, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::INFINITY;
        }
        self.q_n_inverse_ln(n, y.ln())
    }

    /// [`Self::q_n_inverse`] with `y` given as `ln y`.
    pub fn q_n_inverse_ln(&self, n: f64, ln_y: f64) -> f64 {
        let target = n.ln() - ln_y;
        if target <= -self.c.ln() {
            return 1.0;
        }
        if self.beta == 0.0 {
            ((target + self.c.ln()) / self.lambda).powf(1.0 / self.gamma).exp()
        } else {
            self.solve_r_bisection(target).exp()
        }
    }

    /// Same inverse, always by bisection; used to cross-check the closed form.
    pub fn q_n_inverse_bisection(&self, n: f64, y: f64) -> f64 {
        let target = n.ln() - y.ln();
        if target <= -self.c.ln() {
            return 1.0;
        }
        self.solve_r_bisection(target).exp()
    }

    /// Smallest `u >= 0` with `r(u) >= target`; `r` is increasing because
    /// `beta <= 0`.
    fn solve_r_bisection(&self, target: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.r(hi) < target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            // Absolute width on u is relative width on x = e^u.
            if hi - lo <= 1e-12 || mid <= lo || mid >= hi {
                break;
            }
            if self.r(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// `Q~^<-(v)`: the `x >= 1` with `P(Z >= x) = v`, for `v in (0, 1]`.
    pub fn normalized_inverse(&self, v: f64) -> f64 {
        self.q_n_inverse_ln(1.0, v.ln() + self.c.ln())
    }

    /// Draw of `Z` with `P(Z >= x) = tail(x) / tail(1)`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.normalized_inverse(open01(rng))
    }

    /// `E Z^p` for `p > 0`, as `1 + (p/c) int_0^inf exp(p u - r(u)) du`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(domain("moment order must be positive"));
        }
        let opts = QuadOptions { rel_tol: 1e-12, ..QuadOptions::default() };
        let (v, _) = integrate_to_inf(|u| (p * u - self.r(u)).exp(), 0.0, opts)?;
        Ok(1.0 + p * v / self.c)
    }

    /// `mu_1 = E Z`.
    pub fn mu1(&self) -> Result<f64> {
        self.moment(1.0)
    }
}

impl Default for TailParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl fmt::Display for TailParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(c={}, beta={}, lambda={}, gamma={})", self.c, self.beta, self.lambda, self.gamma)
    }
}

/// The nine asymptotic identities for the scaled tails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitId {
    Limit1,
    Limit2,
    Limit3,
    Limit4,
    Limit5,
    Limit6,
    Limit7,
    Limit8,
    Limit9,
}

impl LimitId {
    pub const ALL: [LimitId; 9] = [
        LimitId::Limit1,
        LimitId::Limit2,
        LimitId::Limit3,
        LimitId::Limit4,
        LimitId::Limit5,
        LimitId::Limit6,
        LimitId::Limit7,
        LimitId::Limit8,
        LimitId::Limit9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LimitId::Limit1 => "limit1",
            LimitId::Limit2 => "limit2",
            LimitId::Limit3 => "limit3",
            LimitId::Limit4 => "limit4",
            LimitId::Limit5 => "limit5",
            LimitId::Limit6 => "limit6",
            LimitId::Limit7 => "limit7",
            LimitId::Limit8 => "limit8",
            LimitId::Limit9 => "limit9",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            LimitId::Limit1 | LimitId::Limit2 | LimitId::Limit3 => &["x"],
            LimitId::Limit4 => &["x1", "x2", "sign"],
            LimitId::Limit5 => &["i", "c"],
            LimitId::Limit6 | LimitId::Limit8 => &["x"],
            LimitId::Limit7 => &["x1", "x2"],
            LimitId::Limit9 => &["i", "x"],
        }
    }

    /// Parameters for which every error at `n = 1e8` is below 0.1.
    pub fn default_aux(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            LimitId::Limit1 | LimitId::Limit2 | LimitId::Limit3 | LimitId::Limit8 => &[("x", 1.0)],
            LimitId::Limit4 => &[("x1", 1.0), ("x2", 2.0), ("sign", -1.0)],
            LimitId::Limit5 => &[("i", 1.0), ("c", 1.0)],
            // At x = 1 the ratio is identically -1.
            LimitId::Limit6 => &[("x", 2.0)],
            LimitId::Limit7 => &[("x1", 1.0), ("x2", 2.0)],
            LimitId::Limit9 => &[("i", 0.0), ("x", 1.0)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl std::str::FromStr for LimitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LimitId::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| invalid("limit_id", format!("unknown limit `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheckReport {
    pub limit_id: LimitId,
    pub n_grid: Vec<u64>,
    pub values: Vec<f64>,
    pub target: f64,
    pub max_abs_error_at_largest_n: f64,
}

impl LimitCheckReport {
    pub fn errors(&self) -> Vec<f64> {
        self.values.iter().map(|v| (v - self.target).abs()).collect()
    }

    /// CSV with columns `n,value,target`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,value,target\n");
        for (n, v) in self.n_grid.iter().zip(&self.values) {
            s.push_str(&format!("{n},{v:.12e},{}\n", self.target));
        }
        s
    }
}

struct Aux<'a>(&'a BTreeMap<String, f64>);

impl Aux<'_> {
    fn get(&self, key: &'static str) -> Result<f64> {
        let v = *self.0.get(key).ok_or_else(|| invalid("aux", format!("missing `{key}`")))?;
        if !v.is_finite() {
            return Err(invalid("aux", format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn positive(&self, key: &'static str) -> Result<f64> {
        let v = self.get(key)?;
        if v <= 0.0 {
            return Err(invalid("aux", format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &'static str, min: u64) -> Result<u64> {
        let v = self.get(key)?;
        if v.fract() != 0.0 || v < min as f64 {
            return Err(invalid("aux", format!("`{key}` must be an integer >= {min}, got {v}")));
        }
        Ok(v as u64)
    }
}

fn check_aux(limit: LimitId, aux: &BTreeMap<String, f64>) -> Result<()> {
    let req = limit.required();
    for k in aux.keys() {
        if !req.contains(&k.as_str()) {
            return Err(invalid("aux", format!("`{k}` is not a parameter of {}", limit.name())));
        }
    }
    for k in req {
        if !aux.contains_key(*k) {
            return Err(invalid("aux", format!("{} needs `{k}`", limit.name())));
        }
    }
    Ok(())
}

/// Target value of the limit under `aux`.
pub fn limit_target(limit: LimitId, aux: &BTreeMap<String, f64>) -> Result<f64> {
    check_aux(limit, aux)?;
    let a = Aux(aux);
    Ok(match limit {
        LimitId::Limit1 | LimitId::Limit2 | LimitId::Limit8 => 0.0,
        LimitId::Limit3 | LimitId::Limit4 | LimitId::Limit6 | LimitId::Limit7 => -1.0,
        LimitId::Limit5 => -(a.count("i", 1)? as f64),
        LimitId::Limit9 => -(a.count("i", 0)? as f64 + 1.0),
    })
}

/// The ratio sequence of `limit` at a single (possibly non-integer) `n`.
pub fn limit_value(limit: LimitId, params: &TailParams, aux: &BTreeMap<String, f64>, n: f64) -> Result<f64> {
    check_aux(limit, aux)?;
    let a = Aux(aux);
    let speed = params.speed(n)?;
    let ln_qn = |x: f64| params.ln_q_n(n, n * x);
    let ln_qt = |x: f64| params.ln_tail_normalized(n * x);
    let ln_qt_n = params.ln_tail_normalized(n)?;
    let qt_speed = -ln_qt_n;
    match limit {
        LimitId::Limit1 => Ok(ln_qn(a.positive("x")?)?.exp()),
        LimitId::Limit2 => Ok(ln_qn(a.positive("x")?)?.exp() / speed),
        LimitId::Limit3 => Ok(ln_qn(a.positive("x")?)? / speed),
        LimitId::Limit4 => {
            let (x1, x2) = ordered_pair(&a)?;
            let sign = a.get("sign")?;
            let (l1, l2) = (ln_qn(x1)?, ln_qn(x2)?);
            let v = if sign == 1.0 {
                log_add_exp(l1, l2)
            } else if sign == -1.0 {
                log_sub_exp(l1, l2)
            } else {
                return Err(invalid("aux", format!("`sign` must be 1 or -1, got {sign}")));
            };
            Ok(v / speed)
        }
        LimitId::Limit5 => {
            let i = a.count("i", 1)?;
            let c = a.positive("c")?;
            let y = ln_qn(c)?.exp();
            Ok(ln_erlang_cdf(i, y) / speed)
        }
        LimitId::Limit6 => Ok(ln_qt(a.positive("x")?)? / qt_speed),
        LimitId::Limit7 => {
            let (x1, x2) = ordered_pair(&a)?;
            Ok(log_sub_exp(ln_qt(x1)?, ln_qt(x2)?) / qt_speed)
        }
        LimitId::Limit8 => {
            let q = ln_qt(a.positive("x")?)?.exp();
            Ok(n * (-q).ln_1p() / qt_speed)
        }
        LimitId::Limit9 => {
            let i = a.count("i", 0)?;
            let x = a.positive("x")?;
            let uniforms = (n.round() as u64).saturating_sub(1);
            if uniforms < i + 1 {
                return Err(domain(format!("n = {n} too small for the order statistic V_({})", i + 1)));
            }
            let q = ln_qt(x)?.exp();
            Ok(ln_binomial_sf(uniforms, q, i + 1) / qt_speed)
        }
    }
}

fn ordered_pair(a: &Aux<'_>) -> Result<(f64, f64)> {
    let x1 = a.positive("x1")?;
    let x2 = a.positive("x2")?;
    if x1 >= x2 {
        return Err(invalid("aux", format!("need x1 < x2, got x1 = {x1}, x2 = {x2}")));
    }
    Ok((x1, x2))
}

/// Evaluates `limit` along `n_grid` analytically.
pub fn verify_limit(
    limit: LimitId,
    params: &TailParams,
    aux: &BTreeMap<String, f64>,
    n_grid: &[u64],
) -> Result<LimitCheckReport> {
    if n_grid.is_empty() {
        return Err(invalid("n_grid", "must be nonempty"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_grid", "must be strictly increasing"));
    }
    let target = limit_target(limit, aux)?;
    let values = n_grid
        .iter()
        .map(|&n| limit_value(limit, params, aux, n as f64))
        .collect::<Result<Vec<_>>>()?;
    let last = *values.last().expect("nonempty");
    Ok(LimitCheckReport {
        limit_id: limit,
        n_grid: n_grid.to_vec(),
        values,
        target,
        max_abs_error_at_largest_n: (last - target).abs(),
    })
}
