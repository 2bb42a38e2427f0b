//! Log-space special functions: Erlang and binomial tails, stable
//! log-differences.

use statrs::function::factorial::{ln_binomial, ln_factorial};

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(exp(a) - exp(b))` for `a >= b`; `-inf` when equal.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b || a.is_nan() || b.is_nan());
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a <= b {
        return f64::NEG_INFINITY;
    }
    a + ln_1m_exp(a - b)
}

/// `ln(1 - exp(-x))` for `x > 0`, accurate at both ends.
pub fn ln_1m_exp(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// `ln P(Gamma_j <= y)` for the Erlang(j, 1) law, `j >= 1`.
pub fn ln_erlang_cdf(j: u64, y: f64) -> f64 {
    assert!(j >= 1, "Erlang shape must be positive");
    if y.is_nan() {
        return f64::NAN;
    }
    if y <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if y == f64::INFINITY {
        return 0.0;
    }
    let jf = j as f64;
    if y <= jf {
        // e^{-y} y^j / j! * sum_m prod_{l<=m} y / (j + l)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut m = 0.0;
        loop {
            m += 1.0;
            term *= y / (jf + m);
            sum += term;
            if term < sum * 1e-17 || m > 1e8 {
                break;
            }
        }
        -y + jf * y.ln() - ln_factorial(j) + sum.ln()
    } else {
        let sf = ln_erlang_sf(j, y);
        (-sf.exp()).ln_1p()
    }
}

/// `ln P(Gamma_j > y)` for the Erlang(j, 1) law.
pub fn ln_erlang_sf(j: u64, y: f64) -> f64 {
    assert!(j >= 1, "Erlang shape must be positive");
    if y <= 0.0 {
        return 0.0;
    }
    if y == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if y < j as f64 {
        let cdf = ln_erlang_cdf(j, y);
        return (-cdf.exp()).ln_1p();
    }
    // e^{-y} sum_{m<j} y^m/m!, summed from the largest term downwards.
    let ly = y.ln();
    let mut acc = f64::NEG_INFINITY;
    for m in (0..j).rev() {
        let t = m as f64 * ly - ln_factorial(m);
        let next = log_add_exp(acc, t);
        if next == acc && t < acc - 40.0 {
            break;
        }
        acc = next;
    }
    -y + acc
}

/// `ln P(Bin(trials, q) >= k)`. Equals `ln P(V_(k) <= q)` where `V_(k)` is
/// the k-th smallest of `trials` independent uniforms.
pub fn ln_binomial_sf(trials: u64, q: f64, k: u64) -> f64 {
    if k == 0 || q >= 1.0 {
        return if k <= trials { 0.0 } else { f64::NEG_INFINITY };
    }
    if k > trials || q <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = trials as f64;
    let lq = q.ln();
    let lp = (-q).ln_1p();
    let term = |m: u64| ln_binomial(trials, m) + m as f64 * lq + (n - m as f64) * lp;
    let mode = ((n + 1.0) * q).floor();
    if (k as f64) > mode {
        let mut acc = f64::NEG_INFINITY;
        let mut m = k;
        while m <= trials {
            let t = term(m);
            acc = log_add_exp(acc, t);
            if t < acc - 40.0 {
                break;
            }
            m += 1;
        }
        acc
    } else {
        let mut lower = f64::NEG_INFINITY;
        for m in (0..k).rev() {
            let t = term(m);
            lower = log_add_exp(lower, t);
            if t < lower - 40.0 {
                break;
            }
        }
        (-lower.exp()).ln_1p()
    }
}
