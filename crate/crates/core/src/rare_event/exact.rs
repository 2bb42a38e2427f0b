//! Exact probabilities for boxes of ranked jump sizes.
//!
//! The i-th largest scaled jump is `Q_n^<-(Gamma_i)/n`, decreasing in
//! `Gamma_i`, so a box of sizes is a box of arrival times. The arrivals have
//! joint density `exp(-g_k)` on `0 < g_1 < ... < g_k`; integrating out one
//! coordinate at a time leaves a piecewise polynomial in the last one.

use statrs::function::factorial::ln_factorial;

use super::event::Interval;
use crate::error::{invalid, Result};
use crate::quad::{integrate, QuadOptions};
use crate::special::log_add_exp;
use crate::tail::TailParams;

/// `[a, b]` in arrival-time space for one size interval; `None` if empty.
fn gamma_interval(tail: &TailParams, n: f64, iv: &Interval) -> Result<Option<(f64, f64)>> {
    // Sizes are never below 1/n.
    let b = if n * iv.lo <= 1.0 { f64::INFINITY } else { tail.q_n(n, n * iv.lo)? };
    let a = match iv.hi {
        None => 0.0,
        Some(h) if n * h < 1.0 => return Ok(None),
        Some(h) if h.is_infinite() => 0.0,
        Some(h) => tail.q_n(n, n * h)?,
    };
    Ok((a < b).then_some((a, b)))
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * u + x)
}

fn antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    for (i, &x) in c.iter().enumerate() {
        out[i + 1] = x / (i + 1) as f64;
    }
    out
}

/// Coefficients of `p(u0 + w)` in `w`.
fn taylor_shift(c: &[f64], u0: f64) -> Vec<f64> {
    let mut d = c.to_vec();
    let m = d.len();
    for i in 0..m {
        for j in (i..m - 1).rev() {
            d[j] += u0 * d[j + 1];
        }
    }
    d
}

/// `log P((Q_n^<-(Gamma_i)/n)_{i <= k} in rect)` with `k = rect.len()`.
pub fn ln_exact_jump_vector_prob(tail: &TailParams, n: f64, rect: &[Interval]) -> Result<f64> {
    if rect.is_empty() {
        return Err(invalid("rect", "need at least one coordinate"));
    }
    if !(n >= 1.0) {
        return Err(invalid("n", "must be at least 1"));
    }
    let mut boxes = Vec::with_capacity(rect.len());
    for iv in rect {
        match gamma_interval(tail, n, iv)? {
            Some(b) => boxes.push(b),
            None => return Ok(f64::NEG_INFINITY),
        }
    }
    let k = boxes.len();
    let scale = boxes
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|x| x.is_finite() && *x > 0.0)
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut knots: Vec<f64> = boxes
        .iter()
        .flat_map(|&(a, b)| [a / scale, b / scale])
        .filter(|x| x.is_finite())
        .chain(std::iter::once(0.0))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let pieces = knots.len(); // the last piece is [knots[last], inf)
    let lo_of = |p: usize| knots[p];
    let hi_of = |p: usize| knots.get(p + 1).copied().unwrap_or(f64::INFINITY);
    let inside = |p: usize, i: usize| {
        let (a, b) = (boxes[i].0 / scale, boxes[i].1 / scale);
        let mid = if p + 1 < pieces { 0.5 * (lo_of(p) + hi_of(p)) } else { lo_of(p) + 1.0 };
        mid >= a && mid <= b
    };

    // f_1 = indicator of the first box, then f_i(u) = 1{u in box i} int_0^u f_{i-1}.
    let mut f: Vec<Vec<f64>> = (0..pieces).map(|p| vec![if inside(p, 0) { 1.0 } else { 0.0 }]).collect();
    for i in 1..k {
        let mut next = Vec::with_capacity(pieces);
        let mut acc = 0.0;
        for p in 0..pieces {
            let mut g = antiderivative(&f[p]);
            g[0] += acc - horner(&g, lo_of(p));
            if p + 1 < pieces {
                acc = horner(&g, hi_of(p));
            }
            next.push(if inside(p, i) { g } else { vec![0.0] });
        }
        f = next;
    }

    let mut ln_sum = f64::NEG_INFINITY;
    for (p, poly) in f.iter().enumerate() {
        if poly.iter().all(|&c| c == 0.0) {
            continue;
        }
        let ul = lo_of(p);
        let term = if p + 1 < pieces {
            let ur = hi_of(p);
            let h = |u: f64| horner(poly, u).max(0.0) * (-scale * (u - ul)).exp();
            let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 4000 };
            let (v, _) = integrate(h, ul, ur, opts)?;
            if v > 0.0 {
                -scale * ul + v.ln()
            } else {
                f64::NEG_INFINITY
            }
        } else {
            // int_{u0}^inf p(u) e^{-S u} du = e^{-S u0} sum_m p^(m)(u0) / S^{m+1}.
            let d = taylor_shift(poly, ul);
            let ln_s = scale.ln();
            let mut t = f64::NEG_INFINITY;
            for (m, &dm) in d.iter().enumerate() {
                if dm > 0.0 {
                    t = log_add_exp(t, dm.ln() + ln_factorial(m as u64) - (m as f64 + 1.0) * ln_s);
                }
            }
            -scale * ul + t
        };
        ln_sum = log_add_exp(ln_sum, term);
    }
    Ok((k as f64 * scale.ln() + ln_sum).min(0.0))
}

pub fn exact_jump_vector_prob(tail: &TailParams, n: f64, rect: &[Interval]) -> Result<f64> {
    Ok(ln_exact_jump_vector_prob(tail, n, rect)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_erlang_cdf;

    fn tail() -> TailParams {
        TailParams::reference()
    }

    #[test]
    fn largest_jump_closed_form() {
        for (n, x) in [(50.0, 0.1), (50.0, 1.0), (1e8, 1.0), (10.0, 0.5)] {
            let q = tail().q_n(n, n * x).unwrap();
            let want = (-(-q).exp_m1()).ln();
            let got = ln_exact_jump_vector_prob(&tail(), n, &[Interval::at_least(x)]).unwrap();
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{n} {x}: {got} vs {want}");
        }
    }

    #[test]
    fn second_jump_is_erlang_two() {
        for (n, x) in [(50.0, 0.1), (1e8, 1.0), (30.0, 0.4)] {
            let q = tail().q_n(n, n * x).unwrap();
            let rect = [Interval::at_least(f64::NEG_INFINITY), Interval::at_least(x)];
            let got = ln_exact_jump_vector_prob(&tail(), n, &rect).unwrap();
            let want = ln_erlang_cdf(2, q);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn bounded_two_box_against_direct_integral() {
        let t = tail();
        let n = 40.0;
        let rect = [Interval::new(0.3, 0.9), Interval::new(0.1, 0.5)];
        let got = exact_jump_vector_prob(&t, n, &rect).unwrap();
        let (a1, b1) = (t.q_n(n, n * 0.9).unwrap(), t.q_n(n, n * 0.3).unwrap());
        let (a2, b2) = (t.q_n(n, n * 0.5).unwrap(), t.q_n(n, n * 0.1).unwrap());
        let h = |g1: f64| {
            let lo = a2.max(g1);
            if lo >= b2 {
                0.0
            } else {
                (-g1).exp() * ((-(lo - g1)).exp() - (-(b2 - g1)).exp())
            }
        };
        let (want, _) = integrate(h, a1, b1, QuadOptions::default()).unwrap();
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn empty_and_full() {
        let t = tail();
        assert_eq!(exact_jump_vector_prob(&t, 20.0, &[Interval::new(0.0, 0.01)]).unwrap(), 0.0);
        // Second larger than first with disjoint ranges is impossible.
        let p = exact_jump_vector_prob(&t, 20.0, &[Interval::new(0.1, 0.2), Interval::new(0.3, 0.4)]).unwrap();
        assert_eq!(p, 0.0);
        let p = exact_jump_vector_prob(&t, 20.0, &[Interval::at_least(0.0)]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }
}
