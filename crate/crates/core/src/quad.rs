//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integral of `f` over `[a, b]` with the estimated absolute error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("finite bounds required".into()));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v0, e0) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if parts.len() >= opts.max_intervals {
            if err <= 1e-6 * total.abs().max(opts.abs_tol) {
                break;
            }
            return Err(Error::Numerical(format!(
                "quadrature did not converge: value {total}, error {err}"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (l, r, v, e) = parts.swap_remove(idx);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            // Interval exhausted at machine precision.
            parts.push((l, r, v, 0.0));
            total = parts.iter().map(|p| p.2).sum();
            err = parts.iter().map(|p| p.3).sum();
            continue;
        }
        let (v1, e1) = gk15(&f, l, m);
        let (v2, e2) = gk15(&f, m, r);
        parts.push((l, m, v1, e1));
        parts.push((m, r, v2, e2));
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        if parts.len() % 64 == 0 {
            total = parts.iter().map(|p| p.2).sum();
            err = parts.iter().map(|p| p.3).sum();
        }
    }
    if !total.is_finite() {
        return Err(Error::Numerical("non-finite integral".into()));
    }
    Ok((sign * total, err))
}

/// Integral of `f` over `[a, inf)` through `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<(f64, f64)> {
    let g = |t: f64| {
        let s = 1.0 - t;
        if s <= 0.0 {
            return 0.0;
        }
        let x = a + t / s;
        if !x.is_finite() {
            return 0.0;
        }
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let (v, _) = integrate(|x| x.powi(6), -1.0, 1.0, QuadOptions::default()).unwrap();
        assert!((v - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_half_line() {
        let (v, _) = integrate_to_inf(|x| (-x * x).exp(), 0.0, QuadOptions::default()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let (v, _) = integrate(|x| x.exp(), 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}
