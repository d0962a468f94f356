//! Definitional reference implementations used as oracles. They follow the
//! textbook formulas directly (per-segment loops, dense least squares via
//! QR) and share no code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub fn profile(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut acc = 0.0;
    x.iter()
        .map(|v| {
            acc += v - mean;
            acc
        })
        .collect()
}

/// `X(n)` with the convention `X(0) = 0`, 1-based.
fn at(xp: &[f64], n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        xp[n - 1]
    }
}

pub fn fa_sq(x: &[f64], s: usize) -> f64 {
    let xp = profile(x);
    let ns = x.len() / s;
    (1..=ns)
        .map(|nu| {
            let d = at(&xp, (nu - 1) * s) - at(&xp, nu * s);
            d * d
        })
        .sum::<f64>()
        / ns as f64
}

pub fn rs(x: &[f64], s: usize) -> f64 {
    let ns = x.len() / s;
    let mut total = 0.0;
    for nu in 0..ns {
        let seg = &x[nu * s..(nu + 1) * s];
        let m = seg.iter().sum::<f64>() / s as f64;
        let walk: Vec<f64> = (1..=s)
            .map(|k| seg[..k].iter().map(|v| v - m).sum())
            .collect();
        let r = walk.iter().cloned().fold(f64::MIN, f64::max)
            - walk.iter().cloned().fold(f64::MAX, f64::min);
        let sd = (seg.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / s as f64).sqrt();
        total += r / sd;
    }
    total / ns as f64
}

/// Least-squares residual of `y` against a degree-`p` polynomial in the
/// segment position, via Householder QR of the Vandermonde matrix.
pub fn poly_residual(y: &[f64], p: usize) -> Vec<f64> {
    let s = y.len();
    let half = (s as f64 - 1.0) / 2.0;
    let a = DMatrix::from_fn(s, p + 1, |i, k| {
        ((i as f64 - half) / half.max(1.0)).powi(k as i32)
    });
    let b = DVector::from_column_slice(y);
    let qr = a.clone().qr();
    let coef = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * &b))
        .expect("full-rank design");
    (b - a * coef).iter().copied().collect()
}

pub fn dfa_sq(x: &[f64], s: usize, p: usize) -> f64 {
    let xp = profile(x);
    let ns = x.len() / s;
    let mut acc = 0.0;
    for nu in 0..ns {
        let r = poly_residual(&xp[nu * s..(nu + 1) * s], p);
        acc += r.iter().map(|v| v * v).sum::<f64>();
    }
    acc / (ns * s) as f64
}

pub fn mdfa_sq(x: &[f64], s: usize, p: usize) -> f64 {
    let xp = profile(x);
    let ns = x.len() / s;
    let h = s / 2;
    let mut acc = 0.0;
    let mut count = 0usize;
    for nu in 0..ns {
        let r = poly_residual(&xp[nu * s..(nu + 1) * s], p);
        for n in 0..s - h {
            let d = r[n + h] - r[n];
            acc += d * d;
            count += 1;
        }
    }
    acc / count as f64
}

pub fn cma_sq(x: &[f64], s: usize) -> f64 {
    let xp = profile(x);
    let n = x.len();
    let h = (s - 1) / 2;
    let mut acc = 0.0;
    let mut count = 0usize;
    // 1-based centre m with the full window [m - h, m + h] inside [1, N]
    for m in (h + 1)..=(n - h) {
        let avg = ((m - h)..=(m + h)).map(|j| at(&xp, j)).sum::<f64>() / s as f64;
        let r = at(&xp, m) - avg;
        acc += r * r;
        count += 1;
    }
    acc / count as f64
}

pub fn bma_sq(x: &[f64], s: usize) -> f64 {
    let xp = profile(x);
    let n = x.len();
    let mut acc = 0.0;
    let mut count = 0usize;
    for m in s..=n {
        let avg = (0..s).map(|j| at(&xp, m - j)).sum::<f64>() / s as f64;
        let r = at(&xp, m) - avg;
        acc += r * r;
        count += 1;
    }
    acc / count as f64
}

/// `C(s)` by the double loop over all pairs `(i, i + s)`.
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j == i + lag {
                acc += (x[i] - mean) * (x[j] - mean);
            }
        }
    }
    acc / ((n - lag) as f64 * var)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Plain OLS slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
