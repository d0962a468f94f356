//! Single-scale fluctuation functions.
//!
//! Each method has a `*_mean_square` form returning `F^2(s)`, which is what
//! ensemble averaging accumulates, and a public form returning `F(s)`.
//! Profile indices are 0-based here: `profile[n - 1]` holds `X(n)`.

use super::poly::SegmentBasis;
use crate::error::{Error, Result};
use crate::series::{Profile, Series};

/// Neumaier-compensated running sum, used for sliding windows so the
/// rounding error stays bounded by the current window magnitude instead of
/// growing with the series length.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn segments_needed(n: usize, s: usize) -> Result<usize> {
    let n_seg = n / s.max(1);
    if n_seg < 2 {
        return Err(Error::InsufficientData(format!(
            "scale {s} leaves {n_seg} segment(s) in a series of length {n}; at least 2 are needed"
        )));
    }
    Ok(n_seg)
}

fn check_min_scale(s: usize, min: usize, what: &str) -> Result<()> {
    if s < min {
        return Err(Error::Parameter(format!(
            "{what} requires scale >= {min} (got {s})"
        )));
    }
    Ok(())
}

pub(crate) fn fa_mean_square(profile: &Profile, s: usize) -> Result<f64> {
    check_min_scale(s, 4, "FA")?;
    let x = profile.values();
    let n_seg = segments_needed(x.len(), s)?;
    let mut acc = 0.0;
    let mut prev = 0.0;
    for nu in 1..=n_seg {
        let cur = x[nu * s - 1];
        acc += (prev - cur) * (prev - cur);
        prev = cur;
    }
    Ok(acc / n_seg as f64)
}

/// Fluctuation analysis: RMS of profile increments over non-overlapping
/// segments, `X(0) = 0`.
pub fn fa(profile: &Profile, s: usize) -> Result<f64> {
    fa_mean_square(profile, s).map(f64::sqrt)
}

/// Mean rescaled range over the non-overlapping segments of length `s`.
///
/// Within a segment the values are mean-removed and summed; `R` is the range
/// of that partial-sum walk and `S` the population standard deviation of the
/// segment values.
pub fn rs(series: &Series, s: usize) -> Result<f64> {
    check_min_scale(s, 4, "R/S")?;
    let x = series.values();
    let n_seg = segments_needed(x.len(), s)?;
    let mut total = 0.0;
    for (nu, seg) in x.chunks_exact(s).take(n_seg).enumerate() {
        let m = seg.iter().sum::<f64>() / s as f64;
        let mut walk = 0.0_f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ss = 0.0;
        for &v in seg {
            let d = v - m;
            ss += d * d;
            walk += d;
            lo = lo.min(walk);
            hi = hi.max(walk);
        }
        let sd = (ss / s as f64).sqrt();
        if sd <= 0.0 {
            return Err(Error::DegenerateSegment {
                segment: nu,
                scale: s,
            });
        }
        total += (hi - lo) / sd;
    }
    Ok(total / n_seg as f64)
}

pub(crate) fn rs_mean_square(series: &Series, s: usize) -> Result<f64> {
    rs(series, s).map(|f| f * f)
}

fn check_poly_scale(s: usize, order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::Parameter(
            "detrending order must be at least 1".into(),
        ));
    }
    if s < order + 2 {
        return Err(Error::Underdetermined { scale: s, order });
    }
    Ok(())
}

pub(crate) fn dfa_mean_square_with(profile: &Profile, basis: &SegmentBasis) -> Result<f64> {
    let s = basis.len();
    let x = profile.values();
    let n_seg = segments_needed(x.len(), s)?;
    let mut resid = vec![0.0; s];
    let mut acc = 0.0;
    for seg in x.chunks_exact(s).take(n_seg) {
        basis.residuals_into(seg, &mut resid);
        acc += resid.iter().map(|r| r * r).sum::<f64>();
    }
    Ok(acc / (n_seg * s) as f64)
}

pub(crate) fn dfa_mean_square(profile: &Profile, s: usize, order: usize) -> Result<f64> {
    check_poly_scale(s, order)?;
    segments_needed(profile.len(), s)?;
    dfa_mean_square_with(profile, &SegmentBasis::new(s, order))
}

/// Detrended fluctuation analysis of order `order` (DFA-p).
///
/// Segments run forward from the start of the profile; a trailing remainder
/// shorter than `s` is ignored and the mean is taken over covered points.
pub fn dfa(profile: &Profile, s: usize, order: usize) -> Result<f64> {
    dfa_mean_square(profile, s, order).map(f64::sqrt)
}

pub(crate) fn mdfa_mean_square_with(profile: &Profile, basis: &SegmentBasis) -> Result<f64> {
    let s = basis.len();
    let half = s / 2;
    let x = profile.values();
    let n_seg = segments_needed(x.len(), s)?;
    let mut resid = vec![0.0; s];
    let mut acc = 0.0;
    for seg in x.chunks_exact(s).take(n_seg) {
        basis.residuals_into(seg, &mut resid);
        let (a, b) = resid.split_at(half);
        acc += a.iter().zip(b).map(|(u, v)| (v - u) * (v - u)).sum::<f64>();
    }
    Ok(acc / (n_seg * half) as f64)
}

fn check_mdfa_scale(s: usize, order: usize) -> Result<()> {
    if s % 2 != 0 {
        return Err(Error::Parameter(format!(
            "MDFA requires an even scale (got {s})"
        )));
    }
    check_poly_scale(s, order)?;
    check_min_scale(s, 4, "MDFA")
}

pub(crate) fn mdfa_mean_square(profile: &Profile, s: usize, order: usize) -> Result<f64> {
    check_mdfa_scale(s, order)?;
    segments_needed(profile.len(), s)?;
    mdfa_mean_square_with(profile, &SegmentBasis::new(s, order))
}

/// Modified DFA: RMS of the half-segment increment
/// `X~(n + s/2) - X~(n)` of the per-segment detrended profile, averaged over
/// the `s/2` valid positions of every segment.
pub fn mdfa(profile: &Profile, s: usize, order: usize) -> Result<f64> {
    mdfa_mean_square(profile, s, order).map(f64::sqrt)
}

pub(crate) fn cma_mean_square(profile: &Profile, s: usize) -> Result<f64> {
    if s % 2 == 0 {
        return Err(Error::Parameter(format!(
            "CMA requires an odd scale (got {s})"
        )));
    }
    check_min_scale(s, 3, "CMA")?;
    let x = profile.values();
    let n = x.len();
    if s > n / 2 {
        return Err(Error::InsufficientData(format!(
            "CMA scale {s} exceeds N/2 for N = {n}"
        )));
    }
    let h = (s - 1) / 2;
    let inv_s = 1.0 / s as f64;
    let mut window = CompensatedSum::default();
    x[..s].iter().for_each(|&v| window.add(v));
    let mut acc = 0.0;
    let count = n - 2 * h;
    for c in h..n - h {
        if c > h {
            window.add(x[c + h]);
            window.add(-x[c - h - 1]);
        }
        let r = x[c] - window.value() * inv_s;
        acc += r * r;
    }
    Ok(acc / count as f64)
}

/// Centered moving average: residual of the profile against its symmetric
/// running mean of odd width `s`, evaluated where the full window fits.
pub fn cma(profile: &Profile, s: usize) -> Result<f64> {
    cma_mean_square(profile, s).map(f64::sqrt)
}

pub(crate) fn bma_mean_square(profile: &Profile, s: usize) -> Result<f64> {
    check_min_scale(s, 2, "BMA")?;
    let x = profile.values();
    let n = x.len();
    if s > n / 2 {
        return Err(Error::InsufficientData(format!(
            "BMA scale {s} exceeds N/2 for N = {n}"
        )));
    }
    let inv_s = 1.0 / s as f64;
    let mut window = CompensatedSum::default();
    x[..s].iter().for_each(|&v| window.add(v));
    let mut acc = 0.0;
    for end in s - 1..n {
        if end >= s {
            window.add(x[end]);
            window.add(-x[end - s]);
        }
        let r = x[end] - window.value() * inv_s;
        acc += r * r;
    }
    Ok(acc / (n - s + 1) as f64)
}

/// Backward moving average: residual of the profile against the mean of
/// the `s` most recent profile values, for `n >= s` only.
pub fn bma(profile: &Profile, s: usize) -> Result<f64> {
    bma_mean_square(profile, s).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::compute_profile;

    fn profile_of(values: Vec<f64>) -> Profile {
        compute_profile(&Series::new(values).unwrap())
    }

    #[test]
    fn constant_series_gives_zero() {
        let p = profile_of(vec![3.5; 64]);
        assert_eq!(fa(&p, 8).unwrap(), 0.0);
        assert_eq!(bma(&p, 8).unwrap(), 0.0);
        assert_eq!(cma(&p, 9).unwrap(), 0.0);
        assert_eq!(dfa(&p, 8, 1).unwrap(), 0.0);
    }

    #[test]
    fn scale_parity_and_order_errors() {
        let p = profile_of((0..100).map(|i| (i as f64 * 0.7).sin()).collect());
        assert!(matches!(cma(&p, 10), Err(Error::Parameter(_))));
        assert!(matches!(mdfa(&p, 11, 1), Err(Error::Parameter(_))));
        assert!(matches!(dfa(&p, 2, 1), Err(Error::Underdetermined { .. })));
        assert!(matches!(dfa(&p, 3, 2), Err(Error::Underdetermined { .. })));
        assert!(matches!(dfa(&p, 10, 0), Err(Error::Parameter(_))));
        assert!(matches!(fa(&p, 51), Err(Error::InsufficientData(_))));
        assert!(matches!(dfa(&p, 60, 1), Err(Error::InsufficientData(_))));
        assert!(matches!(bma(&p, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn rs_is_invariant_to_linear_slope() {
        let seg = |slope: f64| -> f64 {
            let x = Series::new((0..40).map(|i| slope * i as f64).collect()).unwrap();
            rs(&x, 20).unwrap()
        };
        let base = seg(1.0);
        for slope in [0.01, 3.0, 250.0] {
            assert!((seg(slope) - base).abs() < 1e-12 * base);
        }
    }

    #[test]
    fn rs_reports_degenerate_segment() {
        let mut v: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        v.extend(std::iter::repeat_n(1.0, 10));
        let x = Series::new(v).unwrap();
        assert_eq!(
            rs(&x, 10),
            Err(Error::DegenerateSegment {
                segment: 2,
                scale: 10
            })
        );
    }

    #[test]
    fn cma_vanishes_on_linear_profile() {
        // x = [1 - N, 1, 1, ...] has zero mean and profile X(n) = n - N
        let n = 200;
        let mut v = vec![1.0; n];
        v[0] = 1.0 - n as f64;
        let p = profile_of(v);
        for (i, x) in p.values().iter().enumerate() {
            assert_eq!(*x, (i + 1) as f64 - n as f64);
        }
        for s in [3, 7, 51, 99] {
            assert!(cma(&p, s).unwrap() < 1e-12, "s = {s}");
        }
        assert!(bma(&p, 4).unwrap() > 1.0);
    }
}
