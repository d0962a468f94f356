//! Seeded surrogate series with prescribed long-range correlations.
//!
//! Series are produced by spectral shaping of Gaussian white noise: draw
//! `N'` standard normal values (`N'` the smallest power of two `>= N`),
//! transform, multiply the amplitude at frequency `f = k/N'` by a power of
//! `f`, transform back and keep the first `N` samples. A target fluctuation
//! exponent `alpha` corresponds to the power-spectrum exponent
//! `beta = 2 alpha - 1`, i.e. amplitudes scale as `f^(-beta/2)`.
//!
//! Randomness comes from ChaCha20 seeded with [`rand::SeedableRng::seed_from_u64`];
//! normal variates use the ziggurat sampler of `rand_distr::StandardNormal`.
//! The same seed always reproduces the same series.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::series::Series;

/// Lowest supported target exponent (exclusive).
pub const ALPHA_MIN: f64 = 0.0;
/// Highest supported target exponent (exclusive).
pub const ALPHA_MAX: f64 = 1.5;

/// Parameters of a single-exponent surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub length: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Rescale to zero mean and unit variance.
    pub normalize: bool,
}

impl GeneratorSpec {
    pub fn new(length: usize, alpha: f64, seed: u64) -> Self {
        Self {
            length,
            alpha,
            seed,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_length(self.length)?;
        check_alpha("alpha", self.alpha)
    }
}

/// Parameters of a surrogate whose exponent changes from `alpha1` (scales
/// below `s_cross`) to `alpha2` (scales above).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverSpec {
    pub length: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub s_cross: usize,
    pub seed: u64,
}

impl CrossoverSpec {
    pub fn validate(&self) -> Result<()> {
        check_length(self.length)?;
        check_alpha("alpha1", self.alpha1)?;
        check_alpha("alpha2", self.alpha2)?;
        if self.s_cross <= 1 || self.s_cross >= self.length {
            return Err(Error::Parameter(format!(
                "s_cross must satisfy 1 < s_cross < N (got {} with N = {})",
                self.s_cross, self.length
            )));
        }
        Ok(())
    }
}

/// Additive trend `A * (i/N)^q`, `i = 1..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendSpec {
    pub amplitude: f64,
    pub exponent: f64,
}

impl TrendSpec {
    pub fn linear(amplitude: f64) -> Self {
        Self {
            amplitude,
            exponent: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::Parameter("trend amplitude must be finite".into()));
        }
        if !(self.exponent.is_finite() && self.exponent >= 0.0) {
            return Err(Error::Parameter(format!(
                "trend exponent must be >= 0 (got {})",
                self.exponent
            )));
        }
        Ok(())
    }
}

fn check_length(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("length must be positive".into()));
    }
    Ok(())
}

fn check_alpha(name: &str, alpha: f64) -> Result<()> {
    if !(alpha > ALPHA_MIN && alpha < ALPHA_MAX) {
        return Err(Error::Parameter(format!(
            "{name} must lie in ({ALPHA_MIN}, {ALPHA_MAX}) (got {alpha})"
        )));
    }
    Ok(())
}

/// Spectral exponent for a fluctuation exponent.
pub fn spectral_exponent(alpha: f64) -> f64 {
    2.0 * alpha - 1.0
}

/// Shapes `N'` seeded Gaussian values in frequency space. `gain(k, n_fft)`
/// returns the amplitude multiplier for the frequency `k/n_fft`, `k >= 1`.
fn filtered_noise(length: usize, seed: u64, gain: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let n_fft = length.next_power_of_two();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex64> = (0..n_fft)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n_fft).process(&mut buf);

    buf[0] = Complex64::new(0.0, 0.0);
    for (k, c) in buf.iter_mut().enumerate().skip(1) {
        // conjugate bins share |f|, keeping the inverse real
        let kk = k.min(n_fft - k);
        *c *= gain(kk, n_fft);
    }

    planner.plan_fft_inverse(n_fft).process(&mut buf);
    let scale = 1.0 / n_fft as f64;
    buf.iter().take(length).map(|c| c.re * scale).collect()
}

/// Rescales to zero mean and unit population variance. Leaves a series with
/// zero variance untouched apart from mean removal.
fn normalize(values: &mut [f64]) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter_mut().for_each(|v| *v -= m);
    let sd = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        values.iter_mut().for_each(|v| *v /= sd);
    }
}

/// Long-range-correlated Gaussian surrogate with fluctuation exponent `alpha`.
pub fn generate_power_law(spec: &GeneratorSpec) -> Result<Series> {
    spec.validate()?;
    let half_beta = spectral_exponent(spec.alpha) / 2.0;
    let mut values = filtered_noise(spec.length, spec.seed, |k, n_fft| {
        (k as f64 / n_fft as f64).powf(-half_beta)
    });
    if spec.normalize {
        normalize(&mut values);
    }
    Ok(Series::from_trusted(values))
}

/// Surrogate with a crossover at `s_cross`. The power spectrum is multiplied
/// by `(f/f_x)^(-beta2)` below `f_x = 1/s_cross` and by `(f/f_x)^(-beta1)`
/// above it, with `f_x` snapped to the nearest grid frequency. The result is
/// normalized to zero mean and unit variance.
pub fn generate_crossover(spec: &CrossoverSpec) -> Result<Series> {
    spec.validate()?;
    let n_fft = spec.length.next_power_of_two();
    let k_cross = ((n_fft as f64 / spec.s_cross as f64).round() as usize).max(1);
    let half_beta1 = spectral_exponent(spec.alpha1) / 2.0;
    let half_beta2 = spectral_exponent(spec.alpha2) / 2.0;
    let mut values = filtered_noise(spec.length, spec.seed, |k, _| {
        let ratio = k as f64 / k_cross as f64;
        if k < k_cross {
            ratio.powf(-half_beta2)
        } else {
            ratio.powf(-half_beta1)
        }
    });
    normalize(&mut values);
    Ok(Series::from_trusted(values))
}

/// `x'_i = x_i + A (i/N)^q` for `i = 1..=N`.
pub fn add_trend(series: &Series, trend: &TrendSpec) -> Result<Series> {
    trend.validate()?;
    let n = series.len() as f64;
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| x + trend.amplitude * ((i + 1) as f64 / n).powf(trend.exponent))
        .collect::<Vec<_>>();
    Series::new(values)
}

/// Cuts the series into consecutive boxes of `box_len` samples and permutes
/// the complete boxes; a trailing partial box stays in place.
pub fn shuffle_boxes(series: &Series, box_len: usize, seed: u64) -> Result<Series> {
    let n = series.len();
    if box_len < 1 || box_len > n {
        return Err(Error::Parameter(format!(
            "box length must satisfy 1 <= s_u <= N (got {box_len} with N = {n})"
        )));
    }
    let n_boxes = n / box_len;
    let mut order: Vec<usize> = (0..n_boxes).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));

    let v = series.values();
    let mut out = Vec::with_capacity(n);
    for b in order {
        out.extend_from_slice(&v[b * box_len..(b + 1) * box_len]);
    }
    out.extend_from_slice(&v[n_boxes * box_len..]);
    Ok(Series::from_trusted(out))
}

/// Keeps samples `i = s_l, 2 s_l, ...` (1-based).
pub fn downsample(series: &Series, factor: usize) -> Result<Series> {
    if factor == 0 || series.len() / factor == 0 {
        return Err(Error::Parameter(format!(
            "downsampling factor {factor} leaves no samples from {}",
            series.len()
        )));
    }
    let values = series
        .values()
        .iter()
        .skip(factor - 1)
        .step_by(factor)
        .copied()
        .collect();
    Ok(Series::from_trusted(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{autocorrelation, series_stats};

    #[test]
    fn alpha_range_is_enforced() {
        for a in [0.0, -0.2, 1.5, 2.0, f64::NAN] {
            assert!(generate_power_law(&GeneratorSpec::new(128, a, 1)).is_err());
        }
        assert!(generate_power_law(&GeneratorSpec::new(128, 1.49, 1)).is_ok());
    }

    #[test]
    fn same_seed_same_bits() {
        let spec = GeneratorSpec::new(1000, 0.8, 42);
        let a = generate_power_law(&spec).unwrap();
        let b = generate_power_law(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_power_law(&GeneratorSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn normalization_is_exact() {
        for n in [100, 1000, 5000] {
            let x = generate_power_law(&GeneratorSpec::new(n, 0.9, 7)).unwrap();
            let (m, sd) = series_stats(&x);
            assert!(m.abs() < 1e-12, "mean {m}");
            assert!((sd * sd - 1.0).abs() < 1e-9, "var {}", sd * sd);
        }
    }

    #[test]
    fn unnormalized_output_keeps_length() {
        let spec = GeneratorSpec {
            normalize: false,
            ..GeneratorSpec::new(1000, 0.6, 3)
        };
        assert_eq!(generate_power_law(&spec).unwrap().len(), 1000);
    }

    #[test]
    fn large_unit_variance_surrogate_stats() {
        let x = generate_power_law(&GeneratorSpec::new(50_000, 0.7, 11)).unwrap();
        let (m, sd) = series_stats(&x);
        assert!(m.abs() < 0.02 && (sd - 1.0).abs() < 0.02);
    }

    #[test]
    fn white_noise_lag_one_correlation_is_small() {
        // C(1) of white noise has standard deviation 1/sqrt(N): the seed
        // average must vanish and 3-sigma excursions must stay rare.
        let n = 4096;
        let seeds = 200;
        let bound = 3.0 / (n as f64).sqrt();
        let c: Vec<f64> = (0..seeds)
            .map(|seed| {
                let x = generate_power_law(&GeneratorSpec::new(n, 0.5, seed)).unwrap();
                autocorrelation(&x, 1).unwrap()
            })
            .collect();
        let mean = c.iter().sum::<f64>() / seeds as f64;
        assert!(
            mean.abs() <= bound / (seeds as f64).sqrt(),
            "mean C(1) = {mean}"
        );
        let outside = c.iter().filter(|v| v.abs() > bound).count();
        assert!(outside <= 3, "{outside} of {seeds} seeds beyond 3 sigma");
    }

    #[test]
    fn crossover_spec_validation() {
        let ok = CrossoverSpec {
            length: 1000,
            alpha1: 0.8,
            alpha2: 0.5,
            s_cross: 100,
            seed: 0,
        };
        assert!(generate_crossover(&ok).is_ok());
        for s in [0, 1, 1000, 2000] {
            assert!(generate_crossover(&CrossoverSpec { s_cross: s, ..ok }).is_err());
        }
    }

    #[test]
    fn trend_examples() {
        let x = Series::new(vec![0.0; 100]).unwrap();
        let y = add_trend(&x, &TrendSpec::linear(10.0)).unwrap();
        assert_eq!(y.values()[99], 10.0);
        for (i, v) in y.values().iter().enumerate() {
            assert!((v - 10.0 * (i + 1) as f64 / 100.0).abs() < 1e-12);
        }
        let z = generate_power_law(&GeneratorSpec::new(500, 0.7, 1)).unwrap();
        assert_eq!(add_trend(&z, &TrendSpec::linear(0.0)).unwrap(), z);
        assert!(add_trend(
            &z,
            &TrendSpec {
                amplitude: 1.0,
                exponent: -1.0
            }
        )
        .is_err());
    }

    #[test]
    fn shuffle_single_box_is_identity() {
        let x = generate_power_law(&GeneratorSpec::new(300, 0.7, 5)).unwrap();
        assert_eq!(shuffle_boxes(&x, 300, 9).unwrap(), x);
        assert!(shuffle_boxes(&x, 0, 9).is_err());
        assert!(shuffle_boxes(&x, 301, 9).is_err());
    }

    #[test]
    fn shuffle_keeps_partial_box_in_place() {
        let x = Series::new((1..=10).map(f64::from).collect()).unwrap();
        let y = shuffle_boxes(&x, 3, 1).unwrap();
        assert_eq!(y.values()[9], 10.0);
        let mut sorted = y.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, x.values());
        for chunk in y.values()[..9].chunks(3) {
            assert_eq!(chunk[1], chunk[0] + 1.0);
            assert_eq!(chunk[2], chunk[0] + 2.0);
        }
    }

    #[test]
    fn downsample_examples() {
        let x = Series::new((1..=10).map(f64::from).collect()).unwrap();
        assert_eq!(downsample(&x, 1).unwrap(), x);
        assert_eq!(downsample(&x, 3).unwrap().values(), &[3.0, 6.0, 9.0]);
        assert_eq!(downsample(&x, 10).unwrap().values(), &[10.0]);
        assert!(downsample(&x, 11).is_err());
        assert!(downsample(&x, 0).is_err());
    }
}
