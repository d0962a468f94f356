//! Series representation, the profile transform and the direct
//! autocorrelation function.

use crate::error::{Error, Result};

/// A finite, equidistant, real-valued record.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    label: Option<String>,
}

impl Series {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("series is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "value at index {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self {
            values,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a valid series holds at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
        Self {
            values,
            label: None,
        }
    }
}

/// Cumulative sum of the mean-removed series: the random walk `X(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    source_mean: f64,
}

impl Profile {
    /// `X(1..=N)`; index 0 holds `X(1)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The mean that was subtracted before summation.
    pub fn source_mean(&self) -> f64 {
        self.source_mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Two-pass mean: the correction pass removes most of the rounding of the
/// first, and makes the mean of a constant series exactly that constant.
fn mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    m + values.iter().map(|x| x - m).sum::<f64>() / n
}

/// `X(n) = sum_{i<=n} (x_i - <x>)`.
pub fn compute_profile(series: &Series) -> Profile {
    let m = mean(series.values());
    let mut acc = 0.0;
    let values = series
        .values()
        .iter()
        .map(|&x| {
            acc += x - m;
            acc
        })
        .collect();
    Profile {
        values,
        source_mean: m,
    }
}

/// Arithmetic mean and population standard deviation.
pub fn series_stats(series: &Series) -> (f64, f64) {
    let v = series.values();
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

/// Autocorrelation at `lag`, normalized by `(N - lag)` times the population
/// variance, with the global mean removed.
pub fn autocorrelation(series: &Series, lag: usize) -> Result<f64> {
    let v = series.values();
    let n = v.len();
    if lag >= n {
        return Err(Error::Range { lag, len: n });
    }
    let m = mean(v);
    let centered: Vec<f64> = v.iter().map(|x| x - m).collect();
    let var = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    if lag == 0 {
        return Ok(1.0);
    }
    let cross: f64 = centered
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum();
    Ok(cross / ((n - lag) as f64 * var))
}
