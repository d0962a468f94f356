//! Ensemble studies: exponent calibration against series length, scatter
//! statistics between methods, crossover calibration and trend-induced
//! crossovers.
//!
//! Every study is deterministic in its seed. Ensemble member `i` of a study
//! seeded with `seed` uses the generator seed `seed ^ i` (see
//! [`member_seed`]), so any member can be regenerated on its own.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fluctuation::{
    default_scale_grid, ensemble_curves, mean_square_curve, FluctuationCurve, Method, ScaleGrid,
};
use crate::io::fmt_f64;
use crate::scaling::{fit_alpha, CrossoverDetection, CrossoverSearch, FIXED_LOWER_LIMIT};
use crate::surrogate::{
    add_trend, generate_crossover, generate_power_law, CrossoverSpec, GeneratorSpec, TrendSpec,
};

/// Histogram bin width in alpha.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;
/// Histogram support `[0, HISTOGRAM_MAX]`; values outside land in the edge bins.
pub const HISTOGRAM_MAX: f64 = 1.5;
/// A study aborts when more than this fraction of its fits fail.
pub const MAX_FAILURE_FRACTION: f64 = 0.10;

/// Generator seed of ensemble member `index`.
pub fn member_seed(study_seed: u64, index: usize) -> u64 {
    study_seed ^ index as u64
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Normalized histogram with [`HISTOGRAM_BIN_WIDTH`] bins over
/// `[0, HISTOGRAM_MAX]`, returned as `(bin_center, fraction)`.
pub fn alpha_histogram(values: &[f64]) -> Vec<(f64, f64)> {
    let n_bins = (HISTOGRAM_MAX / HISTOGRAM_BIN_WIDTH).round() as usize;
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        // nudge so values on a bin edge (0.7 / 0.05 = 13.999..) land in the upper bin
        let b = (v / HISTOGRAM_BIN_WIDTH + 1e-9).floor();
        let b = if b < 0.0 {
            0
        } else {
            (b as usize).min(n_bins - 1)
        };
        counts[b] += 1;
    }
    let total = values.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((i as f64 + 0.5) * HISTOGRAM_BIN_WIDTH, c as f64 / total))
        .collect()
}

/// Exponent statistics of one `(N, method)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub length: usize,
    pub method: Method,
    pub mean_alpha: f64,
    pub sd_alpha: f64,
    pub histogram: Vec<(f64, f64)>,
    /// Successful fits.
    pub n_series: usize,
    pub n_failed: usize,
}

/// Per-series exponents of one `(N, method)` cell, indexed by member;
/// `None` marks a failed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSample {
    pub length: usize,
    pub method: Method,
    pub alphas: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStudy {
    pub target_alpha: f64,
    pub stats: Vec<EnsembleStats>,
    pub samples: Vec<AlphaSample>,
}

/// Fitting range for the length study: `[10, N/2]`, raised to the method's
/// minimum scale when that is larger. Grid filtering clamps it further to
/// the available scales.
fn study_range(n: usize, method: Method) -> (f64, f64) {
    (
        FIXED_LOWER_LIMIT.max(method.min_scale() as f64),
        n as f64 / 2.0,
    )
}

/// Single-series exponent over `[lo, hi]` on `grid`.
fn series_alpha(
    series: &crate::series::Series,
    method: Method,
    grid: &ScaleGrid,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let values = mean_square_curve(series, method, grid)?
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let curve = FluctuationCurve {
        method,
        scales: grid.clone(),
        values,
        ensemble_size: 1,
        series_length: series.len(),
    };
    Ok(fit_alpha(&curve, lo, hi)?.alpha)
}

/// For every length and method, fits exponents of `n_series` surrogates
/// with target `target_alpha` and aggregates mean, standard deviation and a
/// histogram. All methods see the same surrogates.
pub fn alpha_vs_length_study(
    target_alpha: f64,
    lengths: &[usize],
    n_series: usize,
    methods: &[Method],
    seed: u64,
) -> Result<AlphaStudy> {
    if n_series < 10 {
        return Err(Error::Parameter(format!(
            "need at least 10 series per length (got {n_series})"
        )));
    }
    if methods.is_empty() || lengths.is_empty() {
        return Err(Error::Parameter("no methods or lengths given".into()));
    }
    if let Some(n) = lengths.iter().find(|&&n| n < 40) {
        return Err(Error::Parameter(format!("series length {n} is below 40")));
    }
    GeneratorSpec::new(lengths[0], target_alpha, seed).validate()?;

    let mut stats = Vec::new();
    let mut samples = Vec::new();
    for &n in lengths {
        let grids = methods
            .iter()
            .map(|&m| default_scale_grid(n, m))
            .collect::<Result<Vec<_>>>()?;

        let per_member: Vec<Vec<Option<f64>>> = (0..n_series)
            .into_par_iter()
            .map(|i| {
                let x =
                    generate_power_law(&GeneratorSpec::new(n, target_alpha, member_seed(seed, i)))?;
                Ok(methods
                    .iter()
                    .zip(&grids)
                    .map(|(&m, g)| {
                        let (lo, hi) = study_range(n, m);
                        series_alpha(&x, m, g, lo, hi).ok()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;

        for (k, &m) in methods.iter().enumerate() {
            let alphas: Vec<Option<f64>> = per_member.iter().map(|r| r[k]).collect();
            let ok: Vec<f64> = alphas.iter().flatten().copied().collect();
            let failed = n_series - ok.len();
            if failed as f64 > MAX_FAILURE_FRACTION * n_series as f64 || ok.is_empty() {
                return Err(Error::TooManyFailures {
                    failed,
                    total: n_series,
                });
            }
            let (mean_alpha, sd_alpha) = mean_sd(&ok);
            stats.push(EnsembleStats {
                length: n,
                method: m,
                mean_alpha,
                sd_alpha,
                histogram: alpha_histogram(&ok),
                n_series: ok.len(),
                n_failed: failed,
            });
            samples.push(AlphaSample {
                length: n,
                method: m,
                alphas,
            });
        }
    }
    Ok(AlphaStudy {
        target_alpha,
        stats,
        samples,
    })
}

impl AlphaStudy {
    pub fn stats_for(&self, length: usize, method: Method) -> Option<&EnsembleStats> {
        self.stats
            .iter()
            .find(|s| s.length == length && s.method == method)
    }

    pub fn sample_for(&self, length: usize, method: Method) -> Option<&AlphaSample> {
        self.samples
            .iter()
            .find(|s| s.length == length && s.method == method)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("N,method,mean_alpha,sd_alpha,n_series,n_failed\n");
        for s in &self.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.length,
                s.method,
                fmt_f64(s.mean_alpha),
                fmt_f64(s.sd_alpha),
                s.n_series,
                s.n_failed
            ));
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("N,method,bin_center,fraction\n");
        for s in &self.stats {
            for (c, f) in &s.histogram {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    s.length,
                    s.method,
                    fmt_f64(*c),
                    fmt_f64(*f)
                ));
            }
        }
        out
    }

    /// SD1/SD2 of `reference` against every other method at each length,
    /// over members where both fits succeeded.
    pub fn scatter(&self, reference: Method) -> Result<Vec<ScatterRow>> {
        let mut rows = Vec::new();
        let mut lengths: Vec<usize> = self.samples.iter().map(|s| s.length).collect();
        lengths.dedup();
        for n in lengths {
            let base = self.sample_for(n, reference).ok_or_else(|| {
                Error::Parameter(format!("reference method {reference} not in study"))
            })?;
            for other in self
                .samples
                .iter()
                .filter(|s| s.length == n && s.method != reference)
            {
                let (a, b): (Vec<f64>, Vec<f64>) = base
                    .alphas
                    .iter()
                    .zip(&other.alphas)
                    .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
                    .unzip();
                rows.push(ScatterRow {
                    length: n,
                    reference,
                    other: other.method,
                    stats: scatter_sd(&a, &b)?,
                });
            }
        }
        Ok(rows)
    }
}

/// Spread of paired exponents perpendicular (`sd1`) and parallel (`sd2`)
/// to the identity line.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterStats {
    pub sd1: f64,
    pub sd2: f64,
    pub pairs: Vec<(f64, f64)>,
}

/// `SD1 = sqrt(<(d - <d>)^2> / 2)` with `d = a - b`, and `SD2` likewise
/// with `a + b`; averages run over the pairs.
pub fn scatter_sd(alpha_ref: &[f64], alpha_other: &[f64]) -> Result<ScatterStats> {
    if alpha_ref.len() != alpha_other.len() {
        return Err(Error::Parameter(format!(
            "paired lists differ in length ({} vs {})",
            alpha_ref.len(),
            alpha_other.len()
        )));
    }
    if alpha_ref.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 pairs".into()));
    }
    let n = alpha_ref.len() as f64;
    let spread = |f: &dyn Fn(f64, f64) -> f64| {
        let v: Vec<f64> = alpha_ref
            .iter()
            .zip(alpha_other)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let m = v.iter().sum::<f64>() / n;
        (v.iter().map(|x| 0.5 * (x - m) * (x - m)).sum::<f64>() / n).sqrt()
    };
    Ok(ScatterStats {
        sd1: spread(&|a, b| a - b),
        sd2: spread(&|a, b| a + b),
        pairs: alpha_ref
            .iter()
            .copied()
            .zip(alpha_other.iter().copied())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub length: usize,
    pub reference: Method,
    pub other: Method,
    pub stats: ScatterStats,
}

pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("N,reference,other,sd1,sd2,n_pairs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.length,
            r.reference,
            r.other,
            fmt_f64(r.stats.sd1),
            fmt_f64(r.stats.sd2),
            r.stats.pairs.len()
        ));
    }
    out
}

pub fn scatter_pairs_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("N,reference,other,alpha_reference,alpha_other\n");
    for r in rows {
        for (a, b) in &r.stats.pairs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.length,
                r.reference,
                r.other,
                fmt_f64(*a),
                fmt_f64(*b)
            ));
        }
    }
    out
}

/// Crossover detected (or not) in one ensemble-averaged curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverCell {
    /// The controlled parameter: true crossover `s_x` or trend amplitude `A`.
    pub parameter: f64,
    pub method: Method,
    pub detection: CrossoverDetection,
}

/// Line `y = slope * x + intercept` fitted in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub method: Method,
    pub slope: f64,
    pub intercept: f64,
    pub n_cells: usize,
}

fn ols_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn method_grids(n: usize, methods: &[Method]) -> Result<Vec<(Method, ScaleGrid)>> {
    if methods.is_empty() {
        return Err(Error::Parameter("no methods given".into()));
    }
    methods
        .iter()
        .map(|&m| Ok((m, default_scale_grid(n, m)?)))
        .collect()
}

fn detect_cells(
    parameter: f64,
    curves: &[FluctuationCurve],
    search: &CrossoverSearch,
) -> Result<Vec<CrossoverCell>> {
    curves
        .iter()
        .map(|c| {
            Ok(CrossoverCell {
                parameter,
                method: c.method,
                detection: search.detect(c)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverCalibration {
    pub alpha1: f64,
    pub alpha2: f64,
    pub length: usize,
    pub n_series: usize,
    pub cells: Vec<CrossoverCell>,
    /// `ln s_x` regressed on `ln s'_x`, per method.
    pub fits: Vec<LogLogFit>,
}

/// For each true crossover `s_x`, averages `F^2` over `n_series` crossover
/// surrogates, detects the observed crossover per method with `search`,
/// and regresses `ln s_x` on `ln s'_x` over the detected cells.
pub fn crossover_calibration_study(
    alpha1: f64,
    alpha2: f64,
    s_cross_list: &[usize],
    length: usize,
    n_series: usize,
    methods: &[Method],
    seed: u64,
    search: &CrossoverSearch,
) -> Result<CrossoverCalibration> {
    if n_series == 0 || s_cross_list.is_empty() {
        return Err(Error::Parameter("empty ensemble or crossover list".into()));
    }
    if let Some(s) = s_cross_list
        .iter()
        .find(|&&s| !(s > 10 && (s as f64) < length as f64 / 10.0))
    {
        return Err(Error::Parameter(format!(
            "crossover {s} outside (10, N/10) for N = {length}"
        )));
    }
    let grids = method_grids(length, methods)?;
    let mut cells = Vec::new();
    for &s_cross in s_cross_list {
        let curves = ensemble_curves(n_series, length, &grids, |i| {
            generate_crossover(&CrossoverSpec {
                length,
                alpha1,
                alpha2,
                s_cross,
                seed: member_seed(seed, i),
            })
        })?;
        cells.extend(detect_cells(s_cross as f64, &curves, search)?);
    }
    let fits = methods
        .iter()
        .filter_map(|&m| {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.method == m)
                .filter_map(|c| {
                    c.detection
                        .found()
                        .map(|e| (e.s_observed.ln(), c.parameter.ln()))
                })
                .collect();
            ols_line(&pts).map(|(slope, intercept)| LogLogFit {
                method: m,
                slope,
                intercept,
                n_cells: pts.len(),
            })
        })
        .collect();
    Ok(CrossoverCalibration {
        alpha1,
        alpha2,
        length,
        n_series,
        cells,
        fits,
    })
}

fn cells_csv(param: &str, cells: &[CrossoverCell]) -> String {
    let mut out = format!(
        "{param},method,detected,s_observed,alpha_below,alpha_above,s_corrected,improvement\n"
    );
    for c in cells {
        match &c.detection {
            CrossoverDetection::Found(e) => out.push_str(&format!(
                "{},{},true,{},{},{},{},{}\n",
                fmt_f64(c.parameter),
                c.method,
                fmt_f64(e.s_observed),
                fmt_f64(e.alpha_below),
                fmt_f64(e.alpha_above),
                fmt_f64(e.s_corrected),
                fmt_f64(e.improvement)
            )),
            CrossoverDetection::NoCrossover { improvement, .. } => out.push_str(&format!(
                "{},{},false,,,,,{}\n",
                fmt_f64(c.parameter),
                c.method,
                fmt_f64(*improvement)
            )),
        }
    }
    out
}

fn fits_csv(fits: &[LogLogFit], slope_name: &str) -> String {
    let mut out = format!("method,{slope_name},intercept,n_cells\n");
    for f in fits {
        out.push_str(&format!(
            "{},{},{},{}\n",
            f.method,
            fmt_f64(f.slope),
            fmt_f64(f.intercept),
            f.n_cells
        ));
    }
    out
}

impl CrossoverCalibration {
    pub fn cells_csv(&self) -> String {
        cells_csv("s_cross", &self.cells)
    }

    pub fn fits_csv(&self) -> String {
        fits_csv(&self.fits, "slope")
    }

    pub fn fit_for(&self, method: Method) -> Option<&LogLogFit> {
        self.fits.iter().find(|f| f.method == method)
    }

    pub fn cell(&self, s_cross: usize, method: Method) -> Option<&CrossoverCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.parameter == s_cross as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCrossoverStudy {
    pub alpha: f64,
    pub trend_exponent: f64,
    pub length: usize,
    pub n_series: usize,
    pub cells: Vec<CrossoverCell>,
    /// `ln s'_x` regressed on `ln A`; `delta = -slope`.
    pub fits: Vec<LogLogFit>,
}

impl TrendCrossoverStudy {
    pub fn delta(&self, method: Method) -> Option<f64> {
        self.fits
            .iter()
            .find(|f| f.method == method)
            .map(|f| -f.slope)
    }

    pub fn cell(&self, amplitude: f64, method: Method) -> Option<&CrossoverCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.parameter == amplitude)
    }

    pub fn cells_csv(&self) -> String {
        cells_csv("amplitude", &self.cells)
    }

    pub fn fits_csv(&self) -> String {
        let mut out = String::from("method,delta,slope,intercept,n_cells\n");
        for f in &self.fits {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                f.method,
                fmt_f64(-f.slope),
                fmt_f64(f.slope),
                fmt_f64(f.intercept),
                f.n_cells
            ));
        }
        out
    }
}

/// Ensemble curves of unit-variance surrogates plus the trend
/// `A (i/N)^q`. Members share seeds across amplitudes.
pub fn trend_ensemble_curves(
    alpha: f64,
    trend: TrendSpec,
    length: usize,
    n_series: usize,
    grids: &[(Method, ScaleGrid)],
    seed: u64,
) -> Result<Vec<FluctuationCurve>> {
    ensemble_curves(n_series, length, grids, |i| {
        let x = generate_power_law(&GeneratorSpec::new(length, alpha, member_seed(seed, i)))?;
        add_trend(&x, &trend)
    })
}

/// For each amplitude `A`, detects the trend-induced crossover per method
/// and fits `s'_x ~ A^-delta`.
pub fn trend_crossover_study(
    alpha: f64,
    trend_exponent: f64,
    amplitudes: &[f64],
    length: usize,
    n_series: usize,
    methods: &[Method],
    seed: u64,
    search: &CrossoverSearch,
) -> Result<TrendCrossoverStudy> {
    if n_series == 0 || amplitudes.is_empty() {
        return Err(Error::Parameter("empty ensemble or amplitude list".into()));
    }
    if amplitudes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::Parameter("trend amplitudes must be positive".into()));
    }
    let lo = amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = amplitudes.iter().copied().fold(0.0, f64::max);
    if hi / lo < 10.0 - 1e-9 {
        return Err(Error::Parameter(format!(
            "amplitudes must span at least one decade (got {lo}..{hi})"
        )));
    }
    let grids = method_grids(length, methods)?;
    let mut cells = Vec::new();
    for &a in amplitudes {
        let trend = TrendSpec {
            amplitude: a,
            exponent: trend_exponent,
        };
        let curves = trend_ensemble_curves(alpha, trend, length, n_series, &grids, seed)?;
        cells.extend(detect_cells(a, &curves, search)?);
    }
    let fits = methods
        .iter()
        .filter_map(|&m| {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.method == m)
                .filter_map(|c| {
                    c.detection
                        .found()
                        .map(|e| (c.parameter.ln(), e.s_observed.ln()))
                })
                .collect();
            ols_line(&pts).map(|(slope, intercept)| LogLogFit {
                method: m,
                slope,
                intercept,
                n_cells: pts.len(),
            })
        })
        .collect();
    Ok(TrendCrossoverStudy {
        alpha,
        trend_exponent,
        length,
        n_series,
        cells,
        fits,
    })
}
