//! Python bindings. Series are passed as sequences of floats and methods as
//! names such as `"dfa1"`, `"cma"` or `"mdfa2"`.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dfakit_core as core;
use dfakit_core::experiments;
use dfakit_core::scaling::{CrossoverSearch, DetectionCriteria};
use dfakit_core::{Method, ScaleGrid, Series};

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(_) => PyOSError::new_err(e.to_string()),
        core::Error::Parameter(_)
        | core::Error::InvalidInput(_)
        | core::Error::Range { .. }
        | core::Error::Parse(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn series(values: Vec<f64>) -> PyResult<Series> {
    Series::new(values).map_err(to_py)
}

fn method(name: &str) -> PyResult<Method> {
    let m: Method = name.parse().map_err(to_py)?;
    m.validate().map_err(to_py)?;
    Ok(m)
}

fn grid(scales: Option<Vec<usize>>, n: usize, m: Method) -> PyResult<ScaleGrid> {
    match scales {
        Some(s) => {
            let g = ScaleGrid::new(s).map_err(to_py)?;
            g.validate_for(n, m).map_err(to_py)?;
            Ok(g)
        }
        None => core::default_scale_grid(n, m).map_err(to_py),
    }
}

/// Result of a straight-line fit of `ln F` against `ln s`.
#[pyclass(frozen, get_all, skip_from_py_object, module = "dfakit")]
#[derive(Clone)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub intercept: f64,
    pub fit_range: (f64, f64),
    pub residual_rms: f64,
    pub n_points: usize,
}

#[pymethods]
impl AlphaEstimate {
    fn __repr__(&self) -> String {
        format!(
            "AlphaEstimate(alpha={:.6}, fit_range=({}, {}), n_points={})",
            self.alpha, self.fit_range.0, self.fit_range.1, self.n_points
        )
    }
}

impl From<core::AlphaEstimate> for AlphaEstimate {
    fn from(e: core::AlphaEstimate) -> Self {
        Self {
            alpha: e.alpha,
            intercept: e.intercept,
            fit_range: e.fit_range,
            residual_rms: e.residual_rms,
            n_points: e.n_points,
        }
    }
}

/// Outcome of a crossover search. `found` is false when one power law
/// explains the curve; the estimate fields are then `None`.
#[pyclass(frozen, get_all, skip_from_py_object, module = "dfakit")]
#[derive(Clone)]
pub struct Crossover {
    pub found: bool,
    pub s_observed: Option<f64>,
    pub s_corrected: Option<f64>,
    pub alpha_below: Option<f64>,
    pub alpha_above: Option<f64>,
    pub improvement: f64,
}

#[pymethods]
impl Crossover {
    fn __repr__(&self) -> String {
        match (self.found, self.s_observed) {
            (true, Some(s)) => format!(
                "Crossover(s_observed={s:.1}, improvement={:.3})",
                self.improvement
            ),
            _ => format!(
                "Crossover(found=False, improvement={:.3})",
                self.improvement
            ),
        }
    }
}

impl From<core::CrossoverDetection> for Crossover {
    fn from(d: core::CrossoverDetection) -> Self {
        match d {
            core::CrossoverDetection::Found(e) => Self {
                found: true,
                s_observed: Some(e.s_observed),
                s_corrected: Some(e.s_corrected),
                alpha_below: Some(e.alpha_below),
                alpha_above: Some(e.alpha_above),
                improvement: e.improvement,
            },
            core::CrossoverDetection::NoCrossover { improvement, .. } => Self {
                found: false,
                s_observed: None,
                s_corrected: None,
                alpha_below: None,
                alpha_above: None,
                improvement,
            },
        }
    }
}

/// Fluctuation function `F(s)` on a grid of scales.
#[pyclass(frozen, skip_from_py_object, module = "dfakit")]
#[derive(Clone)]
pub struct FluctuationCurve {
    inner: core::FluctuationCurve,
}

#[pymethods]
impl FluctuationCurve {
    /// Curve from stored `(s, F)` data.
    #[new]
    fn new(
        method_name: &str,
        scales: Vec<usize>,
        values: Vec<f64>,
        series_length: usize,
    ) -> PyResult<Self> {
        let inner = core::FluctuationCurve::from_points(
            method(method_name)?,
            scales,
            values,
            series_length,
        )
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.method.to_string()
    }

    #[getter]
    fn scales(&self) -> Vec<usize> {
        self.inner.scales.scales().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn series_length(&self) -> usize {
        self.inner.series_length
    }

    #[getter]
    fn ensemble_size(&self) -> usize {
        self.inner.ensemble_size
    }

    /// Fits `alpha` over `[s_lo, s_hi]`.
    fn fit(&self, s_lo: f64, s_hi: f64) -> PyResult<AlphaEstimate> {
        core::fit_alpha(&self.inner, s_lo, s_hi)
            .map(Into::into)
            .map_err(to_py)
    }

    /// `(s, slope)` pairs of neighbouring-point slopes.
    fn local_slopes(&self) -> PyResult<Vec<(f64, f64)>> {
        core::local_slopes(&self.inner).map_err(to_py)
    }

    /// Searches for one crossover; the window defaults to `[10, N/4]` and
    /// is re-centred on the knot unless `tracking` is `None`.
    #[pyo3(signature = (search_lo=None, search_hi=None, tracking=Some(10.0), min_improvement=0.05, min_slope_change=0.1))]
    fn detect_crossover(
        &self,
        search_lo: Option<f64>,
        search_hi: Option<f64>,
        tracking: Option<f64>,
        min_improvement: f64,
        min_slope_change: f64,
    ) -> PyResult<Crossover> {
        let base = CrossoverSearch::for_length(self.inner.series_length);
        let search = CrossoverSearch {
            lo: search_lo.unwrap_or(base.lo),
            hi: search_hi.unwrap_or(base.hi),
            tracking,
            criteria: DetectionCriteria {
                min_improvement,
                min_slope_change,
            },
        };
        search.validate().map_err(to_py)?;
        search.detect(&self.inner).map(Into::into).map_err(to_py)
    }

    /// The curve as `s,F` CSV text.
    fn to_csv(&self) -> String {
        core::io::curve_to_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FluctuationCurve(method={}, points={}, N={}, ensemble={})",
            self.inner.method,
            self.inner.values.len(),
            self.inner.series_length,
            self.inner.ensemble_size
        )
    }
}

/// Long-range-correlated Gaussian surrogate with exponent `alpha`.
#[pyfunction]
#[pyo3(signature = (n, alpha, seed=1, normalize=true))]
fn generate_power_law(n: usize, alpha: f64, seed: u64, normalize: bool) -> PyResult<Vec<f64>> {
    let spec = core::GeneratorSpec {
        length: n,
        alpha,
        seed,
        normalize,
    };
    core::generate_power_law(&spec)
        .map(Series::into_values)
        .map_err(to_py)
}

/// Surrogate whose exponent changes from `alpha1` to `alpha2` at `s_cross`.
#[pyfunction]
#[pyo3(signature = (n, alpha1, alpha2, s_cross, seed=1))]
fn generate_crossover(
    n: usize,
    alpha1: f64,
    alpha2: f64,
    s_cross: usize,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let spec = core::CrossoverSpec {
        length: n,
        alpha1,
        alpha2,
        s_cross,
        seed,
    };
    core::generate_crossover(&spec)
        .map(Series::into_values)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, amplitude, exponent=1.0))]
fn add_trend(x: Vec<f64>, amplitude: f64, exponent: f64) -> PyResult<Vec<f64>> {
    let trend = core::TrendSpec {
        amplitude,
        exponent,
    };
    core::add_trend(&series(x)?, &trend)
        .map(Series::into_values)
        .map_err(to_py)
}

#[pyfunction]
fn shuffle_boxes(x: Vec<f64>, box_len: usize, seed: u64) -> PyResult<Vec<f64>> {
    core::shuffle_boxes(&series(x)?, box_len, seed)
        .map(Series::into_values)
        .map_err(to_py)
}

#[pyfunction]
fn downsample(x: Vec<f64>, factor: usize) -> PyResult<Vec<f64>> {
    core::downsample(&series(x)?, factor)
        .map(Series::into_values)
        .map_err(to_py)
}

/// Cumulative sum of the mean-removed series.
#[pyfunction]
fn profile(x: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(core::compute_profile(&series(x)?).values().to_vec())
}

#[pyfunction]
fn autocorrelation(x: Vec<f64>, lag: usize) -> PyResult<f64> {
    core::autocorrelation(&series(x)?, lag).map_err(to_py)
}

/// `F(s)` of one series at one scale.
#[pyfunction]
fn fluctuation(x: Vec<f64>, method_name: &str, s: usize) -> PyResult<f64> {
    method(method_name)?
        .fluctuation(&series(x)?, s)
        .map_err(to_py)
}

#[pyfunction]
fn default_scale_grid(n: usize, method_name: &str) -> PyResult<Vec<usize>> {
    core::default_scale_grid(n, method(method_name)?)
        .map(|g| g.scales().to_vec())
        .map_err(to_py)
}

/// `F(s)` of one series over a scale grid (default grid if `scales` is None).
#[pyfunction]
#[pyo3(signature = (x, method_name, scales=None))]
fn fluctuation_curve(
    x: Vec<f64>,
    method_name: &str,
    scales: Option<Vec<usize>>,
) -> PyResult<FluctuationCurve> {
    ensemble_curve(vec![x], method_name, scales)
}

/// `F(s)` of an ensemble of equally long series; `F^2` is averaged over
/// members before the square root.
#[pyfunction]
#[pyo3(signature = (members, method_name, scales=None))]
fn ensemble_curve(
    members: Vec<Vec<f64>>,
    method_name: &str,
    scales: Option<Vec<usize>>,
) -> PyResult<FluctuationCurve> {
    let m = method(method_name)?;
    let set = members
        .into_iter()
        .map(series)
        .collect::<PyResult<Vec<_>>>()?;
    let n = set
        .first()
        .ok_or_else(|| PyValueError::new_err("empty ensemble"))?
        .len();
    let g = grid(scales, n, m)?;
    let inner = core::fluctuation_curve(&set, m, &g).map_err(to_py)?;
    Ok(FluctuationCurve { inner })
}

/// Maps an observed crossover to the true one (DFA1, CMA and MDFA1 only).
#[pyfunction]
fn correct_crossover(s_observed: f64, method_name: &str) -> PyResult<f64> {
    core::correct_crossover(s_observed, method(method_name)?).map_err(to_py)
}

/// Per length and method: `(N, method, mean alpha, sd alpha, fitted, failed)`.
#[pyfunction]
#[pyo3(signature = (alpha, lengths, n_series, methods, seed=1))]
fn alpha_vs_length_study(
    alpha: f64,
    lengths: Vec<usize>,
    n_series: usize,
    methods: Vec<String>,
    seed: u64,
) -> PyResult<Vec<(usize, String, f64, f64, usize, usize)>> {
    let ms = methods
        .iter()
        .map(|m| method(m))
        .collect::<PyResult<Vec<_>>>()?;
    let st =
        experiments::alpha_vs_length_study(alpha, &lengths, n_series, &ms, seed).map_err(to_py)?;
    Ok(st
        .stats
        .iter()
        .map(|s| {
            (
                s.length,
                s.method.to_string(),
                s.mean_alpha,
                s.sd_alpha,
                s.n_series,
                s.n_failed,
            )
        })
        .collect())
}

#[pymodule]
fn dfakit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<FluctuationCurve>()?;
    m.add_class::<AlphaEstimate>()?;
    m.add_class::<Crossover>()?;
    m.add_function(wrap_pyfunction!(generate_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(generate_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(add_trend, m)?)?;
    m.add_function(wrap_pyfunction!(shuffle_boxes, m)?)?;
    m.add_function(wrap_pyfunction!(downsample, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(autocorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation, m)?)?;
    m.add_function(wrap_pyfunction!(default_scale_grid, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_curve, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_curve, m)?)?;
    m.add_function(wrap_pyfunction!(correct_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_vs_length_study, m)?)?;
    Ok(())
}
