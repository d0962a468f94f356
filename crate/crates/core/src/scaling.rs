//! Exponent estimation from fluctuation curves: log-log fits, local slopes,
//! crossover detection and correction, exponent conversions.

use crate::error::{Error, Result};
use crate::fluctuation::{FluctuationCurve, Method};

/// Lower edge of the "fixed lower limit" fitting range.
pub const FIXED_LOWER_LIMIT: f64 = 10.0;

/// Default minimum relative SSE gain of the two-piece model over a single
/// line before a crossover is reported.
pub const DEFAULT_MIN_IMPROVEMENT: f64 = 0.05;

/// Default minimum `|alpha_above - alpha_below|` of a reported crossover.
pub const DEFAULT_MIN_SLOPE_CHANGE: f64 = 0.1;

/// Default half-width factor of the knot-centred window used by
/// [`CrossoverSearch`]: one decade on either side.
pub const DEFAULT_TRACKING_FACTOR: f64 = 10.0;

const MAX_TRACKING_STEPS: usize = 20;

/// Least-squares scaling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: f64,
    /// Intercept of the fitted line in `ln F` vs `ln s`.
    pub intercept: f64,
    /// Smallest and largest grid scale used.
    pub fit_range: (f64, f64),
    /// RMS residual in `ln F` units.
    pub residual_rms: f64,
    pub n_points: usize,
}

fn log_points(curve: &FluctuationCurve, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    curve
        .points()
        .filter(|&(s, _)| (s as f64) >= lo && (s as f64) <= hi)
        .map(|(s, f)| {
            if f > 0.0 && f.is_finite() {
                Ok(((s as f64).ln(), f.ln()))
            } else {
                Err(Error::Domain(format!(
                    "fluctuation value {f} at scale {s} is not positive"
                )))
            }
        })
        .collect()
}

struct Line {
    slope: f64,
    intercept: f64,
    sse: f64,
}

fn ols(points: &[(f64, f64)]) -> Line {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = points
        .iter()
        .map(|&(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Line {
        slope,
        intercept,
        sse,
    }
}

/// Ordinary least-squares line through `(ln s, ln F)` for grid scales in
/// `[s_lo, s_hi]`.
pub fn fit_alpha(curve: &FluctuationCurve, s_lo: f64, s_hi: f64) -> Result<AlphaEstimate> {
    let pts = log_points(curve, s_lo, s_hi)?;
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} grid point(s) in fitting range [{s_lo}, {s_hi}]; at least 3 are needed",
            pts.len()
        )));
    }
    let line = ols(&pts);
    Ok(AlphaEstimate {
        alpha: line.slope,
        intercept: line.intercept,
        fit_range: (pts[0].0.exp().round(), pts[pts.len() - 1].0.exp().round()),
        residual_rms: (line.sse / pts.len() as f64).sqrt(),
        n_points: pts.len(),
    })
}

/// `(N/20, N/2)`: a fitting window whose width is fixed in log scale.
pub fn fixed_width_range(n: usize) -> Result<(f64, f64)> {
    if n < 60 {
        return Err(Error::Parameter(format!(
            "fixed-width range needs N >= 60 (got {n})"
        )));
    }
    Ok((n as f64 / 20.0, n as f64 / 2.0))
}

/// `(10, N/2)`: the fitting window with a fixed lower limit.
pub fn fixed_lower_range(n: usize) -> Result<(f64, f64)> {
    let hi = n as f64 / 2.0;
    if hi <= FIXED_LOWER_LIMIT {
        return Err(Error::Parameter(format!(
            "fixed-lower range needs N/2 > {FIXED_LOWER_LIMIT} (got N = {n})"
        )));
    }
    Ok((FIXED_LOWER_LIMIT, hi))
}

/// Point-to-point slopes of `ln F` vs `ln s`, reported at the geometric
/// midpoint of each pair of neighbouring scales.
pub fn local_slopes(curve: &FluctuationCurve) -> Result<Vec<(f64, f64)>> {
    let pts = log_points(curve, f64::NEG_INFINITY, f64::INFINITY)?;
    if pts.len() < 2 {
        return Err(Error::InsufficientData(
            "local slopes need at least 2 grid points".into(),
        ));
    }
    pts.windows(2)
        .map(|w| {
            let du = w[1].0 - w[0].0;
            if du <= 0.0 {
                return Err(Error::Parameter("duplicate or unordered scales".into()));
            }
            Ok((((w[0].0 + w[1].0) / 2.0).exp(), (w[1].1 - w[0].1) / du))
        })
        .collect()
}

/// Detected change of scaling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverEstimate {
    /// Breakpoint of the two-piece fit, `s'_x`.
    pub s_observed: f64,
    pub alpha_below: f64,
    pub alpha_above: f64,
    /// Estimated true crossover `s_x`; equals `s_observed` for methods
    /// without a correction formula.
    pub s_corrected: f64,
    pub method: Method,
    /// Relative SSE reduction of the two-piece fit over a single line.
    pub improvement: f64,
}

/// Outcome of [`detect_crossover`]. A curve that a single power law explains
/// well enough is a regular result, not an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossoverDetection {
    Found(CrossoverEstimate),
    NoCrossover {
        single_line_sse: f64,
        best_two_piece_sse: f64,
        improvement: f64,
    },
}

impl CrossoverDetection {
    pub fn found(&self) -> Option<&CrossoverEstimate> {
        match self {
            CrossoverDetection::Found(c) => Some(c),
            CrossoverDetection::NoCrossover { .. } => None,
        }
    }
}

struct Hinge {
    sse: f64,
    below: f64,
    above: f64,
}

/// Continuous two-piece line with its knot at `knot`:
/// `y = a + b1 min(u - knot, 0) + b2 max(u - knot, 0)`.
fn fit_hinge(points: &[(f64, f64)], knot: f64) -> Option<Hinge> {
    // normal equations of the 3-column design [1, min(.,0), max(.,0)]
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for &(u, y) in points {
        let d = u - knot;
        let row = [1.0, d.min(0.0), d.max(0.0)];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve3(ata, aty)?;
    let sse = points
        .iter()
        .map(|&(u, y)| {
            let d = u - knot;
            let r = y - coef[0] - coef[1] * d.min(0.0) - coef[2] * d.max(0.0);
            r * r
        })
        .sum();
    Some(Hinge {
        sse,
        below: coef[1],
        above: coef[2],
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Refines the knot between two neighbouring grid points by golden-section
/// search on the two-piece SSE.
fn refine_knot(points: &[(f64, f64)], mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let sse = |k: f64| fit_hinge(points, k).map_or(f64::INFINITY, |h| h.sse);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..60 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = sse(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = sse(d);
        }
    }
    (lo + hi) / 2.0
}

/// When a two-piece fit counts as a crossover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionCriteria {
    /// Relative SSE reduction over the single line.
    pub min_improvement: f64,
    /// Difference between the two fitted slopes. Ensemble noise alone can
    /// buy a sizeable relative SSE gain on a curve that is a straight line
    /// to within 1e-3, so the gain by itself does not separate a change of
    /// exponent from wiggles.
    pub min_slope_change: f64,
}

impl Default for DetectionCriteria {
    fn default() -> Self {
        DetectionCriteria {
            min_improvement: DEFAULT_MIN_IMPROVEMENT,
            min_slope_change: DEFAULT_MIN_SLOPE_CHANGE,
        }
    }
}

/// [`detect_crossover_with`] using the default [`DetectionCriteria`].
pub fn detect_crossover(
    curve: &FluctuationCurve,
    search_lo: f64,
    search_hi: f64,
) -> Result<CrossoverDetection> {
    detect_crossover_with(curve, search_lo, search_hi, DetectionCriteria::default())
}

/// Locates a single crossover in `[search_lo, search_hi]`.
///
/// Every interior grid scale with at least three points on each side
/// (counting the knot) is tried as the knot of a continuous two-piece line
/// in `(ln s, ln F)`; the best knot is then refined continuously between its
/// grid neighbours. A crossover is reported when the two-piece fit lowers
/// the single-line SSE by at least `criteria.min_improvement` and its slopes
/// differ by at least `criteria.min_slope_change`.
pub fn detect_crossover_with(
    curve: &FluctuationCurve,
    search_lo: f64,
    search_hi: f64,
    criteria: DetectionCriteria,
) -> Result<CrossoverDetection> {
    let pts = log_points(curve, search_lo, search_hi)?;
    if pts.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "crossover search needs at least 6 grid points in [{search_lo}, {search_hi}] (got {})",
            pts.len()
        )));
    }
    let single = ols(&pts);
    let scale_sq: f64 = pts.iter().map(|p| p.1 * p.1).sum::<f64>().max(1.0);

    let mut best: Option<(usize, f64)> = None;
    for k in 2..pts.len() - 2 {
        if let Some(h) = fit_hinge(&pts, pts[k].0) {
            if best.is_none_or(|(_, sse)| h.sse < sse) {
                best = Some((k, h.sse));
            }
        }
    }
    let (k, grid_sse) = best.ok_or_else(|| Error::Domain("two-piece fit is singular".into()))?;
    let knot = refine_knot(&pts, pts[k - 1].0, pts[k + 1].0);
    let hinge = match fit_hinge(&pts, knot) {
        Some(h) if h.sse <= grid_sse => (knot, h),
        _ => (
            pts[k].0,
            fit_hinge(&pts, pts[k].0).expect("knot already fitted"),
        ),
    };
    let (knot, hinge) = hinge;

    // a line that is exact up to rounding has nothing to improve on
    let exact_line = single.sse <= 1e-24 * scale_sq;
    let improvement = if exact_line {
        0.0
    } else {
        (single.sse - hinge.sse) / single.sse
    };
    let slope_change = (hinge.above - hinge.below).abs();
    if exact_line
        || improvement < criteria.min_improvement
        // a change of exactly the threshold still counts despite rounding
        || slope_change + 1e-9 < criteria.min_slope_change
    {
        return Ok(CrossoverDetection::NoCrossover {
            single_line_sse: single.sse,
            best_two_piece_sse: hinge.sse,
            improvement,
        });
    }

    let s_observed = knot.exp();
    let s_corrected = correct_crossover(s_observed, curve.method).unwrap_or(s_observed);
    Ok(CrossoverDetection::Found(CrossoverEstimate {
        s_observed,
        alpha_below: hinge.below,
        alpha_above: hinge.above,
        s_corrected,
        method: curve.method,
        improvement,
    }))
}

/// Crossover search over a fixed window, optionally followed by tracking:
/// the window is re-centred on the detected knot, `[s'/f, s' f]` clipped to
/// the outer window, until the knot stops moving.
///
/// A two-piece line fitted over a wide, fixed window is pulled towards
/// whichever side holds more grid points, so its knot does not move in
/// proportion to the true crossover. A knot-centred window of fixed log
/// width keeps the estimate scale-equivariant away from the window edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverSearch {
    pub lo: f64,
    pub hi: f64,
    /// Half-width factor `f` of the tracking window; `None` searches the
    /// outer window once.
    pub tracking: Option<f64>,
    pub criteria: DetectionCriteria,
}

impl CrossoverSearch {
    /// Outer window `[10, N/4]` with default tracking and criteria.
    pub fn for_length(n: usize) -> Self {
        CrossoverSearch {
            lo: FIXED_LOWER_LIMIT,
            hi: n as f64 / 4.0,
            tracking: Some(DEFAULT_TRACKING_FACTOR),
            criteria: DetectionCriteria::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "invalid crossover search window [{}, {}]",
                self.lo, self.hi
            )));
        }
        if let Some(f) = self.tracking {
            if !(f > 1.0 && f.is_finite()) {
                return Err(Error::Parameter(format!(
                    "tracking factor must exceed 1 (got {f})"
                )));
            }
        }
        Ok(())
    }

    pub fn detect(&self, curve: &FluctuationCurve) -> Result<CrossoverDetection> {
        self.validate()?;
        let mut det = detect_crossover_with(curve, self.lo, self.hi, self.criteria)?;
        let Some(f) = self.tracking else {
            return Ok(det);
        };
        for _ in 0..MAX_TRACKING_STEPS {
            let Some(k) = det.found().map(|e| e.s_observed) else {
                break;
            };
            let (lo, hi) = ((k / f).max(self.lo), (k * f).min(self.hi));
            let next = match detect_crossover_with(curve, lo, hi, self.criteria) {
                Ok(d) => d,
                // window squeezed against an edge: keep the last estimate
                Err(Error::InsufficientData(_)) => break,
                Err(e) => return Err(e),
            };
            let settled = next
                .found()
                .is_some_and(|e| (e.s_observed / k - 1.0).abs() < 1e-9);
            det = next;
            if settled {
                break;
            }
        }
        Ok(det)
    }
}

/// Affine map `ln s_x = slope * ln s'_x + intercept` relating observed to
/// true crossover positions, for the methods where it was calibrated.
pub fn crossover_correction(method: Method) -> Option<(f64, f64)> {
    match method {
        Method::Dfa(1) => Some((1.0, -0.25)),
        Method::Cma => Some((1.05, -0.47)),
        Method::Mdfa(1) => Some((1.04, -0.19)),
        _ => None,
    }
}

/// Estimated true crossover position from the observed one (DFA1, CMA and
/// MDFA1 only).
pub fn correct_crossover(s_observed: f64, method: Method) -> Result<f64> {
    let (slope, intercept) = crossover_correction(method)
        .ok_or_else(|| Error::Parameter(format!("no crossover correction for method {method}")))?;
    if !(s_observed.is_finite() && s_observed >= 1.0) {
        return Err(Error::Parameter(format!(
            "observed crossover must be >= 1 (got {s_observed})"
        )));
    }
    Ok((slope * s_observed.ln() + intercept).exp())
}

/// Correlation and spectral exponents implied by a fluctuation exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentRelations {
    /// `gamma = 2 (1 - alpha)`, the autocorrelation decay exponent.
    pub gamma: f64,
    /// `beta = 2 alpha - 1`, the power-spectrum exponent.
    pub beta: f64,
    /// Whether `0 < gamma < 1`, the long-range-correlated regime where the
    /// gamma relation holds.
    pub gamma_in_domain: bool,
}

pub fn exponent_relations(alpha: f64) -> ExponentRelations {
    let gamma = 2.0 * (1.0 - alpha);
    ExponentRelations {
        gamma,
        beta: 2.0 * alpha - 1.0,
        gamma_in_domain: gamma > 0.0 && gamma < 1.0,
    }
}
