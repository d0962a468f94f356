//! Fluctuation functions of the random-walk family and their evaluation on
//! scale grids and ensembles.

mod methods;
mod poly;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use methods::{bma, cma, dfa, fa, mdfa, rs};

use crate::error::{Error, Result};
use crate::series::{compute_profile, Profile, Series};
use poly::SegmentBasis;

/// Target grid density, points per decade of scale.
pub const POINTS_PER_DECADE: f64 = 20.0;

/// Smallest series length accepted by [`default_scale_grid`].
pub const MIN_GRID_LENGTH: usize = 16;

/// A fluctuation-analysis method; DFA and MDFA carry their detrending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fa,
    Rs,
    Dfa(usize),
    Bma,
    Cma,
    Mdfa(usize),
}

impl Method {
    pub fn validate(&self) -> Result<()> {
        match self {
            Method::Dfa(0) | Method::Mdfa(0) => Err(Error::Parameter(format!(
                "{} requires detrending order p >= 1",
                self.family()
            ))),
            _ => Ok(()),
        }
    }

    /// Builds a method from a family name (`fa`, `rs`, `dfa`, `bma`, `cma`,
    /// `mdfa`) and an order, which is required for `dfa`/`mdfa` and rejected
    /// for the others.
    pub fn from_parts(name: &str, order: Option<usize>) -> Result<Self> {
        let fam = name.trim().to_ascii_lowercase();
        let m = match (fam.as_str(), order) {
            ("dfa", Some(p)) => Method::Dfa(p),
            ("mdfa", Some(p)) => Method::Mdfa(p),
            ("dfa", None) => Method::Dfa(1),
            ("mdfa", None) => Method::Mdfa(1),
            ("fa", None) => Method::Fa,
            ("rs", None) => Method::Rs,
            ("bma", None) => Method::Bma,
            ("cma", None) => Method::Cma,
            ("fa" | "rs" | "bma" | "cma", Some(_)) => {
                return Err(Error::Parameter(format!(
                    "method {fam} does not take a detrending order"
                )))
            }
            _ => return Err(Error::Parameter(format!("unknown method `{name}`"))),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn family(&self) -> &'static str {
        match self {
            Method::Fa => "FA",
            Method::Rs => "RS",
            Method::Dfa(_) => "DFA",
            Method::Bma => "BMA",
            Method::Cma => "CMA",
            Method::Mdfa(_) => "MDFA",
        }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            Method::Dfa(p) | Method::Mdfa(p) => Some(*p),
            _ => None,
        }
    }

    /// Smallest admissible scale.
    pub fn min_scale(&self) -> usize {
        match *self {
            Method::Fa | Method::Rs | Method::Bma => 4,
            Method::Dfa(p) => p + 2,
            Method::Cma => 3,
            Method::Mdfa(p) => {
                let m = (p + 2).max(4);
                m + m % 2
            }
        }
    }

    /// Required scale parity: `Some(1)` odd, `Some(0)` even.
    fn parity(&self) -> Option<usize> {
        match self {
            Method::Cma => Some(1),
            Method::Mdfa(_) => Some(0),
            _ => None,
        }
    }

    pub fn accepts_scale(&self, s: usize, n: usize) -> bool {
        s >= self.min_scale() && s <= n / 2 && self.parity().is_none_or(|par| s % 2 == par)
    }

    /// `F^2(s)` for one series. The profile must belong to `series`.
    pub fn mean_square(&self, series: &Series, profile: &Profile, s: usize) -> Result<f64> {
        match *self {
            Method::Fa => methods::fa_mean_square(profile, s),
            Method::Rs => methods::rs_mean_square(series, s),
            Method::Dfa(p) => methods::dfa_mean_square(profile, s, p),
            Method::Bma => methods::bma_mean_square(profile, s),
            Method::Cma => methods::cma_mean_square(profile, s),
            Method::Mdfa(p) => methods::mdfa_mean_square(profile, s, p),
        }
    }

    /// `F(s)` for one series.
    pub fn fluctuation(&self, series: &Series, s: usize) -> Result<f64> {
        self.validate()?;
        self.mean_square(series, &compute_profile(series), s)
            .map(f64::sqrt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.order() {
            Some(p) => write!(f, "{}{}", self.family(), p),
            None => f.write_str(self.family()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `fa`, `rs`, `bma`, `cma`, `dfa`, `mdfa` (order 1) and
    /// `dfaP`/`mdfaP` with an explicit order, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let split = lower
            .find(|c: char| c.is_ascii_digit())
            .unwrap_or(lower.len());
        let (name, digits) = lower.split_at(split);
        let order = if digits.is_empty() {
            None
        } else {
            Some(
                digits
                    .parse::<usize>()
                    .map_err(|_| Error::Parameter(format!("bad method order in `{s}`")))?,
            )
        };
        Method::from_parts(name, order)
    }
}

/// Strictly increasing list of integer scales.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleGrid {
    scales: Vec<usize>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<usize>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::Parameter("scale grid is empty".into()));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "scales must be strictly increasing".into(),
            ));
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Checks every scale against the method's minimum, parity and `N/2`.
    pub fn validate_for(&self, n: usize, method: Method) -> Result<()> {
        match self.scales.iter().find(|&&s| !method.accepts_scale(s, n)) {
            Some(s) => Err(Error::Parameter(format!(
                "scale {s} is not valid for {method} on a series of length {n} \
                 (minimum {}, maximum N/2 = {}{})",
                method.min_scale(),
                n / 2,
                match method.parity() {
                    Some(1) => ", odd only",
                    Some(_) => ", even only",
                    None => "",
                }
            ))),
            None => Ok(()),
        }
    }
}

/// Nearest admissible integer to `target` within `[lo, hi]`, honoring parity.
fn round_scale(target: f64, lo: usize, hi: usize, parity: Option<usize>) -> usize {
    let r = (target.round() as usize).clamp(lo, hi);
    match parity {
        Some(par) if r % 2 != par => {
            let down = r.checked_sub(1).filter(|&d| d >= lo);
            let up = Some(r + 1).filter(|&u| u <= hi);
            match (down, up) {
                (Some(d), Some(u)) => {
                    if (target - d as f64).abs() <= (u as f64 - target).abs() {
                        d
                    } else {
                        u
                    }
                }
                (Some(d), None) => d,
                (None, Some(u)) => u,
                (None, None) => r,
            }
        }
        _ => r,
    }
}

/// About [`POINTS_PER_DECADE`] logarithmically spaced scales from the
/// method's minimum scale to `N/2`, rounded to admissible integers.
pub fn default_scale_grid(n: usize, method: Method) -> Result<ScaleGrid> {
    method.validate()?;
    if n < MIN_GRID_LENGTH {
        return Err(Error::Parameter(format!(
            "series length {n} is below the minimum of {MIN_GRID_LENGTH} for a scale grid"
        )));
    }
    let parity = method.parity();
    let lo = method.min_scale();
    let mut hi = n / 2;
    if let Some(par) = parity {
        if hi % 2 != par {
            hi -= 1;
        }
    }
    if hi < lo {
        return Err(Error::Parameter(format!(
            "series length {n} too short for {method}"
        )));
    }
    let ratio = hi as f64 / lo as f64;
    let steps = ((POINTS_PER_DECADE * ratio.log10()).ceil() as usize).max(1);
    let mut scales: Vec<usize> = (0..=steps)
        .map(|k| {
            let t = lo as f64 * ratio.powf(k as f64 / steps as f64);
            round_scale(t, lo, hi, parity)
        })
        .collect();
    scales.dedup();
    if scales.len() < 4 {
        return Err(Error::Parameter(format!(
            "series length {n} yields only {} scales for {method}; at least 4 are needed",
            scales.len()
        )));
    }
    ScaleGrid::new(scales)
}

/// Fluctuation function sampled on a scale grid, possibly averaged over an
/// ensemble of equally long series.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationCurve {
    pub method: Method,
    pub scales: ScaleGrid,
    pub values: Vec<f64>,
    pub ensemble_size: usize,
    pub series_length: usize,
}

impl FluctuationCurve {
    /// Curve from raw `(s, F)` data, e.g. read back from a CSV file.
    pub fn from_points(
        method: Method,
        scales: Vec<usize>,
        values: Vec<f64>,
        series_length: usize,
    ) -> Result<Self> {
        if scales.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} scales but {} fluctuation values",
                scales.len(),
                values.len()
            )));
        }
        Ok(Self {
            method,
            scales: ScaleGrid::new(scales)?,
            values,
            ensemble_size: 1,
            series_length,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scales
            .scales()
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }
}

/// Precomputed per-scale state (segment bases) for repeated evaluation.
struct Evaluator {
    method: Method,
    scales: Vec<usize>,
    bases: Vec<Option<SegmentBasis>>,
}

impl Evaluator {
    fn new(method: Method, grid: &ScaleGrid) -> Self {
        let bases = grid
            .scales()
            .iter()
            .map(|&s| match method {
                Method::Dfa(p) | Method::Mdfa(p) => Some(SegmentBasis::new(s, p)),
                _ => None,
            })
            .collect();
        Self {
            method,
            scales: grid.scales().to_vec(),
            bases,
        }
    }

    fn mean_squares(&self, series: &Series, profile: &Profile) -> Result<Vec<f64>> {
        self.scales
            .iter()
            .zip(&self.bases)
            .map(|(&s, basis)| match (self.method, basis) {
                (Method::Dfa(_), Some(b)) => methods::dfa_mean_square_with(profile, b),
                (Method::Mdfa(_), Some(b)) => methods::mdfa_mean_square_with(profile, b),
                (m, _) => m.mean_square(series, profile, s),
            })
            .collect()
    }
}

/// Mean-square fluctuations of a single series on a validated grid.
pub fn mean_square_curve(series: &Series, method: Method, grid: &ScaleGrid) -> Result<Vec<f64>> {
    method.validate()?;
    grid.validate_for(series.len(), method)?;
    Evaluator::new(method, grid).mean_squares(series, &compute_profile(series))
}

/// Ensemble fluctuation curve: `F^2(s)` is averaged over all series before
/// the square root is taken. All series must share one length.
pub fn fluctuation_curve(
    series_set: &[Series],
    method: Method,
    grid: &ScaleGrid,
) -> Result<FluctuationCurve> {
    let first = series_set
        .first()
        .ok_or_else(|| Error::InvalidInput("empty series set".into()))?;
    let n = first.len();
    if let Some(bad) = series_set.iter().find(|s| s.len() != n) {
        return Err(Error::Parameter(format!(
            "mixed series lengths: {n} and {}",
            bad.len()
        )));
    }
    let mut curves = ensemble_curves(series_set.len(), n, &[(method, grid.clone())], |i| {
        Ok(series_set[i].clone())
    })?;
    Ok(curves.remove(0))
}

/// Evaluates several methods on an ensemble produced on demand by `make`,
/// so members never have to be held in memory together. Members are
/// processed in parallel and reduced in index order, which keeps the result
/// bit-reproducible regardless of scheduling.
pub fn ensemble_curves<F>(
    n_members: usize,
    length: usize,
    methods: &[(Method, ScaleGrid)],
    make: F,
) -> Result<Vec<FluctuationCurve>>
where
    F: Fn(usize) -> Result<Series> + Sync,
{
    if n_members == 0 {
        return Err(Error::InvalidInput("ensemble is empty".into()));
    }
    for (m, g) in methods {
        m.validate()?;
        g.validate_for(length, *m)?;
    }
    let evaluators: Vec<Evaluator> = methods.iter().map(|(m, g)| Evaluator::new(*m, g)).collect();

    let per_member: Vec<Vec<Vec<f64>>> = (0..n_members)
        .into_par_iter()
        .map(|i| {
            let series = make(i)?;
            if series.len() != length {
                return Err(Error::Parameter(format!(
                    "ensemble member {i} has length {} instead of {length}",
                    series.len()
                )));
            }
            let profile = compute_profile(&series);
            evaluators
                .iter()
                .map(|e| e.mean_squares(&series, &profile))
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, (m, g))| {
            let mut sums = vec![0.0; g.len()];
            for member in &per_member {
                sums.iter_mut().zip(&member[k]).for_each(|(a, b)| *a += b);
            }
            FluctuationCurve {
                method: *m,
                scales: g.clone(),
                values: sums
                    .into_iter()
                    .map(|v| (v / n_members as f64).sqrt())
                    .collect(),
                ensemble_size: n_members,
                series_length: length,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing_and_display() {
        assert_eq!("dfa2".parse::<Method>().unwrap(), Method::Dfa(2));
        assert_eq!("DFA".parse::<Method>().unwrap(), Method::Dfa(1));
        assert_eq!("mdfa1".parse::<Method>().unwrap(), Method::Mdfa(1));
        assert_eq!("cma".parse::<Method>().unwrap(), Method::Cma);
        assert!("dfa0".parse::<Method>().is_err());
        assert!("cma1".parse::<Method>().is_err());
        assert!("wavelet".parse::<Method>().is_err());
        assert_eq!(Method::Dfa(3).to_string(), "DFA3");
        assert_eq!(Method::Rs.to_string(), "RS");
        assert!(Method::from_parts("dfa", Some(0)).is_err());
    }

    #[test]
    fn minimum_scales() {
        assert_eq!(Method::Fa.min_scale(), 4);
        assert_eq!(Method::Dfa(1).min_scale(), 3);
        assert_eq!(Method::Dfa(3).min_scale(), 5);
        assert_eq!(Method::Cma.min_scale(), 3);
        assert_eq!(Method::Mdfa(1).min_scale(), 4);
        assert_eq!(Method::Mdfa(3).min_scale(), 6);
        assert_eq!(Method::Mdfa(4).min_scale(), 6);
    }

    #[test]
    fn small_grid_bounds() {
        let g = default_scale_grid(16, Method::Dfa(1)).unwrap();
        assert_eq!(g.scales()[0], 3);
        assert!(*g.scales().last().unwrap() <= 8);
        assert!(default_scale_grid(15, Method::Dfa(1)).is_err());
        assert!(default_scale_grid(16, Method::Dfa(6)).is_err());
    }

    #[test]
    fn large_grid_density_and_parity() {
        let n = 50_000;
        for m in [
            Method::Fa,
            Method::Dfa(1),
            Method::Cma,
            Method::Mdfa(1),
            Method::Bma,
        ] {
            let g = default_scale_grid(n, m).unwrap();
            let s = g.scales();
            assert_eq!(s[0], m.min_scale());
            assert!(n / 2 - s.last().unwrap() <= 1, "{m}: {:?}", s.last());
            let decades = (*s.last().unwrap() as f64 / s[0] as f64).log10();
            let density = s.len() as f64 / decades;
            // small scales lose points to integer rounding
            assert!((14.0..=21.5).contains(&density), "{m}: {density}");
            g.validate_for(n, m).unwrap();
        }
        let cma = default_scale_grid(n, Method::Cma).unwrap();
        assert!(cma.scales().iter().all(|s| s % 2 == 1));
        let mdfa = default_scale_grid(n, Method::Mdfa(1)).unwrap();
        assert!(mdfa.scales().iter().all(|s| s % 2 == 0));
    }

    #[test]
    fn grid_validation() {
        assert!(ScaleGrid::new(vec![4, 4, 5]).is_err());
        assert!(ScaleGrid::new(vec![]).is_err());
        let g = ScaleGrid::new(vec![4, 6, 8]).unwrap();
        assert!(g.validate_for(100, Method::Cma).is_err());
        assert!(g.validate_for(100, Method::Mdfa(1)).is_ok());
        assert!(g.validate_for(15, Method::Dfa(1)).is_err());
    }

    #[test]
    fn ensemble_of_one_and_duplicates() {
        let x = Series::new((0..400).map(|i| ((i * 7919) % 101) as f64).collect()).unwrap();
        let grid = default_scale_grid(400, Method::Dfa(1)).unwrap();
        let single = fluctuation_curve(std::slice::from_ref(&x), Method::Dfa(1), &grid).unwrap();
        let direct: Vec<f64> = grid
            .scales()
            .iter()
            .map(|&s| Method::Dfa(1).fluctuation(&x, s).unwrap())
            .collect();
        assert_eq!(single.values, direct);
        let twice = fluctuation_curve(&[x.clone(), x], Method::Dfa(1), &grid).unwrap();
        for (a, b) in twice.values.iter().zip(&single.values) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
        assert_eq!(twice.ensemble_size, 2);
    }

    #[test]
    fn mixed_lengths_rejected() {
        let a = Series::new(vec![1.0, 2.0, 0.5, 3.0, 1.0, 2.0, 0.5, 3.0, 1.5, 0.2]).unwrap();
        let b = Series::new(vec![1.0; 12]).unwrap();
        let grid = ScaleGrid::new(vec![4, 5]).unwrap();
        assert!(matches!(
            fluctuation_curve(&[a, b], Method::Fa, &grid),
            Err(Error::Parameter(_))
        ));
    }
}
