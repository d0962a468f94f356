//! Random-walk fluctuation analysis of long-range-correlated series.
//!
//! The crate covers the profile transform and direct autocorrelation
//! ([`series`]), seeded surrogate generation ([`surrogate`]), the
//! fluctuation functions FA, R/S, DFA-p, BMA, CMA and MDFA-p
//! ([`fluctuation`]), exponent and crossover estimation ([`scaling`]) and
//! ensemble studies ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod fluctuation;
pub mod io;
pub mod scaling;
pub mod series;
pub mod surrogate;

pub use error::{Error, Result};
pub use fluctuation::{default_scale_grid, fluctuation_curve, FluctuationCurve, Method, ScaleGrid};
pub use scaling::{
    correct_crossover, detect_crossover, exponent_relations, fit_alpha, local_slopes,
    AlphaEstimate, CrossoverDetection, CrossoverEstimate, CrossoverSearch, DetectionCriteria,
};
pub use series::{autocorrelation, compute_profile, series_stats, Profile, Series};
pub use surrogate::{
    add_trend, downsample, generate_crossover, generate_power_law, shuffle_boxes, CrossoverSpec,
    GeneratorSpec, TrendSpec,
};
