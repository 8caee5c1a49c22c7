//! One-dimensional rate functionals and Monte Carlo tail-rate estimation.

mod dv;
mod metric;
mod path_rate;
mod tail;

pub use dv::{dv_rate_1d, dv_rate_variational_lower_bound};
pub use metric::{weighted_sup_metric, WeightedSup};
pub use path_rate::{path_rate, rate_profile, CandidatePair, PathRate, RateProfile, DEFAULT_DRIFT_TOL};
pub use tail::{
    tail_rate_estimate, wilson_interval, Inversion, RateEntry, RateFit, RateReport, TailRateConfig, MIN_TAIL_PATHS,
};
