//! Occupation measures, kernel density estimates and ensemble statistics.

mod ensemble;
mod kde;
mod occupation;

pub use ensemble::{ensemble_stats, heatmap, EnsembleStats, Heatmap};
pub use kde::{kde_density, select_bandwidth, Bandwidth, KdeGrid};
pub use occupation::{occupation_measure, Bins, OccupationMeasure};
