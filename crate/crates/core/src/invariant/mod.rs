//! Stationary densities of the frozen fast diffusion and the averaged drift.

mod density;
mod drift;
mod test_functions;

pub use density::{stationary_density_1d, DensityGrid, GridSpec};
pub use drift::{averaged_drift, averaged_drift_with, frozen_density, AveragedDrift};
pub use test_functions::{standard_basis, weak_stationarity_residual, PolyBump, Polynomial, TestFunction};
