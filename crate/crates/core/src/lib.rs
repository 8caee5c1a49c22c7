//! Simulation and analysis of fully coupled fast–slow second-order SDEs
//!
//! ```text
//! eps^2 X'' = F(t, X, Y) - lambda(t, X, Y) X'
//! dY = b(t, X, Y) / eps dt + sigma(t, X, Y) / sqrt(eps) dB
//! ```
//!
//! in one slow and one fast dimension. Everything is generic over the scalar
//! type through [`Real`]; the `*64` aliases fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod couple;
pub mod error;
pub mod invariant;
pub mod ldp;
pub mod measures;
pub mod quad;
pub mod scalar;
pub mod sde;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type FastSlowSystem64 = coeffs::FastSlowSystem<f64>;
pub type SamplePath64 = sde::SamplePath<f64>;
pub type RunConfig64 = sde::RunConfig<f64>;
pub type InitialState64 = sde::InitialState<f64>;
pub type DensityGrid64 = invariant::DensityGrid<f64>;
pub type GridSpec64 = invariant::GridSpec<f64>;
pub type AveragedDrift64 = invariant::AveragedDrift<f64>;
