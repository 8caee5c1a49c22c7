//! Shared-noise coupling of the second-order system with its first-order reduction.

mod env;
mod scan;

pub use env::{env_process, EnvKind, EnvSpec};
pub use scan::{coupled_distance_scan, log_log_fit, CoupleEntry, CoupleScan, CoupleScanConfig, ScalingFit};
