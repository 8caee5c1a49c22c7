use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sde::SamplePath;

/// Truncated weighted sup metric and the bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSup<T> {
    pub value: T,
    /// `2^{-horizon_n}`, the most the terms beyond the horizon could add.
    pub tail_bound: T,
}

/// `Σ_{n=1}^{N} 2^{-n} min(1, sup_{t<=n} |φ_t − ψ_t|)` on a shared time grid.
pub fn weighted_sup_metric<T: Real>(phi: &SamplePath<T>, psi: &SamplePath<T>, horizon_n: usize) -> Result<WeightedSup<T>> {
    if !phi.same_grid(psi) {
        return Err(Error::GridMismatch("metric needs paths on one time grid".into()));
    }
    let horizon = T::from_usize_lossy(horizon_n);
    let slack = T::lit(1e-9);
    if phi.is_empty() || phi.end_time() < horizon - slack {
        return Err(Error::BeyondPath { requested: horizon.to_f64_lossy(), end: phi.end_time().to_f64_lossy() });
    }
    let mut value = T::zero();
    let mut running = T::zero();
    let mut k = 0;
    let mut weight = T::one();
    for n in 1..=horizon_n {
        let limit = T::from_usize_lossy(n) + slack;
        while k < phi.len() && phi.times[k] <= limit {
            running = running.max((phi.x[k] - psi.x[k]).abs());
            k += 1;
        }
        weight = weight * T::lit(0.5);
        value = value + weight * running.min(T::one());
    }
    Ok(WeightedSup { value, tail_bound: weight })
}
