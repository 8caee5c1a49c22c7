use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::coeffs::FastSlowSystem;
use crate::error::Result;
use crate::scalar::Real;

use super::density::{stationary_density_1d, DensityGrid, GridSpec};

/// Stationary density of the fast diffusion with the slow variable frozen at `(t, x)`.
pub fn frozen_density<T: Real>(system: &FastSlowSystem<T>, t: T, x: T, spec: &GridSpec<T>) -> Result<DensityGrid<T>> {
    stationary_density_1d(|y| system.fast_drift(t, x, y), |y| system.diffusion_matrix(t, x, y), spec)
        .map_err(|e| e.context(format!("frozen density at t={t}, x={x}")))
}

/// `∫ (F/λ)(t, x, y) m(y) dy` for a given density.
pub fn averaged_drift_with<T: Real>(system: &FastSlowSystem<T>, t: T, x: T, m: &DensityGrid<T>) -> Result<T> {
    m.expect(|y| system.reduced_drift(t, x, y))
}

/// One-off averaged drift `∫ (F/λ) m_{t,x} dy`.
pub fn averaged_drift<T: Real>(system: &FastSlowSystem<T>, t: T, x: T) -> Result<T> {
    let m = frozen_density(system, t, x, &GridSpec::default())?;
    averaged_drift_with(system, t, x, &m)
}

type Key = (u64, u64);

/// Averaged drift with memoized frozen densities.
///
/// Densities are cached on the exact bits of the frozen arguments the fast
/// coefficients depend on, so systems whose fast dynamics ignore `x` solve
/// a single density. Lookups are safe from concurrent workers.
#[derive(Debug)]
pub struct AveragedDrift<T> {
    system: FastSlowSystem<T>,
    spec: GridSpec<T>,
    uses_t: bool,
    uses_x: bool,
    cache: RwLock<HashMap<Key, Arc<DensityGrid<T>>>>,
}

impl<T: Real> AveragedDrift<T> {
    pub fn new(system: FastSlowSystem<T>) -> Self {
        Self::with_spec(system, GridSpec::default())
    }

    pub fn with_spec(system: FastSlowSystem<T>, spec: GridSpec<T>) -> Self {
        let uses_t = system.fast_depends_on_time();
        let uses_x = system.fast_depends_on_slow();
        Self { system, spec, uses_t, uses_x, cache: RwLock::new(HashMap::new()) }
    }

    pub fn system(&self) -> &FastSlowSystem<T> {
        &self.system
    }

    fn key(&self, t: T, x: T) -> Key {
        let bits = |v: T, used: bool| if used { v.to_f64_lossy().to_bits() } else { 0 };
        (bits(t, self.uses_t), bits(x, self.uses_x))
    }

    /// Cached frozen density at `(t, x)`.
    pub fn density(&self, t: T, x: T) -> Result<Arc<DensityGrid<T>>> {
        let key = self.key(t, x);
        if let Some(m) = self.cache.read().expect("density cache poisoned").get(&key) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(frozen_density(&self.system, t, x, &self.spec)?);
        let mut cache = self.cache.write().expect("density cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(m)))
    }

    pub fn eval(&self, t: T, x: T) -> Result<T> {
        let m = self.density(t, x)?;
        averaged_drift_with(&self.system, t, x, &m)
    }

    pub fn cached_densities(&self) -> usize {
        self.cache.read().expect("density cache poisoned").len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::builtin_system;

    #[test]
    fn example1_drift_is_minus_x() {
        let sys = builtin_system::<f64>("example1").unwrap();
        let v = averaged_drift(&sys, 0.7, 2.0).unwrap();
        assert!((v + 2.0).abs() <= 1e-8, "{v}");
    }

    #[test]
    fn example2_second_moment() {
        let sys = builtin_system::<f64>("example2").unwrap();
        let expected = -(1.0 + (2.0 + 1f64.sin()).powi(2) / 4.0);
        let v = averaged_drift(&sys, 0.0, 1.0).unwrap();
        assert!((v - expected).abs() <= 1e-8, "{v} vs {expected}");
        assert!((expected + 3.01849).abs() < 1e-5);
        assert_eq!(averaged_drift(&sys, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cache_shares_x_independent_density() {
        let drift = AveragedDrift::new(builtin_system::<f64>("example1").unwrap());
        for x in [0.1, 0.2, 0.3] {
            drift.eval(0.0, x).unwrap();
        }
        assert_eq!(drift.cached_densities(), 1);
        let drift = AveragedDrift::new(builtin_system::<f64>("example2").unwrap());
        for x in [0.1, 0.2, 0.3] {
            drift.eval(0.0, x).unwrap();
        }
        assert_eq!(drift.cached_densities(), 3);
    }
}
