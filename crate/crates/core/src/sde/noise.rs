use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// SplitMix64 finalizer; used to derive independent seeds from a base seed.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-experiment `index` (for example an epsilon level) of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Count and running hash of the variates drawn from a stream.
///
/// Two runs that consumed bit-identical variate sequences have equal tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseTally {
    pub draws: u64,
    pub fingerprint: u64,
}

impl NoiseTally {
    fn record(&mut self, bits: u64) {
        self.draws += 1;
        self.fingerprint = (self.fingerprint ^ bits).wrapping_mul(0x0000_0100_0000_01b3).rotate_left(17);
    }
}

/// Reproducible source of Gaussian (and auxiliary) variates for one sample path.
///
/// The generator is ChaCha8 keyed by `seed` with stream number `path_index`,
/// so every `(seed, path_index)` pair yields the same sequence on any thread.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    path_index: u64,
    rng: ChaCha8Rng,
    tally: NoiseTally,
}

impl NoiseStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        Self { seed, path_index, rng, tally: NoiseTally::default() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn tally(&self) -> NoiseTally {
        self.tally
    }

    /// Standard normal variate.
    pub fn normal<T: Real>(&mut self) -> T {
        let z: f64 = self.rng.sample(StandardNormal);
        self.tally.record(z.to_bits());
        T::lit(z)
    }

    /// Uniform variate on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        self.tally.record(u.to_bits());
        u
    }

    /// Unit-mean exponential variate.
    pub fn exponential(&mut self) -> f64 {
        let e: f64 = self.rng.sample(Exp1);
        self.tally.record(e.to_bits());
        e
    }
}

/// Brownian increments over consecutive cells of `grid`.
///
/// Returns `grid.len() - 1` values, the k-th distributed as
/// `Normal(0, grid[k+1] - grid[k])`.
pub fn brownian_increments<T: Real>(stream: &mut NoiseStream, grid: &[T]) -> Result<Vec<T>> {
    if let Some(index) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneGrid { index: index + 1 });
    }
    Ok(grid.windows(2).map(|w| (w[1] - w[0]).sqrt() * stream.normal::<T>()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_increments() {
        let grid: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let a = brownian_increments(&mut NoiseStream::new(7, 3), &grid).unwrap();
        let b = brownian_increments(&mut NoiseStream::new(7, 3), &grid).unwrap();
        assert_eq!(a, b);
        let c = brownian_increments(&mut NoiseStream::new(7, 4), &grid).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_point_grid_has_no_increments() {
        let out = brownian_increments::<f64>(&mut NoiseStream::new(1, 0), &[0.0]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn non_monotone_grid_is_rejected() {
        let err = brownian_increments::<f64>(&mut NoiseStream::new(1, 0), &[0.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::NonMonotoneGrid { index: 2 });
    }

    #[test]
    fn unit_step_increments_have_unit_variance() {
        let grid: Vec<f64> = (0..=100_000).map(|k| k as f64).collect();
        let inc = brownian_increments(&mut NoiseStream::new(2024, 0), &grid).unwrap();
        let n = inc.len() as f64;
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.99..=1.01).contains(&var), "sample variance {var}");
    }

    #[test]
    fn tally_tracks_draws() {
        let mut a = NoiseStream::new(5, 0);
        let mut b = NoiseStream::new(5, 0);
        for _ in 0..10 {
            let _: f64 = a.normal();
            let _: f64 = b.normal();
        }
        assert_eq!(a.tally(), b.tally());
        assert_eq!(a.tally().draws, 10);
        let _: f64 = a.normal();
        assert_ne!(a.tally(), b.tally());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(9, 4), derive_seed(9, 4));
    }
}
