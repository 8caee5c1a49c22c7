use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kde::{kde_density, Bandwidth, KdeGrid};
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::sde::SamplePath;

/// Sup-norm deviations of an ensemble from a reference path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats<T> {
    /// `sup_t |X_t - reference_t|` per path, in input order.
    pub sup_deviations: Vec<T>,
    pub eta: T,
    /// Share of paths with sup deviation strictly below `eta`.
    pub tube_fraction: T,
    pub mean: T,
    pub median: T,
    pub q90: T,
    pub max: T,
}

fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = T::lit(pos - lo as f64);
    sorted[lo] * (T::one() - w) + sorted[hi] * w
}

impl<T: Real> EnsembleStats<T> {
    pub fn from_deviations(sup_deviations: Vec<T>, eta: T) -> Result<Self> {
        if sup_deviations.is_empty() {
            return Err(Error::InvalidArgument("ensemble is empty".into()));
        }
        let n = T::from_usize_lossy(sup_deviations.len());
        let inside = sup_deviations.iter().filter(|&&d| d < eta).count();
        let mut acc = CompensatedSum::new();
        sup_deviations.iter().for_each(|&d| acc.add(d));
        let mut sorted = sup_deviations.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite deviations"));
        Ok(Self {
            tube_fraction: T::from_usize_lossy(inside) / n,
            mean: acc.value() / n,
            median: quantile(&sorted, 0.5),
            q90: quantile(&sorted, 0.9),
            max: sorted[sorted.len() - 1],
            sup_deviations,
            eta,
        })
    }

    /// Tube fraction at another threshold.
    pub fn tube_fraction_at(&self, eta: T) -> T {
        let inside = self.sup_deviations.iter().filter(|&&d| d < eta).count();
        T::from_usize_lossy(inside) / T::from_usize_lossy(self.sup_deviations.len())
    }
}

/// Per-path sup deviation from `reference`, tube fraction and summary quantiles.
pub fn ensemble_stats<T: Real>(paths: &[SamplePath<T>], reference: &SamplePath<T>, eta: T) -> Result<EnsembleStats<T>> {
    let deviations = paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            if !p.same_grid(reference) {
                return Err(Error::GridMismatch(format!("path {i} does not share the reference time grid")));
            }
            p.sup_distance(reference)
        })
        .collect::<Result<Vec<T>>>()?;
    EnsembleStats::from_deviations(deviations, eta)
}

/// Stack of per-time-slice kernel density estimates of the slow coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap<T> {
    pub times: Vec<T>,
    pub xs: Vec<T>,
    /// `density[i][j]` at `(times[i], xs[j])`.
    pub density: Vec<Vec<T>>,
}

impl<T: Real> Heatmap<T> {
    /// CSV with header `t,x,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,density\n");
        for (t, row) in self.times.iter().zip(&self.density) {
            for (x, d) in self.xs.iter().zip(row) {
                out.push_str(&format!("{t},{x},{d}\n"));
            }
        }
        out
    }

    pub fn max_density(&self) -> T {
        self.density.iter().flatten().copied().fold(T::zero(), T::max)
    }
}

/// KDE of `{X_t}` across the ensemble at every `stride`-th time node (plus the last).
/// Each slice uses the bandwidth from `rule`, raised to the grid spacing if smaller.
pub fn heatmap<T: Real>(paths: &[SamplePath<T>], stride: usize, points: usize, rule: Bandwidth<T>) -> Result<Heatmap<T>> {
    let first = paths.first().ok_or_else(|| Error::InvalidArgument("heatmap needs at least one path".into()))?;
    if paths.iter().any(|p| !p.same_grid(first)) {
        return Err(Error::GridMismatch("heatmap paths must share one time grid".into()));
    }
    let stride = stride.max(1);
    let mut slots: Vec<usize> = (0..first.len()).step_by(stride).collect();
    if slots.last() != Some(&(first.len() - 1)) {
        slots.push(first.len() - 1);
    }
    let slices: Vec<Vec<T>> = slots.iter().map(|&k| paths.iter().map(|p| p.x[k]).collect()).collect();
    let pad = slices
        .iter()
        .map(|s| select_pad(s, rule))
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), T::max);
    let lo = paths.iter().flat_map(|p| p.x.iter().copied()).fold(T::infinity(), T::min) - pad;
    let hi = paths.iter().flat_map(|p| p.x.iter().copied()).fold(T::neg_infinity(), T::max) + pad;
    let grid = KdeGrid::Fixed { lo, hi, points };
    let (xs, dx) = crate::invariant::DensityGrid::uniform_nodes(lo, hi, points)?;
    let density = slices
        .par_iter()
        .map(|s| {
            let h = super::kde::select_bandwidth(s, rule)?.max(dx);
            kde_density(s, grid, Bandwidth::Fixed(h)).map(|d| d.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap { times: slots.iter().map(|&k| first.times[k]).collect(), xs, density })
}

fn select_pad<T: Real>(samples: &[T], rule: Bandwidth<T>) -> Result<T> {
    Ok(T::lit(4.0) * super::kde::select_bandwidth(samples, rule)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(offset: f64) -> SamplePath<f64> {
        let times: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let x = times.iter().map(|t| t + offset).collect();
        SamplePath::deterministic(times, x, vec![1.0; 11]).unwrap()
    }

    #[test]
    fn identical_paths() {
        let r = line(0.0);
        let s = ensemble_stats(&[r.clone(), r.clone()], &r, 0.1).unwrap();
        assert_eq!(s.tube_fraction, 1.0);
        assert!(s.sup_deviations.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn shifted_reference_leaves_tube() {
        let s = ensemble_stats(&[line(0.0), line(0.0)], &line(0.5), 0.2).unwrap();
        assert_eq!(s.tube_fraction, 0.0);
        assert!((s.mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let other = SamplePath::deterministic(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(ensemble_stats(&[other], &line(0.0), 0.1), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn heatmap_slices() {
        let paths: Vec<_> = (0..20).map(|i| line(i as f64 * 0.01)).collect();
        let h = heatmap(&paths, 3, 64, Bandwidth::Silverman).unwrap();
        assert_eq!(h.times.len(), 5);
        assert_eq!(h.density[0].len(), 64);
        assert!(h.to_csv().starts_with("t,x,density\n"));
    }
}
