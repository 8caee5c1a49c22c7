use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariant::DensityGrid;
use crate::scalar::{CompensatedSum, Real};

/// Gaussian kernel bandwidth selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth<T> {
    /// `0.9 min(sd, IQR/1.34) n^(-1/5)`.
    #[default]
    Silverman,
    Fixed(T),
}

/// Evaluation grid for [`kde_density`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdeGrid<T> {
    /// `[min - 4h, max + 4h]` with the given number of points.
    Auto { points: usize },
    Fixed { lo: T, hi: T, points: usize },
}

impl<T> Default for KdeGrid<T> {
    fn default() -> Self {
        KdeGrid::Auto { points: 512 }
    }
}

fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = T::lit(pos - lo as f64);
    sorted[lo] * (T::one() - w) + sorted[hi] * w
}

/// Bandwidth chosen by `rule` for `samples`; falls back to the standard
/// deviation, then to 1, when the spread estimate vanishes.
pub fn select_bandwidth<T: Real>(samples: &[T], rule: Bandwidth<T>) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("kernel density estimate needs at least one sample".into()));
    }
    match rule {
        Bandwidth::Fixed(h) if h > T::zero() && h.is_finite() => Ok(h),
        Bandwidth::Fixed(h) => Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
        Bandwidth::Silverman => {
            let n = T::from_usize_lossy(samples.len());
            let mut mean = CompensatedSum::new();
            samples.iter().for_each(|&s| mean.add(s));
            let mean = mean.value() / n;
            let mut var = CompensatedSum::new();
            samples.iter().for_each(|&s| var.add((s - mean) * (s - mean)));
            let sd = if samples.len() > 1 { (var.value() / (n - T::one())).sqrt() } else { T::zero() };
            let mut sorted = samples.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
            let robust = iqr / T::lit(1.34);
            let spread = if robust > T::zero() { sd.min(robust) } else { sd };
            let spread = if spread > T::zero() { spread } else { T::one() };
            Ok(T::lit(0.9) * spread * n.powf(T::lit(-0.2)))
        }
    }
}

/// Gaussian kernel density estimate on a uniform grid, normalized to unit trapezoid integral.
pub fn kde_density<T: Real>(samples: &[T], grid: KdeGrid<T>, rule: Bandwidth<T>) -> Result<DensityGrid<T>> {
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite sample {bad}")));
    }
    let h = select_bandwidth(samples, rule)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let (lo, hi, points) = match grid {
        KdeGrid::Auto { points } => {
            let pad = T::lit(4.0) * h;
            (sorted[0] - pad, sorted[sorted.len() - 1] + pad, points)
        }
        KdeGrid::Fixed { lo, hi, points } => (lo, hi, points),
    };
    let (ys, dy) = DensityGrid::uniform_nodes(lo, hi, points)?;
    let reach = T::lit(9.0) * h;
    let inv_h = T::one() / h;
    let half = T::lit(0.5);
    let values = ys
        .iter()
        .map(|&y| {
            let first = sorted.partition_point(|&s| s < y - reach);
            let last = sorted.partition_point(|&s| s <= y + reach);
            let mut acc = CompensatedSum::new();
            for &s in &sorted[first..last] {
                let z = (y - s) * inv_h;
                acc.add((-half * z * z).exp());
            }
            acc.value()
        })
        .collect();
    let mut density = DensityGrid::from_parts(ys, dy, values)?;
    density.normalize()?;
    Ok(density)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_bump() {
        let d = kde_density(&[0.0f64], KdeGrid::default(), Bandwidth::Silverman).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-12);
        assert!(d.argmax().abs() <= d.dy);
        // h = 0.9 for one sample with no spread
        let peak = d.value_at(0.0);
        assert!((peak - 1.0 / (0.9 * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-3, "{peak}");
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(kde_density::<f64>(&[], KdeGrid::default(), Bandwidth::Silverman).is_err());
    }

    #[test]
    fn silverman_on_known_spread() {
        let samples: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let h = select_bandwidth(&samples, Bandwidth::Silverman).unwrap();
        let sd = (100.0f64 * 101.0 / 12.0).sqrt();
        let iqr = 74.25 - 24.75;
        let expected = 0.9 * sd.min(iqr / 1.34) * 100f64.powf(-0.2);
        assert!((h - expected).abs() < 1e-12);
    }
}
