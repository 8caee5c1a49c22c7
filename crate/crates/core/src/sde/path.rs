use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::noise::NoiseTally;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Trajectory sampled on a macro time grid.
///
/// `x` is the slow position, `p` its velocity (or the reduced drift for
/// first-order and averaged paths), `y` the fast coordinate. `y` is empty
/// for deterministic averaged paths; otherwise all channels share one length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath<T> {
    pub times: Vec<T>,
    pub x: Vec<T>,
    pub p: Vec<T>,
    pub y: Vec<T>,
    pub epsilon: T,
    pub seed: Option<u64>,
    pub path_index: Option<u64>,
    pub noise: NoiseTally,
}

impl<T: Real> SamplePath<T> {
    /// Deterministic path without a fast channel.
    pub fn deterministic(times: Vec<T>, x: Vec<T>, p: Vec<T>) -> Result<Self> {
        let path = Self {
            times,
            x,
            p,
            y: Vec::new(),
            epsilon: T::zero(),
            seed: None,
            path_index: None,
            noise: NoiseTally::default(),
        };
        path.validate()?;
        Ok(path)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    pub fn has_fast_channel(&self) -> bool {
        !self.y.is_empty()
    }

    /// Checks the shape and finiteness invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0 {
            return Err(Error::InvalidArgument("sample path has no samples".into()));
        }
        if self.x.len() != n || self.p.len() != n || !(self.y.is_empty() || self.y.len() == n) {
            return Err(Error::InvalidArgument(format!(
                "channel lengths differ: times {n}, x {}, p {}, y {}",
                self.x.len(),
                self.p.len(),
                self.y.len()
            )));
        }
        if let Some(index) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneGrid { index: index + 1 });
        }
        for (k, &t) in self.times.iter().enumerate() {
            let finite = self.x[k].is_finite() && self.p[k].is_finite() && self.y.get(k).is_none_or(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite { what: "sample path", t: t.to_f64_lossy() });
            }
        }
        Ok(())
    }

    /// Linear interpolation of the slow channel. `t` must lie in the sampled range.
    pub fn x_at(&self, t: T) -> Result<T> {
        interpolate(&self.times, &self.x, t)
    }

    /// Whether both paths are sampled on bit-identical time grids.
    pub fn same_grid(&self, other: &SamplePath<T>) -> bool {
        self.times == other.times
    }

    /// `sup_k |x_k - other.x_k|` over samples with `times[k] <= until`.
    pub fn sup_distance_until(&self, other: &SamplePath<T>, until: T) -> Result<T> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch(format!(
                "{} samples ending at {} vs {} samples ending at {}",
                self.len(),
                self.end_time(),
                other.len(),
                other.end_time()
            )));
        }
        Ok(self
            .times
            .iter()
            .zip(self.x.iter().zip(&other.x))
            .take_while(|(t, _)| **t <= until)
            .map(|(_, (a, b))| (*a - *b).abs())
            .fold(T::zero(), T::max))
    }

    pub fn sup_distance(&self, other: &SamplePath<T>) -> Result<T> {
        self.sup_distance_until(other, T::infinity())
    }

    /// CSV with header `time,X,p,Y`. The `Y` column is empty for deterministic paths.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,X,p,Y\n");
        for k in 0..self.len() {
            let y = self.y.get(k).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", self.times[k], self.x[k], self.p[k], y);
        }
        out
    }
}

/// Piecewise-linear interpolation of `(times, values)` at `t`.
pub fn interpolate<T: Real>(times: &[T], values: &[T], t: T) -> Result<T> {
    let (first, last) = match (times.first(), times.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidArgument("empty grid".into())),
    };
    let slack = T::lit(1e-12) * (T::one() + last.abs());
    if t < first - slack || t > last + slack {
        return Err(Error::BeyondPath { requested: t.to_f64_lossy(), end: last.to_f64_lossy() });
    }
    if times.len() == 1 {
        return Ok(values[0]);
    }
    let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[k - 1], times[k]);
    let w = ((t - t0) / (t1 - t0)).max(T::zero()).min(T::one());
    Ok(values[k - 1] + w * (values[k] - values[k - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> SamplePath<f64> {
        let times = vec![0.0, 0.5, 1.0];
        SamplePath::deterministic(times.clone(), times.iter().map(|t| 2.0 * t).collect(), vec![2.0; 3]).unwrap()
    }

    #[test]
    fn interpolation_is_exact_on_lines() {
        let p = line();
        assert_eq!(p.x_at(0.25).unwrap(), 0.5);
        assert_eq!(p.x_at(1.0).unwrap(), 2.0);
        assert!(matches!(p.x_at(1.5), Err(Error::BeyondPath { .. })));
    }

    #[test]
    fn validation_rejects_ragged_channels() {
        let mut p = line();
        p.p.pop();
        assert!(p.validate().is_err());
    }

    #[test]
    fn validation_rejects_non_finite() {
        let mut p = line();
        p.x[1] = f64::NAN;
        assert!(matches!(p.validate(), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn csv_layout() {
        let csv = line().to_csv();
        assert!(csv.starts_with("time,X,p,Y\n0,0,2,\n0.5,1,2,\n"));
    }

    #[test]
    fn sup_distance_needs_shared_grid() {
        let a = line();
        let mut b = line();
        b.x[2] = 5.0;
        assert_eq!(a.sup_distance(&b).unwrap(), 3.0);
        assert_eq!(a.sup_distance_until(&b, 0.5).unwrap(), 0.0);
        b.times[1] = 0.4;
        assert!(matches!(a.sup_distance(&b), Err(Error::GridMismatch(_))));
    }
}
