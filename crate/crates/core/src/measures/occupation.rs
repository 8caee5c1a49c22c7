use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::sde::SamplePath;

/// Increasing bin edges over the fast coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bins<T> {
    edges: Vec<T>,
}

impl<T: Real> Bins<T> {
    pub fn new(edges: Vec<T>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidArgument("need at least two bin edges".into()));
        }
        for (i, w) in edges.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::NonMonotoneGrid { index: i + 1 });
            }
        }
        Ok(Self { edges })
    }

    pub fn uniform(lo: T, hi: T, count: usize) -> Result<Self> {
        if count == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!("need count > 0 and lo < hi, got {count}, [{lo}, {hi}]")));
        }
        let width = (hi - lo) / T::from_usize_lossy(count);
        let edges = (0..=count).map(|i| if i == count { hi } else { lo + T::from_usize_lossy(i) * width }).collect();
        Self::new(edges)
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Each bin split in two at its midpoint.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len() - 1);
        for w in self.edges.windows(2) {
            edges.push(w[0]);
            edges.push((w[0] + w[1]) * T::lit(0.5));
        }
        edges.push(self.edges[self.edges.len() - 1]);
        Self { edges }
    }

    /// `Ok(i)` for bin `[e_i, e_{i+1})` (last bin closed), `Err(false)` below, `Err(true)` above.
    fn locate(&self, y: T) -> std::result::Result<usize, bool> {
        let n = self.edges.len();
        if y < self.edges[0] {
            return Err(false);
        }
        if y > self.edges[n - 1] {
            return Err(true);
        }
        if y == self.edges[n - 1] {
            return Ok(n - 2);
        }
        Ok(self.edges.partition_point(|&e| e <= y) - 1)
    }
}

/// Time the fast path spent in each bin over `[0, elapsed]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationMeasure<T> {
    pub edges: Vec<T>,
    pub masses: Vec<T>,
    /// Time spent below the first edge.
    pub underflow: T,
    /// Time spent above the last edge.
    pub overflow: T,
    pub elapsed: T,
}

impl<T: Real> OccupationMeasure<T> {
    /// Sum of all cells, including the under- and overflow cells.
    pub fn total(&self) -> T {
        let mut acc = CompensatedSum::new();
        acc.add(self.underflow);
        acc.add(self.overflow);
        for &m in &self.masses {
            acc.add(m);
        }
        acc.value()
    }

    /// Mass per unit time per unit length in each bin.
    pub fn density(&self) -> Vec<T> {
        self.masses
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&m, w)| m / (self.elapsed * (w[1] - w[0])))
            .collect()
    }

    /// L1 distance between the time-normalized occupation measure and a
    /// probability law, both restricted to the bins plus the two tail cells.
    /// `prob(a, b)` must return the law's mass of `[a, b]`; infinite ends are passed as such.
    pub fn l1_distance<P>(&self, mut prob: P) -> T
    where
        P: FnMut(T, T) -> T,
    {
        let n = self.edges.len();
        let mut acc = CompensatedSum::new();
        acc.add((self.underflow / self.elapsed - prob(T::neg_infinity(), self.edges[0])).abs());
        for (i, &m) in self.masses.iter().enumerate() {
            acc.add((m / self.elapsed - prob(self.edges[i], self.edges[i + 1])).abs());
        }
        acc.add((self.overflow / self.elapsed - prob(self.edges[n - 1], T::infinity())).abs());
        acc.value()
    }

    /// CSV with header `lo,hi,mass`; tail cells use infinite bounds.
    pub fn to_csv(&self) -> String {
        let n = self.edges.len();
        let mut out = String::from("lo,hi,mass\n");
        out.push_str(&format!("-inf,{},{}\n", self.edges[0], self.underflow));
        for (i, m) in self.masses.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], m));
        }
        out.push_str(&format!("{},inf,{}\n", self.edges[n - 1], self.overflow));
        out
    }
}

/// Occupation measure of the fast channel up to time `t`, left-endpoint rule.
pub fn occupation_measure<T: Real>(path: &SamplePath<T>, bins: &Bins<T>, t: T) -> Result<OccupationMeasure<T>> {
    if !path.has_fast_channel() {
        return Err(Error::InvalidArgument("path has no fast channel".into()));
    }
    if !(t >= T::zero()) || t > path.end_time() {
        return Err(Error::BeyondPath { requested: t.to_f64_lossy(), end: path.end_time().to_f64_lossy() });
    }
    let mut cells = vec![CompensatedSum::new(); bins.count()];
    let mut under = CompensatedSum::new();
    let mut over = CompensatedSum::new();
    for k in 0..path.len().saturating_sub(1) {
        let start = path.times[k];
        if start >= t {
            break;
        }
        let dt = path.times[k + 1].min(t) - start;
        match bins.locate(path.y[k]) {
            Ok(i) => cells[i].add(dt),
            Err(false) => under.add(dt),
            Err(true) => over.add(dt),
        }
    }
    Ok(OccupationMeasure {
        edges: bins.edges().to_vec(),
        masses: cells.iter().map(CompensatedSum::value).collect(),
        underflow: under.value(),
        overflow: over.value(),
        elapsed: t,
    })
}
