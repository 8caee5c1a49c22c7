use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre3, trapezoid_uniform};
use crate::scalar::{CompensatedSum, Real};

/// Uniform grid with nonnegative density values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid<T> {
    pub ys: Vec<T>,
    pub dy: T,
    pub values: Vec<T>,
}

impl<T: Real> DensityGrid<T> {
    /// Uniform grid of `n >= 2` points on `[lo, hi]`.
    pub fn uniform_nodes(lo: T, hi: T, n: usize) -> Result<(Vec<T>, T)> {
        if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("need n >= 2 and lo < hi, got n={n}, [{lo}, {hi}]")));
        }
        let dy = (hi - lo) / T::from_usize_lossy(n - 1);
        let ys = (0..n).map(|i| if i == n - 1 { hi } else { lo + T::from_usize_lossy(i) * dy }).collect();
        Ok((ys, dy))
    }

    /// Wraps raw values without normalizing.
    pub fn from_parts(ys: Vec<T>, dy: T, values: Vec<T>) -> Result<Self> {
        if ys.len() != values.len() || ys.len() < 2 {
            return Err(Error::GridMismatch(format!("{} nodes vs {} values", ys.len(), values.len())));
        }
        if !(dy > T::zero()) {
            return Err(Error::InvalidArgument(format!("cell width must be positive, got {dy}")));
        }
        for (i, w) in ys.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotoneGrid { index: i + 1 });
            }
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("density values must be finite and nonnegative, found {v}")));
        }
        Ok(Self { ys, dy, values })
    }

    /// Samples `f` on a uniform grid and normalizes.
    pub fn from_fn<F>(lo: T, hi: T, n: usize, f: F) -> Result<Self>
    where
        F: Fn(T) -> T,
    {
        let (ys, dy) = Self::uniform_nodes(lo, hi, n)?;
        let values = ys.iter().map(|&y| f(y)).collect();
        let mut grid = Self::from_parts(ys, dy, values)?;
        grid.normalize()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn lo(&self) -> T {
        self.ys[0]
    }

    pub fn hi(&self) -> T {
        self.ys[self.ys.len() - 1]
    }

    /// Trapezoid integral of the values.
    pub fn integral(&self) -> T {
        trapezoid_uniform(&self.values, self.dy)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.integral();
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::NonIntegrable(format!("density mass is {mass}")));
        }
        for v in &mut self.values {
            *v = *v / mass;
        }
        Ok(())
    }

    /// Trapezoid integral of `g(y) * m(y)`.
    pub fn expect<F>(&self, mut g: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        let mut prod = Vec::with_capacity(self.len());
        for (&y, &m) in self.ys.iter().zip(&self.values) {
            prod.push(if m == T::zero() { T::zero() } else { g(y)? * m });
        }
        Ok(trapezoid_uniform(&prod, self.dy))
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, y: T) -> T {
        if !(y >= self.lo()) || !(y <= self.hi()) {
            return T::zero();
        }
        let idx = self.ys.partition_point(|&g| g <= y);
        if idx == 0 {
            return self.values[0];
        }
        if idx >= self.len() {
            return self.values[self.len() - 1];
        }
        let (y0, y1) = (self.ys[idx - 1], self.ys[idx]);
        let w = (y - y0) / (y1 - y0);
        self.values[idx - 1] * (T::one() - w) + self.values[idx] * w
    }

    /// Mass of `[a, b]` under the piecewise-linear interpolant. Infinite ends are allowed.
    pub fn mass_between(&self, a: T, b: T) -> T {
        let (a, b) = (a.max(self.lo()), b.min(self.hi()));
        if !(a < b) {
            return T::zero();
        }
        let half = T::lit(0.5);
        let mut acc = CompensatedSum::new();
        let first = self.ys.partition_point(|&g| g <= a);
        let mut left = a;
        let mut left_value = self.value_at(a);
        for &y in &self.ys[first..] {
            if y >= b {
                break;
            }
            let v = self.value_at(y);
            acc.add(half * (left_value + v) * (y - left));
            left = y;
            left_value = v;
        }
        acc.add(half * (left_value + self.value_at(b)) * (b - left));
        acc.value()
    }

    /// Grid node of the largest value (first one on ties).
    pub fn argmax(&self) -> T {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.ys[best]
    }

    /// `max_i |m(y_i) - exact(y_i)|`.
    pub fn max_abs_error<F>(&self, exact: F) -> T
    where
        F: Fn(T) -> T,
    {
        self.ys.iter().zip(&self.values).map(|(&y, &m)| (m - exact(y)).abs()).fold(T::zero(), T::max)
    }

    /// Two-column CSV with header `y,m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,m\n");
        for (y, m) in self.ys.iter().zip(&self.values) {
            out.push_str(&format!("{y},{m}\n"));
        }
        out
    }
}

/// Grid construction for [`stationary_density_1d`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub center: T,
    /// Initial half width; `None` derives `8 s` from the linearized drift at the center.
    pub half_width: Option<T>,
    pub points: usize,
    /// Boundary values must fall below this fraction of the peak.
    pub tail_tol: T,
    pub max_widenings: usize,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self { center: T::zero(), half_width: None, points: 4001, tail_tol: T::lit(1e-12), max_widenings: 12 }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn with_half_width(mut self, half_width: T) -> Self {
        self.half_width = Some(half_width);
        self
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }
}

fn initial_half_width<T: Real, B, S>(b: &B, sigma_sq: &S, center: T) -> Result<T>
where
    B: Fn(T) -> Result<T>,
    S: Fn(T) -> Result<T>,
{
    let step = T::lit(1e-3);
    let slope = (b(center + step)? - b(center - step)?) / (step + step);
    let diffusion = sigma_sq(center)?;
    let scale = if slope < T::zero() && diffusion > T::zero() && slope.is_finite() && diffusion.is_finite() {
        (diffusion / (T::lit(2.0) * slope.abs())).sqrt().min(T::one())
    } else {
        T::one()
    };
    Ok(T::lit(8.0) * scale)
}

/// Stationary density `m ∝ exp(2 ∫ b/Σ) / Σ` of the 1-D diffusion
/// `dY = b(Y) dt + sqrt(Σ(Y)) dW`.
///
/// The exponent is accumulated cell by cell with three-point Gauss–Legendre,
/// starting at the grid center; the grid is widened until both boundary
/// values fall below `tail_tol` times the peak.
pub fn stationary_density_1d<T, B, S>(b: B, sigma_sq: S, spec: &GridSpec<T>) -> Result<DensityGrid<T>>
where
    T: Real,
    B: Fn(T) -> Result<T>,
    S: Fn(T) -> Result<T>,
{
    if spec.points < 3 {
        return Err(Error::InvalidArgument(format!("density grid needs at least 3 points, got {}", spec.points)));
    }
    let n = if spec.points.is_multiple_of(2) { spec.points + 1 } else { spec.points };
    let mid = n / 2;
    let checked_sigma = |y: T| -> Result<T> {
        let v = sigma_sq(y)?;
        if v > T::zero() && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegenerateDiffusion { y: y.to_f64_lossy(), value: v.to_f64_lossy() })
        }
    };
    let ratio = |y: T| -> Result<T> { Ok(b(y)? / checked_sigma(y)?) };

    let mut half = match spec.half_width {
        Some(h) if h > T::zero() && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("half width must be positive, got {h}"))),
        None => initial_half_width(&b, &sigma_sq, spec.center)?,
    };
    let two = T::lit(2.0);

    for _ in 0..=spec.max_widenings {
        let dy = half / T::from_usize_lossy(mid);
        let ys: Vec<T> = (0..n)
            .map(|i| {
                let offset = if i >= mid { T::from_usize_lossy(i - mid) * dy } else { -(T::from_usize_lossy(mid - i) * dy) };
                spec.center + offset
            })
            .collect();
        let mut potential = vec![T::zero(); n];
        for i in mid + 1..n {
            potential[i] = potential[i - 1] + gauss_legendre3(ys[i - 1], ys[i], &ratio)?;
        }
        for i in (0..mid).rev() {
            potential[i] = potential[i + 1] - gauss_legendre3(ys[i], ys[i + 1], &ratio)?;
        }
        let mut log_m = Vec::with_capacity(n);
        for (&y, &u) in ys.iter().zip(&potential) {
            let l = two * u - checked_sigma(y)?.ln();
            if l.is_nan() {
                return Err(Error::NonFinite { what: "stationary density exponent", t: y.to_f64_lossy() });
            }
            log_m.push(l);
        }
        let peak = log_m.iter().copied().fold(T::neg_infinity(), T::max);
        if !peak.is_finite() {
            return Err(Error::NonIntegrable("density exponent is unbounded".into()));
        }
        let values: Vec<T> = log_m.iter().map(|&l| (l - peak).exp()).collect();
        if values[0] < spec.tail_tol && values[n - 1] < spec.tail_tol {
            let mut grid = DensityGrid { ys, dy, values };
            grid.normalize()?;
            return Ok(grid);
        }
        half = half * T::lit(1.5);
    }
    Err(Error::NonIntegrable(format!(
        "boundary mass stays above tolerance after {} widenings (half width {half})",
        spec.max_widenings
    )))
}
