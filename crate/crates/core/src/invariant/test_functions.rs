use crate::error::Result;
use crate::scalar::Real;

use super::density::DensityGrid;

/// Smooth scalar function with its first two derivatives.
pub trait TestFunction<T>: Send + Sync {
    fn value(&self, y: T) -> T;
    fn d1(&self, y: T) -> T;
    fn d2(&self, y: T) -> T;
}

/// `z^degree * exp(-1 / (1 - z^2))` with `z = (y - center) / radius`, zero for `|z| >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyBump<T> {
    pub center: T,
    pub radius: T,
    pub degree: u32,
}

impl<T: Real> PolyBump<T> {
    pub fn new(center: T, radius: T, degree: u32) -> Self {
        Self { center, radius, degree }
    }

    fn parts(&self, y: T) -> Option<(T, T, T, T)> {
        let z = (y - self.center) / self.radius;
        let q = T::one() - z * z;
        if !(q > T::zero()) {
            return None;
        }
        let bump = (-T::one() / q).exp();
        let g = -T::lit(2.0) * z / (q * q);
        let g2 = (T::lit(6.0) * z.powi(4) - T::lit(2.0)) / q.powi(4);
        Some((z, bump, bump * g, bump * g2))
    }

    fn power(z: T, k: i64) -> T {
        if k < 0 {
            T::zero()
        } else {
            z.powi(k as i32)
        }
    }
}

impl<T: Real> TestFunction<T> for PolyBump<T> {
    fn value(&self, y: T) -> T {
        self.parts(y).map_or(T::zero(), |(z, phi, _, _)| Self::power(z, self.degree as i64) * phi)
    }

    fn d1(&self, y: T) -> T {
        let k = self.degree as i64;
        self.parts(y).map_or(T::zero(), |(z, phi, dphi, _)| {
            (T::from_usize_lossy(k as usize) * Self::power(z, k - 1) * phi + Self::power(z, k) * dphi) / self.radius
        })
    }

    fn d2(&self, y: T) -> T {
        let k = self.degree as i64;
        let kf = T::from_usize_lossy(k as usize);
        self.parts(y).map_or(T::zero(), |(z, phi, dphi, ddphi)| {
            (kf * (kf - T::one()) * Self::power(z, k - 2) * phi
                + T::lit(2.0) * kf * Self::power(z, k - 1) * dphi
                + Self::power(z, k) * ddphi)
                / (self.radius * self.radius)
        })
    }
}

/// Polynomial `sum_k coeffs[k] y^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    fn horner(coeffs: impl DoubleEndedIterator<Item = T>, y: T) -> T {
        coeffs.rev().fold(T::zero(), |acc, c| acc * y + c)
    }
}

impl<T: Real> TestFunction<T> for Polynomial<T> {
    fn value(&self, y: T) -> T {
        Self::horner(self.coeffs.iter().copied(), y)
    }

    fn d1(&self, y: T) -> T {
        Self::horner(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * T::from_usize_lossy(k)), y)
    }

    fn d2(&self, y: T) -> T {
        Self::horner(
            self.coeffs.iter().enumerate().skip(2).map(|(k, &c)| c * T::from_usize_lossy(k * (k - 1))),
            y,
        )
    }
}

/// Five bump functions of degree 0 through 4 centred at `center`.
pub fn standard_basis<T: Real>(center: T, radius: T) -> Vec<PolyBump<T>> {
    (0..5).map(|k| PolyBump::new(center, radius, k)).collect()
}

/// `max_h |∫ (Σ h''/2 + b h') m dy|` by trapezoid on the density grid.
pub fn weak_stationarity_residual<T, B, S>(
    m: &DensityGrid<T>,
    b: B,
    sigma_sq: S,
    test_fns: &[&dyn TestFunction<T>],
) -> Result<T>
where
    T: Real,
    B: Fn(T) -> Result<T>,
    S: Fn(T) -> Result<T>,
{
    if test_fns.is_empty() {
        return Ok(T::zero());
    }
    let mut drift = Vec::with_capacity(m.len());
    let mut diffusion = Vec::with_capacity(m.len());
    for &y in &m.ys {
        drift.push(b(y)?);
        diffusion.push(sigma_sq(y)?);
    }
    let half = T::lit(0.5);
    let mut worst = T::zero();
    for h in test_fns {
        let integrand: Vec<T> = m
            .ys
            .iter()
            .enumerate()
            .map(|(i, &y)| (half * diffusion[i] * h.d2(y) + drift[i] * h.d1(y)) * m.values[i])
            .collect();
        worst = worst.max(crate::quad::trapezoid_uniform(&integrand, m.dy).abs());
    }
    Ok(worst)
}
