use crate::error::{Error, Result};
use crate::invariant::{DensityGrid, TestFunction};
use crate::quad::{gradient_uniform, trapezoid_uniform};
use crate::scalar::Real;

/// Drift and diffusion sampled on a density grid.
fn sample_coefficients<T, B, S>(m: &DensityGrid<T>, b: B, sigma_sq: S) -> Result<(Vec<T>, Vec<T>)>
where
    T: Real,
    B: Fn(T) -> Result<T>,
    S: Fn(T) -> Result<T>,
{
    let mut drift = Vec::with_capacity(m.len());
    let mut diffusion = Vec::with_capacity(m.len());
    for &y in &m.ys {
        let s = sigma_sq(y)?;
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::DegenerateDiffusion { y: y.to_f64_lossy(), value: s.to_f64_lossy() });
        }
        drift.push(b(y)?);
        diffusion.push(s);
    }
    Ok((drift, diffusion))
}

/// Index range of the positive support; interior zeros are an error.
fn positive_support<T: Real>(m: &DensityGrid<T>) -> Result<std::ops::Range<usize>> {
    let first = m.values.iter().position(|&v| v > T::zero());
    let last = m.values.iter().rposition(|&v| v > T::zero());
    match (first, last) {
        (Some(a), Some(b)) if b >= a + 2 => {
            if let Some(k) = (a..=b).find(|&k| !(m.values[k] > T::zero())) {
                return Err(Error::DensityNotPositive { y: m.ys[k].to_f64_lossy() });
            }
            Ok(a..b + 1)
        }
        _ => Err(Error::InvalidArgument("density has fewer than three positive grid values".into())),
    }
}

/// Donsker–Varadhan functional of the 1-D diffusion `(b, Σ)` at the density `m`,
///
/// ```text
/// J(m) = ½ ∫ ( (Σm)' / (2Σm) − b/Σ )² Σ m dy
/// ```
///
/// with the logarithmic derivative taken by central differences over the
/// positive support of `m`.
pub fn dv_rate_1d<T, B, S>(m: &DensityGrid<T>, b: B, sigma_sq: S) -> Result<T>
where
    T: Real,
    B: Fn(T) -> Result<T>,
    S: Fn(T) -> Result<T>,
{
    let support = positive_support(m)?;
    let (drift, diffusion) = sample_coefficients(m, b, sigma_sq)?;
    let log_flux: Vec<T> = support.clone().map(|k| (diffusion[k] * m.values[k]).ln()).collect();
    let slope = gradient_uniform(&log_flux, m.dy);
    let half = T::lit(0.5);
    let integrand: Vec<T> = support
        .clone()
        .zip(&slope)
        .map(|(k, &d)| {
            let g = half * d - drift[k] / diffusion[k];
            half * g * g * diffusion[k] * m.values[k]
        })
        .collect();
    Ok(trapezoid_uniform(&integrand, m.dy))
}

/// Finite-family lower bound of the variational form of [`dv_rate_1d`]:
/// the largest of `∫ [h' (½(Σm)' − b m) − ½ h'² Σ m] dy` over `basis`
/// and the trivial choice `h = 0`.
///
/// The `(Σm)'` term is integrated by parts, so only `h''` is differentiated.
pub fn dv_rate_variational_lower_bound<T, B, S>(
    m: &DensityGrid<T>,
    b: B,
    sigma_sq: S,
    basis: &[&dyn TestFunction<T>],
) -> Result<T>
where
    T: Real,
    B: Fn(T) -> Result<T>,
    S: Fn(T) -> Result<T>,
{
    if basis.is_empty() {
        return Ok(T::zero());
    }
    let (drift, diffusion) = sample_coefficients(m, b, sigma_sq)?;
    let half = T::lit(0.5);
    let n = m.len();
    let mut best = T::zero();
    for h in basis {
        let integrand: Vec<T> = (0..n)
            .map(|k| {
                let y = m.ys[k];
                let flux = diffusion[k] * m.values[k];
                let d1 = h.d1(y);
                -half * h.d2(y) * flux - d1 * drift[k] * m.values[k] - half * d1 * d1 * flux
            })
            .collect();
        let boundary = half
            * (h.d1(m.ys[n - 1]) * diffusion[n - 1] * m.values[n - 1] - h.d1(m.ys[0]) * diffusion[0] * m.values[0]);
        best = best.max(trapezoid_uniform(&integrand, m.dy) + boundary);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::{Polynomial, PolyBump};

    fn gaussian(s2: f64) -> DensityGrid<f64> {
        let s = s2.sqrt();
        DensityGrid::from_fn(-14.0 * s, 14.0 * s, 4001, |y| (-y * y / (2.0 * s2)).exp()).unwrap()
    }

    #[test]
    fn stationary_gaussian_has_zero_rate() {
        let j = dv_rate_1d(&gaussian(0.5), |y| Ok(-y), |_| Ok(1.0)).unwrap();
        assert!(j.abs() <= 1e-8, "{j}");
    }

    #[test]
    fn unit_gaussian_rate() {
        let j = dv_rate_1d(&gaussian(1.0), |y| Ok(-y), |_| Ok(1.0)).unwrap();
        assert!((j - 0.125).abs() <= 1e-7, "{j}");
    }

    #[test]
    fn interior_zero_is_rejected() {
        let mut m = gaussian(1.0);
        let mid = m.len() / 2;
        m.values[mid] = 0.0;
        assert!(matches!(dv_rate_1d(&m, |y| Ok(-y), |_| Ok(1.0)), Err(Error::DensityNotPositive { .. })));
    }

    #[test]
    fn zero_basis_and_optimizer() {
        let m = gaussian(1.0);
        let zero = Polynomial::new(vec![0.0]);
        assert_eq!(dv_rate_variational_lower_bound(&m, |y| Ok(-y), |_| Ok(1.0), &[&zero]).unwrap(), 0.0);
        let opt = Polynomial::new(vec![0.0, 0.0, 0.25]);
        let v = dv_rate_variational_lower_bound(&m, |y| Ok(-y), |_| Ok(1.0), &[&opt]).unwrap();
        assert!((v - 0.125).abs() <= 1e-6, "{v}");
        let bump = PolyBump::new(0.0, 3.0, 2);
        let w = dv_rate_variational_lower_bound(&m, |y| Ok(-y), |_| Ok(1.0), &[&bump]).unwrap();
        assert!(w <= 0.125 + 1e-8);
    }
}
