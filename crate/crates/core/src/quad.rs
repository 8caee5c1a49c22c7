//! Small quadrature toolkit shared by the analysis modules.

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Three-point Gauss–Legendre rule on `[a, b]`; exact for quintics.
pub fn gauss_legendre3<T: Real, F>(a: T, b: T, mut f: F) -> Result<T>
where
    F: FnMut(T) -> Result<T>,
{
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let node = T::lit(0.6).sqrt() * half;
    let outer = T::lit(5.0 / 9.0);
    let inner = T::lit(8.0 / 9.0);
    Ok(half * (outer * f(mid - node)? + inner * f(mid)? + outer * f(mid + node)?))
}

/// Trapezoid rule on a uniform grid of spacing `dx`.
pub fn trapezoid_uniform<T: Real>(values: &[T], dx: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let mut acc = CompensatedSum::new();
            acc.add((values[0] + values[n - 1]) * T::lit(0.5));
            for &v in &values[1..n - 1] {
                acc.add(v);
            }
            acc.value() * dx
        }
    }
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid<T: Real>(xs: &[T], values: &[T]) -> Result<T> {
    if xs.len() != values.len() {
        return Err(Error::GridMismatch(format!("{} abscissae vs {} values", xs.len(), values.len())));
    }
    let mut acc = CompensatedSum::new();
    for i in 1..xs.len() {
        let dx = xs[i] - xs[i - 1];
        if !(dx > T::zero()) {
            return Err(Error::NonMonotoneGrid { index: i });
        }
        acc.add(dx * (values[i] + values[i - 1]) * T::lit(0.5));
    }
    Ok(acc.value())
}

/// Composite Simpson rule on a uniform grid; needs an odd number of samples.
pub fn simpson_uniform<T: Real>(values: &[T], dx: T) -> Result<T> {
    let n = values.len();
    if n == 1 {
        return Ok(T::zero());
    }
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("Simpson rule needs an odd sample count >= 3, got {n}")));
    }
    let mut acc = CompensatedSum::new();
    acc.add(values[0] + values[n - 1]);
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc.add(if i % 2 == 1 { T::lit(4.0) * v } else { T::lit(2.0) * v });
    }
    Ok(acc.value() * dx / T::lit(3.0))
}

/// Central differences in the interior, second-order one-sided at the ends.
pub fn gradient_uniform<T: Real>(values: &[T], dx: T) -> Vec<T> {
    let n = values.len();
    if n < 3 {
        return match n {
            2 => vec![(values[1] - values[0]) / dx; 2],
            _ => vec![T::zero(); n],
        };
    }
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(n);
    out.push((-T::lit(3.0) * values[0] + T::lit(4.0) * values[1] - values[2]) / (two * dx));
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]) / (two * dx));
    }
    out.push((T::lit(3.0) * values[n - 1] - T::lit(4.0) * values[n - 2] + values[n - 3]) / (two * dx));
    out
}
