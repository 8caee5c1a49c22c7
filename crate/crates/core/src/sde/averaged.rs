use super::integrate::macro_grid;
use super::path::SamplePath;
use crate::coeffs::FastSlowSystem;
use crate::error::{Error, Result};
use crate::invariant::AveragedDrift;
use crate::scalar::Real;

/// Averaged slow dynamics `x' = avg(F/λ)(t, x)` by classical RK4.
///
/// The returned path is deterministic: its `p` channel holds the averaged
/// drift at each node and its fast channel is empty.
pub fn simulate_averaged<T: Real>(system: &FastSlowSystem<T>, x0: T, horizon: T, step: T) -> Result<SamplePath<T>> {
    simulate_averaged_with(&AveragedDrift::new(system.clone()), x0, horizon, step)
}

/// As [`simulate_averaged`], reusing the density cache of `drift`.
pub fn simulate_averaged_with<T: Real>(drift: &AveragedDrift<T>, x0: T, horizon: T, step: T) -> Result<SamplePath<T>> {
    if !(step > T::zero()) || !(horizon >= T::zero()) || !step.is_finite() || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("need step > 0 and horizon >= 0, got {step}, {horizon}")));
    }
    let times = macro_grid(horizon, step);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let mut x = x0;
    let mut xs = Vec::with_capacity(times.len());
    let mut ps = Vec::with_capacity(times.len());
    let mut k1 = drift.eval(times[0], x)?;
    xs.push(x);
    ps.push(k1);
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k2 = drift.eval(t + half * h, x + half * h * k1)?;
        let k3 = drift.eval(t + half * h, x + half * h * k2)?;
        let k4 = drift.eval(t + h, x + h * k3)?;
        x = x + h * sixth * (k1 + two * k2 + two * k3 + k4);
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "averaged path", t: w[1].to_f64_lossy() });
        }
        k1 = drift.eval(w[1], x)?;
        xs.push(x);
        ps.push(k1);
    }
    SamplePath::deterministic(times, xs, ps)
}

/// Cubic Hermite interpolation of a deterministic path using its `p` channel as slope.
pub fn hermite_at<T: Real>(path: &SamplePath<T>, t: T) -> Result<T> {
    let times = &path.times;
    let n = times.len();
    let slack = T::lit(1e-12) * (T::one() + path.end_time().abs());
    if n == 0 || t < times[0] - slack || t > times[n - 1] + slack {
        return Err(Error::BeyondPath { requested: t.to_f64_lossy(), end: path.end_time().to_f64_lossy() });
    }
    if n == 1 {
        return Ok(path.x[0]);
    }
    let i = times.partition_point(|&s| s <= t).clamp(1, n - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    let h = t1 - t0;
    let s = ((t - t0) / h).max(T::zero()).min(T::one());
    let s2 = s * s;
    let s3 = s2 * s;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    Ok(h00 * path.x[i - 1] + h10 * h * path.p[i - 1] + h01 * path.x[i] + h11 * h * path.p[i])
}

/// Samples a deterministic path onto new times by [`hermite_at`].
pub fn resample_hermite<T: Real>(path: &SamplePath<T>, times: &[T]) -> Result<SamplePath<T>> {
    let mut xs = Vec::with_capacity(times.len());
    let mut ps = Vec::with_capacity(times.len());
    for &t in times {
        xs.push(hermite_at(path, t)?);
        ps.push(crate::sde::path::interpolate(&path.times, &path.p, t)?);
    }
    SamplePath::deterministic(times.to_vec(), xs, ps)
}
