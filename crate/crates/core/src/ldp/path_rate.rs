use serde::{Deserialize, Serialize};

use super::dv::dv_rate_1d;
use crate::coeffs::FastSlowSystem;
use crate::error::{Error, Result};
use crate::invariant::{averaged_drift_with, AveragedDrift, DensityGrid};
use crate::quad::trapezoid;
use crate::scalar::Real;
use crate::sde::SamplePath;

/// Default tolerance on the drift constraint in [`path_rate`].
pub const DEFAULT_DRIFT_TOL: f64 = 1e-3;

/// Candidate slow path with one fast density per time node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair<T> {
    pub phi: SamplePath<T>,
    pub densities: Vec<DensityGrid<T>>,
}

impl<T: Real> CandidatePair<T> {
    pub fn new(phi: SamplePath<T>, densities: Vec<DensityGrid<T>>) -> Result<Self> {
        if phi.len() != densities.len() {
            return Err(Error::GridMismatch(format!("{} path nodes vs {} densities", phi.len(), densities.len())));
        }
        if phi.len() < 3 {
            return Err(Error::InvalidArgument("candidate path needs at least three nodes".into()));
        }
        for (k, m) in densities.iter().enumerate() {
            let mass = m.integral();
            if (mass - T::one()).abs() > T::lit(1e-6) {
                return Err(Error::InvalidArgument(format!("density {k} has mass {mass}, expected 1")));
            }
        }
        phi.validate()?;
        Ok(Self { phi, densities })
    }

    /// The averaged path paired with the frozen stationary densities along it.
    pub fn averaged(drift: &AveragedDrift<T>, phi: SamplePath<T>) -> Result<Self> {
        let densities = phi
            .times
            .iter()
            .zip(&phi.x)
            .map(|(&t, &x)| drift.density(t, x).map(|m| (*m).clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(phi, densities)
    }
}

/// Outcome of [`path_rate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathRate<T> {
    Finite { value: T, max_drift_gap: T },
    /// The drift constraint fails by more than the tolerance at time `at`.
    Infinite { max_drift_gap: T, at: T },
}

impl<T: Real> PathRate<T> {
    pub fn value(&self) -> T {
        match self {
            PathRate::Finite { value, .. } => *value,
            PathRate::Infinite { .. } => T::infinity(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PathRate::Finite { .. })
    }
}

/// Three-point derivative on a possibly non-uniform grid.
fn path_velocity<T: Real>(times: &[T], xs: &[T]) -> Vec<T> {
    let n = times.len();
    let three_point = |i0: usize, at: usize| {
        let (t0, t1, t2) = (times[i0], times[i0 + 1], times[i0 + 2]);
        let t = times[at];
        let l0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
        let l1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
        let l2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
        l0 * xs[i0] + l1 * xs[i0 + 1] + l2 * xs[i0 + 2]
    };
    (0..n)
        .map(|i| match i {
            0 => three_point(0, 0),
            i if i == n - 1 => three_point(n - 3, n - 1),
            i => three_point(i - 1, i),
        })
        .collect()
}

/// Per-node ingredients of [`path_rate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateProfile<T> {
    pub times: Vec<T>,
    pub x: Vec<T>,
    /// `|φ'_s − ∫ (F/λ)(s, φ_s, y) m_s(y) dy|`.
    pub drift_gaps: Vec<T>,
    /// `J_{s, φ_s}(m_s)`.
    pub rates: Vec<T>,
}

impl<T: Real> RateProfile<T> {
    /// CSV with header `t,x,drift_gap,rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,drift_gap,rate\n");
        for k in 0..self.times.len() {
            out.push_str(&format!("{},{},{},{}\n", self.times[k], self.x[k], self.drift_gaps[k], self.rates[k]));
        }
        out
    }
}

fn drift_gaps<T: Real>(pair: &CandidatePair<T>, system: &FastSlowSystem<T>) -> Result<Vec<T>> {
    let phi = &pair.phi;
    let velocity = path_velocity(&phi.times, &phi.x);
    pair.densities
        .iter()
        .enumerate()
        .map(|(k, m)| Ok((velocity[k] - averaged_drift_with(system, phi.times[k], phi.x[k], m)?).abs()))
        .collect()
}

fn per_time_rates<T: Real>(pair: &CandidatePair<T>, system: &FastSlowSystem<T>) -> Result<Vec<T>> {
    let phi = &pair.phi;
    pair.densities
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let (t, x) = (phi.times[k], phi.x[k]);
            dv_rate_1d(m, |y| system.fast_drift(t, x, y), |y| system.diffusion_matrix(t, x, y))
                .map_err(|e| e.context(format!("rate density at s={t}")))
        })
        .collect()
}

/// Drift gaps and per-time rates at every node, whether or not the constraint holds.
pub fn rate_profile<T: Real>(pair: &CandidatePair<T>, system: &FastSlowSystem<T>) -> Result<RateProfile<T>> {
    Ok(RateProfile {
        times: pair.phi.times.clone(),
        x: pair.phi.x.clone(),
        drift_gaps: drift_gaps(pair, system)?,
        rates: per_time_rates(pair, system)?,
    })
}

/// Path rate `∫ J_{s, φ_s}(m_s) ds` of a candidate pair, or the infinite
/// flag when `|φ'_s − ∫ (F/λ)(s, φ_s, y) m_s(y) dy|` exceeds `drift_tol`
/// somewhere. The initial-point rate is zero.
pub fn path_rate<T: Real>(pair: &CandidatePair<T>, system: &FastSlowSystem<T>, drift_tol: T) -> Result<PathRate<T>> {
    let gaps = drift_gaps(pair, system)?;
    let mut worst = T::zero();
    let mut worst_at = pair.phi.times[0];
    for (&gap, &t) in gaps.iter().zip(&pair.phi.times) {
        if gap > worst || gap.is_nan() {
            worst = gap;
            worst_at = t;
        }
    }
    if !(worst <= drift_tol) {
        return Ok(PathRate::Infinite { max_drift_gap: worst, at: worst_at });
    }
    let per_time = per_time_rates(pair, system)?;
    Ok(PathRate::Finite { value: trapezoid(&pair.phi.times, &per_time)?, max_drift_gap: worst })
}
