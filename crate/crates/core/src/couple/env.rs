use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sde::NoiseStream;

/// Source of the fast input `ξ_{t/ε}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvKind<T> {
    /// The system's own fast diffusion.
    Diffusion,
    /// Ornstein–Uhlenbeck `dξ = −θ ξ ds + σ dW` run at accelerated time `s = t/ε`.
    Ou { theta: T, sigma: T },
    /// Jump process on `levels` with exponential holding times of mean `ε / rate`.
    Telegraph { rate: T, levels: Vec<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec<T> {
    #[serde(flatten)]
    pub kind: EnvKind<T>,
    /// Declared pathwise bound on `|ξ|`, checked on every generated path.
    #[serde(default)]
    pub bound: Option<T>,
}

impl<T: Real> EnvSpec<T> {
    pub fn diffusion() -> Self {
        Self { kind: EnvKind::Diffusion, bound: None }
    }

    pub fn ou(theta: T, sigma: T) -> Self {
        Self { kind: EnvKind::Ou { theta, sigma }, bound: None }
    }

    pub fn telegraph(rate: T, levels: Vec<T>) -> Self {
        Self { kind: EnvKind::Telegraph { rate, levels }, bound: None }
    }

    pub fn with_bound(mut self, bound: T) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            EnvKind::Diffusion => {}
            EnvKind::Ou { theta, sigma } => {
                if !(*theta > T::zero()) || !(*sigma >= T::zero()) || !theta.is_finite() || !sigma.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "OU environment needs theta > 0 and sigma >= 0, got {theta}, {sigma}"
                    )));
                }
            }
            EnvKind::Telegraph { rate, levels } => {
                if !(*rate > T::zero()) || !rate.is_finite() {
                    return Err(Error::InvalidArgument(format!("telegraph rate must be positive, got {rate}")));
                }
                if levels.is_empty() || levels.iter().any(|l| !l.is_finite()) {
                    return Err(Error::InvalidArgument("telegraph needs at least one finite level".into()));
                }
            }
        }
        match self.bound {
            Some(b) if !(b >= T::zero()) => Err(Error::InvalidArgument(format!("bound must be nonnegative, got {b}"))),
            _ => Ok(()),
        }
    }
}

/// Path of the environment on `grid` (which starts at time 0).
///
/// OU paths start from the stationary law and use the exact Gaussian
/// transition; telegraph paths start on a uniformly drawn level and jump
/// to a uniformly drawn different level. The diffusion kind has no
/// standalone path and is rejected.
pub fn env_process<T: Real>(spec: &EnvSpec<T>, epsilon: T, grid: &[T], stream: &mut NoiseStream) -> Result<Vec<T>> {
    spec.validate()?;
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
    }
    let path = match &spec.kind {
        EnvKind::Diffusion => {
            return Err(Error::InvalidArgument("the diffusion environment is generated by the system itself".into()))
        }
        EnvKind::Ou { theta, sigma } => ou_path(*theta, *sigma, epsilon, grid, stream),
        EnvKind::Telegraph { rate, levels } => telegraph_path(*rate, levels, epsilon, grid, stream),
    };
    if let Some(bound) = spec.bound {
        if let Some(v) = path.iter().find(|v| v.abs() > bound) {
            return Err(Error::InvalidArgument(format!("environment value {v} exceeds the declared bound {bound}")));
        }
    }
    Ok(path)
}

fn ou_path<T: Real>(theta: T, sigma: T, epsilon: T, grid: &[T], stream: &mut NoiseStream) -> Vec<T> {
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(grid.len());
    if grid.is_empty() {
        return out;
    }
    let mut xi = sigma / (two * theta).sqrt() * stream.normal::<T>();
    out.push(xi);
    for w in grid.windows(2) {
        let a = theta * (w[1] - w[0]) / epsilon;
        let decay = (-a).exp();
        let sd = sigma * (-(-two * a).exp_m1() / (two * theta)).sqrt();
        xi = xi * decay + sd * stream.normal::<T>();
        out.push(xi);
    }
    out
}

fn telegraph_path<T: Real>(rate: T, levels: &[T], epsilon: T, grid: &[T], stream: &mut NoiseStream) -> Vec<T> {
    let count = levels.len();
    let pick = |stream: &mut NoiseStream, n: usize| ((stream.uniform() * n as f64) as usize).min(n - 1);
    let mean_hold = epsilon / rate;
    let mut out = Vec::with_capacity(grid.len());
    let Some(&start) = grid.first() else { return out };
    let mut state = pick(stream, count);
    let mut next_jump = start + mean_hold * T::lit(stream.exponential());
    for &t in grid {
        while next_jump <= t {
            if count > 1 {
                let other = pick(stream, count - 1);
                state = if other >= state { other + 1 } else { other };
            }
            next_jump = next_jump + mean_hold * T::lit(stream.exponential());
        }
        out.push(levels[state]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn telegraph_stays_on_levels() {
        let spec = EnvSpec::telegraph(1.0, vec![-1.0, 1.0]).with_bound(1.0);
        let path = env_process(&spec, 0.01, &grid(1000, 1e-3), &mut NoiseStream::new(4, 0)).unwrap();
        assert!(path.iter().all(|&v| v == -1.0 || v == 1.0));
        let switches = path.windows(2).filter(|w| w[0] != w[1]).count();
        // expected about T * rate / eps = 100 switches
        assert!((60..140).contains(&switches), "{switches}");
    }

    #[test]
    fn ou_has_stationary_variance() {
        let eps = 1e-3;
        let g = grid(10_000, 0.1 * eps);
        let path = env_process(&EnvSpec::ou(1.0, 1.0), eps, &g, &mut NoiseStream::new(2024, 0)).unwrap();
        let n = path.len() as f64;
        let mean = path.iter().sum::<f64>() / n;
        let var = path.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var - 0.5).abs() <= 0.05, "{var}");
    }

    #[test]
    fn same_seed_same_path() {
        let spec = EnvSpec::ou(2.0, 0.5);
        let g = grid(100, 0.01);
        let a = env_process(&spec, 0.1, &g, &mut NoiseStream::new(1, 3)).unwrap();
        let b = env_process(&spec, 0.1, &g, &mut NoiseStream::new(1, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs() {
        let g = grid(3, 0.1);
        let s = &mut NoiseStream::new(0, 0);
        assert!(env_process(&EnvSpec::<f64>::diffusion(), 0.1, &g, s).is_err());
        assert!(env_process(&EnvSpec::ou(-1.0, 1.0), 0.1, &g, s).is_err());
        assert!(env_process(&EnvSpec::telegraph(1.0, vec![]), 0.1, &g, s).is_err());
        assert!(env_process(&EnvSpec::ou(1.0, 1.0).with_bound(1e-9), 0.1, &g, s).is_err());
    }
}
