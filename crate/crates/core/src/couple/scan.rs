use serde::{Deserialize, Serialize};

use super::env::{env_process, EnvKind, EnvSpec};
use crate::coeffs::FastSlowSystem;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::sde::{
    derive_seed, run_ensemble, simulate_first_order, simulate_second_order, simulate_tracks, Anchor, FastGrid,
    FastSource, InitialState, PathKind, RunConfig, SamplePath,
};

/// Setup for [`coupled_distance_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupleScanConfig<T> {
    pub epsilons: Vec<T>,
    pub horizon: T,
    pub n_paths: usize,
    pub base_seed: u64,
    pub macro_step: T,
    pub fast_factor: T,
    pub init: InitialState<T>,
    /// Use `init.x1 / ε` as the initial slow velocity at each epsilon.
    #[serde(default)]
    pub scale_x1_by_inverse_epsilon: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupleEntry<T> {
    pub epsilon: T,
    pub n_paths: usize,
    /// Mean over paths of `sup_{t<=T} |X − Z|`.
    pub mean_dist: T,
    pub max_dist: T,
    /// Largest `|ξ|` seen across the ensemble.
    pub env_sup: T,
}

/// Least-squares fit of `ln(mean_dist)` against `ln ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<T> {
    pub slope: T,
    pub intercept: T,
    pub residuals: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupleScan<T> {
    pub entries: Vec<CoupleEntry<T>>,
    pub fit: Option<ScalingFit<T>>,
}

impl<T: Real> CoupleScan<T> {
    /// CSV `epsilon,mean_dist,max_dist`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,mean_dist,max_dist\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.epsilon, e.mean_dist, e.max_dist));
        }
        out
    }
}

/// Least-squares slope of `ln y` against `ln x` over positive pairs.
pub fn log_log_fit<T: Real>(xs: &[T], ys: &[T]) -> Option<ScalingFit<T>> {
    let pts: Vec<(T, T)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > T::zero() && **y > T::zero()).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > T::zero()) {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>() / sxx;
    let intercept = my - slope * mx;
    Some(ScalingFit { slope, intercept, residuals: pts.iter().map(|p| p.1 - intercept - slope * p.0).collect() })
}

struct Coupled<T> {
    dist: T,
    env_sup: T,
}

fn coupled_pair<T: Real>(
    system: &FastSlowSystem<T>,
    env: &EnvSpec<T>,
    run: &RunConfig<T>,
    init: &InitialState<T>,
    stream: &mut crate::sde::NoiseStream,
) -> Result<Coupled<T>> {
    let (x, z): (SamplePath<T>, SamplePath<T>) = match env.kind {
        EnvKind::Diffusion => {
            let mut twin = stream.clone();
            let x = simulate_second_order(system, run, stream, init)?;
            let z = simulate_first_order(system, run, &mut twin, init)?;
            if x.noise != z.noise {
                return Err(Error::InvalidArgument(format!(
                    "coupled pair consumed different noise: {:?} vs {:?}",
                    x.noise, z.noise
                )));
            }
            (x, z)
        }
        _ => {
            let nodes = FastGrid::new(run)?.fast_nodes();
            let xi = env_process(env, run.epsilon, &nodes, stream)?;
            let mut pair = simulate_tracks(
                system,
                run,
                None,
                init,
                FastSource::Environment(&xi),
                Anchor::Own,
                &[PathKind::SecondOrder, PathKind::FirstOrder],
            )?;
            let z = pair.pop().expect("two tracks");
            (pair.pop().expect("two tracks"), z)
        }
    };
    let env_sup = x.y.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    if let Some(bound) = env.bound {
        if env_sup > bound {
            return Err(Error::InvalidArgument(format!("fast input reached {env_sup}, above the declared bound {bound}")));
        }
    }
    Ok(Coupled { dist: x.sup_distance(&z)?, env_sup })
}

/// Shared-noise coupling of the second-order system and its first-order
/// reduction across epsilons.
///
/// Epsilon `k` uses seed `derive_seed(base_seed, k)`, path `i` stream `i`.
/// With the diffusion environment the two members run on independent copies
/// of one stream and must report identical noise tallies.
pub fn coupled_distance_scan<T: Real>(
    system: &FastSlowSystem<T>,
    env: &EnvSpec<T>,
    cfg: &CoupleScanConfig<T>,
) -> Result<CoupleScan<T>> {
    env.validate()?;
    if cfg.n_paths == 0 || cfg.epsilons.is_empty() {
        return Err(Error::InvalidArgument("scan needs at least one path and one epsilon".into()));
    }
    let mut entries = Vec::with_capacity(cfg.epsilons.len());
    for (k, &epsilon) in cfg.epsilons.iter().enumerate() {
        let run = RunConfig { epsilon, horizon: cfg.horizon, macro_step: cfg.macro_step, fast_factor: cfg.fast_factor };
        run.validate()?;
        let mut init = cfg.init;
        if cfg.scale_x1_by_inverse_epsilon {
            init.x1 = init.x1 / epsilon;
        }
        let results = run_ensemble(derive_seed(cfg.base_seed, k as u64), cfg.n_paths, |_, stream| {
            coupled_pair(system, env, &run, &init, stream)
        })
        .map_err(|e| e.context(format!("epsilon {epsilon}")))?;
        let mut sum = CompensatedSum::new();
        results.iter().for_each(|r| sum.add(r.dist));
        entries.push(CoupleEntry {
            epsilon,
            n_paths: cfg.n_paths,
            mean_dist: sum.value() / T::from_usize_lossy(cfg.n_paths),
            max_dist: results.iter().map(|r| r.dist).fold(T::zero(), T::max),
            env_sup: results.iter().map(|r| r.env_sup).fold(T::zero(), T::max),
        });
    }
    let eps: Vec<T> = entries.iter().map(|e| e.epsilon).collect();
    let means: Vec<T> = entries.iter().map(|e| e.mean_dist).collect();
    Ok(CoupleScan { fit: log_log_fit(&eps, &means), entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::builtin_system;

    #[test]
    fn exact_power_law_fit() {
        let xs = [0.1, 0.01, 0.001];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let fit = log_log_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn zero_horizon_has_zero_distance() {
        let sys = builtin_system::<f64>("example1").unwrap();
        let cfg = CoupleScanConfig {
            epsilons: vec![0.04, 0.02],
            horizon: 0.0,
            n_paths: 4,
            base_seed: 1,
            macro_step: 0.01,
            fast_factor: 0.1,
            init: InitialState::new(1.0, 0.0, 0.0),
            scale_x1_by_inverse_epsilon: false,
        };
        let scan = coupled_distance_scan(&sys, &EnvSpec::diffusion(), &cfg).unwrap();
        assert!(scan.entries.iter().all(|e| e.mean_dist == 0.0 && e.max_dist == 0.0));
        assert!(scan.fit.is_none());
    }

    #[test]
    fn telegraph_scan_respects_bound() {
        let sys = builtin_system::<f64>("example1").unwrap();
        let cfg = CoupleScanConfig {
            epsilons: vec![0.05],
            horizon: 0.5,
            n_paths: 8,
            base_seed: 3,
            macro_step: 0.01,
            fast_factor: 0.1,
            init: InitialState::new(1.0, 0.0, 0.0),
            scale_x1_by_inverse_epsilon: false,
        };
        let env = EnvSpec::telegraph(1.0, vec![-0.5, 0.5]).with_bound(0.5);
        let scan = coupled_distance_scan(&sys, &env, &cfg).unwrap();
        assert_eq!(scan.entries[0].env_sup, 0.5);
        assert!(scan.entries[0].mean_dist > 0.0);
    }
}
