use serde::{Deserialize, Serialize};

use crate::coeffs::FastSlowSystem;
use crate::error::{Error, Result};
use crate::invariant::AveragedDrift;
use crate::scalar::Real;
use crate::sde::{derive_seed, run_ensemble, simulate_averaged_with, simulate_second_order, InitialState, RunConfig};

/// Monte Carlo setup for [`tail_rate_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRateConfig<T> {
    pub eta: T,
    pub horizon: T,
    pub epsilons: Vec<T>,
    pub n_paths: usize,
    pub base_seed: u64,
    pub macro_step: T,
    pub fast_factor: T,
    pub init: InitialState<T>,
}

/// Smallest ensemble accepted by [`tail_rate_estimate`].
pub const MIN_TAIL_PATHS: usize = 100;

/// Exceedance statistics at one epsilon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry<T> {
    pub epsilon: T,
    /// Index of this epsilon in the configured list; selects the derived seed.
    pub epsilon_index: usize,
    pub n_paths: usize,
    pub n_exceed: usize,
    pub freq: T,
    /// `ε ln(freq)`; `None` when no path exceeded.
    pub eps_log_freq: Option<T>,
    /// `ε ln(1/n_paths)`, reported only for zero-exceedance entries.
    pub zero_upper_bound: Option<T>,
    /// Wilson 95% interval for the exceedance probability.
    pub ci_low: T,
    pub ci_high: T,
}

/// Least-squares line `eps_log_freq ≈ intercept + slope ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit<T> {
    /// Extrapolation to ε → 0, an estimate of minus the rate.
    pub intercept: T,
    pub slope: T,
    /// Residuals of the fitted entries, in entry order.
    pub residuals: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport<T> {
    pub eta: T,
    pub horizon: T,
    pub seed: u64,
    /// Sorted by decreasing epsilon.
    pub entries: Vec<RateEntry<T>>,
    /// Present when at least two entries have exceedances.
    pub fit: Option<RateFit<T>>,
}

/// An increase in exceedance frequency from one epsilon to the next smaller one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion<T> {
    pub larger_epsilon: T,
    pub smaller_epsilon: T,
    /// Increase in units of the pooled binomial standard error.
    pub z_score: T,
}

/// Wilson score interval at 95%.
pub fn wilson_interval<T: Real>(successes: usize, trials: usize) -> (T, T) {
    if trials == 0 {
        return (T::zero(), T::one());
    }
    let z = T::lit(1.959_963_984_540_054);
    let n = T::from_usize_lossy(trials);
    let p = T::from_usize_lossy(successes) / n;
    let z2 = z * z;
    let denom = T::one() + z2 / n;
    let centre = (p + z2 / (T::lit(2.0) * n)) / denom;
    let half = z * (p * (T::one() - p) / n + z2 / (T::lit(4.0) * n * n)).sqrt() / denom;
    let low = if successes == 0 { T::zero() } else { (centre - half).max(T::zero()) };
    let high = if successes == trials { T::one() } else { (centre + half).min(T::one()) };
    (low, high)
}

impl<T: Real> RateEntry<T> {
    pub fn new(epsilon: T, epsilon_index: usize, n_paths: usize, n_exceed: usize) -> Self {
        let freq = T::from_usize_lossy(n_exceed) / T::from_usize_lossy(n_paths);
        let (ci_low, ci_high) = wilson_interval(n_exceed, n_paths);
        let (eps_log_freq, zero_upper_bound) = if n_exceed == 0 {
            (None, Some(-epsilon * T::from_usize_lossy(n_paths).ln()))
        } else {
            (Some(epsilon * freq.ln()), None)
        };
        Self { epsilon, epsilon_index, n_paths, n_exceed, freq, eps_log_freq, zero_upper_bound, ci_low, ci_high }
    }
}

impl<T: Real> RateReport<T> {
    pub fn new(eta: T, horizon: T, seed: u64, mut entries: Vec<RateEntry<T>>) -> Self {
        entries.sort_by(|a, b| b.epsilon.partial_cmp(&a.epsilon).expect("finite epsilons"));
        let fit = fit_line(&entries);
        Self { eta, horizon, seed, entries, fit }
    }

    /// Consecutive pairs (in decreasing epsilon) whose frequency increases.
    pub fn inversions(&self) -> Vec<Inversion<T>> {
        self.entries
            .windows(2)
            .filter(|w| w[1].freq > w[0].freq)
            .map(|w| {
                let var = |e: &RateEntry<T>| e.freq * (T::one() - e.freq) / T::from_usize_lossy(e.n_paths);
                let se = (var(&w[0]) + var(&w[1])).sqrt();
                let z = if se > T::zero() { (w[1].freq - w[0].freq) / se } else { T::infinity() };
                Inversion { larger_epsilon: w[0].epsilon, smaller_epsilon: w[1].epsilon, z_score: z }
            })
            .collect()
    }

    /// CSV with one row per entry; empty cells for absent optional values.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("epsilon,n_paths,n_exceed,freq,eps_log_freq,zero_upper_bound,ci_low,ci_high\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.epsilon,
                e.n_paths,
                e.n_exceed,
                e.freq,
                opt(e.eps_log_freq),
                opt(e.zero_upper_bound),
                e.ci_low,
                e.ci_high
            ));
        }
        out
    }
}

fn fit_line<T: Real>(entries: &[RateEntry<T>]) -> Option<RateFit<T>> {
    let points: Vec<(T, T)> = entries.iter().filter_map(|e| e.eps_log_freq.map(|v| (e.epsilon, v))).collect();
    if points.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(points.len());
    let mx = points.iter().map(|p| p.0).sum::<T>() / n;
    let my = points.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > T::zero()) {
        return None;
    }
    let sxy: T = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = points.iter().map(|p| p.1 - (intercept + slope * p.0)).collect();
    Some(RateFit { intercept, slope, residuals })
}

/// Exceedance frequencies of `sup_{t<=T} |X^ε_t − X̄_t| > η` across epsilons.
///
/// Epsilon `k` of the configured list uses seed `derive_seed(base_seed, k)`
/// and path `i` stream `i` of that seed, so entries are reproducible one by one.
pub fn tail_rate_estimate<T: Real>(system: &FastSlowSystem<T>, cfg: &TailRateConfig<T>) -> Result<RateReport<T>> {
    if cfg.n_paths < MIN_TAIL_PATHS {
        return Err(Error::InvalidArgument(format!(
            "tail-rate estimation needs at least {MIN_TAIL_PATHS} paths, got {}",
            cfg.n_paths
        )));
    }
    if cfg.epsilons.is_empty() {
        return Err(Error::InvalidArgument("no epsilon values given".into()));
    }
    if !(cfg.eta >= T::zero()) {
        return Err(Error::InvalidArgument(format!("eta must be nonnegative, got {}", cfg.eta)));
    }
    let drift = AveragedDrift::new(system.clone());
    let averaged = simulate_averaged_with(&drift, cfg.init.x0, cfg.horizon, cfg.macro_step)
        .map_err(|e| e.context("averaged path"))?;
    let mut entries = Vec::with_capacity(cfg.epsilons.len());
    for (k, &epsilon) in cfg.epsilons.iter().enumerate() {
        let run = RunConfig { epsilon, horizon: cfg.horizon, macro_step: cfg.macro_step, fast_factor: cfg.fast_factor };
        run.validate()?;
        let exceed = run_ensemble(derive_seed(cfg.base_seed, k as u64), cfg.n_paths, |_, stream| {
            let path = simulate_second_order(system, &run, stream, &cfg.init)?;
            Ok(path.sup_distance(&averaged)? > cfg.eta)
        })
        .map_err(|e| e.context(format!("epsilon {epsilon}")))?;
        entries.push(RateEntry::new(epsilon, k, cfg.n_paths, exceed.iter().filter(|&&b| b).count()));
    }
    Ok(RateReport::new(cfg.eta, cfg.horizon, cfg.base_seed, entries))
}
