use fastslow::coeffs::{builtin_system, FastSlowSystem};
use fastslow::couple::*;
use fastslow::sde::{simulate_frozen, Anchor, FastGrid, FastSource, InitialState, NoiseStream, RunConfig};

/// `sup_{t<=T} |X − Z|` for `ε² X'' = −c − X'`, `Z' = −c`, same start, `X'(0) = v`.
fn frozen_linear_gap(c: f64, v: f64, eps: f64, horizon: f64) -> f64 {
    (v + c).abs() * eps * eps * -(-horizon / (eps * eps)).exp_m1()
}

#[test]
fn frozen_linear_matches_closed_form() {
    let sys = FastSlowSystem::<f64>::from_sources("linear", "-x", "1", "-y", "1", 1.0).unwrap();
    let (phi, v, horizon) = (0.8, 0.3, 1.0);
    let mut last = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05, 0.02, 0.01] {
        let cfg = RunConfig::new(eps, horizon, 0.01);
        let nodes = FastGrid::new(&cfg).unwrap().total_substeps() + 1;
        let env = vec![0.0; nodes];
        let init = InitialState::new(1.0, v, 0.0);
        let (x, z) =
            simulate_frozen(&sys, Anchor::Constant(phi), &cfg, None, &init, FastSource::Environment(&env)).unwrap();
        let gap = x.x.iter().zip(&z.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let oracle = frozen_linear_gap(phi, v, eps, horizon);
        assert!((gap - oracle).abs() <= 1e-6, "eps={eps}: {gap} vs {oracle}");
        assert!(gap <= last);
        last = gap;
    }
}

fn scan_config(epsilons: Vec<f64>, n_paths: usize, x1: f64, scaled: bool) -> CoupleScanConfig<f64> {
    CoupleScanConfig {
        epsilons,
        horizon: 1.0,
        n_paths,
        base_seed: 7,
        macro_step: 0.01,
        fast_factor: 0.1,
        init: InitialState::new(1.0, x1, 0.0),
        scale_x1_by_inverse_epsilon: scaled,
    }
}

#[test]
fn self_coupled_example1_scales_linearly() {
    let sys = builtin_system::<f64>("example1").unwrap();
    let cfg = scan_config(vec![0.04, 0.02, 0.01, 0.005], 100, 1.0, true);
    let scan = coupled_distance_scan(&sys, &EnvSpec::diffusion(), &cfg).unwrap();
    let slope = scan.fit.as_ref().unwrap().slope;
    assert!((0.7..=1.3).contains(&slope), "slope {slope}");
    assert!(scan.entries.iter().all(|e| e.mean_dist >= 0.0 && e.max_dist >= e.mean_dist));
    assert_eq!(scan.to_csv().lines().count(), 5);
}

#[test]
fn scan_is_reproducible() {
    let sys = builtin_system::<f64>("example2").unwrap();
    let cfg = scan_config(vec![0.05, 0.02], 16, 0.0, false);
    let a = coupled_distance_scan(&sys, &EnvSpec::diffusion(), &cfg).unwrap();
    let b = coupled_distance_scan(&sys, &EnvSpec::diffusion(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn telegraph_environment_is_bounded() {
    let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 5e-4).collect();
    let spec = EnvSpec::telegraph(2.0, vec![-1.0, 1.0]).with_bound(1.0);
    for path_index in 0..20 {
        let path = env_process(&spec, 0.01, &grid, &mut NoiseStream::new(5, path_index)).unwrap();
        assert!(path.iter().all(|v| *v == -1.0 || *v == 1.0));
        assert_eq!(path.iter().fold(0.0f64, |m, v| m.max(v.abs())), 1.0);
    }
    let sys = builtin_system::<f64>("example1").unwrap();
    let scan = coupled_distance_scan(&sys, &spec, &scan_config(vec![0.05, 0.02], 10, 0.0, false)).unwrap();
    assert!(scan.entries.iter().all(|e| e.env_sup <= 1.0));
}

#[test]
fn accelerated_ou_variance() {
    let grid: Vec<f64> = (0..=100_000).map(|i| i as f64 * 1e-5).collect();
    let spec = EnvSpec::ou(1.0, 1.0);
    let path = env_process(&spec, 1e-3, &grid, &mut NoiseStream::new(21, 0)).unwrap();
    let n = path.len() as f64;
    let mean = path.iter().sum::<f64>() / n;
    let var = path.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 0.5).abs() <= 0.05, "{var}");
    let again = env_process(&spec, 1e-3, &grid, &mut NoiseStream::new(21, 0)).unwrap();
    assert_eq!(path, again);
}

#[test]
fn invalid_environments_are_rejected() {
    assert!(EnvSpec::telegraph(1.0, vec![]).validate().is_err());
    assert!(EnvSpec::telegraph(-1.0, vec![1.0]).validate().is_err());
    assert!(EnvSpec::ou(0.0, 1.0).validate().is_err());
    let grid = [0.0, 0.1, 0.2];
    let loose = EnvSpec::telegraph(1.0, vec![-2.0, 2.0]).with_bound(1.0);
    assert!(env_process(&loose, 0.1, &grid, &mut NoiseStream::new(1, 0)).is_err());
}
