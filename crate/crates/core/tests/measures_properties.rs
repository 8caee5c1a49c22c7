use fastslow::coeffs::builtin_system;
use fastslow::measures::*;
use fastslow::quad::gauss_legendre3;
use fastslow::sde::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Mass of `[a, b]` under `exp(-y^2)/sqrt(pi)` by composite Gauss–Legendre.
fn ou_law(a: f64, b: f64) -> f64 {
    let (a, b) = (a.max(-10.0), b.min(10.0));
    if a >= b {
        return 0.0;
    }
    let cells = 2000;
    let h = (b - a) / cells as f64;
    (0..cells)
        .map(|i| {
            let lo = a + i as f64 * h;
            gauss_legendre3(lo, lo + h, |y: f64| Ok((-y * y).exp() / std::f64::consts::PI.sqrt())).unwrap()
        })
        .sum()
}

fn ou_path(eps: f64, horizon: f64, fast_factor: f64, seed: u64) -> SamplePath<f64> {
    let sys = builtin_system::<f64>("example1").unwrap();
    let cfg = RunConfig::new(eps, horizon, 0.01).with_fast_factor(fast_factor);
    simulate_second_order(&sys, &cfg, &mut NoiseStream::new(seed, 0), &InitialState::new(0.0, 0.0, 0.0)).unwrap()
}

#[test]
fn occupation_total_mass_and_monotonicity() {
    let path = ou_path(0.01, 10.0, 0.1, 3);
    let bins = Bins::uniform(-2.0, 2.0, 8).unwrap();
    let mut previous: Option<OccupationMeasure<f64>> = None;
    for t in [0.0, 1.234, 5.0, 9.999, 10.0] {
        let occ = occupation_measure(&path, &bins, t).unwrap();
        assert!((occ.total() - t).abs() <= 1e-10 * t.max(1e-300), "t={t}: {}", occ.total());
        if let Some(prev) = &previous {
            assert!(occ.masses.iter().zip(&prev.masses).all(|(a, b)| a >= b));
            assert!(occ.underflow >= prev.underflow && occ.overflow >= prev.overflow);
        }
        let fine = occupation_measure(&path, &bins.refined(), t).unwrap();
        assert!((fine.total() - occ.total()).abs() <= 1e-12 * t.max(1.0));
        previous = Some(occ);
    }
    assert!(occupation_measure(&path, &bins, 10.5).is_err());
}

#[test]
fn short_ou_occupation_is_close_to_invariant_law() {
    let path = ou_path(0.01, 10.0, 0.1, 1);
    let occ = occupation_measure(&path, &Bins::uniform(-2.0, 2.0, 8).unwrap(), 10.0).unwrap();
    let l1 = occ.l1_distance(ou_law);
    assert!(l1 <= 0.15, "{l1}");
}

#[test]
fn long_ou_occupation_matches_invariant_law() {
    let path = ou_path(0.01, 200.0, 0.02, 1);
    let occ = occupation_measure(&path, &Bins::uniform(-2.0, 2.0, 8).unwrap(), 200.0).unwrap();
    let l1 = occ.l1_distance(ou_law);
    assert!(l1 <= 0.05, "{l1}");
}

#[test]
fn kde_examples() {
    let one = kde_density(&[0.0f64], KdeGrid::default(), Bandwidth::Silverman).unwrap();
    assert!((one.integral() - 1.0).abs() <= 1e-6);
    assert!(one.argmax().abs() <= one.dy);

    let mut rng = ChaCha8Rng::seed_from_u64(100_000);
    let draws: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let est = kde_density(&draws, KdeGrid::Fixed { lo: -5.0, hi: 5.0, points: 1001 }, Bandwidth::Silverman).unwrap();
    assert!((est.integral() - 1.0).abs() <= 1e-6);
    let err = est.max_abs_error(|y| (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt());
    assert!(err <= 0.01, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kde_is_translation_equivariant(
        samples in prop::collection::vec(-3.0f64..3.0, 1..40),
        shift in -10.0f64..10.0,
    ) {
        let a = kde_density(&samples, KdeGrid::default(), Bandwidth::Silverman).unwrap();
        let moved: Vec<f64> = samples.iter().map(|s| s + shift).collect();
        let b = kde_density(&moved, KdeGrid::default(), Bandwidth::Silverman).unwrap();
        prop_assert!((b.argmax() - a.argmax() - shift).abs() <= a.dy.max(b.dy) * 1.000001);
    }

    #[test]
    fn tube_fraction_is_monotone_in_eta(
        deviations in prop::collection::vec(0.0f64..2.0, 1..50),
        e1 in 0.0f64..2.0,
        e2 in 0.0f64..2.0,
    ) {
        let stats = EnsembleStats::from_deviations(deviations, 0.5).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(stats.tube_fraction_at(lo) <= stats.tube_fraction_at(hi));
    }

    #[test]
    fn occupation_refinement_keeps_mass(ys in prop::collection::vec(-3.0f64..3.0, 2..60), bins in 1usize..12) {
        let n = ys.len();
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let mut path = SamplePath::deterministic(times, vec![0.0; n], vec![0.0; n]).unwrap();
        path.y = ys;
        let t = path.end_time();
        let b = Bins::uniform(-2.0, 2.0, bins).unwrap();
        let a = occupation_measure(&path, &b, t).unwrap();
        let f = occupation_measure(&path, &b.refined(), t).unwrap();
        prop_assert!((a.total() - f.total()).abs() <= 1e-12);
        prop_assert!((a.total() - t).abs() <= 1e-10 * t);
    }
}

#[test]
fn averaging_sharpens_with_epsilon() {
    let sys = builtin_system::<f64>("example1").unwrap();
    let reference = simulate_averaged(&sys, 1.0, 1.0, 1e-3).unwrap();
    let stats = |eps: f64, k: u64| {
        let cfg = RunConfig::new(eps, 1.0, 1e-3);
        let paths = run_ensemble(derive_seed(2024, k), 200, |_, s| {
            simulate_second_order(&sys, &cfg, s, &InitialState::new(1.0, 0.0, 0.0))
        })
        .unwrap();
        ensemble_stats(&paths, &reference, 0.2).unwrap()
    };
    let coarse = stats(0.005, 0);
    let fine = stats(0.001, 1);
    assert!(fine.mean < coarse.mean);
    assert!(fine.tube_fraction >= coarse.tube_fraction);
}
