use serde::{Deserialize, Serialize};

use super::momentum::step_momentum_exp;
use super::noise::{NoiseStream, NoiseTally};
use super::path::SamplePath;
use crate::coeffs::FastSlowSystem;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default ratio `c_Y` between the fast substep and epsilon.
pub const DEFAULT_FAST_FACTOR: f64 = 0.1;

/// Time-stepping parameters shared by all integrators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig<T> {
    pub epsilon: T,
    pub horizon: T,
    pub macro_step: T,
    /// Fast substep is `min(macro_step, fast_factor * epsilon)`.
    pub fast_factor: T,
}

impl<T: Real> RunConfig<T> {
    pub fn new(epsilon: T, horizon: T, macro_step: T) -> Self {
        Self { epsilon, horizon, macro_step, fast_factor: T::lit(DEFAULT_FAST_FACTOR) }
    }

    pub fn with_fast_factor(mut self, fast_factor: T) -> Self {
        self.fast_factor = fast_factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("macro_step", self.macro_step)?;
        positive("fast_factor", self.fast_factor)?;
        if !(self.horizon >= T::zero()) || !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        Ok(())
    }

    /// Upper bound on the fast substep.
    pub fn fast_substep(&self) -> T {
        self.macro_step.min(self.fast_factor * self.epsilon)
    }
}

/// Initial slow position `x0`, slow velocity `x1` and fast state `y0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialState<T> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
}

impl<T: Real> InitialState<T> {
    pub fn new(x0: T, x1: T, y0: T) -> Self {
        Self { x0, x1, y0 }
    }
}

/// Nodes `k * step` for `k * step < horizon`, closed by `horizon` itself.
pub fn macro_grid<T: Real>(horizon: T, step: T) -> Vec<T> {
    let count = if horizon <= T::zero() {
        0
    } else {
        (horizon / step - T::lit(1e-9)).ceil().max(T::one()).to_usize().unwrap_or(0)
    };
    let mut times: Vec<T> = (0..count).map(|k| T::from_usize_lossy(k) * step).collect();
    times.push(horizon.max(T::zero()));
    times
}

/// Macro sampling grid and its uniform subdivision into fast substeps.
#[derive(Clone, Debug, PartialEq)]
pub struct FastGrid<T> {
    pub macro_times: Vec<T>,
    /// Number of fast substeps inside each macro step.
    pub substeps: Vec<usize>,
    /// Fast substep length inside each macro step.
    pub substep_len: Vec<T>,
}

impl<T: Real> FastGrid<T> {
    pub fn new(cfg: &RunConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let macro_times = macro_grid(cfg.horizon, cfg.macro_step);
        let delta = cfg.fast_substep();
        let mut substeps = Vec::with_capacity(macro_times.len());
        let mut substep_len = Vec::with_capacity(macro_times.len());
        for w in macro_times.windows(2) {
            let span = w[1] - w[0];
            let n = (span / delta - T::lit(1e-9)).ceil().max(T::one()).to_usize().unwrap_or(1);
            substeps.push(n);
            substep_len.push(span / T::from_usize_lossy(n));
        }
        Ok(Self { macro_times, substeps, substep_len })
    }

    pub fn total_substeps(&self) -> usize {
        self.substeps.iter().sum()
    }

    /// All fast nodes, including both ends; `total_substeps() + 1` values.
    pub fn fast_nodes(&self) -> Vec<T> {
        let mut nodes = Vec::with_capacity(self.total_substeps() + 1);
        for (k, (&n, &dt)) in self.substeps.iter().zip(&self.substep_len).enumerate() {
            let t0 = self.macro_times[k];
            nodes.extend((0..n).map(|j| t0 + T::from_usize_lossy(j) * dt));
        }
        nodes.push(*self.macro_times.last().expect("grid has at least one node"));
        nodes
    }
}

/// Where the fast coordinate comes from.
#[derive(Clone, Copy, Debug)]
pub enum FastSource<'a, T> {
    /// Euler–Maruyama for `dY = b/eps dt + sigma/sqrt(eps) dB` using the system's `b`, `sigma`.
    Diffusion,
    /// A prescribed environment path on the fast nodes of the run's [`FastGrid`].
    Environment(&'a [T]),
}

/// Slow coordinate fed into the coefficients.
#[derive(Clone, Copy, Debug)]
pub enum Anchor<'a, T> {
    /// Each track's own state.
    Own,
    /// A frozen constant.
    Constant(T),
    /// A frozen trajectory, read from its slow channel.
    Path(&'a SamplePath<T>),
}

impl<T: Real> Anchor<'_, T> {
    fn resolve(&self, t: T, own: T) -> Result<T> {
        match self {
            Anchor::Own => Ok(own),
            Anchor::Constant(c) => Ok(*c),
            Anchor::Path(path) => path.x_at(t),
        }
    }
}

/// Dynamics integrated by one track.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    /// `eps^2 X'' = F - lambda X'` via the exact exponential momentum step.
    SecondOrder,
    /// `Z' = F / lambda` via explicit Euler.
    FirstOrder,
}

struct Track<T> {
    kind: PathKind,
    x: T,
    p: T,
    y: T,
    out: SamplePath<T>,
}

/// General multirate integrator.
///
/// All tracks share the fast grid and, with [`FastSource::Diffusion`], the same
/// Brownian increment on every substep (one draw per substep regardless of the
/// number of tracks). Coefficients are frozen at the start of each substep.
pub fn simulate_tracks<T: Real>(
    system: &FastSlowSystem<T>,
    cfg: &RunConfig<T>,
    mut stream: Option<&mut NoiseStream>,
    init: &InitialState<T>,
    source: FastSource<'_, T>,
    anchor: Anchor<'_, T>,
    kinds: &[PathKind],
) -> Result<Vec<SamplePath<T>>> {
    let grid = FastGrid::new(cfg)?;
    if let FastSource::Environment(env) = source {
        if env.len() != grid.total_substeps() + 1 {
            return Err(Error::GridMismatch(format!(
                "environment has {} values, fast grid has {} nodes",
                env.len(),
                grid.total_substeps() + 1
            )));
        }
    }
    if matches!(source, FastSource::Diffusion) && stream.is_none() {
        return Err(Error::InvalidArgument("diffusive fast dynamics need a noise stream".into()));
    }
    let eps = cfg.epsilon;
    let sqrt_eps = eps.sqrt();
    let kappa0 = system.kappa0;
    let (seed, path_index) = match stream.as_deref() {
        Some(s) => (Some(s.seed()), Some(s.path_index())),
        None => (None, None),
    };
    let fast_value = |track_y: T, node: usize| match source {
        FastSource::Diffusion => track_y,
        FastSource::Environment(env) => env[node],
    };

    let t_start = grid.macro_times[0];
    let y_start = fast_value(init.y0, 0);
    let mut tracks = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let xc = anchor.resolve(t_start, init.x0)?;
        let p = match kind {
            PathKind::SecondOrder => init.x1,
            PathKind::FirstOrder => system.reduced_drift(t_start, xc, y_start)?,
        };
        let n = grid.macro_times.len();
        let mut out = SamplePath {
            times: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            p: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            epsilon: eps,
            seed,
            path_index,
            noise: NoiseTally::default(),
        };
        out.times.push(t_start);
        out.x.push(init.x0);
        out.p.push(p);
        out.y.push(y_start);
        tracks.push(Track { kind, x: init.x0, p, y: y_start, out });
    }

    let what = |kind: PathKind| match kind {
        PathKind::SecondOrder => "second-order path",
        PathKind::FirstOrder => "first-order path",
    };

    let mut node = 0usize;
    for (k, (&n_sub, &dt)) in grid.substeps.iter().zip(&grid.substep_len).enumerate() {
        let t0 = grid.macro_times[k];
        let sqrt_dt = dt.sqrt();
        for j in 0..n_sub {
            let t = t0 + T::from_usize_lossy(j) * dt;
            let dw = match (&source, stream.as_deref_mut()) {
                (FastSource::Diffusion, Some(s)) => s.normal::<T>() * sqrt_dt,
                _ => T::zero(),
            };
            for track in tracks.iter_mut() {
                let y = fast_value(track.y, node);
                let xc = anchor.resolve(t, track.x)?;
                let f = system.force(t, xc, y)?;
                let lambda = system.damping(t, xc, y)?;
                let (x_next, p_next) = match track.kind {
                    PathKind::SecondOrder => {
                        let (p_next, dx) = step_momentum_exp(track.p, f, lambda, eps, dt, kappa0)?;
                        (track.x + dx, p_next)
                    }
                    PathKind::FirstOrder => {
                        let v = f / lambda;
                        (track.x + v * dt, v)
                    }
                };
                let y_next = match source {
                    FastSource::Diffusion => {
                        let b = system.fast_drift(t, xc, y)?;
                        let sigma = system.fast_diffusion(t, xc, y)?;
                        y + b / eps * dt + sigma / sqrt_eps * dw
                    }
                    FastSource::Environment(env) => env[node + 1],
                };
                if !(x_next.is_finite() && p_next.is_finite() && y_next.is_finite()) {
                    return Err(Error::NonFinite { what: what(track.kind), t: t.to_f64_lossy() });
                }
                track.x = x_next;
                track.p = p_next;
                track.y = y_next;
            }
            node += 1;
        }
        let t1 = grid.macro_times[k + 1];
        for track in tracks.iter_mut() {
            let p = match track.kind {
                PathKind::SecondOrder => track.p,
                PathKind::FirstOrder => {
                    let xc = anchor.resolve(t1, track.x)?;
                    system.reduced_drift(t1, xc, track.y)?
                }
            };
            track.out.times.push(t1);
            track.out.x.push(track.x);
            track.out.p.push(p);
            track.out.y.push(track.y);
        }
    }

    let tally = stream.as_deref().map(|s| s.tally()).unwrap_or_default();
    Ok(tracks
        .into_iter()
        .map(|mut t| {
            t.out.noise = tally;
            t.out
        })
        .collect())
}

fn single<T>(mut paths: Vec<SamplePath<T>>) -> SamplePath<T> {
    paths.pop().expect("one track requested")
}

/// Second-order fast–slow system with diffusive fast component.
pub fn simulate_second_order<T: Real>(
    system: &FastSlowSystem<T>,
    cfg: &RunConfig<T>,
    stream: &mut NoiseStream,
    init: &InitialState<T>,
) -> Result<SamplePath<T>> {
    simulate_tracks(system, cfg, Some(stream), init, FastSource::Diffusion, Anchor::Own, &[PathKind::SecondOrder])
        .map(single)
}

/// First-order reduction `Z' = F/lambda` driven by the same fast dynamics.
///
/// Consumes exactly the same variates as [`simulate_second_order`] for the
/// same stream and configuration.
pub fn simulate_first_order<T: Real>(
    system: &FastSlowSystem<T>,
    cfg: &RunConfig<T>,
    stream: &mut NoiseStream,
    init: &InitialState<T>,
) -> Result<SamplePath<T>> {
    simulate_tracks(system, cfg, Some(stream), init, FastSource::Diffusion, Anchor::Own, &[PathKind::FirstOrder])
        .map(single)
}

/// Auxiliary processes with the slow argument of every coefficient frozen
/// along `phi`: returns `(X_frozen, Z_frozen)` computed on shared noise.
pub fn simulate_frozen<T: Real>(
    system: &FastSlowSystem<T>,
    phi: Anchor<'_, T>,
    cfg: &RunConfig<T>,
    stream: Option<&mut NoiseStream>,
    init: &InitialState<T>,
    source: FastSource<'_, T>,
) -> Result<(SamplePath<T>, SamplePath<T>)> {
    if matches!(phi, Anchor::Own) {
        return Err(Error::InvalidArgument("frozen simulation needs a constant or path anchor".into()));
    }
    if let Anchor::Path(path) = phi {
        if path.end_time() < cfg.horizon {
            return Err(Error::BeyondPath { requested: cfg.horizon.to_f64_lossy(), end: path.end_time().to_f64_lossy() });
        }
    }
    let mut paths =
        simulate_tracks(system, cfg, stream, init, source, phi, &[PathKind::SecondOrder, PathKind::FirstOrder])?;
    let z = paths.pop().expect("two tracks");
    let x = paths.pop().expect("two tracks");
    Ok((x, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{builtin_system, parse_expr};

    fn quiet_example1() -> FastSlowSystem<f64> {
        builtin_system::<f64>("example1").unwrap().with_diffusion(parse_expr("0").unwrap())
    }

    /// Exact solution of eps^2 x'' + x' + x = 0, x(0) = x0, x'(0) = x1.
    fn damped_linear_exact(eps: f64, x0: f64, x1: f64, t: f64) -> f64 {
        let e2 = eps * eps;
        let disc = (1.0 - 4.0 * e2).sqrt();
        let r1 = (-1.0 + disc) / (2.0 * e2);
        let r2 = (-1.0 - disc) / (2.0 * e2);
        let a = (x1 - r2 * x0) / (r1 - r2);
        let b = x0 - a;
        a * (r1 * t).exp() + b * (r2 * t).exp()
    }

    #[test]
    fn grid_covers_horizon() {
        let cfg = RunConfig::new(0.02, 1.0, 0.01);
        let g = FastGrid::new(&cfg).unwrap();
        assert_eq!(g.macro_times.len(), 101);
        assert_eq!(*g.macro_times.last().unwrap(), 1.0);
        assert!(g.substeps.iter().all(|&n| n == 5));
        assert_eq!(g.fast_nodes().len(), 501);

        let cfg = RunConfig::new(0.02, 0.025, 0.01);
        let g = FastGrid::new(&cfg).unwrap();
        assert_eq!(g.macro_times, vec![0.0, 0.01, 0.02, 0.025]);
        assert_eq!(g.substeps[2], 3);
    }

    #[test]
    fn zero_horizon_grid() {
        let g = FastGrid::new(&RunConfig::new(0.02, 0.0, 0.01)).unwrap();
        assert_eq!(g.macro_times, vec![0.0]);
        assert_eq!(g.total_substeps(), 0);
    }

    #[test]
    fn deterministic_linear_second_order_matches_exact() {
        let eps = 0.02;
        let sys = quiet_example1();
        let cfg = RunConfig::new(eps, 1.0, 1e-3);
        let path = simulate_second_order(&sys, &cfg, &mut NoiseStream::new(1, 0), &InitialState::new(1.0, 0.0, 0.0))
            .unwrap();
        let err = path
            .times
            .iter()
            .zip(&path.x)
            .map(|(&t, &x)| (x - damped_linear_exact(eps, 1.0, 0.0, t)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "sup error {err}");
    }

    #[test]
    fn deterministic_first_order_matches_exponential() {
        let sys = quiet_example1();
        let cfg = RunConfig::new(0.02, 1.0, 1e-3);
        let path = simulate_first_order(&sys, &cfg, &mut NoiseStream::new(1, 0), &InitialState::new(1.0, 0.0, 0.0))
            .unwrap();
        let end = *path.x.last().unwrap();
        assert!((end - (-1.0f64).exp()).abs() <= 1e-3, "Z_1 = {end}");
        assert!((path.p[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_first_order_is_single_point() {
        let sys = builtin_system::<f64>("example1").unwrap();
        let cfg = RunConfig::new(0.02, 0.0, 1e-3);
        let path = simulate_first_order(&sys, &cfg, &mut NoiseStream::new(1, 0), &InitialState::new(0.4, 0.0, 0.0))
            .unwrap();
        assert_eq!(path.x, vec![0.4]);
        assert_eq!(path.len(), 1);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let sys = builtin_system::<f64>("example2").unwrap();
        let cfg = RunConfig::new(0.01, 0.5, 1e-2);
        let init = InitialState::new(1.0, 0.0, 0.0);
        let a = simulate_second_order(&sys, &cfg, &mut NoiseStream::new(11, 2), &init).unwrap();
        let b = simulate_second_order(&sys, &cfg, &mut NoiseStream::new(11, 2), &init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shared_noise_between_orders() {
        let cfg = RunConfig::new(0.01, 0.5, 1e-2);
        let init = InitialState::new(1.0, 0.0, 0.3);
        let sys = builtin_system::<f64>("example1").unwrap();
        let x = simulate_second_order(&sys, &cfg, &mut NoiseStream::new(3, 9), &init).unwrap();
        let z = simulate_first_order(&sys, &cfg, &mut NoiseStream::new(3, 9), &init).unwrap();
        assert_eq!(x.y, z.y);
        assert_eq!(x.noise, z.noise);

        // slow-dependent fast dynamics: channels differ, consumed noise does not
        let sys = builtin_system::<f64>("example2").unwrap();
        let x = simulate_second_order(&sys, &cfg, &mut NoiseStream::new(3, 9), &init).unwrap();
        let z = simulate_first_order(&sys, &cfg, &mut NoiseStream::new(3, 9), &init).unwrap();
        assert_ne!(x.y, z.y);
        assert_eq!(x.noise, z.noise);
    }

    #[test]
    fn damping_floor_aborts_run() {
        let sys = FastSlowSystem::<f64>::from_sources("floor", "-x", "x", "-y", "1", 0.5).unwrap();
        let cfg = RunConfig::new(0.05, 5.0, 1e-2);
        let err =
            simulate_second_order(&sys, &cfg, &mut NoiseStream::new(0, 0), &InitialState::new(1.0, 0.0, 0.0))
                .unwrap_err();
        assert!(matches!(err, Error::DampingFloor { .. }), "{err:?}");
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = FastSlowSystem::<f64>::from_sources("blowup", "x^3", "1", "-y", "0", 1.0).unwrap();
        let cfg = RunConfig::new(0.05, 10.0, 1e-2);
        let err =
            simulate_second_order(&sys, &cfg, &mut NoiseStream::new(0, 0), &InitialState::new(2.0, 0.0, 0.0))
                .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn frozen_constant_linear_response() {
        // F = -x frozen at phi = x0: Z is linear with slope -x0, X has the
        // closed form x0 - x0 t + (x1 + x0) eps^2 (1 - e^{-t/eps^2}).
        let sys = FastSlowSystem::<f64>::from_sources("lin", "-x", "1", "-y", "0", 1.0).unwrap();
        let (eps, x0, x1) = (0.05, 0.8, 0.3);
        let cfg = RunConfig::new(eps, 1.0, 1e-2);
        let (xf, zf) = simulate_frozen(
            &sys,
            Anchor::Constant(x0),
            &cfg,
            Some(&mut NoiseStream::new(0, 0)),
            &InitialState::new(x0, x1, 0.0),
            FastSource::Diffusion,
        )
        .unwrap();
        let e2 = eps * eps;
        for (k, &t) in xf.times.iter().enumerate() {
            assert!((zf.x[k] - (x0 - x0 * t)).abs() < 1e-12);
            let exact = x0 - x0 * t + (x1 + x0) * e2 * (1.0 - (-t / e2).exp());
            assert!((xf.x[k] - exact).abs() < 1e-12, "t={t}: {} vs {exact}", xf.x[k]);
        }
        let sup = xf.sup_distance(&zf).unwrap();
        let bound = (x1 + x0) * e2;
        assert!(sup <= bound + 1e-12);
    }

    #[test]
    fn frozen_zero_horizon() {
        let sys = builtin_system::<f64>("example1").unwrap();
        let cfg = RunConfig::new(0.05, 0.0, 1e-2);
        let (xf, zf) = simulate_frozen(
            &sys,
            Anchor::Constant(0.5),
            &cfg,
            Some(&mut NoiseStream::new(0, 0)),
            &InitialState::new(0.5, 0.0, 0.0),
            FastSource::Diffusion,
        )
        .unwrap();
        assert_eq!(xf.x, vec![0.5]);
        assert_eq!(zf.x, vec![0.5]);
    }

    #[test]
    fn environment_length_is_checked() {
        let sys = builtin_system::<f64>("example1").unwrap();
        let cfg = RunConfig::new(0.05, 0.1, 1e-2);
        let err = simulate_tracks(
            &sys,
            &cfg,
            None,
            &InitialState::new(1.0, 0.0, 0.0),
            FastSource::Environment(&[0.0; 3]),
            Anchor::Own,
            &[PathKind::SecondOrder],
        )
        .unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }
}
