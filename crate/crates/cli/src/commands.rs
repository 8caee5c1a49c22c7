use std::collections::BTreeMap;
use std::path::Path;

use fastslow::coeffs::{parse_expr, FastSlowSystem};
use fastslow::couple::{coupled_distance_scan, CoupleScanConfig};
use fastslow::invariant::{frozen_density, standard_basis, weak_stationarity_residual, AveragedDrift, DensityGrid, GridSpec, TestFunction};
use fastslow::ldp::{path_rate, rate_profile, tail_rate_estimate, CandidatePair, TailRateConfig};
use fastslow::measures::{ensemble_stats, heatmap, occupation_measure, Bandwidth, Bins};
use fastslow::sde::{
    check_integration_by_parts, derive_seed, run_ensemble, simulate_averaged_with, simulate_frozen, simulate_second_order,
    Anchor, FastSource, InitialState, NoiseStream, RunConfig, SamplePath,
};
use serde_json::json;

use crate::config::{DensityChoice, Validated};
use crate::error::CliResult;
use crate::output::{sha256_hex, ArtifactWriter, Manifest, SystemRecord};
use crate::svg::heatmap_svg;
use crate::Command;

pub fn execute(command: Command, v: &Validated, raw_config: &[u8], out_dir: &Path) -> CliResult<()> {
    let mut out = ArtifactWriter::create(out_dir)?;
    match command {
        Command::Simulate => simulate(v, &mut out)?,
        Command::Averaged => averaged(v, &mut out)?,
        Command::Invariant => invariant(v, &mut out)?,
        Command::Occupation => occupation(v, &mut out)?,
        Command::Heatmap => heatmap_cmd(v, &mut out)?,
        Command::RateEval => rate_eval(v, &mut out)?,
        Command::TailRate => tail_rate(v, &mut out)?,
        Command::CoupleScan => couple_scan(v, &mut out)?,
        Command::LemmaCheck => lemma_check(v, &mut out)?,
    }
    let versions = BTreeMap::from([
        ("fastslow".to_string(), fastslow::VERSION.to_string()),
        ("fastslow-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ]);
    out.finish(Manifest {
        schema_version: 1,
        command: command.name().to_string(),
        config_sha256: sha256_hex(raw_config),
        seed: v.config.seed,
        epsilons: v.epsilons.clone(),
        system: SystemRecord {
            name: v.system.name.clone(),
            fingerprint: v.system.fingerprint(),
            canonical: v.system.canonical(),
        },
        versions,
        artifacts: Vec::new(),
    })
}

fn run_config(v: &Validated, epsilon: f64) -> RunConfig<f64> {
    let c = &v.config;
    RunConfig::new(epsilon, c.horizon, c.macro_step).with_fast_factor(c.fast_factor)
}

fn averaged_reference(v: &Validated, drift: &AveragedDrift<f64>, step: f64) -> CliResult<SamplePath<f64>> {
    let c = &v.config;
    Ok(simulate_averaged_with(drift, c.init.x0, c.horizon, step).map_err(|e| e.context("averaged path"))?)
}

fn ensemble(v: &Validated, epsilon_index: usize, epsilon: f64) -> CliResult<Vec<SamplePath<f64>>> {
    let c = &v.config;
    let run = run_config(v, epsilon);
    let init: InitialState<f64> = c.init.into();
    let seed = derive_seed(c.seed, epsilon_index as u64);
    Ok(run_ensemble(seed, c.n_paths, |_, stream| simulate_second_order(&v.system, &run, stream, &init))
        .map_err(|e| e.context(format!("epsilon {epsilon}")))?)
}

fn simulate(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let drift = AveragedDrift::new(v.system.clone());
    let reference = averaged_reference(v, &drift, c.macro_step)?;
    out.write("averaged.csv", averaged_csv(&reference).as_bytes())?;
    let mut entries = Vec::new();
    for (k, &epsilon) in v.epsilons.iter().enumerate() {
        let paths = ensemble(v, k, epsilon)?;
        let stats = ensemble_stats(&paths, &reference, c.eta)?;
        if c.simulate.write_paths {
            out.write(&format!("paths_eps{k}.csv"), paths_csv(&paths).as_bytes())?;
        }
        entries.push(json!({
            "epsilon": epsilon,
            "epsilon_index": k,
            "seed": derive_seed(c.seed, k as u64),
            "n_paths": c.n_paths,
            "mean_sup_deviation": stats.mean,
            "median_sup_deviation": stats.median,
            "q90_sup_deviation": stats.q90,
            "max_sup_deviation": stats.max,
            "tube_fraction": stats.tube_fraction,
            "sup_deviations": stats.sup_deviations,
        }));
    }
    out.write_json("simulate.json", &json!({ "eta": c.eta, "horizon": c.horizon, "entries": entries }))
}

fn paths_csv(paths: &[SamplePath<f64>]) -> String {
    let mut s = String::from("path,t,x,p,y\n");
    for (i, p) in paths.iter().enumerate() {
        for k in 0..p.len() {
            s.push_str(&format!("{i},{},{},{},{}\n", p.times[k], p.x[k], p.p[k], p.y[k]));
        }
    }
    s
}

fn averaged_csv(path: &SamplePath<f64>) -> String {
    let mut s = String::from("t,x,drift\n");
    for k in 0..path.len() {
        s.push_str(&format!("{},{},{}\n", path.times[k], path.x[k], path.p[k]));
    }
    s
}

fn averaged(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let step = c.averaged.step.unwrap_or(c.macro_step);
    let drift = AveragedDrift::new(v.system.clone());
    let path = averaged_reference(v, &drift, step)?;
    out.write("averaged.csv", averaged_csv(&path).as_bytes())?;
    out.write_json(
        "averaged.json",
        &json!({
            "x0": c.init.x0,
            "horizon": c.horizon,
            "step": step,
            "nodes": path.len(),
            "x_end": path.x.last(),
        }),
    )
}

type ClosedForm = (&'static str, Box<dyn Fn(f64) -> f64>);

/// Closed-form stationary densities of the builtin systems.
fn builtin_closed_form(system: &FastSlowSystem<f64>, x: f64) -> Option<ClosedForm> {
    use std::f64::consts::PI;
    match system.name.as_str() {
        "example1" => Some(("exp(-y^2)/sqrt(pi)", Box::new(|y: f64| (-y * y).exp() / PI.sqrt()))),
        "example2" => {
            let a = 1.0 + x * x;
            let s = 2.0 + x.sin();
            Some((
                "sqrt(1+x^2)/(sqrt(pi)(2+sin x)) exp(-(1+x^2) y^2/(2+sin x)^2)",
                Box::new(move |y: f64| a.sqrt() / (PI.sqrt() * s) * (-a * y * y / (s * s)).exp()),
            ))
        }
        _ => None,
    }
}

fn invariant(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let b = &c.invariant;
    let x = b.x.unwrap_or(c.init.x0);
    let mut spec = GridSpec::default().with_points(b.points);
    if let Some(h) = b.half_width {
        spec = spec.with_half_width(h);
    }
    let m = frozen_density(&v.system, b.t, x, &spec).map_err(|e| e.context(format!("density at x={x}")))?;
    let mean = m.expect(Ok)?;
    let var = m.expect(|y| Ok((y - mean) * (y - mean)))?;
    let basis = standard_basis(mean, 2.5 * var.sqrt());
    let refs: Vec<&dyn TestFunction<f64>> = basis.iter().map(|h| h as &dyn TestFunction<f64>).collect();
    let residual = weak_stationarity_residual(
        &m,
        |y| v.system.fast_drift(b.t, x, y),
        |y| v.system.diffusion_matrix(b.t, x, y),
        &refs,
    )?;
    let closed = builtin_closed_form(&v.system, x);
    out.write("invariant.csv", m.to_csv().as_bytes())?;
    out.write_json(
        "invariant_report.json",
        &json!({
            "t": b.t,
            "x": x,
            "points": m.len(),
            "lo": m.lo(),
            "hi": m.hi(),
            "integral": m.integral(),
            "mean": mean,
            "variance": var,
            "weak_stationarity_residual": residual,
            "closed_form": closed.as_ref().map(|(name, _)| *name),
            "max_abs_error": closed.as_ref().map(|(_, f)| m.max_abs_error(f)),
        }),
    )
}

fn occupation(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let b = &c.occupation;
    let epsilon = v.epsilons[0];
    let frozen_x = b.frozen_x.unwrap_or(c.init.x0);
    let run = run_config(v, epsilon);
    let init: InitialState<f64> = c.init.into();
    let mut stream = NoiseStream::new(derive_seed(c.seed, 0), b.path_index);
    let (path, _) =
        simulate_frozen(&v.system, Anchor::Constant(frozen_x), &run, Some(&mut stream), &init, FastSource::Diffusion)?;
    let bins = Bins::uniform(b.lo, b.hi, b.bins)?;
    let occ = occupation_measure(&path, &bins, c.horizon)?;
    let law = frozen_density(&v.system, 0.0, frozen_x, &GridSpec::default())
        .map_err(|e| e.context(format!("density at x={frozen_x}")))?;
    let l1 = occ.l1_distance(|lo, hi| law.mass_between(lo, hi));
    out.write("occupation.csv", occ.to_csv().as_bytes())?;
    out.write_json(
        "occupation.json",
        &json!({
            "epsilon": epsilon,
            "horizon": c.horizon,
            "frozen_x": frozen_x,
            "path_index": b.path_index,
            "elapsed": occ.elapsed,
            "total": occ.total(),
            "underflow": occ.underflow,
            "overflow": occ.overflow,
            "l1_distance": l1,
        }),
    )
}

fn heatmap_cmd(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let b = &c.heatmap;
    let epsilon = v.epsilons[0];
    let paths = ensemble(v, 0, epsilon)?;
    let rule = b.bandwidth.map(Bandwidth::Fixed).unwrap_or(Bandwidth::Silverman);
    let map = heatmap(&paths, b.stride, b.points, rule)?;
    let drift = AveragedDrift::new(v.system.clone());
    let reference = averaged_reference(v, &drift, c.macro_step)?;
    out.write("heatmap.csv", map.to_csv().as_bytes())?;
    out.write("heatmap_averaged.csv", averaged_csv(&reference).as_bytes())?;
    out.write("heatmap.svg", heatmap_svg(&map, &reference, epsilon, c.n_paths).as_bytes())
}

fn gaussian_grid(mean: f64, variance: f64) -> CliResult<DensityGrid<f64>> {
    let sd = variance.sqrt();
    Ok(DensityGrid::from_fn(mean - 14.0 * sd, mean + 14.0 * sd, 4001, |y| {
        (-(y - mean) * (y - mean) / (2.0 * variance)).exp()
    })?)
}

fn rate_eval(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let b = &c.rate_eval;
    let step = b.step.unwrap_or(c.macro_step);
    let drift = AveragedDrift::new(v.system.clone());
    let phi = averaged_reference(v, &drift, step)?;
    let pair = match b.density {
        DensityChoice::Invariant => CandidatePair::averaged(&drift, phi)?,
        DensityChoice::Gaussian { mean, variance } => {
            let n = phi.len();
            CandidatePair::new(phi, vec![gaussian_grid(mean, variance)?; n])?
        }
    };
    let rate = path_rate(&pair, &v.system, b.drift_tol)?;
    let profile = rate_profile(&pair, &v.system)?;
    out.write("rate_eval.csv", profile.to_csv().as_bytes())?;
    out.write_json(
        "rate_eval.json",
        &json!({
            "step": step,
            "drift_tol": b.drift_tol,
            "density": b.density,
            "finite": rate.is_finite(),
            "rate": rate,
        }),
    )
}

fn tail_rate(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let cfg = TailRateConfig {
        eta: c.eta,
        horizon: c.horizon,
        epsilons: v.epsilons.clone(),
        n_paths: c.n_paths,
        base_seed: c.seed,
        macro_step: c.macro_step,
        fast_factor: c.fast_factor,
        init: c.init.into(),
    };
    let report = tail_rate_estimate(&v.system, &cfg)?;
    out.write("tail_rate.csv", report.to_csv().as_bytes())?;
    out.write_json("tail_rate.json", &json!({ "report": report, "inversions": report.inversions() }))
}

fn couple_scan(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let cfg = CoupleScanConfig {
        epsilons: v.epsilons.clone(),
        horizon: c.horizon,
        n_paths: c.n_paths,
        base_seed: c.seed,
        macro_step: c.macro_step,
        fast_factor: c.fast_factor,
        init: c.init.into(),
        scale_x1_by_inverse_epsilon: c.couple.scale_x1_by_inverse_epsilon,
    };
    let scan = coupled_distance_scan(&v.system, &c.couple.env, &cfg)?;
    out.write("couple_scan.csv", scan.to_csv().as_bytes())?;
    out.write_json(
        "couple_scan.json",
        &json!({
            "env": c.couple.env,
            "scale_x1_by_inverse_epsilon": cfg.scale_x1_by_inverse_epsilon,
            "entries": scan.entries,
            "slope": scan.fit.as_ref().map(|f| f.slope),
            "intercept": scan.fit.as_ref().map(|f| f.intercept),
            "residuals": scan.fit.as_ref().map(|f| f.residuals.clone()),
        }),
    )
}

fn lemma_check(v: &Validated, out: &mut ArtifactWriter) -> CliResult<()> {
    let c = &v.config;
    let b = &c.lemma;
    let parse = |src: &str| parse_expr(src).map_err(fastslow::Error::from);
    let (u, g, w) = (parse(&b.u)?, parse(&b.g)?, parse(&b.w)?);
    let t = b.t.unwrap_or(c.horizon);
    let report = check_integration_by_parts(&u, &g, &w, b.epsilon, t, b.quad_step)?;
    out.write_json(
        "lemma.json",
        &json!({
            "u": b.u,
            "g": b.g,
            "w": b.w,
            "epsilon": b.epsilon,
            "t": t,
            "quad_step": b.quad_step,
            "lhs": report.lhs,
            "rhs": report.rhs,
            "residual": report.residual,
            "intervals": report.intervals,
        }),
    )
}
