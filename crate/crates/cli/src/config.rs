//! JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use fastslow::coeffs::{builtin_system, parse_expr, Expr, FastSlowSystem};
use fastslow::couple::{EnvKind, EnvSpec};
use fastslow::sde::{InitialState, DEFAULT_FAST_FACTOR};
use serde::de::{self, value::MapAccessDeserializer, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};
use crate::Command;

/// Inline system given by coefficient expressions in `t`, `x`, `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    #[serde(default)]
    pub name: Option<String>,
    pub force: String,
    pub damping: String,
    pub drift: String,
    pub diffusion: String,
    pub kappa0: f64,
}

/// A builtin name such as `"example1"`, or an inline system object.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Builtin(String),
    Inline(InlineSystem),
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SpecVisitor;

        impl<'de> Visitor<'de> for SpecVisitor {
            type Value = SystemSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a builtin system name or an object with force, damping, drift, diffusion and kappa0")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<SystemSpec, E> {
                Ok(SystemSpec::Builtin(v.to_string()))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<SystemSpec, A::Error> {
                InlineSystem::deserialize(MapAccessDeserializer::new(map)).map(SystemSpec::Inline)
            }
        }

        deserializer.deserialize_any(SpecVisitor)
    }
}

impl SystemSpec {
    pub fn build(&self) -> CliResult<FastSlowSystem<f64>> {
        match self {
            SystemSpec::Builtin(name) => builtin_system(name).map_err(|e| CliError::config("system", e.to_string())),
            SystemSpec::Inline(s) => {
                let parse = |field: &str, src: &str| -> CliResult<Expr> {
                    parse_expr(src).map_err(|e| CliError::config(format!("system.{field}"), e.to_string()))
                };
                let force = parse("force", &s.force)?;
                let damping = parse("damping", &s.damping)?;
                let drift = parse("drift", &s.drift)?;
                let diffusion = parse("diffusion", &s.diffusion)?;
                let name = s.name.clone().unwrap_or_else(|| "inline".to_string());
                FastSlowSystem::new(name, force, damping, drift, diffusion, s.kappa0)
                    .map_err(|e| CliError::config("system.kappa0", e.to_string()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self { x0: 1.0, x1: 0.0, y0: 0.0 }
    }
}

impl From<InitSpec> for InitialState<f64> {
    fn from(s: InitSpec) -> Self {
        InitialState::new(s.x0, s.x1, s.y0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    /// Write every path to `paths_eps{k}.csv`.
    pub write_paths: bool,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self { write_paths: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragedBlock {
    /// RK4 step; defaults to `macro_step`.
    pub step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantBlock {
    pub t: f64,
    /// Frozen slow state; defaults to `init.x0`.
    pub x: Option<f64>,
    pub points: usize,
    pub half_width: Option<f64>,
}

impl Default for InvariantBlock {
    fn default() -> Self {
        Self { t: 0.0, x: None, points: 4001, half_width: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupationBlock {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    /// Slow state the fast process is frozen at; defaults to `init.x0`.
    pub frozen_x: Option<f64>,
    pub path_index: u64,
}

impl Default for OccupationBlock {
    fn default() -> Self {
        Self { lo: -3.0, hi: 3.0, bins: 12, frozen_x: None, path_index: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapBlock {
    /// Use every `stride`-th macro node as a time slice.
    pub stride: usize,
    pub points: usize,
    /// Fixed KDE bandwidth; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
}

impl Default for HeatmapBlock {
    fn default() -> Self {
        Self { stride: 1, points: 128, bandwidth: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityChoice {
    /// Frozen stationary density at every node.
    Invariant,
    /// The same normal density at every node.
    Gaussian { mean: f64, variance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateEvalBlock {
    pub step: Option<f64>,
    pub drift_tol: f64,
    pub density: DensityChoice,
}

impl Default for RateEvalBlock {
    fn default() -> Self {
        Self { step: None, drift_tol: fastslow::ldp::DEFAULT_DRIFT_TOL, density: DensityChoice::Invariant }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoupleBlock {
    pub env: EnvSpec<f64>,
    pub scale_x1_by_inverse_epsilon: bool,
}

impl Default for CoupleBlock {
    fn default() -> Self {
        Self { env: EnvSpec::diffusion(), scale_x1_by_inverse_epsilon: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaBlock {
    pub u: String,
    pub g: String,
    pub w: String,
    pub epsilon: f64,
    /// Upper limit; defaults to `horizon`.
    pub t: Option<f64>,
    pub quad_step: f64,
}

impl Default for LemmaBlock {
    fn default() -> Self {
        Self { u: "1".into(), g: "1".into(), w: "1".into(), epsilon: 0.3, t: None, quad_step: 1e-4 }
    }
}

fn default_horizon() -> f64 {
    1.0
}
fn default_macro_step() -> f64 {
    0.01
}
fn default_fast_factor() -> f64 {
    DEFAULT_FAST_FACTOR
}
fn default_n_paths() -> usize {
    100
}
fn default_eta() -> f64 {
    0.2
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemSpec,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_macro_step")]
    pub macro_step: f64,
    #[serde(default = "default_fast_factor")]
    pub fast_factor: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub averaged: AveragedBlock,
    #[serde(default)]
    pub invariant: InvariantBlock,
    #[serde(default)]
    pub occupation: OccupationBlock,
    #[serde(default)]
    pub heatmap: HeatmapBlock,
    #[serde(default)]
    pub rate_eval: RateEvalBlock,
    #[serde(default)]
    pub couple: CoupleBlock,
    #[serde(default)]
    pub lemma: LemmaBlock,
}

/// Configuration checked against one command.
pub struct Validated {
    pub config: Config,
    pub system: FastSlowSystem<f64>,
    pub epsilons: Vec<f64>,
}

pub fn parse_config(bytes: &[u8]) -> CliResult<Config> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })
}

pub fn load_config(path: &Path) -> CliResult<(Config, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((parse_config(&bytes)?, bytes))
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(path: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be nonnegative and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be finite, got {v}")))
    }
}

impl Config {
    fn epsilon_list(&self) -> CliResult<Option<Vec<f64>>> {
        match (&self.epsilon, &self.epsilons) {
            (Some(_), Some(_)) => Err(CliError::config("epsilons", "give either `epsilon` or `epsilons`, not both")),
            (Some(e), None) => {
                positive("epsilon", *e)?;
                Ok(Some(vec![*e]))
            }
            (None, Some(list)) => {
                if list.is_empty() {
                    return Err(CliError::config("epsilons", "list is empty"));
                }
                for (i, e) in list.iter().enumerate() {
                    positive(&format!("epsilons[{i}]"), *e)?;
                }
                Ok(Some(list.clone()))
            }
            (None, None) => Ok(None),
        }
    }

    /// Checks every field the command reads before anything runs.
    pub fn validate(self, command: Command) -> CliResult<Validated> {
        let system = self.system.build()?;
        nonnegative("horizon", self.horizon)?;
        positive("macro_step", self.macro_step)?;
        positive("fast_factor", self.fast_factor)?;
        nonnegative("eta", self.eta)?;
        finite("init.x0", self.init.x0)?;
        finite("init.x1", self.init.x1)?;
        finite("init.y0", self.init.y0)?;

        let listed = self.epsilon_list()?;
        let epsilons = match command.epsilon_arity() {
            Arity::None => listed.unwrap_or_default(),
            Arity::One => match listed {
                Some(list) if list.len() == 1 => list,
                Some(_) => return Err(CliError::config("epsilons", format!("`{command}` takes a single epsilon"))),
                None => return Err(CliError::config("epsilon", "missing field `epsilon`")),
            },
            Arity::Many => listed.ok_or_else(|| CliError::config("epsilons", "missing field `epsilons`"))?,
        };
        if command.uses_paths() && self.n_paths == 0 {
            return Err(CliError::config("n_paths", "must be at least 1"));
        }

        match command {
            Command::Simulate | Command::Averaged => {
                if let Some(step) = self.averaged.step {
                    positive("averaged.step", step)?;
                }
            }
            Command::Invariant => {
                let b = &self.invariant;
                finite("invariant.t", b.t)?;
                if let Some(x) = b.x {
                    finite("invariant.x", x)?;
                }
                if b.points < 3 {
                    return Err(CliError::config("invariant.points", "must be at least 3"));
                }
                if let Some(h) = b.half_width {
                    positive("invariant.half_width", h)?;
                }
            }
            Command::Occupation => {
                let b = &self.occupation;
                positive("horizon", self.horizon)?;
                finite("occupation.lo", b.lo)?;
                finite("occupation.hi", b.hi)?;
                if !(b.hi > b.lo) {
                    return Err(CliError::config("occupation.hi", "must exceed `occupation.lo`"));
                }
                if b.bins == 0 {
                    return Err(CliError::config("occupation.bins", "must be at least 1"));
                }
                if let Some(x) = b.frozen_x {
                    finite("occupation.frozen_x", x)?;
                }
            }
            Command::Heatmap => {
                let b = &self.heatmap;
                if b.stride == 0 {
                    return Err(CliError::config("heatmap.stride", "must be at least 1"));
                }
                if b.points < 2 {
                    return Err(CliError::config("heatmap.points", "must be at least 2"));
                }
                if let Some(h) = b.bandwidth {
                    positive("heatmap.bandwidth", h)?;
                }
                if self.n_paths < 2 {
                    return Err(CliError::config("n_paths", "a density estimate needs at least 2 paths"));
                }
            }
            Command::RateEval => {
                let b = &self.rate_eval;
                if let Some(step) = b.step {
                    positive("rate_eval.step", step)?;
                }
                positive("rate_eval.drift_tol", b.drift_tol)?;
                if let DensityChoice::Gaussian { mean, variance } = b.density {
                    finite("rate_eval.density.mean", mean)?;
                    positive("rate_eval.density.variance", variance)?;
                }
                let step = b.step.unwrap_or(self.macro_step);
                if self.horizon < 2.0 * step {
                    return Err(CliError::config("horizon", "a candidate path needs at least three nodes"));
                }
            }
            Command::TailRate => {
                if self.n_paths < fastslow::ldp::MIN_TAIL_PATHS {
                    return Err(CliError::config(
                        "n_paths",
                        format!("tail estimates need at least {} paths", fastslow::ldp::MIN_TAIL_PATHS),
                    ));
                }
                if let Some(i) = epsilons.windows(2).position(|w| !(w[1] < w[0])) {
                    return Err(CliError::config(format!("epsilons[{}]", i + 1), "epsilons must be strictly decreasing"));
                }
            }
            Command::CoupleScan => {
                let env = &self.couple.env;
                env.validate().map_err(|e| CliError::config("couple.env", e.to_string()))?;
                check_damping_on_env(&system, env, &self)?;
            }
            Command::LemmaCheck => {
                let b = &self.lemma;
                for (field, src) in [("u", &b.u), ("g", &b.g), ("w", &b.w)] {
                    parse_expr(src).map_err(|e| CliError::config(format!("lemma.{field}"), e.to_string()))?;
                }
                positive("lemma.epsilon", b.epsilon)?;
                positive("lemma.quad_step", b.quad_step)?;
                if let Some(t) = b.t {
                    nonnegative("lemma.t", t)?;
                }
            }
        }
        Ok(Validated { config: self, system, epsilons })
    }
}

/// Samples the damping at the environment's declared range and the initial
/// slow state and checks it against `kappa0`.
fn check_damping_on_env(system: &FastSlowSystem<f64>, env: &EnvSpec<f64>, cfg: &Config) -> CliResult<()> {
    let ys: Vec<f64> = match &env.kind {
        EnvKind::Diffusion => return Ok(()),
        EnvKind::Telegraph { levels, .. } => levels.clone(),
        EnvKind::Ou { .. } => match env.bound {
            Some(b) => vec![-b, 0.0, b],
            None => vec![0.0],
        },
    };
    for t in [0.0, 0.5 * cfg.horizon, cfg.horizon] {
        for &y in &ys {
            let x = cfg.init.x0;
            let lambda = system
                .damping
                .eval(t, x, y)
                .map_err(|e| CliError::config("system.damping", format!("cannot evaluate at (t={t}, x={x}, y={y}): {e}")))?;
            if !(lambda >= system.kappa0) {
                return Err(CliError::config(
                    "system.damping",
                    format!("damping {lambda} below kappa0 = {} at (t={t}, x={x}, y={y})", system.kappa0),
                ));
            }
        }
    }
    Ok(())
}

/// How many epsilons a command reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    None,
    One,
    Many,
}
