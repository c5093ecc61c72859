use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::data::DataFormat;
use super::synthetic::SyntheticKind;
use crate::error::{Error, Result};
use crate::problems::{Activation, Loss, Regularizer};
use crate::sampling::SamplingMode;
use crate::second_order::{Curvature, Forcing, PairStrategy};
use crate::variance_reduced::OuterChoice;

/// Every key accepted in a configuration file.
pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "layers",
    "hidden",
    "loss",
    "regularizer",
    "lambda",
    "data",
    "data_format",
    "zero_one_labels",
    "generator",
    "n",
    "d",
    "margin",
    "noise_rate",
    "scale_max",
    "scale_min",
    "data_seed",
    "solver",
    "step",
    "schedule",
    "step_offset",
    "batch_size",
    "momentum",
    "inner_loop",
    "outer_choice",
    "sampling",
    "growth",
    "steps_per_epoch",
    "memory",
    "pair_strategy",
    "overlap_fraction",
    "damping_lower",
    "damping_upper",
    "curvature_batch",
    "curvature",
    "damping",
    "max_cg",
    "forcing",
    "radius",
    "sample_constant",
    "init",
    "seed",
    "max_iter",
    "grad_tol",
    "max_epochs",
    "log_every",
    "f_star",
    "target_gap",
    "wall_clock",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Linear,
    /// Layer widths from input to output; hidden layers share one activation
    /// and the output is linear.
    Mlp { layers: Vec<usize>, hidden: Activation },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    #[default]
    Zeros,
    /// `Problem::initial_point` drawn from the run seed.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Gd,
    Nesterov,
    Ista,
    Fista,
    Sgd,
    Svrg,
    Sarah,
    Saga,
    DynamicSgd,
    Bfgs,
    Lbfgs,
    StochasticLbfgs,
    NewtonCg,
    TrustRegion,
}

impl SolverKind {
    pub const ALL: [SolverKind; 14] = [
        SolverKind::Gd,
        SolverKind::Nesterov,
        SolverKind::Ista,
        SolverKind::Fista,
        SolverKind::Sgd,
        SolverKind::Svrg,
        SolverKind::Sarah,
        SolverKind::Saga,
        SolverKind::DynamicSgd,
        SolverKind::Bfgs,
        SolverKind::Lbfgs,
        SolverKind::StochasticLbfgs,
        SolverKind::NewtonCg,
        SolverKind::TrustRegion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gd => "gd",
            SolverKind::Nesterov => "nesterov",
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
            SolverKind::Sgd => "sgd",
            SolverKind::Svrg => "svrg",
            SolverKind::Sarah => "sarah",
            SolverKind::Saga => "saga",
            SolverKind::DynamicSgd => "dynamic_sgd",
            SolverKind::Bfgs => "bfgs",
            SolverKind::Lbfgs => "lbfgs",
            SolverKind::StochasticLbfgs => "slbfgs",
            SolverKind::NewtonCg => "newton_cg",
            SolverKind::TrustRegion => "trust_region",
        }
    }

    /// Solvers whose step size is a gradient step `α`.
    pub fn uses_step(self) -> bool {
        !matches!(
            self,
            SolverKind::Bfgs | SolverKind::Lbfgs | SolverKind::NewtonCg | SolverKind::TrustRegion
        )
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SolverKind::ALL.iter().map(|k| k.name()).collect();
            Error::invalid(format!("unknown solver `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File { path: PathBuf, format: DataFormat, zero_one_labels: bool },
    Synthetic { kind: SyntheticKind, n: usize, d: usize, seed: Option<u64> },
}

/// One run: problem, data, solver with hyperparameters, stopping rule and
/// output path. Parsed from flat `key = value` lines; `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub loss: Loss,
    pub regularizer: Regularizer,
    pub data: DataSource,
    pub solver: SolverKind,
    /// `None` picks `1 / L̂` for linear models and `0.1` otherwise.
    pub step: Option<f64>,
    pub harmonic: bool,
    pub step_offset: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub inner_loop: Option<usize>,
    pub outer_choice: OuterChoice,
    pub sampling: SamplingMode,
    pub growth: f64,
    pub steps_per_epoch: usize,
    pub memory: usize,
    pub pair_strategy: PairStrategy,
    pub curvature: Curvature,
    pub damping: f64,
    pub max_cg: usize,
    pub forcing: Forcing,
    pub radius: f64,
    pub sample_constant: Option<f64>,
    pub init: Init,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub max_epochs: Option<f64>,
    pub log_every: usize,
    pub f_star: Option<f64>,
    pub target_gap: Option<f64>,
    pub wall_clock: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelSpec::Linear,
            loss: Loss::Logistic,
            regularizer: Regularizer::L2(0.01),
            data: DataSource::Synthetic {
                kind: SyntheticKind::GivenSeparator { noise_rate: 0.05 },
                n: 200,
                d: 5,
                seed: None,
            },
            solver: SolverKind::Gd,
            step: None,
            harmonic: false,
            step_offset: 1.0,
            batch_size: 1,
            momentum: 0.0,
            inner_loop: None,
            outer_choice: OuterChoice::Uniform,
            sampling: SamplingMode::WithReplacement,
            growth: 2.0,
            steps_per_epoch: 10,
            memory: 10,
            pair_strategy: PairStrategy::SameBatch,
            curvature: Curvature::Hessian,
            damping: 1e-4,
            max_cg: 30,
            forcing: Forcing::Adaptive,
            radius: 1.0,
            sample_constant: None,
            init: Init::Zeros,
            seed: 0,
            max_iter: 1000,
            grad_tol: 1e-8,
            max_epochs: None,
            log_every: 1,
            f_star: None,
            target_gap: None,
            wall_clock: false,
            out: None,
        }
    }
}

fn cfg(line: usize, key: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("line {line}: `{key}`: {msg}"))
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| cfg(line, key, format!("cannot parse `{raw}`")))
}

fn real(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v: f64 = value(line, key, raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(cfg(line, key, "must be finite"))
    }
}

fn choice<T>(line: usize, key: &str, raw: &str, options: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    options.iter().find(|(name, _)| *name == raw).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        cfg(line, key, format!("`{raw}` is not one of {}", names.join(", ")))
    })
}

/// Raw settings gathered before cross-key assembly.
#[derive(Default)]
struct Pending {
    model: Option<String>,
    layers: Option<Vec<usize>>,
    hidden: Option<Activation>,
    regularizer: Option<String>,
    lambda: Option<f64>,
    data: Option<PathBuf>,
    data_format: Option<DataFormat>,
    zero_one_labels: Option<bool>,
    generator: Option<String>,
    n: Option<usize>,
    d: Option<usize>,
    margin: Option<f64>,
    noise_rate: Option<f64>,
    scale_max: Option<f64>,
    scale_min: Option<f64>,
    data_seed: Option<u64>,
    pair_strategy: Option<String>,
    overlap_fraction: Option<f64>,
    damping_lower: Option<f64>,
    damping_upper: Option<f64>,
    curvature_batch: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut p = Pending::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, raw) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
            let Some(&known) = CONFIG_KEYS.iter().find(|k| **k == key) else {
                return Err(Error::Config(format!("line {line}: unknown key `{key}`")));
            };
            if seen.contains(&known) {
                return Err(cfg(line, key, "given more than once"));
            }
            seen.push(known);
            match key {
                "model" => p.model = Some(raw.to_string()),
                "layers" => {
                    let layers = raw
                        .split(',')
                        .map(|s| value::<usize>(line, key, s.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    p.layers = Some(layers);
                }
                "hidden" => p.hidden = Some(raw.parse().map_err(|e: Error| cfg(line, key, e))?),
                "loss" => c.loss = raw.parse().map_err(|e: Error| cfg(line, key, e))?,
                "regularizer" => p.regularizer = Some(raw.to_string()),
                "lambda" => p.lambda = Some(real(line, key, raw)?),
                "data" => p.data = Some(PathBuf::from(raw)),
                "data_format" => p.data_format = Some(raw.parse().map_err(|e: Error| cfg(line, key, e))?),
                "zero_one_labels" => p.zero_one_labels = Some(value(line, key, raw)?),
                "generator" => p.generator = Some(raw.to_string()),
                "n" => p.n = Some(value(line, key, raw)?),
                "d" => p.d = Some(value(line, key, raw)?),
                "margin" => p.margin = Some(real(line, key, raw)?),
                "noise_rate" => p.noise_rate = Some(real(line, key, raw)?),
                "scale_max" => p.scale_max = Some(real(line, key, raw)?),
                "scale_min" => p.scale_min = Some(real(line, key, raw)?),
                "data_seed" => p.data_seed = Some(value(line, key, raw)?),
                "solver" => c.solver = raw.parse().map_err(|e: Error| cfg(line, key, e))?,
                "step" => {
                    c.step = if raw == "auto" { None } else { Some(real(line, key, raw)?) };
                }
                "schedule" => c.harmonic = choice(line, key, raw, &[("constant", false), ("harmonic", true)])?,
                "step_offset" => c.step_offset = real(line, key, raw)?,
                "batch_size" => c.batch_size = value(line, key, raw)?,
                "momentum" => c.momentum = real(line, key, raw)?,
                "inner_loop" => c.inner_loop = Some(value(line, key, raw)?),
                "outer_choice" => {
                    c.outer_choice =
                        choice(line, key, raw, &[("uniform", OuterChoice::Uniform), ("last", OuterChoice::Last)])?
                }
                "sampling" => {
                    c.sampling = choice(
                        line,
                        key,
                        raw,
                        &[
                            ("with_replacement", SamplingMode::WithReplacement),
                            ("epoch_shuffle", SamplingMode::EpochShuffle),
                        ],
                    )?
                }
                "growth" => c.growth = real(line, key, raw)?,
                "steps_per_epoch" => c.steps_per_epoch = value(line, key, raw)?,
                "memory" => c.memory = value(line, key, raw)?,
                "pair_strategy" => p.pair_strategy = Some(raw.to_string()),
                "overlap_fraction" => p.overlap_fraction = Some(real(line, key, raw)?),
                "damping_lower" => p.damping_lower = Some(real(line, key, raw)?),
                "damping_upper" => p.damping_upper = Some(real(line, key, raw)?),
                "curvature_batch" => p.curvature_batch = Some(value(line, key, raw)?),
                "curvature" => {
                    c.curvature = choice(
                        line,
                        key,
                        raw,
                        &[("hessian", Curvature::Hessian), ("gauss_newton", Curvature::GaussNewton)],
                    )?
                }
                "damping" => c.damping = real(line, key, raw)?,
                "max_cg" => c.max_cg = value(line, key, raw)?,
                "forcing" => {
                    c.forcing = if raw == "adaptive" { Forcing::Adaptive } else { Forcing::Fixed(real(line, key, raw)?) }
                }
                "radius" => c.radius = real(line, key, raw)?,
                "sample_constant" => c.sample_constant = Some(real(line, key, raw)?),
                "init" => c.init = choice(line, key, raw, &[("zeros", Init::Zeros), ("random", Init::Random)])?,
                "seed" => c.seed = value(line, key, raw)?,
                "max_iter" => c.max_iter = value(line, key, raw)?,
                "grad_tol" => c.grad_tol = real(line, key, raw)?,
                "max_epochs" => c.max_epochs = Some(real(line, key, raw)?),
                "log_every" => c.log_every = value(line, key, raw)?,
                "f_star" => c.f_star = Some(real(line, key, raw)?),
                "target_gap" => c.target_gap = Some(real(line, key, raw)?),
                "wall_clock" => c.wall_clock = value(line, key, raw)?,
                "out" => c.out = Some(PathBuf::from(raw)),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        c.assemble(p)?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn assemble(&mut self, p: Pending) -> Result<()> {
        let conf = |msg: String| Error::Config(msg);
        self.model = match p.model.as_deref().unwrap_or("linear") {
            "linear" => {
                if p.layers.is_some() || p.hidden.is_some() {
                    return Err(conf("`layers` and `hidden` need model = mlp".into()));
                }
                ModelSpec::Linear
            }
            "mlp" => ModelSpec::Mlp {
                layers: p.layers.ok_or_else(|| conf("model = mlp needs `layers`".into()))?,
                hidden: p.hidden.unwrap_or(Activation::Tanh),
            },
            other => return Err(conf(format!("`model`: `{other}` is not one of linear, mlp"))),
        };

        let lambda = p.lambda.unwrap_or(0.01);
        self.regularizer = match p.regularizer.as_deref().unwrap_or("l2") {
            "none" => Regularizer::None,
            "l2" => Regularizer::L2(lambda),
            "l1" => Regularizer::L1(lambda),
            other => return Err(conf(format!("`regularizer`: `{other}` is not one of none, l2, l1"))),
        }
        .validate()
        .map_err(|e| conf(format!("`lambda`: {e}")))?;

        let generator_keys = p.generator.is_some()
            || p.n.is_some()
            || p.d.is_some()
            || p.margin.is_some()
            || p.noise_rate.is_some()
            || p.scale_max.is_some()
            || p.scale_min.is_some()
            || p.data_seed.is_some();
        self.data = if let Some(path) = p.data {
            if generator_keys {
                return Err(conf("`data` cannot be combined with generator keys".into()));
            }
            DataSource::File {
                path,
                format: p.data_format.unwrap_or_default(),
                zero_one_labels: p.zero_one_labels.unwrap_or(false),
            }
        } else {
            if p.data_format.is_some() || p.zero_one_labels.is_some() {
                return Err(conf("`data_format` and `zero_one_labels` need `data`".into()));
            }
            let name = p.generator.as_deref().unwrap_or("given_separator");
            let kind = match name.parse::<SyntheticKind>().map_err(|e| conf(format!("`generator`: {e}")))? {
                SyntheticKind::TwoGaussians { margin } => {
                    if p.noise_rate.is_some() || p.scale_max.is_some() || p.scale_min.is_some() {
                        return Err(conf("two_gaussians only takes `margin`".into()));
                    }
                    SyntheticKind::TwoGaussians {
                        margin: p.margin.unwrap_or(margin),
                    }
                }
                SyntheticKind::GivenSeparator { .. } => {
                    if p.margin.is_some() || p.scale_max.is_some() || p.scale_min.is_some() {
                        return Err(conf("given_separator only takes `noise_rate`".into()));
                    }
                    SyntheticKind::GivenSeparator {
                        noise_rate: p.noise_rate.unwrap_or(0.05),
                    }
                }
                SyntheticKind::ScaledSeparator { scale_max, scale_min, .. } => {
                    if p.margin.is_some() {
                        return Err(conf("scaled_separator does not take `margin`".into()));
                    }
                    SyntheticKind::ScaledSeparator {
                        noise_rate: p.noise_rate.unwrap_or(0.05),
                        scale_max: p.scale_max.unwrap_or(scale_max),
                        scale_min: p.scale_min.unwrap_or(scale_min),
                    }
                }
            };
            DataSource::Synthetic {
                kind: kind.validate().map_err(|e| conf(format!("generator: {e}")))?,
                n: p.n.unwrap_or(200),
                d: p.d.unwrap_or(5),
                seed: p.data_seed,
            }
        };

        self.pair_strategy = match p.pair_strategy.as_deref().unwrap_or("same_batch") {
            "same_batch" => PairStrategy::SameBatch,
            "overlap" => PairStrategy::Overlap {
                fraction: p.overlap_fraction.unwrap_or(0.5),
            },
            "damped" => PairStrategy::Damped {
                mu1: p.damping_lower.unwrap_or(0.2),
                mu2: p.damping_upper.unwrap_or(100.0),
            },
            "hessian_action" => PairStrategy::HessianAction {
                batch: p.curvature_batch.unwrap_or(self.batch_size),
            },
            other => {
                return Err(conf(format!(
                    "`pair_strategy`: `{other}` is not one of same_batch, overlap, damped, hessian_action"
                )))
            }
        };
        if p.overlap_fraction.is_some() && !matches!(self.pair_strategy, PairStrategy::Overlap { .. }) {
            return Err(conf("`overlap_fraction` needs pair_strategy = overlap".into()));
        }
        if (p.damping_lower.is_some() || p.damping_upper.is_some())
            && !matches!(self.pair_strategy, PairStrategy::Damped { .. })
        {
            return Err(conf("`damping_lower`/`damping_upper` need pair_strategy = damped".into()));
        }
        if p.curvature_batch.is_some() && !matches!(self.pair_strategy, PairStrategy::HessianAction { .. }) {
            return Err(conf("`curvature_batch` needs pair_strategy = hessian_action".into()));
        }
        if self.log_every == 0 {
            return Err(conf("`log_every` must be positive".into()));
        }
        Ok(())
    }

    /// Seed for synthetic data: `data_seed` when given, else the run seed.
    pub fn data_seed(&self) -> u64 {
        match self.data {
            DataSource::Synthetic { seed: Some(s), .. } => s,
            _ => self.seed,
        }
    }
}
