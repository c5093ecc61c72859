use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DataSource, ExperimentConfig, Init, ModelSpec, SolverKind};
use super::data::read_dataset;
use super::synthetic::gen_synthetic;
use crate::error::{Error, Result};
use crate::first_order::{gradient_descent, sgd, GdOptions, GdVariant, SgdOptions, StepSchedule};
use crate::problems::{Dataset, Mlp, Model, Objective, Problem, Regularizer};
use crate::run::{RunControl, RunResult};
use crate::second_order::{
    bfgs, newton_cg, stochastic_lbfgs, trust_region, BfgsOptions, CurvatureSource, NewtonCgOptions,
    StochasticLbfgsOptions, TrustRegionOptions, TrustRegionState,
};
use crate::variance_reduced::{dynamic_batch_sgd, saga, sarah, svrg, DynamicBatchOptions, SagaOptions, VrOptions};

pub fn load_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::File {
            path,
            format,
            zero_one_labels,
        } => read_dataset(path, *format, *zero_one_labels),
        DataSource::Synthetic { kind, n, d, .. } => gen_synthetic(*kind, *n, *d, cfg.data_seed()),
    }
}

pub fn build_problem(cfg: &ExperimentConfig, data: Dataset) -> Result<Problem> {
    let model = match &cfg.model {
        ModelSpec::Linear => Model::Linear,
        ModelSpec::Mlp { layers, hidden } => {
            Model::Mlp(Mlp::with_hidden(layers.clone(), *hidden, crate::problems::Activation::Identity)?)
        }
    };
    Problem::new(model, cfg.loss, cfg.regularizer, data)
}

pub fn initial_point(cfg: &ExperimentConfig, problem: &Problem) -> Vec<f64> {
    match cfg.init {
        Init::Zeros => vec![0.0; problem.dim()],
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            problem.initial_point(&mut rng).into_values()
        }
    }
}

/// `1 / L̂` for full-gradient methods and `1 / (4 L_max)` for sampled ones
/// on linear models; `0.1` for networks.
fn default_step(kind: SolverKind, problem: &Problem) -> f64 {
    if !matches!(problem.model(), Model::Linear) {
        return 0.1;
    }
    let full = matches!(kind, SolverKind::Gd | SolverKind::Nesterov | SolverKind::Ista | SolverKind::Fista);
    let l = if full { problem.smoothness_estimate() } else { 4.0 * problem.lipschitz_bound() };
    if l > 0.0 {
        1.0 / l
    } else {
        0.1
    }
}

pub fn control_for(cfg: &ExperimentConfig) -> RunControl {
    let mut control = RunControl {
        max_iter: cfg.max_iter,
        grad_tol: cfg.grad_tol,
        target: None,
        max_epochs: cfg.max_epochs,
        log_every: cfg.log_every,
        wall_clock: cfg.wall_clock,
    };
    if let (Some(f_star), Some(gap)) = (cfg.f_star, cfg.target_gap) {
        control = control.with_target(f_star, gap);
    }
    control
}

/// Runs `kind` with the hyperparameters in `cfg` and the given seed.
pub fn run_solver(
    kind: SolverKind,
    problem: &Problem,
    w0: &[f64],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<RunResult> {
    let control = control_for(cfg);
    let alpha = cfg.step.unwrap_or_else(|| default_step(kind, problem));
    let schedule = if cfg.harmonic {
        StepSchedule::Harmonic {
            alpha0: alpha,
            k0: cfg.step_offset,
        }
    } else {
        StepSchedule::Constant(alpha)
    };
    let gd = |variant| gradient_descent(problem, w0, GdOptions { schedule, variant }, &control);
    let vr = || VrOptions {
        alpha,
        batch_size: cfg.batch_size,
        inner_loop: cfg.inner_loop,
        seed,
        outer_choice: cfg.outer_choice,
        sampling: cfg.sampling,
    };
    match kind {
        SolverKind::Gd => gd(GdVariant::Plain),
        SolverKind::Nesterov => gd(GdVariant::Nesterov),
        SolverKind::Ista => gd(GdVariant::Ista),
        SolverKind::Fista => gd(GdVariant::Fista),
        SolverKind::Sgd => {
            let mut opts = SgdOptions::new(schedule, cfg.batch_size, seed).with_momentum(cfg.momentum);
            opts.sampling = cfg.sampling;
            sgd(problem, w0, opts, &control)
        }
        SolverKind::Svrg => svrg(problem, w0, vr(), &control),
        SolverKind::Sarah => sarah(problem, w0, vr(), &control),
        SolverKind::Saga => saga(problem, w0, SagaOptions { alpha, seed }, &control),
        SolverKind::DynamicSgd => {
            let mut opts = DynamicBatchOptions::new(alpha, cfg.batch_size, cfg.growth, seed);
            opts.steps_per_epoch = cfg.steps_per_epoch;
            opts.sampling = cfg.sampling;
            dynamic_batch_sgd(problem, w0, opts, &control)
        }
        SolverKind::Bfgs => bfgs(problem, w0, BfgsOptions::full(), &control),
        SolverKind::Lbfgs => bfgs(problem, w0, BfgsOptions::limited(cfg.memory), &control),
        SolverKind::StochasticLbfgs => {
            let mut opts = StochasticLbfgsOptions::new(schedule, cfg.batch_size, cfg.pair_strategy, seed);
            opts.memory = cfg.memory;
            opts.sampling = cfg.sampling;
            stochastic_lbfgs(problem, w0, opts, &control)
        }
        SolverKind::NewtonCg => {
            let opts = NewtonCgOptions {
                curvature: cfg.curvature,
                damping: cfg.damping,
                forcing: cfg.forcing,
                max_cg: cfg.max_cg,
            };
            newton_cg(problem, w0, opts, &control)
        }
        SolverKind::TrustRegion => {
            let opts = TrustRegionOptions {
                state: TrustRegionState::default().with_radius(cfg.radius),
                source: cfg.sample_constant.map_or(CurvatureSource::Exact, |c| CurvatureSource::Subsampled { c }),
                curvature: cfg.curvature,
                max_cg: cfg.max_cg,
                seed,
                ..TrustRegionOptions::default()
            };
            trust_region(problem, w0, opts, &control)
        }
    }
}

/// Loads the data, builds the problem and runs the configured solver.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Problem, RunResult)> {
    let problem = build_problem(cfg, load_data(cfg)?)?;
    let w0 = initial_point(cfg, &problem);
    let result = run_solver(cfg.solver, &problem, &w0, cfg, cfg.seed)?;
    Ok((problem, result))
}

/// High-accuracy `F*`: L-BFGS to `‖∇F‖ ≤ 1e−12` for smooth objectives,
/// otherwise 20000 FISTA steps with `α = 1 / L̂`.
pub fn reference_optimum(problem: &Problem) -> Result<f64> {
    let w0 = vec![0.0; problem.dim()];
    let run = if problem.regularizer().is_smooth() {
        let control = RunControl::iterations(10_000).with_grad_tol(1e-12);
        bfgs(problem, &w0, BfgsOptions::limited(20), &control)?
    } else {
        if !matches!(problem.regularizer(), Regularizer::L1(_)) || !matches!(problem.model(), Model::Linear) {
            return Err(Error::unsupported("reference optimum for this objective"));
        }
        let opts = GdOptions {
            schedule: StepSchedule::Constant(1.0 / problem.smoothness_estimate()),
            variant: GdVariant::Fista,
        };
        gradient_descent(problem, &w0, opts, &RunControl::iterations(20_000).with_log_every(20_000))?
    };
    Ok(run.trace.iter().map(|r| r.fval).fold(f64::INFINITY, f64::min))
}
