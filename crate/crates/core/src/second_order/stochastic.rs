use super::quasi_newton::{CurvaturePair, LbfgsMemory};
use crate::error::{Error, Result};
use crate::first_order::{check_batch_size, StepSchedule};
use crate::linalg::{axpy, dot, norm, sub};
use crate::problems::{Objective, Samples};
use crate::run::{Diagnostics, Recorder, RunControl, RunResult, Termination};
use crate::sampling::{BatchSampler, SamplingMode};

/// How the displacement `y_k` of a stochastic curvature pair is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairStrategy {
    /// `∇_{S_k}F(w_{k+1}) − ∇_{S_k}F(w_k)` on the step's own batch.
    SameBatch,
    /// Gradient difference on the part of `S_k` carried into `S_{k+1}`.
    Overlap { fraction: f64 },
    /// Same-batch difference blended with `s` so that `sᵀv / ‖s‖² ∈ [mu1, mu2]`.
    Damped { mu1: f64, mu2: f64 },
    /// `∇²_{S'}F(w_k) s_k` on a separate batch of the given size.
    HessianAction { batch: usize },
}

impl PairStrategy {
    pub fn overlap() -> Self {
        PairStrategy::Overlap { fraction: 0.5 }
    }

    pub fn validate(self, n: usize) -> Result<Self> {
        match self {
            PairStrategy::SameBatch => {}
            PairStrategy::Overlap { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(Error::invalid(format!("overlap fraction {fraction} outside (0, 1]")));
                }
            }
            PairStrategy::Damped { mu1, mu2 } => {
                if !(0.0 < mu1 && mu1 < 1.0 && 1.0 < mu2 && mu2.is_finite()) {
                    return Err(Error::invalid(format!("damping bounds need 0 < mu1 < 1 < mu2, got {mu1}, {mu2}")));
                }
            }
            PairStrategy::HessianAction { batch } => check_batch_size(batch, n)?,
        }
        Ok(self)
    }
}

/// Blend `v = β s + (1 − β) y` with the smallest `β ∈ [0, 1)` that puts
/// `q = sᵀv / ‖s‖²` inside `[mu1, mu2]`. Returns `(v, β)`.
pub fn damped_displacement(s: &[f64], y: &[f64], mu1: f64, mu2: f64) -> (Vec<f64>, f64) {
    let ss = dot(s, s);
    let q = dot(s, y) / ss;
    let beta = if q < mu1 {
        (mu1 - q) / (1.0 - q)
    } else if q > mu2 {
        (q - mu2) / (q - 1.0)
    } else {
        0.0
    };
    let v = s.iter().zip(y).map(|(si, yi)| beta * si + (1.0 - beta) * yi).collect();
    (v, beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticLbfgsOptions {
    pub schedule: StepSchedule,
    pub batch_size: usize,
    pub strategy: PairStrategy,
    pub memory: usize,
    pub seed: u64,
    pub sampling: SamplingMode,
    pub scaling: bool,
    pub record_pairs: bool,
}

impl StochasticLbfgsOptions {
    pub fn new(schedule: StepSchedule, batch_size: usize, strategy: PairStrategy, seed: u64) -> Self {
        StochasticLbfgsOptions {
            schedule,
            batch_size,
            strategy,
            memory: 10,
            seed,
            sampling: SamplingMode::WithReplacement,
            scaling: true,
            record_pairs: false,
        }
    }
}

/// L-BFGS directions on mini-batch gradients with a fixed step schedule
/// and no line search. Pairs with `sᵀy ≤ 1e−12 ‖s‖‖y‖` are skipped, except
/// under damping, which repairs them.
pub fn stochastic_lbfgs<O: Objective + ?Sized>(
    obj: &O,
    w0: &[f64],
    opts: StochasticLbfgsOptions,
    control: &RunControl,
) -> Result<RunResult> {
    obj.check_point(w0)?;
    let schedule = opts.schedule.validate()?;
    let n = obj.num_samples();
    check_batch_size(opts.batch_size, n)?;
    let strategy = opts.strategy.validate(n)?;
    if !obj.regularizer().is_smooth() {
        return Err(Error::invalid("stochastic L-BFGS needs a smooth objective"));
    }
    let mut memory = LbfgsMemory::new(opts.memory)?;
    if !opts.scaling {
        memory = memory.without_scaling();
    }

    let s_size = opts.batch_size;
    let carried = match strategy {
        PairStrategy::Overlap { fraction } => ((fraction * s_size as f64).round() as usize).clamp(1, s_size),
        _ => 0,
    };
    let mut rec = Recorder::new(obj, control);
    let mut diag = Diagnostics::default();
    let mut sampler = BatchSampler::new(n, opts.seed, opts.sampling);
    let mut batch = sampler.batch(s_size);
    let mut fresh = Vec::new();
    let mut curvature_batch = Vec::new();
    let mut w = w0.to_vec();
    let mut step = 0.0;
    let mut k = 0usize;
    let termination = loop {
        if let Some(term) = rec.check_limits(k) {
            rec.observe(k, &w, step)?;
            break term;
        }

        let g = obj.minibatch_gradient(&w, &batch)?;
        rec.charge(batch.len());
        let d = memory.direction(&g);
        if rec.should_log(k) {
            let full = obj.objective_gradient(&w)?;
            let cos = -dot(&d, &full) / (norm(&d) * norm(&full)).max(f64::MIN_POSITIVE);
            diag.direction_cosines.push(cos);
            let f = obj.objective_value(&w)?;
            rec.record(k, f, norm(&full), step);
            if rec.target_reached(f) {
                break Termination::TargetGap;
            }
            if !f.is_finite() {
                break Termination::Stalled("objective is not finite".into());
            }
        }

        let alpha = schedule.step_size(k as u64);
        let mut w_new = w.clone();
        axpy(alpha, &d, &mut w_new);
        let s = sub(&w_new, &w);

        let next_batch = match strategy {
            PairStrategy::Overlap { .. } => {
                let mut next: Vec<usize> = batch[s_size - carried..].to_vec();
                if s_size > carried {
                    sampler.fill(s_size - carried, &mut fresh);
                    next.extend_from_slice(&fresh);
                }
                Some(next)
            }
            _ => None,
        };

        let y = match strategy {
            PairStrategy::SameBatch | PairStrategy::Damped { .. } => {
                let g_new = obj.minibatch_gradient(&w_new, &batch)?;
                rec.charge(batch.len());
                sub(&g_new, &g)
            }
            PairStrategy::Overlap { .. } => {
                let o = &batch[s_size - carried..];
                let a = obj.minibatch_gradient(&w_new, o)?;
                let b = obj.minibatch_gradient(&w, o)?;
                rec.charge(2 * o.len());
                sub(&a, &b)
            }
            PairStrategy::HessianAction { batch: sp } => {
                sampler.fill(sp, &mut curvature_batch);
                let hs = obj.hessian_vector_product(&w, &s, Samples::Batch(&curvature_batch))?;
                rec.charge_hvp(curvature_batch.len());
                hs
            }
        };
        let y = match strategy {
            PairStrategy::Damped { mu1, mu2 } if dot(&s, &s) > 0.0 => damped_displacement(&s, &y, mu1, mu2).0,
            _ => y,
        };

        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if opts.record_pairs {
                diag.pairs.push((s.clone(), y.clone()));
            }
            diag.curvature_products.push(sy);
            memory.push(CurvaturePair::new(s.clone(), y)?);
        } else {
            diag.pairs_skipped += 1;
        }

        step = norm(&s);
        w = w_new;
        batch = match next_batch {
            Some(b) => b,
            None => sampler.batch(s_size),
        };
        k += 1;
    };
    rec.finish(w, termination, diag)
}
